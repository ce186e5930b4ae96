//! The outer optimisation loop: label, learn rules, train, regenerate.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alignment::{AlignConfig, Aligner, AlignmentReport};
use crate::background::{Catalog, Facts};
use crate::dbn::{dbn_sample, dbn_train, dbn_warm_start, DbnModel, TrainConfig, TrainExample};
use crate::encoding::BitVector;
use crate::error::{Error, Result};
use crate::oracles::{makespan_lower_bound, Cost};
use crate::problem::{Domain, Instance, OptimalSet, Problem};
use crate::rng::child;
use crate::rule_learner::{learn_rules_from_facts, LearnerConfig, RuleSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EodsConfig {
    pub domain: Domain,
    /// `None` uses the problem's default schedule.
    #[serde(default)]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default = "default_size")]
    pub population_size: usize,
    #[serde(default = "default_size")]
    pub samples_per_iteration: usize,
    #[serde(default = "default_true")]
    pub use_ilp: bool,
    /// `None` uses the domain defaults.
    #[serde(default)]
    pub learner: Option<LearnerConfig>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub align: AlignConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub cumulative_data: bool,
    /// Keep only the most recent instances of the cumulative data.
    #[serde(default)]
    pub max_training_set: Option<usize>,
    /// Hidden layer sizes above the encoding; `None` uses domain defaults.
    #[serde(default)]
    pub hidden_sizes: Option<Vec<usize>>,
}

fn default_size() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

impl EodsConfig {
    pub fn new(domain: Domain) -> Self {
        EodsConfig {
            domain,
            thresholds: None,
            population_size: default_size(),
            samples_per_iteration: default_size(),
            use_ilp: true,
            learner: None,
            train: TrainConfig::default(),
            align: AlignConfig::default(),
            seed: 0,
            cumulative_data: true,
            max_training_set: None,
            hidden_sizes: None,
        }
    }

    pub fn learner_config(&self) -> LearnerConfig {
        self.learner.clone().unwrap_or_else(|| LearnerConfig::for_domain(self.domain))
    }

    pub fn hidden(&self) -> Vec<usize> {
        self.hidden_sizes.clone().unwrap_or_else(|| match self.domain {
            Domain::Chess => vec![32, 32],
            Domain::Jobshop => vec![128, 96],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(t) = &self.thresholds {
            if t.is_empty() {
                return Err(Error::config("thresholds", "must not be empty"));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("thresholds", "must be finite"));
            }
            if t.windows(2).any(|w| w[1] > w[0]) {
                return Err(Error::config("thresholds", "must be non-increasing"));
            }
        }
        if self.population_size == 0 {
            return Err(Error::config("population_size", "must be at least 1"));
        }
        if self.samples_per_iteration == 0 {
            return Err(Error::config("samples_per_iteration", "must be at least 1"));
        }
        if self.max_training_set == Some(0) {
            return Err(Error::config("max_training_set", "must be at least 1"));
        }
        if self.hidden().is_empty() || self.hidden().contains(&0) {
            return Err(Error::config("hidden_sizes", "need at least one positive size"));
        }
        self.learner_config().validate()?;
        self.train.validate()?;
        self.align.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: f64,
    pub training_size: usize,
    pub positives: usize,
    pub negatives: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RuleSet>,
    pub population: usize,
    pub prec_model: f64,
    pub prec_baseline: f64,
    /// `None` when the baseline is zero.
    pub gain: Option<f64>,
    pub coverage_a: usize,
    pub coverage_b: usize,
    /// Distinct generated instances within `theta*`, before capping at `b`.
    pub coverage_raw: usize,
    /// Mean over instances with a numeric cost (draws excluded).
    pub mean_cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<AlignmentReport>,
    pub alignment_fallback: bool,
    pub wall_clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EodsTrace {
    pub domain: Domain,
    pub use_ilp: bool,
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub theta_star: f64,
    pub config: EodsConfig,
    pub iterations: Vec<IterationRecord>,
    /// Feasible schedules evaluated with makespan below the lower bound.
    pub lower_bound_violations: usize,
    pub schedules_evaluated: usize,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

impl EodsTrace {
    pub const CSV_HEADER: &'static str =
        "iteration,theta,prec_model,prec_baseline,gain,coverage_a,coverage_b,aligned_fraction";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.iterations {
            let row = [
                r.iteration.to_string(),
                fmt_f(r.theta),
                fmt_f(r.prec_model),
                fmt_f(r.prec_baseline),
                r.gain.map_or_else(|| "undefined".into(), fmt_f),
                r.coverage_a.to_string(),
                r.coverage_b.to_string(),
                r.alignment.as_ref().map_or_else(String::new, |a| fmt_f(a.aligned_fraction)),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn final_coverage(&self) -> usize {
        self.iterations.last().map_or(0, |r| r.coverage_a)
    }
}

/// Partitions `pop` at `theta`; draws and infeasible schedules are never
/// positive.
pub fn label_population(pop: &[Instance], theta: f64, problem: &Problem) -> Result<(Vec<Instance>, Vec<Instance>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for x in pop {
        match problem.cost(x)?.within(theta) {
            true => pos.push(x.clone()),
            false => neg.push(x.clone()),
        }
    }
    Ok((pos, neg))
}

pub fn precision_estimate(pop: &[Instance], theta: f64, problem: &Problem) -> Result<f64> {
    if pop.is_empty() {
        return Err(Error::Empty("population"));
    }
    let mut hits = 0;
    for x in pop {
        hits += problem.cost(x)?.within(theta) as usize;
    }
    Ok(hits as f64 / pop.len() as f64)
}

pub fn gain_ratio(model_prec: f64, baseline_prec: f64) -> Option<f64> {
    (baseline_prec > 0.0).then(|| model_prec / baseline_prec)
}

/// `(a, b, raw)`: distinct generated instances in the optimal set, its size,
/// and for a pool-defined set the uncapped count of generated instances
/// within its threshold.
pub fn near_optimal_coverage(
    generated: &HashSet<Instance>,
    optimal: &OptimalSet,
    problem: &Problem,
) -> Result<(usize, usize, usize)> {
    let b = optimal.size();
    if b == 0 {
        return Err(Error::Empty("optimal set"));
    }
    match optimal {
        OptimalSet::Positions(set) => {
            let a = generated
                .iter()
                .filter(|x| matches!(x, Instance::Krk(p) if set.contains(p)))
                .count();
            Ok((a, b, a))
        }
        OptimalSet::Pool { theta, .. } => {
            let mut raw = 0;
            for x in generated {
                raw += problem.cost(x)?.within(*theta) as usize;
            }
            Ok((raw.min(b), b, raw))
        }
    }
}

struct Datum {
    inst: Instance,
    cost: Cost,
    facts: Option<Facts>,
}

struct Evaluator<'a> {
    problem: &'a Problem,
    lower_bound: Option<u32>,
    violations: usize,
    evaluated: usize,
}

impl Evaluator<'_> {
    fn cost(&mut self, x: &Instance) -> Result<Cost> {
        let c = self.problem.cost(x)?;
        if let (Some(lb), Cost::Value(v)) = (self.lower_bound, c) {
            self.evaluated += 1;
            self.violations += (v < lb) as usize;
        }
        Ok(c)
    }
}

/// Runs the loop over every threshold. Returns the trace and final model.
pub fn run_eods(cfg: &EodsConfig, problem: &Problem) -> Result<(EodsTrace, DbnModel)> {
    cfg.validate()?;
    if cfg.domain != problem.domain() {
        return Err(Error::DomainMismatch {
            expected: cfg.domain.name(),
            got: problem.domain().name(),
        });
    }
    let thresholds = cfg.thresholds.clone().unwrap_or_else(|| problem.default_thresholds());
    let theta_star = *thresholds.last().expect("validated non-empty");
    let optimal = problem.optimal_set(theta_star);
    let catalog = Catalog::for_problem(problem);
    let learner = cfg.learner_config();
    let mut sizes = vec![problem.visible_width()];
    sizes.extend(cfg.hidden());
    let mut eval = Evaluator {
        problem,
        lower_bound: problem.jobshop_instance().map(makespan_lower_bound),
        violations: 0,
        evaluated: 0,
    };

    let mut rng = child(cfg.seed, 0);
    let mut population = problem.sample_uniform(cfg.population_size, &mut rng);
    let mut data: Vec<Datum> = Vec::new();
    let mut generated: HashSet<Instance> = HashSet::new();
    let mut model: Option<DbnModel> = None;
    let mut records = Vec::with_capacity(thresholds.len());

    for (k, &theta) in thresholds.iter().enumerate() {
        let started = Instant::now();
        let mut rng = child(cfg.seed, k as u64 + 1);
        if !cfg.cumulative_data {
            data.clear();
        }
        for x in population.drain(..) {
            let cost = eval.cost(&x)?;
            data.push(Datum { inst: x, cost, facts: None });
        }
        if let Some(cap) = cfg.max_training_set {
            if data.len() > cap {
                data.drain(..data.len() - cap);
            }
        }
        let labels: Vec<bool> = data.iter().map(|d| d.cost.within(theta)).collect();
        let positives = labels.iter().filter(|&&l| l).count();

        let rules = if cfg.use_ilp {
            for d in data.iter_mut().filter(|d| d.facts.is_none()) {
                d.facts = Some(catalog.facts(&d.inst)?);
            }
            let (mut pf, mut nf) = (Vec::new(), Vec::new());
            for (d, &l) in data.iter().zip(&labels) {
                let f = d.facts.clone().expect("computed above");
                if l {
                    pf.push(f)
                } else {
                    nf.push(f)
                }
            }
            let mut r = learn_rules_from_facts(&pf, &nf, &learner, &catalog, &mut rng)?;
            r.iteration = Some(k + 1);
            r.theta = Some(theta);
            r
        } else {
            RuleSet::default()
        };
        let compiled = rules.compile(&catalog)?;
        let width = model.as_ref().map_or(0, |m| m.ilp_feature_count).max(rules.len());
        let examples: Vec<TrainExample> = data
            .iter()
            .zip(&labels)
            .map(|(d, &label)| {
                let mut ilp = BitVector::zeros(width);
                if let Some(f) = &d.facts {
                    for (j, b) in compiled.eval(&catalog, f).as_slice().iter().enumerate() {
                        ilp.set(j, *b == 1);
                    }
                }
                Ok(TrainExample {
                    visible: problem.encode(&d.inst)?,
                    ilp,
                    label,
                })
            })
            .collect::<Result<_>>()?;
        let base = match model.take() {
            Some(prev) => dbn_warm_start(&prev, width, cfg.train.weight_init_scale, &mut rng)?,
            None => DbnModel::new(&sizes, width, cfg.train.weight_init_scale, &mut rng)?,
        };
        let m = dbn_train(&base, &examples, &cfg.train, &mut rng)?;

        let mut alignment = None;
        let mut fallback = false;
        let sep = [(m.separator_index(), true)];
        if cfg.use_ilp && !rules.is_empty() {
            let aligner = Aligner::new(problem, &catalog, &rules)?;
            match aligner.sample_aligned(&m, cfg.samples_per_iteration, &cfg.align, &cfg.train, &mut rng) {
                Ok((xs, report)) => {
                    population = xs;
                    alignment = Some(report);
                }
                Err(Error::AlignmentExhausted { .. }) => fallback = true,
                Err(e) => return Err(e),
            }
        }
        if population.is_empty() {
            population = dbn_sample(&m, &sep, cfg.samples_per_iteration, &cfg.train, &mut rng)?
                .iter()
                .map(|s| problem.repair(&s.bits, &s.probs))
                .collect::<Result<_>>()?;
        }

        let (mut hits, mut total_cost, mut costed) = (0, 0.0, 0);
        for x in &population {
            let c = eval.cost(x)?;
            hits += c.within(theta) as usize;
            if let Some(v) = c.numeric() {
                total_cost += v;
                costed += 1;
            }
        }
        generated.extend(population.iter().cloned());
        let prec_model = hits as f64 / population.len() as f64;
        let prec_baseline = problem.baseline_fraction(theta);
        let (coverage_a, coverage_b, coverage_raw) = near_optimal_coverage(&generated, &optimal, problem)?;
        records.push(IterationRecord {
            iteration: k + 1,
            theta,
            training_size: data.len(),
            positives,
            negatives: data.len() - positives,
            rules: cfg.use_ilp.then_some(rules),
            population: population.len(),
            prec_model,
            prec_baseline,
            gain: gain_ratio(prec_model, prec_baseline),
            coverage_a,
            coverage_b,
            coverage_raw,
            mean_cost: if costed > 0 { total_cost / costed as f64 } else { 0.0 },
            alignment,
            alignment_fallback: fallback,
            wall_clock_ms: started.elapsed().as_millis() as u64,
        });
        model = Some(m);
    }
    let trace = EodsTrace {
        domain: cfg.domain,
        use_ilp: cfg.use_ilp,
        seed: cfg.seed,
        thresholds,
        theta_star,
        config: cfg.clone(),
        iterations: records,
        lower_bound_violations: eval.violations,
        schedules_evaluated: eval.evaluated,
    };
    Ok((trace, model.expect("at least one iteration")))
}
