//! Sampling from the success set of the background knowledge plus rules.
//!
//! For non-recursive single-instance clauses, entailment reduces to "some
//! clause body holds". The clamp size `k*` is chosen by a pilot: for each
//! `k` in `0..=|H|`, a random subset of `k` feature units is clamped to 1
//! (with the separator), and the aligned fraction of the decoded pilot
//! samples is measured.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::background::Catalog;
use crate::dbn::{dbn_sample, DbnModel, TrainConfig};
use crate::error::{Error, Result};
use crate::problem::{Instance, Problem};
use crate::rng::child;
use crate::rule_learner::{CompiledRules, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignConfig {
    pub mode: AlignMode,
    pub pilot_size: usize,
    /// Strict mode gives up after `retry_factor * M` raw draws.
    pub retry_factor: usize,
    /// Draws per fresh clamp subset.
    pub batch_size: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            mode: AlignMode::Strict,
            pilot_size: 50,
            retry_factor: 20,
            batch_size: 50,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("pilot_size", self.pilot_size),
            ("retry_factor", self.retry_factor),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Aligned fraction of the pilot at each `k`, indexed by `k`.
    pub pilot_fractions: Vec<f64>,
    pub k_star: usize,
    pub aligned_fraction: f64,
    pub raw_draws: usize,
    pub rejections: usize,
    pub mode: AlignMode,
}

/// Rules resolved against a catalog, with the problem they decode into.
pub struct Aligner<'a> {
    pub problem: &'a Problem,
    pub catalog: &'a Catalog,
    pub rules: &'a RuleSet,
    compiled: CompiledRules,
}

impl<'a> Aligner<'a> {
    pub fn new(problem: &'a Problem, catalog: &'a Catalog, rules: &'a RuleSet) -> Result<Self> {
        if catalog.domain() != problem.domain() {
            return Err(Error::DomainMismatch {
                expected: problem.domain().name(),
                got: catalog.domain().name(),
            });
        }
        Ok(Aligner {
            problem,
            catalog,
            rules,
            compiled: rules.compile(catalog)?,
        })
    }

    pub fn is_aligned(&self, inst: &Instance) -> Result<bool> {
        if self.compiled.is_empty() {
            return Ok(false);
        }
        let facts = self.catalog.facts(inst)?;
        Ok(self.compiled.eval(self.catalog, &facts).count_ones() > 0)
    }

    fn clamps(&self, m: &DbnModel, k: usize, rng: &mut impl Rng) -> Vec<(usize, bool)> {
        let mut c: Vec<(usize, bool)> = sample_indices(rng, self.rules.len(), k)
            .into_iter()
            .map(|f| (m.feature_index(f), true))
            .collect();
        c.sort_unstable();
        c.push((m.separator_index(), true));
        c
    }

    fn draw(&self, m: &DbnModel, clamps: &[(usize, bool)], n: usize, cfg: &TrainConfig, rng: &mut impl Rng) -> Result<Vec<Instance>> {
        dbn_sample(m, clamps, n, cfg, rng)?
            .iter()
            .map(|s| self.problem.repair(&s.bits, &s.probs))
            .collect()
    }

    fn check_model(&self, m: &DbnModel) -> Result<()> {
        if m.ilp_feature_count < self.rules.len() {
            return Err(Error::Dimension(format!(
                "model has {} feature units for {} rules",
                m.ilp_feature_count,
                self.rules.len()
            )));
        }
        if m.visible_width() != self.problem.visible_width() {
            return Err(Error::Dimension("model does not match the problem encoding".into()));
        }
        Ok(())
    }

    /// Pilot over every `k` in `0..=|H|`; `k*` is the first maximiser.
    pub fn select_clamp_size(
        &self,
        m: &DbnModel,
        pilot_size: usize,
        cfg: &TrainConfig,
        rng: &mut impl Rng,
    ) -> Result<(usize, AlignmentReport)> {
        if pilot_size == 0 {
            return Err(Error::config("pilot_size", "must be at least 1"));
        }
        if self.rules.is_empty() {
            return Err(Error::Validation("clamp-size selection needs at least one rule".into()));
        }
        self.check_model(m)?;
        let base: u64 = rng.gen();
        let mut fractions = Vec::with_capacity(self.rules.len() + 1);
        for k in 0..=self.rules.len() {
            let mut r = child(base, k as u64);
            let clamps = self.clamps(m, k, &mut r);
            let pilot = self.draw(m, &clamps, pilot_size, cfg, &mut r)?;
            let mut hits = 0;
            for x in &pilot {
                hits += self.is_aligned(x)? as usize;
            }
            fractions.push(hits as f64 / pilot_size as f64);
        }
        let k_star = fractions
            .iter()
            .enumerate()
            .fold(0, |best, (k, &f)| if f > fractions[best] { k } else { best });
        let report = AlignmentReport {
            aligned_fraction: fractions[k_star],
            pilot_fractions: fractions,
            k_star,
            raw_draws: 0,
            rejections: 0,
            mode: AlignMode::Strict,
        };
        Ok((k_star, report))
    }

    /// Draws `count` instances with `k*` features and the separator clamped
    /// to 1, a fresh feature subset per batch. Strict mode keeps only aligned
    /// instances; lenient mode keeps everything.
    pub fn sample_aligned(
        &self,
        m: &DbnModel,
        count: usize,
        align: &AlignConfig,
        cfg: &TrainConfig,
        rng: &mut impl Rng,
    ) -> Result<(Vec<Instance>, AlignmentReport)> {
        align.validate()?;
        if count == 0 {
            return Err(Error::config("samples_per_iteration", "must be at least 1"));
        }
        self.check_model(m)?;
        if self.rules.is_empty() {
            let out = self.draw(m, &[(m.separator_index(), true)], count, cfg, rng)?;
            let report = AlignmentReport {
                pilot_fractions: vec![0.0],
                k_star: 0,
                aligned_fraction: 0.0,
                raw_draws: count,
                rejections: 0,
                mode: align.mode,
            };
            return Ok((out, report));
        }
        let (k_star, mut report) = self.select_clamp_size(m, align.pilot_size, cfg, rng)?;
        report.mode = align.mode;
        let budget = align.retry_factor * count;
        let mut out = Vec::with_capacity(count);
        let (mut draws, mut aligned) = (0usize, 0usize);
        while out.len() < count && (align.mode == AlignMode::Lenient || draws < budget) {
            let clamps = self.clamps(m, k_star, rng);
            let n = match align.mode {
                AlignMode::Lenient => align.batch_size.min(count - out.len()),
                AlignMode::Strict => align.batch_size.min(budget - draws),
            };
            for x in self.draw(m, &clamps, n, cfg, rng)? {
                draws += 1;
                let ok = self.is_aligned(&x)?;
                aligned += ok as usize;
                if (ok || align.mode == AlignMode::Lenient) && out.len() < count {
                    out.push(x);
                }
            }
        }
        report.raw_draws = draws;
        report.rejections = draws - aligned;
        report.aligned_fraction = aligned as f64 / draws as f64;
        if out.is_empty() {
            return Err(Error::AlignmentExhausted { draws });
        }
        Ok((out, report))
    }
}

pub fn is_aligned(inst: &Instance, rules: &RuleSet, catalog: &Catalog) -> Result<bool> {
    if rules.is_empty() {
        return Ok(false);
    }
    let facts = catalog.facts(inst)?;
    Ok(rules.compile(catalog)?.eval(catalog, &facts).count_ones() > 0)
}
