//! Greedy set-covering clause learner.
//!
//! Each clause search starts from a seed positive, as in bottom-clause
//! construction: candidate literals are those true on the seed. Search is
//! best-first over literal sets, ordered by uncovered positives minus covered
//! negatives. The clause accepted for a seed is the one with the best such
//! score among those meeting `minacc` and `min_pos_cover`, ties broken by
//! precision, then body size, then catalog order.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::background::{Catalog, Cmp, Facts, GroundLiteral};
use crate::encoding::BitVector;
use crate::error::{Error, Result};
use crate::problem::{Domain, Instance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub minacc: f64,
    pub max_literals: usize,
    /// Refinements evaluated per clause search.
    pub max_nodes: usize,
    pub min_pos_cover: usize,
    pub max_clauses: usize,
    /// Consecutive seeds without an acceptable clause before giving up.
    pub max_failed_seeds: usize,
    /// Thresholded candidates per quantity and direction, tightest first;
    /// `None` keeps every threshold true on the seed.
    pub threshold_window: Option<usize>,
}

impl LearnerConfig {
    pub fn for_domain(domain: Domain) -> Self {
        match domain {
            Domain::Chess => LearnerConfig {
                minacc: 0.7,
                max_literals: 4,
                max_nodes: 5000,
                min_pos_cover: 2,
                max_clauses: 16,
                max_failed_seeds: 5,
                threshold_window: None,
            },
            Domain::Jobshop => LearnerConfig {
                minacc: 0.7,
                max_literals: 10,
                max_nodes: 10000,
                min_pos_cover: 2,
                max_clauses: 16,
                max_failed_seeds: 5,
                threshold_window: Some(3),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.minacc > 0.0 && self.minacc <= 1.0) {
            return Err(Error::config("minacc", "must lie in (0, 1]"));
        }
        for (field, v) in [
            ("max_literals", self.max_literals),
            ("max_nodes", self.max_nodes),
            ("min_pos_cover", self.min_pos_cover),
            ("max_clauses", self.max_clauses),
            ("max_failed_seeds", self.max_failed_seeds),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.threshold_window == Some(0) {
            return Err(Error::config("threshold_window", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub body: Vec<GroundLiteral>,
    pub pos_covered: usize,
    pub neg_covered: usize,
    pub precision: f64,
}

impl Clause {
    pub fn new(body: Vec<GroundLiteral>) -> Result<Self> {
        if body.is_empty() {
            return Err(Error::Validation("a clause needs at least one body literal".into()));
        }
        Ok(Clause {
            body,
            pos_covered: 0,
            neg_covered: 0,
            precision: 0.0,
        })
    }

    fn key(&self) -> Vec<GroundLiteral> {
        let mut k = self.body.clone();
        k.sort();
        k
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.body.iter().map(|l| l.to_string()).collect();
        write!(
            f,
            "good(x) :- {}.  % pos={} neg={} prec={:.3}",
            body.join(", "),
            self.pos_covered,
            self.neg_covered,
            self.precision
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub clauses: Vec<Clause>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

impl RuleSet {
    pub fn new(clauses: Vec<Clause>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &clauses {
            if c.body.is_empty() {
                return Err(Error::Validation("a clause needs at least one body literal".into()));
            }
            if !seen.insert(c.key()) {
                return Err(Error::Validation(format!("duplicate clause {c}")));
            }
        }
        Ok(RuleSet {
            clauses,
            iteration: None,
            theta: None,
        })
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn features(&self) -> Vec<Feature> {
        self.clauses.iter().cloned().map(feature_of).collect()
    }

    pub fn compile(&self, catalog: &Catalog) -> Result<CompiledRules> {
        let clauses = self
            .clauses
            .iter()
            .map(|c| c.body.iter().map(|l| catalog.lookup(l)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(CompiledRules { clauses })
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(i), Some(t)) = (self.iteration, self.theta) {
            writeln!(f, "% iteration {i}, theta {t}")?;
        }
        for (j, c) in self.clauses.iter().enumerate() {
            writeln!(f, "f{j}: {c}")?;
        }
        Ok(())
    }
}

/// The Boolean feature paired with a clause: `f(x) = 1` iff the clause body
/// holds on `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Feature(Clause);

impl Feature {
    pub fn clause(&self) -> &Clause {
        &self.0
    }

    pub fn eval(&self, catalog: &Catalog, inst: &Instance) -> Result<bool> {
        let facts = catalog.facts(inst)?;
        self.0
            .body
            .iter()
            .map(|l| Ok(catalog.eval_index(catalog.lookup(l)?, &facts)))
            .try_fold(true, |acc, b: Result<bool>| Ok(acc && b?))
    }
}

pub fn feature_of(h: Clause) -> Feature {
    Feature(h)
}

pub fn rules_of(features: Vec<Feature>) -> Result<RuleSet> {
    RuleSet::new(features.into_iter().map(|f| f.0).collect())
}

/// A rule set resolved against a catalog, for repeated evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledRules {
    clauses: Vec<Vec<usize>>,
}

impl CompiledRules {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn eval(&self, catalog: &Catalog, facts: &Facts) -> BitVector {
        BitVector::from_bits(
            self.clauses
                .iter()
                .map(|body| body.iter().all(|&l| catalog.eval_index(l, facts)) as u8),
        )
    }
}

pub fn eval_features(h: &RuleSet, catalog: &Catalog, inst: &Instance) -> Result<BitVector> {
    let facts = catalog.facts(inst)?;
    Ok(h.compile(catalog)?.eval(catalog, &facts))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn from_fn(len: usize, f: impl Fn(usize) -> bool) -> Self {
        let mut w = vec![0u64; len.div_ceil(64)];
        for i in 0..len {
            if f(i) {
                w[i / 64] |= 1 << (i % 64);
            }
        }
        Bits(w)
    }

    fn and(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }

    fn and_not(&self, o: &Bits) -> Bits {
        Bits(self.0.iter().zip(&o.0).map(|(a, b)| a & !b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn count_and(&self, o: &Bits) -> usize {
        self.0.iter().zip(&o.0).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
}

struct Node {
    body: Vec<usize>,
    pos: Bits,
    neg: Bits,
}

#[derive(PartialEq, Eq)]
struct HeapKey {
    score: i64,
    len: Reverse<usize>,
    body: Reverse<Vec<usize>>,
    idx: usize,
}

impl Ord for HeapKey {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.score, &self.len, &self.body).cmp(&(o.score, &o.len, &o.body))
    }
}

impl PartialOrd for HeapKey {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

struct Candidate {
    body: Vec<usize>,
    pos: Bits,
    p: usize,
    n: usize,
    score: i64,
}

impl Candidate {
    /// `p / (p + n)` compared exactly.
    fn precision_cmp(&self, o: &Candidate) -> Ordering {
        ((self.p * (o.p + o.n)) as u128).cmp(&((o.p * (self.p + self.n)) as u128))
    }

    fn better_than(&self, o: &Candidate) -> bool {
        self.score
            .cmp(&o.score)
            .then_with(|| self.precision_cmp(o))
            .then_with(|| o.body.len().cmp(&self.body.len()))
            .then_with(|| o.body.cmp(&self.body))
            == Ordering::Greater
    }
}

struct Search<'a> {
    catalog: &'a Catalog,
    pos: &'a [Facts],
    neg: &'a [Facts],
    cfg: &'a LearnerConfig,
    cover: HashMap<usize, (Bits, Bits)>,
}

impl Search<'_> {
    fn coverage(&mut self, lit: usize) -> &(Bits, Bits) {
        let (catalog, pos, neg) = (self.catalog, self.pos, self.neg);
        self.cover.entry(lit).or_insert_with(|| {
            (
                Bits::from_fn(pos.len(), |i| catalog.eval_index(lit, &pos[i])),
                Bits::from_fn(neg.len(), |i| catalog.eval_index(lit, &neg[i])),
            )
        })
    }

    /// Literals true on the seed that discriminate on the training data.
    fn candidates(&mut self, seed: &Facts) -> Vec<usize> {
        let catalog = self.catalog;
        let mut out = Vec::new();
        for q in 0..catalog.quantity_count() {
            let mut le: Vec<(i32, usize)> = Vec::new();
            let mut ge: Vec<(i32, usize)> = Vec::new();
            for l in catalog.literals_of_quantity(q) {
                if !catalog.eval_index(l, seed) {
                    continue;
                }
                match catalog.comparison(l) {
                    None => out.push(l),
                    Some((Cmp::Le, t)) => le.push((t, l)),
                    Some((Cmp::Ge, t)) => ge.push((-t, l)),
                }
            }
            for mut side in [le, ge] {
                side.sort();
                let keep = self.cfg.threshold_window.unwrap_or(side.len());
                out.extend(side.into_iter().take(keep).map(|(_, l)| l));
            }
        }
        out.sort_unstable();
        let (np, nn) = (self.pos.len(), self.neg.len());
        out.retain(|&l| {
            let (p, n) = self.coverage(l);
            p.count() < np || n.count() < nn
        });
        out
    }

    fn same_slot(&self, a: usize, b: usize) -> bool {
        self.catalog.quantity_of(a) == self.catalog.quantity_of(b)
            && self.catalog.comparison(a).map(|c| c.0) == self.catalog.comparison(b).map(|c| c.0)
    }

    fn best_clause(&mut self, seed: &Facts, uncovered: &Bits) -> Option<Candidate> {
        let cands = self.candidates(seed);
        let cfg = self.cfg;
        let root = Node {
            body: Vec::new(),
            pos: Bits::from_fn(self.pos.len(), |_| true),
            neg: Bits::from_fn(self.neg.len(), |_| true),
        };
        let mut arena = vec![root];
        let mut heap = BinaryHeap::new();
        heap.push(HeapKey {
            score: 0,
            len: Reverse(0),
            body: Reverse(Vec::new()),
            idx: 0,
        });
        let mut visited: HashSet<Vec<usize>> = HashSet::new();
        let mut nodes = 0usize;
        let mut best: Option<Candidate> = None;
        'search: while let Some(top) = heap.pop() {
            let (body, pos, neg) = {
                let n = &arena[top.idx];
                (n.body.clone(), n.pos.clone(), n.neg.clone())
            };
            if body.len() >= cfg.max_literals || (!body.is_empty() && neg.count() == 0) {
                continue;
            }
            for &c in &cands {
                if body.iter().any(|&b| b == c || self.same_slot(b, c)) {
                    continue;
                }
                let mut nb = body.clone();
                nb.push(c);
                nb.sort_unstable();
                if !visited.insert(nb.clone()) {
                    continue;
                }
                if nodes >= cfg.max_nodes {
                    break 'search;
                }
                nodes += 1;
                let (cp, cn) = self.coverage(c);
                let np = pos.and(cp);
                let nn = neg.and(cn);
                let pu = np.count_and(uncovered);
                if pu < cfg.min_pos_cover {
                    continue;
                }
                let (p, n) = (np.count(), nn.count());
                let score = pu as i64 - n as i64;
                if p as f64 >= cfg.minacc * (p + n) as f64 {
                    let cand = Candidate {
                        body: nb.clone(),
                        pos: np.clone(),
                        p,
                        n,
                        score,
                    };
                    if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                        best = Some(cand);
                    }
                }
                arena.push(Node {
                    body: nb.clone(),
                    pos: np,
                    neg: nn,
                });
                heap.push(HeapKey {
                    score,
                    len: Reverse(nb.len()),
                    body: Reverse(nb),
                    idx: arena.len() - 1,
                });
            }
        }
        best
    }
}

/// Learns a rule set separating `pos` from `neg`, on precomputed facts.
pub fn learn_rules_from_facts(
    pos: &[Facts],
    neg: &[Facts],
    cfg: &LearnerConfig,
    catalog: &Catalog,
    rng: &mut impl Rng,
) -> Result<RuleSet> {
    cfg.validate()?;
    if catalog.is_empty() {
        return Err(Error::Validation("empty predicate catalog".into()));
    }
    let mut rules = RuleSet::default();
    if pos.is_empty() {
        return Ok(rules);
    }
    let mut search = Search {
        catalog,
        pos,
        neg,
        cfg,
        cover: HashMap::new(),
    };
    let mut uncovered = Bits::from_fn(pos.len(), |_| true);
    let mut failed = Bits::from_fn(pos.len(), |_| false);
    let mut consecutive_failures = 0;
    while rules.clauses.len() < cfg.max_clauses && consecutive_failures < cfg.max_failed_seeds {
        let open: Vec<usize> = (0..pos.len()).filter(|&i| uncovered.get(i) && !failed.get(i)).collect();
        if open.is_empty() {
            break;
        }
        let seed = open[rng.gen_range(0..open.len())];
        match search.best_clause(&pos[seed], &uncovered) {
            Some(c) => {
                uncovered = uncovered.and_not(&c.pos);
                rules.clauses.push(Clause {
                    body: c.body.iter().map(|&l| catalog.literals()[l].clone()).collect(),
                    pos_covered: c.p,
                    neg_covered: c.n,
                    precision: c.p as f64 / (c.p + c.n) as f64,
                });
                consecutive_failures = 0;
            }
            None => {
                failed.set(seed);
                consecutive_failures += 1;
            }
        }
    }
    debug_assert!(rules.clauses.iter().all(|c| c.precision >= cfg.minacc));
    Ok(rules)
}

pub fn learn_rules(
    pos: &[Instance],
    neg: &[Instance],
    cfg: &LearnerConfig,
    catalog: &Catalog,
    rng: &mut impl Rng,
) -> Result<RuleSet> {
    let pos_set: HashSet<&Instance> = pos.iter().collect();
    if let Some(x) = neg.iter().find(|x| pos_set.contains(x)) {
        return Err(Error::Validation(format!("instance {x} is labelled both good and not good")));
    }
    let pf = pos.iter().map(|x| catalog.facts(x)).collect::<Result<Vec<_>>>()?;
    let nf = neg.iter().map(|x| catalog.facts(x)).collect::<Result<Vec<_>>>()?;
    learn_rules_from_facts(&pf, &nf, cfg, catalog, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{enumerate_canonical_krk, JobShopInstance};
    use crate::problem::Problem;
    use std::sync::Arc;

    fn lit(pred: &str, args: &[&str], cmp: Option<Cmp>, t: Option<i32>) -> GroundLiteral {
        GroundLiteral {
            predicate: pred.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
            cmp,
            threshold: t,
        }
    }

    /// Conjunction evaluated literal by literal through the public evaluator.
    fn brute(body: &[GroundLiteral], x: &Instance, ctx: Option<&JobShopInstance>) -> bool {
        body.iter().all(|l| crate::background::eval_literal(l, x, ctx).unwrap())
    }

    #[test]
    fn recovers_a_noise_free_conjunction() {
        let catalog = Catalog::chess();
        let target = [
            lit("kings_in_opposition", &[], None, None),
            lit("king_distance", &["wk", "wr"], Some(Cmp::Le), Some(2)),
        ];
        let mut rng = crate::rng::seeded(5);
        let space = enumerate_canonical_krk();
        let sample: Vec<Instance> = (0..3000).map(|_| Instance::Krk(space[rng.gen_range(0..space.len())])).collect();
        let mut uniq: Vec<Instance> = sample.into_iter().collect::<HashSet<_>>().into_iter().collect();
        uniq.sort();
        // enrich positives so there are enough to learn from
        let mut pos: Vec<Instance> = space
            .iter()
            .map(|p| Instance::Krk(*p))
            .filter(|x| brute(&target, x, None))
            .collect();
        pos.truncate(200);
        let neg: Vec<Instance> = uniq.into_iter().filter(|x| !brute(&target, x, None)).collect();
        let cfg = LearnerConfig::for_domain(Domain::Chess);
        let rules = learn_rules(&pos, &neg, &cfg, &catalog, &mut crate::rng::seeded(1)).unwrap();
        assert!(!rules.is_empty());
        let covered = pos.iter().filter(|x| rules.clauses.iter().any(|c| brute(&c.body, x, None))).count();
        assert_eq!(covered, pos.len());
        for c in &rules.clauses {
            let n = neg.iter().filter(|x| brute(&c.body, x, None)).count();
            assert_eq!(n, 0, "{c}");
            assert_eq!(c.precision, 1.0);
        }
    }

    #[test]
    fn empty_positives_give_empty_rules() {
        let catalog = Catalog::chess();
        let neg = vec![Instance::Krk(crate::encoding::KrkPosition::new(0, 0, 5, 5, 2, 2))];
        let cfg = LearnerConfig::for_domain(Domain::Chess);
        let r = learn_rules(&[], &neg, &cfg, &catalog, &mut crate::rng::seeded(0)).unwrap();
        assert!(r.is_empty());
    }

    fn chess_labelled(n: usize, seed: u64) -> (Vec<Instance>, Vec<Instance>) {
        let tb = crate::oracles::KrkTablebase::build();
        let p = Problem::chess(Arc::new(tb));
        let mut rng = crate::rng::seeded(seed);
        let mut pop = p.sample_uniform(n, &mut rng);
        pop.sort();
        pop.dedup();
        pop.into_iter().partition(|x| p.cost(x).unwrap().within(8.0))
    }

    #[test]
    fn accepted_clauses_meet_minacc_and_budgets() {
        let catalog = Catalog::chess();
        let (pos, neg) = chess_labelled(1500, 3);
        let cfg = LearnerConfig::for_domain(Domain::Chess);
        let rules = learn_rules(&pos, &neg, &cfg, &catalog, &mut crate::rng::seeded(2)).unwrap();
        assert!(!rules.is_empty());
        for c in &rules.clauses {
            assert!(!c.body.is_empty() && c.body.len() <= cfg.max_literals);
            let p = pos.iter().filter(|x| brute(&c.body, x, None)).count();
            let n = neg.iter().filter(|x| brute(&c.body, x, None)).count();
            assert_eq!((p, n), (c.pos_covered, c.neg_covered));
            assert!(p as f64 / (p + n) as f64 >= 0.7, "{c}");
        }
        let again = learn_rules(&pos, &neg, &cfg, &catalog, &mut crate::rng::seeded(2)).unwrap();
        assert_eq!(rules, again);
    }

    #[test]
    fn features_agree_with_literal_conjunctions() {
        let inst = JobShopInstance::benchmark();
        let p = Problem::jobshop_with_pool(inst.clone(), 2000).unwrap();
        let catalog = Catalog::for_problem(&p);
        let mut rng = crate::rng::seeded(8);
        let mut pop = p.sample_uniform(600, &mut rng);
        pop.sort();
        pop.dedup();
        let theta = p.reference_pool().unwrap().quantile(0.3) as f64;
        let (pos, neg): (Vec<_>, Vec<_>) = pop.iter().cloned().partition(|x| p.cost(x).unwrap().within(theta));
        let mut cfg = LearnerConfig::for_domain(Domain::Jobshop);
        cfg.max_nodes = 2000;
        let rules = learn_rules(&pos, &neg, &cfg, &catalog, &mut rng).unwrap();
        assert!(!rules.is_empty());
        for c in &rules.clauses {
            assert!(c.precision >= 0.7 && c.body.len() <= 10);
        }
        let features = rules.features();
        assert_eq!(rules_of(features.clone()).unwrap().clauses, rules.clauses);
        for x in p.sample_uniform(1000, &mut rng) {
            let v = eval_features(&rules, &catalog, &x).unwrap();
            for (j, f) in features.iter().enumerate() {
                let expected = brute(&f.clause().body, &x, Some(&inst));
                assert_eq!(v.get(j), expected);
                assert_eq!(f.eval(&catalog, &x).unwrap(), expected);
            }
        }
    }

    #[test]
    fn feature_pairing_is_bijective() {
        let a = Clause::new(vec![lit("kings_in_opposition", &[], None, None)]).unwrap();
        let b = Clause::new(vec![lit("l_shape", &["wr", "bk"], None, None)]).unwrap();
        assert_ne!(feature_of(a.clone()), feature_of(b.clone()));
        assert_eq!(feature_of(a.clone()).clause(), &a);
        assert!(rules_of(vec![feature_of(a.clone()), feature_of(a)]).is_err());
        assert!(Clause::new(vec![]).is_err());
    }

    #[test]
    fn eval_features_edge_cases() {
        let catalog = Catalog::chess();
        let x = Instance::Krk(crate::encoding::KrkPosition::new(4, 0, 0, 7, 4, 2));
        assert!(eval_features(&RuleSet::default(), &catalog, &x).unwrap().is_empty());
        let rs = RuleSet::new(vec![
            Clause::new(vec![lit("kings_in_opposition", &[], None, None)]).unwrap(),
            Clause::new(vec![lit("same_file", &["wk", "bk"], None, None)]).unwrap(),
        ])
        .unwrap();
        assert_eq!(eval_features(&rs, &catalog, &x).unwrap().count_ones(), 2);
        let s = Instance::Jobshop(crate::encoding::JobShopSchedule::identity(5, 5));
        assert!(matches!(eval_features(&rs, &catalog, &s), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn overlapping_labels_are_rejected() {
        let catalog = Catalog::chess();
        let x = Instance::Krk(crate::encoding::KrkPosition::new(0, 0, 5, 5, 2, 2));
        let cfg = LearnerConfig::for_domain(Domain::Chess);
        assert!(learn_rules(&[x.clone()], &[x], &cfg, &catalog, &mut crate::rng::seeded(0)).is_err());
    }
}
