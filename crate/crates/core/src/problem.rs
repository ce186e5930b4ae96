//! Binds a domain to its cost oracle, codec and uniform sampler.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    decode_jobshop, decode_krk, encode_jobshop, encode_krk, enumerate_canonical_krk, jobshop_bits, repair_jobshop,
    repair_krk, BitVector, JobShopInstance, JobShopSchedule, KrkPosition, KRK_BITS,
};
use crate::error::{Error, Result};
use crate::oracles::jobshop::FeasibleSampler;
use crate::oracles::{self, jobshop_cost, Cost, KrkTablebase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Chess,
    Jobshop,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Chess => "chess",
            Domain::Jobshop => "jobshop",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chess" => Ok(Domain::Chess),
            "jobshop" | "job-shop" => Ok(Domain::Jobshop),
            _ => Err(Error::config("domain", format!("unknown domain {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Instance {
    Krk(KrkPosition),
    Jobshop(JobShopSchedule),
}

impl Instance {
    pub fn domain(&self) -> Domain {
        match self {
            Instance::Krk(_) => Domain::Chess,
            Instance::Jobshop(_) => Domain::Jobshop,
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instance::Krk(p) => p.fmt(f),
            Instance::Jobshop(s) => s.fmt(f),
        }
    }
}

/// Uniform reference sample of a job-shop instance's feasible schedules,
/// standing in for the unenumerable schedule space.
#[derive(Debug, Clone)]
pub struct ReferencePool {
    /// Sorted makespans.
    costs: Vec<u32>,
}

pub const REFERENCE_POOL_SIZE: usize = 100_000;
const REFERENCE_POOL_SEED: u64 = 0x5eed_0f_9001;

impl ReferencePool {
    pub fn build(inst: &JobShopInstance, size: usize) -> Result<Self> {
        let sampler = FeasibleSampler::new(inst);
        let mut rng = crate::rng::seeded(REFERENCE_POOL_SEED);
        let mut costs = Vec::with_capacity(size);
        for _ in 0..size {
            match jobshop_cost(inst, &sampler.sample(&mut rng))? {
                Cost::Value(v) => costs.push(v),
                other => unreachable!("sampler returned {other:?}"),
            }
        }
        costs.sort_unstable();
        Ok(ReferencePool { costs })
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }

    pub fn count_within(&self, theta: f64) -> usize {
        self.costs.partition_point(|&c| c as f64 <= theta)
    }

    pub fn fraction_within(&self, theta: f64) -> f64 {
        self.count_within(theta) as f64 / self.costs.len() as f64
    }

    /// Smallest cost whose cumulative frequency reaches `q`.
    pub fn quantile(&self, q: f64) -> u32 {
        let idx = ((q * self.costs.len() as f64).ceil() as usize).clamp(1, self.costs.len()) - 1;
        self.costs[idx]
    }

    pub fn min(&self) -> u32 {
        self.costs[0]
    }

    pub fn max(&self) -> u32 {
        self.costs[self.costs.len() - 1]
    }
}

/// Cumulative frequencies framing the job-shop threshold schedule: the
/// first threshold sits where about a quarter of uniform schedules qualify,
/// the last where a few in a thousand do.
pub const JOBSHOP_SCHEDULE_START_QUANTILE: f64 = 0.266;
pub const JOBSHOP_SCHEDULE_END_QUANTILE: f64 = 0.003;
pub const JOBSHOP_SCHEDULE_STEPS: usize = 31;

pub const CHESS_THRESHOLDS: [f64; 4] = [8.0, 4.0, 2.0, 0.0];

#[derive(Clone)]
enum Kind {
    Chess {
        tablebase: Arc<KrkTablebase>,
        space: Arc<Vec<KrkPosition>>,
    },
    Jobshop {
        instance: Arc<JobShopInstance>,
        sampler: FeasibleSampler,
        pool: Arc<ReferencePool>,
    },
}

/// Near-optimal target set used for coverage counting.
#[derive(Debug, Clone)]
pub enum OptimalSet {
    /// Exact set of optimal canonical positions.
    Positions(HashSet<KrkPosition>),
    /// Job-shop: the reference pool's count at or below the target cost.
    Pool { theta: f64, size: usize },
}

impl OptimalSet {
    pub fn size(&self) -> usize {
        match self {
            OptimalSet::Positions(s) => s.len(),
            OptimalSet::Pool { size, .. } => *size,
        }
    }
}

#[derive(Clone)]
pub struct Problem {
    kind: Kind,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem").field("domain", &self.domain()).finish()
    }
}

impl Problem {
    pub fn chess(tablebase: Arc<KrkTablebase>) -> Self {
        Problem {
            kind: Kind::Chess {
                tablebase,
                space: Arc::new(enumerate_canonical_krk()),
            },
        }
    }

    pub fn jobshop(instance: JobShopInstance) -> Result<Self> {
        Self::jobshop_with_pool(instance, REFERENCE_POOL_SIZE)
    }

    pub fn jobshop_with_pool(instance: JobShopInstance, pool_size: usize) -> Result<Self> {
        instance.validate()?;
        if pool_size == 0 {
            return Err(Error::config("pool_size", "must be at least 1"));
        }
        let pool = ReferencePool::build(&instance, pool_size)?;
        Ok(Problem {
            kind: Kind::Jobshop {
                sampler: FeasibleSampler::new(&instance),
                instance: Arc::new(instance),
                pool: Arc::new(pool),
            },
        })
    }

    pub fn domain(&self) -> Domain {
        match self.kind {
            Kind::Chess { .. } => Domain::Chess,
            Kind::Jobshop { .. } => Domain::Jobshop,
        }
    }

    pub fn tablebase(&self) -> Option<&KrkTablebase> {
        match &self.kind {
            Kind::Chess { tablebase, .. } => Some(tablebase),
            _ => None,
        }
    }

    pub fn jobshop_instance(&self) -> Option<&JobShopInstance> {
        match &self.kind {
            Kind::Jobshop { instance, .. } => Some(instance),
            _ => None,
        }
    }

    pub fn reference_pool(&self) -> Option<&ReferencePool> {
        match &self.kind {
            Kind::Jobshop { pool, .. } => Some(pool),
            _ => None,
        }
    }

    fn mismatch(&self, inst: &Instance) -> Error {
        Error::DomainMismatch {
            expected: self.domain().name(),
            got: inst.domain().name(),
        }
    }

    pub fn visible_width(&self) -> usize {
        match &self.kind {
            Kind::Chess { .. } => KRK_BITS,
            Kind::Jobshop { instance, .. } => jobshop_bits(instance.n_jobs(), instance.n_machines()),
        }
    }

    pub fn cost(&self, inst: &Instance) -> Result<Cost> {
        match (&self.kind, inst) {
            (Kind::Chess { tablebase, .. }, Instance::Krk(p)) => tablebase.cost(p),
            (Kind::Jobshop { instance, .. }, Instance::Jobshop(s)) => jobshop_cost(instance, s),
            _ => Err(self.mismatch(inst)),
        }
    }

    /// Checks every domain invariant, including schedule feasibility.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        match (&self.kind, inst) {
            (Kind::Chess { .. }, Instance::Krk(p)) => p.validate(),
            (Kind::Jobshop { instance, .. }, Instance::Jobshop(s)) => {
                s.validate_shape(instance.n_jobs(), instance.n_machines())?;
                match oracles::simulate(instance, s)? {
                    oracles::Simulation::Feasible(_) => Ok(()),
                    oracles::Simulation::Deadlock => Err(Error::Validation("machine orders deadlock".into())),
                }
            }
            _ => Err(self.mismatch(inst)),
        }
    }

    pub fn encode(&self, inst: &Instance) -> Result<BitVector> {
        match (&self.kind, inst) {
            (Kind::Chess { .. }, Instance::Krk(p)) => encode_krk(p),
            (Kind::Jobshop { .. }, Instance::Jobshop(s)) => encode_jobshop(s),
            _ => Err(self.mismatch(inst)),
        }
    }

    pub fn decode(&self, bits: &BitVector) -> Result<Instance> {
        match &self.kind {
            Kind::Chess { .. } => Ok(Instance::Krk(decode_krk(bits)?)),
            Kind::Jobshop { instance, .. } => Ok(Instance::Jobshop(decode_jobshop(
                bits,
                instance.n_jobs(),
                instance.n_machines(),
            )?)),
        }
    }

    /// Decodes a raw network sample into a legal instance (canonical KRK
    /// position or feasible schedule).
    pub fn repair(&self, bits: &BitVector, probs: &[f32]) -> Result<Instance> {
        match &self.kind {
            Kind::Chess { .. } => Ok(Instance::Krk(repair_krk(bits, probs)?)),
            Kind::Jobshop { instance, .. } => {
                let s = repair_jobshop(bits, probs, instance.n_jobs(), instance.n_machines())?;
                Ok(Instance::Jobshop(oracles::make_feasible(instance, &s)?))
            }
        }
    }

    /// i.i.d. uniform draws over the instance space: canonical KRK positions,
    /// or feasible schedule genotypes.
    pub fn sample_uniform(&self, n: usize, rng: &mut impl Rng) -> Vec<Instance> {
        match &self.kind {
            Kind::Chess { space, .. } => (0..n).map(|_| Instance::Krk(space[rng.gen_range(0..space.len())])).collect(),
            Kind::Jobshop { sampler, .. } => (0..n).map(|_| Instance::Jobshop(sampler.sample(rng))).collect(),
        }
    }

    /// Probability that a uniform instance has cost at most `theta`.
    pub fn baseline_fraction(&self, theta: f64) -> f64 {
        match &self.kind {
            Kind::Chess { tablebase, .. } => oracles::krk::baseline_fraction(tablebase, theta),
            Kind::Jobshop { pool, .. } => pool.fraction_within(theta),
        }
    }

    pub fn default_thresholds(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Chess { .. } => CHESS_THRESHOLDS.to_vec(),
            Kind::Jobshop { pool, .. } => {
                let hi = pool.quantile(JOBSHOP_SCHEDULE_START_QUANTILE) as f64;
                let lo = pool.quantile(JOBSHOP_SCHEDULE_END_QUANTILE) as f64;
                let steps = JOBSHOP_SCHEDULE_STEPS - 1;
                (0..=steps)
                    .map(|i| (hi - (hi - lo) * i as f64 / steps as f64).round())
                    .collect()
            }
        }
    }

    pub fn optimal_set(&self, theta_star: f64) -> OptimalSet {
        match &self.kind {
            Kind::Chess { tablebase, .. } => OptimalSet::Positions(
                tablebase
                    .entries()
                    .filter(|(_, c)| c.within(theta_star))
                    .map(|(p, _)| p)
                    .collect(),
            ),
            Kind::Jobshop { pool, .. } => OptimalSet::Pool {
                theta: theta_star,
                size: pool.count_within(theta_star),
            },
        }
    }
}
