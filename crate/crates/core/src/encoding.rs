//! Domain instances, legality, canonical forms and the bit-vector codecs
//! consumed by the belief network.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the KRK encoding: six one-hot groups of eight bits.
pub const KRK_BITS: usize = 48;
pub const KRK_GROUP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector(vec![0; len])
    }

    /// Builds a vector from 0/1 values; any non-zero byte is read as 1.
    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        BitVector(bits.into_iter().map(|b| (b != 0) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i] != 0
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b != 0).count()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b != 0 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A KRK position with Black to move. Files and ranks are 0..=7
/// (0 = file a / rank 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KrkPosition {
    pub wk_file: u8,
    pub wk_rank: u8,
    pub wr_file: u8,
    pub wr_rank: u8,
    pub bk_file: u8,
    pub bk_rank: u8,
}

#[inline]
fn chebyshev(af: u8, ar: u8, bf: u8, br: u8) -> u8 {
    af.abs_diff(bf).max(ar.abs_diff(br))
}

impl KrkPosition {
    pub fn new(wk_file: u8, wk_rank: u8, wr_file: u8, wr_rank: u8, bk_file: u8, bk_rank: u8) -> Self {
        KrkPosition {
            wk_file,
            wk_rank,
            wr_file,
            wr_rank,
            bk_file,
            bk_rank,
        }
    }

    pub fn from_tuple(t: [u8; 6]) -> Self {
        KrkPosition::new(t[0], t[1], t[2], t[3], t[4], t[5])
    }

    pub fn to_tuple(self) -> [u8; 6] {
        [self.wk_file, self.wk_rank, self.wr_file, self.wr_rank, self.bk_file, self.bk_rank]
    }

    /// Square indices (file * 8 + rank) of WK, WR and BK.
    pub fn squares(self) -> (u8, u8, u8) {
        (
            self.wk_file * 8 + self.wk_rank,
            self.wr_file * 8 + self.wr_rank,
            self.bk_file * 8 + self.bk_rank,
        )
    }

    pub fn from_squares(wk: u8, wr: u8, bk: u8) -> Self {
        KrkPosition::new(wk / 8, wk % 8, wr / 8, wr % 8, bk / 8, bk % 8)
    }

    /// 18-bit code `wkf wkr wrf wrr bkf bkr`, three bits each, most significant first.
    pub fn code(self) -> u32 {
        self.to_tuple().iter().fold(0u32, |acc, &v| (acc << 3) | v as u32)
    }

    pub fn from_code(code: u32) -> Result<Self> {
        if code >= 1 << 18 {
            return Err(Error::Decode(format!("position code {code} out of range")));
        }
        let mut t = [0u8; 6];
        for (i, slot) in t.iter_mut().enumerate() {
            *slot = ((code >> (3 * (5 - i))) & 7) as u8;
        }
        Ok(KrkPosition::from_tuple(t))
    }

    pub fn validate(self) -> Result<()> {
        if self.to_tuple().iter().any(|&v| v > 7) {
            return Err(Error::Validation("coordinate outside 0..7".into()));
        }
        let (wk, wr, bk) = self.squares();
        if wk == wr || wk == bk || wr == bk {
            return Err(Error::Validation("pieces must occupy distinct squares".into()));
        }
        if chebyshev(self.wk_file, self.wk_rank, self.bk_file, self.bk_rank) < 2 {
            return Err(Error::Validation("kings must not be adjacent".into()));
        }
        Ok(())
    }

    pub fn is_legal(self) -> bool {
        self.validate().is_ok()
    }

    /// Applies board symmetry `s` (0..8) to every piece.
    pub fn transform(self, s: u8) -> Self {
        let t = |f: u8, r: u8| symmetry(s, f, r);
        let (a, b) = t(self.wk_file, self.wk_rank);
        let (c, d) = t(self.wr_file, self.wr_rank);
        let (e, g) = t(self.bk_file, self.bk_rank);
        KrkPosition::new(a, b, c, d, e, g)
    }

    pub fn wk_in_triangle(self) -> bool {
        self.wk_file <= 3 && self.wk_rank <= self.wk_file
    }
}

/// The eight symmetries of the square board.
fn symmetry(s: u8, f: u8, r: u8) -> (u8, u8) {
    let (f, r) = if s & 4 != 0 { (r, f) } else { (f, r) };
    let f = if s & 1 != 0 { 7 - f } else { f };
    let r = if s & 2 != 0 { 7 - r } else { r };
    (f, r)
}

impl fmt::Display for KrkPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.to_tuple();
        write!(f, "{} {} {} {} {} {}", t[0], t[1], t[2], t[3], t[4], t[5])
    }
}

impl FromStr for KrkPosition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let vals: Vec<u8> = s
            .split_whitespace()
            .map(|t| t.parse::<u8>().map_err(|e| Error::Decode(format!("bad coordinate {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let t: [u8; 6] = vals
            .try_into()
            .map_err(|_| Error::Decode("expected six integers".into()))?;
        let p = KrkPosition::from_tuple(t);
        p.validate()?;
        Ok(p)
    }
}

pub fn encode_krk(pos: &KrkPosition) -> Result<BitVector> {
    pos.validate()?;
    let mut v = BitVector::zeros(KRK_BITS);
    for (g, val) in pos.to_tuple().iter().enumerate() {
        v.set(KRK_GROUP * g + *val as usize, true);
    }
    Ok(v)
}

fn one_hot(group: &[u8]) -> Option<usize> {
    let mut found = None;
    for (i, &b) in group.iter().enumerate() {
        if b != 0 {
            if found.is_some() {
                return None;
            }
            found = Some(i);
        }
    }
    found
}

fn argmax(probs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn decode_krk(v: &BitVector) -> Result<KrkPosition> {
    if v.len() != KRK_BITS {
        return Err(Error::Decode(format!("expected {KRK_BITS} bits, got {}", v.len())));
    }
    let mut t = [0u8; 6];
    for (g, slot) in t.iter_mut().enumerate() {
        let group = &v.as_slice()[KRK_GROUP * g..KRK_GROUP * (g + 1)];
        *slot = one_hot(group).ok_or_else(|| Error::Decode(format!("group {g} is not one-hot")))? as u8;
    }
    let p = KrkPosition::from_tuple(t);
    p.validate()?;
    Ok(p)
}

/// Maps a legal position to its representative with the white king in the
/// a1-d1-d4 triangle, taking the lexicographically smallest tuple when two
/// symmetries qualify (white king on the a1-h8 diagonal).
pub fn canonicalize_krk(pos: &KrkPosition) -> Result<KrkPosition> {
    pos.validate()?;
    Ok((0..8)
        .map(|s| pos.transform(s))
        .filter(|p| p.wk_in_triangle())
        .min_by_key(|p| p.to_tuple())
        .expect("some symmetry maps any square into the triangle"))
}

pub fn is_canonical_krk(pos: &KrkPosition) -> bool {
    canonicalize_krk(pos).map(|c| c == *pos).unwrap_or(false)
}

/// All canonical legal positions with Black to move, in ascending code order.
pub fn enumerate_canonical_krk() -> Vec<KrkPosition> {
    (0u32..1 << 18)
        .map(|c| KrkPosition::from_code(c).expect("code in range"))
        .filter(is_canonical_krk)
        .collect()
}

/// Turns a sampled bit vector into a legal canonical position. Groups that are
/// not one-hot take the most probable unit (lowest index on ties). If the
/// resulting position is illegal, the white king is kept and the most probable
/// legal placement of rook and black king is chosen.
pub fn repair_krk(bits: &BitVector, probs: &[f32]) -> Result<KrkPosition> {
    if bits.len() != KRK_BITS || probs.len() != KRK_BITS {
        return Err(Error::Dimension(format!(
            "krk repair expects {KRK_BITS} bits and probabilities"
        )));
    }
    let mut t = [0u8; 6];
    for (g, slot) in t.iter_mut().enumerate() {
        let range = KRK_GROUP * g..KRK_GROUP * (g + 1);
        *slot = match one_hot(&bits.as_slice()[range.clone()]) {
            Some(i) => i as u8,
            None => argmax(&probs[range]) as u8,
        };
    }
    let mut pos = KrkPosition::from_tuple(t);
    if !pos.is_legal() {
        let p = |g: usize, v: usize| probs[KRK_GROUP * g + v] as f64;
        let mut best: Option<(f64, KrkPosition)> = None;
        for wr in 0..64u8 {
            for bk in 0..64u8 {
                let cand = KrkPosition::new(pos.wk_file, pos.wk_rank, wr / 8, wr % 8, bk / 8, bk % 8);
                if !cand.is_legal() {
                    continue;
                }
                let score = p(2, (wr / 8) as usize) * p(3, (wr % 8) as usize) * p(4, (bk / 8) as usize) * p(5, (bk % 8) as usize);
                if best.map_or(true, |(s, _)| score > s) {
                    best = Some((score, cand));
                }
            }
        }
        pos = best.expect("a legal placement always exists").1;
    }
    canonicalize_krk(&pos)
}

/// A job-shop problem: `routings[j]` is the machine visiting order of job `j`
/// and `durations[j][m]` the processing time of job `j` on machine `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobShopInstance {
    pub routings: Vec<Vec<usize>>,
    pub durations: Vec<Vec<u32>>,
}

pub const BENCHMARK_JOBS: usize = 5;
pub const BENCHMARK_MACHINES: usize = 5;
pub const BENCHMARK_SEED: u64 = 0;

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

impl JobShopInstance {
    pub fn n_jobs(&self) -> usize {
        self.routings.len()
    }

    pub fn n_machines(&self) -> usize {
        self.routings.first().map_or(0, |r| r.len())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_jobs();
        let m = self.n_machines();
        if n == 0 || m == 0 {
            return Err(Error::Validation("instance needs at least one job and machine".into()));
        }
        if self.durations.len() != n {
            return Err(Error::Validation("durations must have one row per job".into()));
        }
        for (j, (r, d)) in self.routings.iter().zip(&self.durations).enumerate() {
            if !is_permutation(r, m) {
                return Err(Error::Validation(format!("routing of job {j} is not a permutation of machines")));
            }
            if d.len() != m {
                return Err(Error::Validation(format!("job {j} needs {m} durations")));
            }
            if d.iter().any(|&x| x == 0) {
                return Err(Error::Validation(format!("job {j} has a zero duration")));
            }
        }
        Ok(())
    }

    /// Uniform random instance: routings are uniform permutations and
    /// durations uniform on 1..=99.
    pub fn generate(n_jobs: usize, n_machines: usize, seed: u64) -> Self {
        let mut rng = crate::rng::seeded(seed);
        let mut routings = Vec::with_capacity(n_jobs);
        let mut durations = Vec::with_capacity(n_jobs);
        for _ in 0..n_jobs {
            let mut r: Vec<usize> = (0..n_machines).collect();
            r.shuffle(&mut rng);
            routings.push(r);
            durations.push((0..n_machines).map(|_| rng.gen_range(1..=99)).collect());
        }
        JobShopInstance { routings, durations }
    }

    /// The frozen 5x5 benchmark instance.
    pub fn benchmark() -> Self {
        JobShopInstance::generate(BENCHMARK_JOBS, BENCHMARK_MACHINES, BENCHMARK_SEED)
    }

    pub fn total_duration(&self) -> u64 {
        self.durations.iter().flatten().map(|&d| d as u64).sum()
    }
}

/// A schedule genotype: `machine_orders[m]` lists jobs in processing priority
/// on machine `m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JobShopSchedule {
    pub machine_orders: Vec<Vec<usize>>,
}

impl JobShopSchedule {
    pub fn identity(n_jobs: usize, n_machines: usize) -> Self {
        JobShopSchedule {
            machine_orders: vec![(0..n_jobs).collect(); n_machines],
        }
    }

    pub fn n_machines(&self) -> usize {
        self.machine_orders.len()
    }

    pub fn n_jobs(&self) -> usize {
        self.machine_orders.first().map_or(0, |o| o.len())
    }

    /// Checks the permutation structure (feasibility is checked by the simulator).
    pub fn validate_shape(&self, n_jobs: usize, n_machines: usize) -> Result<()> {
        if self.machine_orders.len() != n_machines {
            return Err(Error::Validation(format!("expected {n_machines} machine orders")));
        }
        for (m, o) in self.machine_orders.iter().enumerate() {
            if !is_permutation(o, n_jobs) {
                return Err(Error::Validation(format!("order of machine {m} is not a permutation of jobs")));
            }
        }
        Ok(())
    }

    pub fn random(n_jobs: usize, n_machines: usize, rng: &mut impl Rng) -> Self {
        let machine_orders = (0..n_machines)
            .map(|_| {
                let mut o: Vec<usize> = (0..n_jobs).collect();
                o.shuffle(rng);
                o
            })
            .collect();
        JobShopSchedule { machine_orders }
    }

    /// Position of job `j` in machine `m`'s order.
    pub fn position(&self, m: usize, j: usize) -> usize {
        self.machine_orders[m].iter().position(|&x| x == j).expect("job present")
    }
}

impl fmt::Display for JobShopSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (m, o) in self.machine_orders.iter().enumerate() {
            if m > 0 {
                f.write_str(",")?;
            }
            for (i, j) in o.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{j}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for JobShopSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let machine_orders: Vec<Vec<usize>> = s
            .trim()
            .split(',')
            .map(|perm| {
                perm.split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|e| Error::Decode(format!("bad job {t:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let sched = JobShopSchedule { machine_orders };
        let n = sched.n_jobs();
        sched.validate_shape(n, sched.n_machines())?;
        Ok(sched)
    }
}

pub fn jobshop_bits(n_jobs: usize, n_machines: usize) -> usize {
    n_machines * n_jobs * n_jobs
}

/// One-hot layout: bit `m*n*n + p*n + j` is set when machine `m` runs job `j`
/// at position `p` (125 bits for the 5x5 benchmark).
pub fn encode_jobshop(s: &JobShopSchedule) -> Result<BitVector> {
    let n = s.n_jobs();
    let m = s.n_machines();
    s.validate_shape(n, m)?;
    let mut v = BitVector::zeros(jobshop_bits(n, m));
    for (mi, order) in s.machine_orders.iter().enumerate() {
        for (p, &j) in order.iter().enumerate() {
            v.set(mi * n * n + p * n + j, true);
        }
    }
    Ok(v)
}

pub fn decode_jobshop(v: &BitVector, n_jobs: usize, n_machines: usize) -> Result<JobShopSchedule> {
    if v.len() != jobshop_bits(n_jobs, n_machines) {
        return Err(Error::Decode(format!(
            "expected {} bits, got {}",
            jobshop_bits(n_jobs, n_machines),
            v.len()
        )));
    }
    let mut machine_orders = Vec::with_capacity(n_machines);
    for m in 0..n_machines {
        let mut order = Vec::with_capacity(n_jobs);
        let mut seen = vec![false; n_jobs];
        for p in 0..n_jobs {
            let base = m * n_jobs * n_jobs + p * n_jobs;
            let j = one_hot(&v.as_slice()[base..base + n_jobs])
                .ok_or_else(|| Error::Decode(format!("machine {m} position {p} is not one-hot")))?;
            if seen[j] {
                return Err(Error::Decode(format!("job {j} repeated on machine {m}")));
            }
            seen[j] = true;
            order.push(j);
        }
        machine_orders.push(order);
    }
    Ok(JobShopSchedule { machine_orders })
}

/// Turns a sampled bit vector into per-machine job permutations. Non-one-hot
/// groups take their most probable job; a job repeated on a machine keeps its
/// first position and later duplicates are reassigned to the most probable
/// missing job.
pub fn repair_jobshop(bits: &BitVector, probs: &[f32], n_jobs: usize, n_machines: usize) -> Result<JobShopSchedule> {
    let width = jobshop_bits(n_jobs, n_machines);
    if bits.len() != width || probs.len() != width {
        return Err(Error::Dimension(format!("job-shop repair expects {width} bits and probabilities")));
    }
    let mut machine_orders = Vec::with_capacity(n_machines);
    for m in 0..n_machines {
        let base = |p: usize| m * n_jobs * n_jobs + p * n_jobs;
        let mut order: Vec<usize> = (0..n_jobs)
            .map(|p| {
                let r = base(p)..base(p) + n_jobs;
                one_hot(&bits.as_slice()[r.clone()]).unwrap_or_else(|| argmax(&probs[r]))
            })
            .collect();
        let mut seen = vec![false; n_jobs];
        let mut dup_positions = Vec::new();
        for (p, &j) in order.iter().enumerate() {
            if seen[j] {
                dup_positions.push(p);
            } else {
                seen[j] = true;
            }
        }
        for p in dup_positions {
            let b = base(p);
            let j = (0..n_jobs)
                .filter(|&j| !seen[j])
                .fold(None, |best: Option<usize>, j| match best {
                    Some(bj) if probs[b + bj] >= probs[b + j] => Some(bj),
                    _ => Some(j),
                })
                .expect("a duplicate implies a missing job");
            seen[j] = true;
            order[p] = j;
        }
        machine_orders.push(order);
    }
    Ok(JobShopSchedule { machine_orders })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn legal_position() -> impl Strategy<Value = KrkPosition> {
        (0u8..64, 0u8..64, 0u8..64)
            .prop_map(|(a, b, c)| KrkPosition::from_squares(a, b, c))
            .prop_filter("legal", |p| p.is_legal())
    }

    #[test]
    fn wk_on_file_a_sets_first_bit() {
        let p = KrkPosition::new(0, 0, 5, 5, 2, 2);
        let v = encode_krk(&p).unwrap();
        assert_eq!(&v.as_slice()[0..8], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(v.count_ones(), 6);
    }

    #[test]
    fn decode_rejects_bad_groups() {
        assert!(matches!(decode_krk(&BitVector::zeros(48)), Err(Error::Decode(_))));
        let mut v = encode_krk(&KrkPosition::new(0, 0, 5, 5, 2, 2)).unwrap();
        v.set(16 + 1, true);
        assert!(matches!(decode_krk(&v), Err(Error::Decode(_))));
    }

    #[test]
    fn illegal_positions_name_the_invariant() {
        let err = KrkPosition::new(0, 0, 0, 0, 4, 4).validate().unwrap_err();
        assert!(err.to_string().contains("distinct"));
        let err = KrkPosition::new(0, 0, 5, 5, 1, 1).validate().unwrap_err();
        assert!(err.to_string().contains("adjacent"));
    }

    #[test]
    fn canonical_space_has_28056_positions() {
        assert_eq!(enumerate_canonical_krk().len(), 28056);
    }

    #[test]
    fn canonical_triangle_position_is_fixed() {
        let p = KrkPosition::new(1, 0, 5, 6, 3, 4);
        assert_eq!(canonicalize_krk(&p).unwrap(), p);
    }

    #[test]
    fn identity_schedule_layout() {
        let s = JobShopSchedule::identity(5, 5);
        let v = encode_jobshop(&s).unwrap();
        assert_eq!(v.count_ones(), 25);
        for m in 0..5 {
            for p in 0..5 {
                assert!(v.get(25 * m + 5 * p + p));
            }
        }
    }

    #[test]
    fn repeated_job_is_a_decode_error() {
        let s = JobShopSchedule::identity(5, 5);
        let mut v = encode_jobshop(&s).unwrap();
        // machine 1: position 1 switches from job 1 to job 0
        v.set(25 + 5 + 1, false);
        v.set(25 + 5, true);
        assert!(matches!(decode_jobshop(&v, 5, 5), Err(Error::Decode(_))));
    }

    #[test]
    fn schedule_text_round_trip() {
        let s: JobShopSchedule = "0 1 2 3 4,4 3 2 1 0,1 0 2 3 4,0 1 2 4 3,2 1 0 3 4".parse().unwrap();
        assert_eq!(s.to_string().parse::<JobShopSchedule>().unwrap(), s);
        assert!("0 1 1 3 4,0 1 2 3 4".parse::<JobShopSchedule>().is_err());
    }

    #[test]
    fn repair_fixes_duplicates() {
        let s = JobShopSchedule::identity(5, 5);
        let mut v = encode_jobshop(&s).unwrap();
        v.set(25 + 5 + 1, false);
        v.set(25 + 5, true);
        let probs = vec![0.5f32; 125];
        let r = repair_jobshop(&v, &probs, 5, 5).unwrap();
        r.validate_shape(5, 5).unwrap();
        assert_eq!(r.machine_orders[1], vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn repair_krk_always_legal_and_canonical() {
        let mut rng = crate::rng::seeded(3);
        for _ in 0..200 {
            let bits = BitVector::from_bits((0..48).map(|_| rng.gen_range(0..2u8)));
            let probs: Vec<f32> = (0..48).map(|_| rng.gen()).collect();
            let p = repair_krk(&bits, &probs).unwrap();
            assert!(p.is_legal());
            assert!(is_canonical_krk(&p));
        }
    }

    proptest! {
        #[test]
        fn krk_round_trip(p in legal_position()) {
            let v = encode_krk(&p).unwrap();
            prop_assert_eq!(v.count_ones(), 6);
            prop_assert_eq!(decode_krk(&v).unwrap(), p);
        }

        #[test]
        fn canonical_form_is_constant_on_orbits(p in legal_position()) {
            let c = canonicalize_krk(&p).unwrap();
            prop_assert_eq!(canonicalize_krk(&c).unwrap(), c);
            for s in 0..8 {
                prop_assert_eq!(canonicalize_krk(&p.transform(s)).unwrap(), c);
            }
        }

        #[test]
        fn jobshop_round_trip(seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let s = JobShopSchedule::random(5, 5, &mut rng);
            let v = encode_jobshop(&s).unwrap();
            prop_assert_eq!(v.count_ones(), 25);
            prop_assert_eq!(decode_jobshop(&v, 5, 5).unwrap(), s);
        }
    }
}
