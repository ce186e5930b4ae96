//! Semi-active timetable simulation for job-shop schedules.

use crate::encoding::{JobShopInstance, JobShopSchedule};
use crate::error::{Error, Result};
use crate::oracles::Cost;

/// Start and end time of every task, indexed `[job][machine]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timetable {
    pub start: Vec<Vec<u32>>,
    pub end: Vec<Vec<u32>>,
    pub makespan: u32,
}

impl Timetable {
    /// Idle time on machine `m` between time zero and its last completion.
    pub fn machine_idle(&self, inst: &JobShopInstance, m: usize) -> u32 {
        let last = self.end.iter().map(|row| row[m]).max().unwrap_or(0);
        let load: u32 = inst.durations.iter().map(|row| row[m]).sum();
        last - load
    }

    pub fn total_idle(&self, inst: &JobShopInstance) -> u32 {
        (0..inst.n_machines()).map(|m| self.machine_idle(inst, m)).sum()
    }
}

/// Outcome of simulating a schedule: the realised timetable, or the point at
/// which no task could make progress.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Simulation {
    Feasible(Timetable),
    Deadlock,
}

fn check_shapes(inst: &JobShopInstance, s: &JobShopSchedule) -> Result<()> {
    inst.validate()?;
    s.validate_shape(inst.n_jobs(), inst.n_machines())
}

/// Event-free semi-active construction: repeatedly schedule any task that is
/// next both in its job's routing and in its machine's priority order, at the
/// later of the two predecessors' completion times.
pub fn simulate(inst: &JobShopInstance, s: &JobShopSchedule) -> Result<Simulation> {
    check_shapes(inst, s)?;
    let n = inst.n_jobs();
    let m = inst.n_machines();
    let mut start = vec![vec![0u32; m]; n];
    let mut end = vec![vec![0u32; m]; n];
    let mut job_step = vec![0usize; n];
    let mut job_ready = vec![0u32; n];
    let mut machine_step = vec![0usize; m];
    let mut machine_ready = vec![0u32; m];
    let mut remaining = n * m;
    while remaining > 0 {
        let mut progressed = false;
        for mi in 0..m {
            while machine_step[mi] < n {
                let j = s.machine_orders[mi][machine_step[mi]];
                if job_step[j] >= m || inst.routings[j][job_step[j]] != mi {
                    break;
                }
                let t0 = job_ready[j].max(machine_ready[mi]);
                let t1 = t0 + inst.durations[j][mi];
                start[j][mi] = t0;
                end[j][mi] = t1;
                job_ready[j] = t1;
                machine_ready[mi] = t1;
                job_step[j] += 1;
                machine_step[mi] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return Ok(Simulation::Deadlock);
        }
    }
    let makespan = job_ready.iter().copied().max().unwrap_or(0);
    Ok(Simulation::Feasible(Timetable { start, end, makespan }))
}

/// Allocation-free deadlock check over a flat `[machine][position]` order
/// buffer; the instance must have at most 16 jobs and 16 machines.
pub(crate) fn flat_orders_feasible(routings: &[[u8; 16]], n: usize, m: usize, orders: &[u8]) -> bool {
    let mut job_step = [0u8; 16];
    let mut machine_step = [0u8; 16];
    let mut remaining = n * m;
    while remaining > 0 {
        let mut progressed = false;
        for mi in 0..m {
            while (machine_step[mi] as usize) < n {
                let j = orders[mi * n + machine_step[mi] as usize] as usize;
                let k = job_step[j] as usize;
                if k >= m || routings[j][k] as usize != mi {
                    break;
                }
                job_step[j] += 1;
                machine_step[mi] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            return false;
        }
    }
    true
}

fn permutations(n: usize) -> Vec<Vec<u8>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, (n - 1) as u8);
            out.push(q);
        }
    }
    out
}

/// Rejection sampler over independent uniform machine permutations,
/// accepting only deadlock-free genotypes.
#[derive(Debug, Clone)]
pub struct FeasibleSampler {
    n: usize,
    m: usize,
    routings: Vec<[u8; 16]>,
    /// All job permutations, when small enough to tabulate.
    table: Option<Vec<Vec<u8>>>,
}

impl FeasibleSampler {
    pub fn new(inst: &JobShopInstance) -> Self {
        let n = inst.n_jobs();
        let m = inst.n_machines();
        assert!(n <= 16 && m <= 16, "sampler supports up to 16x16 instances");
        let mut routings = vec![[0u8; 16]; n];
        for (j, r) in inst.routings.iter().enumerate() {
            for (k, &mi) in r.iter().enumerate() {
                routings[j][k] = mi as u8;
            }
        }
        let table = (n <= 7).then(|| permutations(n));
        FeasibleSampler { n, m, routings, table }
    }

    pub fn sample(&self, rng: &mut impl rand::Rng) -> JobShopSchedule {
        use rand::seq::SliceRandom;
        let (n, m) = (self.n, self.m);
        let mut orders: Vec<u8> = (0..m).flat_map(|_| 0..n as u8).collect();
        loop {
            for chunk in orders.chunks_mut(n) {
                match &self.table {
                    Some(t) => chunk.copy_from_slice(&t[rng.gen_range(0..t.len())]),
                    None => chunk.shuffle(rng),
                }
            }
            if flat_orders_feasible(&self.routings, n, m, &orders) {
                return JobShopSchedule {
                    machine_orders: orders.chunks(n).map(|c| c.iter().map(|&j| j as usize).collect()).collect(),
                };
            }
        }
    }
}

/// Sentinel cost for deadlocked genotypes: total processing time times five.
pub fn infeasible_cost(inst: &JobShopInstance) -> u32 {
    (inst.total_duration() * 5) as u32
}

pub fn jobshop_cost(inst: &JobShopInstance, s: &JobShopSchedule) -> Result<Cost> {
    Ok(match simulate(inst, s)? {
        Simulation::Feasible(t) => Cost::Value(t.makespan),
        Simulation::Deadlock => Cost::Infeasible(infeasible_cost(inst)),
    })
}

/// Converts any genotype into a feasible one. When the simulation stalls, the
/// ready task (next in its job's routing) that sits earliest in its machine's
/// remaining order is promoted to the front of that order; ties go to the
/// lowest machine index. Returns the realised machine orders.
pub fn make_feasible(inst: &JobShopInstance, s: &JobShopSchedule) -> Result<JobShopSchedule> {
    check_shapes(inst, s)?;
    let n = inst.n_jobs();
    let m = inst.n_machines();
    let mut orders = s.machine_orders.clone();
    let mut job_step = vec![0usize; n];
    let mut machine_step = vec![0usize; m];
    let mut remaining = n * m;
    while remaining > 0 {
        let mut progressed = false;
        for mi in 0..m {
            while machine_step[mi] < n {
                let j = orders[mi][machine_step[mi]];
                if job_step[j] >= m || inst.routings[j][job_step[j]] != mi {
                    break;
                }
                job_step[j] += 1;
                machine_step[mi] += 1;
                remaining -= 1;
                progressed = true;
            }
        }
        if !progressed {
            let (mi, pos) = (0..n)
                .filter(|&j| job_step[j] < m)
                .map(|j| {
                    let mi = inst.routings[j][job_step[j]];
                    let pos = orders[mi].iter().position(|&x| x == j).expect("job on machine");
                    (pos - machine_step[mi], mi, pos)
                })
                .min()
                .map(|(_, mi, pos)| (mi, pos))
                .expect("unfinished work implies a ready task");
            let j = orders[mi].remove(pos);
            orders[mi].insert(machine_step[mi], j);
        }
    }
    Ok(JobShopSchedule { machine_orders: orders })
}

/// Lower bound on any makespan: the longest job chain or machine load.
pub fn makespan_lower_bound(inst: &JobShopInstance) -> u32 {
    let chain = inst.durations.iter().map(|row| row.iter().sum::<u32>()).max().unwrap_or(0);
    let load = (0..inst.n_machines())
        .map(|mi| inst.durations.iter().map(|row| row[mi]).sum::<u32>())
        .max()
        .unwrap_or(0);
    chain.max(load)
}

pub fn validate_instance_json(text: &str) -> Result<JobShopInstance> {
    let inst: JobShopInstance = serde_json::from_str(text)?;
    inst.validate()?;
    if inst.durations.iter().flatten().any(|&d| d > 99) {
        return Err(Error::Validation("durations must lie in 1..99".into()));
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit_identity() -> JobShopInstance {
        JobShopInstance {
            routings: vec![(0..5).collect(); 5],
            durations: vec![vec![1; 5]; 5],
        }
    }

    #[test]
    fn single_job_is_a_chain() {
        let inst = JobShopInstance {
            routings: vec![vec![2, 0, 4, 1, 3]],
            durations: vec![vec![3, 8, 1, 7, 4]],
        };
        let s = JobShopSchedule::identity(1, 5);
        assert_eq!(jobshop_cost(&inst, &s).unwrap(), Cost::Value(23));
    }

    #[test]
    fn unit_flow_shop_pipelines_in_nine() {
        let inst = unit_identity();
        assert_eq!(jobshop_cost(&inst, &JobShopSchedule::identity(5, 5)).unwrap(), Cost::Value(9));
    }

    #[test]
    fn unit_flow_shop_idle_time() {
        let inst = unit_identity();
        let Simulation::Feasible(t) = simulate(&inst, &JobShopSchedule::identity(5, 5)).unwrap() else {
            panic!("identity is feasible")
        };
        // machine m waits m units before its first task and finishes at 5 + m
        assert_eq!(t.total_idle(&inst), 0 + 1 + 2 + 3 + 4);
    }

    #[test]
    fn crossing_orders_deadlock() {
        // job 0 visits 0 then 1, job 1 visits 1 then 0; machine 0 wants job 1
        // first and machine 1 wants job 0 first
        let inst = JobShopInstance {
            routings: vec![vec![0, 1], vec![1, 0]],
            durations: vec![vec![2, 3], vec![4, 5]],
        };
        let s = JobShopSchedule {
            machine_orders: vec![vec![1, 0], vec![0, 1]],
        };
        assert_eq!(jobshop_cost(&inst, &s).unwrap(), Cost::Infeasible(14 * 5));
        let fixed = make_feasible(&inst, &s).unwrap();
        assert!(matches!(jobshop_cost(&inst, &fixed).unwrap(), Cost::Value(_)));
    }

    /// Longest-path makespan over the disjunctive graph, computed by a
    /// fixed-point relaxation; `None` when the orders contain a cycle.
    fn longest_path(inst: &JobShopInstance, s: &JobShopSchedule) -> Option<u32> {
        let n = inst.n_jobs();
        let m = inst.n_machines();
        let mut start = vec![vec![0u32; m]; n];
        for _ in 0..=n * m {
            let mut changed = false;
            for j in 0..n {
                for mi in 0..m {
                    let mut t = 0;
                    let k = inst.routings[j].iter().position(|&x| x == mi).unwrap();
                    if k > 0 {
                        let prev = inst.routings[j][k - 1];
                        t = t.max(start[j][prev] + inst.durations[j][prev]);
                    }
                    let p = s.position(mi, j);
                    if p > 0 {
                        let pj = s.machine_orders[mi][p - 1];
                        t = t.max(start[pj][mi] + inst.durations[pj][mi]);
                    }
                    if t != start[j][mi] {
                        start[j][mi] = t;
                        changed = true;
                    }
                }
            }
            if !changed {
                return (0..n).flat_map(|j| (0..m).map(move |mi| (j, mi))).map(|(j, mi)| start[j][mi] + inst.durations[j][mi]).max();
            }
        }
        None
    }

    #[test]
    fn two_by_two_matches_exhaustive_longest_path() {
        let perms = [vec![0, 1], vec![1, 0]];
        for seed in 0..20 {
            let inst = JobShopInstance::generate(2, 2, seed);
            for a in &perms {
                for b in &perms {
                    let s = JobShopSchedule {
                        machine_orders: vec![a.clone(), b.clone()],
                    };
                    let expected = match longest_path(&inst, &s) {
                        Some(v) => Cost::Value(v),
                        None => Cost::Infeasible(infeasible_cost(&inst)),
                    };
                    assert_eq!(jobshop_cost(&inst, &s).unwrap(), expected, "seed {seed} {s}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn simulator_matches_longest_path(iseed in 0u64..50, sseed in any::<u64>()) {
            let inst = JobShopInstance::generate(5, 5, iseed);
            let mut rng = crate::rng::seeded(sseed);
            let s = JobShopSchedule::random(5, 5, &mut rng);
            let expected = longest_path(&inst, &s);
            match jobshop_cost(&inst, &s).unwrap() {
                Cost::Value(v) => {
                    prop_assert_eq!(Some(v), expected);
                    prop_assert!(v >= makespan_lower_bound(&inst));
                }
                Cost::Infeasible(_) => prop_assert_eq!(expected, None),
                Cost::Draw => prop_assert!(false),
            }
        }

        #[test]
        fn repair_yields_feasible(iseed in 0u64..50, sseed in any::<u64>()) {
            let inst = JobShopInstance::generate(5, 5, iseed);
            let mut rng = crate::rng::seeded(sseed);
            let s = JobShopSchedule::random(5, 5, &mut rng);
            let fixed = make_feasible(&inst, &s).unwrap();
            prop_assert!(matches!(simulate(&inst, &fixed).unwrap(), Simulation::Feasible(_)));
            if matches!(simulate(&inst, &s).unwrap(), Simulation::Feasible(_)) {
                prop_assert_eq!(fixed, s);
            }
        }

        #[test]
        fn relabelling_jobs_preserves_cost(iseed in 0u64..50, sseed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let inst = JobShopInstance::generate(5, 5, iseed);
            let mut rng = crate::rng::seeded(sseed);
            let s = JobShopSchedule::random(5, 5, &mut rng);
            let mut perm: Vec<usize> = (0..5).collect();
            perm.shuffle(&mut rng);
            // job j is renamed perm[j]
            let mut routings = vec![vec![]; 5];
            let mut durations = vec![vec![]; 5];
            for j in 0..5 {
                routings[perm[j]] = inst.routings[j].clone();
                durations[perm[j]] = inst.durations[j].clone();
            }
            let renamed = JobShopInstance { routings, durations };
            let rs = JobShopSchedule {
                machine_orders: s.machine_orders.iter().map(|o| o.iter().map(|&j| perm[j]).collect()).collect(),
            };
            prop_assert_eq!(jobshop_cost(&inst, &s).unwrap(), jobshop_cost(&renamed, &rs).unwrap());
        }
    }
}
