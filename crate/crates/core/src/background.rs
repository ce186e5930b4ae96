//! Background predicates for both domains.
//!
//! Every predicate instantiation (predicate plus entity arguments) is a
//! *quantity* computed once per instance. Boolean predicates are quantities in
//! {0, 1}; numeric predicates are compared against a threshold from a finite
//! grid with `<=` or `>=`. A ground literal is therefore one quantity plus an
//! optional comparison.
//!
//! Geometric conventions for chess:
//! - distances are file, rank, king (Chebyshev) and Manhattan distance;
//! - alignment distance WR-BK is `min(file distance, rank distance)`, the
//!   number of steps the rook needs to reach the black king's file or rank;
//! - `between(x, a, b)` holds when `x` lies strictly inside segment `a`-`b`
//!   on a common straight line;
//! - kings are in opposition when on a common file or rank two squares
//!   apart, almost in opposition when a knight's move apart;
//! - the L-shaped pattern holds when the rook is a knight's move from the
//!   black king.
//!
//! Chess literals are evaluated on the canonical representative of the
//! position, so every literal is invariant under board symmetries.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::encoding::{canonicalize_krk, JobShopInstance, JobShopSchedule, KrkPosition};
use crate::error::{Error, Result};
use crate::oracles::{simulate, Simulation};
use crate::problem::{Domain, Instance, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cmp::Le => "<=",
            Cmp::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArgDomain {
    Piece { values: Vec<String> },
    Job { count: usize },
    Machine { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRange {
    pub min: i32,
    pub max: i32,
    pub step: i32,
}

impl ThresholdRange {
    pub fn values(self) -> impl Iterator<Item = i32> {
        (self.min..=self.max).step_by(self.step as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSignature {
    pub id: String,
    pub arity: usize,
    pub args: Vec<ArgDomain>,
    /// Present for numeric predicates compared with `<=` / `>=`.
    pub threshold: Option<ThresholdRange>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundLiteral {
    pub predicate: String,
    pub args: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmp: Option<Cmp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<i32>,
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))?;
        if let (Some(c), Some(t)) = (self.cmp, self.threshold) {
            write!(f, " {c} {t}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Piece {
    Wk,
    Wr,
    Bk,
}

impl Piece {
    fn name(self) -> &'static str {
        match self {
            Piece::Wk => "wk",
            Piece::Wr => "wr",
            Piece::Bk => "bk",
        }
    }

    fn square(self, p: &KrkPosition) -> (i32, i32) {
        match self {
            Piece::Wk => (p.wk_file as i32, p.wk_rank as i32),
            Piece::Wr => (p.wr_file as i32, p.wr_rank as i32),
            Piece::Bk => (p.bk_file as i32, p.bk_rank as i32),
        }
    }
}

const PAIRS: [(Piece, Piece); 3] = [(Piece::Wk, Piece::Wr), (Piece::Wk, Piece::Bk), (Piece::Wr, Piece::Bk)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum ChessQ {
    FileDistance(Piece, Piece),
    RankDistance(Piece, Piece),
    KingDistance(Piece, Piece),
    ManhattanDistance(Piece, Piece),
    SameFile(Piece, Piece),
    SameRank(Piece, Piece),
    Adjacent(Piece, Piece),
    AlignmentDistance,
    Between(Piece, Piece, Piece),
    EdgeDistance,
    CornerDistance,
    CentreDistance,
    Opposition,
    AlmostOpposition,
    LShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum JobQ {
    Early(usize, usize),
    Late(usize, usize),
    Fastest(usize, usize),
    Slowest(usize, usize),
    Fast(usize, usize),
    Slow(usize, usize),
    MachineWait(usize),
    TotalWait,
    StartTime(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Q {
    Chess(ChessQ),
    Job(JobQ),
}

/// Value reported by time predicates on a deadlocked schedule.
const UNBOUNDED: i32 = i32::MAX;

fn abs_diff(a: i32, b: i32) -> i32 {
    (a - b).abs()
}

fn gcd(a: i32, b: i32) -> i32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `x` strictly inside the straight segment from `a` to `b`.
fn strictly_between(x: (i32, i32), a: (i32, i32), b: (i32, i32)) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let g = gcd(dx.abs(), dy.abs());
    if g <= 1 {
        return false;
    }
    let step = (dx / g, dy / g);
    (1..g).any(|k| (a.0 + k * step.0, a.1 + k * step.1) == x)
}

fn knight_apart(a: (i32, i32), b: (i32, i32)) -> bool {
    let (df, dr) = (abs_diff(a.0, b.0), abs_diff(a.1, b.1));
    (df == 1 && dr == 2) || (df == 2 && dr == 1)
}

fn chess_value(q: ChessQ, p: &KrkPosition) -> i32 {
    let sq = |x: Piece| x.square(p);
    let b = |v: bool| v as i32;
    match q {
        ChessQ::FileDistance(x, y) => abs_diff(sq(x).0, sq(y).0),
        ChessQ::RankDistance(x, y) => abs_diff(sq(x).1, sq(y).1),
        ChessQ::KingDistance(x, y) => abs_diff(sq(x).0, sq(y).0).max(abs_diff(sq(x).1, sq(y).1)),
        ChessQ::ManhattanDistance(x, y) => abs_diff(sq(x).0, sq(y).0) + abs_diff(sq(x).1, sq(y).1),
        ChessQ::SameFile(x, y) => b(sq(x).0 == sq(y).0),
        ChessQ::SameRank(x, y) => b(sq(x).1 == sq(y).1),
        ChessQ::Adjacent(x, y) => b(abs_diff(sq(x).0, sq(y).0).max(abs_diff(sq(x).1, sq(y).1)) == 1),
        ChessQ::AlignmentDistance => {
            let (r, k) = (sq(Piece::Wr), sq(Piece::Bk));
            abs_diff(r.0, k.0).min(abs_diff(r.1, k.1))
        }
        ChessQ::Between(x, a, c) => b(strictly_between(sq(x), sq(a), sq(c))),
        ChessQ::EdgeDistance => {
            let (f, r) = sq(Piece::Bk);
            f.min(7 - f).min(r).min(7 - r)
        }
        ChessQ::CornerDistance => {
            let (f, r) = sq(Piece::Bk);
            f.min(7 - f).max(r.min(7 - r))
        }
        ChessQ::CentreDistance => {
            let d = |v: i32| if v < 3 { 3 - v } else if v > 4 { v - 4 } else { 0 };
            let (f, r) = sq(Piece::Wk);
            d(f).max(d(r))
        }
        ChessQ::Opposition => {
            let (w, k) = (sq(Piece::Wk), sq(Piece::Bk));
            let (df, dr) = (abs_diff(w.0, k.0), abs_diff(w.1, k.1));
            b((df == 0 && dr == 2) || (df == 2 && dr == 0))
        }
        ChessQ::AlmostOpposition => b(knight_apart(sq(Piece::Wk), sq(Piece::Bk))),
        ChessQ::LShape => b(knight_apart(sq(Piece::Wr), sq(Piece::Bk))),
    }
}

/// Per-instance data the job-shop quantities read from.
struct JobFacts<'a> {
    inst: &'a JobShopInstance,
    sched: &'a JobShopSchedule,
    timetable: Option<crate::oracles::Timetable>,
}

/// Rank of job `j`'s duration on machine `m`: jobs strictly faster (or
/// slower, when `slower`) than it.
fn duration_rank(inst: &JobShopInstance, j: usize, m: usize, slower: bool) -> usize {
    let d = inst.durations[j][m];
    inst.durations
        .iter()
        .filter(|row| if slower { row[m] > d } else { row[m] < d })
        .count()
}

fn job_value(q: JobQ, f: &JobFacts<'_>) -> i32 {
    let n = f.inst.n_jobs();
    let b = |v: bool| v as i32;
    match q {
        JobQ::Early(j, m) => b(f.sched.position(m, j) <= 1),
        JobQ::Late(j, m) => b(f.sched.position(m, j) + 2 >= n),
        JobQ::Fastest(j, m) => b(duration_rank(f.inst, j, m, false) == 0),
        JobQ::Slowest(j, m) => b(duration_rank(f.inst, j, m, true) == 0),
        JobQ::Fast(j, m) => b(duration_rank(f.inst, j, m, false) <= 1),
        JobQ::Slow(j, m) => b(duration_rank(f.inst, j, m, true) <= 1),
        JobQ::MachineWait(m) => f.timetable.as_ref().map_or(UNBOUNDED, |t| t.machine_idle(f.inst, m) as i32),
        JobQ::TotalWait => f.timetable.as_ref().map_or(UNBOUNDED, |t| t.total_idle(f.inst) as i32),
        JobQ::StartTime(j, m) => f.timetable.as_ref().map_or(UNBOUNDED, |t| t.start[j][m] as i32),
    }
}

#[derive(Debug, Clone)]
struct Quantity {
    predicate: &'static str,
    args: Vec<String>,
    q: Q,
    grid: Option<ThresholdRange>,
}

/// Truth test applied to one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Test {
    True,
    Le(i32),
    Ge(i32),
}

impl Test {
    fn holds(self, v: i32) -> bool {
        match self {
            Test::True => v != 0,
            Test::Le(t) => v <= t,
            Test::Ge(t) => v >= t,
        }
    }
}

/// Quantity values of one instance, indexed like the catalog's quantities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facts(Vec<i32>);

impl Facts {
    pub fn values(&self) -> &[i32] {
        &self.0
    }
}

/// The enumerated ground-literal catalog of a domain.
#[derive(Debug, Clone)]
pub struct Catalog {
    domain: Domain,
    signatures: Vec<PredicateSignature>,
    quantities: Vec<Quantity>,
    literals: Vec<GroundLiteral>,
    tests: Vec<(usize, Test)>,
    index: HashMap<GroundLiteral, usize>,
    by_quantity: Vec<Vec<usize>>,
    context: Option<Arc<JobShopInstance>>,
}

fn sig(id: &str, args: Vec<ArgDomain>, threshold: Option<ThresholdRange>, description: &str) -> PredicateSignature {
    PredicateSignature {
        id: id.to_string(),
        arity: args.len(),
        args,
        threshold,
        description: description.to_string(),
    }
}

fn pieces(values: &[&str]) -> ArgDomain {
    ArgDomain::Piece {
        values: values.iter().map(|s| s.to_string()).collect(),
    }
}

fn range(min: i32, max: i32, step: i32) -> Option<ThresholdRange> {
    Some(ThresholdRange { min, max, step })
}

pub fn chess_predicates() -> Vec<PredicateSignature> {
    let pair = || vec![pieces(&["wk", "wr", "bk"]), pieces(&["wk", "wr", "bk"])];
    vec![
        sig("file_distance", pair(), range(0, 7, 1), "distance between the files of two pieces"),
        sig("rank_distance", pair(), range(0, 7, 1), "distance between the ranks of two pieces"),
        sig("king_distance", pair(), range(0, 7, 1), "Chebyshev (king-move) distance between two pieces"),
        sig("manhattan_distance", pair(), range(0, 14, 1), "file distance plus rank distance"),
        sig("same_file", pair(), None, "two pieces share a file"),
        sig("same_rank", pair(), None, "two pieces share a rank"),
        sig("alignment_distance", vec![pieces(&["wr"]), pieces(&["bk"])], range(0, 7, 1), "smaller of file and rank distance between rook and black king"),
        sig("adjacent", pair(), None, "two pieces a king move apart"),
        sig("between", vec![pieces(&["wk", "wr", "bk"]); 3], None, "first piece strictly inside the straight segment joining the other two"),
        sig("edge_distance", vec![pieces(&["bk"])], range(0, 3, 1), "distance of the black king to the closest edge"),
        sig("corner_distance", vec![pieces(&["bk"])], range(0, 3, 1), "king-move distance of the black king to the closest corner"),
        sig("centre_distance", vec![pieces(&["wk"])], range(0, 3, 1), "king-move distance of the white king to the four centre squares"),
        sig("kings_in_opposition", vec![], None, "kings on a common file or rank, two squares apart"),
        sig("kings_almost_in_opposition", vec![], None, "kings a knight's move apart"),
        sig("l_shape", vec![pieces(&["wr"]), pieces(&["bk"])], None, "rook a knight's move from the black king"),
    ]
}

/// Time predicates use thresholds on a grid of this step.
pub const JOBSHOP_TIME_STEP: i32 = 25;

fn time_horizon(inst: &JobShopInstance) -> i32 {
    let total = inst.total_duration() as i32;
    (total + JOBSHOP_TIME_STEP - 1) / JOBSHOP_TIME_STEP * JOBSHOP_TIME_STEP
}

pub fn jobshop_predicates(inst: &JobShopInstance) -> Vec<PredicateSignature> {
    let jm = || {
        vec![
            ArgDomain::Job { count: inst.n_jobs() },
            ArgDomain::Machine {
                count: inst.n_machines(),
            },
        ]
    };
    let h = time_horizon(inst);
    vec![
        sig("early", jm(), None, "job is first or second on the machine"),
        sig("late", jm(), None, "job is last or second-last on the machine"),
        sig("fastest_task", jm(), None, "job has the shortest task on the machine"),
        sig("slowest_task", jm(), None, "job has the longest task on the machine"),
        sig("fast_task", jm(), None, "job has the shortest or second-shortest task on the machine"),
        sig("slow_task", jm(), None, "job has the longest or second-longest task on the machine"),
        sig(
            "machine_wait",
            vec![ArgDomain::Machine {
                count: inst.n_machines(),
            }],
            range(0, h, JOBSHOP_TIME_STEP),
            "idle time on the machine before its last task completes",
        ),
        sig("total_wait", vec![], range(0, 5 * h, 4 * JOBSHOP_TIME_STEP), "idle time summed over machines"),
        sig("start_time", jm(), range(0, h, JOBSHOP_TIME_STEP), "time elapsed before the job's task on the machine starts"),
    ]
}

impl Catalog {
    pub fn chess() -> Self {
        let signatures = chess_predicates();
        let grid = |id: &str| signatures.iter().find(|s| s.id == id).and_then(|s| s.threshold);
        let mut quantities = Vec::new();
        let mut push = |predicate: &'static str, args: Vec<&str>, q: ChessQ| {
            quantities.push(Quantity {
                predicate,
                args: args.into_iter().map(String::from).collect(),
                q: Q::Chess(q),
                grid: grid(predicate),
            })
        };
        for (a, b) in PAIRS {
            push("file_distance", vec![a.name(), b.name()], ChessQ::FileDistance(a, b));
            push("rank_distance", vec![a.name(), b.name()], ChessQ::RankDistance(a, b));
            push("king_distance", vec![a.name(), b.name()], ChessQ::KingDistance(a, b));
            push("manhattan_distance", vec![a.name(), b.name()], ChessQ::ManhattanDistance(a, b));
        }
        for (a, b) in PAIRS {
            push("same_file", vec![a.name(), b.name()], ChessQ::SameFile(a, b));
            push("same_rank", vec![a.name(), b.name()], ChessQ::SameRank(a, b));
            push("adjacent", vec![a.name(), b.name()], ChessQ::Adjacent(a, b));
        }
        push("alignment_distance", vec!["wr", "bk"], ChessQ::AlignmentDistance);
        for (x, a, b) in [(Piece::Wr, Piece::Wk, Piece::Bk), (Piece::Wk, Piece::Wr, Piece::Bk), (Piece::Bk, Piece::Wk, Piece::Wr)] {
            push("between", vec![x.name(), a.name(), b.name()], ChessQ::Between(x, a, b));
        }
        push("edge_distance", vec!["bk"], ChessQ::EdgeDistance);
        push("corner_distance", vec!["bk"], ChessQ::CornerDistance);
        push("centre_distance", vec!["wk"], ChessQ::CentreDistance);
        push("kings_in_opposition", vec![], ChessQ::Opposition);
        push("kings_almost_in_opposition", vec![], ChessQ::AlmostOpposition);
        push("l_shape", vec!["wr", "bk"], ChessQ::LShape);
        Self::assemble(Domain::Chess, signatures, quantities, None)
    }

    pub fn jobshop(inst: Arc<JobShopInstance>) -> Self {
        let signatures = jobshop_predicates(&inst);
        let grid = |id: &str| signatures.iter().find(|s| s.id == id).and_then(|s| s.threshold);
        let (n, m) = (inst.n_jobs(), inst.n_machines());
        let mut quantities = Vec::new();
        let mut push = |predicate: &'static str, args: Vec<String>, q: JobQ| {
            quantities.push(Quantity {
                predicate,
                args,
                q: Q::Job(q),
                grid: grid(predicate),
            })
        };
        let jm = |j: usize, mi: usize| vec![format!("j{j}"), format!("m{mi}")];
        type Ctor = fn(usize, usize) -> JobQ;
        let per_task: [(&'static str, Ctor); 7] = [
            ("early", JobQ::Early),
            ("late", JobQ::Late),
            ("fastest_task", JobQ::Fastest),
            ("slowest_task", JobQ::Slowest),
            ("fast_task", JobQ::Fast),
            ("slow_task", JobQ::Slow),
            ("start_time", JobQ::StartTime),
        ];
        for (name, ctor) in per_task {
            for j in 0..n {
                for mi in 0..m {
                    push(name, jm(j, mi), ctor(j, mi));
                }
            }
        }
        for mi in 0..m {
            push("machine_wait", vec![format!("m{mi}")], JobQ::MachineWait(mi));
        }
        push("total_wait", vec![], JobQ::TotalWait);
        Self::assemble(Domain::Jobshop, signatures, quantities, Some(inst))
    }

    pub fn for_problem(problem: &Problem) -> Self {
        match problem.jobshop_instance() {
            Some(inst) => Self::jobshop(Arc::new(inst.clone())),
            None => Self::chess(),
        }
    }

    fn assemble(
        domain: Domain,
        signatures: Vec<PredicateSignature>,
        quantities: Vec<Quantity>,
        context: Option<Arc<JobShopInstance>>,
    ) -> Self {
        let mut literals = Vec::new();
        let mut tests = Vec::new();
        for (qi, q) in quantities.iter().enumerate() {
            let base = GroundLiteral {
                predicate: q.predicate.to_string(),
                args: q.args.clone(),
                cmp: None,
                threshold: None,
            };
            match q.grid {
                None => {
                    literals.push(base);
                    tests.push((qi, Test::True));
                }
                Some(g) => {
                    for (cmp, mk) in [(Cmp::Le, Test::Le as fn(i32) -> Test), (Cmp::Ge, Test::Ge)] {
                        for t in g.values() {
                            literals.push(GroundLiteral {
                                cmp: Some(cmp),
                                threshold: Some(t),
                                ..base.clone()
                            });
                            tests.push((qi, mk(t)));
                        }
                    }
                }
            }
        }
        let index = literals.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
        let mut by_quantity = vec![Vec::new(); quantities.len()];
        for (i, (q, _)) in tests.iter().enumerate() {
            by_quantity[*q].push(i);
        }
        Catalog {
            domain,
            signatures,
            quantities,
            literals,
            tests,
            index,
            by_quantity,
            context,
        }
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn signatures(&self) -> &[PredicateSignature] {
        &self.signatures
    }

    pub fn literals(&self) -> &[GroundLiteral] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn quantity_count(&self) -> usize {
        self.quantities.len()
    }

    pub fn lookup(&self, lit: &GroundLiteral) -> Result<usize> {
        self.index
            .get(lit)
            .copied()
            .ok_or_else(|| Error::Validation(format!("literal {lit} is not in the {} catalog", self.domain)))
    }

    pub(crate) fn quantity_of(&self, i: usize) -> usize {
        self.tests[i].0
    }

    /// Literals testing quantity `q`, in catalog order.
    pub(crate) fn literals_of_quantity(&self, q: usize) -> impl Iterator<Item = usize> + '_ {
        self.by_quantity[q].iter().copied()
    }

    /// Whether literal `i` compares a threshold, and if so which way.
    pub(crate) fn comparison(&self, i: usize) -> Option<(Cmp, i32)> {
        match self.tests[i].1 {
            Test::True => None,
            Test::Le(t) => Some((Cmp::Le, t)),
            Test::Ge(t) => Some((Cmp::Ge, t)),
        }
    }

    pub fn facts(&self, inst: &Instance) -> Result<Facts> {
        match (self.domain, inst) {
            (Domain::Chess, Instance::Krk(p)) => {
                let c = canonicalize_krk(p)?;
                Ok(Facts(
                    self.quantities
                        .iter()
                        .map(|q| match q.q {
                            Q::Chess(cq) => chess_value(cq, &c),
                            Q::Job(_) => unreachable!("job quantity in chess catalog"),
                        })
                        .collect(),
                ))
            }
            (Domain::Jobshop, Instance::Jobshop(s)) => {
                let ctx = self.context.as_ref().expect("job-shop catalog carries its instance");
                let timetable = match simulate(ctx, s)? {
                    Simulation::Feasible(t) => Some(t),
                    Simulation::Deadlock => None,
                };
                let f = JobFacts {
                    inst: ctx,
                    sched: s,
                    timetable,
                };
                Ok(Facts(
                    self.quantities
                        .iter()
                        .map(|q| match q.q {
                            Q::Job(jq) => job_value(jq, &f),
                            Q::Chess(_) => unreachable!("chess quantity in job-shop catalog"),
                        })
                        .collect(),
                ))
            }
            _ => Err(Error::DomainMismatch {
                expected: self.domain.name(),
                got: inst.domain().name(),
            }),
        }
    }

    pub fn eval_index(&self, i: usize, facts: &Facts) -> bool {
        let (q, test) = self.tests[i];
        test.holds(facts.0[q])
    }

    pub fn eval(&self, lit: &GroundLiteral, inst: &Instance) -> Result<bool> {
        let (q, test) = self.tests[self.lookup(lit)?];
        Ok(test.holds(single_value(self.quantities[q].q, inst, self.context.as_deref())?))
    }
}

/// Value of one quantity, computing only what it needs.
fn single_value(q: Q, inst: &Instance, ctx: Option<&JobShopInstance>) -> Result<i32> {
    match (q, inst) {
        (Q::Chess(cq), Instance::Krk(p)) => Ok(chess_value(cq, &canonicalize_krk(p)?)),
        (Q::Job(jq), Instance::Jobshop(s)) => {
            let ctx = ctx.ok_or_else(|| Error::Validation("job-shop literals need the job-shop instance".into()))?;
            s.validate_shape(ctx.n_jobs(), ctx.n_machines())?;
            let timed = matches!(jq, JobQ::MachineWait(_) | JobQ::TotalWait | JobQ::StartTime(..));
            let timetable = match timed {
                true => match simulate(ctx, s)? {
                    Simulation::Feasible(t) => Some(t),
                    Simulation::Deadlock => None,
                },
                false => None,
            };
            Ok(job_value(
                jq,
                &JobFacts {
                    inst: ctx,
                    sched: s,
                    timetable,
                },
            ))
        }
        (Q::Chess(_), _) => Err(Error::DomainMismatch {
            expected: "chess",
            got: inst.domain().name(),
        }),
        (Q::Job(_), _) => Err(Error::DomainMismatch {
            expected: "jobshop",
            got: inst.domain().name(),
        }),
    }
}

fn bad_literal(lit: &GroundLiteral, why: &str) -> Error {
    Error::Validation(format!("literal {lit}: {why}"))
}

fn parse_piece(lit: &GroundLiteral, s: &str) -> Result<Piece> {
    match s {
        "wk" => Ok(Piece::Wk),
        "wr" => Ok(Piece::Wr),
        "bk" => Ok(Piece::Bk),
        _ => Err(bad_literal(lit, "unknown piece")),
    }
}

fn parse_index(lit: &GroundLiteral, s: &str, prefix: char, count: usize) -> Result<usize> {
    s.strip_prefix(prefix)
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&i| i < count)
        .ok_or_else(|| bad_literal(lit, "argument out of range"))
}

/// Resolves a literal from its descriptor alone, without building a catalog.
fn resolve(lit: &GroundLiteral, domain: Domain, ctx: Option<&JobShopInstance>) -> Result<(Q, Test)> {
    let sigs = match (domain, ctx) {
        (Domain::Chess, _) => chess_predicates(),
        (Domain::Jobshop, Some(c)) => jobshop_predicates(c),
        (Domain::Jobshop, None) => {
            return Err(Error::Validation("job-shop literals need the job-shop instance".into()))
        }
    };
    let sig = sigs
        .iter()
        .find(|s| s.id == lit.predicate)
        .ok_or_else(|| bad_literal(lit, "unknown predicate"))?;
    if sig.arity != lit.args.len() {
        return Err(bad_literal(lit, "wrong number of arguments"));
    }
    let test = match (sig.threshold, lit.cmp, lit.threshold) {
        (None, None, None) => Test::True,
        (Some(r), Some(c), Some(t)) if t >= r.min && t <= r.max && (t - r.min) % r.step == 0 => match c {
            Cmp::Le => Test::Le(t),
            Cmp::Ge => Test::Ge(t),
        },
        _ => return Err(bad_literal(lit, "comparison does not match the predicate's threshold grid")),
    };
    let a = &lit.args;
    let q = match domain {
        Domain::Chess => {
            let ps = a.iter().map(|x| parse_piece(lit, x)).collect::<Result<Vec<_>>>()?;
            for (i, x) in ps.iter().enumerate() {
                if ps[..i].contains(x) {
                    return Err(bad_literal(lit, "repeated piece"));
                }
            }
            let only = |allowed: &[Piece]| -> Result<()> {
                match ps.as_slice() == allowed {
                    true => Ok(()),
                    false => Err(bad_literal(lit, "argument out of range")),
                }
            };
            Q::Chess(match lit.predicate.as_str() {
                "file_distance" => ChessQ::FileDistance(ps[0], ps[1]),
                "rank_distance" => ChessQ::RankDistance(ps[0], ps[1]),
                "king_distance" => ChessQ::KingDistance(ps[0], ps[1]),
                "manhattan_distance" => ChessQ::ManhattanDistance(ps[0], ps[1]),
                "same_file" => ChessQ::SameFile(ps[0], ps[1]),
                "same_rank" => ChessQ::SameRank(ps[0], ps[1]),
                "adjacent" => ChessQ::Adjacent(ps[0], ps[1]),
                "between" => ChessQ::Between(ps[0], ps[1], ps[2]),
                "alignment_distance" => only(&[Piece::Wr, Piece::Bk]).map(|_| ChessQ::AlignmentDistance)?,
                "l_shape" => only(&[Piece::Wr, Piece::Bk]).map(|_| ChessQ::LShape)?,
                "edge_distance" => only(&[Piece::Bk]).map(|_| ChessQ::EdgeDistance)?,
                "corner_distance" => only(&[Piece::Bk]).map(|_| ChessQ::CornerDistance)?,
                "centre_distance" => only(&[Piece::Wk]).map(|_| ChessQ::CentreDistance)?,
                "kings_in_opposition" => ChessQ::Opposition,
                "kings_almost_in_opposition" => ChessQ::AlmostOpposition,
                _ => return Err(bad_literal(lit, "unknown predicate")),
            })
        }
        Domain::Jobshop => {
            let c = ctx.expect("checked above");
            let job = |i: usize| parse_index(lit, &a[i], 'j', c.n_jobs());
            let machine = |i: usize| parse_index(lit, &a[i], 'm', c.n_machines());
            Q::Job(match lit.predicate.as_str() {
                "early" => JobQ::Early(job(0)?, machine(1)?),
                "late" => JobQ::Late(job(0)?, machine(1)?),
                "fastest_task" => JobQ::Fastest(job(0)?, machine(1)?),
                "slowest_task" => JobQ::Slowest(job(0)?, machine(1)?),
                "fast_task" => JobQ::Fast(job(0)?, machine(1)?),
                "slow_task" => JobQ::Slow(job(0)?, machine(1)?),
                "start_time" => JobQ::StartTime(job(0)?, machine(1)?),
                "machine_wait" => JobQ::MachineWait(machine(0)?),
                "total_wait" => JobQ::TotalWait,
                _ => return Err(bad_literal(lit, "unknown predicate")),
            })
        }
    };
    Ok((q, test))
}

/// Evaluates one literal on one instance; job-shop literals need the
/// instance they schedule.
pub fn eval_literal(lit: &GroundLiteral, inst: &Instance, context: Option<&JobShopInstance>) -> Result<bool> {
    let (q, test) = resolve(lit, inst.domain(), context)?;
    Ok(test.holds(single_value(q, inst, context)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn lit(pred: &str, args: &[&str], cmp: Option<Cmp>, t: Option<i32>) -> GroundLiteral {
        GroundLiteral {
            predicate: pred.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
            cmp,
            threshold: t,
        }
    }

    fn krk(t: [u8; 6]) -> Instance {
        Instance::Krk(KrkPosition::from_tuple(t))
    }

    #[test]
    fn rank_distance_arithmetic() {
        // canonical: wk b1, bk d5, ranks 1 and 5
        let p = krk([1, 0, 6, 6, 3, 4]);
        assert!(eval_literal(&lit("rank_distance", &["wk", "bk"], Some(Cmp::Le), Some(4)), &p, None).unwrap());
        assert!(!eval_literal(&lit("rank_distance", &["wk", "bk"], Some(Cmp::Le), Some(3)), &p, None).unwrap());
    }

    #[test]
    fn kings_in_opposition_on_a_file() {
        // wk e1, bk e3
        let p = krk([4, 0, 0, 7, 4, 2]);
        assert!(eval_literal(&lit("kings_in_opposition", &[], None, None), &p, None).unwrap());
        assert!(!eval_literal(&lit("kings_almost_in_opposition", &[], None, None), &p, None).unwrap());
    }

    #[test]
    fn adjacency_at_distance_one() {
        let p = krk([1, 0, 2, 1, 5, 5]);
        assert!(eval_literal(&lit("adjacent", &["wk", "wr"], None, None), &p, None).unwrap());
        assert!(!eval_literal(&lit("adjacent", &["wr", "bk"], None, None), &p, None).unwrap());
    }

    #[test]
    fn between_matches_segment_oracle() {
        let catalog = Catalog::chess();
        let between: Vec<_> = catalog.literals().iter().filter(|l| l.predicate == "between").cloned().collect();
        let mut rng = crate::rng::seeded(9);
        let mut hits = 0;
        for _ in 0..1000 {
            let p = loop {
                let p = KrkPosition::from_squares(rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64));
                if p.is_legal() {
                    break canonicalize_krk(&p).unwrap();
                }
            };
            let sq = |name: &str| -> (i32, i32) {
                match name {
                    "wk" => (p.wk_file as i32, p.wk_rank as i32),
                    "wr" => (p.wr_file as i32, p.wr_rank as i32),
                    _ => (p.bk_file as i32, p.bk_rank as i32),
                }
            };
            for l in &between {
                let (x, a, b) = (sq(&l.args[0]), sq(&l.args[1]), sq(&l.args[2]));
                let cross = (b.0 - a.0) * (x.1 - a.1) - (b.1 - a.1) * (x.0 - a.0);
                let dot_a = (x.0 - a.0) * (b.0 - a.0) + (x.1 - a.1) * (b.1 - a.1);
                let dot_b = (x.0 - b.0) * (a.0 - b.0) + (x.1 - b.1) * (a.1 - b.1);
                let expected = cross == 0 && dot_a > 0 && dot_b > 0;
                hits += expected as usize;
                assert_eq!(catalog.eval(l, &Instance::Krk(p)).unwrap(), expected, "{l} on {p}");
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn chess_literals_are_symmetry_invariant() {
        let catalog = Catalog::chess();
        let mut rng = crate::rng::seeded(2);
        for _ in 0..200 {
            let p = KrkPosition::from_squares(rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64));
            if !p.is_legal() {
                continue;
            }
            let f = catalog.facts(&Instance::Krk(p)).unwrap();
            for s in 0..8 {
                assert_eq!(catalog.facts(&Instance::Krk(p.transform(s))).unwrap(), f);
            }
        }
    }

    #[test]
    fn thresholds_are_monotone() {
        let catalog = Catalog::chess();
        let mut rng = crate::rng::seeded(4);
        for _ in 0..200 {
            let p = KrkPosition::from_squares(rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64));
            if !p.is_legal() {
                continue;
            }
            let f = catalog.facts(&Instance::Krk(p)).unwrap();
            for q in 0..catalog.quantity_count() {
                let lits: Vec<usize> = catalog.literals_of_quantity(q).collect();
                for &a in &lits {
                    for &b in &lits {
                        if let (Some((Cmp::Le, ta)), Some((Cmp::Le, tb))) = (catalog.comparison(a), catalog.comparison(b)) {
                            if tb >= ta && catalog.eval_index(a, &f) {
                                assert!(catalog.eval_index(b, &f));
                            }
                        }
                        if let (Some((Cmp::Ge, ta)), Some((Cmp::Ge, tb))) = (catalog.comparison(a), catalog.comparison(b)) {
                            if tb <= ta && catalog.eval_index(a, &f) {
                                assert!(catalog.eval_index(b, &f));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn early_means_first_or_second() {
        let inst = JobShopInstance::benchmark();
        let s: JobShopSchedule = "3 1 0 2 4,0 1 2 3 4,0 1 2 3 4,0 1 2 3 4,0 1 2 3 4".parse().unwrap();
        let i = Instance::Jobshop(s);
        for (j, expected) in [(3, true), (1, true), (0, false), (2, false), (4, false)] {
            let l = lit("early", &[&format!("j{j}"), "m0"], None, None);
            assert_eq!(eval_literal(&l, &i, Some(&inst)).unwrap(), expected, "job {j}");
        }
        let l = lit("late", &["j4", "m0"], None, None);
        assert!(eval_literal(&l, &i, Some(&inst)).unwrap());
    }

    #[test]
    fn fastest_task_unique_minimum() {
        let inst = JobShopInstance {
            routings: vec![vec![0, 1]; 3],
            durations: vec![vec![5, 9], vec![2, 9], vec![7, 1]],
        };
        let s = Instance::Jobshop(JobShopSchedule::identity(3, 2));
        let c = Catalog::jobshop(Arc::new(inst));
        assert!(c.eval(&lit("fastest_task", &["j1", "m0"], None, None), &s).unwrap());
        assert!(!c.eval(&lit("fastest_task", &["j0", "m0"], None, None), &s).unwrap());
        assert!(c.eval(&lit("fast_task", &["j0", "m0"], None, None), &s).unwrap());
        assert!(c.eval(&lit("slowest_task", &["j2", "m0"], None, None), &s).unwrap());
        assert!(c.eval(&lit("slowest_task", &["j0", "m1"], None, None), &s).unwrap());
    }

    #[test]
    fn total_wait_bound_on_pipelined_schedule() {
        let inst = JobShopInstance {
            routings: vec![(0..5).collect(); 5],
            durations: vec![vec![1; 5]; 5],
        };
        let s = JobShopSchedule::identity(5, 5);
        let idle = match simulate(&inst, &s).unwrap() {
            Simulation::Feasible(t) => t.total_idle(&inst) as i32,
            Simulation::Deadlock => unreachable!(),
        };
        let c = Catalog::jobshop(Arc::new(inst));
        let i = Instance::Jobshop(s);
        for l in c.literals().iter().filter(|l| l.predicate == "total_wait" && l.cmp == Some(Cmp::Le)) {
            assert_eq!(c.eval(l, &i).unwrap(), l.threshold.unwrap() >= idle, "{l}");
        }
    }

    #[test]
    fn standalone_evaluation_matches_catalog() {
        let inst = JobShopInstance::benchmark();
        let jc = Catalog::jobshop(Arc::new(inst.clone()));
        let cc = Catalog::chess();
        let mut rng = crate::rng::seeded(6);
        for _ in 0..20 {
            let s = Instance::Jobshop(JobShopSchedule::random(5, 5, &mut rng));
            let f = jc.facts(&s).unwrap();
            for (i, l) in jc.literals().iter().enumerate() {
                assert_eq!(eval_literal(l, &s, Some(&inst)).unwrap(), jc.eval_index(i, &f), "{l}");
            }
            let p = loop {
                let p = KrkPosition::from_squares(rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64));
                if p.is_legal() {
                    break Instance::Krk(p);
                }
            };
            let f = cc.facts(&p).unwrap();
            for (i, l) in cc.literals().iter().enumerate() {
                assert_eq!(eval_literal(l, &p, None).unwrap(), cc.eval_index(i, &f), "{l}");
                assert_eq!(eval_literal(l, &p, None).unwrap(), eval_literal(l, &p, None).unwrap());
            }
        }
        let off_grid = lit("start_time", &["j0", "m0"], Some(Cmp::Le), Some(13));
        assert!(eval_literal(&off_grid, &Instance::Jobshop(JobShopSchedule::identity(5, 5)), Some(&inst)).is_err());
        assert!(eval_literal(&lit("early", &["j9", "m0"], None, None), &Instance::Jobshop(JobShopSchedule::identity(5, 5)), Some(&inst)).is_err());
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let c = Catalog::chess();
        let s = Instance::Jobshop(JobShopSchedule::identity(5, 5));
        assert!(matches!(c.facts(&s), Err(Error::DomainMismatch { .. })));
    }

    #[test]
    fn catalog_literals_respect_declared_domains() {
        for c in [Catalog::chess(), Catalog::jobshop(Arc::new(JobShopInstance::benchmark()))] {
            for l in c.literals() {
                let s = c.signatures().iter().find(|s| s.id == l.predicate).unwrap();
                assert_eq!(s.arity, l.args.len());
                match (s.threshold, l.threshold) {
                    (Some(r), Some(t)) => assert!(t >= r.min && t <= r.max),
                    (None, None) => {}
                    _ => panic!("{l} does not match its signature"),
                }
            }
        }
    }
}
