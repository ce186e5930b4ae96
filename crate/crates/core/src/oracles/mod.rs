//! Exact cost functions for both benchmark domains.

pub mod jobshop;
pub mod krk;

use serde::{Deserialize, Serialize};

pub use jobshop::{jobshop_cost, make_feasible, makespan_lower_bound, simulate, Simulation, Timetable};
pub use krk::{Histogram, KrkTablebase};

/// Objective value of an instance. Draws (KRK) and deadlocked schedules
/// (job-shop) never count as good under any threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cost {
    Value(u32),
    Draw,
    Infeasible(u32),
}

impl Cost {
    pub fn within(self, theta: f64) -> bool {
        matches!(self, Cost::Value(v) if v as f64 <= theta)
    }

    /// Numeric value used for averaging; draws have none, infeasible
    /// schedules report their sentinel.
    pub fn numeric(self) -> Option<f64> {
        match self {
            Cost::Value(v) | Cost::Infeasible(v) => Some(v as f64),
            Cost::Draw => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, Cost::Value(_))
    }
}
