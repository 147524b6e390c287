//! Rule bodies evaluated by leapfrog triejoin.

mod eval;
mod leapfrog;
mod plan;

pub use eval::{
    bindings_as_values, check_constraint, evaluate_constraint, leapfrog_join, ConstraintTypeError,
    JoinStats,
};
pub use leapfrog::{leapfrog_search, TrieCursor};
pub use plan::{plan, AtomBinding, JoinPlan, PlanTerm, ScheduledConstraint};
