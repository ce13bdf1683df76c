//! Multi-seed experiment driver: plan execution, aggregation, plotting and
//! the gradient-check suite.

mod aggregate;
mod gradcheck;
mod plan;
mod plot;
mod stats;

pub use aggregate::{aggregate, load_runs, table_checkpoints, AggregateRow, AggregateTable, RunCurve, FINAL_METRIC};
pub use gradcheck::{gradcheck, GradcheckOptions, GradcheckReport};
pub use plan::{run_plan, ExperimentPlan, Overrides, PlanReport, RunOutcome, RunStatus};
pub use plot::{plot, CurvePoint, PlotOutput};
pub use stats::{ci95_halfwidth, mean, sample_std};
