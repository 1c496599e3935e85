//! Evaluators: a big-step interpreter with operation counters and a
//! small-step reduction machine over terms.

mod eval;
mod step;

pub use eval::{eval, eval_elaborated, eval_with_metrics, Environment, EvalError, EvalMetrics};
pub use step::{
    eval_small_step, matching_rules, redexes, run, step, StepError, StepOutcome, STEP_BUDGET,
};
