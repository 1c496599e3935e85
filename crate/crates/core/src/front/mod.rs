//! Lowerings from relational algebra, nested relational calculus and linear
//! algebra into SDQL terms, physical join builders, and layout conversions.

mod agg;
mod join;
mod la;
mod layout;
mod nrc;
mod ra;
pub mod surface;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use core::fmt;

pub use agg::{lower_group_agg, lower_scalar_agg, AggKind};
pub use join::{build_groupjoin, build_hash_join, groupjoin_oracle, nested_loop_join, JoinBody};
pub use la::{lower_la, La, LaLayout};
pub use layout::{convert_layout, to_columnar_query, to_row_query, RelLayout};
pub use nrc::{lower_nrc, Nrc};
pub use ra::{lower_ra, ra_schema, Ra, Schema};

use crate::syntax::{all_names, fresh, subst, Expr};
use crate::typecheck::TypeError;
use crate::Name;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontendError {
    pub code: &'static str,
    pub msg: String,
}

impl FrontendError {
    pub fn new(code: &'static str, msg: impl Into<String>) -> Self {
        FrontendError { code, msg: msg.into() }
    }
}

impl fmt::Display for FrontendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.msg)
    }
}

impl From<TypeError> for FrontendError {
    fn from(e: TypeError) -> Self {
        FrontendError { code: "type-mismatch", msg: e.to_string() }
    }
}

/// A function of one argument written as an SDQL term over `var`.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFn {
    pub var: Name,
    pub body: Expr,
}

impl RowFn {
    pub fn new(var: &str, body: Expr) -> RowFn {
        RowFn { var: var.into(), body }
    }

    /// `f(arg)`.
    pub fn apply(&self, arg: &Expr) -> Expr {
        subst(self.body.clone(), &self.var, arg)
    }
}

/// A binder name based on `base` that does not clash with any name in
/// `terms` or any free name of `fns`.
pub(crate) fn binder_with(base: &str, terms: &[&Expr], fns: &[&RowFn]) -> Name {
    let mut avoid = BTreeSet::new();
    for t in terms {
        all_names(t, &mut avoid);
    }
    for f in fns {
        avoid.extend(f.body.free_vars().into_iter().filter(|n| *n != f.var));
    }
    fresh(base, &avoid)
}

pub(crate) fn binder(base: &str, terms: &[&Expr]) -> Name {
    binder_with(base, terms, &[])
}
