//! Loop optimizations: vertical and horizontal fusion, factorization,
//! loop-invariant code motion and conditional-to-product conversion, run to
//! a fixpoint over elaborated terms.

mod analysis;
mod rules;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

pub use analysis::{linear_in, may_fail, structure, Structure};
pub use rules::mul_to_if;

use crate::syntax::Expr;
use crate::typecheck::{type_of, typecheck, TypeEnv, TypeError};
use crate::types::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    IfToMul,
    VerticalKey,
    VerticalValue,
    Horizontal,
    Licm,
    FactorizeLeft,
    FactorizeRight,
}

impl Rule {
    /// All rules, in the order a pass applies them.
    pub const ALL: [Rule; 7] = [
        Rule::IfToMul,
        Rule::VerticalKey,
        Rule::VerticalValue,
        Rule::Horizontal,
        Rule::Licm,
        Rule::FactorizeLeft,
        Rule::FactorizeRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::IfToMul => "if-to-mul",
            Rule::VerticalKey => "vertical-key",
            Rule::VerticalValue => "vertical-value",
            Rule::Horizontal => "horizontal",
            Rule::Licm => "licm",
            Rule::FactorizeLeft => "factorize-left",
            Rule::FactorizeRight => "factorize-right",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Rule, String> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| alloc::format!("unknown rule `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteConfig {
    pub rules: Vec<Rule>,
    pub max_passes: usize,
}

impl Default for RewriteConfig {
    fn default() -> Self {
        RewriteConfig { rules: Rule::ALL.to_vec(), max_passes: 16 }
    }
}

impl RewriteConfig {
    pub fn none() -> Self {
        RewriteConfig { rules: Vec::new(), max_passes: 1 }
    }

    pub fn only(rules: &[Rule]) -> Self {
        RewriteConfig { rules: rules.to_vec(), ..Self::default() }
    }

    /// Parse a comma-separated rule list; `all` and `none` are accepted.
    pub fn parse_list(s: &str) -> Result<Self, String> {
        match s.trim() {
            "all" => return Ok(Self::default()),
            "none" | "" => return Ok(Self::none()),
            _ => {}
        }
        let rules = s.split(',').map(|r| r.trim().parse()).collect::<Result<Vec<Rule>, _>>()?;
        Ok(Self::only(&rules))
    }

    pub fn enabled(&self, r: Rule) -> bool {
        self.rules.contains(&r)
    }
}

/// One rule firing, with the matched term and its replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteEvent {
    pub rule: &'static str,
    pub pass: usize,
    pub before: Expr,
    pub after: Expr,
}

#[derive(Debug, Clone)]
pub struct Optimized {
    pub expr: Expr,
    pub ty: Type,
    pub events: Vec<RewriteEvent>,
    pub passes: usize,
    /// False when `max_passes` ran out while rules were still firing.
    pub converged: bool,
}

impl Optimized {
    pub fn warning(&self) -> Option<String> {
        (!self.converged)
            .then(|| alloc::format!("optimizer stopped after {} passes without reaching a fixpoint", self.passes))
    }
}

#[derive(Clone, Copy)]
enum Pass {
    Inline,
    IfToMul,
    Vertical { key: bool, value: bool },
    Horizontal,
    Licm,
    Factorize { left: bool, right: bool },
}

struct Rewriter {
    pass: usize,
    events: Vec<RewriteEvent>,
}

impl Rewriter {
    /// Rewrite `e` bottom-up, trying the rule at every node once.
    fn walk(&mut self, env: &TypeEnv, e: Expr, p: Pass) -> Expr {
        let e = match e {
            Expr::Sum { var, src, body, tag } => {
                let src = self.walk(env, *src, p);
                let body = match type_of(env, &src) {
                    Ok(Type::Dict { key, val, .. }) => {
                        let xt = Type::record([("key", *key), ("val", *val)]);
                        self.walk(&env.clone().with(var.clone(), xt), *body, p)
                    }
                    _ => *body,
                };
                Expr::Sum { var, src: alloc::boxed::Box::new(src), body: alloc::boxed::Box::new(body), tag }
            }
            Expr::Let(x, e1, e2) => {
                let e1 = self.walk(env, *e1, p);
                let e2 = match type_of(env, &e1) {
                    Ok(t) => self.walk(&env.clone().with(x.clone(), t), *e2, p),
                    Err(_) => *e2,
                };
                Expr::Let(x, alloc::boxed::Box::new(e1), alloc::boxed::Box::new(e2))
            }
            other => other.map_children(&mut |c| self.walk(env, c, p)),
        };
        let fired = match p {
            Pass::Inline => rules::inline_copy(&e).map(|r| ("inline-copy", r)),
            Pass::IfToMul => rules::if_to_mul(env, &e).map(|r| ("if-to-mul", r)),
            Pass::Vertical { key, value } => rules::fuse_vertical(env, &e)
                .filter(|(name, _)| if *name == "vertical-key" { key } else { value }),
            Pass::Horizontal => rules::fuse_horizontal(&e).map(|r| ("horizontal", r)),
            Pass::Licm => rules::hoist_invariant(&e).map(|r| ("licm", r)),
            Pass::Factorize { left, right } => rules::factorize(&e, left, right),
        };
        match fired {
            Some((rule, after)) if same_type(env, &e, &after) => {
                self.events.push(RewriteEvent { rule, pass: self.pass, before: e, after: after.clone() });
                after
            }
            _ => e,
        }
    }
}

fn same_type(env: &TypeEnv, a: &Expr, b: &Expr) -> bool {
    match (type_of(env, a), type_of(env, b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

fn passes_for(cfg: &RewriteConfig) -> Vec<Pass> {
    let on = |r| cfg.enabled(r);
    let mut out = Vec::new();
    if !cfg.rules.is_empty() {
        out.push(Pass::Inline);
    }
    if on(Rule::IfToMul) {
        out.push(Pass::IfToMul);
    }
    if on(Rule::VerticalKey) || on(Rule::VerticalValue) {
        out.push(Pass::Vertical { key: on(Rule::VerticalKey), value: on(Rule::VerticalValue) });
    }
    if on(Rule::Horizontal) {
        out.push(Pass::Horizontal);
    }
    if on(Rule::Licm) {
        out.push(Pass::Licm);
    }
    if on(Rule::FactorizeLeft) || on(Rule::FactorizeRight) {
        out.push(Pass::Factorize { left: on(Rule::FactorizeLeft), right: on(Rule::FactorizeRight) });
    }
    out
}

/// Elaborate `e` and apply the enabled rules until nothing fires or the pass
/// limit is reached.
pub fn optimize(env: &TypeEnv, e: &Expr, cfg: &RewriteConfig) -> Result<Optimized, TypeError> {
    let (mut cur, ty) = typecheck(env, e)?;
    let passes = passes_for(cfg);
    let mut rw = Rewriter { pass: 0, events: Vec::new() };
    let mut converged = passes.is_empty();
    while !converged && rw.pass < cfg.max_passes.max(1) {
        rw.pass += 1;
        let before = rw.events.len();
        for p in &passes {
            cur = rw.walk(env, cur, *p);
        }
        converged = rw.events.len() == before;
    }
    Ok(Optimized { expr: cur, ty, events: rw.events, passes: rw.pass, converged })
}

fn single_pass(env: &TypeEnv, e: &Expr, p: Pass) -> Expr {
    match typecheck(env, e) {
        Ok((elab, _)) => Rewriter { pass: 1, events: Vec::new() }.walk(env, elab, p),
        Err(_) => e.clone(),
    }
}

/// One bottom-up application of both vertical fusion rules.
pub fn fuse_vertical(env: &TypeEnv, e: &Expr) -> Expr {
    single_pass(env, e, Pass::Vertical { key: true, value: true })
}

pub fn fuse_horizontal(env: &TypeEnv, e: &Expr) -> Expr {
    single_pass(env, e, Pass::Horizontal)
}

pub fn if_to_mul(env: &TypeEnv, e: &Expr) -> Expr {
    single_pass(env, e, Pass::IfToMul)
}

pub fn hoist_invariant(env: &TypeEnv, e: &Expr) -> Expr {
    single_pass(env, e, Pass::Licm)
}

/// One bottom-up application of both factorization directions.
pub fn factorize(env: &TypeEnv, e: &Expr) -> Expr {
    single_pass(env, e, Pass::Factorize { left: true, right: true })
}

#[cfg(test)]
mod tests;
