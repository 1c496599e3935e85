//! A session holds loaded data and persistent `let` bindings, and runs
//! items through parse, frontend lowering, type checking, optimization and
//! evaluation.

use std::fmt;
use std::io::Write;

use sdql_core::front::surface::{block_kind, parse_block};
use sdql_core::front::{convert_layout, to_columnar_query, to_row_query, FrontendError, RelLayout};
use sdql_core::interp::{eval_elaborated, run, EvalError, Environment, EvalMetrics, STEP_BUDGET};
use sdql_core::opt::{optimize, Optimized, RewriteConfig};
use sdql_core::parse::{parse_item, Item, ParseError};
use sdql_core::pretty::pretty;
use sdql_core::syntax::{boolean, expr_of_value, int, subst, value_of_expr, Expr};
use sdql_core::typecheck::{typecheck, TypeEnv, TypeError};
use sdql_core::{Name, Type, Value};
use thiserror::Error;

use crate::io::{dump_value, LoadError, LoadSpec, Loaded, Schema, Semantics};

/// Pipeline stage that failed; each has a fixed exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Usage,
    Load,
    Io,
    Parse,
    Type,
    Runtime,
}

impl Stage {
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Usage | Stage::Load | Stage::Io => 1,
            Stage::Parse => 2,
            Stage::Type => 3,
            Stage::Runtime => 4,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Usage => "usage",
            Stage::Load => "load",
            Stage::Io => "i/o",
            Stage::Parse => "parse",
            Stage::Type => "type",
            Stage::Runtime => "runtime",
        })
    }
}

#[derive(Debug, Error)]
#[error("{stage} error: {msg}")]
pub struct SessionError {
    pub stage: Stage,
    pub msg: String,
}

impl SessionError {
    pub fn new(stage: Stage, msg: impl fmt::Display) -> SessionError {
        SessionError { stage, msg: msg.to_string() }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::new(Stage::Io, e)
    }
}

impl From<ParseError> for SessionError {
    fn from(e: ParseError) -> Self {
        SessionError::new(Stage::Parse, e)
    }
}

impl From<TypeError> for SessionError {
    fn from(e: TypeError) -> Self {
        SessionError::new(Stage::Type, e)
    }
}

impl From<FrontendError> for SessionError {
    fn from(e: FrontendError) -> Self {
        SessionError::new(Stage::Type, format!("{}: {}", e.code, e.msg))
    }
}

impl From<EvalError> for SessionError {
    fn from(e: EvalError) -> Self {
        let stage = if e.is_type_error() { Stage::Type } else { Stage::Runtime };
        SessionError::new(stage, e)
    }
}

impl From<LoadError> for SessionError {
    fn from(e: LoadError) -> Self {
        SessionError::new(Stage::Load, e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Flags {
    /// Print types instead of evaluating.
    pub typecheck_only: bool,
    /// Print the term that is evaluated.
    pub emit_ast: bool,
    /// Evaluate with the small-step machine, printing every reduct.
    pub trace_steps: bool,
    pub metrics: bool,
    /// Print every rewrite the optimizer performs.
    pub explain: bool,
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub loads: Vec<LoadSpec>,
    /// Physical layouts for loaded relations or matrices.
    pub layouts: Vec<(Name, RelLayout)>,
    pub rules: RewriteConfig,
    pub flags: Flags,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig { loads: Vec::new(), layouts: Vec::new(), rules: RewriteConfig::none(), flags: Flags::default() }
    }
}

/// Rewrites queries written against the dictionary view of a relation that
/// is stored in the row or columnar layout.
#[derive(Debug, Clone)]
struct Adapter {
    name: Name,
    target: RelLayout,
    fields: Vec<Name>,
    one: Expr,
}

impl Adapter {
    fn apply(&self, e: &Expr) -> Result<Expr, FrontendError> {
        match self.target {
            RelLayout::Row => to_row_query(e, &self.name, &self.one),
            RelLayout::Columnar => to_columnar_query(e, &self.name, &self.fields, &self.one),
            _ => Ok(e.clone()),
        }
    }
}

pub struct Session {
    config: SessionConfig,
    env: Environment,
    /// Bindings made in type-check-only mode, which have no value.
    declared: Vec<(Name, Type)>,
    adapters: Vec<Adapter>,
}

fn converted_type(loaded: &Loaded, target: &RelLayout) -> Option<Type> {
    if let Some(s) = &loaded.schema {
        let sem = match target {
            RelLayout::Set => Semantics::Set,
            RelLayout::Bag => Semantics::Bag,
            RelLayout::Row => Semantics::RowArray,
            RelLayout::Columnar => Semantics::Columnar,
            RelLayout::Factorized(order) => {
                let mult = if loaded.layout == Some(RelLayout::Set) { Type::BOOL } else { Type::INT };
                return order.iter().rev().try_fold(mult, |acc, a| Some(Type::dict(s.row_type().field(a)?.clone(), acc)));
            }
            _ => return None,
        };
        return Some(Schema { attrs: s.attrs.clone(), semantics: sem }.value_type());
    }
    let mut leaves = Vec::new();
    loaded.ty.value_leaves(&mut leaves);
    let elem = Type::Scalar(*leaves.first()?);
    match target {
        RelLayout::FlatMatrix => Some(Type::dict(Type::record([("row", Type::INT), ("col", Type::INT)]), elem)),
        RelLayout::CurriedMatrix => Some(Type::dict(Type::INT, Type::dict(Type::INT, elem))),
        _ => None,
    }
}

/// Split a program into items at top-level `;`, dropping `//` comments.
pub fn split_items(src: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut cur = String::new();
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                cur.push(c);
                while let Some(d) = chars.next() {
                    cur.push(d);
                    if d == '\\' {
                        if let Some(e) = chars.next() {
                            cur.push(e);
                        }
                    } else if d == '"' {
                        break;
                    }
                }
            }
            '/' if chars.peek() == Some(&'/') => {
                for d in chars.by_ref() {
                    if d == '\n' {
                        cur.push('\n');
                        break;
                    }
                }
            }
            ';' => items.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    items.push(cur);
    items.into_iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

/// `let x = <block>`: the bound name and the block text.
fn let_block(src: &str) -> Option<(&str, &str)> {
    let s = src.trim_start().strip_prefix("let")?;
    if !s.starts_with(char::is_whitespace) {
        return None;
    }
    let s = s.trim_start();
    let end = s.find(|c: char| !(c.is_alphanumeric() || c == '_'))?;
    let (name, rest) = s.split_at(end);
    let rest = rest.trim_start().strip_prefix('=')?;
    if name.is_empty() || rest.starts_with('=') {
        return None;
    }
    block_kind(rest)?;
    Some((name, rest))
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Session, SessionError> {
        let mut s = Session { config, env: Environment::new(), declared: Vec::new(), adapters: Vec::new() };
        for spec in s.config.loads.clone() {
            if s.env.get(&spec.name).is_some() {
                return Err(SessionError::new(Stage::Usage, format!("`{}` is loaded twice", spec.name)));
            }
            let mut loaded = spec.load().map_err(|e| SessionError::new(Stage::Load, format!("{}: {e}", spec.name)))?;
            if let Some((_, target)) = s.config.layouts.iter().find(|(n, _)| *n == spec.name).cloned() {
                loaded = s.relayout(&spec.name, loaded, &target)?;
            }
            s.env.bind(spec.name.clone(), loaded.value, loaded.ty);
        }
        if let Some((n, _)) = s.config.layouts.iter().find(|(n, _)| s.env.get(n).is_none()) {
            return Err(SessionError::new(Stage::Usage, format!("--layout names `{n}`, which is not loaded")));
        }
        Ok(s)
    }

    fn relayout(&mut self, name: &Name, loaded: Loaded, target: &RelLayout) -> Result<Loaded, SessionError> {
        let load_err = |msg: String| SessionError::new(Stage::Load, format!("{name}: {msg}"));
        let source = loaded.layout.clone().ok_or_else(|| load_err("this format has no alternative layouts".into()))?;
        // `dict` names the dictionary encoding, which for a set is the set itself
        if &source == target || (source == RelLayout::Set && *target == RelLayout::Bag) {
            return Ok(loaded);
        }
        let value = convert_layout(&loaded.value, &source, target).map_err(|e| load_err(format!("{}: {}", e.code, e.msg)))?;
        let ty = converted_type(&loaded, target).ok_or_else(|| load_err(format!("cannot store a {source} value as {target}")))?;
        if matches!(target, RelLayout::Row | RelLayout::Columnar) {
            let one = if source == RelLayout::Set { boolean(true) } else { int(1) };
            let fields = loaded.schema.as_ref().map(Schema::names).unwrap_or_default();
            self.adapters.push(Adapter { name: name.clone(), target: target.clone(), fields, one });
        }
        Ok(Loaded { value, ty, layout: Some(target.clone()), schema: loaded.schema })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn bind(&mut self, name: impl Into<Name>, value: Value, ty: Type) {
        let name = name.into();
        self.adapters.retain(|a| a.name != name);
        self.env.bind(name, value, ty);
    }

    pub fn type_env(&self) -> TypeEnv {
        let mut t = self.env.type_env();
        for (n, ty) in &self.declared {
            t.bind(n.clone(), ty.clone());
        }
        t
    }

    /// Parse an item, lowering frontend blocks and applying layout adapters.
    pub fn lower_item(&self, src: &str) -> Result<(Option<Name>, Expr), SessionError> {
        let (name, e) = if let Some((name, block)) = let_block(src) {
            (Some(Name::from(name)), self.lower_block(block)?)
        } else if block_kind(src).is_some() {
            (None, self.lower_block(src)?)
        } else {
            match parse_item(src)? {
                Item::Bind(n, e) => (Some(n), e),
                Item::Expr(e) => (None, e),
            }
        };
        let e = self.adapters.iter().try_fold(e, |e, a| a.apply(&e))?;
        Ok((name, e))
    }

    fn lower_block(&self, src: &str) -> Result<Expr, SessionError> {
        let (kind, body) = block_kind(src).expect("caller checked the prefix");
        Ok(parse_block(kind, body)?.lower(&self.type_env())?)
    }

    pub fn type_of(&self, src: &str) -> Result<Type, SessionError> {
        let (_, e) = self.lower_item(src)?;
        Ok(typecheck(&self.type_env(), &e)?.1)
    }

    /// Optimize with the session's rules, or every rule if none is enabled.
    pub fn optimized(&self, src: &str) -> Result<Optimized, SessionError> {
        let (_, e) = self.lower_item(src)?;
        let cfg = if self.config.rules.rules.is_empty() { RewriteConfig::default() } else { self.config.rules.clone() };
        Ok(optimize(&self.type_env(), &e, &cfg)?)
    }

    /// Run one item, writing its output. Returns the name it bound, if any.
    pub fn exec(&mut self, src: &str, out: &mut dyn Write) -> Result<Option<Name>, SessionError> {
        let (name, e) = self.lower_item(src)?;
        let tenv = self.type_env();
        let flags = self.config.flags;
        let (elab, ty) = typecheck(&tenv, &e)?;
        if flags.typecheck_only {
            match &name {
                Some(n) => {
                    writeln!(out, "{n} : {ty}")?;
                    self.declared.push((n.clone(), ty));
                }
                None => writeln!(out, "{ty}")?,
            }
            return Ok(name);
        }
        let expr = if self.config.rules.rules.is_empty() {
            elab
        } else {
            let o = optimize(&tenv, &e, &self.config.rules)?;
            if flags.explain {
                for ev in &o.events {
                    writeln!(out, "rewrite {} (pass {}): {}  ==>  {}", ev.rule, ev.pass, pretty(&ev.before), pretty(&ev.after))?;
                }
            }
            if let Some(w) = o.warning() {
                eprintln!("warning: {w}");
            }
            o.expr
        };
        if flags.emit_ast {
            writeln!(out, "{}", pretty(&expr))?;
        }
        let value = if flags.trace_steps {
            self.trace(&expr, out)?
        } else {
            let (v, m) = eval_elaborated(&self.env, &expr)?;
            if flags.metrics {
                writeln!(out, "{}", format_metrics(&m))?;
            }
            v
        };
        match &name {
            Some(n) => self.bind(n.clone(), value, ty),
            None => writeln!(out, "{}", dump_value(&value))?,
        }
        Ok(name)
    }

    /// Reduce with the small-step machine after substituting the values of
    /// free variables, printing each reduct on its own line.
    fn trace(&self, e: &Expr, out: &mut dyn Write) -> Result<Value, SessionError> {
        let mut closed = e.clone();
        for x in e.free_vars() {
            let (v, t) = self.env.get(&x).ok_or_else(|| SessionError::new(Stage::Runtime, format!("unbound `{x}`")))?;
            closed = subst(closed, &x, &expr_of_value(v, t));
        }
        let mut failed = None;
        let mut print = |t: &Expr, _: &'static str| {
            if failed.is_none() {
                failed = writeln!(out, "{}", pretty(t)).err();
            }
        };
        let result = run(&closed, STEP_BUDGET, Some(&mut print));
        if let Some(err) = failed {
            return Err(err.into());
        }
        let (v, steps) = result.map_err(|e| SessionError::new(Stage::Runtime, e))?;
        if self.config.flags.metrics {
            writeln!(out, "metrics: steps={steps}")?;
        }
        value_of_expr(&v).ok_or_else(|| SessionError::new(Stage::Runtime, "reduction stopped before a value"))
    }

    /// Run every item of a program in order, stopping at the first error.
    pub fn run_program(&mut self, src: &str, out: &mut dyn Write) -> Result<(), SessionError> {
        for item in split_items(src) {
            self.exec(&item, out)?;
        }
        Ok(())
    }
}

pub fn format_metrics(m: &EvalMetrics) -> String {
    format!(
        "metrics: loop_iterations={} scalar_mults={} dict_allocations={} lookups={}",
        m.loop_iterations, m.scalar_mults, m.dict_allocations, m.lookups
    )
}
