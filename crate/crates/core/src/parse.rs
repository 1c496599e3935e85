//! Lexer and recursive-descent parser for the concrete syntax.
//!
//! Precedence, loosest first: `||`, `&&`, comparisons, `+`, `*` and `/`,
//! unary `!`, then postfix lookup `e(k)` and field access `e.f`. The prefix
//! forms `let`, `sum` and `if` extend as far to the right as possible.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{self, CmpOp, Expr};
use crate::types::{Layout, ScalarType, TaggedKind, Type};
use crate::value::{Dict, Value};
use crate::Name;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    pub fn code(&self) -> &'static str {
        "syntax-error"
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax-error at {}:{}: {}", self.line, self.col, self.msg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(Name),
    Int(i64),
    Real(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(n) => write!(f, "`{n}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Real(r) => write!(f, "`{r}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest symbols first.
const SYMBOLS: &[&str] = &[
    "[|", "|]", "_{", "->", "<-", "==", "!=", "<=", ">=", "&&", "||", "{", "}", "(", ")", "[", "]",
    "<", ">", "=", ",", ".", "*", "+", "/", "!", ":", ";",
];

const KEYWORDS: &[&str] = &[
    "let", "in", "sum", "if", "then", "else", "true", "false", "inf", "promote", "dom", "range",
    "concat",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s) || builtin_conversion(s).is_some()
}

/// `to_T` / `from_T` conversion names: (is_to, target).
fn builtin_conversion(s: &str) -> Option<(bool, ScalarType)> {
    let (to, rest) = if let Some(r) = s.strip_prefix("to_") {
        (true, r)
    } else {
        (false, s.strip_prefix("from_")?)
    };
    if rest == "nat" {
        return Some((to, ScalarType::Nat));
    }
    TaggedKind::from_fn_suffix(rest).map(|k| (to, ScalarType::Tagged(k)))
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let start = i;
        let negative = c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit() || *d == 'i');
        if c.is_ascii_digit() || negative {
            if negative {
                i += 1;
            }
            if chars[i] == 'i' {
                if chars[i..].starts_with(&['i', 'n', 'f']) && !chars.get(i + 3).is_some_and(|c| is_ident_char(*c)) {
                    i += 3;
                    col += i - start;
                    out.push(Token { tok: Tok::Real(f64::NEG_INFINITY), line: tl, col: tc });
                    continue;
                }
                return Err(err(tl, tc, "unexpected `-`".to_string()));
            }
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_real = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_real = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = if is_real {
                Tok::Real(text.parse().map_err(|_| err(tl, tc, format!("bad number {text}")))?)
            } else {
                Tok::Int(text.parse().map_err(|_| err(tl, tc, format!("integer out of range: {text}")))?)
            };
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        if c == '"' {
            i += 1;
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(err(tl, tc, "unterminated string literal".to_string())),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let e = chars.get(i + 1).copied();
                        s.push(match e {
                            Some('n') => '\n',
                            Some('t') => '\t',
                            Some('r') => '\r',
                            Some('"') => '"',
                            Some('\\') => '\\',
                            _ => return Err(err(line, col, "unknown escape in string literal".to_string())),
                        });
                        i += 2;
                    }
                    Some('\n') => return Err(err(tl, tc, "newline in string literal".to_string())),
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            col += i - start;
            out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            continue;
        }
        if c == '_' && chars.get(i + 1) == Some(&'{') {
            i += 2;
            col += 2;
            out.push(Token { tok: Tok::Sym("_{"), line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && is_ident_char(chars[i]) && !(chars[i] == '_' && chars.get(i + 1) == Some(&'{')) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(Name::from(text.as_str())), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => return Err(err(tl, tc, format!("unknown token `{c}`"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// A top-level REPL/script item.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    /// `let x = e` with no body: a persistent binding.
    Bind(Name, Expr),
    Expr(Expr),
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Inside a record literal field, where `>` closes the record.
    no_gt: bool,
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parse a REPL line: a bare `let x = e` becomes a binding.
pub fn parse_item(src: &str) -> Result<Item, ParseError> {
    let mut p = Parser::new(src)?;
    if p.peek_ident("let") {
        let save = p.pos;
        p.pos += 1;
        let name = p.ident()?;
        p.expect("=")?;
        let e = p.expr()?;
        if p.at_eof() {
            return Ok(Item::Bind(name, e));
        }
        p.pos = save;
    }
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(Item::Expr(e))
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser::from_tokens(lex(src)?))
    }

    pub fn from_tokens(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0, no_gt: false }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn error(&self, msg: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, col: t.col, msg: msg.into() }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        self.error(format!("expected {what}, found {}", self.peek()))
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    pub fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    pub fn peek_ident(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if &**x == s)
    }

    pub fn eat_ident(&mut self, s: &str) -> bool {
        if self.peek_ident(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_eof(&self) -> Result<(), ParseError> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// A non-keyword identifier.
    pub fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(n) if !is_keyword(&n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn nested<T>(&mut self, f: impl FnOnce(&mut Self) -> Result<T, ParseError>) -> Result<T, ParseError> {
        let saved = core::mem::replace(&mut self.no_gt, false);
        let r = f(self);
        self.no_gt = saved;
        r
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek_ident("let") {
            self.bump();
            let x = self.ident()?;
            self.expect("=")?;
            let e1 = self.expr()?;
            self.eat_ident("in");
            let e2 = self.expr()?;
            return Ok(Expr::Let(x, Box::new(e1), Box::new(e2)));
        }
        if self.peek_ident("sum") {
            self.bump();
            let tag = if self.eat("<") {
                let t = self.ident_any()?;
                let k = TaggedKind::from_type_name(&t).ok_or_else(|| self.error(format!("unknown semiring `{t}`")))?;
                self.expect(">")?;
                Some(k)
            } else {
                None
            };
            self.expect("(")?;
            let (x, src) = self.nested(|p| {
                let x = p.ident()?;
                if !p.eat("<-") && !p.eat_ident("in") {
                    return Err(p.unexpected("`in` or `<-`"));
                }
                let src = p.expr()?;
                p.expect(")")?;
                Ok((x, src))
            })?;
            let body = self.expr()?;
            return Ok(Expr::Sum { var: x, src: Box::new(src), body: Box::new(body), tag });
        }
        if self.peek_ident("if") {
            self.bump();
            self.expect("(")?;
            let c = self.nested(|p| {
                let c = p.expr()?;
                p.expect(")")?;
                Ok(c)
            })?;
            self.eat_ident("then");
            let t = self.expr()?;
            let e = if self.eat_ident("else") { Some(Box::new(self.expr()?)) } else { None };
            return Ok(Expr::If(Box::new(c), Box::new(t), e));
        }
        self.or()
    }

    fn ident_any(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(n) => {
                self.bump();
                Ok(n)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn or(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.and()?;
        while self.eat("||") {
            let r = self.and()?;
            l = syntax::add(l, r);
        }
        Ok(l)
    }

    fn and(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.cmp()?;
        while self.eat("&&") {
            let r = self.cmp()?;
            l = syntax::mul(l, r);
        }
        Ok(l)
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let l = self.sum_level()?;
        let (op, swap) = match self.peek() {
            Tok::Sym("==") => (CmpOp::Eq, false),
            Tok::Sym("!=") => (CmpOp::Ne, false),
            Tok::Sym("<") => (CmpOp::Lt, false),
            Tok::Sym("<=") => (CmpOp::Le, false),
            Tok::Sym(">") if !self.no_gt => (CmpOp::Lt, true),
            Tok::Sym(">=") if !self.no_gt => (CmpOp::Le, true),
            _ => return Ok(l),
        };
        self.bump();
        let r = self.sum_level()?;
        Ok(if swap { syntax::cmp(op, r, l) } else { syntax::cmp(op, l, r) })
    }

    fn sum_level(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.product()?;
        while self.eat("+") {
            let r = self.product()?;
            l = syntax::add(l, r);
        }
        Ok(l)
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut l = self.unary()?;
        loop {
            if self.eat("*") {
                let r = self.unary()?;
                l = syntax::mul(l, r);
            } else if self.eat("/") {
                let r = self.unary()?;
                l = Expr::Div(Box::new(l), Box::new(r));
            } else {
                return Ok(l);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        if self.peek_ident("let") || self.peek_ident("sum") || self.peek_ident("if") {
            return self.expr();
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            if self.eat("(") {
                let k = self.nested(|p| {
                    let k = p.expr()?;
                    p.expect(")")?;
                    Ok(k)
                })?;
                e = syntax::lookup(e, k);
            } else if self.eat(".") {
                let f = self.ident()?;
                e = Expr::Field(Box::new(e), f);
            } else {
                return Ok(e);
            }
        }
    }

    /// `( e )` as the argument of a builtin; reports whether the argument
    /// was a bare literal token.
    fn call_arg(&mut self) -> Result<(Expr, bool), ParseError> {
        self.expect("(")?;
        let literal = matches!(self.peek(), Tok::Int(_) | Tok::Real(_))
            || (self.peek_ident("inf"))
            || matches!(self.peek(), Tok::Ident(n) if &**n == "true" || &**n == "false");
        let literal = literal && matches!(self.peek_at(1), Tok::Sym(")"));
        self.nested(|p| {
            let e = p.expr()?;
            p.expect(")")?;
            Ok((e, literal))
        })
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(syntax::int(i))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(syntax::real(r))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(syntax::string(&s))
            }
            Tok::Sym("(") => {
                self.bump();
                self.nested(|p| {
                    let e = p.expr()?;
                    p.expect(")")?;
                    Ok(e)
                })
            }
            Tok::Sym("{") => {
                self.bump();
                self.nested(|p| p.brace_body())
            }
            Tok::Sym("[|") => {
                self.bump();
                self.nested(|p| p.array_body())
            }
            Tok::Sym("<") => {
                self.bump();
                self.record_body()
            }
            Tok::Ident(n) => self.ident_primary(&n),
            _ => Err(self.unexpected("expression")),
        }
    }

    fn ident_primary(&mut self, n: &str) -> Result<Expr, ParseError> {
        match n {
            "true" | "false" => {
                self.bump();
                Ok(syntax::boolean(n == "true"))
            }
            "inf" => {
                self.bump();
                Ok(syntax::real(f64::INFINITY))
            }
            "promote" => {
                self.bump();
                self.expect("_{")?;
                let from = self.scalar_type()?;
                self.expect(",")?;
                let to = self.scalar_type()?;
                self.expect("}")?;
                let (e, _) = self.call_arg()?;
                Ok(Expr::Promote(from, to, Box::new(e)))
            }
            "dom" => {
                self.bump();
                let (e, _) = self.call_arg()?;
                Ok(syntax::sum("x", e, syntax::singleton(syntax::key_of("x"), syntax::boolean(true))))
            }
            "range" => {
                self.bump();
                let (e, literal) = self.call_arg()?;
                match (&e, literal) {
                    (Expr::Lit(Value::Int(n)), true) => Ok(Expr::DictLit {
                        entries: (0..*n).map(|i| (syntax::int(i), syntax::boolean(true))).collect(),
                        layout: Layout::Hash,
                    }),
                    _ => Ok(Expr::Range(Box::new(e))),
                }
            }
            "concat" => {
                self.bump();
                self.expect("(")?;
                self.nested(|p| {
                    let a = p.expr()?;
                    p.expect(",")?;
                    let b = p.expr()?;
                    p.expect(")")?;
                    Ok(syntax::concat(a, b))
                })
            }
            _ => {
                if let Some((to, target)) = builtin_conversion(n) {
                    self.bump();
                    let (e, literal) = self.call_arg()?;
                    if to && literal {
                        if let Some(v) = fold_conversion(&e, target) {
                            return Ok(Expr::Lit(v));
                        }
                    }
                    return Ok(if to { Expr::Wrap(target, Box::new(e)) } else { Expr::Unwrap(target, Box::new(e)) });
                }
                Ok(Expr::Var(self.ident()?))
            }
        }
    }

    /// After `{`: empty dictionary, dictionary literal or set literal.
    fn brace_body(&mut self) -> Result<Expr, ParseError> {
        if self.eat("}") {
            if self.eat("_{") {
                let k = self.ty()?;
                self.expect(",")?;
                let v = self.ty()?;
                self.expect("}")?;
                return Ok(Expr::EmptyDict(Some(Type::dict(k, v))));
            }
            return Ok(Expr::EmptyDict(None));
        }
        let first = self.expr()?;
        let mut entries = Vec::new();
        if self.eat("->") {
            let v = self.expr()?;
            entries.push((first, v));
            while self.eat(",") {
                let k = self.expr()?;
                self.expect("->")?;
                let v = self.expr()?;
                entries.push((k, v));
            }
        } else {
            entries.push((first, syntax::boolean(true)));
            while self.eat(",") {
                entries.push((self.expr()?, syntax::boolean(true)));
            }
        }
        self.expect("}")?;
        Ok(Expr::DictLit { entries, layout: Layout::Hash })
    }

    fn array_body(&mut self) -> Result<Expr, ParseError> {
        if self.eat("|]") {
            if self.eat("_{") {
                let t = self.ty()?;
                self.expect("}")?;
                return Ok(Expr::EmptyDict(Some(Type::array(t))));
            }
            return Ok(Expr::EmptyDict(None));
        }
        let mut entries = Vec::new();
        loop {
            let e = self.expr()?;
            entries.push((syntax::int(entries.len() as i64), e));
            if !self.eat(",") {
                break;
            }
        }
        self.expect("|]")?;
        Ok(Expr::DictLit { entries, layout: Layout::Dense })
    }

    fn record_body(&mut self) -> Result<Expr, ParseError> {
        let saved = core::mem::replace(&mut self.no_gt, true);
        let r = (|| {
            let mut fs: Vec<(Name, Expr)> = Vec::new();
            if !self.is_sym(">") {
                loop {
                    let n = self.ident()?;
                    if fs.iter().any(|(m, _)| *m == n) {
                        return Err(self.error(format!("duplicate field `{n}`")));
                    }
                    self.expect("=")?;
                    fs.push((n, self.expr()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(">")?;
            Ok(Expr::Record(fs))
        })();
        self.no_gt = saved;
        r
    }

    pub fn scalar_type(&mut self) -> Result<ScalarType, ParseError> {
        let n = self.ident_any()?;
        scalar_type_named(&n).ok_or_else(|| self.error(format!("unknown scalar type `{n}`")))
    }

    pub fn ty(&mut self) -> Result<Type, ParseError> {
        if self.eat("{") {
            let k = self.ty()?;
            if self.eat("->") {
                let v = self.ty()?;
                self.expect("}")?;
                return Ok(Type::dict(k, v));
            }
            self.expect("}")?;
            return Ok(Type::set(k));
        }
        if self.eat("[|") {
            let v = self.ty()?;
            self.expect("|]")?;
            return Ok(Type::array(v));
        }
        if self.eat("<") {
            let mut fs: Vec<(Name, Type)> = Vec::new();
            if !self.is_sym(">") {
                loop {
                    let n = self.ident()?;
                    if fs.iter().any(|(m, _)| *m == n) {
                        return Err(self.error(format!("duplicate field `{n}`")));
                    }
                    self.expect(":")?;
                    fs.push((n, self.ty()?));
                    if !self.eat(",") {
                        break;
                    }
                }
            }
            self.expect(">")?;
            return Ok(Type::Record(fs));
        }
        Ok(Type::Scalar(self.scalar_type()?))
    }
}

pub fn scalar_type_named(n: &str) -> Option<ScalarType> {
    Some(match n {
        "bool" => ScalarType::Bool,
        "int" => ScalarType::Int,
        "real" | "double" => ScalarType::Real,
        "string" => ScalarType::Str,
        "nat" => ScalarType::Nat,
        other => ScalarType::Tagged(TaggedKind::from_type_name(other)?),
    })
}

fn fold_conversion(e: &Expr, target: ScalarType) -> Option<Value> {
    match (e, target) {
        (Expr::Lit(Value::Real(x)), ScalarType::Tagged(k)) if k.in_domain(*x) => Some(Value::Tagged(k, *x)),
        (Expr::Lit(Value::Int(i)), ScalarType::Nat) if *i >= 0 => Some(Value::Nat(*i as u64)),
        _ => None,
    }
}

/// Parse canonical value text (as printed by `Display for Value`). An empty
/// `{ }` is a hash dictionary and `[| |]` a dense one.
pub fn parse_value(src: &str) -> Result<Value, ParseError> {
    let mut p = Parser::new(src)?;
    let v = p.value()?;
    p.expect_eof()?;
    Ok(v)
}

impl Parser {
    pub fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Value::Int(i))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Value::Real(r))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Value::Str(Arc::from(s.as_str())))
            }
            Tok::Ident(n) if &*n == "true" || &*n == "false" => {
                self.bump();
                Ok(Value::Bool(&*n == "true"))
            }
            Tok::Ident(n) if &*n == "inf" => {
                self.bump();
                Ok(Value::Real(f64::INFINITY))
            }
            Tok::Ident(n) if builtin_conversion(&n).is_some_and(|(to, _)| to) => {
                let (_, target) = builtin_conversion(&n).expect("checked");
                self.bump();
                self.expect("(")?;
                let x = self.value()?;
                self.expect(")")?;
                match (x, target) {
                    (Value::Real(r), ScalarType::Tagged(k)) if k.in_domain(r) => Ok(Value::Tagged(k, r)),
                    (Value::Int(i), ScalarType::Nat) if i >= 0 => Ok(Value::Nat(i as u64)),
                    _ => Err(self.error(format!("value outside the domain of `{n}`"))),
                }
            }
            Tok::Sym("<") => {
                self.bump();
                let mut fs: Vec<(Name, Value)> = Vec::new();
                if !self.is_sym(">") {
                    loop {
                        let n = self.ident()?;
                        self.expect("=")?;
                        fs.push((n, self.value()?));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect(">")?;
                Ok(Value::Record(Arc::new(fs)))
            }
            Tok::Sym("{") => {
                self.bump();
                let mut m = BTreeMap::new();
                if !self.is_sym("}") {
                    loop {
                        let k = self.value()?;
                        let v = if self.eat("->") { self.value()? } else { Value::Bool(true) };
                        crate::semiring::insert_add(&mut m, crate::value::canonicalize(&k), v)
                            .map_err(|e| self.error(e.to_string()))?;
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("}")?;
                Ok(Value::Dict(Arc::new(Dict::Hash(m))))
            }
            Tok::Sym("[|") => {
                self.bump();
                let mut xs = Vec::new();
                if !self.is_sym("|]") {
                    loop {
                        xs.push(self.value()?);
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
                self.expect("|]")?;
                Ok(Value::array(xs))
            }
            _ => Err(self.unexpected("value")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn dictionary_literal() {
        assert_eq!(
            p(r#"{ "a" -> 2, "b" -> 3 }"#),
            Expr::DictLit {
                entries: alloc::vec![(string("a"), int(2)), (string("b"), int(3))],
                layout: Layout::Hash
            }
        );
    }

    #[test]
    fn dom_desugars_to_sum() {
        assert_eq!(p("dom(e)"), sum("x", var("e"), singleton(key_of("x"), boolean(true))));
    }

    #[test]
    fn array_literal_is_dense() {
        assert_eq!(
            p("[| 7, 8 |]"),
            Expr::DictLit {
                entries: alloc::vec![(int(0), int(7)), (int(1), int(8))],
                layout: Layout::Dense
            }
        );
    }

    #[test]
    fn set_and_range() {
        assert_eq!(p("{1, 2}"), p("{1 -> true, 2 -> true}"));
        assert_eq!(p("range(3)"), p("{0 -> true, 1 -> true, 2 -> true}"));
        assert_eq!(p("range(n)"), Expr::Range(alloc::boxed::Box::new(var("n"))));
    }

    #[test]
    fn typed_empty_dictionary() {
        assert_eq!(p("{ }_{int,real}"), empty(Some(Type::dict(Type::INT, Type::REAL))));
        assert_eq!(p("[| |]_{int}"), empty(Some(Type::array(Type::INT))));
        assert_eq!(p("{ }"), empty(None));
    }

    #[test]
    fn boolean_connectives_are_semiring_ops() {
        assert_eq!(p("a && b || c"), add(mul(var("a"), var("b")), var("c")));
        // && binds looser than comparison
        assert_eq!(
            p("x == 1 && y <= 2"),
            mul(cmp(CmpOp::Eq, var("x"), int(1)), cmp(CmpOp::Le, var("y"), int(2)))
        );
        assert_eq!(p("a >= b"), cmp(CmpOp::Le, var("b"), var("a")));
    }

    #[test]
    fn precedence_and_postfix() {
        assert_eq!(p("a + b * c"), add(var("a"), mul(var("b"), var("c"))));
        assert_eq!(p("f(x.key).a"), field(lookup(var("f"), key_of("x")), "a"));
        assert_eq!(p("x * -3"), mul(var("x"), int(-3)));
    }

    #[test]
    fn prefix_forms_extend_right() {
        assert_eq!(
            p("sum(x in d) x.val + 1"),
            sum("x", var("d"), add(val_of("x"), int(1)))
        );
        assert_eq!(
            p("a * sum(y <- d) y.val"),
            mul(var("a"), sum("y", var("d"), val_of("y")))
        );
        assert_eq!(p("let x = 1 x"), p("let x = 1 in x"));
        assert_eq!(p("if (c) 1 else 2"), p("if (c) then 1 else 2"));
        assert_eq!(p("if (c) then 1"), if_then(var("c"), int(1), None));
    }

    #[test]
    fn records_close_on_gt() {
        assert_eq!(
            p("{ <a = 1, b = x.key> -> 1 }"),
            singleton(record([("a", int(1)), ("b", key_of("x"))]), int(1))
        );
        assert_eq!(p("<a = x < y>"), record([("a", cmp(CmpOp::Lt, var("x"), var("y")))]));
        assert_eq!(p("<a = (x > y)>"), record([("a", cmp(CmpOp::Lt, var("y"), var("x")))]));
    }

    #[test]
    fn conversions_and_promotion() {
        assert_eq!(p("to_minsum(3.0)"), Expr::Lit(Value::Tagged(TaggedKind::MinSum, 3.0)));
        assert_eq!(p("to_minsum((3.0))"), Expr::Wrap(ScalarType::Tagged(TaggedKind::MinSum), alloc::boxed::Box::new(real(3.0))));
        assert_eq!(p("to_nat(4)"), Expr::Lit(Value::Nat(4)));
        assert_eq!(
            p("promote_{bool,real}(true)"),
            Expr::Promote(ScalarType::Bool, ScalarType::Real, alloc::boxed::Box::new(boolean(true)))
        );
        assert_eq!(
            p("sum<max_sum>(x in d) x.val"),
            Expr::Sum {
                var: "x".into(),
                src: alloc::boxed::Box::new(var("d")),
                body: alloc::boxed::Box::new(val_of("x")),
                tag: Some(TaggedKind::MaxSum)
            }
        );
    }

    #[test]
    fn example_five_parses() {
        let src = r#"
sum(v in Variants)
  sum(g in Genes)
    if(g.key.contig==v.key.contig&&g.key.start<=v.key.start&&g.key.end>=v.key.start)
      sum(c in v.key.genotypes)
        { <sample = c.key.sample, gene = g.key.name, burden = c.key.call>
          -> g.val * c.val * v.val }
    else
      { }
"#;
        let e = p(src);
        assert!(matches!(e, Expr::Sum { .. }));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("{ 1 -> }").unwrap_err();
        assert_eq!((e.line, e.col), (1, 8));
        let e = parse("1 $ 2").unwrap_err();
        assert!(e.msg.contains("unknown token"));
        assert_eq!(e.code(), "syntax-error");
    }

    #[test]
    fn types() {
        assert_eq!(parse_type("{ string -> <c: double> }").unwrap(), Type::dict(Type::STRING, Type::record([("c", Type::REAL)])));
        assert_eq!(parse_type("{ int }").unwrap(), Type::set(Type::INT));
        assert_eq!(parse_type("[| min_sum |]").unwrap(), Type::array(Type::Scalar(ScalarType::Tagged(TaggedKind::MinSum))));
    }

    #[test]
    fn value_text() {
        let v = parse_value(r#"{ "a" -> <c=8.0>, "b" -> <c=12.0> }"#).unwrap();
        assert_eq!(crate::value::dump_value(&v), r#"{ "a" -> <c=8.0>, "b" -> <c=12.0> }"#);
        assert_eq!(parse_value("[| 1, 0 |]").unwrap(), Value::array(alloc::vec![Value::Int(1), Value::Int(0)]));
        assert_eq!(parse_value("to_maxmin(-inf)").unwrap(), Value::Tagged(TaggedKind::MaxMin, f64::NEG_INFINITY));
    }

    #[test]
    fn items() {
        assert_eq!(parse_item("let x = 3").unwrap(), Item::Bind("x".into(), int(3)));
        assert_eq!(parse_item("let x = 3 in x").unwrap(), Item::Expr(let_in("x", int(3), var("x"))));
    }
}
