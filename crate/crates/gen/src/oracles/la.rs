//! Random linear algebra expressions over square int matrices `A`, `B` and
//! vectors `u`, `v`, checked against dense arithmetic.

use rand::Rng;
use sdql_core::front::{La, LaLayout};
use sdql_core::interp::Environment;
use sdql_core::parse::parse_type;
use sdql_core::syntax::Expr;
use sdql_core::Value;

use crate::data::{curried_matrix, flat_matrix, sparse_matrix, sparse_vector, vector_value};

type Mat = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Dense {
    Scalar(i64),
    Vector(Vec<i64>),
    Matrix(Mat),
}

#[derive(Debug, Clone)]
pub struct LaDb {
    pub n: i64,
    pub a: Vec<(i64, i64, i64)>,
    pub b: Vec<(i64, i64, i64)>,
    pub u: Vec<(i64, i64)>,
    pub v: Vec<(i64, i64)>,
}

impl LaDb {
    pub fn generate(rng: &mut impl Rng) -> LaDb {
        let n = rng.gen_range(1..=5);
        let d = rng.gen_range(0.1..0.7);
        LaDb {
            n,
            a: sparse_matrix(rng, n, n, d),
            b: sparse_matrix(rng, n, n, d),
            u: sparse_vector(rng, n, d),
            v: sparse_vector(rng, n, d),
        }
    }

    pub fn env(&self, mode: LaLayout) -> Environment {
        let (mat, mt) = match mode {
            LaLayout::Flat => (flat_matrix as fn(&[(i64, i64, i64)]) -> Value, "{ <row: int, col: int> -> int }"),
            LaLayout::Curried => (curried_matrix as fn(&[(i64, i64, i64)]) -> Value, "{ int -> { int -> int } }"),
        };
        let (mt, vt) = (parse_type(mt).unwrap(), parse_type("{ int -> int }").unwrap());
        Environment::new()
            .with("A", mat(&self.a), mt.clone())
            .with("B", mat(&self.b), mt)
            .with("u", vector_value(&self.u), vt.clone())
            .with("v", vector_value(&self.v), vt)
    }

    fn dense(&self, name: &str) -> Dense {
        let n = self.n as usize;
        match name {
            "A" | "B" => {
                let mut m = vec![vec![0; n]; n];
                for &(r, c, x) in if name == "A" { &self.a } else { &self.b } {
                    m[r as usize][c as usize] = x;
                }
                Dense::Matrix(m)
            }
            _ => {
                let mut v = vec![0; n];
                for &(i, x) in if name == "u" { &self.u } else { &self.v } {
                    v[i as usize] = x;
                }
                Dense::Vector(v)
            }
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Scalar,
    Vector,
    Matrix,
}

fn bin(op: fn(Box<La>, Box<La>) -> La, a: La, b: La) -> La {
    La::bin(op, a, b)
}

fn gen(rng: &mut impl Rng, k: Kind, depth: u32) -> La {
    let d = depth.saturating_sub(1);
    let leaf = depth == 0 || rng.gen_ratio(1, 4);
    match k {
        Kind::Scalar => match if leaf { 0 } else { rng.gen_range(0..4) } {
            0 => La::Scalar(Expr::Lit(Value::Int(rng.gen_range(-2..=3)))),
            1 => bin(La::Dot, gen(rng, Kind::Vector, d), gen(rng, Kind::Vector, d)),
            2 => La::un(La::VecSum, gen(rng, Kind::Vector, d)),
            _ => La::un(La::Trace, gen(rng, Kind::Matrix, d)),
        },
        Kind::Vector => match if leaf { 0 } else { rng.gen_range(0..5) } {
            0 => La::var(if rng.gen() { "u" } else { "v" }),
            1 => bin(La::VecAdd, gen(rng, Kind::Vector, d), gen(rng, Kind::Vector, d)),
            2 => bin(La::Scale, gen(rng, Kind::Scalar, d), gen(rng, Kind::Vector, d)),
            3 => bin(La::Hadamard, gen(rng, Kind::Vector, d), gen(rng, Kind::Vector, d)),
            _ => bin(La::MatVec, gen(rng, Kind::Matrix, d), gen(rng, Kind::Vector, d)),
        },
        Kind::Matrix => match if leaf { 0 } else { rng.gen_range(0..6) } {
            0 => La::var(if rng.gen() { "A" } else { "B" }),
            1 => bin(La::MatAdd, gen(rng, Kind::Matrix, d), gen(rng, Kind::Matrix, d)),
            2 => bin(La::Scale, gen(rng, Kind::Scalar, d), gen(rng, Kind::Matrix, d)),
            3 => bin(La::Hadamard, gen(rng, Kind::Matrix, d), gen(rng, Kind::Matrix, d)),
            4 => La::un(La::Transpose, gen(rng, Kind::Matrix, d)),
            _ => bin(La::MatMul, gen(rng, Kind::Matrix, d), gen(rng, Kind::Matrix, d)),
        },
    }
}

/// A random scalar-, vector- or matrix-valued expression.
pub fn gen_query(rng: &mut impl Rng) -> La {
    let k = [Kind::Scalar, Kind::Vector, Kind::Matrix][rng.gen_range(0..3)];
    gen(rng, k, 3)
}

fn zip(a: &[i64], b: &[i64], f: fn(i64, i64) -> i64) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

/// Dense evaluation of `q`.
pub fn eval_dense(q: &La, db: &LaDb) -> Dense {
    use Dense::*;
    let ev = |q: &La| eval_dense(q, db);
    match q {
        La::Var(n) => db.dense(n),
        La::Scalar(Expr::Lit(Value::Int(x))) => Scalar(*x),
        La::VecAdd(a, b) | La::MatAdd(a, b) | La::Hadamard(a, b) => {
            let f: fn(i64, i64) -> i64 = if matches!(q, La::Hadamard(..)) { |x, y| x * y } else { |x, y| x + y };
            match (ev(a), ev(b)) {
                (Vector(x), Vector(y)) => Vector(zip(&x, &y, f)),
                (Matrix(x), Matrix(y)) => Matrix(x.iter().zip(&y).map(|(r, s)| zip(r, s, f)).collect()),
                other => panic!("ill-shaped {other:?}"),
            }
        }
        La::Scale(s, t) => {
            let Scalar(k) = ev(s) else { panic!("scale by a non-scalar") };
            match ev(t) {
                Vector(x) => Vector(x.iter().map(|v| k * v).collect()),
                Matrix(m) => Matrix(m.iter().map(|r| r.iter().map(|v| k * v).collect()).collect()),
                Scalar(x) => Scalar(k * x),
            }
        }
        La::Dot(a, b) => match (ev(a), ev(b)) {
            (Vector(x), Vector(y)) => Scalar(x.iter().zip(&y).map(|(p, q)| p * q).sum()),
            other => panic!("ill-shaped {other:?}"),
        },
        La::VecSum(a) => match ev(a) {
            Vector(x) => Scalar(x.iter().sum()),
            other => panic!("ill-shaped {other:?}"),
        },
        La::Trace(a) => match ev(a) {
            Matrix(m) => Scalar((0..m.len()).map(|i| m[i][i]).sum()),
            other => panic!("ill-shaped {other:?}"),
        },
        La::Transpose(a) => match ev(a) {
            Matrix(m) => Matrix((0..m.len()).map(|i| (0..m.len()).map(|j| m[j][i]).collect()).collect()),
            other => panic!("ill-shaped {other:?}"),
        },
        La::MatMul(a, b) => match (ev(a), ev(b)) {
            (Matrix(x), Matrix(y)) => Matrix(matmul(&x, &y)),
            other => panic!("ill-shaped {other:?}"),
        },
        La::MatVec(a, b) => match (ev(a), ev(b)) {
            (Matrix(m), Vector(x)) => Vector(m.iter().map(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum()).collect()),
            other => panic!("ill-shaped {other:?}"),
        },
        other => panic!("not generated: {other:?}"),
    }
}

/// The sparse encoding of a dense result in `mode`: zero entries and empty
/// rows are absent.
pub fn encode(d: &Dense, mode: LaLayout) -> Value {
    let nz = |v: &[i64]| -> Vec<(i64, i64)> {
        v.iter().enumerate().filter(|(_, x)| **x != 0).map(|(i, x)| (i as i64, *x)).collect()
    };
    match d {
        Dense::Scalar(x) => Value::Int(*x),
        Dense::Vector(v) => vector_value(&nz(v)),
        Dense::Matrix(m) => {
            let entries: Vec<(i64, i64, i64)> =
                m.iter().enumerate().flat_map(|(i, r)| nz(r).into_iter().map(move |(j, x)| (i as i64, j, x))).collect();
            match mode {
                LaLayout::Flat => flat_matrix(&entries),
                LaLayout::Curried => curried_matrix(&entries),
            }
        }
    }
}
