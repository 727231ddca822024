//! Polynomial expressions over the complex numbers.
//!
//! Expressions are immutable DAGs: subterms are shared through [`Arc`], and
//! differentiation is structural with memoization on node identity so shared
//! subterms keep sharing their derivatives. Square systems built from these
//! expressions are compiled once into evaluation tapes (see [`SystemSpec`]).

mod system;
mod tape;

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use system::{
    randomize_equations, randomize_square, SeedPair, SystemSpec, WellConstrainedReport,
    DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL,
};
pub use tape::{Scratch, Tape};

pub type C64 = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("evaluation produced a non-finite value")]
    EvaluationOverflow,
    #[error("system is not square: {equations} equations in {unknowns} unknowns")]
    NotSquare { equations: usize, unknowns: usize },
    #[error("expression references undeclared symbol {0:?}")]
    UndeclaredSymbol(Symbol),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("random mixing matrix was rank deficient after {attempts} draws")]
    RandomMatrixSingular { attempts: usize },
    #[error("cannot mix {available} equations down to {requested}")]
    BadRandomization { available: usize, requested: usize },
}

/// An unknown `x_i` or a parameter `z_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Var(usize),
    Param(usize),
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(C64),
    Sym(Symbol),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Neg(Expr),
    Pow(Expr, u32),
}

/// Shared handle to an expression node.
#[derive(Clone)]
pub struct Expr(pub(crate) Arc<Node>);

impl Expr {
    fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(c: impl Into<C64>) -> Self {
        Self::from_node(Node::Const(c.into()))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(i: usize) -> Self {
        Self::from_node(Node::Sym(Symbol::Var(i)))
    }

    pub fn param(j: usize) -> Self {
        Self::from_node(Node::Sym(Symbol::Param(j)))
    }

    pub fn symbol(s: Symbol) -> Self {
        Self::from_node(Node::Sym(s))
    }

    pub(crate) fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn as_const(&self) -> Option<C64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(C64::new(0.0, 0.0))
    }

    fn is_one(&self) -> bool {
        self.as_const() == Some(C64::new(1.0, 0.0))
    }

    pub fn pow(&self, k: u32) -> Expr {
        match k {
            0 => Expr::one(),
            1 => self.clone(),
            _ => match self.as_const() {
                Some(c) => Expr::constant(c.powu(k)),
                None => Self::from_node(Node::Pow(self.clone(), k)),
            },
        }
    }

    pub fn square(&self) -> Expr {
        self.pow(2)
    }

    /// Sum of a sequence, folding constants away.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc + t)
    }

    /// Evaluates by direct recursion, without compiling a tape.
    pub fn eval_direct(&self, x: &[C64], z: &[C64]) -> C64 {
        match self.node() {
            Node::Const(c) => *c,
            Node::Sym(Symbol::Var(i)) => x[*i],
            Node::Sym(Symbol::Param(j)) => z[*j],
            Node::Add(a, b) => a.eval_direct(x, z) + b.eval_direct(x, z),
            Node::Mul(a, b) => a.eval_direct(x, z) * b.eval_direct(x, z),
            Node::Neg(a) => -a.eval_direct(x, z),
            Node::Pow(a, k) => a.eval_direct(x, z).powu(*k),
        }
    }

    /// Partial derivative with respect to one symbol.
    pub fn diff(&self, wrt: Symbol) -> Expr {
        Differentiator::new(wrt).diff(self)
    }

    /// Every symbol referenced by the expression, deduplicated and sorted.
    pub fn symbols(&self) -> Vec<Symbol> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        collect_symbols(self, &mut seen, &mut out);
        out.sort();
        out.dedup();
        out
    }
}

fn collect_symbols(e: &Expr, seen: &mut HashMap<usize, ()>, out: &mut Vec<Symbol>) {
    if seen.insert(e.id(), ()).is_some() {
        return;
    }
    match e.node() {
        Node::Const(_) => {}
        Node::Sym(s) => out.push(*s),
        Node::Add(a, b) | Node::Mul(a, b) => {
            collect_symbols(a, seen, out);
            collect_symbols(b, seen, out);
        }
        Node::Neg(a) | Node::Pow(a, _) => collect_symbols(a, seen, out),
    }
}

/// Memoized structural differentiation with respect to one symbol.
///
/// Reusing one differentiator across several expressions shares the
/// derivatives of their common subterms.
pub struct Differentiator {
    wrt: Symbol,
    memo: HashMap<usize, Expr>,
    // keeps memo keys alive so node addresses cannot be reused
    pinned: Vec<Expr>,
}

impl Differentiator {
    pub fn new(wrt: Symbol) -> Self {
        Self {
            wrt,
            memo: HashMap::new(),
            pinned: Vec::new(),
        }
    }

    pub fn diff(&mut self, e: &Expr) -> Expr {
        if let Some(d) = self.memo.get(&e.id()) {
            return d.clone();
        }
        let d = match e.node() {
            Node::Const(_) => Expr::zero(),
            Node::Sym(s) => {
                if *s == self.wrt {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(a, b) => self.diff(a) + self.diff(b),
            Node::Mul(a, b) => {
                let da = self.diff(a);
                let db = self.diff(b);
                da * b + a * db
            }
            Node::Neg(a) => -self.diff(a),
            Node::Pow(a, k) => {
                let da = self.diff(a);
                if da.is_zero() {
                    Expr::zero()
                } else {
                    Expr::constant(*k as f64) * a.pow(k - 1) * da
                }
            }
        };
        self.memo.insert(e.id(), d.clone());
        self.pinned.push(e.clone());
        d
    }
}

/// Jacobian table `out[i][j] = d exprs[i] / d wrt[j]`.
pub fn jacobian_exprs(exprs: &[Expr], wrt: &[Symbol]) -> Vec<Vec<Expr>> {
    let mut table = vec![Vec::with_capacity(wrt.len()); exprs.len()];
    for &s in wrt {
        let mut d = Differentiator::new(s);
        for (row, e) in table.iter_mut().zip(exprs) {
            row.push(d.diff(e));
        }
    }
    table
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => write!(f, "{c}"),
            Node::Sym(Symbol::Var(i)) => write!(f, "x{i}"),
            Node::Sym(Symbol::Param(j)) => write!(f, "z{j}"),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Mul(a, b) => write!(f, "{a:?}*{b:?}"),
            Node::Neg(a) => write!(f, "-{a:?}"),
            Node::Pow(a, k) => write!(f, "{a:?}^{k}"),
        }
    }
}

fn add(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x + y),
        _ if a.is_zero() => b.clone(),
        _ if b.is_zero() => a.clone(),
        _ => Expr::from_node(Node::Add(a.clone(), b.clone())),
    }
}

fn mul(a: &Expr, b: &Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::constant(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::zero(),
        _ if a.is_one() => b.clone(),
        _ if b.is_one() => a.clone(),
        _ => Expr::from_node(Node::Mul(a.clone(), b.clone())),
    }
}

fn neg(a: &Expr) -> Expr {
    match a.node() {
        Node::Const(c) => Expr::constant(-*c),
        Node::Neg(inner) => inner.clone(),
        _ => Expr::from_node(Node::Neg(a.clone())),
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $f:expr) => {
        impl $trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(&self, &rhs)
            }
        }
        impl $trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(&self, rhs)
            }
        }
        impl $trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $f(self, &rhs)
            }
        }
        impl $trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $f(self, rhs)
            }
        }
        impl $trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(&self, &Expr::constant(rhs))
            }
        }
        impl $trait<f64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $f(self, &Expr::constant(rhs))
            }
        }
        impl $trait<C64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: C64) -> Expr {
                $f(&self, &Expr::constant(rhs))
            }
        }
        impl $trait<C64> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: C64) -> Expr {
                $f(self, &Expr::constant(rhs))
            }
        }
    };
}

binop!(Add, add, add);
binop!(Mul, mul, mul);
binop!(Sub, sub, |a: &Expr, b: &Expr| add(a, &neg(b)));

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(&self)
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

impl From<C64> for Expr {
    fn from(v: C64) -> Self {
        Expr::constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn folding_keeps_trees_small() {
        let x = Expr::var(0);
        assert!((&x * 0.0).is_zero());
        assert_eq!((&x * 1.0).id(), x.id());
        assert_eq!((Expr::zero() + &x).id(), x.id());
        assert_eq!((-(-x.clone())).id(), x.id());
        assert_eq!((Expr::constant(2.0) * 3.0).as_const(), Some(c(6.0)));
    }

    #[test]
    fn derivative_of_cubic() {
        let x = Expr::var(0);
        let z = Expr::param(0);
        let f = x.pow(3) - &z;
        let dx = f.diff(Symbol::Var(0));
        let dz = f.diff(Symbol::Param(0));
        assert_eq!(dx.eval_direct(&[c(2.0)], &[c(8.0)]), c(12.0));
        assert_eq!(dz.eval_direct(&[c(5.0)], &[c(1.0)]), c(-1.0));
    }

    #[test]
    fn shared_subterms_share_derivatives() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        let s = &x * &y + &x;
        let f = &s * &s;
        let g = s.pow(3);
        let mut d = Differentiator::new(Symbol::Var(0));
        let _ = d.diff(&f);
        let before = d.memo.len();
        let _ = d.diff(&g);
        // only g itself is new; s was already differentiated
        assert_eq!(d.memo.len(), before + 1);
    }

    #[test]
    fn symbols_are_collected() {
        let e = Expr::var(3) * Expr::param(1) + Expr::var(0).pow(2);
        assert_eq!(
            e.symbols(),
            vec![Symbol::Var(0), Symbol::Var(3), Symbol::Param(1)]
        );
    }
}
