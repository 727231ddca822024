use std::collections::HashMap;

use super::{Expr, ExprError, Node, Symbol, C64};

#[derive(Clone, Copy, Debug)]
enum Op {
    Const(C64),
    Var(u32),
    Param(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Pow(u32, u32),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum OpKey {
    Const(u64, u64),
    Var(u32),
    Param(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Neg(u32),
    Pow(u32, u32),
}

/// Straight-line program evaluating a list of expressions.
///
/// Structurally identical subterms are merged (hash-consing), so a tape
/// compiled from a system and its derivatives evaluates each distinct
/// subterm once.
#[derive(Clone, Debug)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<u32>,
}

/// Caller-owned evaluation buffer; reuse across calls to avoid allocation.
#[derive(Default, Clone, Debug)]
pub struct Scratch {
    slots: Vec<C64>,
}

impl Scratch {
    pub fn new() -> Self {
        Self::default()
    }
}

struct Compiler {
    ops: Vec<Op>,
    by_node: HashMap<usize, u32>,
    by_key: HashMap<OpKey, u32>,
}

impl Compiler {
    fn push(&mut self, key: OpKey, op: Op) -> u32 {
        if let Some(&slot) = self.by_key.get(&key) {
            return slot;
        }
        let slot = self.ops.len() as u32;
        self.ops.push(op);
        self.by_key.insert(key, slot);
        slot
    }

    fn slot(&mut self, e: &Expr) -> u32 {
        if let Some(&s) = self.by_node.get(&e.id()) {
            return s;
        }
        let s = match e.node() {
            Node::Const(c) => self.push(OpKey::Const(c.re.to_bits(), c.im.to_bits()), Op::Const(*c)),
            Node::Sym(Symbol::Var(i)) => self.push(OpKey::Var(*i as u32), Op::Var(*i as u32)),
            Node::Sym(Symbol::Param(j)) => {
                self.push(OpKey::Param(*j as u32), Op::Param(*j as u32))
            }
            Node::Add(a, b) => {
                let (a, b) = (self.slot(a), self.slot(b));
                let (lo, hi) = (a.min(b), a.max(b));
                self.push(OpKey::Add(lo, hi), Op::Add(lo, hi))
            }
            Node::Mul(a, b) => {
                let (a, b) = (self.slot(a), self.slot(b));
                let (lo, hi) = (a.min(b), a.max(b));
                self.push(OpKey::Mul(lo, hi), Op::Mul(lo, hi))
            }
            Node::Neg(a) => {
                let a = self.slot(a);
                self.push(OpKey::Neg(a), Op::Neg(a))
            }
            Node::Pow(a, k) => {
                let a = self.slot(a);
                self.push(OpKey::Pow(a, *k), Op::Pow(a, *k))
            }
        };
        self.by_node.insert(e.id(), s);
        s
    }
}

impl Tape {
    pub fn compile(outputs: &[Expr]) -> Tape {
        let mut c = Compiler {
            ops: Vec::new(),
            by_node: HashMap::new(),
            by_key: HashMap::new(),
        };
        let outputs = outputs.iter().map(|e| c.slot(e)).collect();
        Tape { ops: c.ops, outputs }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates every output into `out`. Fails on any non-finite output.
    pub fn eval_into(
        &self,
        x: &[C64],
        z: &[C64],
        scratch: &mut Scratch,
        out: &mut [C64],
    ) -> Result<(), ExprError> {
        debug_assert_eq!(out.len(), self.outputs.len());
        let slots = &mut scratch.slots;
        slots.clear();
        slots.reserve(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => c,
                Op::Var(i) => x[i as usize],
                Op::Param(j) => z[j as usize],
                Op::Add(a, b) => slots[a as usize] + slots[b as usize],
                Op::Mul(a, b) => slots[a as usize] * slots[b as usize],
                Op::Neg(a) => -slots[a as usize],
                Op::Pow(a, k) => slots[a as usize].powu(k),
            };
            slots.push(v);
        }
        for (o, &s) in out.iter_mut().zip(&self.outputs) {
            let v = slots[s as usize];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(ExprError::EvaluationOverflow);
            }
            *o = v;
        }
        Ok(())
    }

    pub fn eval(&self, x: &[C64], z: &[C64]) -> Result<Vec<C64>, ExprError> {
        let mut out = vec![C64::new(0.0, 0.0); self.outputs.len()];
        self.eval_into(x, z, &mut Scratch::new(), &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_merges_equal_subterms() {
        let x = Expr::var(0);
        let y = Expr::var(1);
        // two structurally equal but separately built products
        let a = &x * &y;
        let b = &x * &y;
        let t = Tape::compile(&[a + b]);
        // x, y, x*y, sum
        assert_eq!(t.len(), 4);
    }

    #[test]
    fn overflow_is_reported() {
        let x = Expr::var(0);
        let t = Tape::compile(&[x.pow(400)]);
        let r = t.eval(&[C64::new(1e10, 0.0)], &[]);
        assert_eq!(r, Err(ExprError::EvaluationOverflow));
    }

    #[test]
    fn matches_direct_evaluation() {
        let x = Expr::var(0);
        let z = Expr::param(0);
        let e = (&x + &z).pow(3) - &x * 2.5 + C64::new(0.0, 1.0);
        let xs = [C64::new(0.3, -1.2)];
        let zs = [C64::new(-0.7, 0.4)];
        let t = Tape::compile(&[e.clone()]);
        let v = t.eval(&xs, &zs).unwrap()[0];
        assert!((v - e.eval_direct(&xs, &zs)).norm() < 1e-14);
    }
}
