use std::sync::Arc;

use rand::RngCore;

use super::{assemble, Expectation, MinimalProblem, NamedDeckMap, ProblemError, ProblemInstance};
use crate::expr::{Expr, C64};
use crate::linalg::{complex_gaussian, gaussian_vec};

fn sign_flip() -> NamedDeckMap {
    NamedDeckMap {
        name: "sign_flip",
        map: Arc::new(|x: &[C64], _: &[C64]| Ok(x.iter().map(|v| -v).collect())),
    }
}

/// `x^3 = z`.
pub struct ToyCubic;

impl MinimalProblem for ToyCubic {
    fn id(&self) -> &'static str {
        "toy-cubic"
    }
    fn description(&self) -> &'static str {
        "cube roots x^3 = z"
    }
    fn num_unknowns(&self) -> usize {
        1
    }
    fn num_params(&self) -> usize {
        1
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(3)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 3,
            order: 3u32.into(),
            all_even: true,
            primitive: true,
            block_sizes: vec![],
            deck_order: 3,
            deck_invariants: vec![3],
            group: "A3 = C3".into(),
        })
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let x = complex_gaussian(rng);
        let eq = Expr::var(0).pow(3) - Expr::param(0);
        assemble(1, 1, vec![eq], vec![x], vec![x * x * x], vec![])
    }
}

/// Three distance quadrics in the depths `x1, x2, x3`.
///
/// Parameters: `c12, c13, c23, D12, D13, D23` with `D = d^2`.
pub struct P3p;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

pub(crate) fn p3p_expectation() -> Expectation {
    Expectation {
        degree: 8,
        order: 192u32.into(),
        all_even: true,
        primitive: false,
        block_sizes: vec![2],
        deck_order: 2,
        deck_invariants: vec![2],
        group: "S2 wr S4 ∩ A8".into(),
    }
}

impl MinimalProblem for P3p {
    fn id(&self) -> &'static str {
        "p3p"
    }
    fn description(&self) -> &'static str {
        "perspective three point, distance form"
    }
    fn num_unknowns(&self) -> usize {
        3
    }
    fn num_params(&self) -> usize {
        6
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(8)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(p3p_expectation())
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["sign_flip"]
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let x = gaussian_vec(rng, 3);
        let cs = gaussian_vec(rng, 3);
        let mut z = cs.clone();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            z.push(x[i] * x[i] + x[j] * x[j] - cs[k] * x[i] * x[j]);
        }
        let eqs = PAIRS
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| {
                let (xi, xj) = (Expr::var(i), Expr::var(j));
                xi.square() + xj.square() - Expr::param(k) * &xi * &xj - Expr::param(3 + k)
            })
            .collect();
        assemble(3, 6, eqs, x, z, vec![sign_flip()])
    }
}

/// The same monomial supports as P3P with twelve free coefficients.
///
/// Parameters `A..L` in order.
pub struct P3pGeneric;

impl MinimalProblem for P3pGeneric {
    fn id(&self) -> &'static str {
        "p3p-generic"
    }
    fn description(&self) -> &'static str {
        "three quadrics with P3P supports and generic coefficients"
    }
    fn num_unknowns(&self) -> usize {
        3
    }
    fn num_params(&self) -> usize {
        12
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(8)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 8,
            order: 384u32.into(),
            all_even: false,
            primitive: false,
            block_sizes: vec![2],
            deck_order: 2,
            deck_invariants: vec![2],
            group: "S2 wr S4".into(),
        })
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["sign_flip"]
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let x = gaussian_vec(rng, 3);
        let mut z = Vec::with_capacity(12);
        let mut eqs = Vec::with_capacity(3);
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let lead = gaussian_vec(rng, 3);
            let constant = -(lead[0] * x[i] * x[i] + lead[1] * x[j] * x[j] + lead[2] * x[i] * x[j]);
            z.extend_from_slice(&lead);
            z.push(constant);
            let p = |o: usize| Expr::param(4 * k + o);
            let (xi, xj) = (Expr::var(i), Expr::var(j));
            eqs.push(p(0) * xi.square() + p(1) * xj.square() + p(2) * &xi * &xj + p(3));
        }
        assemble(3, 12, eqs, x, z, vec![sign_flip()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inf_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeds_solve_their_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in [&ToyCubic as &dyn MinimalProblem, &P3p, &P3pGeneric] {
            let inst = p.draw(&mut rng).unwrap();
            let r = inst.system.eval(&inst.seed.x_star, &inst.seed.z_star).unwrap();
            assert!(inf_norm(r.as_slice()) < 1e-12, "{}", p.id());
            assert_eq!(inst.seed.z_star.len(), p.num_params());
        }
    }
}
