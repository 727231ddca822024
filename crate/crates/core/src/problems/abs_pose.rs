use rand::RngCore;

use super::basic::p3p_expectation;
use super::geom::{self, entries, random_rotation, random_v3, var_matrix, var_vec, V3};
use super::{assemble, factorial, Expectation, MinimalProblem, ProblemError, ProblemInstance};
use crate::expr::{Expr, C64};

/// Absolute pose from `p` point and `l` line correspondences.
///
/// Unknowns: `R` (row-major, 0..9) and `t` (9..12). Parameters: per point
/// the world point `X` (3) and image point `(u, v)`; then per line the
/// world line `{X0 + a X2 + b = 0, X1 + c X2 + e = 0}` as `(a, b, c, e)` and
/// the image line `(n0, n1, 1)`.
pub struct AbsPose {
    points: usize,
    lines: usize,
    id: &'static str,
}

impl AbsPose {
    pub fn new(points: usize, lines: usize) -> Self {
        let id = match (points, lines) {
            (3, 0) => "abs-pose-3-0",
            (2, 1) => "abs-pose-2-1",
            (1, 2) => "abs-pose-1-2",
            (0, 3) => "abs-pose-0-3",
            _ => panic!("absolute pose needs p + l = 3"),
        };
        Self { points, lines, id }
    }
}

fn camera_equations(points: usize, lines: usize) -> Vec<Expr> {
    let r = var_matrix(0);
    let t = var_vec(9);
    let mut eqs = geom::orthogonality(&r);
    for i in 0..points {
        let o = 5 * i;
        let world = [Expr::param(o), Expr::param(o + 1), Expr::param(o + 2)];
        let (u, v) = (Expr::param(o + 3), Expr::param(o + 4));
        let rx = geom::e_mat_vec(&r, &world);
        let px: Vec<Expr> = (0..3).map(|k| &rx[k] + &t[k]).collect();
        eqs.push(&px[0] - &u * &px[2]);
        eqs.push(&px[1] - &v * &px[2]);
    }
    for i in 0..lines {
        let o = 5 * points + 6 * i;
        let p = |k: usize| Expr::param(o + k);
        let (a, b, c, e) = (p(0), p(1), p(2), p(3));
        let n = [p(4), p(5), Expr::one()];
        // back-projected plane [R | t]^T n
        let w: Vec<Expr> = (0..3)
            .map(|j| Expr::sum((0..3).map(|k| &r[k][j] * &n[k])))
            .chain(std::iter::once(geom::e_dot(&t, &n)))
            .collect();
        eqs.push(&w[2] - &a * &w[0] - &c * &w[1]);
        eqs.push(&w[3] - &b * &w[0] - &e * &w[1]);
    }
    eqs
}

impl MinimalProblem for AbsPose {
    fn id(&self) -> &'static str {
        self.id
    }
    fn description(&self) -> &'static str {
        match (self.points, self.lines) {
            (3, 0) => "absolute pose from 3 points",
            (2, 1) => "absolute pose from 2 points and 1 line",
            (1, 2) => "absolute pose from 1 point and 2 lines",
            _ => "absolute pose from 3 lines",
        }
    }
    fn num_unknowns(&self) -> usize {
        12
    }
    fn num_params(&self) -> usize {
        5 * self.points + 6 * self.lines
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(if self.lines == 1 { 4 } else { 8 })
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(match (self.points, self.lines) {
            (2, 1) => Expectation {
                degree: 4,
                order: 4u32.into(),
                all_even: true,
                primitive: false,
                block_sizes: vec![2, 2, 2],
                deck_order: 4,
                deck_invariants: vec![2, 2],
                group: "S2 wr S2 ∩ A4 = C2 x C2".into(),
            },
            (0, 3) => Expectation {
                degree: 8,
                order: factorial(8),
                all_even: false,
                primitive: true,
                block_sizes: vec![],
                deck_order: 1,
                deck_invariants: vec![],
                group: "S8".into(),
            },
            _ => p3p_expectation(),
        })
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let r = random_rotation(rng);
        let t = random_v3(rng);
        let project = |x: &V3| r * x + t;
        let mut z: Vec<C64> = Vec::with_capacity(self.num_params());
        for _ in 0..self.points {
            let world = random_v3(rng);
            let img = geom::dehomogenize(&project(&world));
            z.extend_from_slice(&[world[0], world[1], world[2], img[0], img[1]]);
        }
        for _ in 0..self.lines {
            let (pa, pb) = (random_v3(rng), random_v3(rng));
            let a = -(pa[0] - pb[0]) / (pa[2] - pb[2]);
            let b = -pa[0] - a * pa[2];
            let c = -(pa[1] - pb[1]) / (pa[2] - pb[2]);
            let e = -pa[1] - c * pa[2];
            let n = project(&pa).cross(&project(&pb));
            let n = n / n[2];
            z.extend_from_slice(&[a, b, c, e, n[0], n[1]]);
        }
        let mut x = entries(&r);
        x.extend(t.iter());
        assemble(12, self.num_params(), camera_equations(self.points, self.lines), x, z, vec![])
    }
}
