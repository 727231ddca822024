use std::sync::Arc;

use rand::RngCore;

use super::geom::{self, bdot, c, entries, random_rotation, random_v3, skew, var_matrix, M3, V3};
use super::{assemble, factorial, pow2, Expectation, MinimalProblem, NamedDeckMap, ProblemError, ProblemInstance};
use crate::expr::{randomize_equations, Expr, C64};
use crate::linalg::{complex_gaussian, gaussian_vec};
use crate::monodromy::DeckUndefined;

// Unknown layout shared by the calibrated relative pose formulations:
// R (0..9), t (9..12), alpha (12..12+k), beta (12+k..12+2k).
// Parameters: x_i = (p[2i], p[2i+1], 1), then y_i likewise after the x block.

pub(crate) struct PoseData {
    pub r: M3,
    pub t: V3,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub x: Vec<V3>,
    pub y: Vec<V3>,
}

impl PoseData {
    pub fn params(&self) -> Vec<C64> {
        let mut z = Vec::with_capacity(4 * self.x.len());
        for v in self.x.iter().chain(&self.y) {
            z.push(v[0]);
            z.push(v[1]);
        }
        z
    }

    /// `(t, alpha, beta)`.
    pub fn projective_block(&self) -> Vec<C64> {
        let mut v: Vec<C64> = self.t.iter().copied().collect();
        v.extend(&self.alpha);
        v.extend(&self.beta);
        v
    }

    pub fn unknowns(&self) -> Vec<C64> {
        let mut x = entries(&self.r);
        x.extend(self.projective_block());
        x
    }
}

/// Draws a pose and image points from world points `X_i = alpha_i x_i`
/// produced by `world`.
pub(crate) fn sample_pose(
    rng: &mut dyn RngCore,
    k: usize,
    mut world: impl FnMut(&mut dyn RngCore) -> V3,
) -> PoseData {
    let r = random_rotation(rng);
    let t = random_v3(rng);
    let mut data = PoseData {
        r,
        t,
        alpha: Vec::new(),
        beta: Vec::new(),
        x: Vec::new(),
        y: Vec::new(),
    };
    for _ in 0..k {
        let w = world(rng);
        let second = r * w + t;
        data.alpha.push(w[2]);
        data.x.push(geom::dehomogenize(&w));
        data.beta.push(second[2]);
        data.y.push(geom::dehomogenize(&second));
    }
    data
}

/// Orthogonality plus `beta_i y_i - alpha_i R x_i - t = 0`.
pub(crate) fn pose_equations(k: usize) -> Vec<Expr> {
    let r = var_matrix(0);
    let mut eqs = geom::orthogonality(&r);
    for i in 0..k {
        let x = geom::param_vec2(2 * i);
        let y = geom::param_vec2(2 * k + 2 * i);
        let alpha = Expr::var(12 + i);
        let beta = Expr::var(12 + k + i);
        let rx = geom::e_mat_vec(&r, &x);
        for j in 0..3 {
            eqs.push(&beta * &y[j] - &alpha * &rx[j] - Expr::var(9 + j));
        }
    }
    eqs
}

pub(crate) fn chart_equation(coeffs: &[C64], offset: usize) -> Expr {
    Expr::sum(coeffs.iter().enumerate().map(|(i, &a)| Expr::var(offset + i) * a)) - 1.0
}

pub(crate) fn split_solution(sol: &[C64], k: usize) -> (M3, V3, &[C64], &[C64]) {
    let r = geom::from_entries(&sol[0..9]);
    let t = V3::new(sol[9], sol[10], sol[11]);
    (r, t, &sol[12..12 + k], &sol[12 + k..12 + 2 * k])
}

pub(crate) fn image_points(z: &[C64], k: usize, second: bool) -> Vec<V3> {
    let o = if second { 2 * k } else { 0 };
    (0..k).map(|i| V3::new(z[o + 2 * i], z[o + 2 * i + 1], c(1.0))).collect()
}

const DEGENERACY: f64 = 1e-12;

/// Twisted pair: rotates the second camera half a turn about the baseline.
///
/// Returns `(R', t, alpha', beta')` as a flat vector before any rescaling.
pub(crate) fn twisted_pair(sol: &[C64], z: &[C64], k: usize) -> Result<Vec<C64>, DeckUndefined> {
    let (r, t, alpha, beta) = split_solution(sol, k);
    let tt = bdot(&t, &t);
    let scale = t.iter().fold(0.0f64, |m, v| m.max(v.norm())).powi(2);
    if tt.norm() <= DEGENERACY * scale.max(1e-300) {
        return Err(DeckUndefined("isotropic translation".into()));
    }
    let reflect = t * t.transpose() * (c(2.0) / tt) - M3::identity();
    let r2 = reflect * r;
    let xs = image_points(z, k, false);
    let ys = image_points(z, k, true);
    let mut a2 = Vec::with_capacity(k);
    let mut b2 = Vec::with_capacity(k);
    for i in 0..k {
        let ax = xs[i] * alpha[i];
        let by = ys[i] * beta[i];
        let den = bdot(&by, &by) - bdot(&ax, &ax);
        if den.norm() <= DEGENERACY * tt.norm() {
            return Err(DeckUndefined(format!("isosceles configuration at point {}", i + 1)));
        }
        a2.push(-alpha[i] * tt / den);
        b2.push(beta[i] * tt / den);
    }
    let mut out = entries(&r2);
    out.extend(t.iter());
    out.extend(a2);
    out.extend(b2);
    Ok(out)
}

/// Rescales the projective block starting at `offset` onto the chart.
pub(crate) fn rechart(mut sol: Vec<C64>, chart: &[C64], offset: usize) -> Result<Vec<C64>, DeckUndefined> {
    let l: C64 = chart.iter().zip(&sol[offset..]).map(|(a, v)| a * v).sum();
    if l.norm() <= DEGENERACY {
        return Err(DeckUndefined("image lies on the chart's hyperplane at infinity".into()));
    }
    for v in &mut sol[offset..] {
        *v /= l;
    }
    Ok(sol)
}

fn twisted_pair_on_chart(chart: Vec<C64>, k: usize) -> NamedDeckMap {
    NamedDeckMap {
        name: "twisted_pair",
        map: Arc::new(move |x: &[C64], z: &[C64]| rechart(twisted_pair(x, z, k)?, &chart, 9)),
    }
}

/// Five-point relative pose with a random chart on `(t, alpha, beta)`.
pub struct FivePoint;

impl MinimalProblem for FivePoint {
    fn id(&self) -> &'static str {
        "five-point"
    }
    fn description(&self) -> &'static str {
        "calibrated relative pose from 5 points, depths on a random chart"
    }
    fn num_unknowns(&self) -> usize {
        22
    }
    fn num_params(&self) -> usize {
        20
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(20)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 20,
            order: pow2(9) * factorial(10),
            all_even: true,
            primitive: false,
            block_sizes: vec![2],
            deck_order: 2,
            deck_invariants: vec![2],
            group: "S2 wr S10 ∩ A20".into(),
        })
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["twisted_pair"]
    }
    fn chart_offset(&self) -> Option<usize> {
        Some(9)
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let data = sample_pose(rng, 5, |r| random_v3(r));
        let chart = gaussian_vec(rng, 13);
        let x = rechart(data.unknowns(), &chart, 9).map_err(|_| degenerate())?;
        let mut eqs = pose_equations(5);
        eqs.push(chart_equation(&chart, 9));
        let deck = vec![twisted_pair_on_chart(chart, 5)];
        assemble(22, 20, eqs, x, data.params(), deck)
    }
}

fn degenerate() -> ProblemError {
    ProblemError::DegenerateSample {
        attempts: 1,
        residual: f64::INFINITY,
        sigma: 0.0,
    }
}

/// Five-point relative pose with `|t|^2 = 1` in place of a chart, so each
/// solution appears with both signs of `(t, alpha, beta)`.
pub struct FivePointNormalized;

impl MinimalProblem for FivePointNormalized {
    fn id(&self) -> &'static str {
        "five-point-normalized"
    }
    fn description(&self) -> &'static str {
        "calibrated relative pose from 5 points with unit translation"
    }
    fn num_unknowns(&self) -> usize {
        22
    }
    fn num_params(&self) -> usize {
        20
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(40)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 40,
            order: pow2(19) * factorial(10),
            all_even: true,
            primitive: false,
            block_sizes: vec![2, 2, 2, 4],
            deck_order: 4,
            deck_invariants: vec![2, 2],
            group: "(C2)^9 ⋊ (S2 wr S10)".into(),
        })
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["twisted_pair", "sign_flip"]
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let data = sample_pose(rng, 5, |r| random_v3(r));
        let norm = bdot(&data.t, &data.t).sqrt();
        let mut x = data.unknowns();
        for v in &mut x[9..] {
            *v /= norm;
        }
        let mut eqs = pose_equations(5);
        let t = geom::var_vec(9);
        eqs.push(geom::e_dot(&t, &t) - 1.0);
        let deck = vec![
            NamedDeckMap {
                name: "twisted_pair",
                map: Arc::new(|x: &[C64], z: &[C64]| twisted_pair(x, z, 5)),
            },
            NamedDeckMap {
                name: "sign_flip",
                map: Arc::new(|x: &[C64], _: &[C64]| {
                    Ok(x.iter().enumerate().map(|(i, v)| if i < 9 { *v } else { -v }).collect())
                }),
            },
        ];
        assemble(22, 20, eqs, x, data.params(), deck)
    }
}

/// Essential matrix from 5 epipolar constraints.
///
/// Unknowns: `E` row-major on a random chart. The ten cubic generators of
/// the essential variety are mixed down to three.
pub struct Essential;

fn essential_cubics() -> Vec<Expr> {
    let e = var_matrix(0);
    let eet = geom::e_mat_mul(&e, &geom::e_transpose(&e));
    let trace = Expr::sum((0..3).map(|i| eet[i][i].clone()));
    let eete = geom::e_mat_mul(&eet, &e);
    let mut out = vec![geom::e_det3(&e)];
    for i in 0..3 {
        for j in 0..3 {
            out.push(&eete[i][j] * 2.0 - &trace * &e[i][j]);
        }
    }
    out
}

impl MinimalProblem for Essential {
    fn id(&self) -> &'static str {
        "essential"
    }
    fn description(&self) -> &'static str {
        "essential matrix from 5 points on a random chart"
    }
    fn num_unknowns(&self) -> usize {
        9
    }
    fn num_params(&self) -> usize {
        20
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(10)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 10,
            order: factorial(10),
            all_even: false,
            primitive: true,
            block_sizes: vec![],
            deck_order: 1,
            deck_invariants: vec![],
            group: "S10".into(),
        })
    }
    fn chart_offset(&self) -> Option<usize> {
        Some(0)
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let r = random_rotation(rng);
        let t = random_v3(rng);
        let chart = gaussian_vec(rng, 9);
        let e_mat = skew(&t) * r;
        let x = rechart(entries(&e_mat), &chart, 0).map_err(|_| degenerate())?;
        let e_mat = geom::from_entries(&x);

        let mut xs = Vec::with_capacity(5);
        let mut ys = Vec::with_capacity(5);
        for _ in 0..5 {
            let p = V3::new(complex_gaussian(rng), complex_gaussian(rng), c(1.0));
            let l = e_mat * p;
            let y0 = complex_gaussian(rng);
            let y1 = -(l[2] + y0 * l[0]) / l[1];
            xs.push(p);
            ys.push(V3::new(y0, y1, c(1.0)));
        }
        let mut z = Vec::with_capacity(20);
        for v in xs.iter().chain(&ys) {
            z.push(v[0]);
            z.push(v[1]);
        }

        let e = var_matrix(0);
        let mut eqs = Vec::with_capacity(9);
        for i in 0..5 {
            let xp = geom::param_vec2(2 * i);
            let yp = geom::param_vec2(10 + 2 * i);
            eqs.push(geom::e_dot(&yp, &geom::e_mat_vec(&e, &xp)));
        }
        eqs.extend(randomize_equations(&essential_cubics(), 3, rng)?);
        eqs.push(chart_equation(&chart, 0));
        assemble(9, 20, eqs, x, z, vec![])
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
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for p in [&FivePoint as &dyn MinimalProblem, &FivePointNormalized, &Essential] {
            let inst = p.draw(&mut rng).unwrap();
            let r = inst.system.eval(&inst.seed.x_star, &inst.seed.z_star).unwrap();
            assert!(inf_norm(r.as_slice()) < 1e-10, "{}: {:e}", p.id(), inf_norm(r.as_slice()));
        }
    }

    #[test]
    fn essential_seed_satisfies_all_cubics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = Essential.draw(&mut rng).unwrap();
        for cubic in essential_cubics() {
            assert!(cubic.eval_direct(&inst.seed.x_star, &[]).norm() < 1e-12);
        }
    }

    #[test]
    fn twisted_pair_is_an_involution_on_a_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let inst = FivePoint.draw(&mut rng).unwrap();
        let psi = &inst.deck_map("twisted_pair").unwrap().map;
        let (x, z) = (&inst.seed.x_star, &inst.seed.z_star);
        let once = psi(x, z).unwrap();
        let r = inst.system.eval(&once, z).unwrap();
        assert!(inf_norm(r.as_slice()) < 1e-8);
        let twice = psi(&once, z).unwrap();
        assert!(crate::linalg::inf_dist(&twice, x) < 1e-8);
        assert!(crate::linalg::inf_dist(&once, x) > 1e-3);
    }
}
