use std::sync::Arc;

use rand::RngCore;

use super::geom::{self, bdot, c, entries, random_rotation, random_v3, var_matrix, EM3, EV3, M3, V3};
use super::relative::{chart_equation, image_points, pose_equations, rechart, sample_pose, split_solution, twisted_pair};
use super::{assemble, factorial, pow2, Expectation, MinimalProblem, NamedDeckMap, ProblemError, ProblemInstance};
use crate::expr::{randomize_equations, Expr, C64};
use crate::linalg::{self, complex_gaussian, gaussian_vec};
use crate::monodromy::DeckUndefined;

/// Calibrated homography from 4 coplanar points.
///
/// Same layout as the five-point formulation with four depths per view, a
/// coplanarity constraint on the first-view points, and a random chart on
/// `(t, alpha, beta)`.
pub struct Homography4pt;

fn coplanarity(k: usize) -> Expr {
    let rows: Vec<Vec<Expr>> = (0..4)
        .map(|r| {
            (0..k)
                .map(|i| {
                    let alpha = Expr::var(12 + i);
                    match r {
                        0 => &alpha * Expr::param(2 * i),
                        1 => &alpha * Expr::param(2 * i + 1),
                        2 => alpha,
                        _ => Expr::one(),
                    }
                })
                .collect()
        })
        .collect();
    geom::e_det(&rows)
}

/// Plane-reflection map: half turn of the first camera frame about the
/// plane normal, mapping each second-view point to its negative.
fn plane_flip(sol: &[C64], z: &[C64], k: usize) -> Result<Vec<C64>, DeckUndefined> {
    let (r, t, alpha, beta) = split_solution(sol, k);
    let xs = image_points(z, k, false);
    let p: Vec<V3> = xs.iter().zip(alpha).map(|(x, a)| x * *a).collect();
    let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let d = bdot(&n, &p[0]);
    let nn = bdot(&n, &n);
    let scale = n.iter().fold(0.0f64, |m, v| m.max(v.norm())).powi(2);
    if nn.norm() <= 1e-12 * scale.max(1e-300) {
        return Err(DeckUndefined("isotropic plane normal".into()));
    }
    let half_turn = n * n.transpose() * (c(2.0) / nn) - M3::identity();
    let r2 = r * half_turn;
    let t2 = -t - r * n * (c(2.0) * d / nn);
    let mut out = entries(&r2);
    out.extend(t2.iter());
    out.extend(alpha);
    out.extend(beta.iter().map(|b| -b));
    Ok(out)
}

impl MinimalProblem for Homography4pt {
    fn id(&self) -> &'static str {
        "homography-4pt"
    }
    fn description(&self) -> &'static str {
        "calibrated homography from 4 coplanar points, depths on a random chart"
    }
    fn num_unknowns(&self) -> usize {
        20
    }
    fn num_params(&self) -> usize {
        16
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(12)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 12,
            order: 96u32.into(),
            all_even: true,
            primitive: false,
            block_sizes: vec![2, 2, 2, 4],
            deck_order: 4,
            deck_invariants: vec![2, 2],
            group: "transitive of degree 12 and order 96".into(),
        })
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["psi1", "psi2"]
    }
    fn chart_offset(&self) -> Option<usize> {
        Some(9)
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let normal = random_v3(rng);
        let offset = complex_gaussian(rng);
        let nn = bdot(&normal, &normal);
        let data = sample_pose(rng, 4, move |r| {
            let u = random_v3(r);
            u - normal * ((bdot(&normal, &u) - offset) / nn)
        });
        let chart = gaussian_vec(rng, 11);
        let x = rechart(data.unknowns(), &chart, 9).map_err(|_| ProblemError::DegenerateSample {
            attempts: 1,
            residual: f64::INFINITY,
            sigma: 0.0,
        })?;
        let mut eqs = pose_equations(4);
        eqs.push(coplanarity(4));
        eqs.push(chart_equation(&chart, 9));
        let (c1, c2) = (chart.clone(), chart);
        let deck = vec![
            NamedDeckMap {
                name: "psi1",
                map: Arc::new(move |x: &[C64], z: &[C64]| rechart(twisted_pair(x, z, 4)?, &c1, 9)),
            },
            NamedDeckMap {
                name: "psi2",
                map: Arc::new(move |x: &[C64], z: &[C64]| rechart(plane_flip(x, z, 4)?, &c2, 9)),
            },
        ];
        assemble(20, 16, eqs, x, data.params(), deck)
    }
}

/// Uncalibrated-scale homography `S = H / H00` with the eigenvalue `s` of
/// `S^T S` that makes `S^T S - s I` singular.
///
/// Unknowns: `s`, then `S01, S02, S10, S11, S12, S20, S21, S22`.
pub struct HomographySMatrix;

fn s_matrix() -> EM3 {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| if i == 0 && j == 0 { Expr::one() } else { Expr::var(3 * i + j) })
    })
}

impl MinimalProblem for HomographySMatrix {
    fn id(&self) -> &'static str {
        "homography-smatrix"
    }
    fn description(&self) -> &'static str {
        "calibrated homography as a normalized matrix with one eigenvalue unknown"
    }
    fn num_unknowns(&self) -> usize {
        9
    }
    fn num_params(&self) -> usize {
        16
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(3)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 3,
            order: 6u32.into(),
            all_even: false,
            primitive: true,
            block_sizes: vec![],
            deck_order: 1,
            deck_invariants: vec![],
            group: "S3".into(),
        })
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let h = random_rotation(rng) + random_v3(rng) * random_v3(rng).transpose();
        let xs: Vec<V3> = (0..4).map(|_| V3::new(complex_gaussian(rng), complex_gaussian(rng), c(1.0))).collect();
        let mut z = Vec::with_capacity(16);
        for v in &xs {
            z.extend_from_slice(&[v[0], v[1]]);
        }
        for v in &xs {
            let y = geom::dehomogenize(&(h * v));
            z.extend_from_slice(&[y[0], y[1]]);
        }
        let h00 = h[(0, 0)];
        let s = h / h00;
        let mut x = entries(&s);
        x[0] = c(1.0) / (h00 * h00);

        let sm = s_matrix();
        let sts = geom::e_mat_mul(&geom::e_transpose(&sm), &sm);
        let shifted: Vec<Vec<Expr>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { &sts[i][j] - Expr::var(0) } else { sts[i][j].clone() })
                    .collect()
            })
            .collect();
        let mut eqs = vec![geom::e_det(&shifted)];
        for i in 0..4 {
            let xp = geom::param_vec2(2 * i);
            let yp = geom::param_vec2(8 + 2 * i);
            let cross = geom::e_cross(&yp, &geom::e_mat_vec(&sm, &xp));
            eqs.push(cross[0].clone());
            eqs.push(cross[1].clone());
        }
        assemble(9, 16, eqs, x, z, vec![])
    }
}

/// Two calibrated homographies `x ~ H1 y`, `x ~ H2 z` induced by one plane,
/// from four points per view of which the third lies on the line through
/// the first two.
///
/// Unknowns: `H1` (0..9), `H2` (9..18), `D = 1 / det H1`. Per view the
/// parameters are `p1, p2, s, p4` with `p3 = (1 - s) p1 + s p2`.
pub struct ThreeViewHomography;

fn view_points(offset: usize) -> Vec<EV3> {
    let p = |k: usize| Expr::param(offset + k);
    let s = p(4);
    let p1 = [p(0), p(1), Expr::one()];
    let p2 = [p(2), p(3), Expr::one()];
    let p3 = [
        (Expr::one() - &s) * &p1[0] + &s * &p2[0],
        (Expr::one() - &s) * &p1[1] + &s * &p2[1],
        Expr::one(),
    ];
    let p4 = [p(5), p(6), Expr::one()];
    vec![p1, p2, p3, p4]
}

fn transfer_rows(h: &EM3, x: &[EV3], y: &[EV3]) -> Vec<Expr> {
    x.iter()
        .zip(y)
        .flat_map(|(xi, yi)| geom::e_cross(xi, &geom::e_mat_vec(h, yi)))
        .collect()
}

fn excess(h: &EM3) -> Vec<Vec<Expr>> {
    let hth = geom::e_mat_mul(&geom::e_transpose(h), h);
    (0..3)
        .map(|i| (0..3).map(|j| if i == j { &hth[i][j] - 1.0 } else { hth[i][j].clone() }).collect())
        .collect()
}

fn combine(a: &[Vec<Expr>], b: &[Vec<Expr>], sign: f64) -> Vec<Vec<Expr>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(u, v)| u + &(v * sign)).collect())
        .collect()
}

// resultant of a1 u^2 + 2 b1 u + c1 and a2 u^2 + 2 b2 u + c2
fn resultant(w1: &[Vec<Expr>], w2: &[Vec<Expr>], row: usize) -> Expr {
    let (a1, b1, c1) = (&w1[2][2], &w1[row][2], &w1[row][row]);
    let (a2, b2, c2) = (&w2[2][2], &w2[row][2], &w2[row][row]);
    let ac = a1 * c2 - a2 * c1;
    let ab = a1 * b2 - a2 * b1;
    let bc = b1 * c2 - b2 * c1;
    ac.square() - ab * bc * 4.0
}

const ADMIT_TOL: f64 = 1e-6;

fn cross(a: &V3, b: &V3) -> V3 {
    V3::new(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])
}

// kernel of a rank-2 matrix, as the largest cross product of two rows
fn kernel(w: &M3) -> V3 {
    let rows: Vec<V3> = (0..3).map(|i| w.row(i).transpose()).collect();
    [(0, 1), (0, 2), (1, 2)]
        .iter()
        .map(|&(i, j)| cross(&rows[i], &rows[j]))
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap()
}

// relative residual of the best fit `w = n d^T + d n^T` over d
fn symmetric_fit(w: &M3, n: &V3) -> f64 {
    let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
    let a = linalg::CMatrix::from_fn(6, 3, |r, k| {
        let (i, j) = pairs[r];
        let mut v = C64::new(0.0, 0.0);
        if k == j {
            v += n[i];
        }
        if k == i {
            v += n[j];
        }
        v
    });
    let b = linalg::CVector::from_fn(6, |r, _| w[pairs[r]]);
    let Ok(d) = a.clone().svd(true, true).solve(&b, 1e-14) else {
        return f64::INFINITY;
    };
    (a * d - &b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Whether `x` comes from two calibrated homographies sharing one plane:
/// `H_i^T H_i - I = n d_i^T + d_i n^T` with a common `n`. Solutions of the
/// nonlinear equations off this variety are rejected.
fn shares_normal(x: &[C64]) -> bool {
    let h1 = M3::from_row_slice(&x[..9]);
    let h2 = M3::from_row_slice(&x[9..18]);
    let w1 = h1.transpose() * h1 - M3::identity();
    let w2 = h2.transpose() * h2 - M3::identity();
    let mut n = cross(&kernel(&w1), &kernel(&w2));
    let len = n.norm();
    if len == 0.0 || !len.is_finite() {
        return false;
    }
    n /= c(len);
    symmetric_fit(&w1, &n) <= ADMIT_TOL && symmetric_fit(&w2, &n) <= ADMIT_TOL
}

fn negate_block(range: std::ops::Range<usize>, x: &[C64]) -> Vec<C64> {
    x.iter()
        .enumerate()
        .map(|(i, v)| if range.contains(&i) || i == 18 { -v } else { *v })
        .collect()
}

fn view_params(pts: &[V3]) -> Vec<C64> {
    let s = (pts[2][0] - pts[0][0]) / (pts[1][0] - pts[0][0]);
    vec![pts[0][0], pts[0][1], pts[1][0], pts[1][1], s, pts[3][0], pts[3][1]]
}

impl MinimalProblem for ThreeViewHomography {
    fn id(&self) -> &'static str {
        "three-view-homography"
    }
    fn description(&self) -> &'static str {
        "two calibrated homographies of one plane from 4 points with a collinear triple"
    }
    fn num_unknowns(&self) -> usize {
        19
    }
    fn num_params(&self) -> usize {
        21
    }
    fn expected_degree(&self) -> Option<usize> {
        Some(64)
    }
    fn expectation(&self) -> Option<Expectation> {
        Some(Expectation {
            degree: 64,
            order: pow2(46) * factorial(16),
            all_even: true,
            primitive: false,
            block_sizes: vec![2, 4],
            deck_order: 2,
            deck_invariants: vec![2],
            group: "S2 wr (S2 wr S16 ∩ A32) ∩ A64".into(),
        })
    }
    fn deck_map_names(&self) -> &'static [&'static str] {
        &["neg_h1", "neg_h2"]
    }
    fn long_running(&self) -> bool {
        true
    }
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
        let n = random_v3(rng);
        let h1 = random_rotation(rng) + random_v3(rng) * n.transpose();
        let h2 = random_rotation(rng) + random_v3(rng) * n.transpose();
        let (Some(i1), Some(i2)) = (h1.try_inverse(), h2.try_inverse()) else {
            return Err(ProblemError::DegenerateSample {
                attempts: 1,
                residual: f64::INFINITY,
                sigma: 0.0,
            });
        };
        let p1 = V3::new(complex_gaussian(rng), complex_gaussian(rng), c(1.0));
        let p2 = V3::new(complex_gaussian(rng), complex_gaussian(rng), c(1.0));
        let s = complex_gaussian(rng);
        let p4 = V3::new(complex_gaussian(rng), complex_gaussian(rng), c(1.0));
        let xs = vec![p1, p2, p1 * (c(1.0) - s) + p2 * s, p4];
        let ys: Vec<V3> = xs.iter().map(|v| geom::dehomogenize(&(i1 * v))).collect();
        let zs: Vec<V3> = xs.iter().map(|v| geom::dehomogenize(&(i2 * v))).collect();
        let mut z = view_params(&xs);
        z.extend(view_params(&ys));
        z.extend(view_params(&zs));

        let mut x = entries(&h1);
        x.extend(entries(&h2));
        x.push(c(1.0) / h1.determinant());

        let (vx, vy, vz) = (view_points(0), view_points(7), view_points(14));
        let (e1, e2) = (var_matrix(0), var_matrix(9));
        let mut eqs = randomize_equations(&transfer_rows(&e1, &vx, &vy), 7, rng)?;
        eqs.extend(randomize_equations(&transfer_rows(&e2, &vx, &vz), 7, rng)?);
        eqs.push(Expr::var(18) * geom::e_det3(&e1) - 1.0);
        let (w1, w2) = (excess(&e1), excess(&e2));
        let nonlinear = vec![
            geom::e_det(&w1),
            geom::e_det(&w2),
            geom::e_det(&combine(&w1, &w2, 1.0)),
            geom::e_det(&combine(&w1, &w2, -1.0)),
            resultant(&w1, &w2, 0),
            resultant(&w1, &w2, 1),
        ];
        let admit = |x: &[C64], _: &[C64]| shares_normal(x);
        eqs.extend(randomize_equations(&nonlinear, 4, rng)?);
        let deck = vec![
            NamedDeckMap {
                name: "neg_h1",
                map: Arc::new(|x: &[C64], _: &[C64]| Ok(negate_block(0..9, x))),
            },
            NamedDeckMap {
                name: "neg_h2",
                map: Arc::new(|x: &[C64], _: &[C64]| {
                    Ok(x.iter().enumerate().map(|(i, v)| if (9..18).contains(&i) { -v } else { *v }).collect())
                }),
            },
        ];
        let mut inst = assemble(19, 21, eqs, x, z, deck)?;
        inst.admit = Some(Arc::new(admit));
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inf_dist, inf_norm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeds_solve_their_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [&Homography4pt as &dyn MinimalProblem, &HomographySMatrix, &ThreeViewHomography] {
            let inst = p.draw(&mut rng).unwrap();
            let r = inst.system.eval(&inst.seed.x_star, &inst.seed.z_star).unwrap();
            assert!(inf_norm(r.as_slice()) < 1e-9, "{}: {:e}", p.id(), inf_norm(r.as_slice()));
        }
    }

    #[test]
    fn three_view_admits_its_seed_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = ThreeViewHomography.draw(&mut rng).unwrap();
        let admit = inst.admit.as_ref().unwrap();
        let (x, z) = (&inst.seed.x_star, &inst.seed.z_star);
        assert!(admit(x, z));
        let neg = (inst.deck_map("neg_h2").unwrap().map)(x, z).unwrap();
        assert!(admit(&neg, z));
        let mut off = x.clone();
        off[4] += 0.1;
        assert!(!admit(&off, z));
    }

    #[test]
    fn homography_deck_maps_commute_and_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = Homography4pt.draw(&mut rng).unwrap();
        let (x, z) = (&inst.seed.x_star, &inst.seed.z_star);
        let p1 = &inst.deck_map("psi1").unwrap().map;
        let p2 = &inst.deck_map("psi2").unwrap().map;
        for img in [p1(x, z).unwrap(), p2(x, z).unwrap()] {
            let r = inst.system.eval(&img, z).unwrap();
            assert!(inf_norm(r.as_slice()) < 1e-8);
            assert!(inf_dist(&img, x) > 1e-3);
        }
        let a = p1(&p2(x, z).unwrap(), z).unwrap();
        let b = p2(&p1(x, z).unwrap(), z).unwrap();
        assert!(inf_dist(&a, &b) < 1e-8);
        assert!(inf_dist(&p2(&p2(x, z).unwrap(), z).unwrap(), x) < 1e-8);
    }
}
