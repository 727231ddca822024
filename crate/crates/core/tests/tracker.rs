use galmono::expr::{Expr, SystemSpec, C64};
use galmono::linalg::{complex_gaussian, inf_dist, inf_norm};
use galmono::problems::{find, instantiate};
use galmono::tracker::{track_segment, PathStatus, TrackSettings};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn perturbed(z: &[C64], rng: &mut ChaCha8Rng, scale: f64) -> Vec<C64> {
    z.iter().map(|v| v + complex_gaussian(rng) * scale).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tracking_there_and_back_returns_home(seed in 0u64..1000, id in prop::sample::select(vec!["toy-cubic", "p3p", "abs-pose-3-0"])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = instantiate(find(id).unwrap().as_ref(), &mut rng).unwrap();
        let (x0, z0) = (&inst.seed.x_star, &inst.seed.z_star);
        let z1 = perturbed(z0, &mut rng, 0.3);
        let s = TrackSettings::default();
        let there = track_segment(&inst.system, x0, z0, &z1, &s);
        prop_assume!(there.is_success());
        let back = track_segment(&inst.system, there.x_end.as_ref().unwrap(), &z1, z0, &s);
        prop_assume!(back.is_success());
        let x = back.x_end.unwrap();
        prop_assert!(inf_dist(&x, x0) <= 1e-6 * inf_norm(x0).max(1.0));
    }

    #[test]
    fn jacobian_matches_finite_differences(seed in 0u64..1000, id in prop::sample::select(vec!["p3p", "five-point", "homography-4pt"])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = find(id).unwrap().draw(&mut rng).unwrap();
        let sys = &inst.system;
        let x: Vec<C64> = perturbed(&inst.seed.x_star, &mut rng, 0.1);
        let z = &inst.seed.z_star;
        let j = sys.jacobian_x(&x, z).unwrap();
        let h = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fp = sys.eval(&xp, z).unwrap();
            let fm = sys.eval(&xm, z).unwrap();
            let fd: Vec<C64> = fp.iter().zip(fm.iter()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let col: Vec<C64> = (0..x.len()).map(|r| j[(r, k)]).collect();
            let err = inf_dist(&fd, &col) / inf_norm(&col).max(1.0);
            prop_assert!(err < 1e-4, "{id} column {k}: {err:e}");
        }
    }
}

#[test]
fn tracking_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let inst = instantiate(find("p3p").unwrap().as_ref(), &mut rng).unwrap();
    let z1 = perturbed(&inst.seed.z_star, &mut rng, 0.5);
    let s = TrackSettings::default();
    let a = track_segment(&inst.system, &inst.seed.x_star, &inst.seed.z_star, &z1, &s);
    let b = track_segment(&inst.system, &inst.seed.x_star, &inst.seed.z_star, &z1, &s);
    assert!(a.is_success());
    assert_eq!(a, b);
}

#[test]
fn cube_roots_continue_along_the_unit_circle() {
    let sys = SystemSpec::new(1, 1, vec![Expr::var(0).pow(3) - Expr::param(0)]).unwrap();
    let s = TrackSettings::default();
    let mut x = vec![C64::new(1.0, 0.0)];
    let mut z = vec![C64::new(1.0, 0.0)];
    // once around the origin in eight chords
    for k in 1..=8 {
        let th = std::f64::consts::TAU * k as f64 / 8.0;
        let next = vec![C64::from_polar(1.0, th)];
        let out = track_segment(&sys, &x, &z, &next, &s);
        assert_eq!(out.status, PathStatus::Success);
        x = out.x_end.unwrap();
        z = next;
    }
    let w = C64::from_polar(1.0, std::f64::consts::TAU / 3.0);
    assert!((x[0] - w).norm() < 1e-8, "{x:?}");
}

#[test]
fn invalid_settings_are_rejected() {
    let s = TrackSettings {
        corrector_tol: 1e-6,
        path_tol: 1e-8,
        ..Default::default()
    };
    assert!(s.validate().is_err());
    let s = TrackSettings {
        min_step: 0.5,
        ..Default::default()
    };
    assert!(s.validate().is_err());
}
