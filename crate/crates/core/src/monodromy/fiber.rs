use log::{debug, info};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{default_loop_scale, random_loop, MonodromyConfig, MonodromyError};
use crate::expr::{SeedPair, SystemSpec, C64, DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL};
use crate::linalg;
use crate::tracker::track_many_polyline;

/// Known solutions over a base parameter point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberState {
    pub z_star: Vec<C64>,
    pub solutions: Vec<Vec<C64>>,
    pub matching_tol: f64,
    pub complete: bool,
    pub target_degree: Option<usize>,
    /// Loops spent on completion.
    pub loops_used: usize,
}

impl FiberState {
    pub fn new(z_star: Vec<C64>, first: Vec<C64>, matching_tol: f64, target_degree: Option<usize>) -> Self {
        Self {
            z_star,
            solutions: vec![first],
            matching_tol,
            complete: false,
            target_degree,
            loops_used: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    fn close(&self, x: &[C64], s: &[C64]) -> bool {
        linalg::inf_dist(x, s) <= self.matching_tol * linalg::inf_norm(s).max(1.0)
    }

    /// Index of the unique stored solution within the matching tolerance.
    pub fn match_point(&self, x: &[C64]) -> Result<Option<usize>, MonodromyError> {
        let mut hits = self
            .solutions
            .iter()
            .enumerate()
            .filter(|(_, s)| self.close(x, s))
            .map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (None, _) => Ok(None),
            (Some(i), None) => Ok(Some(i)),
            (Some(first), Some(second)) => Err(MonodromyError::AmbiguousMatch { first, second }),
        }
    }

    /// Smallest pairwise distance between stored solutions.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.solutions.iter().enumerate() {
            for b in &self.solutions[i + 1..] {
                best = best.min(linalg::inf_dist(a, b));
            }
        }
        best
    }
}

/// Extra membership test for candidate solutions, for systems whose
/// square form admits solutions outside the intended component.
pub type AdmitFn = dyn Fn(&[C64], &[C64]) -> bool + Send + Sync;

/// Grows the fiber over `seed.z_star` from the single solution `seed.x_star`
/// by tracking all known solutions around random loops.
///
/// Stops at `expected_degree` when given, otherwise after
/// `config.stall_limit` consecutive loops without a new solution.
pub fn complete_fiber<R: Rng + ?Sized>(
    system: &SystemSpec,
    seed: &SeedPair,
    expected_degree: Option<usize>,
    config: &MonodromyConfig,
    rng: &mut R,
) -> Result<FiberState, MonodromyError> {
    complete_fiber_with(system, seed, expected_degree, config, rng, None)
}

/// As [`complete_fiber`], admitting new solutions only when `admit` accepts them.
pub fn complete_fiber_with<R: Rng + ?Sized>(
    system: &SystemSpec,
    seed: &SeedPair,
    expected_degree: Option<usize>,
    config: &MonodromyConfig,
    rng: &mut R,
    admit: Option<&AdmitFn>,
) -> Result<FiberState, MonodromyError> {
    let check = system.verify_well_constrained(seed, DEFAULT_RESIDUAL_TOL, DEFAULT_RANK_TOL);
    if !check.well_constrained {
        return Err((&check).into());
    }
    let mut fiber = FiberState::new(
        seed.z_star.clone(),
        seed.x_star.clone(),
        config.matching_tol,
        expected_degree,
    );
    let scale = config.loop_scale.unwrap_or_else(|| default_loop_scale(&seed.z_star));
    let mut stall = 0;

    loop {
        if let Some(d) = expected_degree {
            if fiber.len() == d {
                fiber.complete = true;
                break;
            }
            if fiber.len() > d {
                return Err(MonodromyError::FiberExceedsDegree {
                    found: fiber.len(),
                    expected: d,
                });
            }
        } else if stall >= config.stall_limit {
            fiber.complete = true;
            break;
        }
        if fiber.loops_used >= config.max_loops {
            return match expected_degree {
                Some(expected) => Err(MonodromyError::FiberIncomplete {
                    found: fiber.len(),
                    expected,
                    loops: fiber.loops_used,
                }),
                None => Ok(fiber),
            };
        }

        let lp = random_loop(&seed.z_star, rng, scale);
        fiber.loops_used += 1;
        let outcomes = track_many_polyline(system, &fiber.solutions, &lp.waypoints, &config.track);
        let before = fiber.len();
        for out in outcomes {
            let Some(x) = out.x_end else { continue };
            if fiber.match_point(&x)?.is_some() {
                continue;
            }
            if admit.is_some_and(|f| !f(&x, &seed.z_star)) {
                debug!("rejected a solution outside the admitted component");
                continue;
            }
            fiber.solutions.push(x);
        }
        let found = fiber.len() - before;
        debug!("completion loop {}: {} new, {} total", fiber.loops_used, found, fiber.len());
        stall = if found == 0 { stall + 1 } else { 0 };
    }
    info!("fiber complete with {} solutions after {} loops", fiber.len(), fiber.loops_used);
    Ok(fiber)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fiber_of(points: &[f64]) -> FiberState {
        let mut f = FiberState::new(vec![], vec![C64::new(points[0], 0.0)], 1e-6, None);
        for &p in &points[1..] {
            f.solutions.push(vec![C64::new(p, 0.0)]);
        }
        f
    }

    #[test]
    fn matching() {
        let f = fiber_of(&[1.0, 2.0, 3.0]);
        assert_eq!(f.match_point(&[C64::new(2.0, 0.0)]).unwrap(), Some(1));
        assert_eq!(f.match_point(&[C64::new(2.0 + 1e-9, 0.0)]).unwrap(), Some(1));
        assert_eq!(f.match_point(&[C64::new(2.0 + 1e-4, 0.0)]).unwrap(), None);
        let g = fiber_of(&[1.0, 1.0 + 1e-7]);
        assert!(matches!(
            g.match_point(&[C64::new(1.0, 0.0)]),
            Err(MonodromyError::AmbiguousMatch { .. })
        ));
    }

    #[test]
    fn cubic_fiber() {
        let sys = SystemSpec::new(1, 1, vec![Expr::var(0).pow(3) - Expr::param(0)]).unwrap();
        let one = C64::new(1.0, 0.0);
        let seed = SeedPair { x_star: vec![one], z_star: vec![one] };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = complete_fiber(&sys, &seed, Some(3), &MonodromyConfig::default(), &mut rng).unwrap();
        assert!(f.complete);
        for s in &f.solutions {
            assert!((s[0].powu(3) - one).norm() < 1e-9);
        }
        assert!(f.min_separation() > 1.0);
    }

    #[test]
    fn rejects_bad_seed() {
        let sys = SystemSpec::new(1, 1, vec![Expr::var(0).pow(3) - Expr::param(0)]).unwrap();
        let seed = SeedPair { x_star: vec![C64::new(1.0, 0.0)], z_star: vec![C64::new(2.0, 0.0)] };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!(matches!(
            complete_fiber(&sys, &seed, None, &MonodromyConfig::default(), &mut rng),
            Err(MonodromyError::BadSeed { .. })
        ));
    }
}
