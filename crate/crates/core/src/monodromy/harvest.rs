use log::{debug, info};
use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{default_loop_scale, random_loop, FiberState, LoopSpec, MonodromyConfig, MonodromyError};
use crate::expr::SystemSpec;
use crate::perm::{PermGroup, Permutation};
use crate::tracker::{track_many_polyline, PathStatus};

/// Why a loop produced no permutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopResult {
    Permutation(Permutation),
    PathFailed { start: usize, status: PathStatus },
    Unmatched { start: usize },
    NotBijective { target: usize },
}

/// Tracks the whole fiber around `lp` and reads off the induced permutation
/// (`sigma(i)` is the index of the endpoint of the path starting at `i`).
pub fn loop_permutation(
    system: &SystemSpec,
    fiber: &FiberState,
    lp: &LoopSpec,
    config: &MonodromyConfig,
) -> Result<LoopResult, MonodromyError> {
    let outcomes = track_many_polyline(system, &fiber.solutions, &lp.waypoints, &config.track);
    let d = fiber.len();
    let mut images = Vec::with_capacity(d);
    let mut hit = vec![false; d];
    for (start, out) in outcomes.into_iter().enumerate() {
        let Some(x) = out.x_end else {
            return Ok(LoopResult::PathFailed {
                start,
                status: out.status,
            });
        };
        let Some(j) = fiber.match_point(&x)? else {
            return Ok(LoopResult::Unmatched { start });
        };
        if hit[j] {
            return Ok(LoopResult::NotBijective { target: j });
        }
        hit[j] = true;
        images.push(j);
    }
    Ok(LoopResult::Permutation(
        Permutation::new(images).expect("injective map on a finite set"),
    ))
}

/// Harvested loop permutations with everything needed for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromySample {
    pub permutations: Vec<Permutation>,
    pub loops: Vec<LoopSpec>,
    pub attempts: usize,
    pub discarded: usize,
}

impl MonodromySample {
    pub fn group(&self, degree: usize) -> PermGroup {
        PermGroup::new(degree, self.permutations.clone()).expect("permutations share the fiber degree")
    }
}

/// Collects `k` permutations from random loops, discarding any loop with a
/// failed path, an unmatched endpoint, or a non-bijective endpoint map.
///
/// With a stabilization window, stops early once the generated group's
/// order has not changed for that many consecutive accepted loops.
pub fn harvest_permutations<R: Rng + ?Sized>(
    system: &SystemSpec,
    fiber: &FiberState,
    k: usize,
    config: &MonodromyConfig,
    rng: &mut R,
) -> Result<MonodromySample, MonodromyError> {
    if !fiber.complete {
        return Err(MonodromyError::FiberNotComplete);
    }
    let scale = config.loop_scale.unwrap_or_else(|| default_loop_scale(&fiber.z_star));
    let max_attempts = config.discard_factor.max(1) * k.max(1);
    let mut sample = MonodromySample {
        permutations: Vec::new(),
        loops: Vec::new(),
        attempts: 0,
        discarded: 0,
    };
    let mut last_order: Option<BigUint> = None;
    let mut unchanged = 0;

    while sample.permutations.len() < k {
        if sample.attempts >= max_attempts {
            return Err(MonodromyError::TooManyDiscards {
                attempts: sample.attempts,
                accepted: sample.permutations.len(),
                requested: k,
            });
        }
        sample.attempts += 1;
        let lp = random_loop(&fiber.z_star, rng, scale);
        match loop_permutation(system, fiber, &lp, config)? {
            LoopResult::Permutation(p) => {
                sample.permutations.push(p);
                sample.loops.push(lp);
            }
            other => {
                sample.discarded += 1;
                debug!("discarded loop {}: {:?}", sample.attempts, other);
                continue;
            }
        }
        if let Some(window) = config.stabilization_window {
            let order = sample.group(fiber.len()).order();
            if last_order.as_ref() == Some(&order) {
                unchanged += 1;
            } else {
                unchanged = 0;
                last_order = Some(order);
            }
            if unchanged >= window {
                break;
            }
        }
    }
    info!(
        "harvested {} permutations ({} discarded)",
        sample.permutations.len(),
        sample.discarded
    );
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cubic_fiber() -> (SystemSpec, FiberState) {
        let sys = SystemSpec::new(1, 1, vec![Expr::var(0).pow(3) - Expr::param(0)]).unwrap();
        let w = |k: f64| vec![C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k / 3.0)];
        let mut fiber = FiberState::new(vec![C64::new(1.0, 0.0)], w(0.0), 1e-6, Some(3));
        fiber.solutions.push(w(1.0));
        fiber.solutions.push(w(2.0));
        fiber.complete = true;
        (sys, fiber)
    }

    #[test]
    fn degenerate_loop_is_identity() {
        let (sys, fiber) = cubic_fiber();
        let lp = LoopSpec {
            waypoints: vec![fiber.z_star.clone(); 4],
        };
        let r = loop_permutation(&sys, &fiber, &lp, &MonodromyConfig::default()).unwrap();
        assert_eq!(r, LoopResult::Permutation(Permutation::identity(3)));
    }

    #[test]
    fn loop_around_origin_is_a_three_cycle() {
        let (sys, fiber) = cubic_fiber();
        let lp = LoopSpec {
            waypoints: vec![
                vec![C64::new(1.0, 0.0)],
                vec![C64::new(-1.0, 1.0)],
                vec![C64::new(-1.0, -1.0)],
                vec![C64::new(1.0, 0.0)],
            ],
        };
        let LoopResult::Permutation(p) = loop_permutation(&sys, &fiber, &lp, &MonodromyConfig::default()).unwrap()
        else {
            panic!("loop failed");
        };
        assert_eq!(p.order(), 3);
    }

    #[test]
    fn harvest_generates_cyclic_group() {
        let (sys, fiber) = cubic_fiber();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = harvest_permutations(&sys, &fiber, 8, &MonodromyConfig::default(), &mut rng).unwrap();
        assert_eq!(s.permutations.len(), 8);
        assert_eq!(s.group(3).order(), 3u32.into());
    }

    #[test]
    fn incomplete_fiber_is_rejected() {
        let (sys, mut fiber) = cubic_fiber();
        fiber.complete = false;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(
            harvest_permutations(&sys, &fiber, 1, &MonodromyConfig::default(), &mut rng),
            Err(MonodromyError::FiberNotComplete)
        );
    }
}
