//! Monodromy loops, fiber completion, and permutation harvesting.
//!
//! Permutations compose left to right: for loops `a` then `b`, the
//! concatenated loop acts as `sigma_a.then(&sigma_b)`.

mod deck;
mod fiber;
mod harvest;

pub use deck::{verify_deck_formula, DeckImage, DeckMapFn, DeckReport, DeckUndefined};
pub use fiber::{complete_fiber, complete_fiber_with, AdmitFn, FiberState};
pub use harvest::{harvest_permutations, loop_permutation, LoopResult, MonodromySample};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{WellConstrainedReport, C64};
use crate::linalg;
use crate::tracker::TrackSettings;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonodromyError {
    #[error("seed is not a regular solution (residual {residual:e}, relative smallest singular value {sigma:e})")]
    BadSeed { residual: f64, sigma: f64 },
    #[error("fiber stalled at {found} of {expected} solutions after {loops} loops")]
    FiberIncomplete {
        found: usize,
        expected: usize,
        loops: usize,
    },
    #[error("fiber grew to {found} solutions, more than the expected {expected}")]
    FiberExceedsDegree { found: usize, expected: usize },
    #[error("fiber is not complete")]
    FiberNotComplete,
    #[error("point matches fiber solutions {first} and {second}")]
    AmbiguousMatch { first: usize, second: usize },
    #[error("only {accepted} of {requested} loops succeeded in {attempts} attempts")]
    TooManyDiscards {
        attempts: usize,
        accepted: usize,
        requested: usize,
    },
    #[error("deck map undefined at solution {solution}: {reason}")]
    DeckUndefined { solution: usize, reason: String },
    #[error("deck image of solution {solution} has residual {residual:e}")]
    DeckResidualLarge { solution: usize, residual: f64 },
    #[error("deck image of solution {solution} matches no fiber point")]
    DeckImageUnmatched { solution: usize },
    #[error("deck map sends two fiber points to the same point")]
    DeckNotBijective,
}

impl From<&WellConstrainedReport> for MonodromyError {
    fn from(r: &WellConstrainedReport) -> Self {
        MonodromyError::BadSeed {
            residual: r.residual,
            sigma: r.relative_min_singular_value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyConfig {
    pub track: TrackSettings,
    /// Relative matching tolerance: `|x - s|_inf <= tol * max(1, |s|_inf)`.
    pub matching_tol: f64,
    pub stall_limit: usize,
    pub max_loops: usize,
    /// Waypoint spread; `None` uses `1 + |z*|_inf`.
    pub loop_scale: Option<f64>,
    /// Harvest gives up after `discard_factor * k` attempts.
    pub discard_factor: usize,
    /// Stop harvesting once the group order is unchanged for this many loops.
    pub stabilization_window: Option<usize>,
}

impl Default for MonodromyConfig {
    fn default() -> Self {
        Self {
            track: TrackSettings::default(),
            matching_tol: 1e-6,
            stall_limit: 10,
            max_loops: 200,
            loop_scale: None,
            discard_factor: 10,
            stabilization_window: None,
        }
    }
}

/// A closed polyline in parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub waypoints: Vec<Vec<C64>>,
}

impl LoopSpec {
    /// Traverses `self`, then `other`; both must share a base point.
    pub fn concat(&self, other: &LoopSpec) -> LoopSpec {
        let mut waypoints = self.waypoints.clone();
        waypoints.extend(other.waypoints.iter().skip(1).cloned());
        LoopSpec { waypoints }
    }

    pub fn reversed(&self) -> LoopSpec {
        LoopSpec {
            waypoints: self.waypoints.iter().rev().cloned().collect(),
        }
    }
}

pub fn default_loop_scale(z_star: &[C64]) -> f64 {
    1.0 + linalg::inf_norm(z_star)
}

/// Triangle loop `[z*, w1, w2, z*]` with `w_i = z* + scale * N_C(0, I)`.
pub fn random_loop<R: Rng + ?Sized>(z_star: &[C64], rng: &mut R, scale: f64) -> LoopSpec {
    let mut waypoint = || -> Vec<C64> {
        z_star
            .iter()
            .map(|z| z + linalg::complex_gaussian(rng) * scale)
            .collect()
    };
    let w1 = waypoint();
    let w2 = waypoint();
    LoopSpec {
        waypoints: vec![z_star.to_vec(), w1, w2, z_star.to_vec()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn loops_are_reproducible() {
        let z = vec![C64::new(1.0, 2.0), C64::new(-0.5, 0.0)];
        let a = random_loop(&z, &mut ChaCha8Rng::seed_from_u64(42), 3.0);
        let b = random_loop(&z, &mut ChaCha8Rng::seed_from_u64(42), 3.0);
        assert_eq!(a, b);
        assert_eq!(a.waypoints.len(), 4);
        assert_eq!(a.waypoints[0], z);
        assert_eq!(a.waypoints[3], z);
    }

    #[test]
    fn zero_scale_is_degenerate() {
        let z = vec![C64::new(1.0, 0.0)];
        let l = random_loop(&z, &mut ChaCha8Rng::seed_from_u64(1), 0.0);
        assert!(l.waypoints.iter().all(|w| *w == z));
    }

    #[test]
    fn concatenation_shares_base_point() {
        let z = vec![C64::new(0.0, 1.0)];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_loop(&z, &mut rng, 1.0);
        let b = random_loop(&z, &mut rng, 1.0);
        let ab = a.concat(&b);
        assert_eq!(ab.waypoints.len(), 7);
        assert_eq!(ab.waypoints[3], z);
        assert_eq!(a.reversed().waypoints[1], a.waypoints[2]);
    }
}
