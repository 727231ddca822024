use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FiberState, MonodromyError};
use crate::expr::{SystemSpec, C64};
use crate::linalg;
use crate::perm::Permutation;

/// Raised by a closed-form deck map at a point where it is not defined.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{0}")]
pub struct DeckUndefined(pub String);

/// A closed-form map `(solution, parameters) -> solution`.
pub type DeckMapFn = dyn Fn(&[C64], &[C64]) -> Result<Vec<C64>, DeckUndefined> + Send + Sync;

const DECK_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckImage {
    /// 1-based fiber indices.
    pub source: usize,
    pub target: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckReport {
    pub name: String,
    pub images: Vec<DeckImage>,
    pub index_map: Permutation,
    pub max_residual: f64,
    pub is_involution: bool,
    pub fixed_point_free: bool,
    /// Filled in by callers that know the monodromy group.
    pub in_centralizer: Option<bool>,
}

/// Applies a deck formula to every fiber solution and reads off the index map.
pub fn verify_deck_formula(
    system: &SystemSpec,
    fiber: &FiberState,
    name: &str,
    map: &DeckMapFn,
) -> Result<DeckReport, MonodromyError> {
    if !fiber.complete {
        return Err(MonodromyError::FiberNotComplete);
    }
    let z = &fiber.z_star;
    let mut images = Vec::with_capacity(fiber.len());
    let mut index = Vec::with_capacity(fiber.len());
    let mut max_residual = 0.0f64;
    for (i, x) in fiber.solutions.iter().enumerate() {
        let y = map(x, z).map_err(|e| MonodromyError::DeckUndefined {
            solution: i + 1,
            reason: e.0,
        })?;
        let residual = system
            .eval(&y, z)
            .map(|r| linalg::inf_norm(r.as_slice()))
            .unwrap_or(f64::INFINITY);
        if !(residual <= DECK_RESIDUAL_TOL) {
            return Err(MonodromyError::DeckResidualLarge {
                solution: i + 1,
                residual,
            });
        }
        let j = fiber
            .match_point(&y)?
            .ok_or(MonodromyError::DeckImageUnmatched { solution: i + 1 })?;
        max_residual = max_residual.max(residual);
        images.push(DeckImage {
            source: i + 1,
            target: j + 1,
            residual,
        });
        index.push(j);
    }
    let index_map = Permutation::new(index).map_err(|_| MonodromyError::DeckNotBijective)?;
    Ok(DeckReport {
        name: name.to_string(),
        images,
        is_involution: index_map.then(&index_map).is_identity(),
        fixed_point_free: index_map.fixed_points() == 0,
        index_map,
        max_residual,
        in_centralizer: None,
    })
}
