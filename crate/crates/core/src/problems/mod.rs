//! Catalog of minimal problems with forward samplers and deck maps.
//!
//! Projective unknowns are dehomogenized by random affine charts drawn with
//! each instance, so the square system itself depends on the RNG stream.

mod abs_pose;
mod basic;
pub mod geom;
mod homography;
mod relative;

pub use abs_pose::AbsPose;
pub use basic::{P3pGeneric, ToyCubic, P3p};
pub use homography::{Homography4pt, HomographySMatrix, ThreeViewHomography};
pub use relative::{Essential, FivePoint, FivePointNormalized};

use std::sync::Arc;

use num_bigint::BigUint;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, SeedPair, SystemSpec, C64, DEFAULT_RANK_TOL, DEFAULT_RESIDUAL_TOL};
use crate::linalg;
use crate::monodromy::{AdmitFn, DeckMapFn};

const SAMPLE_ATTEMPTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("no regular sample after {attempts} attempts (last residual {residual:e}, relative smallest singular value {sigma:e})")]
    DegenerateSample {
        attempts: usize,
        residual: f64,
        sigma: f64,
    },
    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),
    #[error("`{0}` has no random chart")]
    NoChart(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Catalog expectations for a problem's monodromy group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expectation {
    pub degree: usize,
    #[serde(with = "decimal")]
    pub order: BigUint,
    pub all_even: bool,
    pub primitive: bool,
    /// Block sizes of all nontrivial block systems, ascending.
    pub block_sizes: Vec<usize>,
    pub deck_order: usize,
    pub deck_invariants: Vec<u64>,
    /// Named group the data are consistent with.
    pub group: String,
}

mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
}

pub(crate) fn pow2(k: u32) -> BigUint {
    BigUint::from(1u32) << k
}

#[derive(Clone)]
pub struct NamedDeckMap {
    pub name: &'static str,
    pub map: Arc<DeckMapFn>,
}

/// A sampled seed together with the square system it solves.
#[derive(Clone)]
pub struct ProblemInstance {
    pub system: Arc<SystemSpec>,
    pub seed: SeedPair,
    pub deck_maps: Vec<NamedDeckMap>,
    /// Membership test for new fiber solutions, when the square system
    /// has solutions off the problem's component.
    pub admit: Option<Arc<AdmitFn>>,
}

impl ProblemInstance {
    pub fn deck_map(&self, name: &str) -> Option<&NamedDeckMap> {
        self.deck_maps.iter().find(|d| d.name == name)
    }
}

pub trait MinimalProblem: Send + Sync {
    fn id(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn num_unknowns(&self) -> usize;
    fn num_params(&self) -> usize;
    fn expected_degree(&self) -> Option<usize>;
    fn expectation(&self) -> Option<Expectation>;
    fn deck_map_names(&self) -> &'static [&'static str] {
        &[]
    }
    /// Excluded from default runs.
    /// Offset of the projective block dehomogenized by the random chart,
    /// whose equation is then the last one. The block runs to the end of
    /// the unknowns.
    fn chart_offset(&self) -> Option<usize> {
        None
    }
    fn long_running(&self) -> bool {
        false
    }
    /// One raw draw: data, seed solution, charts, and system.
    fn draw(&self, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError>;
}

// one or two Newton steps remove sampling round-off
fn polish(system: &SystemSpec, seed: &mut SeedPair) {
    let residual = |x: &[C64]| {
        system
            .eval(x, &seed.z_star)
            .map(|r| linalg::inf_norm(r.as_slice()))
            .unwrap_or(f64::INFINITY)
    };
    for _ in 0..2 {
        let before = residual(&seed.x_star);
        if before == 0.0 {
            return;
        }
        let Ok(j) = system.jacobian_x(&seed.x_star, &seed.z_star) else { return };
        let Ok(f) = system.eval(&seed.x_star, &seed.z_star) else { return };
        let Ok(dx) = linalg::solve(&j, &(-f), 1e13) else { return };
        let x: Vec<C64> = seed.x_star.iter().zip(dx.iter()).map(|(a, b)| a + b).collect();
        if residual(&x) < before {
            seed.x_star = x;
        } else {
            return;
        }
    }
}

/// Draws until the seed is a regular solution of its system.
pub fn instantiate(problem: &dyn MinimalProblem, rng: &mut dyn RngCore) -> Result<ProblemInstance, ProblemError> {
    let mut last = (f64::INFINITY, 0.0);
    for _ in 0..SAMPLE_ATTEMPTS {
        let mut inst = match problem.draw(rng) {
            Ok(i) => i,
            Err(ProblemError::Expr(ExprError::RandomMatrixSingular { .. })) => continue,
            Err(e) => return Err(e),
        };
        polish(&inst.system, &mut inst.seed);
        let report = inst
            .system
            .verify_well_constrained(&inst.seed, DEFAULT_RESIDUAL_TOL, DEFAULT_RANK_TOL);
        if report.well_constrained {
            return Ok(inst);
        }
        last = (report.residual, report.relative_min_singular_value);
    }
    Err(ProblemError::DegenerateSample {
        attempts: SAMPLE_ATTEMPTS,
        residual: last.0,
        sigma: last.1,
    })
}

/// The same data on a fresh random chart. Solutions and deck maps are
/// rescaled onto the new chart.
pub fn recharted(
    problem: &dyn MinimalProblem,
    inst: &ProblemInstance,
    rng: &mut dyn RngCore,
) -> Result<ProblemInstance, ProblemError> {
    let offset = problem
        .chart_offset()
        .ok_or_else(|| ProblemError::NoChart(problem.id().to_string()))?;
    let n = inst.system.num_unknowns();
    let chart = linalg::gaussian_vec(rng, n - offset);
    let mut eqs = inst.system.equations()[..n - 1].to_vec();
    eqs.push(relative::chart_equation(&chart, offset));
    let onto = |x: Vec<C64>, chart: &[C64]| relative::rechart(x, chart, offset);
    let x = onto(inst.seed.x_star.clone(), &chart).map_err(|_| ProblemError::DegenerateSample {
        attempts: 1,
        residual: f64::INFINITY,
        sigma: 0.0,
    })?;
    let deck = inst
        .deck_maps
        .iter()
        .map(|d| {
            let (old, chart) = (d.map.clone(), chart.clone());
            NamedDeckMap {
                name: d.name,
                map: Arc::new(move |x: &[C64], z: &[C64]| relative::rechart(old(x, z)?, &chart, offset)),
            }
        })
        .collect();
    let mut out = assemble(n, inst.system.num_params(), eqs, x, inst.seed.z_star.clone(), deck)?;
    out.admit = inst.admit.clone();
    Ok(out)
}

/// All problems in catalog order.
pub fn catalog() -> Vec<Box<dyn MinimalProblem>> {
    vec![
        Box::new(ToyCubic),
        Box::new(P3p),
        Box::new(P3pGeneric),
        Box::new(AbsPose::new(3, 0)),
        Box::new(AbsPose::new(2, 1)),
        Box::new(AbsPose::new(1, 2)),
        Box::new(AbsPose::new(0, 3)),
        Box::new(FivePoint),
        Box::new(FivePointNormalized),
        Box::new(Essential),
        Box::new(Homography4pt),
        Box::new(HomographySMatrix),
        Box::new(ThreeViewHomography),
    ]
}

pub fn find(id: &str) -> Result<Box<dyn MinimalProblem>, ProblemError> {
    catalog()
        .into_iter()
        .find(|p| p.id() == id)
        .ok_or_else(|| ProblemError::UnknownProblem(id.to_string()))
}

/// Builds the system and checks that the sampled seed satisfies it.
pub(crate) fn assemble(
    n: usize,
    m: usize,
    equations: Vec<crate::expr::Expr>,
    x_star: Vec<C64>,
    z_star: Vec<C64>,
    deck_maps: Vec<NamedDeckMap>,
) -> Result<ProblemInstance, ProblemError> {
    let system = SystemSpec::new(n, m, equations)?;
    Ok(ProblemInstance {
        system: Arc::new(system),
        seed: SeedPair { x_star, z_star },
        deck_maps,
        admit: None,
    })
}
