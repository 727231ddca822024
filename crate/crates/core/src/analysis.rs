//! End-to-end analyses: sample, complete the fiber, harvest loops, and
//! summarize the group, with optional comparison against the catalog.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::monodromy::{
    complete_fiber_with, harvest_permutations, verify_deck_formula, DeckReport, FiberState, MonodromyConfig,
    MonodromyError, MonodromySample,
};
use crate::perm::{block_size_multiset, structure_report, GroupReport, PermGroup, Permutation};
use crate::problems::{instantiate, Expectation, MinimalProblem, ProblemError, ProblemInstance};

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_LOOPS: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub seed: u64,
    pub loops: usize,
    pub monodromy: MonodromyConfig,
    pub verify_deck: bool,
    pub allow_long: bool,
    /// Record wall time in the report; off by default so reports replay byte for byte.
    pub timings: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            loops: DEFAULT_LOOPS,
            monodromy: MonodromyConfig::default(),
            verify_deck: false,
            allow_long: false,
            timings: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error("`{0}` is long running; pass --allow-long or set GALMONO_ALLOW_LONG=1")]
    LongRunning(String),
}

impl AnalysisError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalysisError::Monodromy(MonodromyError::FiberIncomplete { .. }) => 2,
            AnalysisError::Monodromy(MonodromyError::TooManyDiscards { .. }) => 3,
            _ => 1,
        }
    }
}

/// Everything computed for one problem instance.
pub struct Analysis {
    pub instance: ProblemInstance,
    pub fiber: FiberState,
    pub sample: MonodromySample,
    pub group: PermGroup,
    pub report: GroupReport,
    pub deck: Vec<DeckReport>,
    pub seconds: f64,
}

pub fn analyze(problem: &dyn MinimalProblem, config: &AnalysisConfig) -> Result<Analysis, AnalysisError> {
    if problem.long_running() && !config.allow_long {
        return Err(AnalysisError::LongRunning(problem.id().to_string()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let instance = instantiate(problem, &mut rng)?;
    let mut analysis = analyze_instance(problem, instance, config, &mut rng)?;
    analysis.seconds = start.elapsed().as_secs_f64();
    Ok(analysis)
}

/// Completes the fiber of a given instance and summarizes its group,
/// continuing the caller's random stream.
pub fn analyze_instance<R: Rng + ?Sized>(
    problem: &dyn MinimalProblem,
    instance: ProblemInstance,
    config: &AnalysisConfig,
    rng: &mut R,
) -> Result<Analysis, AnalysisError> {
    let start = Instant::now();
    let fiber = complete_fiber_with(
        &instance.system,
        &instance.seed,
        problem.expected_degree(),
        &config.monodromy,
        rng,
        instance.admit.as_deref(),
    )?;
    let sample = harvest_permutations(&instance.system, &fiber, config.loops, &config.monodromy, rng)?;
    let group = sample.group(fiber.len());
    let report = structure_report(&group);
    let mut analysis = Analysis {
        instance,
        fiber,
        sample,
        group,
        report,
        deck: Vec::new(),
        seconds: 0.0,
    };
    if config.verify_deck {
        analysis.deck = analysis.verify_deck()?;
    }
    analysis.seconds = start.elapsed().as_secs_f64();
    Ok(analysis)
}

impl Analysis {
    /// Runs every closed-form deck map on the fiber and checks that the
    /// induced index maps commute with the monodromy generators.
    pub fn verify_deck(&self) -> Result<Vec<DeckReport>, MonodromyError> {
        self.instance
            .deck_maps
            .iter()
            .map(|d| {
                let mut r = verify_deck_formula(&self.instance.system, &self.fiber, d.name, d.map.as_ref())?;
                r.in_centralizer = Some(self.group.generators().iter().all(|g| g.commutes_with(&r.index_map)));
                Ok(r)
            })
            .collect()
    }

    pub fn document(&self, problem: &dyn MinimalProblem, config: &AnalysisConfig) -> ReportDocument {
        ReportDocument {
            version: REPORT_VERSION,
            tool: format!("galmono {}", env!("CARGO_PKG_VERSION")),
            problem: problem.id().to_string(),
            seed: config.seed,
            degree: self.fiber.len(),
            degree_certified: problem.expected_degree() == Some(self.fiber.len()),
            completion_loops: self.fiber.loops_used,
            loops: self.sample.permutations.len(),
            attempts: self.sample.attempts,
            discarded: self.sample.discarded,
            group: self.report.clone(),
            generators: self.sample.permutations.iter().map(Generator::from).collect(),
            deck: self.deck.clone(),
            expectation: problem.expectation().map(|e| check_expectation(&e, &self.report)),
            wall_seconds: config.timings.then_some(self.seconds),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub cycles: String,
    pub images: Permutation,
}

impl From<&Permutation> for Generator {
    fn from(p: &Permutation) -> Self {
        Generator {
            cycles: p.cycle_notation(),
            images: p.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: u32,
    pub tool: String,
    pub problem: String,
    pub seed: u64,
    pub degree: usize,
    /// False when the fiber was closed by the stall heuristic alone.
    pub degree_certified: bool,
    pub completion_loops: usize,
    pub loops: usize,
    pub attempts: usize,
    pub discarded: usize,
    pub group: GroupReport,
    pub generators: Vec<Generator>,
    pub deck: Vec<DeckReport>,
    pub expectation: Option<ExpectationCheck>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckLine {
    pub field: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationCheck {
    /// Named group the observed data are consistent with when `pass` holds.
    pub consistent_with: String,
    pub checks: Vec<CheckLine>,
    pub pass: bool,
}

fn line(field: &str, expected: String, observed: String) -> CheckLine {
    CheckLine {
        field: field.into(),
        pass: expected == observed,
        expected,
        observed,
    }
}

/// Compares degree, order, parity, block-size multiset, and deck order.
pub fn check_expectation(e: &Expectation, r: &GroupReport) -> ExpectationCheck {
    let checks = vec![
        line("degree", e.degree.to_string(), r.degree.to_string()),
        line("order", e.order.to_string(), r.order.to_string()),
        line("all_even", e.all_even.to_string(), r.all_even.to_string()),
        line("block_sizes", format!("{:?}", e.block_sizes), format!("{:?}", block_size_multiset(r))),
        line(
            "deck_order",
            e.deck_order.to_string(),
            r.deck_order.map_or_else(|| "unknown".into(), |d| d.to_string()),
        ),
    ];
    ExpectationCheck {
        consistent_with: e.group.clone(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

/// One catalog line per problem.
pub fn list_catalog(problems: &[Box<dyn MinimalProblem>]) -> Vec<String> {
    problems
        .iter()
        .map(|p| {
            let degree = p.expected_degree().map_or_else(|| "?".into(), |d| d.to_string());
            let group = p.expectation().map_or_else(String::new, |e| format!(", order {}, {}", e.order, e.group));
            let long = if p.long_running() { " [long]" } else { "" };
            format!(
                "{:<24} n={:<2} m={:<2} degree {}{}{}  {}",
                p.id(),
                p.num_unknowns(),
                p.num_params(),
                degree,
                group,
                long,
                p.description()
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{find, ToyCubic};

    #[test]
    fn toy_cubic_report_matches_catalog() {
        // a random triangle encloses the single branch point about one time in ten
        let cfg = AnalysisConfig {
            seed: 3,
            verify_deck: true,
            ..Default::default()
        };
        let a = analyze(&ToyCubic, &cfg).unwrap();
        let doc = a.document(&ToyCubic, &cfg);
        assert_eq!(doc.degree, 3);
        assert!(doc.expectation.unwrap().pass);
        assert!(doc.wall_seconds.is_none());
    }

    #[test]
    fn long_problems_are_gated() {
        let p = find("three-view-homography").unwrap();
        let err = analyze(p.as_ref(), &AnalysisConfig::default()).err().unwrap();
        assert!(matches!(err, AnalysisError::LongRunning(_)));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn catalog_listing_has_every_problem() {
        let lines = list_catalog(&crate::problems::catalog());
        assert_eq!(lines.len(), 13);
        assert!(lines.iter().any(|l| l.starts_with("p3p ") && l.contains("degree 8")));
        assert!(lines.iter().any(|l| l.starts_with("five-point ") && l.contains("degree 20")));
    }
}
