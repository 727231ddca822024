//! Predictor-corrector continuation along straight parameter segments.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, Scratch, SystemSpec, C64};
use crate::linalg::{self, CVector, LinalgError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSettings {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Endpoint Newton updates must fall below `corrector_tol * max(1, |x|_inf)`.
    pub corrector_tol: f64,
    /// Same test for the corrector at interior steps.
    pub path_tol: f64,
    pub max_corrector_iters: usize,
    pub max_steps: usize,
    pub step_expand: f64,
    pub expand_after: usize,
    pub step_shrink: f64,
    pub jacobian_cond_abort: f64,
    /// Extra Newton iterations allowed when polishing the endpoint.
    pub endpoint_polish_iters: usize,
}

impl Default for TrackSettings {
    fn default() -> Self {
        Self {
            initial_step: 0.05,
            min_step: 1e-7,
            max_step: 0.25,
            corrector_tol: 1e-10,
            path_tol: 1e-8,
            max_corrector_iters: 3,
            max_steps: 5000,
            step_expand: 2.0,
            expand_after: 4,
            step_shrink: 0.5,
            jacobian_cond_abort: 1e13,
            endpoint_polish_iters: 6,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SettingsError {
    #[error("step sizes must satisfy 0 < min_step <= initial_step <= max_step <= 1")]
    StepOrder,
    #[error("corrector tolerances must satisfy 0 < corrector_tol <= path_tol")]
    CorrectorTol,
    #[error("step shrink must lie in (0, 1) and step expand must exceed 1")]
    StepFactors,
}

impl TrackSettings {
    pub fn validate(&self) -> Result<(), SettingsError> {
        let ordered = 0.0 < self.min_step
            && self.min_step <= self.initial_step
            && self.initial_step <= self.max_step
            && self.max_step <= 1.0;
        if !ordered {
            return Err(SettingsError::StepOrder);
        }
        if !(self.corrector_tol > 0.0 && self.path_tol >= self.corrector_tol) {
            return Err(SettingsError::CorrectorTol);
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0 && self.step_expand > 1.0) {
            return Err(SettingsError::StepFactors);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathStatus {
    Success,
    StepLimitExceeded,
    MinStepReached,
    CorrectorDiverged,
    IllConditioned,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathOutcome {
    pub status: PathStatus,
    /// Present only on success.
    pub x_end: Option<Vec<C64>>,
    pub steps_taken: usize,
    pub smallest_step_used: f64,
}

impl PathOutcome {
    pub fn is_success(&self) -> bool {
        self.status == PathStatus::Success
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError {
    #[error("singular Jacobian (condition estimate {cond:e})")]
    SingularJacobian { cond: f64 },
    #[error("Newton iteration did not converge within the iteration limit")]
    NotConverged,
    #[error("Newton iteration diverged")]
    Diverged,
    #[error(transparent)]
    Evaluation(#[from] ExprError),
}

impl From<LinalgError> for NewtonError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { cond } => NewtonError::SingularJacobian { cond },
            LinalgError::NonFinite => NewtonError::Diverged,
        }
    }
}

fn scaled_tol(tol: f64, x: &[C64]) -> f64 {
    tol * linalg::inf_norm(x).max(1.0)
}

fn newton_impl(
    sys: &SystemSpec,
    x: &[C64],
    z: &[C64],
    tol: f64,
    max_iters: usize,
    cond_abort: f64,
    scratch: &mut Scratch,
) -> Result<Vec<C64>, NewtonError> {
    let mut x = x.to_vec();
    let mut prev = f64::INFINITY;
    for _ in 0..max_iters {
        let (f, j) = sys.eval_with_jacobian(&x, z, scratch)?;
        let dx = linalg::solve(&j, &(-&f), cond_abort)?;
        let step = linalg::inf_norm(dx.as_slice());
        let tol_x = scaled_tol(tol, &x);
        if step > 0.5 * prev && step > tol_x {
            // stagnation at the rounding floor of an ill-conditioned solution
            if linalg::inf_norm(f.as_slice()) <= tol {
                return Ok(x);
            }
            // a corrector that stops contracting is heading to another path
            return Err(NewtonError::Diverged);
        }
        for (xi, di) in x.iter_mut().zip(dx.iter()) {
            *xi += di;
        }
        if !linalg::is_finite(&x) {
            return Err(NewtonError::Diverged);
        }
        if step <= tol_x {
            return Ok(x);
        }
        prev = step;
    }
    Err(NewtonError::NotConverged)
}

/// Newton's method for `F(.; z) = 0` starting at `x`.
///
/// Converged when an update has infinity norm at most `tol * max(1, |x|_inf)`.
pub fn newton_correct(
    sys: &SystemSpec,
    x: &[C64],
    z: &[C64],
    tol: f64,
    max_iters: usize,
) -> Result<Vec<C64>, NewtonError> {
    let cond_abort = TrackSettings::default().jacobian_cond_abort;
    newton_impl(sys, x, z, tol, max_iters, cond_abort, &mut Scratch::new())
}

fn failure_status(e: &NewtonError) -> PathStatus {
    match e {
        NewtonError::SingularJacobian { .. } => PathStatus::IllConditioned,
        NewtonError::NotConverged => PathStatus::MinStepReached,
        NewtonError::Diverged | NewtonError::Evaluation(_) => PathStatus::CorrectorDiverged,
    }
}

struct Segment<'a> {
    sys: &'a SystemSpec,
    z0: &'a [C64],
    dz: Vec<C64>,
    cond_abort: f64,
}

impl Segment<'_> {
    fn z_at(&self, t: f64) -> Vec<C64> {
        self.z0.iter().zip(&self.dz).map(|(a, d)| a + d * t).collect()
    }

    // dx/dt from the Davidenko equation d_x F xdot = -d_z F dz
    fn velocity(&self, x: &[C64], t: f64, scratch: &mut Scratch) -> Result<CVector, NewtonError> {
        let z = self.z_at(t);
        let (_, jx) = self.sys.eval_with_jacobian(x, &z, scratch)?;
        let jz = self.sys.jacobian_z_with_scratch(x, &z, scratch)?;
        let rhs = -(jz * CVector::from_column_slice(&self.dz));
        Ok(linalg::solve(&jx, &rhs, self.cond_abort)?)
    }

    fn rk4(&self, x: &[C64], t: f64, h: f64, scratch: &mut Scratch) -> Result<Vec<C64>, NewtonError> {
        let x0 = CVector::from_column_slice(x);
        let k1 = self.velocity(x0.as_slice(), t, scratch)?;
        let x1 = &x0 + &k1 * C64::from(h / 2.0);
        let k2 = self.velocity(x1.as_slice(), t + h / 2.0, scratch)?;
        let x2 = &x0 + &k2 * C64::from(h / 2.0);
        let k3 = self.velocity(x2.as_slice(), t + h / 2.0, scratch)?;
        let x3 = &x0 + &k3 * C64::from(h);
        let k4 = self.velocity(x3.as_slice(), t + h, scratch)?;
        let incr = (k1 + k2 * C64::from(2.0) + k3 * C64::from(2.0) + k4) * C64::from(h / 6.0);
        let out = x0 + incr;
        if linalg::is_finite(out.as_slice()) {
            Ok(out.as_slice().to_vec())
        } else {
            Err(NewtonError::Diverged)
        }
    }
}

fn track_with_scratch(
    sys: &SystemSpec,
    x0: &[C64],
    z0: &[C64],
    z1: &[C64],
    s: &TrackSettings,
    scratch: &mut Scratch,
) -> PathOutcome {
    let seg = Segment {
        sys,
        z0,
        dz: z1.iter().zip(z0).map(|(b, a)| b - a).collect(),
        cond_abort: s.jacobian_cond_abort,
    };
    let fail = |status, steps, smallest| PathOutcome {
        status,
        x_end: None,
        steps_taken: steps,
        smallest_step_used: smallest,
    };

    let mut x = x0.to_vec();
    let mut t = 0.0f64;
    let mut h = s.initial_step;
    let mut smallest = f64::INFINITY;
    let mut streak = 0usize;
    let mut steps = 0usize;

    while t < 1.0 {
        if steps >= s.max_steps {
            return fail(PathStatus::StepLimitExceeded, steps, smallest);
        }
        steps += 1;
        let last = 1.0 - t <= h;
        let step = if last { 1.0 - t } else { h };
        let t_next = if last { 1.0 } else { t + step };

        let attempt = seg.rk4(&x, t, step, scratch).and_then(|xp| {
            newton_impl(
                sys,
                &xp,
                &seg.z_at(t_next),
                s.path_tol,
                s.max_corrector_iters,
                s.jacobian_cond_abort,
                scratch,
            )
        });
        match attempt {
            Ok(xc) => {
                x = xc;
                t = t_next;
                smallest = smallest.min(step);
                streak += 1;
                if streak >= s.expand_after {
                    h = (h * s.step_expand).min(s.max_step);
                    streak = 0;
                }
            }
            Err(e) => {
                streak = 0;
                h *= s.step_shrink;
                if h < s.min_step {
                    log::trace!("step underflow at t = {t}: {e}");
                    return fail(failure_status(&e), steps, smallest.min(h));
                }
            }
        }
    }

    // polish at the target parameters
    let polished = newton_impl(
        sys,
        &x,
        z1,
        s.corrector_tol,
        s.max_corrector_iters + s.endpoint_polish_iters,
        s.jacobian_cond_abort,
        scratch,
    );
    let x_end = match polished {
        Ok(v) => v,
        Err(e) => {
            log::trace!("endpoint polish failed: {e}");
            return fail(failure_status(&e), steps, smallest);
        }
    };
    match sys.eval_with_scratch(&x_end, z1, scratch) {
        Ok(r) if linalg::inf_norm(r.as_slice()) <= 10.0 * s.corrector_tol => PathOutcome {
            status: PathStatus::Success,
            x_end: Some(x_end),
            steps_taken: steps,
            smallest_step_used: smallest,
        },
        other => {
            log::trace!("endpoint residual too large: {:?}", other.map(|r| linalg::inf_norm(r.as_slice())));
            fail(PathStatus::CorrectorDiverged, steps, smallest)
        }
    }
}

/// Continues the solution `x0` of `F(.; z0)` along `(1 - t) z0 + t z1`.
pub fn track_segment(
    sys: &SystemSpec,
    x0: &[C64],
    z0: &[C64],
    z1: &[C64],
    settings: &TrackSettings,
) -> PathOutcome {
    track_with_scratch(sys, x0, z0, z1, settings, &mut Scratch::new())
}

/// Tracks each start point independently; outputs follow input order.
pub fn track_many(
    sys: &SystemSpec,
    starts: &[Vec<C64>],
    z0: &[C64],
    z1: &[C64],
    settings: &TrackSettings,
) -> Vec<PathOutcome> {
    starts
        .par_iter()
        .map_init(Scratch::new, |scratch, x0| {
            track_with_scratch(sys, x0, z0, z1, settings, scratch)
        })
        .collect()
}

/// Tracks along consecutive waypoints, stopping at the first failed segment.
pub fn track_polyline(
    sys: &SystemSpec,
    x0: &[C64],
    waypoints: &[Vec<C64>],
    settings: &TrackSettings,
) -> PathOutcome {
    let mut scratch = Scratch::new();
    track_polyline_with_scratch(sys, x0, waypoints, settings, &mut scratch)
}

pub(crate) fn track_polyline_with_scratch(
    sys: &SystemSpec,
    x0: &[C64],
    waypoints: &[Vec<C64>],
    settings: &TrackSettings,
    scratch: &mut Scratch,
) -> PathOutcome {
    let mut x = x0.to_vec();
    let mut steps = 0;
    let mut smallest = f64::INFINITY;
    for w in waypoints.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let out = track_with_scratch(sys, &x, &w[0], &w[1], settings, scratch);
        steps += out.steps_taken;
        smallest = smallest.min(out.smallest_step_used);
        match out.x_end {
            Some(v) if out.status == PathStatus::Success => x = v,
            _ => {
                return PathOutcome {
                    steps_taken: steps,
                    smallest_step_used: smallest,
                    ..out
                }
            }
        }
    }
    PathOutcome {
        status: PathStatus::Success,
        x_end: Some(x),
        steps_taken: steps,
        smallest_step_used: smallest,
    }
}

/// Tracks every start point around the same polyline in parallel.
pub fn track_many_polyline(
    sys: &SystemSpec,
    starts: &[Vec<C64>],
    waypoints: &[Vec<C64>],
    settings: &TrackSettings,
) -> Vec<PathOutcome> {
    starts
        .par_iter()
        .map_init(Scratch::new, |scratch, x0| {
            track_polyline_with_scratch(sys, x0, waypoints, settings, scratch)
        })
        .collect()
}
