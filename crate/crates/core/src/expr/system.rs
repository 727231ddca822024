use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{Scratch, Tape};
use super::{jacobian_exprs, Expr, ExprError, Symbol, C64};
use crate::linalg::{self, CMatrix, CVector};

/// Residual bound a seed must meet after Newton polish.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
/// Relative smallest-singular-value bound for an invertible Jacobian.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// A point `(x*, z*)` on the solution variety.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPair {
    pub x_star: Vec<C64>,
    pub z_star: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WellConstrainedReport {
    pub well_constrained: bool,
    pub residual: f64,
    /// Smallest singular value of `d_x F` relative to the largest.
    pub relative_min_singular_value: f64,
}

/// A square parametric system `F(x; z) = 0` with `n` unknowns and `m`
/// parameters, compiled for repeated evaluation of residuals and Jacobians.
///
/// Immutable after construction; share it behind an `Arc` across threads.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    n: usize,
    m: usize,
    equations: Vec<Expr>,
    residual: Tape,
    // F followed by d_x F in row-major order
    residual_and_jx: Tape,
    // d_z F in row-major order
    jz: Tape,
}

impl SystemSpec {
    pub fn new(n: usize, m: usize, equations: Vec<Expr>) -> Result<Self, ExprError> {
        if equations.len() != n {
            return Err(ExprError::NotSquare {
                equations: equations.len(),
                unknowns: n,
            });
        }
        for e in &equations {
            for s in e.symbols() {
                let ok = match s {
                    Symbol::Var(i) => i < n,
                    Symbol::Param(j) => j < m,
                };
                if !ok {
                    return Err(ExprError::UndeclaredSymbol(s));
                }
            }
        }
        let vars: Vec<Symbol> = (0..n).map(Symbol::Var).collect();
        let params: Vec<Symbol> = (0..m).map(Symbol::Param).collect();
        let jx = jacobian_exprs(&equations, &vars);
        let jz = jacobian_exprs(&equations, &params);

        let mut fx_outputs = equations.clone();
        fx_outputs.extend(jx.into_iter().flatten());
        let jz_outputs: Vec<Expr> = jz.into_iter().flatten().collect();

        Ok(Self {
            n,
            m,
            residual: Tape::compile(&equations),
            residual_and_jx: Tape::compile(&fx_outputs),
            jz: Tape::compile(&jz_outputs),
            equations,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.n
    }

    pub fn num_params(&self) -> usize {
        self.m
    }

    pub fn equations(&self) -> &[Expr] {
        &self.equations
    }

    fn check_dims(&self, x: &[C64], z: &[C64]) -> Result<(), ExprError> {
        if x.len() != self.n {
            return Err(ExprError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if z.len() != self.m {
            return Err(ExprError::DimensionMismatch {
                expected: self.m,
                got: z.len(),
            });
        }
        Ok(())
    }

    /// Residuals `F(x; z)`.
    pub fn eval(&self, x: &[C64], z: &[C64]) -> Result<CVector, ExprError> {
        self.check_dims(x, z)?;
        let mut out = CVector::zeros(self.n);
        self.residual
            .eval_into(x, z, &mut Scratch::new(), out.as_mut_slice())?;
        Ok(out)
    }

    pub fn eval_with_scratch(
        &self,
        x: &[C64],
        z: &[C64],
        scratch: &mut Scratch,
    ) -> Result<CVector, ExprError> {
        self.check_dims(x, z)?;
        let mut out = CVector::zeros(self.n);
        self.residual.eval_into(x, z, scratch, out.as_mut_slice())?;
        Ok(out)
    }

    /// Residuals together with `d_x F`.
    pub fn eval_with_jacobian(
        &self,
        x: &[C64],
        z: &[C64],
        scratch: &mut Scratch,
    ) -> Result<(CVector, CMatrix), ExprError> {
        self.check_dims(x, z)?;
        let n = self.n;
        let mut buf = vec![C64::new(0.0, 0.0); n + n * n];
        self.residual_and_jx.eval_into(x, z, scratch, &mut buf)?;
        let f = CVector::from_column_slice(&buf[..n]);
        let j = CMatrix::from_row_slice(n, n, &buf[n..]);
        Ok((f, j))
    }

    pub fn jacobian_x(&self, x: &[C64], z: &[C64]) -> Result<CMatrix, ExprError> {
        Ok(self.eval_with_jacobian(x, z, &mut Scratch::new())?.1)
    }

    pub fn jacobian_z_with_scratch(
        &self,
        x: &[C64],
        z: &[C64],
        scratch: &mut Scratch,
    ) -> Result<CMatrix, ExprError> {
        self.check_dims(x, z)?;
        let mut buf = vec![C64::new(0.0, 0.0); self.n * self.m];
        self.jz.eval_into(x, z, scratch, &mut buf)?;
        Ok(CMatrix::from_row_slice(self.n, self.m, &buf))
    }

    pub fn jacobian_z(&self, x: &[C64], z: &[C64]) -> Result<CMatrix, ExprError> {
        self.jacobian_z_with_scratch(x, z, &mut Scratch::new())
    }

    /// Checks the residual and Jacobian-rank conditions at a seed.
    pub fn verify_well_constrained(
        &self,
        seed: &SeedPair,
        residual_tol: f64,
        rank_tol: f64,
    ) -> WellConstrainedReport {
        let failed = WellConstrainedReport {
            well_constrained: false,
            residual: f64::INFINITY,
            relative_min_singular_value: 0.0,
        };
        let Ok((f, j)) = self.eval_with_jacobian(&seed.x_star, &seed.z_star, &mut Scratch::new())
        else {
            return failed;
        };
        let residual = linalg::inf_norm(f.as_slice());
        let sigma = linalg::relative_smallest_singular_value(&j);
        WellConstrainedReport {
            well_constrained: residual <= residual_tol && sigma > rank_tol,
            residual,
            relative_min_singular_value: sigma,
        }
    }
}

/// Replaces `eqs` by `target` random complex linear combinations of them.
///
/// Every common zero of the inputs stays a zero of the outputs. The mixing
/// matrix is redrawn (up to three draws) if it is numerically rank deficient.
pub fn randomize_equations<R: Rng + ?Sized>(
    eqs: &[Expr],
    target: usize,
    rng: &mut R,
) -> Result<Vec<Expr>, ExprError> {
    if target == 0 || eqs.len() < target {
        return Err(ExprError::BadRandomization {
            available: eqs.len(),
            requested: target,
        });
    }
    const ATTEMPTS: usize = 3;
    for _ in 0..ATTEMPTS {
        let coeffs = CMatrix::from_fn(target, eqs.len(), |_, _| linalg::complex_gaussian(rng));
        if linalg::relative_smallest_singular_value(&coeffs) <= DEFAULT_RANK_TOL {
            continue;
        }
        let mixed = (0..target)
            .map(|r| Expr::sum(eqs.iter().enumerate().map(|(c, e)| e * coeffs[(r, c)])))
            .collect();
        return Ok(mixed);
    }
    Err(ExprError::RandomMatrixSingular { attempts: ATTEMPTS })
}

/// Squares up an overdetermined equation list into an `n x n` system.
pub fn randomize_square<R: Rng + ?Sized>(
    eqs: &[Expr],
    n: usize,
    m: usize,
    rng: &mut R,
) -> Result<SystemSpec, ExprError> {
    SystemSpec::new(n, m, randomize_equations(eqs, n, rng)?)
}
