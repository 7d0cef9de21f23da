//! Maximum likelihood estimation of the judgment vector.
//!
//! The objective is convex, so any stationary point is a global minimizer.
//! For `d <= NEWTON_MAX_DIM` the solver takes damped Newton steps using the
//! closed-form Hessian; above that it falls back to gradient descent. Both use
//! Armijo backtracking, so the objective never increases between iterates
//! beyond the rounding level of the objective value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, JudgmentVector};
use crate::linalg::{dot, norm2};
use crate::model::{ComparisonDataset, Design, Evaluation};
use crate::selection::{pairs, RealizedSelection};

/// Largest dimension solved with Newton steps.
pub const NEWTON_MAX_DIM: usize = 64;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Zeros,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Ridge weight on `||w||^2`.
    pub mu: f64,
    /// Stop once `||grad||_2 <= tol_grad`.
    pub tol_grad: f64,
    pub max_iters: usize,
    pub init: Init,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            mu: 0.0,
            tol_grad: 1e-8,
            max_iters: 5000,
            init: Init::Zeros,
        }
    }
}

impl FitConfig {
    pub fn with_mu(mu: f64) -> Self {
        Self {
            mu,
            ..Self::default()
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidConfig(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        if !(self.tol_grad > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol_grad must be > 0, got {}",
                self.tol_grad
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if let Init::Given(w0) = &self.init {
            if w0.len() != d {
                return Err(Error::Dimension(format!(
                    "initial point has dimension {}, expected {d}",
                    w0.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub w_hat: JudgmentVector,
    pub final_grad_norm: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `nll(w) + mu ||w||^2` over `w`.
///
/// Running out of iterations is reported through `converged = false`; a
/// non-finite objective or gradient is an error.
pub fn fit(
    u: &FeatureMatrix,
    sel: &RealizedSelection,
    data: &ComparisonDataset,
    cfg: &FitConfig,
) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Precondition("cannot fit an empty dataset".into()));
    }
    cfg.validate(u.d())?;
    let design = Design::new(u, sel, data)?;
    let w0 = match &cfg.init {
        Init::Zeros => vec![0.0; u.d()],
        Init::Given(w) => w.clone(),
    };
    minimize(&design, w0, cfg)
}

/// Runs the solver on a prebuilt design.
pub fn minimize(design: &Design, mut w: Vec<f64>, cfg: &FitConfig) -> Result<FitResult> {
    let d = design.dim();
    let newton = d <= NEWTON_MAX_DIM;
    let mu = cfg.mu;
    let mut eval = design.evaluate(&w, mu, newton);
    let mut gd_step = 1.0;
    let mut iterations = 0;

    loop {
        check_finite(eval.value, &eval.gradient)?;
        let gnorm = norm2(&eval.gradient);
        if gnorm <= cfg.tol_grad {
            return Ok(finish(w, gnorm, eval.value, iterations, true));
        }
        if iterations >= cfg.max_iters {
            return Ok(finish(w, gnorm, eval.value, iterations, false));
        }
        iterations += 1;

        let steepest: Vec<f64> = eval.gradient.iter().map(|g| -g).collect();
        let newton_dir = eval
            .hessian
            .as_ref()
            .and_then(|h| newton_direction(h, &eval.gradient))
            .filter(|p| dot(p, &eval.gradient) < 0.0);

        let mut next = newton_dir
            .and_then(|p| line_search(design, &w, &eval, gnorm, &p, 1.0, mu))
            .map(|(x, _)| x);
        if next.is_none() {
            next = line_search(design, &w, &eval, gnorm, &steepest, gd_step, mu).map(|(x, t)| {
                gd_step = (t * 2.0).min(1e6);
                x
            });
        }
        let Some(next) = next else {
            // No decrease possible at working precision.
            return Ok(finish(w, gnorm, eval.value, iterations, false));
        };
        w = next;
        eval = design.evaluate(&w, mu, newton);
    }
}

fn finish(w: Vec<f64>, gnorm: f64, value: f64, iterations: usize, converged: bool) -> FitResult {
    FitResult {
        w_hat: JudgmentVector::new(w).expect("finite iterate"),
        final_grad_norm: gnorm,
        final_objective: value,
        iterations,
        converged,
    }
}

fn check_finite(value: f64, gradient: &[f64]) -> Result<()> {
    if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure(
            "objective or gradient became non-finite".into(),
        ));
    }
    Ok(())
}

/// Solves `(H + tau I) p = -g`, raising `tau` until the factorization succeeds.
fn newton_direction(h: &crate::linalg::SymMatrix, g: &[f64]) -> Option<Vec<f64>> {
    let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
    if let Some(p) = h.cholesky_solve(&rhs) {
        return Some(p);
    }
    let scale = (h.trace() / h.dim() as f64).abs().max(1e-12);
    let mut tau = scale * 1e-10;
    for _ in 0..40 {
        let mut damped = h.clone();
        damped.add_diagonal(tau);
        if let Some(p) = damped.cholesky_solve(&rhs) {
            return Some(p);
        }
        tau *= 10.0;
    }
    None
}

/// Relative size below which a predicted decrease is lost in the rounding of
/// the objective itself.
const ROUNDING_FLOOR: f64 = 1e3 * f64::EPSILON;

/// Backtracking along `p`. Returns the accepted point and step.
///
/// Steps whose predicted decrease clears the objective's rounding level must
/// pass the Armijo test. Below that level the objective cannot tell progress
/// from noise, so a step is accepted instead when it keeps the objective
/// within rounding and shrinks the gradient norm.
fn line_search(
    design: &Design,
    w: &[f64],
    eval: &Evaluation,
    gnorm: f64,
    p: &[f64],
    initial: f64,
    mu: f64,
) -> Option<(Vec<f64>, f64)> {
    let f0 = eval.value;
    let slope = dot(&eval.gradient, p);
    if !(slope < 0.0) {
        return None;
    }
    let floor = ROUNDING_FLOOR * (1.0 + f0.abs());
    let mut t = initial;
    let mut trial = vec![0.0; w.len()];
    while t >= MIN_STEP {
        for k in 0..w.len() {
            trial[k] = w[k] + t * p[k];
        }
        let accepted = if -t * slope > floor {
            let f = design.value(&trial, mu);
            f.is_finite() && f <= f0 + ARMIJO_C * t * slope
        } else {
            let e = design.evaluate(&trial, mu, false);
            e.value.is_finite() && e.value <= f0 + floor && norm2(&e.gradient) < gnorm
        };
        if accepted {
            return Some((trial, t));
        }
        t *= 0.5;
    }
    None
}

/// True iff `max_pairs |<w, masked diff>| <= b` (with `1e-12` slack).
pub fn check_in_wb(
    u: &FeatureMatrix,
    sel: &RealizedSelection,
    w: &JudgmentVector,
    b: f64,
) -> Result<bool> {
    if !(b >= 0.0) {
        return Err(Error::InvalidConfig(format!("bound must be >= 0, got {b}")));
    }
    Ok(max_contextual_gap(u, sel, w)? <= b + 1e-12)
}

/// `max over pairs of |<w, mask(U_i - U_j, tau(i, j))>|`.
pub fn max_contextual_gap(
    u: &FeatureMatrix,
    sel: &RealizedSelection,
    w: &JudgmentVector,
) -> Result<f64> {
    u.check_weights(w)?;
    sel.check_matches(u)?;
    let mut x = vec![0.0; u.d()];
    let mut best: f64 = 0.0;
    for (i, j) in pairs(u.n()) {
        sel.masked_difference_into(u, i, j, &mut x);
        best = best.max(dot(w.as_slice(), &x).abs());
    }
    Ok(best)
}
