//! The EM loop: smoother-based E-step, ordered M-step, convergence control,
//! zero-variance pinning and Monte Carlo initialization.

mod init;
pub mod kemcheck;
mod pin;

pub use init::{default_init, mc_init_search, random_init, McOutcome};
pub use kemcheck::{kemcheck, probe, Rule, Violation};
pub use pin::{pin_small_variances, PIN_THRESHOLD};

use thiserror::Error;

use crate::expectations::{y_expectations, ExpectationSet};
use crate::kalman::{filter_and_smooth, KalmanError, TimeSeriesData};
use crate::linalg::LinalgError;
use crate::model::{FreeParams, MaterializedParams, ModelError, ModelSpec, ParamName};
use crate::updates::{update_parameter, UpdateError};

/// Log-likelihood drop that counts as a monotonicity violation.
pub const MONOTONE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmError {
    #[error(transparent)]
    Kalman(#[from] KalmanError),
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("model check failed:\n{}", format_violations(.0))]
    Check(Vec<Violation>),
    #[error("log-likelihood decreased by {drop:e} at iteration {iteration}")]
    Decrease { iteration: usize, drop: f64 },
    #[error("every Monte Carlo restart failed; first error: {0}")]
    AllRestartsFailed(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  {x}")).collect::<Vec<_>>().join("\n")
}

/// What to do when the log-likelihood goes down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotonicityAction {
    Warn,
    Abort,
    /// Warn for the first `n − 1` violations and abort on the `n`-th.
    WarnThenAbort(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EMConfig {
    pub max_iter: usize,
    /// Stop once successive log-likelihoods differ by less than this.
    pub abstol: f64,
    /// Re-run the smoother after every parameter update.
    pub safe_mode: bool,
    pub monotonicity: MonotonicityAction,
    pub mc_inits: usize,
    pub mc_seed: u64,
    pub mc_perturb_scale: f64,
    /// EM iterations per Monte Carlo restart.
    pub mc_burst: usize,
    /// Try to fix Q/R diagonal values that shrink below [`PIN_THRESHOLD`] at zero.
    pub pin_variances: bool,
}

impl Default for EMConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            abstol: 1e-8,
            safe_mode: false,
            monotonicity: MonotonicityAction::WarnThenAbort(3),
            mc_inits: 0,
            mc_seed: 0,
            mc_perturb_scale: 0.5,
            mc_burst: 15,
            pin_variances: true,
        }
    }
}

impl EMConfig {
    pub fn validate(&self) -> Result<(), EmError> {
        if !(self.abstol > 0.0) {
            return Err(EmError::Config(format!("abstol must be positive, got {}", self.abstol)));
        }
        if self.max_iter == 0 {
            return Err(EmError::Config("max_iter must be at least 1".into()));
        }
        if let MonotonicityAction::WarnThenAbort(0) = self.monotonicity {
            return Err(EmError::Config("warn-then-abort needs a positive count".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// The model the parameters belong to; differs from the input when
    /// variances were pinned at zero.
    pub spec: ModelSpec,
    pub params: FreeParams,
    /// Log-likelihood at the start of each iteration; the last entry belongs to `params`.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn loglik(&self) -> f64 {
        *self.loglik_trace.last().expect("a fit has at least one log-likelihood")
    }
}

/// Filter, smoother and expectations at `params`.
pub fn e_step(
    spec: &ModelSpec,
    params: &FreeParams,
    data: &TimeSeriesData,
) -> Result<ExpectationSet, EmError> {
    let mp = MaterializedParams::new(spec, params)?;
    let (_, s) = filter_and_smooth(spec, &mp, data)?;
    Ok(y_expectations(spec, &mp, data, &s)?)
}

/// Updates β, υ, q, ζ, α, r, p, λ in turn against the same expectations.
pub fn m_step(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<FreeParams, UpdateError> {
    let mut next = params.clone();
    for name in ParamName::ALL {
        if spec.design(name).n_free() > 0 {
            *next.get_mut(name) = update_parameter(name, spec, &next, ex)?;
        }
    }
    Ok(next)
}

/// One iteration from `params`. Returns the updated values and the
/// log-likelihood of `params`.
pub fn em_step(
    spec: &ModelSpec,
    params: &FreeParams,
    data: &TimeSeriesData,
    safe_mode: bool,
) -> Result<(FreeParams, f64), EmError> {
    let ex = e_step(spec, params, data)?;
    let loglik = ex.loglik;
    if !safe_mode {
        return Ok((m_step(spec, params, &ex)?, loglik));
    }
    let mut next = params.clone();
    let mut ex = ex;
    let mut first = true;
    for name in ParamName::ALL {
        if spec.design(name).n_free() == 0 {
            continue;
        }
        if !first {
            ex = e_step(spec, &next, data)?;
        }
        first = false;
        *next.get_mut(name) = update_parameter(name, spec, &next, &ex)?;
    }
    Ok((next, loglik))
}

/// Runs EM from `init` until the log-likelihood changes by less than
/// `abstol` or `max_iter` log-likelihoods have been computed.
pub fn em_fit(
    spec: &ModelSpec,
    init: &FreeParams,
    data: &TimeSeriesData,
    config: &EMConfig,
) -> Result<FitResult, EmError> {
    config.validate()?;
    spec.check_params(init)?;
    let mut spec = spec.clone();
    let mut params = init.clone();
    let mut trace: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut violations = 0usize;
    let mut converged = false;
    loop {
        let (next, ll) = em_step(&spec, &params, data, config.safe_mode)?;
        let iteration = trace.len() + 1;
        if let Some(&prev) = trace.last() {
            let drop = prev - ll;
            if drop > MONOTONE_TOL {
                violations += 1;
                let abort = match config.monotonicity {
                    MonotonicityAction::Warn => false,
                    MonotonicityAction::Abort => true,
                    MonotonicityAction::WarnThenAbort(n) => violations >= n,
                };
                if abort {
                    return Err(EmError::Decrease { iteration, drop });
                }
                warnings.push(format!("log-likelihood decreased by {drop:e} at iteration {iteration}"));
            }
        }
        trace.push(ll);
        if trace.len() >= 2 && (trace[trace.len() - 1] - trace[trace.len() - 2]).abs() < config.abstol {
            converged = true;
            break;
        }
        if trace.len() >= config.max_iter {
            break;
        }
        params = next;
        if config.pin_variances {
            let (s, p, w) = pin_small_variances(&spec, &params, data);
            spec = s;
            params = p;
            warnings.extend(w);
        }
    }
    if !converged {
        warnings.push(format!("no convergence after {} iterations", trace.len()));
    }
    Ok(FitResult { spec, params, iterations: trace.len(), loglik_trace: trace, converged, warnings })
}
