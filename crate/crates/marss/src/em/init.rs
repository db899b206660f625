//! Starting values: a deterministic default and seeded random restarts.

use std::cell::RefCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{em_fit, EMConfig, EmError, MonotonicityAction};
use crate::kalman::TimeSeriesData;
use crate::linalg::{self, Mat, Vector};
use crate::model::{materialize, FreeParams, ModelSpec, ParamDesign, ParamName};

/// Least-squares free values that make `design` closest to `target` at every time.
fn project(design: &ParamDesign, target: &Mat) -> Vector {
    let s = design.n_free();
    if s == 0 {
        return Vector::zeros(0);
    }
    let goal = linalg::vec(target);
    let times = design.n_times();
    let k = goal.len();
    let mut d = Mat::zeros(k * times, s);
    let mut rhs = Vector::zeros(k * times);
    for t in 0..times {
        d.view_mut((t * k, 0), (k, s)).copy_from(design.d_at(t));
        rhs.rows_mut(t * k, k).copy_from(&(&goal - design.f_at(t)));
    }
    linalg::pinv(&d) * rhs
}

/// Mean per-series variance of the observed data, or 1 when undefined.
fn data_scale(data: &TimeSeriesData) -> f64 {
    let mut total = 0.0;
    let mut count = 0;
    for i in 0..data.n() {
        let vals: Vec<f64> =
            (1..=data.t_len()).filter(|&t| data.is_observed(i, t)).map(|t| data.values()[(i, t - 1)]).collect();
        if vals.len() >= 2 {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            total += vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
            count += 1;
        }
    }
    if count == 0 || !(total > 0.0) {
        1.0
    } else {
        total / count as f64
    }
}

/// State at `t0` implied by the first observation through a pseudo-inverse of Z.
fn xi_from_data(spec: &ModelSpec, params: &FreeParams, data: &TimeSeriesData) -> Mat {
    let z = materialize(&spec.z, &params.zeta, 0).unwrap_or_else(|_| Mat::zeros(spec.n, spec.m));
    let a = materialize(&spec.a, &params.alpha, 0).unwrap_or_else(|_| Mat::zeros(spec.n, 1));
    let obs: Vec<usize> = (0..spec.n).filter(|&i| data.is_observed(i, 1)).collect();
    if obs.is_empty() {
        return Mat::zeros(spec.m, 1);
    }
    let zo = z.select_rows(&obs);
    let resid = Mat::from_fn(obs.len(), 1, |r, _| data.values()[(obs[r], 0)] - a[(obs[r], 0)]);
    linalg::pinv(&zo) * resid
}

fn loading_identity(rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |i, j| if i % cols.max(1) == j { 1.0 } else { 0.0 })
}

fn fill(
    spec: &ModelSpec,
    data: &TimeSeriesData,
    mut variance: impl FnMut(usize) -> Mat,
    mut regression: impl FnMut(ParamName, Mat) -> Mat,
) -> FreeParams {
    let mut p = spec.zero_params();
    let (m, n) = (spec.m, spec.n);
    p.beta = project(&spec.b, &regression(ParamName::B, Mat::identity(m, m)));
    p.upsilon = project(&spec.u, &regression(ParamName::U, Mat::zeros(m, 1)));
    p.q = project(&spec.q, &variance(spec.sq()));
    p.zeta = project(&spec.z, &regression(ParamName::Z, loading_identity(n, m)));
    p.alpha = project(&spec.a, &regression(ParamName::A, Mat::zeros(n, 1)));
    p.r = project(&spec.r, &variance(spec.sr()));
    p.p = project(&spec.xi, &xi_from_data(spec, &p, data));
    p.lambda = project(&spec.lambda, &variance(spec.sl()));
    p
}

/// Identity-like B and Z, zero u and a, diagonal variances at a tenth of the
/// data variance, and ξ from the first observation.
pub fn default_init(spec: &ModelSpec, data: &TimeSeriesData) -> FreeParams {
    let v = 0.1 * data_scale(data);
    fill(spec, data, |k| Mat::identity(k, k) * v, |_, target| target)
}

/// Variances with log-uniform diagonals on `[1e-2, 1]`; other free values at
/// the default plus `scale`-sized standard normal perturbations.
pub fn random_init(spec: &ModelSpec, data: &TimeSeriesData, scale: f64, rng: &mut ChaCha8Rng) -> FreeParams {
    let rng = RefCell::new(rng);
    fill(
        spec,
        data,
        |k| {
            let mut r = rng.borrow_mut();
            Mat::from_diagonal(&Vector::from_fn(k, |_, _| 10f64.powf(r.random_range(-2.0..=0.0))))
        },
        |_, target| {
            let mut r = rng.borrow_mut();
            target.map(|x| x + scale * r.sample::<f64, _>(StandardNormal))
        },
    )
}

/// Outcome of [`mc_init_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct McOutcome {
    /// End point of the best restart's burst.
    pub params: FreeParams,
    pub loglik: f64,
    /// Final burst log-likelihood per restart; `None` when the restart failed.
    pub restarts: Vec<Option<f64>>,
    pub best: usize,
}

/// Draws `mc_inits` seeded starting points, runs `mc_burst` EM iterations
/// from each in parallel and keeps the one with the highest log-likelihood.
pub fn mc_init_search(
    spec: &ModelSpec,
    data: &TimeSeriesData,
    config: &EMConfig,
) -> Result<McOutcome, EmError> {
    if config.mc_inits == 0 {
        return Err(EmError::Config("mc_inits must be at least 1".into()));
    }
    let burst = EMConfig {
        max_iter: config.mc_burst.max(1),
        monotonicity: MonotonicityAction::Warn,
        pin_variances: false,
        ..config.clone()
    };
    let runs: Vec<Result<(FreeParams, f64), EmError>> = (0..config.mc_inits)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.mc_seed);
            rng.set_stream(k as u64);
            let init = random_init(spec, data, config.mc_perturb_scale, &mut rng);
            let fit = em_fit(spec, &init, data, &burst)?;
            let ll = fit.loglik();
            if !ll.is_finite() {
                return Err(EmError::Config(format!("restart {k} produced a non-finite log-likelihood")));
            }
            Ok((fit.params, ll))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (k, r) in runs.iter().enumerate() {
        if let Ok((_, ll)) = r {
            if best.is_none_or(|(_, b)| *ll > b) {
                best = Some((k, *ll));
            }
        }
    }
    let restarts = runs.iter().map(|r| r.as_ref().ok().map(|x| x.1)).collect();
    match best {
        Some((k, ll)) => {
            let params = runs[k].as_ref().expect("best restart succeeded").0.clone();
            Ok(McOutcome { params, loglik: ll, restarts, best: k })
        }
        None => {
            let first = runs.into_iter().find_map(|r| r.err()).expect("no restart succeeded");
            Err(EmError::AllRestartsFailed(first.to_string()))
        }
    }
}
