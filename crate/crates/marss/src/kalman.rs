//! Kalman filter, smoother and lag-one covariance smoother with missing
//! observations and zero-variance rows.
//!
//! Missing observations are handled by zeroing the corresponding rows of
//! `y`, `a` and `Z` and the cross-covariances between observed and missing
//! rows of `H R Hᵀ`. Zero-variance rows are removed from every inverse with a
//! masked inverse, and data on such rows must agree with the prediction.

use std::f64::consts::PI;

use thiserror::Error;

use crate::linalg::{self, LinalgError, MaskSelector, Mat, Vector, ZERO_TOL};
use crate::model::{MaterializedParams, ModelSpec};

/// Tolerance for data on a zero-variance observation row: `|e| ≤ tol·(1+|y|)`.
pub const CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KalmanError {
    /// Data contradict a zero-variance observation; the likelihood is `+∞` as a sentinel.
    #[error("observation {row} at t={t} has zero variance but innovation {innovation:e} (log-likelihood = {loglik})")]
    Inconsistent { t: usize, row: usize, innovation: f64, loglik: f64 },
    #[error("singular innovation covariance at t={t}: {source}")]
    Singular { t: usize, source: LinalgError },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `n × T` observations; unobserved entries are stored as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesData {
    y: Mat,
    /// `observed[t-1][i]`.
    observed: Vec<Vec<bool>>,
}

impl TimeSeriesData {
    /// Treats NaN entries as missing.
    pub fn new(y: Mat) -> Self {
        let observed = (0..y.ncols())
            .map(|t| (0..y.nrows()).map(|i| !y[(i, t)].is_nan()).collect())
            .collect();
        Self::build(y, observed)
    }

    /// `mask[i][t]` is true when series `i` is observed at column `t`.
    pub fn with_mask(y: Mat, mask: Vec<Vec<bool>>) -> Result<Self, KalmanError> {
        if mask.len() != y.nrows() || mask.iter().any(|r| r.len() != y.ncols()) {
            return Err(KalmanError::Dimension("mask shape differs from data".into()));
        }
        let observed = (0..y.ncols())
            .map(|t| (0..y.nrows()).map(|i| mask[i][t] && !y[(i, t)].is_nan()).collect())
            .collect();
        Ok(Self::build(y, observed))
    }

    fn build(mut y: Mat, observed: Vec<Vec<bool>>) -> Self {
        for (t, col) in observed.iter().enumerate() {
            for (i, &o) in col.iter().enumerate() {
                if !o {
                    y[(i, t)] = 0.0;
                }
            }
        }
        Self { y, observed }
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn t_len(&self) -> usize {
        self.y.ncols()
    }

    /// Observations at time `t` (1-based), zeros where missing.
    pub fn y_at(&self, t: usize) -> Vector {
        self.y.column(t - 1).into_owned()
    }

    pub fn observed_at(&self, t: usize) -> &[bool] {
        &self.observed[t - 1]
    }

    pub fn is_observed(&self, i: usize, t: usize) -> bool {
        self.observed[t - 1][i]
    }

    pub fn values(&self) -> &Mat {
        &self.y
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().flatten().filter(|&&o| o).count()
    }

    /// A copy with entry `(i, t)` (1-based `t`) marked missing.
    pub fn with_missing(&self, i: usize, t: usize) -> Self {
        let mut out = self.clone();
        out.observed[t - 1][i] = false;
        out.y[(i, t - 1)] = 0.0;
        out
    }

    /// Values with NaN at missing entries.
    pub fn with_nan(&self) -> Mat {
        let mut y = self.y.clone();
        for (t, col) in self.observed.iter().enumerate() {
            for (i, &o) in col.iter().enumerate() {
                if !o {
                    y[(i, t)] = f64::NAN;
                }
            }
        }
        y
    }
}

/// Selectors for the observed (`Ω¹`) and missing (`Ω²`) rows.
pub fn missing_mask(observed: &[bool]) -> (MaskSelector, MaskSelector) {
    let o1 = MaskSelector::from_bools(observed);
    let o2 = o1.complement();
    (o1, o2)
}

/// Missing-value versions of `y`, `a`, `Z` and `H R Hᵀ`.
pub fn starred_obs_params(
    y: &Vector,
    a: &Vector,
    z: &Mat,
    rfull: &Mat,
    observed: &[bool],
) -> (Vector, Vector, Mat, Mat) {
    let mut ys = y.clone();
    let mut as_ = a.clone();
    let mut zs = z.clone();
    let mut rs = rfull.clone();
    for (i, &o) in observed.iter().enumerate() {
        if !o {
            ys[i] = 0.0;
            as_[i] = 0.0;
            zs.row_mut(i).fill(0.0);
            for (j, &oj) in observed.iter().enumerate() {
                if oj {
                    rs[(i, j)] = 0.0;
                    rs[(j, i)] = 0.0;
                }
            }
        }
    }
    (ys, as_, zs, rs)
}

/// Filter quantities for `t = t0..=T`.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub t0: usize,
    x_pred: Vec<Vector>,
    v_pred: Vec<Mat>,
    x_filt: Vec<Vector>,
    v_filt: Vec<Mat>,
    gain: Vec<Mat>,
    kz: Vec<Mat>,
    pub loglik: f64,
    /// Observed coordinates `(t, row)` whose innovation variance was zero.
    pub zero_variance_obs: Vec<(usize, usize)>,
}

impl FilterOutput {
    /// `x_t^{t-1}`; at `t0` this is `ξ`.
    pub fn x_pred(&self, t: usize) -> &Vector {
        &self.x_pred[t - self.t0]
    }
    pub fn v_pred(&self, t: usize) -> &Mat {
        &self.v_pred[t - self.t0]
    }
    pub fn x_filt(&self, t: usize) -> &Vector {
        &self.x_filt[t - self.t0]
    }
    pub fn v_filt(&self, t: usize) -> &Mat {
        &self.v_filt[t - self.t0]
    }
    pub fn gain(&self, t: usize) -> &Mat {
        &self.gain[t - self.t0]
    }
    pub fn last_t(&self) -> usize {
        self.t0 + self.x_filt.len() - 1
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<(), KalmanError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(KalmanError::NonFinite(what.into()));
    }
    Ok(())
}

/// Runs the filter and accumulates the innovations log-likelihood.
pub fn kalman_filter(
    spec: &ModelSpec,
    params: &MaterializedParams,
    data: &TimeSeriesData,
) -> Result<FilterOutput, KalmanError> {
    let (n, m, t_len, t0) = (spec.n, spec.m, spec.t_len, spec.t0);
    if data.n() != n || data.t_len() != t_len {
        return Err(KalmanError::Dimension(format!(
            "data is {}x{}, model expects {n}x{t_len}",
            data.n(),
            data.t_len()
        )));
    }
    check_finite(data.values().as_slice(), "data")?;
    let fixed_rows = spec.f_zero_rows();
    let cap = t_len + 1 - t0;
    let mut out = FilterOutput {
        t0,
        x_pred: Vec::with_capacity(cap),
        v_pred: Vec::with_capacity(cap),
        x_filt: Vec::with_capacity(cap),
        v_filt: Vec::with_capacity(cap),
        gain: Vec::with_capacity(cap),
        kz: Vec::with_capacity(cap),
        loglik: 0.0,
        zero_variance_obs: Vec::new(),
    };
    let eye = Mat::identity(m, m);
    for t in t0..=t_len {
        let (xp, vp) = if t == t0 {
            (params.xi.clone(), params.v0.clone())
        } else {
            let xf = out.x_filt.last().unwrap();
            let vf = out.v_filt.last().unwrap();
            let b = params.b(t);
            let xp = b * xf + params.u(t);
            let vp = linalg::symmetrize(&(b * vf * b.transpose() + params.qfull(t)));
            (xp, vp)
        };
        check_finite(xp.as_slice(), "predicted state")?;
        check_finite(vp.as_slice(), "predicted variance")?;
        if t == 0 {
            out.gain.push(Mat::zeros(m, n));
            out.kz.push(Mat::zeros(m, m));
            out.x_filt.push(xp.clone());
            out.v_filt.push(vp.clone());
            out.x_pred.push(xp);
            out.v_pred.push(vp);
            continue;
        }
        let observed = data.observed_at(t);
        let (ys, as_, zs, rs) =
            starred_obs_params(&data.y_at(t), params.a(t), params.z(t), params.rfull(t), observed);
        let fmat = linalg::symmetrize(&(&zs * &vp * zs.transpose() + rs));
        let e = &ys - &zs * &xp - &as_;
        let keep = MaskSelector::from_bools(
            &(0..n).map(|i| observed[i] && fmat[(i, i)] > ZERO_TOL).collect::<Vec<_>>(),
        );
        for i in 0..n {
            if observed[i] && !keep.contains(i) {
                if e[i].abs() > CONSISTENCY_TOL * (1.0 + ys[i].abs()) {
                    return Err(KalmanError::Inconsistent {
                        t,
                        row: i,
                        innovation: e[i],
                        loglik: f64::INFINITY,
                    });
                }
                out.zero_variance_obs.push((t, i));
            }
        }
        let mut k = if vp.amax() <= ZERO_TOL || keep.is_empty() {
            Mat::zeros(m, n)
        } else {
            let finv = linalg::masked_inverse(&fmat, &keep)
                .map_err(|source| KalmanError::Singular { t, source })?;
            &vp * zs.transpose() * finv
        };
        if t == t0 {
            for (i, &fixed) in fixed_rows.iter().enumerate() {
                if fixed {
                    k.row_mut(i).fill(0.0);
                }
            }
        }
        if !keep.is_empty() {
            let fk = keep.sub_square(&fmat);
            let ek = keep.sub_vector(&e);
            let chol = nalgebra::Cholesky::new(fk).ok_or_else(|| KalmanError::Singular {
                t,
                source: LinalgError::Singular("innovation covariance not positive definite".into()),
            })?;
            let logdet = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let quad = ek.dot(&chol.solve(&ek));
            out.loglik -= 0.5 * (keep.len() as f64 * (2.0 * PI).ln() + logdet + quad);
        }
        let kz = &k * &zs;
        let xf = &xp + &k * &e;
        let mut vf = linalg::symmetrize(&((&eye - &kz) * &vp));
        linalg::zero_null_rows(&mut vf);
        out.x_pred.push(xp);
        out.v_pred.push(vp);
        out.x_filt.push(xf);
        out.v_filt.push(vf);
        out.gain.push(k);
        out.kz.push(kz);
    }
    Ok(out)
}

/// Smoothed moments for `t = t0..=T`.
#[derive(Debug, Clone)]
pub struct SmootherOutput {
    pub t0: usize,
    xs: Vec<Vector>,
    vs: Vec<Mat>,
    /// `vlag[k]` is `cov(x_t, x_{t-1} | y)` for `t = t0 + k`; entry 0 is unused.
    vlag: Vec<Mat>,
    pub loglik: f64,
}

impl SmootherOutput {
    /// `x̃_t`.
    pub fn x(&self, t: usize) -> &Vector {
        &self.xs[t - self.t0]
    }
    /// `Ṽ_t`.
    pub fn v(&self, t: usize) -> &Mat {
        &self.vs[t - self.t0]
    }
    /// `Ṽ_{t,t-1}` for `t > t0`.
    pub fn vlag(&self, t: usize) -> &Mat {
        assert!(t > self.t0, "lag-one covariance defined for t > t0");
        &self.vlag[t - self.t0]
    }
    pub fn last_t(&self) -> usize {
        self.t0 + self.xs.len() - 1
    }
}

/// Backward pass, including the lag-one covariances.
pub fn kalman_smoother(
    spec: &ModelSpec,
    params: &MaterializedParams,
    filter: &FilterOutput,
) -> Result<SmootherOutput, KalmanError> {
    let (t0, t_len, m) = (spec.t0, spec.t_len, spec.m);
    let len = t_len + 1 - t0;
    let mut xs = vec![Vector::zeros(m); len];
    let mut vs = vec![Mat::zeros(m, m); len];
    let mut js = vec![Mat::zeros(m, m); len];
    xs[len - 1] = filter.x_filt(t_len).clone();
    vs[len - 1] = filter.v_filt(t_len).clone();
    for t in (t0 + 1..=t_len).rev() {
        let vp = filter.v_pred(t);
        let keep = MaskSelector::from_bools(
            &(0..m).map(|i| vp[(i, i)] > ZERO_TOL).collect::<Vec<_>>(),
        );
        // A rank-deficient predicted covariance still has a well-defined
        // smoother gain through its pseudo-inverse.
        let vp_inv = linalg::masked_inverse(vp, &keep).unwrap_or_else(|_| linalg::pinv(vp));
        let j = filter.v_filt(t - 1) * params.b(t).transpose() * vp_inv;
        let k = t - t0;
        xs[k - 1] = filter.x_filt(t - 1) + &j * (&xs[k] - filter.x_pred(t));
        let mut v = linalg::symmetrize(&(filter.v_filt(t - 1) + &j * (&vs[k] - vp) * j.transpose()));
        linalg::zero_null_rows(&mut v);
        vs[k - 1] = v;
        js[k - 1] = j;
    }
    let mut vlag = vec![Mat::zeros(m, m); len];
    if len > 1 {
        let eye = Mat::identity(m, m);
        let last = len - 1;
        vlag[last] = (&eye - &filter.kz[last]) * params.b(t_len) * filter.v_filt(t_len - 1);
        for t in (t0 + 2..=t_len).rev() {
            let k = t - t0;
            let vf = filter.v_filt(t - 1);
            let inner = &vlag[k] - params.b(t) * vf;
            vlag[k - 1] = vf * js[k - 2].transpose() + &js[k - 1] * inner * js[k - 2].transpose();
        }
    }
    Ok(SmootherOutput { t0, xs, vs, vlag, loglik: filter.loglik })
}

/// Filter then smoother.
pub fn filter_and_smooth(
    spec: &ModelSpec,
    params: &MaterializedParams,
    data: &TimeSeriesData,
) -> Result<(FilterOutput, SmootherOutput), KalmanError> {
    let f = kalman_filter(spec, params, data)?;
    let s = kalman_smoother(spec, params, &f)?;
    Ok((f, s))
}
