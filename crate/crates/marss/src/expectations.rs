//! Conditional moments of the hidden states and of the (partially missing)
//! observations given all observed data.

use crate::kalman::{SmootherOutput, TimeSeriesData};
use crate::linalg::{self, LinalgError, MaskSelector, Mat, Vector, ZERO_TOL};
use crate::model::{MaterializedParams, ModelSpec};

/// `IR_t = I − R·(R restricted to ℧)⁻¹` and the selector ℧ it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsConditioner {
    pub ir: Mat,
    /// Observed rows with positive variance.
    pub selector: MaskSelector,
}

/// Builds `IR_t` from `H R Hᵀ` and the observation mask.
///
/// Rows that are observed and have positive variance condition the missing
/// rows; observed zero-variance rows carry no information about the
/// observation noise and are treated like missing ones here.
pub fn ir_matrix(rfull: &Mat, observed: &[bool]) -> Result<ObsConditioner, LinalgError> {
    let n = rfull.nrows();
    if observed.len() != n {
        return Err(LinalgError::Dimension(format!(
            "mask has {} entries, R is {n}x{n}",
            observed.len()
        )));
    }
    let selector = MaskSelector::from_bools(
        &(0..n).map(|i| observed[i] && rfull[(i, i)] > ZERO_TOL).collect::<Vec<_>>(),
    );
    let ir = Mat::identity(n, n) - rfull * linalg::masked_inverse(rfull, &selector)?;
    Ok(ObsConditioner { ir, selector })
}

/// `P̃_t = Ṽ_t + x̃_t x̃_tᵀ` for `t = t0..=T` and `P̃_{t,t−1}` for `t > t0`
/// (entry 0 of the lag series is zero).
pub fn state_moments(smoother: &SmootherOutput) -> (Vec<Mat>, Vec<Mat>) {
    let t0 = smoother.t0;
    let last = smoother.last_t();
    let m = smoother.x(t0).len();
    let p = (t0..=last)
        .map(|t| {
            let x = smoother.x(t);
            linalg::symmetrize(&(smoother.v(t) + x * x.transpose()))
        })
        .collect();
    let plag = (t0..=last)
        .map(|t| {
            if t == t0 {
                Mat::zeros(m, m)
            } else {
                smoother.vlag(t) + smoother.x(t) * smoother.x(t - 1).transpose()
            }
        })
        .collect();
    (p, plag)
}

/// Every conditional moment used by the M-step.
///
/// State quantities are indexed by `t = t0..=T`, observation quantities by
/// `t = 1..=T`.
#[derive(Debug, Clone)]
pub struct ExpectationSet {
    pub t0: usize,
    pub t_len: usize,
    xs: Vec<Vector>,
    vs: Vec<Mat>,
    vlag: Vec<Mat>,
    ps: Vec<Mat>,
    plag: Vec<Mat>,
    ys: Vec<Vector>,
    os: Vec<Mat>,
    ws: Vec<Mat>,
    yx: Vec<Mat>,
    yxlag: Vec<Mat>,
    irs: Vec<Mat>,
    /// Marginal log-likelihood of the parameters the moments were computed under.
    pub loglik: f64,
}

impl ExpectationSet {
    /// `x̃_t`.
    pub fn x(&self, t: usize) -> &Vector {
        &self.xs[t - self.t0]
    }
    /// `Ṽ_t`.
    pub fn v(&self, t: usize) -> &Mat {
        &self.vs[t - self.t0]
    }
    /// `Ṽ_{t,t−1}`, `t > t0`.
    pub fn vlag(&self, t: usize) -> &Mat {
        debug_assert!(t > self.t0);
        &self.vlag[t - self.t0]
    }
    /// `P̃_t = E[x_t x_tᵀ]`.
    pub fn p(&self, t: usize) -> &Mat {
        &self.ps[t - self.t0]
    }
    /// `P̃_{t,t−1} = E[x_t x_{t−1}ᵀ]`, `t > t0`.
    pub fn plag(&self, t: usize) -> &Mat {
        debug_assert!(t > self.t0);
        &self.plag[t - self.t0]
    }
    /// `ỹ_t`.
    pub fn y(&self, t: usize) -> &Vector {
        &self.ys[t - 1]
    }
    /// `Õ_t = E[y_t y_tᵀ]`.
    pub fn o(&self, t: usize) -> &Mat {
        &self.os[t - 1]
    }
    /// `W̃_t = Õ_t − ỹ_t ỹ_tᵀ`.
    pub fn w(&self, t: usize) -> &Mat {
        &self.ws[t - 1]
    }
    /// `E[y_t x_tᵀ]`.
    pub fn yx(&self, t: usize) -> &Mat {
        &self.yx[t - 1]
    }
    /// `E[y_t x_{t−1}ᵀ]`, defined for `t − 1 ≥ t0`.
    pub fn yxlag(&self, t: usize) -> &Mat {
        debug_assert!(t > self.t0);
        &self.yxlag[t - 1]
    }
    /// `IR_t`.
    pub fn ir(&self, t: usize) -> &Mat {
        &self.irs[t - 1]
    }

    /// A copy with the state means replaced by `means[t − t0]` while every
    /// conditional covariance and the observation moments `ỹ`, `Õ` stay put.
    /// Second moments involving the states are rebuilt from the new means.
    ///
    /// Used to evaluate the expected log-likelihood at parameter values that
    /// move deterministic state rows, and to substitute `ξ` for the fixed
    /// rows of the initial state.
    pub fn with_means(&self, means: &[Vector]) -> Self {
        assert_eq!(means.len(), self.xs.len(), "one mean per state time step");
        let mut out = self.clone();
        let t0 = self.t0;
        for (k, m) in means.iter().enumerate() {
            out.ps[k] = linalg::symmetrize(&(&self.vs[k] + m * m.transpose()));
            if k > 0 {
                out.plag[k] = &self.vlag[k] + m * means[k - 1].transpose();
            }
        }
        for t in 1..=self.t_len {
            let y = &self.ys[t - 1];
            if t >= t0 {
                let k = t - t0;
                out.yx[t - 1] = &self.yx[t - 1] - y * self.xs[k].transpose() + y * means[k].transpose();
            }
            if t > t0 {
                let k = t - 1 - t0;
                out.yxlag[t - 1] =
                    &self.yxlag[t - 1] - y * self.xs[k].transpose() + y * means[k].transpose();
            }
        }
        out.xs = means.to_vec();
        out
    }

    /// Substitutes `E[x_{t0}] = (I − I_λ)x̃_{t0} + I_λ ξ`, where `I_λ` marks the
    /// fixed (zero F row) initial-state coordinates.
    pub fn with_initial_state(&self, spec: &ModelSpec, xi: &Vector) -> Self {
        let fixed = spec.f_zero_rows();
        if !fixed.iter().any(|&f| f) {
            return self.clone();
        }
        let mut means = self.xs.clone();
        for (i, &f) in fixed.iter().enumerate() {
            if f {
                means[0][i] = xi[i];
            }
        }
        self.with_means(&means)
    }
}

/// Observation moments `ỹ`, `Õ`, `W̃`, `E[y xᵀ]` together with the state
/// moments, from a smoother run under `params`.
pub fn y_expectations(
    spec: &ModelSpec,
    params: &MaterializedParams,
    data: &TimeSeriesData,
    smoother: &SmootherOutput,
) -> Result<ExpectationSet, LinalgError> {
    let (n, t0, t_len) = (spec.n, spec.t0, spec.t_len);
    let (ps, plag) = state_moments(smoother);
    let mut ys = Vec::with_capacity(t_len);
    let mut os = Vec::with_capacity(t_len);
    let mut ws = Vec::with_capacity(t_len);
    let mut yx = Vec::with_capacity(t_len);
    let mut yxlag = Vec::with_capacity(t_len);
    let mut irs = Vec::with_capacity(t_len);
    for t in 1..=t_len {
        let observed = data.observed_at(t);
        let y = data.y_at(t);
        let z = params.z(t);
        let rfull = params.rfull(t);
        let IrParts { ir, i2 } = ir_parts(rfull, observed)?;
        let x = smoother.x(t);
        let v = smoother.v(t);
        let mut yt = &y - &ir * (&y - z * x - params.a(t));
        let irz = &ir * z;
        let var = &i2 * (&ir * rfull + &irz * v * irz.transpose()) * &i2;
        let mut cov = &irz * v;
        let mut cov_lag = if t > t0 { Some(&irz * smoother.vlag(t)) } else { None };
        for i in 0..n {
            if observed[i] {
                yt[i] = y[i];
                cov.row_mut(i).fill(0.0);
                if let Some(c) = cov_lag.as_mut() {
                    c.row_mut(i).fill(0.0);
                }
            }
        }
        let w = linalg::symmetrize(&var);
        let o = &w + &yt * yt.transpose();
        yx.push(&cov + &yt * x.transpose());
        yxlag.push(match cov_lag {
            Some(c) => c + &yt * smoother.x(t - 1).transpose(),
            None => Mat::zeros(n, spec.m),
        });
        ys.push(yt);
        os.push(o);
        ws.push(w);
        irs.push(ir);
    }
    let xs = (t0..=t_len).map(|t| smoother.x(t).clone()).collect();
    let vs = (t0..=t_len).map(|t| smoother.v(t).clone()).collect();
    let vlag = (t0..=t_len)
        .map(|t| if t == t0 { Mat::zeros(spec.m, spec.m) } else { smoother.vlag(t).clone() })
        .collect();
    Ok(ExpectationSet {
        t0,
        t_len,
        xs,
        vs,
        vlag,
        ps,
        plag,
        ys,
        os,
        ws,
        yx,
        yxlag,
        irs,
        loglik: smoother.loglik,
    })
}

struct IrParts {
    ir: Mat,
    i2: Mat,
}

fn ir_parts(rfull: &Mat, observed: &[bool]) -> Result<IrParts, LinalgError> {
    let ObsConditioner { ir, .. } = ir_matrix(rfull, observed)?;
    let i2 = Mat::from_diagonal(&Vector::from_iterator(
        observed.len(),
        observed.iter().map(|&o| if o { 0.0 } else { 1.0 }),
    ));
    Ok(IrParts { ir, i2 })
}
