//! Brute-force conditioning of the joint Gaussian of all states and all
//! observations. Quadratic in `T`, only meant for tiny models.

use marss::kalman::TimeSeriesData;
use marss::linalg::{pinv, Mat, Vector};
use marss::model::{MaterializedParams, ModelSpec};

pub struct OracleMoments {
    pub t0: usize,
    pub m: usize,
    pub n: usize,
    pub t_len: usize,
    mean: Vector,
    cov: Mat,
    /// Log density of the observed entries; `None` when their covariance is singular.
    pub loglik: Option<f64>,
}

impl OracleMoments {
    fn xi(&self, t: usize) -> usize {
        (t - self.t0) * self.m
    }
    fn yi(&self, t: usize) -> usize {
        (self.t_len + 1 - self.t0) * self.m + (t - 1) * self.n
    }
    fn mean_block(&self, at: usize, len: usize) -> Vector {
        self.mean.rows(at, len).into_owned()
    }
    fn cov_block(&self, r: usize, rl: usize, c: usize, cl: usize) -> Mat {
        self.cov.view((r, c), (rl, cl)).into_owned()
    }
    fn second(&self, r: usize, rl: usize, c: usize, cl: usize) -> Mat {
        self.cov_block(r, rl, c, cl) + self.mean_block(r, rl) * self.mean_block(c, cl).transpose()
    }

    pub fn x(&self, t: usize) -> Vector {
        self.mean_block(self.xi(t), self.m)
    }
    pub fn v(&self, t: usize) -> Mat {
        self.cov_block(self.xi(t), self.m, self.xi(t), self.m)
    }
    pub fn vlag(&self, t: usize) -> Mat {
        self.cov_block(self.xi(t), self.m, self.xi(t - 1), self.m)
    }
    pub fn p(&self, t: usize) -> Mat {
        self.second(self.xi(t), self.m, self.xi(t), self.m)
    }
    pub fn plag(&self, t: usize) -> Mat {
        self.second(self.xi(t), self.m, self.xi(t - 1), self.m)
    }
    pub fn y(&self, t: usize) -> Vector {
        self.mean_block(self.yi(t), self.n)
    }
    pub fn o(&self, t: usize) -> Mat {
        self.second(self.yi(t), self.n, self.yi(t), self.n)
    }
    pub fn w(&self, t: usize) -> Mat {
        self.cov_block(self.yi(t), self.n, self.yi(t), self.n)
    }
    pub fn yx(&self, t: usize) -> Mat {
        self.second(self.yi(t), self.n, self.xi(t), self.m)
    }
    pub fn yxlag(&self, t: usize) -> Mat {
        self.second(self.yi(t), self.n, self.xi(t - 1), self.m)
    }
}

/// Conditions `(x_{t0..T}, y_{1..T})` on the observed entries of `data`.
pub fn condition(spec: &ModelSpec, mp: &MaterializedParams, data: &TimeSeriesData) -> OracleMoments {
    let (n, m, t_len, t0) = (spec.n, spec.m, spec.t_len, spec.t0);
    let (sl, sq, sr) = (spec.sl(), spec.sq(), spec.sr());
    let n_states = t_len + 1 - t0;
    let n_w = t_len - t0;
    let dim_e = sl + n_w * sq + t_len * sr;
    let dim_z = n_states * m + t_len * n;

    let mut sigma_e = Mat::zeros(dim_e, dim_e);
    sigma_e.view_mut((0, 0), (sl, sl)).copy_from(&mp.lambda);
    for k in 0..n_w {
        let at = sl + k * sq;
        sigma_e.view_mut((at, at), (sq, sq)).copy_from(mp.q(t0 + 1 + k));
    }
    for k in 0..t_len {
        let at = sl + n_w * sq + k * sr;
        sigma_e.view_mut((at, at), (sr, sr)).copy_from(mp.r(k + 1));
    }

    // z = mu + A e
    let mut mu = Vector::zeros(dim_z);
    let mut a = Mat::zeros(dim_z, dim_e);
    mu.rows_mut(0, m).copy_from(&mp.xi);
    a.view_mut((0, 0), (m, sl)).copy_from(&spec.f);
    for t in t0 + 1..=t_len {
        let (prev, cur) = ((t - 1 - t0) * m, (t - t0) * m);
        let b = mp.b(t);
        let mprev = mu.rows(prev, m).into_owned();
        mu.rows_mut(cur, m).copy_from(&(b * mprev + mp.u(t)));
        let aprev = a.rows(prev, m).into_owned();
        let mut arow = b * aprev;
        let wat = sl + (t - t0 - 1) * sq;
        arow.view_mut((0, wat), (m, sq)).copy_from(spec.g_at(t));
        a.rows_mut(cur, m).copy_from(&arow);
    }
    for t in 1..=t_len {
        let xrow = (t - t0) * m;
        let yrow = n_states * m + (t - 1) * n;
        let z = mp.z(t);
        let mx = mu.rows(xrow, m).into_owned();
        mu.rows_mut(yrow, n).copy_from(&(z * mx + mp.a(t)));
        let ax = a.rows(xrow, m).into_owned();
        let mut arow = z * ax;
        let vat = sl + n_w * sq + (t - 1) * sr;
        arow.view_mut((0, vat), (n, sr)).copy_from(spec.h_at(t));
        a.rows_mut(yrow, n).copy_from(&arow);
    }
    let cov = &a * sigma_e * a.transpose();

    let obs: Vec<usize> = (1..=t_len)
        .flat_map(|t| (0..n).filter(move |&i| data.is_observed(i, t)).map(move |i| n_states * m + (t - 1) * n + i))
        .collect();
    let k = obs.len();
    if k == 0 {
        return OracleMoments { t0, m, n, t_len, mean: mu, cov, loglik: Some(0.0) };
    }
    let y_obs = Vector::from_iterator(
        k,
        obs.iter().map(|&idx| {
            let rel = idx - n_states * m;
            data.values()[(rel % n, rel / n)]
        }),
    );
    let s_oo = Mat::from_fn(k, k, |i, j| cov[(obs[i], obs[j])]);
    let s_zo = Mat::from_fn(dim_z, k, |i, j| cov[(i, obs[j])]);
    let mu_o = Vector::from_iterator(k, obs.iter().map(|&i| mu[i]));
    let s_inv = pinv(&s_oo);
    let gain = &s_zo * &s_inv;
    let resid = &y_obs - &mu_o;
    let mean = &mu + &gain * &resid;
    let mut cond = &cov - &gain * s_zo.transpose();
    cond = (&cond + cond.transpose()) * 0.5;
    let loglik = nalgebra::Cholesky::new(s_oo).map(|ch| {
        let logdet = 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let quad = resid.dot(&ch.solve(&resid));
        -0.5 * (k as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
    });
    OracleMoments { t0, m, n, t_len, mean, cov: cond, loglik }
}
