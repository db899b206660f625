//! Seeded draws from a model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{FreeParams, MaterializedParams, ModelError, ModelSpec, ParamName, PSD_FLOOR};
use crate::kalman::TimeSeriesData;
use crate::linalg::{self, LinalgError, Mat, Vector};

/// Simulated states and observations for `t = 1..T` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub states: Mat,
    pub observations: Mat,
}

fn normals(rng: &mut ChaCha8Rng, k: usize) -> Vector {
    Vector::from_iterator(k, (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

fn sqrt_or_err(m: &Mat, name: ParamName, t: usize) -> Result<Mat, ModelError> {
    linalg::psd_sqrt(m, PSD_FLOOR, name.as_str()).map_err(|e| match e {
        LinalgError::Singular(_) => ModelError::NotPsd { param: name, t, eig: linalg::min_eigenvalue(m) },
        other => other.into(),
    })
}

/// Draws `x_{t0} = ξ + F l`, then iterates the state and observation equations.
pub fn simulate(spec: &ModelSpec, params: &FreeParams, seed: u64) -> Result<Simulation, ModelError> {
    let mp = MaterializedParams::new(spec, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m, t_len) = (spec.n, spec.m, spec.t_len);
    let lam_sqrt = sqrt_or_err(&mp.lambda, ParamName::Lambda, 0)?;
    let mut x = &mp.xi + &spec.f * (&lam_sqrt * normals(&mut rng, spec.sl()));
    let mut states = Mat::zeros(m, t_len);
    let mut obs = Mat::zeros(n, t_len);
    for t in 1..=t_len {
        if t > spec.t0 {
            let qs = sqrt_or_err(mp.q(t), ParamName::Q, t)?;
            let w = spec.g_at(t) * (qs * normals(&mut rng, spec.sq()));
            x = mp.b(t) * &x + mp.u(t) + w;
        }
        let rs = sqrt_or_err(mp.r(t), ParamName::R, t)?;
        let v = spec.h_at(t) * (rs * normals(&mut rng, spec.sr()));
        let y = mp.z(t) * &x + mp.a(t) + v;
        states.set_column(t - 1, &x);
        obs.set_column(t - 1, &y);
    }
    Ok(Simulation { states, observations: obs })
}

/// Marks each entry missing independently with probability `fraction`.
pub fn apply_missing(observations: &Mat, fraction: f64, seed: u64) -> TimeSeriesData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observed = vec![vec![true; observations.ncols()]; observations.nrows()];
    for t in 0..observations.ncols() {
        for row in observed.iter_mut() {
            row[t] = rng.random::<f64>() >= fraction;
        }
    }
    TimeSeriesData::with_mask(observations.clone(), observed)
        .expect("mask built with matching shape")
}
