#![allow(dead_code)]

pub mod criteria;
pub mod models;
pub mod oracle;

use marss::kalman::TimeSeriesData;
use marss::linalg::{Mat, Vector};
use marss::model::{FreeParams, ModelSpec, ParamDesign, ParamName};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn normal_mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn normal_vec(rng: &mut ChaCha8Rng, k: usize) -> Vector {
    Vector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `A Aᵀ/k + 0.2 I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, k: usize) -> Mat {
    let a = normal_mat(rng, k, k);
    &a * a.transpose() / k.max(1) as f64 + Mat::identity(k, k) * 0.2
}

/// Every parameter fixed at a random value; returns the model with empty free vectors.
pub fn random_fixed_model(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    t_len: usize,
    fixed_x0: bool,
) -> (ModelSpec, FreeParams) {
    let mut spec = ModelSpec::new(n, m, t_len);
    spec.t0 = rng.random_range(0..=1);
    let fix = |name, mat: Mat| ParamDesign::fixed(name, &mat);
    spec.b = fix(ParamName::B, normal_mat(rng, m, m) * 0.5);
    spec.u = fix(ParamName::U, normal_mat(rng, m, 1));
    spec.q = fix(ParamName::Q, random_spd(rng, m));
    spec.z = fix(ParamName::Z, normal_mat(rng, n, m));
    spec.a = fix(ParamName::A, normal_mat(rng, n, 1));
    spec.r = fix(ParamName::R, random_spd(rng, n));
    spec.xi = fix(ParamName::Xi, normal_mat(rng, m, 1));
    if fixed_x0 {
        spec.f = Mat::zeros(m, 0);
        spec.lambda = fix(ParamName::Lambda, Mat::zeros(0, 0));
    } else {
        spec.lambda = fix(ParamName::Lambda, random_spd(rng, m));
    }
    let params = spec.zero_params();
    (spec, params)
}

/// Standard-normal data with each entry missing with probability `missing`.
pub fn random_data(rng: &mut ChaCha8Rng, n: usize, t_len: usize, missing: f64) -> TimeSeriesData {
    let mut y = normal_mat(rng, n, t_len);
    for v in y.iter_mut() {
        if rng.random::<f64>() < missing {
            *v = f64::NAN;
        }
    }
    TimeSeriesData::new(y)
}
