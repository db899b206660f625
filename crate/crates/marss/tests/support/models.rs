//! Random constrained models for update and EM tests.

use marss::em::e_step;
use marss::expectations::ExpectationSet;
use marss::kalman::TimeSeriesData;
use marss::linalg::{self, Mat, Vector};
use marss::model::{builder, BuilderKind, FreeParams, ModelSpec, ParamDesign, ParamName};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{normal_mat, normal_vec, random_data, random_spd};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Stochastic,
    Fixed,
}

/// `vec(M) = f + D m` with `s ≤ max_free` free values and general coefficients.
pub fn random_design(rng: &mut ChaCha8Rng, name: ParamName, rows: usize, cols: usize, max_free: usize) -> ParamDesign {
    let k = rows * cols;
    let s = rng.random_range(1..=max_free.min(k).max(1));
    let f = normal_vec(rng, k) * 0.3;
    let d = normal_mat(rng, k, s) * 0.5;
    let names = (1..=s).map(|i| format!("{}{i}", name.free_symbol())).collect();
    ParamDesign::new(name, rows, cols, vec![f], vec![d], names).unwrap()
}

pub fn random_variance_design(rng: &mut ChaCha8Rng, name: ParamName, k: usize) -> ParamDesign {
    let kinds = [
        BuilderKind::DiagonalUnequal,
        BuilderKind::DiagonalEqual,
        BuilderKind::Unconstrained,
        BuilderKind::EqualVarcov,
    ];
    let kind = &kinds[rng.random_range(0..kinds.len())];
    builder(name, kind, k, k).unwrap()
}

/// Least-squares free values for `target`.
pub fn project(design: &ParamDesign, target: &Mat) -> Vector {
    if design.n_free() == 0 {
        return Vector::zeros(0);
    }
    linalg::pinv(design.d_at(0)) * (linalg::vec(target) - design.f_at(0))
}

/// Free values for every parameter: general draws for mean-type parameters,
/// projections of random SPD matrices for variances.
pub fn random_values(rng: &mut ChaCha8Rng, spec: &ModelSpec) -> FreeParams {
    let mut p = spec.zero_params();
    p.beta = normal_vec(rng, spec.b.n_free()) * 0.3;
    p.upsilon = normal_vec(rng, spec.u.n_free()) * 0.5;
    p.zeta = normal_vec(rng, spec.z.n_free()) * 0.7;
    p.alpha = normal_vec(rng, spec.a.n_free()) * 0.5;
    p.p = normal_vec(rng, spec.xi.n_free());
    p.q = project(&spec.q, &random_spd(rng, spec.sq()));
    p.r = project(&spec.r, &random_spd(rng, spec.sr()));
    p.lambda = project(&spec.lambda, &random_spd(rng, spec.sl()));
    p
}

/// A model with every parameter partly estimated through a random design.
pub fn random_constrained_model(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    t_len: usize,
    init: Init,
) -> ModelSpec {
    let mut spec = ModelSpec::new(n, m, t_len);
    spec.t0 = rng.random_range(0..=1);
    if rng.random_bool(0.5) {
        spec.g = vec![normal_mat(rng, m, m) + Mat::identity(m, m) * 2.0];
    }
    spec.b = random_design(rng, ParamName::B, m, m, 3);
    spec.u = random_design(rng, ParamName::U, m, 1, 2);
    spec.q = random_variance_design(rng, ParamName::Q, m);
    spec.z = random_design(rng, ParamName::Z, n, m, 3);
    spec.a = random_design(rng, ParamName::A, n, 1, 2);
    spec.r = random_variance_design(rng, ParamName::R, n);
    spec.xi = random_design(rng, ParamName::Xi, m, 1, m);
    match init {
        Init::Stochastic => spec.lambda = random_variance_design(rng, ParamName::Lambda, m),
        Init::Fixed => {
            spec.f = Mat::zeros(m, 0);
            spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::zeros(0, 0));
        }
    }
    spec
}

/// Expectations from a smoother run at an independent random parameter draw,
/// with current values drawn separately.
pub fn random_update_inputs(
    rng: &mut ChaCha8Rng,
    init: Init,
) -> (ModelSpec, FreeParams, ExpectationSet) {
    loop {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let spec = random_constrained_model(rng, n, m, 12, init);
        let at = random_values(rng, &spec);
        let current = random_values(rng, &spec);
        let data = random_data(rng, n, 12, 0.2);
        if let Ok(ex) = e_step(&spec, &at, &data) {
            return (spec, current, ex);
        }
    }
}

/// `G = [1; 0; 0]`: state 2 is fed by state 1 and itself, state 3 is deterministic
/// with an estimated drift; state 1 starts stochastic, states 2 and 3 fixed.
pub fn degenerate_model(rng: &mut ChaCha8Rng) -> (ModelSpec, TimeSeriesData) {
    let t_len = 15;
    let mut spec = ModelSpec::new(2, 3, t_len);
    spec.t0 = rng.random_range(0..=1);
    spec.g = vec![Mat::from_row_slice(3, 1, &[1.0, 0.0, 0.0])];
    spec.q = builder(ParamName::Q, &BuilderKind::DiagonalUnequal, 1, 1).unwrap();
    spec.b = ParamDesign::from_symbolic(
        ParamName::B,
        &[vec!["b", "0", "0"], vec!["1", "0.5", "0"], vec!["0", "0", "0.9"]],
    )
    .unwrap();
    spec.u = ParamDesign::from_symbolic(ParamName::U, &[vec!["u1"], vec!["0"], vec!["u3"]]).unwrap();
    spec.z = ParamDesign::fixed(ParamName::Z, &normal_mat(rng, 2, 3));
    spec.f = Mat::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
    spec.lambda = builder(ParamName::Lambda, &BuilderKind::DiagonalUnequal, 1, 1).unwrap();
    let data = random_data(rng, 2, t_len, 0.1);
    (spec, data)
}
