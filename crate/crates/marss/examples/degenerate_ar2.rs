//! An AR(2) series written as a two-state model whose second state carries
//! no noise of its own, fitted by EM and compared with least squares.

use std::error::Error;

use marss::em::{default_init, em_fit, EMConfig};
use marss::kalman::TimeSeriesData;
use marss::linalg::{Mat, Vector};
use marss::model::{builder, BuilderKind, ModelSpec, ParamDesign, ParamName};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut y = vec![0.0f64; 300];
    for t in 2..y.len() {
        let e: f64 = StandardNormal.sample(&mut rng);
        y[t] = 0.6 * y[t - 1] - 0.2 * y[t - 2] + e;
    }
    let y = &y[100..];

    let mut spec = ModelSpec::new(1, 2, y.len());
    spec.t0 = 1;
    spec.b = ParamDesign::from_symbolic(ParamName::B, &[vec!["b1", "b2"], vec!["1", "0"]])?;
    spec.g = vec![Mat::from_column_slice(2, 1, &[1.0, 0.0])];
    spec.q = builder(ParamName::Q, &BuilderKind::DiagonalUnequal, 1, 1)?;
    spec.z = ParamDesign::fixed(ParamName::Z, &Mat::from_row_slice(1, 2, &[1.0, 0.0]));
    spec.h = vec![Mat::zeros(1, 0)];
    spec.r = ParamDesign::fixed(ParamName::R, &Mat::zeros(0, 0));
    // x_1 = (y_1, unknown lag), held fixed rather than drawn.
    spec.f = Mat::zeros(2, 0);
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::zeros(0, 0));
    let f = Vector::from_vec(vec![y[0], 0.0]);
    let d = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
    spec.xi = ParamDesign::new(ParamName::Xi, 2, 1, vec![f], vec![d], vec!["y0".into()])?;

    let data = TimeSeriesData::new(Mat::from_row_slice(1, y.len(), y));
    let fit = em_fit(&spec, &default_init(&spec, &data), &data, &EMConfig::default())?;

    // Conditional least squares on y_t = b1 y_{t-1} + b2 y_{t-2}.
    let rows = y.len() - 2;
    let x = Mat::from_fn(rows, 2, |i, j| y[i + 1 - j]);
    let target = Vector::from_fn(rows, |i, _| y[i + 2]);
    let xt = x.transpose();
    let ls = (&xt * &x).try_inverse().ok_or("singular regression")? * (xt * target);

    println!("EM            b1 = {:.6}, b2 = {:.6}, q = {:.4}", fit.params.beta[0], fit.params.beta[1], fit.params.q[0]);
    println!("least squares b1 = {:.6}, b2 = {:.6}", ls[0], ls[1]);
    println!("{} iterations", fit.iterations);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
