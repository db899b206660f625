//! Simulate a two-state model and recover its parameters by EM.

use std::error::Error;

use marss::em::{default_init, em_fit, EMConfig};
use marss::kalman::TimeSeriesData;
use marss::linalg::{Mat, Vector};
use marss::model::{builder, simulate, BuilderKind, MaterializedParams, ModelSpec, ParamDesign, ParamName};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ModelSpec::new(3, 2, 120);
    spec.b = ParamDesign::from_symbolic(ParamName::B, &[vec!["b11", "0"], vec!["b21", "b22"]])?;
    spec.u = builder(ParamName::U, &BuilderKind::Zero, 2, 1)?;
    spec.z = ParamDesign::from_symbolic(ParamName::Z, &[vec!["1", "0"], vec!["0", "1"], vec!["z", "z"]])?;
    spec.r = builder(ParamName::R, &BuilderKind::DiagonalEqual, 3, 3)?;
    spec.xi = ParamDesign::fixed(ParamName::Xi, &Mat::zeros(2, 1));
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::identity(2, 2));

    let mut truth = spec.zero_params();
    truth.beta = Vector::from_vec(vec![0.8, 0.3, 0.5]);
    truth.q = Vector::from_vec(vec![0.3, 0.2]);
    truth.zeta = Vector::from_vec(vec![0.5]);
    truth.r = Vector::from_vec(vec![0.1]);
    let sim = simulate(&spec, &truth, 11)?;
    let data = TimeSeriesData::new(sim.observations);

    let fit = em_fit(&spec, &default_init(&spec, &data), &data, &EMConfig::default())?;
    println!(
        "{} after {} iterations, log-likelihood {:.4}",
        if fit.converged { "converged" } else { "stopped" },
        fit.iterations,
        fit.loglik()
    );
    println!("{:>8} {:>8} {:>8}", "value", "truth", "fit");
    for ((name, label, est), (_, _, t)) in fit.params.labelled(&fit.spec).into_iter().zip(truth.labelled(&spec)) {
        println!("{:>8} {t:8.3} {est:8.3}", format!("{name}:{label}"));
    }
    let mp = MaterializedParams::new(&fit.spec, &fit.params)?;
    println!("fitted B{}", mp.b(1));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
