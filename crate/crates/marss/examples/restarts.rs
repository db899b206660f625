//! Seeded random restarts to choose starting values, then a full fit.

use std::error::Error;

use marss::em::{em_fit, mc_init_search, EMConfig};
use marss::kalman::TimeSeriesData;
use marss::linalg::Vector;
use marss::model::{builder, simulate, BuilderKind, ModelSpec, ParamName};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ModelSpec::new(2, 2, 60);
    spec.b = builder(ParamName::B, &BuilderKind::DiagonalUnequal, 2, 2)?;
    let mut truth = spec.zero_params();
    truth.beta = Vector::from_vec(vec![0.7, -0.4]);
    truth.q = Vector::from_vec(vec![0.5, 0.5]);
    truth.r = Vector::from_vec(vec![0.2, 0.2]);
    truth.lambda = Vector::from_vec(vec![1.0, 1.0]);
    let data = TimeSeriesData::new(simulate(&spec, &truth, 5)?.observations);

    let config = EMConfig { mc_inits: 8, mc_seed: 2024, ..Default::default() };
    let search = mc_init_search(&spec, &data, &config)?;
    for (k, ll) in search.restarts.iter().enumerate() {
        let mark = if k == search.best { " <- best" } else { "" };
        match ll {
            Some(ll) => println!("restart {k}: {ll:.4}{mark}"),
            None => println!("restart {k}: failed"),
        }
    }
    let fit = em_fit(&spec, &search.params, &data, &config)?;
    println!("final log-likelihood {:.4}, B diagonal {:.3?}", fit.loglik(), fit.params.beta.as_slice());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
