//! Draw states and observations from a model, then blank out some values.

use std::error::Error;

use marss::io::format_series;
use marss::linalg::{Mat, Vector};
use marss::model::{apply_missing, simulate, ModelSpec, ParamDesign, ParamName};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ModelSpec::new(2, 2, 6);
    spec.b = ParamDesign::fixed(ParamName::B, &Mat::from_row_slice(2, 2, &[0.9, 0.1, 0.0, 0.7]));
    spec.u = ParamDesign::fixed(ParamName::U, &Mat::from_column_slice(2, 1, &[0.2, -0.1]));
    let mut params = spec.zero_params();
    params.q = Vector::from_vec(vec![0.05, 0.05]);
    params.r = Vector::from_vec(vec![0.01, 0.02]);
    params.p = Vector::from_vec(vec![1.0, 1.0]);
    params.lambda = Vector::from_vec(vec![0.1, 0.1]);

    let sim = simulate(&spec, &params, 3)?;
    let observed = apply_missing(&sim.observations, 0.25, 4);
    println!("states\n{}", format_series(&sim.states));
    println!("observations\n{}", format_series(&observed.with_nan()));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
