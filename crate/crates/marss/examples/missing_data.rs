//! Expected observations and their moments when some values are missing.

use std::error::Error;

use marss::em::e_step;
use marss::kalman::TimeSeriesData;
use marss::linalg::Mat;
use marss::model::{ModelSpec, ParamDesign, ParamName};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ModelSpec::new(2, 1, 5);
    spec.z = ParamDesign::fixed(ParamName::Z, &Mat::from_column_slice(2, 1, &[1.0, 0.5]));
    // Correlated observation errors let an observed series inform a missing one.
    spec.r = ParamDesign::fixed(ParamName::R, &Mat::from_row_slice(2, 2, &[0.4, 0.3, 0.3, 0.4]));
    spec.q = ParamDesign::fixed(ParamName::Q, &Mat::from_element(1, 1, 0.2));
    spec.xi = ParamDesign::fixed(ParamName::Xi, &Mat::zeros(1, 1));
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::identity(1, 1));

    let nan = f64::NAN;
    let y = Mat::from_row_slice(2, 5, &[0.3, nan, 1.1, nan, 0.9, 0.2, 0.6, nan, nan, 0.4]);
    let data = TimeSeriesData::new(y);
    let ex = e_step(&spec, &spec.zero_params(), &data)?;
    for t in 1..=spec.t_len {
        let obs: Vec<&str> = data.observed_at(t).iter().map(|&o| if o { "obs" } else { "NA " }).collect();
        println!("t={t} [{}] E[y|data] = ({:7.4}, {:7.4})", obs.join(" "), ex.y(t)[0], ex.y(t)[1]);
    }
    println!("log-likelihood {:.6}", ex.loglik);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
