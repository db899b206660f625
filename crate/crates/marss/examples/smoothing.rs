//! Filter and smooth a local-level model with a gap in the data.

use std::error::Error;

use marss::kalman::{filter_and_smooth, TimeSeriesData};
use marss::linalg::Mat;
use marss::model::{MaterializedParams, ModelSpec, ParamDesign, ParamName};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let mut spec = ModelSpec::new(1, 1, 8);
    spec.q = ParamDesign::fixed(ParamName::Q, &Mat::from_element(1, 1, 0.1));
    spec.r = ParamDesign::fixed(ParamName::R, &Mat::from_element(1, 1, 0.5));
    spec.xi = ParamDesign::fixed(ParamName::Xi, &Mat::zeros(1, 1));
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::from_element(1, 1, 10.0));
    let params = MaterializedParams::new(&spec, &spec.zero_params())?;

    let nan = f64::NAN;
    let y = Mat::from_row_slice(1, 8, &[1.2, 0.8, 1.4, nan, nan, 2.1, 1.9, 2.4]);
    let data = TimeSeriesData::new(y);
    let (filter, smoother) = filter_and_smooth(&spec, &params, &data)?;

    println!(" t   filtered   smoothed   sd");
    for t in 1..=spec.t_len {
        println!(
            "{t:2} {:10.4} {:10.4} {:6.3}",
            filter.x_filt(t)[0],
            smoother.x(t)[0],
            smoother.v(t)[(0, 0)].sqrt()
        );
    }
    println!("log-likelihood {:.6}", smoother.loglik);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
