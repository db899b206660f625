//! Read the bundled model and data files, fit, and write the estimates as CSV.

use std::error::Error;
use std::path::Path;

use marss::em::{default_init, em_fit, EMConfig};
use marss::io::{format_free_values, read_data, read_model};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let data = read_data(&dir.join("two_series.csv"))?;
    let mut model = read_model(&dir.join("two_series.toml"))?;
    model.spec.t_len = data.t_len();
    println!("{} series, {} time steps, {} missing", data.n(), data.t_len(), data.n() * data.t_len() - data.n_observed());

    let init = model.apply_values(&default_init(&model.spec, &data));
    let fit = em_fit(&model.spec, &init, &data, &EMConfig::default())?;
    print!("{}", format_free_values(&fit.spec, &fit.params));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
