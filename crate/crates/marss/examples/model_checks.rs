//! Structural checks that catch models EM cannot fit.

use std::error::Error;

use marss::em::kemcheck;
use marss::linalg::Mat;
use marss::model::{ModelSpec, ParamDesign, ParamName};

fn four_series(z: &[Vec<&str>]) -> Result<ModelSpec, Box<dyn Error>> {
    let mut spec = ModelSpec::new(4, 3, 20);
    // Series 1 and 4 are observed without error.
    spec.h = vec![Mat::from_row_slice(4, 2, &[0., 0., 1., 0., 0., 1., 0., 0.])];
    spec.r = marss::model::builder(ParamName::R, &marss::model::BuilderKind::DiagonalUnequal, 2, 2)?;
    spec.z = ParamDesign::from_symbolic(ParamName::Z, z)?;
    Ok(spec)
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let middle = [vec!["z21", "z22", "z23"], vec!["z31", "z31", "z31"]];
    let cases = [
        ("exact rows repeat each other", vec!["0.5", "2", "0"], vec!["0.5", "2", "0"]),
        ("exact rows independent", vec!["0.5", "0", "0"], vec!["0.5", "2", "0"]),
        ("Z estimated on an exact row", vec!["c", "0", "0"], vec!["0.5", "2", "0"]),
    ];
    for (label, first, last) in cases {
        let grid = vec![first, middle[0].clone(), middle[1].clone(), last];
        let found = kemcheck(&four_series(&grid)?);
        println!("{label}:");
        if found.is_empty() {
            println!("  ok");
        }
        for v in found {
            println!("  {v}");
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
