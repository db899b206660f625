//! Ways to constrain a parameter matrix: named structures, symbolic grids
//! and raw `(f, D)` pairs.

use std::error::Error;

use marss::linalg::{Mat, Vector};
use marss::model::{builder, materialize, BuilderKind, ParamDesign, ParamName};

fn show(design: &ParamDesign, values: &[f64]) -> Result<(), Box<dyn Error>> {
    let m = materialize(design, &Vector::from_row_slice(values), 0)?;
    println!("free values {:?} ->{m}", design.free_names());
    Ok(())
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let equal_varcov = builder(ParamName::Q, &BuilderKind::EqualVarcov, 3, 3)?;
    show(&equal_varcov, &[2.0, 0.5])?;

    let blocks: BuilderKind = "block-diagonal(2,1)".parse()?;
    show(&builder(ParamName::R, &blocks, 3, 3)?, &[1.0, 0.3, 2.0, 4.0])?;

    // Cells may be any linear expression in named values.
    let b = ParamDesign::from_symbolic(ParamName::B, &[vec!["b", "0.1-c"], vec!["2+a+2*c", "b"]])?;
    show(&b, &[0.9, 0.2, -0.5])?;

    // vec(U) = f + D m with one free value shared across rows with opposite sign.
    let f = Vector::from_vec(vec![0.0, 1.0]);
    let d = Mat::from_column_slice(2, 1, &[1.0, -1.0]);
    let u = ParamDesign::new(ParamName::U, 2, 1, vec![f], vec![d], vec!["drift".into()])?;
    show(&u, &[0.25])?;

    // Two values that only ever appear together cannot both be estimated.
    let confounded = ParamDesign::from_symbolic(ParamName::U, &[vec!["a+b"], vec!["2*a+2*b"]]);
    println!("confounded design: {}", confounded.unwrap_err());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
