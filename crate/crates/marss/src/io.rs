//! File formats: data and matrix CSVs, and TOML model descriptions.
//!
//! Data files hold one row per series and one column per time step under a
//! header of time labels; `NA` marks a missing value. A leading column of
//! series names is allowed. Numbers are written with 17 significant digits
//! so every file parses back to the same `f64`s.
//!
//! A model file looks like
//!
//! ```toml
//! n = 2
//! m = 1
//! t0 = 0
//! G = [[1.0]]
//! H = [[1.0, 0.0], [0.0, 1.0]]
//!
//! [Z]
//! grid = [["z1"], [1.0]]
//!
//! [U]
//! builder = "unconstrained"
//!
//! [Q]
//! builder = "diagonal-unequal"
//! values = [0.1]
//! ```
//!
//! Each parameter table (`B`, `U`, `Q`, `Z`, `A`, `R`, `Xi`, `Lambda`) takes
//! exactly one of `builder`, `value` (a fixed matrix), `grid` / `grids`
//! (cells are numbers or linear expressions such as `"2+a+2*c"`), or
//! `f` + `D` / `fs` + `Ds` with optional `names`. The plural forms give one
//! entry per time step. `values` optionally lists free values in design
//! order; they serve as starting or simulation values. `G` and `H` may be
//! a list of matrices for time-varying loadings; `F = []` makes the initial
//! state fixed.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::kalman::{KalmanError, TimeSeriesData};
use crate::linalg::{Mat, Vector};
use crate::model::{builder, BuilderKind, FreeParams, LinearExpr, ModelError, ModelSpec, ParamDesign, ParamName};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{0}")]
    Csv(String),
    #[error("model file: {0}")]
    Toml(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kalman(#[from] KalmanError),
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |source| IoError::File { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(err)?;
    }
    fs::write(path, contents).map_err(err)
}

/// 17 significant digits in scientific notation; `NA` for NaN.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NA".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("NA") || s.is_empty() {
        Some(f64::NAN)
    } else {
        s.parse().ok()
    }
}

/// Parses an `n × T` data table.
pub fn parse_data(text: &str) -> Result<TimeSeriesData, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header_len = reader.headers().map_err(|e| IoError::Csv(e.to_string()))?.len();
    let mut rows: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Csv(e.to_string()))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(IoError::Csv("data file has no series".into()));
    }
    let labelled = rows.iter().all(|r| r.first().is_some_and(|c| parse_cell(c).is_none()));
    let skip = usize::from(labelled);
    let t_len = header_len - skip;
    if t_len == 0 {
        return Err(IoError::Csv("data file has no time columns".into()));
    }
    let mut y = Mat::zeros(rows.len(), t_len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header_len {
            return Err(IoError::Csv(format!("series {} has {} fields, header has {header_len}", i + 1, row.len())));
        }
        for (t, cell) in row[skip..].iter().enumerate() {
            y[(i, t)] = parse_cell(cell).ok_or_else(|| {
                IoError::Csv(format!("series {}, time {}: `{cell}` is not a number or NA", i + 1, t + 1))
            })?;
            if y[(i, t)].is_infinite() {
                return Err(IoError::Csv(format!("series {}, time {}: infinite value", i + 1, t + 1)));
            }
        }
    }
    Ok(TimeSeriesData::new(y))
}

pub fn read_data(path: &Path) -> Result<TimeSeriesData, IoError> {
    parse_data(&read(path)?)
}

/// Series in rows under a `1..T` header, missing values as `NA`.
pub fn format_series(y: &Mat) -> String {
    let mut out = (1..=y.ncols()).map(|t| t.to_string()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in y.row_iter() {
        out.push_str(&row.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// A matrix as headerless CSV rows.
pub fn format_matrix(m: &Mat) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        out.push_str(&row.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Inverse of [`format_matrix`]; `cols` is needed for matrices with no rows.
pub fn parse_matrix(text: &str, cols: usize) -> Result<Mat, IoError> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| parse_cell(c).ok_or_else(|| IoError::Csv(format!("`{c}` is not a number"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let cols = rows.first().map_or(cols, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(IoError::Csv("ragged matrix".into()));
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Cell {
    Number(f64),
    Expr(String),
}

impl Cell {
    fn to_expr(&self) -> Result<LinearExpr, ModelError> {
        match self {
            Cell::Number(x) => Ok(LinearExpr::constant(*x)),
            Cell::Expr(s) => LinearExpr::parse(s),
        }
    }
}

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Loading {
    One(Rows),
    ByTime(Vec<Rows>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamBlock {
    builder: Option<String>,
    value: Option<Rows>,
    grid: Option<Vec<Vec<Cell>>>,
    grids: Option<Vec<Vec<Vec<Cell>>>>,
    f: Option<Vec<f64>>,
    #[serde(rename = "D")]
    d: Option<Rows>,
    fs: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Ds")]
    ds: Option<Vec<Rows>>,
    names: Option<Vec<String>>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n: usize,
    m: usize,
    #[serde(rename = "T")]
    t_len: Option<usize>,
    #[serde(default)]
    t0: usize,
    #[serde(rename = "G")]
    g: Option<Loading>,
    #[serde(rename = "H")]
    h: Option<Loading>,
    #[serde(rename = "F")]
    f: Option<Rows>,
    #[serde(rename = "B")]
    b: Option<ParamBlock>,
    #[serde(rename = "U")]
    u: Option<ParamBlock>,
    #[serde(rename = "Q")]
    q: Option<ParamBlock>,
    #[serde(rename = "Z")]
    z: Option<ParamBlock>,
    #[serde(rename = "A")]
    a: Option<ParamBlock>,
    #[serde(rename = "R")]
    r: Option<ParamBlock>,
    #[serde(rename = "Xi", alias = "x0")]
    xi: Option<ParamBlock>,
    #[serde(rename = "Lambda", alias = "V0")]
    lambda: Option<ParamBlock>,
}

/// A parsed model file: the model plus any free values it lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFileContents {
    pub spec: ModelSpec,
    /// Free values per parameter, where given.
    pub values: Vec<(ParamName, Vector)>,
}

impl ModelFileContents {
    /// `base` with every listed value substituted.
    pub fn apply_values(&self, base: &FreeParams) -> FreeParams {
        let mut p = base.clone();
        for (name, v) in &self.values {
            *p.get_mut(*name) = v.clone();
        }
        p
    }

    /// Every free value given in the file, or the names of parameters lacking them.
    pub fn full_values(&self) -> Result<FreeParams, Vec<ParamName>> {
        let missing: Vec<ParamName> = ParamName::ALL
            .into_iter()
            .filter(|&n| self.spec.design(n).n_free() > 0 && !self.values.iter().any(|(k, _)| *k == n))
            .collect();
        if missing.is_empty() {
            Ok(self.apply_values(&self.spec.zero_params()))
        } else {
            Err(missing)
        }
    }
}

fn rows_to_mat(rows: &Rows, nrows: usize, what: &str) -> Result<Mat, IoError> {
    if rows.is_empty() {
        return Ok(Mat::zeros(nrows, 0));
    }
    let cols = rows[0].len();
    if rows.len() != nrows || rows.iter().any(|r| r.len() != cols) {
        return Err(IoError::Toml(format!("{what} must have {nrows} rows of equal length")));
    }
    Ok(Mat::from_fn(nrows, cols, |i, j| rows[i][j]))
}

fn loading(l: &Option<Loading>, rows: usize, what: &str) -> Result<Vec<Mat>, IoError> {
    match l {
        None => Ok(vec![Mat::identity(rows, rows)]),
        Some(Loading::One(r)) => Ok(vec![rows_to_mat(r, rows, what)?]),
        Some(Loading::ByTime(list)) => list.iter().map(|r| rows_to_mat(r, rows, what)).collect(),
    }
}

fn cell_grid(grid: &[Vec<Cell>]) -> Result<Vec<Vec<LinearExpr>>, ModelError> {
    grid.iter().map(|row| row.iter().map(Cell::to_expr).collect()).collect()
}

fn design_from_block(
    name: ParamName,
    block: &ParamBlock,
    rows: usize,
    cols: usize,
) -> Result<ParamDesign, IoError> {
    let given = [
        block.builder.is_some(),
        block.value.is_some(),
        block.grid.is_some(),
        block.grids.is_some(),
        block.f.is_some() || block.d.is_some(),
        block.fs.is_some() || block.ds.is_some(),
    ];
    let count = given.iter().filter(|&&g| g).count();
    if count > 1 {
        return Err(IoError::Toml(format!("{name}: give only one way to define the matrix")));
    }
    let check_shape = |d: ParamDesign| -> Result<ParamDesign, IoError> {
        if (d.rows, d.cols) != (rows, cols) {
            return Err(IoError::Toml(format!("{name} is {}x{}, expected {rows}x{cols}", d.rows, d.cols)));
        }
        Ok(d)
    };
    let names = |k: usize| -> Result<Vec<String>, IoError> {
        match &block.names {
            Some(n) if n.len() == k => Ok(n.clone()),
            Some(n) => Err(IoError::Toml(format!("{name}: {} names for {k} free values", n.len()))),
            None => Ok((1..=k).map(|i| i.to_string()).collect()),
        }
    };
    let d_matrix = |r: &Rows| rows_to_mat(r, rows * cols, &format!("{name}.D"));
    let design = if let Some(b) = &block.builder {
        let kind: BuilderKind = b.parse()?;
        builder(name, &kind, rows, cols)?
    } else if let Some(v) = &block.value {
        check_shape(ParamDesign::fixed(name, &rows_to_mat(v, rows, name.as_str())?))?
    } else if let Some(g) = &block.grid {
        check_shape(ParamDesign::from_cells(name, &cell_grid(g)?)?)?
    } else if let Some(gs) = &block.grids {
        let grids = gs.iter().map(|g| cell_grid(g)).collect::<Result<Vec<_>, _>>()?;
        check_shape(ParamDesign::from_cells_by_time(name, &grids)?)?
    } else if block.f.is_some() || block.d.is_some() {
        let f = Vector::from_vec(block.f.clone().unwrap_or_else(|| vec![0.0; rows * cols]));
        let d = match &block.d {
            Some(r) => d_matrix(r)?,
            None => Mat::zeros(rows * cols, 0),
        };
        let k = d.ncols();
        let design = ParamDesign::new(name, rows, cols, vec![f], vec![d], names(k)?)?;
        design.check_rank()?;
        design
    } else if block.fs.is_some() || block.ds.is_some() {
        let ds: Vec<Mat> = match &block.ds {
            Some(list) => list.iter().map(d_matrix).collect::<Result<_, _>>()?,
            None => Vec::new(),
        };
        let times = block.fs.as_ref().map_or(ds.len(), Vec::len).max(ds.len());
        let k = ds.first().map_or(0, Mat::ncols);
        let fs: Vec<Vector> = match &block.fs {
            Some(list) => list.iter().map(|f| Vector::from_vec(f.clone())).collect(),
            None => vec![Vector::zeros(rows * cols); times],
        };
        let ds = if ds.is_empty() { vec![Mat::zeros(rows * cols, 0); times] } else { ds };
        let design = ParamDesign::new(name, rows, cols, fs, ds, names(k)?)?;
        design.check_rank()?;
        design
    } else {
        return Err(IoError::Toml(format!("{name}: no definition given")));
    };
    Ok(design)
}

/// Parses a TOML model description.
pub fn parse_model(text: &str) -> Result<ModelFileContents, IoError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| IoError::Toml(e.message().to_string()))?;
    let (n, m) = (file.n, file.m);
    let t_len = file.t_len.unwrap_or(0);
    let mut spec = ModelSpec::new(n, m, t_len);
    spec.t0 = file.t0;
    spec.g = loading(&file.g, m, "G")?;
    spec.h = loading(&file.h, n, "H")?;
    if let Some(f) = &file.f {
        spec.f = rows_to_mat(f, m, "F")?;
    }
    let (sq, sr, sl) = (spec.sq(), spec.sr(), spec.sl());
    // Defaults sized to the loadings.
    spec.q = builder(ParamName::Q, &BuilderKind::DiagonalUnequal, sq, sq)?;
    spec.r = builder(ParamName::R, &BuilderKind::DiagonalUnequal, sr, sr)?;
    spec.lambda = builder(ParamName::Lambda, &BuilderKind::DiagonalUnequal, sl, sl)?;
    let blocks = [
        (ParamName::B, &file.b, m, m),
        (ParamName::U, &file.u, m, 1),
        (ParamName::Q, &file.q, sq, sq),
        (ParamName::Z, &file.z, n, m),
        (ParamName::A, &file.a, n, 1),
        (ParamName::R, &file.r, sr, sr),
        (ParamName::Xi, &file.xi, m, 1),
        (ParamName::Lambda, &file.lambda, sl, sl),
    ];
    let mut values = Vec::new();
    for (name, block, rows, cols) in blocks {
        let Some(block) = block else { continue };
        let has_definition = block.builder.is_some()
            || block.value.is_some()
            || block.grid.is_some()
            || block.grids.is_some()
            || block.f.is_some()
            || block.d.is_some()
            || block.fs.is_some()
            || block.ds.is_some();
        if has_definition {
            let design = design_from_block(name, block, rows, cols)?;
            spec.set_design(design, name);
        }
        if let Some(v) = &block.values {
            let k = spec.design(name).n_free();
            if v.len() != k {
                return Err(IoError::Toml(format!("{name}: {} values for {k} free values", v.len())));
            }
            values.push((name, Vector::from_vec(v.clone())));
        }
    }
    Ok(ModelFileContents { spec, values })
}

pub fn read_model(path: &Path) -> Result<ModelFileContents, IoError> {
    parse_model(&read(path)?)
}

/// `param,name,value` lines for every free value.
pub fn format_free_values(spec: &ModelSpec, params: &FreeParams) -> String {
    let mut out = String::from("param,name,value\n");
    for (name, label, v) in params.labelled(spec) {
        let _ = writeln!(out, "{name},{label},{}", fmt_f64(v));
    }
    out
}

/// Parses [`format_free_values`] output into `(param, name, value)` triples.
pub fn parse_free_values(text: &str) -> Result<Vec<(ParamName, String, f64)>, IoError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Csv(e.to_string()))?;
        let bad = || IoError::Csv(format!("bad free-value line {:?}", rec));
        let name = ParamName::parse(rec.get(0).ok_or_else(bad)?).ok_or_else(bad)?;
        let label = rec.get(1).ok_or_else(bad)?.to_string();
        let value = rec.get(2).and_then(parse_cell).ok_or_else(bad)?;
        out.push((name, label, value));
    }
    Ok(out)
}
