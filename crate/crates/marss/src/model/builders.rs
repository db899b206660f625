//! Named structures (diagonal, equal variance-covariance, blocks, ...) and
//! covariate designs, all compiled to `(f, D)` pairs.

use std::fmt;
use std::str::FromStr;

use super::{LinearExpr, ModelError, ParamDesign, ParamName};
use crate::linalg::{self, Mat, Vector};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BuilderKind {
    /// Every cell free; for Q, R and Λ this means unconstrained-symmetric.
    Unconstrained,
    UnconstrainedSymmetric,
    DiagonalEqual,
    DiagonalUnequal,
    EqualVarcov,
    Identity,
    Zero,
    /// Every cell shares one free value.
    Equal,
    /// Independent unconstrained-symmetric blocks of the given sizes.
    BlockDiagonal(Vec<usize>),
    /// Diagonal blocks with one variance and one covariance each, plus a
    /// single shared covariance for every pair of blocks.
    BlockSymmetric(Vec<usize>),
}

impl fmt::Display for BuilderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks = |b: &[usize]| b.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            BuilderKind::Unconstrained => f.write_str("unconstrained"),
            BuilderKind::UnconstrainedSymmetric => f.write_str("unconstrained-symmetric"),
            BuilderKind::DiagonalEqual => f.write_str("diagonal-equal"),
            BuilderKind::DiagonalUnequal => f.write_str("diagonal-unequal"),
            BuilderKind::EqualVarcov => f.write_str("equal-varcov"),
            BuilderKind::Identity => f.write_str("identity"),
            BuilderKind::Zero => f.write_str("zero"),
            BuilderKind::Equal => f.write_str("equal"),
            BuilderKind::BlockDiagonal(b) => write!(f, "block-diagonal({})", blocks(b)),
            BuilderKind::BlockSymmetric(b) => write!(f, "block-symmetric({})", blocks(b)),
        }
    }
}

impl FromStr for BuilderKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let blocks = |rest: &str| -> Result<Vec<usize>, ModelError> {
            let inner = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| ModelError::Parse(format!("block list in `{s}`")))?;
            inner
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| ModelError::Parse(format!("block size in `{s}`"))))
                .collect()
        };
        Ok(match s.as_str() {
            "unconstrained" => BuilderKind::Unconstrained,
            "unconstrained-symmetric" => BuilderKind::UnconstrainedSymmetric,
            "diagonal-equal" => BuilderKind::DiagonalEqual,
            "diagonal-unequal" | "diagonal" => BuilderKind::DiagonalUnequal,
            "equal-varcov" => BuilderKind::EqualVarcov,
            "identity" => BuilderKind::Identity,
            "zero" => BuilderKind::Zero,
            "equal" => BuilderKind::Equal,
            _ => {
                if let Some(rest) = s.strip_prefix("block-diagonal") {
                    BuilderKind::BlockDiagonal(blocks(rest)?)
                } else if let Some(rest) = s.strip_prefix("block-symmetric") {
                    BuilderKind::BlockSymmetric(blocks(rest)?)
                } else {
                    return Err(ModelError::Parse(format!("unknown builder `{s}`")));
                }
            }
        })
    }
}

fn label(rows: usize, cols: usize, i: usize, j: usize) -> String {
    if cols == 1 {
        format!("{}", i + 1)
    } else if rows == 1 {
        format!("{}", j + 1)
    } else {
        format!("{},{}", i + 1, j + 1)
    }
}

fn block_of(blocks: &[usize], i: usize) -> usize {
    let mut acc = 0;
    for (b, &size) in blocks.iter().enumerate() {
        acc += size;
        if i < acc {
            return b;
        }
    }
    unreachable!("index checked against block total")
}

/// Compiles a named structure into a design for a `rows × cols` matrix.
pub fn builder(
    name: ParamName,
    kind: &BuilderKind,
    rows: usize,
    cols: usize,
) -> Result<ParamDesign, ModelError> {
    let bad = |msg: String| ModelError::Design { param: name, msg };
    let kind = match kind {
        BuilderKind::Unconstrained if name.is_variance() => &BuilderKind::UnconstrainedSymmetric,
        k => k,
    };
    let square = !matches!(kind, BuilderKind::Unconstrained | BuilderKind::Zero | BuilderKind::Equal);
    if square && rows != cols {
        return Err(bad(format!("`{kind}` needs a square matrix, got {rows}x{cols}")));
    }
    if let BuilderKind::BlockDiagonal(b) | BuilderKind::BlockSymmetric(b) = kind {
        if b.iter().sum::<usize>() != rows || b.contains(&0) {
            return Err(bad(format!("block sizes {b:?} do not partition dimension {rows}")));
        }
    }
    let zero = || LinearExpr::constant(0.0);
    let cell = |i: usize, j: usize| -> LinearExpr {
        let (lo, hi) = (i.min(j), i.max(j));
        match kind {
            BuilderKind::Unconstrained => LinearExpr::free(label(rows, cols, i, j)),
            BuilderKind::UnconstrainedSymmetric => LinearExpr::free(label(rows, cols, lo, hi)),
            BuilderKind::DiagonalEqual if i == j => LinearExpr::free("diag"),
            BuilderKind::DiagonalUnequal if i == j => LinearExpr::free(format!("{}", i + 1)),
            BuilderKind::DiagonalEqual | BuilderKind::DiagonalUnequal => zero(),
            BuilderKind::EqualVarcov if i == j => LinearExpr::free("diag"),
            BuilderKind::EqualVarcov => LinearExpr::free("offdiag"),
            BuilderKind::Identity => LinearExpr::constant(if i == j { 1.0 } else { 0.0 }),
            BuilderKind::Zero => zero(),
            BuilderKind::Equal => LinearExpr::free("value"),
            BuilderKind::BlockDiagonal(b) => {
                if block_of(b, i) == block_of(b, j) {
                    LinearExpr::free(label(rows, cols, lo, hi))
                } else {
                    zero()
                }
            }
            BuilderKind::BlockSymmetric(b) => {
                let (bi, bj) = (block_of(b, i), block_of(b, j));
                if i == j {
                    LinearExpr::free(format!("E{}.diag", bi + 1))
                } else if bi == bj {
                    LinearExpr::free(format!("E{}.offdiag", bi + 1))
                } else {
                    let (a, c) = (bi.min(bj), bi.max(bj));
                    LinearExpr::free(format!("C{},{}", a + 1, c + 1))
                }
            }
        }
    };
    let grid: Vec<Vec<LinearExpr>> =
        (0..rows).map(|i| (0..cols).map(|j| cell(i, j)).collect()).collect();
    if rows == 0 || cols == 0 {
        return Ok(ParamDesign::fixed(name, &Mat::zeros(rows, cols)));
    }
    ParamDesign::from_cells(name, &grid)
}

/// Design for `u_t = C h_t` (or `a_t = C h_t`) where `h_t` is column `t` of
/// `inputs` (`p × T`); the free values are `vec(C)` for `C` of size `dim × p`.
pub fn covariate_design(
    name: ParamName,
    inputs: &Mat,
    dim: usize,
) -> Result<ParamDesign, ModelError> {
    if inputs.iter().any(|x| !x.is_finite()) {
        return Err(ModelError::MissingCovariate);
    }
    let p = inputs.nrows();
    let eye = Mat::identity(dim, dim);
    let mut fs = Vec::with_capacity(inputs.ncols());
    let mut ds = Vec::with_capacity(inputs.ncols());
    for t in 0..inputs.ncols() {
        let h = Mat::from_row_slice(1, p, inputs.column(t).as_slice());
        ds.push(linalg::kron(&h, &eye));
        fs.push(Vector::zeros(dim));
    }
    let names = (0..p)
        .flat_map(|j| (0..dim).map(move |i| format!("C{},{}", i + 1, j + 1)))
        .collect();
    ParamDesign::new(name, dim, 1, fs, ds, names)
}
