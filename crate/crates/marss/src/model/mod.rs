//! Model description: dimensions, noise loadings, initial-state treatment and
//! the linear designs `vec(M_t) = f_t + D_t m` for every parameter.

mod builders;
mod simulate;
mod symbolic;

pub use builders::{builder, covariate_design, BuilderKind};
pub use simulate::{apply_missing, simulate, Simulation};
pub use symbolic::LinearExpr;

use std::fmt;

use thiserror::Error;

use crate::linalg::{self, LinalgError, Mat, Vector, RANK_TOL};

/// Eigenvalue floor for accepting a materialized variance as PSD.
pub const PSD_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{param}: {msg}")]
    Design { param: ParamName, msg: String },
    #[error("{param}: design has rank {rank} but {s} free values (confounded values)")]
    Rank { param: ParamName, rank: usize, s: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{param} is not positive semi-definite at t={t} (min eigenvalue {eig:e})")]
    NotPsd { param: ParamName, t: usize, eig: f64 },
    #[error("covariate series has missing or non-finite values")]
    MissingCovariate,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The eight parameter matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamName {
    B,
    U,
    Q,
    Z,
    A,
    R,
    Xi,
    Lambda,
}

impl ParamName {
    pub const ALL: [ParamName; 8] = [
        ParamName::B,
        ParamName::U,
        ParamName::Q,
        ParamName::Z,
        ParamName::A,
        ParamName::R,
        ParamName::Xi,
        ParamName::Lambda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::B => "B",
            ParamName::U => "U",
            ParamName::Q => "Q",
            ParamName::Z => "Z",
            ParamName::A => "A",
            ParamName::R => "R",
            ParamName::Xi => "Xi",
            ParamName::Lambda => "Lambda",
        }
    }

    /// Name of the free vector that parameterizes this matrix.
    pub fn free_symbol(self) -> &'static str {
        match self {
            ParamName::B => "beta",
            ParamName::U => "upsilon",
            ParamName::Q => "q",
            ParamName::Z => "zeta",
            ParamName::A => "alpha",
            ParamName::R => "r",
            ParamName::Xi => "p",
            ParamName::Lambda => "lambda",
        }
    }

    pub fn is_variance(self) -> bool {
        matches!(self, ParamName::Q | ParamName::R | ParamName::Lambda)
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.to_ascii_lowercase();
        Some(match s.as_str() {
            "b" => ParamName::B,
            "u" => ParamName::U,
            "q" => ParamName::Q,
            "z" => ParamName::Z,
            "a" => ParamName::A,
            "r" => ParamName::R,
            "xi" | "x0" => ParamName::Xi,
            "lambda" | "v0" => ParamName::Lambda,
            _ => return None,
        })
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `vec(M_t) = f_t + D_t m` with either one shared entry or one per time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDesign {
    pub name: ParamName,
    pub rows: usize,
    pub cols: usize,
    f: Vec<Vector>,
    d: Vec<Mat>,
    free_names: Vec<String>,
}

impl ParamDesign {
    pub fn new(
        name: ParamName,
        rows: usize,
        cols: usize,
        f: Vec<Vector>,
        d: Vec<Mat>,
        free_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| ModelError::Design { param: name, msg };
        if f.is_empty() || f.len() != d.len() {
            return Err(bad(format!(
                "need matching non-empty f and D lists (got {} and {})",
                f.len(),
                d.len()
            )));
        }
        let len = rows * cols;
        for (k, (fk, dk)) in f.iter().zip(&d).enumerate() {
            if fk.len() != len || dk.nrows() != len || dk.ncols() != free_names.len() {
                return Err(bad(format!(
                    "entry {k}: f has length {}, D is {}x{}, expected {len} and {len}x{}",
                    fk.len(),
                    dk.nrows(),
                    dk.ncols(),
                    free_names.len()
                )));
            }
            if fk.iter().chain(dk.iter()).any(|x| !x.is_finite()) {
                return Err(bad(format!("entry {k}: non-finite values")));
            }
        }
        Ok(Self { name, rows, cols, f, d, free_names })
    }

    /// A fully fixed matrix.
    pub fn fixed(name: ParamName, m: &Mat) -> Self {
        Self {
            name,
            rows: m.nrows(),
            cols: m.ncols(),
            f: vec![linalg::vec(m)],
            d: vec![Mat::zeros(m.len(), 0)],
            free_names: Vec::new(),
        }
    }

    /// A fully fixed time-varying matrix.
    pub fn fixed_by_time(name: ParamName, ms: &[Mat]) -> Result<Self, ModelError> {
        let (rows, cols) = ms.first().map(|m| m.shape()).unwrap_or((0, 0));
        Self::new(
            name,
            rows,
            cols,
            ms.iter().map(linalg::vec).collect(),
            ms.iter().map(|m| Mat::zeros(m.len(), 0)).collect(),
            Vec::new(),
        )
    }

    /// Builds a design from a row-wise grid of cells; free values are ordered by
    /// first appearance in a column-major scan.
    pub fn from_cells(
        name: ParamName,
        grid: &[Vec<LinearExpr>],
    ) -> Result<Self, ModelError> {
        Self::from_cells_by_time(name, std::slice::from_ref(&grid.to_vec()))
    }

    /// Time-varying version of [`ParamDesign::from_cells`]: one grid per time step.
    pub fn from_cells_by_time(
        name: ParamName,
        grids: &[Vec<Vec<LinearExpr>>],
    ) -> Result<Self, ModelError> {
        let bad = |msg: String| ModelError::Design { param: name, msg };
        let first = grids.first().ok_or_else(|| bad("no grids given".into()))?;
        let rows = first.len();
        let cols = first.first().map_or(0, |r| r.len());
        for g in grids {
            if g.len() != rows || g.iter().any(|r| r.len() != cols) {
                return Err(bad("grids must be rectangular with a common shape".into()));
            }
        }
        let mut names: Vec<String> = Vec::new();
        for g in grids {
            for j in 0..cols {
                for row in g.iter() {
                    for (n, _) in &row[j].terms {
                        if !names.contains(n) {
                            names.push(n.clone());
                        }
                    }
                }
            }
        }
        let mut fs = Vec::with_capacity(grids.len());
        let mut ds = Vec::with_capacity(grids.len());
        for g in grids {
            let mut f = Vector::zeros(rows * cols);
            let mut d = Mat::zeros(rows * cols, names.len());
            for j in 0..cols {
                for (i, row) in g.iter().enumerate() {
                    let cell = &row[j];
                    let k = j * rows + i;
                    f[k] = cell.constant;
                    for (n, c) in &cell.terms {
                        let col = names.iter().position(|x| x == n).unwrap();
                        d[(k, col)] += c;
                    }
                }
            }
            fs.push(f);
            ds.push(d);
        }
        let design = Self::new(name, rows, cols, fs, ds, names)?;
        design.check_rank()?;
        Ok(design)
    }

    /// Parses every cell with [`LinearExpr::parse`] and calls [`ParamDesign::from_cells`].
    pub fn from_symbolic(name: ParamName, grid: &[Vec<&str>]) -> Result<Self, ModelError> {
        let cells = grid
            .iter()
            .map(|row| row.iter().map(|c| LinearExpr::parse(c)).collect())
            .collect::<Result<Vec<Vec<_>>, _>>()?;
        Self::from_cells(name, &cells)
    }

    pub fn n_free(&self) -> usize {
        self.free_names.len()
    }

    pub fn free_names(&self) -> &[String] {
        &self.free_names
    }

    pub fn is_time_varying(&self) -> bool {
        self.f.len() > 1
    }

    pub fn n_times(&self) -> usize {
        self.f.len()
    }

    /// Fixed part at 0-based time index `k` (clamped for shared designs).
    pub fn f_at(&self, k: usize) -> &Vector {
        &self.f[if self.f.len() == 1 { 0 } else { k }]
    }

    /// Design matrix at 0-based time index `k`.
    pub fn d_at(&self, k: usize) -> &Mat {
        &self.d[if self.d.len() == 1 { 0 } else { k }]
    }

    pub fn fs(&self) -> &[Vector] {
        &self.f
    }

    pub fn ds(&self) -> &[Mat] {
        &self.d
    }

    /// `true` when no value is estimated.
    pub fn is_fixed(&self) -> bool {
        self.free_names.is_empty()
    }

    /// Cells (column-major index) that carry a free value at any time.
    pub fn estimated_cells(&self) -> Vec<bool> {
        let mut out = vec![false; self.rows * self.cols];
        for d in &self.d {
            for (k, o) in out.iter_mut().enumerate() {
                *o |= d.row(k).iter().any(|&x| x != 0.0);
            }
        }
        out
    }

    /// Cells that may be nonzero at time index `k` for some free values.
    pub fn pattern_at(&self, k: usize) -> Mat {
        let f = self.f_at(k);
        let d = self.d_at(k);
        Mat::from_fn(self.rows, self.cols, |i, j| {
            let c = j * self.rows + i;
            if f[c] != 0.0 || d.row(c).iter().any(|&x| x != 0.0) {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Rank of all D entries stacked over time must equal the free count.
    pub fn check_rank(&self) -> Result<(), ModelError> {
        let s = self.n_free();
        if s == 0 {
            return Ok(());
        }
        let total: usize = self.d.iter().map(|d| d.nrows()).sum();
        let mut stacked = Mat::zeros(total, s);
        let mut r = 0;
        for d in &self.d {
            stacked.view_mut((r, 0), (d.nrows(), s)).copy_from(d);
            r += d.nrows();
        }
        let (rank, _) = linalg::svd_rank(&stacked, RANK_TOL);
        if rank < s {
            return Err(ModelError::Rank { param: self.name, rank, s });
        }
        Ok(())
    }

    /// Checks the variance-design rules: 0/1 entries, one free value per
    /// cell, no mixing of fixed and free, symmetric layout.
    pub fn check_variance_rules(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rows != self.cols {
            out.push(format!("{} must be square", self.name));
            return out;
        }
        let n = self.rows;
        for (k, (f, d)) in self.f.iter().zip(&self.d).enumerate() {
            for c in 0..n * n {
                let row = d.row(c);
                if row.iter().any(|&x| x != 0.0 && x != 1.0) {
                    out.push(format!("t index {k}, cell {c}: D entries must be 0 or 1"));
                }
                let sum: f64 = row.iter().sum();
                if sum > 1.0 {
                    out.push(format!("t index {k}, cell {c}: more than one free value"));
                }
                if f[c] != 0.0 && sum != 0.0 {
                    out.push(format!(
                        "t index {k}, cell {c}: mixes a fixed value with a free value"
                    ));
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let a = j * n + i;
                    let b = i * n + j;
                    if f[a] != f[b] || d.row(a) != d.row(b) {
                        out.push(format!(
                            "t index {k}: cells ({},{}) and ({},{}) are not symmetric",
                            i + 1,
                            j + 1,
                            j + 1,
                            i + 1
                        ));
                    }
                }
            }
        }
        out
    }
}

/// `unvec(f_k + D_k m)`.
pub fn materialize(design: &ParamDesign, m: &Vector, k: usize) -> Result<Mat, ModelError> {
    if m.len() != design.n_free() {
        return Err(ModelError::Dimension(format!(
            "{}: {} free values given, design has {}",
            design.name,
            m.len(),
            design.n_free()
        )));
    }
    let v = if design.n_free() == 0 {
        design.f_at(k).clone()
    } else {
        design.f_at(k) + design.d_at(k) * m
    };
    Ok(linalg::unvec(&v, design.rows, design.cols)?)
}

/// Initial-state treatment implied by F and t0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Every row of F is nonzero.
    Stochastic,
    /// Every row of F is zero.
    Fixed,
    /// Some rows fixed, some stochastic.
    Mixed,
}

/// A constrained time-varying MARSS model.
///
/// ```text
/// x_t = B_t x_{t-1} + u_t + G_t w_t,   w_t ~ N(0, Q_t)
/// y_t = Z_t x_t + a_t + H_t v_t,       v_t ~ N(0, R_t)
/// x_{t0} = ξ + F l,                    l ~ N(0, Λ)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n: usize,
    pub m: usize,
    pub t_len: usize,
    pub t0: usize,
    /// State-noise loading, `m × s_q`, one entry or one per time step.
    pub g: Vec<Mat>,
    /// Observation-noise loading, `n × s_r`.
    pub h: Vec<Mat>,
    /// Initial-state loading, `m × s_l`.
    pub f: Mat,
    pub b: ParamDesign,
    pub u: ParamDesign,
    pub q: ParamDesign,
    pub z: ParamDesign,
    pub a: ParamDesign,
    pub r: ParamDesign,
    pub xi: ParamDesign,
    pub lambda: ParamDesign,
}

impl ModelSpec {
    /// A spec with identity loadings, `t0 = 0` and defaults: B identity, u zero,
    /// Q and R diagonal-unequal, Z identity (or unconstrained when n ≠ m),
    /// a zero, ξ unconstrained, Λ diagonal-unequal.
    pub fn new(n: usize, m: usize, t_len: usize) -> Self {
        let b = |name, kind, r, c| builder(name, &kind, r, c).expect("default builder");
        let z_kind = if n == m { BuilderKind::Identity } else { BuilderKind::Unconstrained };
        Self {
            n,
            m,
            t_len,
            t0: 0,
            g: vec![Mat::identity(m, m)],
            h: vec![Mat::identity(n, n)],
            f: Mat::identity(m, m),
            b: b(ParamName::B, BuilderKind::Identity, m, m),
            u: b(ParamName::U, BuilderKind::Zero, m, 1),
            q: b(ParamName::Q, BuilderKind::DiagonalUnequal, m, m),
            z: b(ParamName::Z, z_kind, n, m),
            a: b(ParamName::A, BuilderKind::Zero, n, 1),
            r: b(ParamName::R, BuilderKind::DiagonalUnequal, n, n),
            xi: b(ParamName::Xi, BuilderKind::Unconstrained, m, 1),
            lambda: b(ParamName::Lambda, BuilderKind::DiagonalUnequal, m, m),
        }
    }

    pub fn design(&self, name: ParamName) -> &ParamDesign {
        match name {
            ParamName::B => &self.b,
            ParamName::U => &self.u,
            ParamName::Q => &self.q,
            ParamName::Z => &self.z,
            ParamName::A => &self.a,
            ParamName::R => &self.r,
            ParamName::Xi => &self.xi,
            ParamName::Lambda => &self.lambda,
        }
    }

    pub fn design_mut(&mut self, name: ParamName) -> &mut ParamDesign {
        match name {
            ParamName::B => &mut self.b,
            ParamName::U => &mut self.u,
            ParamName::Q => &mut self.q,
            ParamName::Z => &mut self.z,
            ParamName::A => &mut self.a,
            ParamName::R => &mut self.r,
            ParamName::Xi => &mut self.xi,
            ParamName::Lambda => &mut self.lambda,
        }
    }

    /// Replaces a design, forcing the name to match the slot.
    pub fn set_design(&mut self, mut design: ParamDesign, name: ParamName) {
        design.name = name;
        *self.design_mut(name) = design;
    }

    pub fn sq(&self) -> usize {
        self.g[0].ncols()
    }

    pub fn sr(&self) -> usize {
        self.h[0].ncols()
    }

    pub fn sl(&self) -> usize {
        self.f.ncols()
    }

    /// G at time `t` (1-based).
    pub fn g_at(&self, t: usize) -> &Mat {
        &self.g[if self.g.len() == 1 { 0 } else { t - 1 }]
    }

    /// H at time `t` (1-based).
    pub fn h_at(&self, t: usize) -> &Mat {
        &self.h[if self.h.len() == 1 { 0 } else { t - 1 }]
    }

    /// Rows of G with no noise loading (taken from the first time step).
    pub fn g_zero_rows(&self) -> Vec<bool> {
        linalg::zero_rows(&self.g[0])
    }

    pub fn h_zero_rows(&self) -> Vec<bool> {
        linalg::zero_rows(&self.h[0])
    }

    /// Rows of F that are zero, i.e. fixed initial-state coordinates.
    pub fn f_zero_rows(&self) -> Vec<bool> {
        linalg::zero_rows(&self.f)
    }

    pub fn initial_state(&self) -> InitialState {
        let z = self.f_zero_rows();
        if z.iter().all(|&x| x) {
            InitialState::Fixed
        } else if z.iter().all(|&x| !x) {
            InitialState::Stochastic
        } else {
            InitialState::Mixed
        }
    }

    /// Zero-initialized free vectors of the right lengths.
    pub fn zero_params(&self) -> FreeParams {
        let z = |d: &ParamDesign| Vector::zeros(d.n_free());
        FreeParams {
            beta: z(&self.b),
            upsilon: z(&self.u),
            q: z(&self.q),
            zeta: z(&self.z),
            alpha: z(&self.a),
            r: z(&self.r),
            p: z(&self.xi),
            lambda: z(&self.lambda),
        }
    }

    pub fn check_params(&self, params: &FreeParams) -> Result<(), ModelError> {
        for name in ParamName::ALL {
            let want = self.design(name).n_free();
            let got = params.get(name).len();
            if want != got {
                return Err(ModelError::Dimension(format!(
                    "{} ({}) has {got} values, design expects {want}",
                    name.free_symbol(),
                    name
                )));
            }
        }
        Ok(())
    }
}

/// The free vectors β, υ, q, ζ, α, r, p, λ.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParams {
    pub beta: Vector,
    pub upsilon: Vector,
    pub q: Vector,
    pub zeta: Vector,
    pub alpha: Vector,
    pub r: Vector,
    pub p: Vector,
    pub lambda: Vector,
}

impl FreeParams {
    pub fn get(&self, name: ParamName) -> &Vector {
        match name {
            ParamName::B => &self.beta,
            ParamName::U => &self.upsilon,
            ParamName::Q => &self.q,
            ParamName::Z => &self.zeta,
            ParamName::A => &self.alpha,
            ParamName::R => &self.r,
            ParamName::Xi => &self.p,
            ParamName::Lambda => &self.lambda,
        }
    }

    pub fn get_mut(&mut self, name: ParamName) -> &mut Vector {
        match name {
            ParamName::B => &mut self.beta,
            ParamName::U => &mut self.upsilon,
            ParamName::Q => &mut self.q,
            ParamName::Z => &mut self.zeta,
            ParamName::A => &mut self.alpha,
            ParamName::R => &mut self.r,
            ParamName::Xi => &mut self.p,
            ParamName::Lambda => &mut self.lambda,
        }
    }

    /// Every free value labelled `(parameter, name, value)`, in design order.
    pub fn labelled<'a>(&'a self, spec: &'a ModelSpec) -> Vec<(ParamName, &'a str, f64)> {
        let mut out = Vec::new();
        for name in ParamName::ALL {
            for (label, v) in spec.design(name).free_names().iter().zip(self.get(name).iter()) {
                out.push((name, label.as_str(), *v));
            }
        }
        out
    }
}

/// All parameter matrices at every time step, plus derived loadings.
#[derive(Debug, Clone)]
pub struct MaterializedParams {
    pub t_len: usize,
    b: Vec<Mat>,
    u: Vec<Vector>,
    q: Vec<Mat>,
    z: Vec<Mat>,
    a: Vec<Vector>,
    r: Vec<Mat>,
    pub xi: Vector,
    pub lambda: Mat,
    qfull: Vec<Mat>,
    rfull: Vec<Mat>,
    /// `F Λ Fᵀ`.
    pub v0: Mat,
    phi: Vec<Mat>,
    ksi: Vec<Mat>,
    /// `(FᵀF)⁻¹Fᵀ`.
    pub pi: Mat,
}

fn projection(l: &Mat, what: &str) -> Result<Mat, LinalgError> {
    if l.ncols() == 0 {
        return Ok(Mat::zeros(0, l.nrows()));
    }
    let ltl = l.transpose() * l;
    Ok(linalg::checked_inverse(&ltl, what)? * l.transpose())
}

fn as_vector(m: Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

impl MaterializedParams {
    pub fn new(spec: &ModelSpec, params: &FreeParams) -> Result<Self, ModelError> {
        spec.check_params(params)?;
        let t_len = spec.t_len;
        let per_t = |name: ParamName| -> Result<Vec<Mat>, ModelError> {
            let d = spec.design(name);
            if d.is_time_varying() {
                (0..t_len).map(|k| materialize(d, params.get(name), k)).collect()
            } else {
                let m = materialize(d, params.get(name), 0)?;
                Ok(vec![m; t_len])
            }
        };
        let b = per_t(ParamName::B)?;
        let u: Vec<Vector> = per_t(ParamName::U)?.into_iter().map(as_vector).collect();
        let q = per_t(ParamName::Q)?;
        let z = per_t(ParamName::Z)?;
        let a: Vec<Vector> = per_t(ParamName::A)?.into_iter().map(as_vector).collect();
        let r = per_t(ParamName::R)?;
        let xi = as_vector(materialize(&spec.xi, &params.p, 0)?);
        let lambda = materialize(&spec.lambda, &params.lambda, 0)?;

        for (name, ms) in [(ParamName::Q, &q), (ParamName::R, &r)] {
            for (k, m) in ms.iter().enumerate() {
                let e = linalg::min_eigenvalue(m);
                if e < -PSD_FLOOR || m.iter().any(|x| !x.is_finite()) {
                    return Err(ModelError::NotPsd { param: name, t: k + 1, eig: e });
                }
                if !spec.design(name).is_time_varying() {
                    break;
                }
            }
        }
        let e = linalg::min_eigenvalue(&lambda);
        if e < -PSD_FLOOR {
            return Err(ModelError::NotPsd { param: ParamName::Lambda, t: 0, eig: e });
        }

        let mut qfull = Vec::with_capacity(t_len);
        let mut rfull = Vec::with_capacity(t_len);
        let mut phi = Vec::with_capacity(t_len);
        let mut ksi = Vec::with_capacity(t_len);
        for t in 1..=t_len {
            let g = spec.g_at(t);
            let h = spec.h_at(t);
            qfull.push(linalg::symmetrize(&(g * &q[t - 1] * g.transpose())));
            rfull.push(linalg::symmetrize(&(h * &r[t - 1] * h.transpose())));
            if t == 1 || spec.g.len() > 1 {
                phi.push(projection(g, "GᵀG")?);
            }
            if t == 1 || spec.h.len() > 1 {
                ksi.push(projection(h, "HᵀH")?);
            }
        }
        let v0 = linalg::symmetrize(&(&spec.f * &lambda * spec.f.transpose()));
        let pi = projection(&spec.f, "FᵀF")?;
        Ok(Self { t_len, b, u, q, z, a, r, xi, lambda, qfull, rfull, v0, phi, ksi, pi })
    }

    /// B at time `t` (1-based).
    pub fn b(&self, t: usize) -> &Mat {
        &self.b[t - 1]
    }
    pub fn u(&self, t: usize) -> &Vector {
        &self.u[t - 1]
    }
    pub fn q(&self, t: usize) -> &Mat {
        &self.q[t - 1]
    }
    pub fn z(&self, t: usize) -> &Mat {
        &self.z[t - 1]
    }
    pub fn a(&self, t: usize) -> &Vector {
        &self.a[t - 1]
    }
    pub fn r(&self, t: usize) -> &Mat {
        &self.r[t - 1]
    }
    /// `G Q Gᵀ` at time `t`.
    pub fn qfull(&self, t: usize) -> &Mat {
        &self.qfull[t - 1]
    }
    /// `H R Hᵀ` at time `t`.
    pub fn rfull(&self, t: usize) -> &Mat {
        &self.rfull[t - 1]
    }
    /// `(GᵀG)⁻¹Gᵀ` at time `t`.
    pub fn phi(&self, t: usize) -> &Mat {
        &self.phi[if self.phi.len() == 1 { 0 } else { t - 1 }]
    }
    /// `(HᵀH)⁻¹Hᵀ` at time `t`.
    pub fn ksi(&self, t: usize) -> &Mat {
        &self.ksi[if self.ksi.len() == 1 { 0 } else { t - 1 }]
    }
}

/// One problem found by [`validate_spec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpecViolation {
    pub param: Option<ParamName>,
    pub message: String,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Structural checks on a model; an empty list means it is usable.
pub fn validate_spec(spec: &ModelSpec) -> Vec<SpecViolation> {
    let mut out = Vec::new();
    let mut push = |param: Option<ParamName>, message: String| {
        out.push(SpecViolation { param, message })
    };
    if spec.t0 > 1 {
        push(None, format!("t0 must be 0 or 1, got {}", spec.t0));
    }
    if spec.t_len == 0 || spec.t_len < spec.t0 + 1 {
        push(None, format!("series length {} is too short", spec.t_len));
    }
    if spec.n == 0 || spec.m == 0 {
        push(None, "n and m must be positive".into());
    }
    for (label, list, rows) in [("G", &spec.g, spec.m), ("H", &spec.h, spec.n)] {
        if list.is_empty() || (list.len() != 1 && list.len() != spec.t_len) {
            push(None, format!("{label} must have 1 or T entries"));
            continue;
        }
        let cols = list[0].ncols();
        for (k, l) in list.iter().enumerate() {
            if l.nrows() != rows || l.ncols() != cols {
                push(None, format!("{label} entry {k} is {}x{}, expected {rows}x{cols}", l.nrows(), l.ncols()));
            } else if cols > 0 && linalg::svd_rank(l, RANK_TOL).0 < cols {
                push(None, format!("{label} entry {k} does not have full column rank"));
            }
        }
    }
    if spec.f.nrows() != spec.m {
        push(None, format!("F has {} rows, expected {}", spec.f.nrows(), spec.m));
    } else if spec.sl() > 0 && linalg::svd_rank(&spec.f, RANK_TOL).0 < spec.sl() {
        push(None, "F does not have full column rank".into());
    }
    let (n, m) = (spec.n, spec.m);
    let shapes = [
        (ParamName::B, m, m),
        (ParamName::U, m, 1),
        (ParamName::Q, spec.sq(), spec.sq()),
        (ParamName::Z, n, m),
        (ParamName::A, n, 1),
        (ParamName::R, spec.sr(), spec.sr()),
        (ParamName::Xi, m, 1),
        (ParamName::Lambda, spec.sl(), spec.sl()),
    ];
    for (name, rows, cols) in shapes {
        let d = spec.design(name);
        if d.rows != rows || d.cols != cols {
            push(Some(name), format!("is {}x{}, expected {rows}x{cols}", d.rows, d.cols));
            continue;
        }
        let times_ok = match name {
            ParamName::Xi | ParamName::Lambda => d.n_times() == 1,
            _ => d.n_times() == 1 || d.n_times() == spec.t_len,
        };
        if !times_ok {
            push(Some(name), format!("has {} time entries, expected 1 or T", d.n_times()));
        }
        if let Err(e) = d.check_rank() {
            push(Some(name), e.to_string());
        }
        if name.is_variance() {
            for msg in d.check_variance_rules() {
                push(Some(name), msg);
            }
        }
    }
    out
}
