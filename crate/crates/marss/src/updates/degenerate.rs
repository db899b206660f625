//! State rows without process noise.
//!
//! A row is deterministic at time `t` when neither it nor anything feeding it
//! through the nonzero pattern of B has received noise since `t0`. Such rows
//! are exact functions of `x_{t0}`, u and B:
//!
//! ```text
//! x_t^d = I_t^d (B*_t x_{t0} + f*_t + D*_t υ)
//! ```
//!
//! and υ and ξ enter the expected log-likelihood through them, which changes
//! their updates.

use super::{solve_normal, Ctx, UpdateError};
use crate::expectations::ExpectationSet;
use crate::linalg::{Mat, Vector};
use crate::model::{FreeParams, MaterializedParams, ModelSpec, ParamName};

/// Deterministic / indirectly stochastic / directly stochastic state rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RowClassification {
    pub t0: usize,
    /// `deterministic[τ][i]` for `t = t0 + τ`; the last entry holds for all later `t`.
    deterministic: Vec<Vec<bool>>,
    /// Rows of G that are nonzero.
    pub directly_stochastic: Vec<bool>,
    /// Zero rows of G, H and F.
    pub g_zero: Vec<bool>,
    pub h_zero: Vec<bool>,
    pub f_zero: Vec<bool>,
}

fn indicator(flags: &[bool]) -> Mat {
    Mat::from_diagonal(&Vector::from_iterator(
        flags.len(),
        flags.iter().map(|&f| if f { 1.0 } else { 0.0 }),
    ))
}

/// Iterates `d_τ = {i : G row i is zero, and every j with M_τ(i,j) ≠ 0 is in d_{τ−1}}`
/// from `d_0 = all rows`, using the structural pattern of B only.
fn classify_patterns<'a>(
    mut patterns: impl FnMut(usize) -> &'a Mat,
    g_zero: &[bool],
    horizon: usize,
    t0: usize,
) -> Result<Vec<Vec<bool>>, UpdateError> {
    let m = g_zero.len();
    let mut out = vec![vec![true; m]];
    for tau in 1..=horizon {
        let prev = &out[tau - 1];
        let pat = patterns(tau);
        let cur: Vec<bool> = (0..m)
            .map(|i| g_zero[i] && (0..m).all(|j| pat[(i, j)] == 0.0 || prev[j]))
            .collect();
        if let Some(i) = (0..m).find(|&i| cur[i] && !prev[i]) {
            return Err(UpdateError::Structure(format!(
                "state row {} becomes deterministic again at t={} after receiving noise; \
                 the zero pattern of B must not change this way",
                i + 1,
                t0 + tau
            )));
        }
        out.push(cur);
    }
    Ok(out)
}

/// Classifies rows for a time-invariant B pattern `M` over `τ = 0..=horizon` steps.
pub fn classify_state_rows(
    pattern: &Mat,
    g_zero_rows: &[bool],
    horizon: usize,
) -> Result<RowClassification, UpdateError> {
    let deterministic = classify_patterns(|_| pattern, g_zero_rows, horizon, 0)?;
    Ok(RowClassification {
        t0: 0,
        deterministic,
        directly_stochastic: g_zero_rows.iter().map(|&z| !z).collect(),
        g_zero: g_zero_rows.to_vec(),
        h_zero: Vec::new(),
        f_zero: Vec::new(),
    })
}

impl RowClassification {
    /// Classification over `t = t0..=T` from the model's B design patterns.
    pub fn for_spec(spec: &ModelSpec) -> Result<Self, UpdateError> {
        let g_zero = spec.g_zero_rows();
        let t0 = spec.t0;
        let patterns: Vec<Mat> = if spec.b.is_time_varying() {
            (t0 + 1..=spec.t_len).map(|t| spec.b.pattern_at(t - 1)).collect()
        } else {
            vec![spec.b.pattern_at(0)]
        };
        let pick = |tau: usize| &patterns[if patterns.len() == 1 { 0 } else { tau - 1 }];
        let horizon = if g_zero.iter().any(|&z| z) { spec.t_len - t0 } else { 1.min(spec.t_len - t0) };
        let deterministic = classify_patterns(pick, &g_zero, horizon, t0)?;
        Ok(Self {
            t0,
            deterministic,
            directly_stochastic: g_zero.iter().map(|&z| !z).collect(),
            g_zero,
            h_zero: spec.h_zero_rows(),
            f_zero: spec.f_zero_rows(),
        })
    }

    /// `I_t^d` as flags.
    pub fn deterministic(&self, t: usize) -> &[bool] {
        let tau = (t - self.t0).min(self.deterministic.len() - 1);
        &self.deterministic[tau]
    }

    /// `I_t^d` as a diagonal matrix.
    pub fn id_matrix(&self, t: usize) -> Mat {
        indicator(self.deterministic(t))
    }

    /// Rows with zero G that are no longer deterministic at `t`.
    pub fn indirectly_stochastic(&self, t: usize) -> Vec<bool> {
        self.deterministic(t)
            .iter()
            .zip(&self.g_zero)
            .map(|(&d, &z)| z && !d)
            .collect()
    }

    /// Rows that are indirectly stochastic at some time.
    pub fn ever_indirectly_stochastic(&self) -> Vec<bool> {
        let last = self.t0 + self.deterministic.len() - 1;
        // Rows only leave the deterministic set, so the last step has them all.
        self.indirectly_stochastic(last)
    }

    /// `true` when some row is deterministic after `t0`.
    pub fn has_deterministic_rows(&self) -> bool {
        self.deterministic.iter().skip(1).any(|d| d.iter().any(|&x| x))
    }

    pub fn horizon(&self) -> usize {
        self.deterministic.len() - 1
    }
}

/// `B*_t`, `f*_t`, `D*_t` for `t = t0..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetRecursion {
    pub t0: usize,
    bstar: Vec<Mat>,
    fstar: Vec<Vector>,
    dstar: Vec<Mat>,
}

impl DetRecursion {
    pub fn bstar(&self, t: usize) -> &Mat {
        &self.bstar[t - self.t0]
    }
    pub fn fstar(&self, t: usize) -> &Vector {
        &self.fstar[t - self.t0]
    }
    pub fn dstar(&self, t: usize) -> &Mat {
        &self.dstar[t - self.t0]
    }
    /// `u*_t = f*_t + D*_t υ`.
    pub fn ustar(&self, t: usize, upsilon: &Vector) -> Vector {
        if upsilon.is_empty() {
            self.fstar(t).clone()
        } else {
            self.fstar(t) + self.dstar(t) * upsilon
        }
    }
}

/// `B*_{t0} = I, f*_{t0} = 0, D*_{t0} = 0`;
/// `B*_t = B_t B*_{t−1}`, `f*_t = B_t f*_{t−1} + f_{t,u}`, `D*_t = B_t D*_{t−1} + D_{t,u}`.
pub fn det_recursion(spec: &ModelSpec, mp: &MaterializedParams) -> DetRecursion {
    let (m, t0) = (spec.m, spec.t0);
    let s = spec.u.n_free();
    let mut bstar = vec![Mat::identity(m, m)];
    let mut fstar = vec![Vector::zeros(m)];
    let mut dstar = vec![Mat::zeros(m, s)];
    for t in t0 + 1..=spec.t_len {
        let b = mp.b(t);
        let k = t - t0;
        bstar.push(b * &bstar[k - 1]);
        fstar.push(b * &fstar[k - 1] + spec.u.f_at(t - 1));
        dstar.push(b * &dstar[k - 1] + spec.u.d_at(t - 1));
    }
    DetRecursion { t0, bstar, fstar, dstar }
}

/// State means with deterministic rows (and fixed initial rows) recomputed
/// from the current parameters:
/// `m_t = (I − I_t^d)x̃_t + I_t^d(B*_t E[x_{t0}] + u*_t)`, where
/// `E[x_{t0}] = (I − I_λ)x̃_{t0} + I_λ ξ`.
pub fn deterministic_means(
    spec: &ModelSpec,
    mp: &MaterializedParams,
    ex: &ExpectationSet,
) -> Result<Vec<Vector>, UpdateError> {
    let t0 = spec.t0;
    let f_zero = spec.f_zero_rows();
    let mut e0 = ex.x(t0).clone();
    for (i, &fixed) in f_zero.iter().enumerate() {
        if fixed {
            e0[i] = mp.xi[i];
        }
    }
    let mut means = vec![e0.clone()];
    let g_zero = spec.g_zero_rows();
    if !g_zero.iter().any(|&z| z) {
        means.extend((t0 + 1..=spec.t_len).map(|t| ex.x(t).clone()));
        return Ok(means);
    }
    let rc = RowClassification::for_spec(spec)?;
    let mut bstar = Mat::identity(spec.m, spec.m);
    let mut ustar = Vector::zeros(spec.m);
    for t in t0 + 1..=spec.t_len {
        let b = mp.b(t);
        bstar = b * bstar;
        ustar = b * ustar + mp.u(t);
        let det = rc.deterministic(t);
        let x_det = &bstar * &e0 + &ustar;
        let mut mt = ex.x(t).clone();
        for (i, &d) in det.iter().enumerate() {
            if d {
                mt[i] = x_det[i];
            }
        }
        means.push(mt);
    }
    Ok(means)
}

/// Δ₁…Δ₈, indexed by `t`. Observation terms (1, 2, 5, 6) are defined for
/// `t = 1..=T`, state terms (3, 4, 7, 8) for `t = t0..=T` and vanish at `t0`.
#[derive(Debug, Clone)]
pub struct DeltaSet {
    pub d1: Vec<Vector>,
    pub d2: Vec<Mat>,
    pub d3: Vec<Vector>,
    pub d4: Vec<Mat>,
    pub d5: Vec<Vector>,
    pub d6: Vec<Mat>,
    pub d7: Vec<Vector>,
    pub d8: Vec<Mat>,
}

/// Builds every Δ from expectations whose initial mean already carries the
/// current ξ on fixed rows.
pub fn compute_deltas(
    spec: &ModelSpec,
    mp: &MaterializedParams,
    ex: &ExpectationSet,
    rc: &RowClassification,
    dr: &DetRecursion,
    upsilon: &Vector,
) -> DeltaSet {
    let (n, m, t0, t_len) = (spec.n, spec.m, spec.t0, spec.t_len);
    let (su, sx) = (spec.u.n_free(), spec.xi.n_free());
    let eye = Mat::identity(m, m);
    let i_lambda = indicator(&spec.f_zero_rows());
    let d_xi = spec.xi.d_at(0);
    let f_xi = spec.xi.f_at(0);
    let e0 = ex.x(t0);
    let e0_f = (&eye - &i_lambda) * e0 + &i_lambda * f_xi;
    let lambda_dxi = &i_lambda * d_xi;

    let mut out = DeltaSet {
        d1: vec![Vector::zeros(n); t_len + 1],
        d2: vec![Mat::zeros(n, su); t_len + 1],
        d3: vec![Vector::zeros(m); t_len + 1],
        d4: vec![Mat::zeros(m, su); t_len + 1],
        d5: vec![Vector::zeros(n); t_len + 1],
        d6: vec![Mat::zeros(n, sx); t_len + 1],
        d7: vec![Vector::zeros(m); t_len + 1],
        d8: vec![Mat::zeros(m, sx); t_len + 1],
    };
    for t in 1..=t_len {
        let z = mp.z(t);
        let id = rc.id_matrix(t);
        let z_id = z * &id;
        let stoch = z * (&eye - &id) * ex.x(t);
        let bs = dr.bstar(t);
        out.d1[t] = ex.y(t) - &stoch - &z_id * (bs * e0 + dr.fstar(t)) - mp.a(t);
        out.d2[t] = &z_id * dr.dstar(t);
        out.d5[t] = ex.y(t) - &stoch - &z_id * (bs * &e0_f + dr.ustar(t, upsilon)) - mp.a(t);
        out.d6[t] = &z_id * bs * &lambda_dxi;
    }
    for t in t0 + 1..=t_len {
        let b = mp.b(t);
        let idp = rc.id_matrix(t - 1);
        let b_id = b * &idp;
        let stoch = b * (&eye - &idp) * ex.x(t - 1);
        let bs = dr.bstar(t - 1);
        out.d3[t] = ex.x(t) - &stoch - &b_id * (bs * e0 + dr.fstar(t - 1)) - spec.u.f_at(t - 1);
        out.d4[t] = spec.u.d_at(t - 1) + &b_id * dr.dstar(t - 1);
        out.d7[t] = ex.x(t) - &stoch - &b_id * (bs * &e0_f + dr.ustar(t - 1, upsilon)) - mp.u(t);
        out.d8[t] = &b_id * bs * &lambda_dxi;
    }
    out
}

fn deltas_for(c: &Ctx) -> Result<DeltaSet, UpdateError> {
    let rc = RowClassification::for_spec(c.spec)?;
    let dr = det_recursion(c.spec, &c.mp);
    Ok(compute_deltas(c.spec, &c.mp, &c.ex, &rc, &dr, &c.params.upsilon))
}

/// υ with deterministic rows:
/// `(Σ Δ₄ᵀQmΔ₄ + Σ Δ₂ᵀRmΔ₂)⁻¹ (Σ Δ₄ᵀQmΔ₃ + Σ Δ₂ᵀRmΔ₁)`.
pub fn update_upsilon_degenerate(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let s = spec.u.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let d = deltas_for(&c)?;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in spec.t0 + 1..=spec.t_len {
        let dq = d.d4[t].transpose() * c.prec.qm(t);
        a += &dq * &d.d4[t];
        rhs += dq * &d.d3[t];
    }
    for t in 1..=spec.t_len {
        let dr = d.d2[t].transpose() * c.prec.rm(t);
        a += &dr * &d.d2[t];
        rhs += dr * &d.d1[t];
    }
    solve_normal(&a, &rhs, ParamName::U, spec.u.free_names())
}

/// p for any mix of fixed and stochastic initial rows and deterministic states:
/// `(Σ Δ₈ᵀQmΔ₈ + Σ Δ₆ᵀRmΔ₆ + D_ξᵀΛmD_ξ)⁻¹ (Σ Δ₈ᵀQmΔ₇ + Σ Δ₆ᵀRmΔ₅ + D_ξᵀΛm(x̃_{t0} − f_ξ))`.
pub fn update_xi_degenerate(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let s = spec.xi.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let d = deltas_for(&c)?;
    let d_xi = spec.xi.d_at(0);
    let dl = d_xi.transpose() * &c.prec.lm;
    let mut a = &dl * d_xi;
    let mut rhs = dl * (c.ex.x(spec.t0) - spec.xi.f_at(0));
    for t in spec.t0 + 1..=spec.t_len {
        let dq = d.d8[t].transpose() * c.prec.qm(t);
        a += &dq * &d.d8[t];
        rhs += dq * &d.d7[t];
    }
    for t in 1..=spec.t_len {
        let dr = d.d6[t].transpose() * c.prec.rm(t);
        a += &dr * &d.d6[t];
        rhs += dr * &d.d5[t];
    }
    solve_normal(&a, &rhs, ParamName::Xi, spec.xi.free_names())
}
