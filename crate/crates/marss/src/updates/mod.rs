//! M-step updates for the eight free vectors and the expected complete-data
//! log-likelihood Ψ they maximize.
//!
//! Every update holds the expectations fixed and maximizes Ψ in its own free
//! vector with all other parameters at their current values. State sums run
//! over `t = t0+1..=T`, observation sums over `t = 1..=T`.

pub mod degenerate;

use std::f64::consts::PI;

use thiserror::Error;

use crate::expectations::ExpectationSet;
use crate::linalg::{self, kron, LinalgError, Mat, Vector};
use crate::model::{
    FreeParams, InitialState, MaterializedParams, ModelError, ModelSpec, ParamDesign, ParamName,
};

pub use degenerate::{
    classify_state_rows, compute_deltas, det_recursion, deterministic_means, update_upsilon_degenerate,
    update_xi_degenerate, DeltaSet, DetRecursion, RowClassification,
};

/// Relative singular-value cutoff used when naming unidentifiable directions.
const NULL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("{param} ({symbol}) is not identifiable; check free values {unidentified:?}")]
    Identifiability { param: ParamName, symbol: &'static str, unidentified: Vec<String> },
    #[error("invalid zero-variance structure: {0}")]
    Structure(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// `Qm_t = Φ_tᵀQ_t⁻¹Φ_t`, `Rm_t = Ξ_tᵀR_t⁻¹Ξ_t`, `Λm = ΠᵀΛ⁻¹Π` and the log
/// determinants of `Q_t`, `R_t`, `Λ`.
#[derive(Debug, Clone)]
pub struct PrecisionProjection {
    qm: Vec<Mat>,
    rm: Vec<Mat>,
    logdet_q: Vec<f64>,
    logdet_r: Vec<f64>,
    pub lm: Mat,
    pub logdet_lambda: f64,
}

fn precision(
    proj: &Mat,
    var: &Mat,
    name: ParamName,
    t: usize,
) -> Result<(Mat, f64), UpdateError> {
    let dim = proj.ncols();
    if var.nrows() == 0 {
        return Ok((Mat::zeros(dim, dim), 0.0));
    }
    let what = format!("{name} at t={t}");
    let inv = linalg::checked_inverse(var, &what)?;
    let logdet = linalg::logdet_spd(var, &what)?;
    Ok((linalg::symmetrize(&(proj.transpose() * inv * proj)), logdet))
}

impl PrecisionProjection {
    pub fn new(spec: &ModelSpec, mp: &MaterializedParams) -> Result<Self, UpdateError> {
        let t_len = spec.t_len;
        let q_varies = spec.q.is_time_varying() || spec.g.len() > 1;
        let r_varies = spec.r.is_time_varying() || spec.h.len() > 1;
        let mut qm = Vec::new();
        let mut logdet_q = Vec::new();
        for t in 1..=if q_varies { t_len } else { 1 } {
            let (m, l) = precision(mp.phi(t), mp.q(t), ParamName::Q, t)?;
            qm.push(m);
            logdet_q.push(l);
        }
        let mut rm = Vec::new();
        let mut logdet_r = Vec::new();
        for t in 1..=if r_varies { t_len } else { 1 } {
            let (m, l) = precision(mp.ksi(t), mp.r(t), ParamName::R, t)?;
            rm.push(m);
            logdet_r.push(l);
        }
        let (lm, logdet_lambda) = precision(&mp.pi, &mp.lambda, ParamName::Lambda, 0)?;
        Ok(Self { qm, rm, logdet_q, logdet_r, lm, logdet_lambda })
    }

    fn idx(len: usize, t: usize) -> usize {
        if len == 1 {
            0
        } else {
            t - 1
        }
    }

    pub fn qm(&self, t: usize) -> &Mat {
        &self.qm[Self::idx(self.qm.len(), t)]
    }
    pub fn rm(&self, t: usize) -> &Mat {
        &self.rm[Self::idx(self.rm.len(), t)]
    }
    pub fn logdet_q(&self, t: usize) -> f64 {
        self.logdet_q[Self::idx(self.logdet_q.len(), t)]
    }
    pub fn logdet_r(&self, t: usize) -> f64 {
        self.logdet_r[Self::idx(self.logdet_r.len(), t)]
    }
}

/// Current parameters, their precisions and the expectations with state
/// means adjusted to the current parameters on fixed and deterministic rows.
pub(crate) struct Ctx<'a> {
    pub spec: &'a ModelSpec,
    pub params: &'a FreeParams,
    pub mp: MaterializedParams,
    pub prec: PrecisionProjection,
    pub ex: ExpectationSet,
}

impl<'a> Ctx<'a> {
    pub fn new(
        spec: &'a ModelSpec,
        params: &'a FreeParams,
        ex: &ExpectationSet,
    ) -> Result<Self, UpdateError> {
        let mp = MaterializedParams::new(spec, params)?;
        let prec = PrecisionProjection::new(spec, &mp)?;
        let means = deterministic_means(spec, &mp, ex)?;
        let ex = ex.with_means(&means);
        Ok(Self { spec, params, mp, prec, ex })
    }

    fn state_times(&self) -> std::ops::RangeInclusive<usize> {
        self.spec.t0 + 1..=self.spec.t_len
    }
}

/// `E[(x_t − B x_{t−1} − u)(x_t − B x_{t−1} − u)ᵀ]`.
fn state_bracket(c: &Ctx, t: usize) -> Mat {
    let (b, u, ex) = (c.mp.b(t), c.mp.u(t), &c.ex);
    let pl = ex.plag(t);
    let bpl = b * pl.transpose();
    let bxu = b * ex.x(t - 1) * u.transpose();
    let xu = ex.x(t) * u.transpose();
    let s = ex.p(t) - &bpl.transpose() - &bpl - &xu - xu.transpose()
        + b * ex.p(t - 1) * b.transpose()
        + &bxu
        + bxu.transpose()
        + u * u.transpose();
    linalg::symmetrize(&s)
}

/// `E[(y_t − Z x_t − a)(y_t − Z x_t − a)ᵀ]`.
fn obs_bracket(c: &Ctx, t: usize) -> Mat {
    let (z, a, ex) = (c.mp.z(t), c.mp.a(t), &c.ex);
    let yxz = ex.yx(t) * z.transpose();
    let ya = ex.y(t) * a.transpose();
    let zxa = z * ex.x(t) * a.transpose();
    let s = ex.o(t) - &yxz - yxz.transpose() - &ya - ya.transpose()
        + z * ex.p(t) * z.transpose()
        + &zxa
        + zxa.transpose()
        + a * a.transpose();
    linalg::symmetrize(&s)
}

/// `E[(x_{t0} − ξ)(x_{t0} − ξ)ᵀ]`.
fn initial_bracket(c: &Ctx) -> Mat {
    let t0 = c.spec.t0;
    let d = c.ex.x(t0) - &c.mp.xi;
    linalg::symmetrize(&(c.ex.v(t0) + &d * d.transpose()))
}

/// Free-value names spanning the near-null space of a normal matrix.
fn null_directions(a: &Mat, names: &[String]) -> Vec<String> {
    if a.iter().any(|x| !x.is_finite()) {
        return names.to_vec();
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let mut hit = vec![false; names.len()];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= NULL_TOL * smax.max(f64::MIN_POSITIVE) {
            for (j, h) in hit.iter_mut().enumerate() {
                *h |= v_t[(k, j)].abs() > 1e-6;
            }
        }
    }
    let out: Vec<String> =
        names.iter().zip(&hit).filter(|(_, &h)| h).map(|(n, _)| n.clone()).collect();
    if out.is_empty() {
        names.to_vec()
    } else {
        out
    }
}

pub(crate) fn solve_normal(
    a: &Mat,
    c: &Vector,
    param: ParamName,
    names: &[String],
) -> Result<Vector, UpdateError> {
    match linalg::checked_inverse(a, param.free_symbol()) {
        Ok(inv) => Ok(inv * c),
        Err(_) => Err(UpdateError::Identifiability {
            param,
            symbol: param.free_symbol(),
            unidentified: null_directions(a, names),
        }),
    }
}

/// β: `(Σ D_bᵀ(P̃_{t−1}⊗Qm_t)D_b)⁻¹ Σ D_bᵀ(vec(Qm_t P̃_{t,t−1}) − (P̃_{t−1}⊗Qm_t)f_b − vec(Qm_t u_t x̃_{t−1}ᵀ))`.
pub fn update_beta(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let design = &spec.b;
    let s = design.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in c.state_times() {
        let qm = c.prec.qm(t);
        let k = kron(c.ex.p(t - 1), qm);
        let d = design.d_at(t - 1);
        let dk = d.transpose() * &k;
        a += &dk * d;
        let target = linalg::vec(&(qm * c.ex.plag(t)))
            - &k * design.f_at(t - 1)
            - linalg::vec(&(qm * c.mp.u(t) * c.ex.x(t - 1).transpose()));
        rhs += d.transpose() * target;
    }
    solve_normal(&a, &rhs, ParamName::B, design.free_names())
}

/// υ for models without deterministic state rows:
/// `(Σ D_uᵀQm_tD_u)⁻¹ Σ D_uᵀQm_t(x̃_t − B_t x̃_{t−1} − f_u)`.
pub fn update_upsilon_general(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let design = &spec.u;
    let s = design.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in c.state_times() {
        let qm = c.prec.qm(t);
        let d = design.d_at(t - 1);
        let dq = d.transpose() * qm;
        a += &dq * d;
        rhs += dq * (c.ex.x(t) - c.mp.b(t) * c.ex.x(t - 1) - design.f_at(t - 1));
    }
    solve_normal(&a, &rhs, ParamName::U, design.free_names())
}

/// υ, switching to the deterministic-row form when G has zero rows.
pub fn update_upsilon(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    if spec.g_zero_rows().iter().any(|&z| z) {
        update_upsilon_degenerate(spec, params, ex)
    } else {
        update_upsilon_general(spec, params, ex)
    }
}

/// `(Σ D_tᵀD_t)⁻¹ Σ D_tᵀ vec(S_t)` for a variance design.
fn variance_update<F>(
    design: &ParamDesign,
    times: impl Iterator<Item = usize>,
    mut bracket: F,
) -> Result<Vector, UpdateError>
where
    F: FnMut(usize) -> Mat,
{
    let s = design.n_free();
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in times {
        let d = design.d_at(t - 1);
        a += d.transpose() * d;
        rhs += d.transpose() * linalg::vec(&bracket(t));
    }
    solve_normal(&a, &rhs, design.name, design.free_names())
}

/// q: `(Σ D_qᵀD_q)⁻¹ Σ D_qᵀ vec(Φ_t S_t Φ_tᵀ)`.
pub fn update_q(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    if spec.q.n_free() == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    variance_update(&spec.q, c.state_times(), |t| {
        let phi = c.mp.phi(t);
        phi * state_bracket(&c, t) * phi.transpose()
    })
}

/// ζ: `(Σ D_zᵀ(P̃_t⊗Rm_t)D_z)⁻¹ Σ D_zᵀ(vec(Rm_t E[y_t x_tᵀ]) − (P̃_t⊗Rm_t)f_z − vec(Rm_t a_t x̃_tᵀ))`.
pub fn update_zeta(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let design = &spec.z;
    let s = design.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in 1..=spec.t_len {
        let rm = c.prec.rm(t);
        let k = kron(c.ex.p(t), rm);
        let d = design.d_at(t - 1);
        a += d.transpose() * &k * d;
        let target = linalg::vec(&(rm * c.ex.yx(t)))
            - &k * design.f_at(t - 1)
            - linalg::vec(&(rm * c.mp.a(t) * c.ex.x(t).transpose()));
        rhs += d.transpose() * target;
    }
    solve_normal(&a, &rhs, ParamName::Z, design.free_names())
}

/// α: `(Σ D_aᵀRm_tD_a)⁻¹ Σ D_aᵀRm_t(ỹ_t − Z_t x̃_t − f_a)`.
pub fn update_alpha(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    let design = &spec.a;
    let s = design.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    for t in 1..=spec.t_len {
        let d = design.d_at(t - 1);
        let dr = d.transpose() * c.prec.rm(t);
        a += &dr * d;
        rhs += dr * (c.ex.y(t) - c.mp.z(t) * c.ex.x(t) - design.f_at(t - 1));
    }
    solve_normal(&a, &rhs, ParamName::A, design.free_names())
}

/// r: `(Σ D_rᵀD_r)⁻¹ Σ D_rᵀ vec(Ξ_t O_t Ξ_tᵀ)`.
pub fn update_r(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    if spec.r.n_free() == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    variance_update(&spec.r, 1..=spec.t_len, |t| {
        let ksi = c.mp.ksi(t);
        ksi * obs_bracket(&c, t) * ksi.transpose()
    })
}

/// How the initial-state mean enters the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiMode {
    /// `x_{t0} ~ N(ξ, FΛFᵀ)` with every F row nonzero.
    Stochastic,
    /// `x_0 ≡ ξ`.
    FixedX0,
    /// `x_1 ≡ ξ`.
    FixedX1,
    /// Mixed fixed/stochastic initial rows or deterministic state rows.
    DegenerateGeneral,
}

impl XiMode {
    pub fn auto(spec: &ModelSpec) -> Self {
        if spec.g_zero_rows().iter().any(|&z| z) {
            return XiMode::DegenerateGeneral;
        }
        match (spec.initial_state(), spec.t0) {
            (InitialState::Stochastic, _) => XiMode::Stochastic,
            (InitialState::Fixed, 0) => XiMode::FixedX0,
            (InitialState::Fixed, _) => XiMode::FixedX1,
            (InitialState::Mixed, _) => XiMode::DegenerateGeneral,
        }
    }
}

/// p under the given treatment of the initial state.
pub fn update_xi(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
    mode: XiMode,
) -> Result<Vector, UpdateError> {
    let design = &spec.xi;
    let s = design.n_free();
    if s == 0 {
        return Ok(Vector::zeros(0));
    }
    if mode == XiMode::DegenerateGeneral {
        return update_xi_degenerate(spec, params, ex);
    }
    let c = Ctx::new(spec, params, ex)?;
    let d = design.d_at(0);
    let f = design.f_at(0);
    let t0 = spec.t0;
    let mut a = Mat::zeros(s, s);
    let mut rhs = Vector::zeros(s);
    match mode {
        XiMode::Stochastic => {
            let dl = d.transpose() * &c.prec.lm;
            a += &dl * d;
            rhs += dl * (c.ex.x(t0) - f);
        }
        XiMode::FixedX0 | XiMode::FixedX1 => {
            if mode == XiMode::FixedX1 && t0 == 1 {
                let zd = c.mp.z(1) * d;
                let zr = zd.transpose() * c.prec.rm(1);
                a += &zr * &zd;
                rhs += zr * (c.ex.y(1) - c.mp.z(1) * f - c.mp.a(1));
            }
            let t = t0 + 1;
            if t <= spec.t_len {
                let bd = c.mp.b(t) * d;
                let bq = bd.transpose() * c.prec.qm(t);
                a += &bq * &bd;
                rhs += bq * (c.ex.x(t) - c.mp.b(t) * f - c.mp.u(t));
            }
        }
        XiMode::DegenerateGeneral => unreachable!(),
    }
    solve_normal(&a, &rhs, ParamName::Xi, design.free_names())
}

/// λ: `(D_λᵀD_λ)⁻¹ D_λᵀ vec(Π(Ṽ_{t0} + (x̃_{t0} − ξ)(x̃_{t0} − ξ)ᵀ)Πᵀ)`.
pub fn update_lambda(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    if spec.lambda.n_free() == 0 {
        return Ok(Vector::zeros(0));
    }
    let c = Ctx::new(spec, params, ex)?;
    let m = &c.mp.pi * initial_bracket(&c) * c.mp.pi.transpose();
    variance_update(&spec.lambda, std::iter::once(1), |_| m.clone())
}

/// The update for one free vector, with the automatic υ and ξ treatments.
pub fn update_parameter(
    name: ParamName,
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<Vector, UpdateError> {
    match name {
        ParamName::B => update_beta(spec, params, ex),
        ParamName::U => update_upsilon(spec, params, ex),
        ParamName::Q => update_q(spec, params, ex),
        ParamName::Z => update_zeta(spec, params, ex),
        ParamName::A => update_alpha(spec, params, ex),
        ParamName::R => update_r(spec, params, ex),
        ParamName::Xi => update_xi(spec, params, ex, XiMode::auto(spec)),
        ParamName::Lambda => update_lambda(spec, params, ex),
    }
}

/// Ψ: the expected complete-data log-likelihood at `params` under the
/// moments in `ex`. Blocks whose noise loading has no columns drop out.
pub fn expected_loglik(
    spec: &ModelSpec,
    params: &FreeParams,
    ex: &ExpectationSet,
) -> Result<f64, UpdateError> {
    let c = Ctx::new(spec, params, ex)?;
    let ln2pi = (2.0 * PI).ln();
    let mut psi = 0.0;
    let sr = spec.sr() as f64;
    if spec.sr() > 0 {
        for t in 1..=spec.t_len {
            let tr = (c.prec.rm(t) * obs_bracket(&c, t)).trace();
            psi -= 0.5 * (tr + c.prec.logdet_r(t) + sr * ln2pi);
        }
    }
    let sq = spec.sq() as f64;
    if spec.sq() > 0 {
        for t in c.state_times() {
            let tr = (c.prec.qm(t) * state_bracket(&c, t)).trace();
            psi -= 0.5 * (tr + c.prec.logdet_q(t) + sq * ln2pi);
        }
    }
    if spec.sl() > 0 {
        let tr = (&c.prec.lm * initial_bracket(&c)).trace();
        psi -= 0.5 * (tr + c.prec.logdet_lambda + spec.sl() as f64 * ln2pi);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectations::y_expectations;
    use crate::kalman::{filter_and_smooth, TimeSeriesData};
    use crate::model::{builder, BuilderKind};

    fn rw_fit_inputs() -> (ModelSpec, FreeParams, ExpectationSet) {
        let mut spec = ModelSpec::new(1, 1, 5);
        spec.u = builder(ParamName::U, &BuilderKind::Unconstrained, 1, 1).unwrap();
        let mut p = spec.zero_params();
        p.upsilon = Vector::from_vec(vec![0.1]);
        p.q = Vector::from_vec(vec![0.3]);
        p.r = Vector::from_vec(vec![0.2]);
        p.p = Vector::from_vec(vec![0.0]);
        p.lambda = Vector::from_vec(vec![1.0]);
        let mp = MaterializedParams::new(&spec, &p).unwrap();
        let data = TimeSeriesData::new(Mat::from_row_slice(1, 5, &[0.3, 0.1, 0.9, 1.4, 1.2]));
        let (_, s) = filter_and_smooth(&spec, &mp, &data).unwrap();
        let ex = y_expectations(&spec, &mp, &data, &s).unwrap();
        (spec, p, ex)
    }

    #[test]
    fn univariate_drift_is_mean_increment() {
        let (spec, p, ex) = rw_fit_inputs();
        let u = update_upsilon(&spec, &p, &ex).unwrap();
        let mean = (1..=5).map(|t| ex.x(t)[0] - ex.x(t - 1)[0]).sum::<f64>() / 5.0;
        assert!((u[0] - mean).abs() < 1e-14);
    }

    #[test]
    fn stochastic_xi_is_smoothed_initial_state() {
        let (spec, p, ex) = rw_fit_inputs();
        let xi = update_xi(&spec, &p, &ex, XiMode::Stochastic).unwrap();
        assert!((xi[0] - ex.x(0)[0]).abs() < 1e-14);
    }

    #[test]
    fn lambda_at_smoothed_mean_is_smoothed_variance() {
        let (spec, mut p, ex) = rw_fit_inputs();
        p.p = ex.x(0).clone();
        let l = update_lambda(&spec, &p, &ex).unwrap();
        assert!((l[0] - ex.v(0)[(0, 0)]).abs() < 1e-14);
    }

    #[test]
    fn updates_do_not_decrease_psi() {
        let (spec, mut p, ex) = rw_fit_inputs();
        let mut psi = expected_loglik(&spec, &p, &ex).unwrap();
        for name in ParamName::ALL {
            *p.get_mut(name) = update_parameter(name, &spec, &p, &ex).unwrap();
            let next = expected_loglik(&spec, &p, &ex).unwrap();
            assert!(next >= psi - 1e-12, "{name}: {psi} -> {next}");
            psi = next;
        }
    }

    #[test]
    fn singular_normal_matrix_names_the_values() {
        let (mut spec, mut p, ex) = rw_fit_inputs();
        // Two intercept columns on a 1x1 parameter cannot both be identified.
        spec.a = ParamDesign::new(
            ParamName::A,
            1,
            1,
            vec![Vector::zeros(1)],
            vec![Mat::from_row_slice(1, 2, &[1.0, 1.0])],
            vec!["a1".into(), "a2".into()],
        )
        .unwrap();
        p.alpha = Vector::zeros(2);
        let err = update_alpha(&spec, &p, &ex).unwrap_err();
        match err {
            UpdateError::Identifiability { param, unidentified, .. } => {
                assert_eq!(param, ParamName::A);
                assert_eq!(unidentified, vec!["a1".to_string(), "a2".to_string()]);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn one_step_hand_value() {
        // n = m = 1, B = Z = 1, u = a = 0, Q = R = 1, t0 = 0, T = 1, fixed x0 = 0.
        let mut spec = ModelSpec::new(1, 1, 1);
        spec.f = Mat::zeros(1, 0);
        spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::zeros(0, 0));
        spec.q = ParamDesign::fixed(ParamName::Q, &Mat::identity(1, 1));
        spec.r = ParamDesign::fixed(ParamName::R, &Mat::identity(1, 1));
        spec.xi = ParamDesign::fixed(ParamName::Xi, &Mat::zeros(1, 1));
        let p = spec.zero_params();
        let mp = MaterializedParams::new(&spec, &p).unwrap();
        let data = TimeSeriesData::new(Mat::from_element(1, 1, f64::NAN));
        let (_, s) = filter_and_smooth(&spec, &mp, &data).unwrap();
        let ex = y_expectations(&spec, &mp, &data, &s).unwrap();
        // x1 ~ N(0,1), y1 ~ N(x1,1) unobserved: E[x1²] = 1, E[(y1−x1)²] = 1.
        let psi = expected_loglik(&spec, &p, &ex).unwrap();
        let expect = -0.5 * (1.0 + (2.0 * PI).ln()) * 2.0;
        assert!((psi - expect).abs() < 1e-14, "{psi} vs {expect}");
    }
}
