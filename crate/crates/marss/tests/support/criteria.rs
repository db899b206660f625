//! Acceptance criteria as functions, shared by the focused integration tests
//! and the `acceptance` target. Each returns a one-line summary on success.

use std::path::Path;
use std::process::Command;

use marss::em::{default_init, e_step, em_fit, EMConfig, MonotonicityAction};
use marss::expectations::{y_expectations, ExpectationSet};
use marss::kalman::{filter_and_smooth, TimeSeriesData};
use marss::linalg::{Mat, Vector};
use marss::model::{
    builder, simulate, BuilderKind, FreeParams, MaterializedParams, ModelSpec, ParamDesign, ParamName,
};
use marss::updates::{
    classify_state_rows, expected_loglik, update_alpha, update_beta, update_lambda, update_parameter,
    update_q, update_r, update_upsilon_degenerate, update_upsilon_general, update_xi, update_xi_degenerate,
    update_zeta, XiMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::models::{random_constrained_model, random_update_inputs, random_values, Init};
use super::oracle::condition;
use super::{random_data, random_fixed_model};

pub type Outcome = Result<String, String>;

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

fn vmax(v: &Vector) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Every smoother and expectation entry against the joint-Gaussian oracle,
/// as `(label, max abs difference)`.
pub fn oracle_discrepancies(spec: &ModelSpec, mp: &MaterializedParams, data: &TimeSeriesData) -> Vec<(String, f64)> {
    let (_, s) = filter_and_smooth(spec, mp, data).unwrap();
    let ex = y_expectations(spec, mp, data, &s).unwrap();
    let o = condition(spec, mp, data);
    let mut out = Vec::new();
    if let Some(ll) = o.loglik {
        out.push(("loglik".to_string(), (s.loglik - ll).abs()));
    }
    for t in spec.t0..=spec.t_len {
        out.push((format!("x at {t}"), vmax(&(s.x(t) - o.x(t)))));
        out.push((format!("V at {t}"), max_abs(&(s.v(t) - o.v(t)))));
        out.push((format!("P at {t}"), max_abs(&(ex.p(t) - o.p(t)))));
        if t > spec.t0 {
            out.push((format!("Vlag at {t}"), max_abs(&(s.vlag(t) - o.vlag(t)))));
            out.push((format!("Plag at {t}"), max_abs(&(ex.plag(t) - o.plag(t)))));
        }
    }
    for t in 1..=spec.t_len {
        out.push((format!("y at {t}"), vmax(&(ex.y(t) - o.y(t)))));
        out.push((format!("O at {t}"), max_abs(&(ex.o(t) - o.o(t)))));
        out.push((format!("W at {t}"), max_abs(&(ex.w(t) - o.w(t)))));
        out.push((format!("yx at {t}"), max_abs(&(ex.yx(t) - o.yx(t)))));
        if t > spec.t0 {
            out.push((format!("yxlag at {t}"), max_abs(&(ex.yxlag(t) - o.yxlag(t)))));
        }
    }
    out
}

/// 25 random models with n, m ≤ 2, T ≤ 4 and up to half the data missing.
pub fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = (String::new(), 0.0f64);
    for case in 0..25 {
        let n = rng.random_range(1..=2);
        let m = rng.random_range(1..=2);
        let t_len = rng.random_range(1..=4);
        let fixed = case % 4 == 3;
        let (spec, p) = random_fixed_model(&mut rng, n, m, t_len, fixed);
        let missing = rng.random_range(0.0..=0.5);
        let data = random_data(&mut rng, n, t_len, missing);
        let mp = MaterializedParams::new(&spec, &p).unwrap();
        for (label, d) in oracle_discrepancies(&spec, &mp, &data) {
            if d > worst.1 {
                worst = (format!("case {case}, {label}"), d);
            }
        }
    }
    if worst.1 <= 1e-8 {
        Ok(format!("max abs difference {:.2e}", worst.1))
    } else {
        Err(format!("{} differs by {:.2e}", worst.0, worst.1))
    }
}

fn random_valid_model(rng: &mut ChaCha8Rng) -> (ModelSpec, FreeParams, TimeSeriesData) {
    loop {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let init = if rng.random_bool(0.5) { Init::Stochastic } else { Init::Fixed };
        let spec = random_constrained_model(rng, n, m, 30, init);
        let truth = random_values(rng, &spec);
        let Ok(sim) = simulate(&spec, &truth, rng.random()) else { continue };
        if sim.observations.amax() > 1e3 {
            continue;
        }
        let mut y = sim.observations;
        for v in y.iter_mut() {
            if rng.random::<f64>() < 0.1 {
                *v = f64::NAN;
            }
        }
        let data = TimeSeriesData::new(y);
        let start = random_values(rng, &spec);
        if e_step(&spec, &start, &data).is_ok() {
            return (spec, start, data);
        }
    }
}

/// 20 random models, T = 30, 50 safe-mode iterations each.
pub fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let cfg = EMConfig {
        max_iter: 50,
        abstol: f64::MIN_POSITIVE,
        safe_mode: true,
        monotonicity: MonotonicityAction::Warn,
        pin_variances: false,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for case in 0..20 {
        let (spec, start, data) = random_valid_model(&mut rng);
        let fit = em_fit(&spec, &start, &data, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        for w in fit.loglik_trace.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    if worst <= 1e-8 {
        Ok(format!("largest per-iteration decrease {:.2e}", worst.max(0.0)))
    } else {
        Err(format!("log-likelihood decreased by {worst:.2e}"))
    }
}

/// Central-difference gradient of Ψ in one free vector.
pub fn psi_gradient(spec: &ModelSpec, params: &FreeParams, ex: &ExpectationSet, name: ParamName) -> Vector {
    let v = params.get(name).clone();
    Vector::from_fn(v.len(), |k, _| {
        let h = 1e-5 * v[k].abs().max(1.0);
        let mut p = params.clone();
        p.get_mut(name)[k] = v[k] + h;
        let up = expected_loglik(spec, &p, ex).unwrap();
        p.get_mut(name)[k] = v[k] - h;
        let down = expected_loglik(spec, &p, ex).unwrap();
        (up - down) / (2.0 * h)
    })
}

/// `‖∇Ψ(updated)‖ / max(1, ‖∇Ψ(current)‖)`.
pub fn relative_gradient(spec: &ModelSpec, params: &FreeParams, ex: &ExpectationSet, name: ParamName) -> f64 {
    let g0 = psi_gradient(spec, params, ex, name).norm();
    let mut next = params.clone();
    *next.get_mut(name) = update_parameter(name, spec, params, ex).unwrap();
    psi_gradient(spec, &next, ex, name).norm() / g0.max(1.0)
}

/// Each of the 8 updates on 10 random expectation sets.
pub fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = (ParamName::B, 0.0f64);
    for name in ParamName::ALL {
        for k in 0..10 {
            let init = match name {
                ParamName::Lambda => Init::Stochastic,
                ParamName::Xi if k % 2 == 1 => Init::Fixed,
                _ if k % 3 == 2 => Init::Fixed,
                _ => Init::Stochastic,
            };
            let (spec, params, ex) = random_update_inputs(&mut rng, init);
            let rel = relative_gradient(&spec, &params, &ex, name);
            if !(rel <= worst.1) {
                worst = (name, rel);
            }
        }
    }
    if worst.1 <= 1e-5 {
        Ok(format!("largest relative gradient {:.2e} ({})", worst.1, worst.0))
    } else {
        Err(format!("{} update leaves relative gradient {:.2e}", worst.0, worst.1))
    }
}

fn identity_design(name: ParamName, rows: usize, cols: usize) -> ParamDesign {
    let k = rows * cols;
    let names = (1..=k).map(|i| i.to_string()).collect();
    ParamDesign::new(name, rows, cols, vec![Vector::zeros(k)], vec![Mat::identity(k, k)], names).unwrap()
}

fn vec_of(m: &Mat) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// The unconstrained updates written out directly in terms of the moments.
pub struct Unconstrained<'a> {
    pub spec: &'a ModelSpec,
    pub mp: &'a MaterializedParams,
    pub ex: &'a ExpectationSet,
}

impl Unconstrained<'_> {
    fn state_times(&self) -> std::ops::RangeInclusive<usize> {
        self.spec.t0 + 1..=self.spec.t_len
    }
    fn n_state(&self) -> f64 {
        (self.spec.t_len - self.spec.t0) as f64
    }

    pub fn u(&self) -> Mat {
        let (b, ex) = (self.mp.b(1), self.ex);
        let s: Vector = self.state_times().map(|t| ex.x(t) - b * ex.x(t - 1)).sum();
        Mat::from_column_slice(s.len(), 1, (s / self.n_state()).as_slice())
    }

    pub fn b(&self) -> Mat {
        let (u, ex) = (self.mp.u(1), self.ex);
        let m = self.spec.m;
        let mut num = Mat::zeros(m, m);
        let mut den = Mat::zeros(m, m);
        for t in self.state_times() {
            num += ex.plag(t) - u * ex.x(t - 1).transpose();
            den += ex.p(t - 1);
        }
        num * den.try_inverse().unwrap()
    }

    pub fn q(&self) -> Mat {
        let (b, u, ex) = (self.mp.b(1), self.mp.u(1), self.ex);
        let mut s = Mat::zeros(self.spec.m, self.spec.m);
        for t in self.state_times() {
            let (x, x1) = (ex.x(t), ex.x(t - 1));
            s += ex.p(t) - b * ex.plag(t).transpose() - ex.plag(t) * b.transpose() - x * u.transpose()
                - u * x.transpose()
                + b * ex.p(t - 1) * b.transpose()
                + b * x1 * u.transpose()
                + u * x1.transpose() * b.transpose()
                + u * u.transpose();
        }
        s / self.n_state()
    }

    pub fn a(&self) -> Mat {
        let (z, ex) = (self.mp.z(1), self.ex);
        let s: Vector = (1..=self.spec.t_len).map(|t| ex.y(t) - z * ex.x(t)).sum();
        Mat::from_column_slice(s.len(), 1, (s / self.spec.t_len as f64).as_slice())
    }

    pub fn z(&self) -> Mat {
        let (a, ex) = (self.mp.a(1), self.ex);
        let (n, m) = (self.spec.n, self.spec.m);
        let mut num = Mat::zeros(n, m);
        let mut den = Mat::zeros(m, m);
        for t in 1..=self.spec.t_len {
            num += ex.yx(t) - a * ex.x(t).transpose();
            den += ex.p(t);
        }
        num * den.try_inverse().unwrap()
    }

    pub fn r(&self) -> Mat {
        let (z, a, ex) = (self.mp.z(1), self.mp.a(1), self.ex);
        let mut s = Mat::zeros(self.spec.n, self.spec.n);
        for t in 1..=self.spec.t_len {
            let (y, x) = (ex.y(t), ex.x(t));
            s += ex.o(t) - ex.yx(t) * z.transpose() - z * ex.yx(t).transpose() - y * a.transpose()
                - a * y.transpose()
                + z * ex.p(t) * z.transpose()
                + z * x * a.transpose()
                + a * x.transpose() * z.transpose()
                + a * a.transpose();
        }
        s / self.spec.t_len as f64
    }

    pub fn xi(&self) -> Mat {
        let (t0, ex, mp) = (self.spec.t0, self.ex, self.mp);
        let m = self.spec.m;
        if self.spec.sl() > 0 {
            return Mat::from_column_slice(m, 1, ex.x(t0).as_slice());
        }
        let qi = mp.q(t0 + 1).clone().try_inverse().unwrap();
        let b = mp.b(t0 + 1);
        let mut lhs = b.transpose() * &qi * b;
        let mut rhs = b.transpose() * &qi * (ex.x(t0 + 1) - mp.u(t0 + 1));
        if t0 == 1 {
            let ri = mp.r(1).clone().try_inverse().unwrap();
            let z = mp.z(1);
            lhs += z.transpose() * &ri * z;
            rhs += z.transpose() * &ri * (ex.y(1) - mp.a(1));
        }
        let v = lhs.try_inverse().unwrap() * rhs;
        Mat::from_column_slice(m, 1, v.as_slice())
    }

    pub fn lambda(&self) -> Mat {
        let t0 = self.spec.t0;
        let d = self.ex.x(t0) - &self.mp.xi;
        self.ex.v(t0) + &d * d.transpose()
    }
}

/// D = I, f = 0 for one parameter at a time against the unconstrained forms.
pub fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = (ParamName::B, 0.0f64);
    for case in 0..8 {
        for name in ParamName::ALL {
            let fixed = matches!(name, ParamName::Xi) && case % 2 == 1;
            let (mut spec, _) = random_fixed_model(&mut rng, 2, 2, 10, fixed);
            let base = spec.clone();
            let shape = |d: &ParamDesign| (d.rows, d.cols);
            let (r, c) = shape(base.design(name));
            spec.set_design(identity_design(name, r, c), name);
            let mut params = spec.zero_params();
            let current = marss::model::materialize(base.design(name), &Vector::zeros(0), 0).unwrap();
            *params.get_mut(name) = vec_of(&current);
            let data = random_data(&mut rng, 2, 10, 0.2);
            let mp = MaterializedParams::new(&spec, &params).unwrap();
            let ex = e_step(&spec, &params, &data).unwrap();
            let direct = Unconstrained { spec: &spec, mp: &mp, ex: &ex };
            let want = match name {
                ParamName::B => direct.b(),
                ParamName::U => direct.u(),
                ParamName::Q => direct.q(),
                ParamName::Z => direct.z(),
                ParamName::A => direct.a(),
                ParamName::R => direct.r(),
                ParamName::Xi => direct.xi(),
                ParamName::Lambda => direct.lambda(),
            };
            let got = match name {
                ParamName::B => update_beta(&spec, &params, &ex),
                ParamName::U => update_upsilon_general(&spec, &params, &ex),
                ParamName::Q => update_q(&spec, &params, &ex),
                ParamName::Z => update_zeta(&spec, &params, &ex),
                ParamName::A => update_alpha(&spec, &params, &ex),
                ParamName::R => update_r(&spec, &params, &ex),
                ParamName::Xi => update_xi(&spec, &params, &ex, XiMode::auto(&spec)),
                ParamName::Lambda => update_lambda(&spec, &params, &ex),
            }
            .map_err(|e| format!("{name} update failed: {e}"))?;
            let d = vmax(&(got - vec_of(&want)));
            let scale = max_abs(&want).max(1.0);
            if d / scale > worst.1 {
                worst = (name, d / scale);
            }
        }
    }
    if worst.1 <= 1e-10 {
        Ok(format!("largest relative difference {:.2e}", worst.1))
    } else {
        Err(format!("{} differs from the unconstrained form by {:.2e}", worst.0, worst.1))
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Least squares of `x_t` on `(x_{t−1}, 1)` and the residual covariance.
pub fn regression_mle(x: &Mat) -> (Mat, Vector, Mat) {
    let (m, t_len) = x.shape();
    let k = t_len - 1;
    let mut reg = Mat::zeros(m + 1, k);
    for t in 0..k {
        reg.view_mut((0, t), (m, 1)).copy_from(&x.column(t));
        reg[(m, t)] = 1.0;
    }
    let resp = x.columns(1, k).into_owned();
    let coef = &resp * reg.transpose() * (&reg * reg.transpose()).try_inverse().unwrap();
    let b = coef.columns(0, m).into_owned();
    let u = coef.column(m).into_owned();
    let res = resp - &coef * reg;
    let q = &res * res.transpose() / k as f64;
    (b, u, q)
}

/// Z = I with no observation error: EM's B, u, Q against regression MLEs.
pub fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (m, t_len) = (2, 200);
    let b_true = Mat::from_row_slice(m, m, &[0.6, 0.2, -0.1, 0.5]);
    let u_true = Vector::from_vec(vec![0.1, -0.2]);
    let mut x = Mat::zeros(m, t_len);
    let mut prev = Vector::zeros(m);
    for t in 0..t_len {
        let w = Vector::from_fn(m, |_, _| normal(&mut rng)) * 0.5;
        prev = &b_true * prev + &u_true + w;
        x.set_column(t, &prev);
    }
    let mut spec = ModelSpec::new(m, m, t_len);
    spec.t0 = 1;
    spec.h = vec![Mat::zeros(m, 0)];
    spec.r = ParamDesign::fixed(ParamName::R, &Mat::zeros(0, 0));
    spec.f = Mat::zeros(m, 0);
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::zeros(0, 0));
    spec.xi = ParamDesign::fixed(ParamName::Xi, &x.columns(0, 1).into_owned());
    spec.b = builder(ParamName::B, &BuilderKind::Unconstrained, m, m).unwrap();
    spec.u = builder(ParamName::U, &BuilderKind::Unconstrained, m, 1).unwrap();
    spec.q = builder(ParamName::Q, &BuilderKind::Unconstrained, m, m).unwrap();
    let data = TimeSeriesData::new(x.clone());
    let init = default_init(&spec, &data);
    let cfg = EMConfig { max_iter: 100, abstol: 1e-12, pin_variances: false, ..Default::default() };
    let fit = em_fit(&spec, &init, &data, &cfg).map_err(|e| e.to_string())?;
    let mp = MaterializedParams::new(&spec, &fit.params).unwrap();
    let (b, u, q) = regression_mle(&x);
    let d = max_abs(&(mp.b(2) - b)).max(vmax(&(mp.u(2) - u))).max(max_abs(&(mp.q(2) - q)));
    let summary = format!("max difference {d:.2e} after {} iterations", fit.iterations);
    if d <= 1e-6 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// Conditional least squares for an AR-2 without intercept.
pub fn ar2_cls(y: &[f64]) -> (f64, f64) {
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in 2..y.len() {
        let (a, b) = (y[t - 1], y[t - 2]);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        r1 += a * y[t];
        r2 += b * y[t];
    }
    let det = s11 * s22 - s12 * s12;
    ((s22 * r1 - s12 * r2) / det, (s11 * r2 - s12 * r1) / det)
}

/// The AR-2 companion form, B = [[b1, b2], [1, 0]], G = [1; 0], fitted to 200 points.
pub fn ar2_spec(y: &[f64]) -> ModelSpec {
    let t_len = y.len();
    let mut spec = ModelSpec::new(1, 2, t_len);
    spec.t0 = 1;
    spec.g = vec![Mat::from_row_slice(2, 1, &[1.0, 0.0])];
    spec.q = builder(ParamName::Q, &BuilderKind::DiagonalUnequal, 1, 1).unwrap();
    spec.h = vec![Mat::zeros(1, 0)];
    spec.r = ParamDesign::fixed(ParamName::R, &Mat::zeros(0, 0));
    spec.z = ParamDesign::fixed(ParamName::Z, &Mat::from_row_slice(1, 2, &[1.0, 0.0]));
    spec.b = ParamDesign::from_symbolic(ParamName::B, &[vec!["b1", "b2"], vec!["1", "0"]]).unwrap();
    spec.f = Mat::zeros(2, 0);
    spec.lambda = ParamDesign::fixed(ParamName::Lambda, &Mat::zeros(0, 0));
    let f = Vector::from_vec(vec![y[0], 0.0]);
    let d = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
    spec.xi = ParamDesign::new(ParamName::Xi, 2, 1, vec![f], vec![d], vec!["x0".into()]).unwrap();
    spec
}

pub fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (b1, b2) = (0.5, 0.3);
    let mut y = vec![0.0f64; 250];
    for t in 2..y.len() {
        y[t] = b1 * y[t - 1] + b2 * y[t - 2] + normal(&mut rng);
    }
    let y = &y[50..];
    let (c1, c2) = ar2_cls(y);
    let spec = ar2_spec(y);
    let data = TimeSeriesData::new(Mat::from_row_slice(1, y.len(), y));
    let init = default_init(&spec, &data);
    let cfg = EMConfig { max_iter: 1000, abstol: 1e-10, ..Default::default() };
    let fit = em_fit(&spec, &init, &data, &cfg).map_err(|e| e.to_string())?;
    let (e1, e2) = (fit.params.beta[0], fit.params.beta[1]);
    let d = (e1 - c1).abs().max((e2 - c2).abs());
    let summary = format!(
        "EM ({e1:.6}, {e2:.6}) vs least squares ({c1:.6}, {c2:.6}), max difference {d:.2e}, {} iterations",
        fit.iterations
    );
    if d <= 1e-3 {
        Ok(summary)
    } else {
        Err(summary)
    }
}

/// ỹ = y on observed coordinates, Z x̃ + a on missing ones, IR = I^(2), for diagonal R.
pub fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_missing = 0.0f64;
    let mut worst_ir = 0.0f64;
    for case in 0..20 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=3);
        let (mut spec, p) = random_fixed_model(&mut rng, n, m, 8, case % 2 == 0);
        let diag = Mat::from_diagonal(&Vector::from_fn(n, |_, _| rng.random_range(0.1..2.0)));
        spec.r = ParamDesign::fixed(ParamName::R, &diag);
        let data = random_data(&mut rng, n, 8, 0.4);
        let mp = MaterializedParams::new(&spec, &p).unwrap();
        let ex = e_step(&spec, &p, &data).unwrap();
        for t in 1..=8 {
            let pred = mp.z(t) * ex.x(t) + mp.a(t);
            for i in 0..n {
                if data.is_observed(i, t) {
                    if ex.y(t)[i] != data.values()[(i, t - 1)] {
                        return Err(format!("case {case}: observed ỹ differs from data at ({i}, {t})"));
                    }
                } else {
                    worst_missing = worst_missing.max((ex.y(t)[i] - pred[i]).abs());
                }
            }
            let i2 = Mat::from_diagonal(&Vector::from_fn(n, |i, _| if data.is_observed(i, t) { 0.0 } else { 1.0 }));
            worst_ir = worst_ir.max(max_abs(&(ex.ir(t) - i2)));
        }
    }
    if worst_missing <= 1e-12 && worst_ir <= 1e-12 {
        Ok(format!("observed exact; missing {worst_missing:.2e}; IR {worst_ir:.2e}"))
    } else {
        Err(format!("missing coordinates off by {worst_missing:.2e}, IR off by {worst_ir:.2e}"))
    }
}

/// Degenerate υ and p updates against the general ones when no row stays
/// deterministic after t0, plus the four-state classification sequence.
pub fn criterion_8() -> Outcome {
    let b = Mat::from_row_slice(4, 4, &[1., 1., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1.]);
    let pattern = b.map(|x| if x != 0.0 { 1.0 } else { 0.0 });
    let rc = classify_state_rows(&pattern, &[false, true, true, true], 5).map_err(|e| e.to_string())?;
    let expect = [[1, 1, 1, 1], [0, 1, 1, 1], [0, 0, 1, 1], [0, 0, 0, 1], [0, 0, 0, 1], [0, 0, 0, 1]];
    for (t, want) in expect.iter().enumerate() {
        let got: Vec<i32> = rc.deterministic(t).iter().map(|&d| d as i32).collect();
        if got != want {
            return Err(format!("classification at t={t} is {got:?}, expected {want:?}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    for case in 0..20 {
        let init = if case % 2 == 0 { Init::Stochastic } else { Init::Fixed };
        let (spec, params, ex) = random_update_inputs(&mut rng, init);
        let ug = update_upsilon_general(&spec, &params, &ex).map_err(|e| e.to_string())?;
        let ud = update_upsilon_degenerate(&spec, &params, &ex).map_err(|e| e.to_string())?;
        let pg = update_xi(&spec, &params, &ex, XiMode::auto(&spec)).map_err(|e| e.to_string())?;
        let pd = update_xi_degenerate(&spec, &params, &ex).map_err(|e| e.to_string())?;
        let rel = |a: &Vector, b: &Vector| vmax(&(a - b)) / vmax(a).max(1.0);
        worst = worst.max(rel(&ug, &ud)).max(rel(&pg, &pd));
    }
    if worst <= 1e-10 {
        Ok(format!("classification sequence exact; largest relative difference {worst:.2e}"))
    } else {
        Err(format!("degenerate and general updates differ by {worst:.2e}"))
    }
}

/// Runs `marss fit` twice into fresh directories and compares every file.
pub fn criterion_9(bin: &Path, data_dir: &Path) -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |out: &Path| -> Result<(), String> {
        let status = Command::new(bin)
            .args(["fit", "--quiet", "--seed", "42", "--mc-inits", "4", "--max-iter", "200"])
            .arg("--data")
            .arg(data_dir.join("two_series.csv"))
            .arg("--spec")
            .arg(data_dir.join("two_series.toml"))
            .arg("--out")
            .arg(out)
            .status()
            .map_err(|e| e.to_string())?;
        match status.code() {
            Some(0) | Some(2) => Ok(()),
            other => Err(format!("fit exited with {other:?}")),
        }
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a)?;
    run(&b)?;
    let mut names: Vec<_> = std::fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err("fit wrote no files".into());
    }
    for name in &names {
        let x = std::fs::read(a.join(name)).map_err(|e| e.to_string())?;
        let y = std::fs::read(b.join(name)).map_err(|e| format!("{name:?} missing in second run: {e}"))?;
        if x != y {
            return Err(format!("{name:?} differs between runs"));
        }
    }
    let count_b = std::fs::read_dir(&b).map_err(|e| e.to_string())?.count();
    if count_b != names.len() {
        return Err("runs wrote different file sets".into());
    }
    Ok(format!("{} files byte-identical", names.len()))
}
