//! Structural conditions a model with zero-variance rows must satisfy before
//! EM can run on it, plus probe runs that catch what structure alone cannot.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::kalman::{kalman_filter, TimeSeriesData};
use crate::linalg::{self, Mat, Vector, RANK_TOL};
use crate::model::{validate_spec, FreeParams, MaterializedParams, ModelSpec, ParamDesign};
use crate::updates::{RowClassification, UpdateError};

/// Which condition a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    /// Dimensions, design rank or variance-design rules.
    Spec,
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
    I,
    J,
    K,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Spec => "spec",
            Rule::A => "a",
            Rule::B => "b",
            Rule::C => "c",
            Rule::D => "d",
            Rule::E => "e",
            Rule::F => "f",
            Rule::G => "g",
            Rule::H => "h",
            Rule::I => "i",
            Rule::J => "j",
            Rule::K => "k",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Spec => "spec-structure",
            Rule::A => "b-linked-to-exact-observation",
            Rule::B => "u-linked-to-exact-observation",
            Rule::C => "z-on-exact-observation",
            Rule::D => "a-on-exact-observation",
            Rule::E => "b-on-noiseless-state",
            Rule::F => "u-on-indirectly-stochastic-state",
            Rule::G => "b-zero-pattern-time-invariant",
            Rule::H => "zero-rows-time-invariant",
            Rule::I => "z-overdetermined",
            Rule::J => "over-constrained-state",
            Rule::K => "singular-update",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {}", self.id(), self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)
    }
}

/// Cells `(i, j)` of `design` that carry a free value at any time.
fn estimated(design: &ParamDesign) -> Mat {
    let cells = design.estimated_cells();
    Mat::from_fn(design.rows, design.cols, |i, j| if cells[j * design.rows + i] { 1.0 } else { 0.0 })
}

fn rows_list(flags: &[bool]) -> String {
    let v: Vec<String> = flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| (i + 1).to_string()).collect();
    v.join(",")
}

/// Zero-variance state rows reached through Z from zero-variance observation rows.
fn linked_states(spec: &ModelSpec, h_zero: &[bool], g_zero: &[bool]) -> Vec<bool> {
    let mut out = vec![false; spec.m];
    for k in 0..spec.z.n_times() {
        let pat = spec.z.pattern_at(k);
        for i in (0..spec.n).filter(|&i| h_zero[i]) {
            for j in (0..spec.m).filter(|&j| g_zero[j]) {
                out[j] |= pat[(i, j)] != 0.0;
            }
        }
    }
    out
}

/// Z with every free value set to a fixed generic draw, so that rank
/// deficiencies reflect structure rather than particular values.
fn generic_z(design: &ParamDesign, k: usize) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let vals = Vector::from_fn(design.n_free(), |_, _| StandardNormal.sample(&mut rng));
    crate::model::materialize(design, &vals, k).expect("generic values match the design")
}

/// Structural checks (a)–(j). Dimension and design problems are reported
/// under [`Rule::Spec`] and stop the remaining checks.
pub fn kemcheck(spec: &ModelSpec) -> Vec<Violation> {
    let basic = validate_spec(spec);
    if !basic.is_empty() {
        return basic
            .into_iter()
            .map(|v| Violation { rule: Rule::Spec, message: v.to_string() })
            .collect();
    }
    let mut out = Vec::new();
    let mut push = |rule, message: String| out.push(Violation { rule, message });
    let g_zero = spec.g_zero_rows();
    let h_zero = spec.h_zero_rows();
    let any_g0 = g_zero.iter().any(|&z| z);
    let any_h0 = h_zero.iter().any(|&z| z);
    let est_b = estimated(&spec.b);
    let est_u = estimated(&spec.u);

    if any_g0 && any_h0 {
        let linked = linked_states(spec, &h_zero, &g_zero);
        for j in (0..spec.m).filter(|&j| linked[j]) {
            if (0..spec.m).any(|c| est_b[(j, c)] != 0.0) {
                push(Rule::A, format!("B row {} is estimated but feeds an observation without error through a noiseless state", j + 1));
            }
            if est_u[(j, 0)] != 0.0 {
                push(Rule::B, format!("u row {} is estimated but feeds an observation without error through a noiseless state", j + 1));
            }
        }
    }
    if any_h0 {
        let est_z = estimated(&spec.z);
        let est_a = estimated(&spec.a);
        for i in (0..spec.n).filter(|&i| h_zero[i]) {
            if (0..spec.m).any(|j| est_z[(i, j)] != 0.0) {
                push(Rule::C, format!("Z row {} is estimated but observation {} has no error", i + 1, i + 1));
            }
            if est_a[(i, 0)] != 0.0 {
                push(Rule::D, format!("a row {} is estimated but observation {} has no error", i + 1, i + 1));
            }
        }
    }
    for j in (0..spec.m).filter(|&j| g_zero[j]) {
        if (0..spec.m).any(|c| est_b[(j, c)] != 0.0) {
            push(Rule::E, format!("B row {} is estimated but state {} has no process noise", j + 1, j + 1));
        }
    }

    let rc = if any_g0 {
        match RowClassification::for_spec(spec) {
            Ok(rc) => Some(rc),
            Err(UpdateError::Structure(msg)) => {
                push(Rule::G, msg);
                None
            }
            Err(e) => {
                push(Rule::G, e.to_string());
                None
            }
        }
    } else {
        None
    };
    if let Some(rc) = &rc {
        let is = rc.ever_indirectly_stochastic();
        for j in (0..spec.m).filter(|&j| is[j] && est_u[(j, 0)] != 0.0) {
            push(Rule::F, format!("u row {} is estimated but state {} is indirectly stochastic", j + 1, j + 1));
        }
    }

    if any_g0 && spec.b.is_time_varying() {
        let est_xi = estimated(&spec.xi);
        let det_u = (0..spec.m).any(|j| g_zero[j] && est_u[(j, 0)] != 0.0);
        let det_xi = (0..spec.m).any(|j| g_zero[j] && est_xi[(j, 0)] != 0.0);
        let first = spec.b.pattern_at(0);
        let varies = (1..spec.b.n_times()).any(|k| spec.b.pattern_at(k) != first);
        if varies && (det_u || det_xi) {
            push(Rule::G, "the zero pattern of B changes over time while u or ξ of noiseless states is estimated".into());
        }
    }

    for (label, list) in [("G", &spec.g), ("H", &spec.h)] {
        let first = linalg::zero_rows(&list[0]);
        if let Some(k) = list.iter().position(|l| linalg::zero_rows(l) != first) {
            push(Rule::H, format!("zero rows of {label} change at t={} (rows {} at t=1)", k + 1, rows_list(&first)));
        }
    }

    if any_h0 {
        for k in 0..spec.z.n_times() {
            let z = generic_z(&spec.z, k);
            let rows: Vec<usize> =
                (0..spec.n).filter(|&i| h_zero[i] && z.row(i).iter().any(|&x| x != 0.0)).collect();
            if rows.is_empty() {
                continue;
            }
            let z0 = Mat::from_fn(rows.len(), spec.m, |r, j| z[(rows[r], j)]);
            let (rank, _) = linalg::svd_rank(&z0, RANK_TOL);
            if rank < rows.len() {
                let names: Vec<String> = rows.iter().map(|i| (i + 1).to_string()).collect();
                push(Rule::I, format!(
                    "Z rows {} for observations without error have rank {rank}; the equations for the states are over-determined",
                    names.join(",")
                ));
                break;
            }
        }
    }

    if let (Some(rc), true) = (&rc, any_h0) {
        let always_det = rc.deterministic(spec.t_len);
        for k in 0..spec.z.n_times() {
            let pat = spec.z.pattern_at(k);
            for i in (0..spec.n).filter(|&i| h_zero[i]) {
                let support: Vec<usize> = (0..spec.m).filter(|&j| pat[(i, j)] != 0.0).collect();
                if !support.is_empty() && support.iter().all(|&j| always_det[j]) {
                    push(Rule::J, format!(
                        "observation {} has no error and reads only noiseless states; it is fixed by the state process",
                        i + 1
                    ));
                }
            }
            if !spec.z.is_time_varying() {
                break;
            }
        }
    }
    out.sort_by_key(|v| v.rule);
    out.dedup();
    out
}

/// Probe checks (j) and (k): a filter run and one M-step at `params`.
pub fn probe(spec: &ModelSpec, params: &FreeParams, data: &TimeSeriesData) -> Vec<Violation> {
    let mp = match MaterializedParams::new(spec, params) {
        Ok(mp) => mp,
        Err(e) => return vec![Violation { rule: Rule::J, message: format!("probe parameters: {e}") }],
    };
    if let Err(e) = kalman_filter(spec, &mp, data) {
        return vec![Violation { rule: Rule::J, message: format!("probe filter failed: {e}") }];
    }
    match super::e_step(spec, params, data).map_err(|e| e.to_string()).and_then(|ex| {
        super::m_step(spec, params, &ex).map_err(|e| e.to_string())
    }) {
        Ok(_) => Vec::new(),
        Err(msg) => vec![Violation { rule: Rule::K, message: format!("first M-step failed: {msg}") }],
    }
}
