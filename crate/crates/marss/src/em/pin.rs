//! Moving Q or R diagonal values that collapse toward zero into the noise
//! loadings, so the row becomes exactly noiseless instead of nearly so.

use super::kemcheck::{kemcheck, probe};
use crate::kalman::TimeSeriesData;
use crate::linalg::{Mat, Vector};
use crate::model::{FreeParams, ModelSpec, ParamDesign, ParamName};

/// Variance free values below this are candidates for pinning at zero.
pub const PIN_THRESHOLD: f64 = 1e-8;

/// Diagonal indices carrying free value `k`, if `k` appears only on the
/// diagonal and those rows hold no other nonzero or estimated cell.
fn pinnable_indices(design: &ParamDesign, k: usize) -> Option<Vec<usize>> {
    let n = design.rows;
    let mut idx = Vec::new();
    for (f, d) in design.fs().iter().zip(design.ds()) {
        for c in 0..n * n {
            let (i, j) = (c % n, c / n);
            if d[(c, k)] != 0.0 {
                if i != j {
                    return None;
                }
                if !idx.contains(&i) {
                    idx.push(i);
                }
            }
        }
        for &i in &idx {
            for j in (0..n).filter(|&j| j != i) {
                for c in [j * n + i, i * n + j] {
                    if f[c] != 0.0 || d.row(c).iter().any(|&x| x != 0.0) {
                        return None;
                    }
                }
            }
        }
    }
    idx.sort_unstable();
    (!idx.is_empty()).then_some(idx)
}

/// `design` without the rows/columns in `drop` and without free value `k`.
fn shrink_design(design: &ParamDesign, drop: &[usize], k: usize) -> ParamDesign {
    let n = design.rows;
    let keep: Vec<usize> = (0..n).filter(|i| !drop.contains(i)).collect();
    let nk = keep.len();
    let cols: Vec<usize> = (0..design.n_free()).filter(|&c| c != k).collect();
    let mut fs = Vec::new();
    let mut ds = Vec::new();
    for (f, d) in design.fs().iter().zip(design.ds()) {
        let cell = |r: usize| keep[r % nk] + keep[r / nk] * n;
        fs.push(Vector::from_fn(nk * nk, |r, _| f[cell(r)]));
        ds.push(Mat::from_fn(nk * nk, cols.len(), |r, c| d[(cell(r), cols[c])]));
    }
    let names = cols.iter().map(|&c| design.free_names()[c].clone()).collect();
    ParamDesign::new(design.name, nk, nk, fs, ds, names).expect("shrunk design keeps consistent shapes")
}

fn drop_columns(loadings: &[Mat], drop: &[usize]) -> Vec<Mat> {
    loadings
        .iter()
        .map(|l| {
            let keep: Vec<usize> = (0..l.ncols()).filter(|c| !drop.contains(c)).collect();
            l.select_columns(&keep)
        })
        .collect()
}

/// Pins every eligible Q/R diagonal free value below [`PIN_THRESHOLD`] when
/// the resulting model passes the structural and probe checks; floors the
/// value at the threshold otherwise. Returns the possibly reduced spec and
/// parameters with one message per action.
pub fn pin_small_variances(
    spec: &ModelSpec,
    params: &FreeParams,
    data: &TimeSeriesData,
) -> (ModelSpec, FreeParams, Vec<String>) {
    let mut spec = spec.clone();
    let mut params = params.clone();
    let mut notes = Vec::new();
    for name in [ParamName::Q, ParamName::R] {
        let mut k = 0;
        while k < spec.design(name).n_free() {
            let value = params.get(name)[k];
            if value >= PIN_THRESHOLD {
                k += 1;
                continue;
            }
            let label = spec.design(name).free_names()[k].clone();
            let candidate = pinnable_indices(spec.design(name), k).and_then(|drop| {
                let mut s = spec.clone();
                s.set_design(shrink_design(spec.design(name), &drop, k), name);
                match name {
                    ParamName::Q => s.g = drop_columns(&spec.g, &drop),
                    _ => s.h = drop_columns(&spec.h, &drop),
                }
                let mut p = params.clone();
                let v = params.get(name);
                *p.get_mut(name) = Vector::from_iterator(
                    v.len() - 1,
                    v.iter().enumerate().filter(|&(c, _)| c != k).map(|(_, &x)| x),
                );
                let ok = kemcheck(&s).is_empty() && probe(&s, &p, data).is_empty();
                ok.then_some((s, p))
            });
            match candidate {
                Some((s, p)) => {
                    notes.push(format!("{name} value '{label}' fell to {value:e} and is now fixed at zero"));
                    spec = s;
                    params = p;
                }
                None => {
                    notes.push(format!(
                        "{name} value '{label}' fell to {value:e}; it cannot be fixed at zero and is floored at {PIN_THRESHOLD:e}"
                    ));
                    params.get_mut(name)[k] = PIN_THRESHOLD;
                    k += 1;
                }
            }
        }
    }
    (spec, params, notes)
}
