//! The `marss` command line: `fit`, `simulate`, `check` and `loglik`.
//!
//! Exit codes: 0 on success, 2 when a fit stops without converging, 1 on any
//! model, data or usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::em::{default_init, em_fit, kemcheck, mc_init_search, probe, EMConfig, FitResult, Violation};
use crate::io::{self, fmt_f64, IoError, ModelFileContents};
use crate::kalman::TimeSeriesData;
use crate::linalg::Mat;
use crate::model::{apply_missing, simulate, MaterializedParams, ModelSpec, ParamName};

#[derive(Debug, Parser)]
#[command(name = "marss", version, about = "Fit and simulate constrained MARSS models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the free values by EM and write the fitted model.
    Fit(Options),
    /// Draw states and observations from a model whose values are all given.
    Simulate(Options),
    /// Report structural problems with a model, and with a data set if given.
    Check(Options),
    /// Print the log-likelihood of the data at the model's given values.
    Loglik(Options),
}

#[derive(Debug, Clone, Args)]
struct Options {
    /// Data CSV: one row per series, one column per time step, `NA` for missing.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Model description (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for restarts and simulation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration cap for EM (default 500).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Stop when the log-likelihood changes by less than this (default 1e-8).
    #[arg(long)]
    abstol: Option<f64>,
    /// Re-run the smoother after every parameter update.
    #[arg(long)]
    safe: bool,
    /// Number of random restarts used to pick starting values.
    #[arg(long)]
    mc_inits: Option<usize>,
    /// Only report errors.
    #[arg(long)]
    quiet: bool,
    /// Fraction of simulated observations to mark missing.
    #[arg(long, default_value_t = 0.0)]
    missing: f64,
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: &'static str,
    pub data_path: Option<PathBuf>,
    pub spec_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    pub config: EMConfig,
    pub missing_fraction: f64,
    pub quiet: bool,
}

impl RunManifest {
    fn from_options(command: &'static str, o: Options) -> Self {
        let mut config = EMConfig { safe_mode: o.safe, mc_seed: o.seed, ..Default::default() };
        if let Some(k) = o.max_iter {
            config.max_iter = k;
        }
        if let Some(t) = o.abstol {
            config.abstol = t;
        }
        if let Some(k) = o.mc_inits {
            config.mc_inits = k;
        }
        Self {
            command,
            data_path: o.data,
            spec_path: o.spec,
            output_dir: o.out,
            seed: o.seed,
            config,
            missing_fraction: o.missing,
            quiet: o.quiet,
        }
    }

    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            let _ = writeln!(std::io::stdout(), "{}", msg.as_ref());
        }
    }
}

fn fail(msg: impl AsRef<str>) -> i32 {
    let _ = writeln!(std::io::stderr(), "error: {}", msg.as_ref());
    1
}

fn report(violations: &[Violation]) {
    let mut err = std::io::stderr();
    for v in violations {
        let _ = writeln!(err, "{v}");
    }
}

fn need<'a>(path: &'a Option<PathBuf>, flag: &str, command: &str) -> Result<&'a Path, String> {
    path.as_deref().ok_or_else(|| format!("`{command}` needs --{flag}"))
}

/// Reads the model and, when given, the data, reconciling the series length.
fn load(m: &RunManifest, want_data: bool) -> Result<(ModelFileContents, Option<TimeSeriesData>), String> {
    let spec_path = need(&m.spec_path, "spec", m.command)?;
    let mut model = io::read_model(spec_path).map_err(|e| e.to_string())?;
    let data = match (&m.data_path, want_data) {
        (Some(p), _) => Some(io::read_data(p).map_err(|e| e.to_string())?),
        (None, true) => return Err(format!("`{}` needs --data", m.command)),
        (None, false) => None,
    };
    if let Some(d) = &data {
        let spec = &mut model.spec;
        if d.n() != spec.n {
            return Err(format!("data has {} series but the model has n = {}", d.n(), spec.n));
        }
        if spec.t_len == 0 {
            spec.t_len = d.t_len();
        } else if spec.t_len != d.t_len() {
            return Err(format!("data has {} time steps but the model has T = {}", d.t_len(), spec.t_len));
        }
    }
    Ok((model, data))
}

fn param_matrix_csv(spec: &ModelSpec, mp: &MaterializedParams, name: ParamName) -> String {
    let at = |t: usize| -> Mat {
        match name {
            ParamName::B => mp.b(t).clone(),
            ParamName::U => Mat::from_column_slice(spec.m, 1, mp.u(t).as_slice()),
            ParamName::Q => mp.q(t).clone(),
            ParamName::Z => mp.z(t).clone(),
            ParamName::A => Mat::from_column_slice(spec.n, 1, mp.a(t).as_slice()),
            ParamName::R => mp.r(t).clone(),
            ParamName::Xi => Mat::from_column_slice(spec.m, 1, mp.xi.as_slice()),
            ParamName::Lambda => mp.lambda.clone(),
        }
    };
    if spec.design(name).is_time_varying() {
        time_indexed_csv((1..=spec.t_len).map(|t| (t, at(t))))
    } else {
        io::format_matrix(&at(1))
    }
}

fn time_indexed_csv(mats: impl Iterator<Item = (usize, Mat)>) -> String {
    let mut out = String::from("t,row,col,value\n");
    for (t, m) in mats {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                out.push_str(&format!("{t},{},{},{}\n", i + 1, j + 1, fmt_f64(m[(i, j)])));
            }
        }
    }
    out
}

fn loading_csv(list: &[Mat]) -> String {
    if list.len() == 1 {
        io::format_matrix(&list[0])
    } else {
        time_indexed_csv(list.iter().cloned().enumerate().map(|(k, m)| (k + 1, m)))
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    converged: bool,
    iterations: usize,
    loglik: String,
    /// Best Monte Carlo restart and its burst log-likelihood, when used.
    mc_best: Option<(usize, String)>,
    warnings: &'a [String],
}

fn write_fit(dir: &Path, fit: &FitResult, mc_best: Option<(usize, f64)>) -> Result<(), IoError> {
    let spec = &fit.spec;
    let mp = MaterializedParams::new(spec, &fit.params)?;
    for name in ParamName::ALL {
        io::write_file(&dir.join(format!("{name}.csv")), &param_matrix_csv(spec, &mp, name))?;
    }
    io::write_file(&dir.join("G.csv"), &loading_csv(&spec.g))?;
    io::write_file(&dir.join("H.csv"), &loading_csv(&spec.h))?;
    io::write_file(&dir.join("free_values.csv"), &io::format_free_values(spec, &fit.params))?;
    let mut trace = String::from("iteration,loglik\n");
    for (k, ll) in fit.loglik_trace.iter().enumerate() {
        trace.push_str(&format!("{},{}\n", k + 1, fmt_f64(*ll)));
    }
    io::write_file(&dir.join("loglik.csv"), &trace)?;
    let summary = Summary {
        converged: fit.converged,
        iterations: fit.iterations,
        loglik: fmt_f64(fit.loglik()),
        mc_best: mc_best.map(|(k, ll)| (k + 1, fmt_f64(ll))),
        warnings: &fit.warnings,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    io::write_file(&dir.join("summary.json"), &(json + "\n"))
}

pub fn run_fit(m: &RunManifest) -> i32 {
    let out = match need(&m.output_dir, "out", m.command) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let (model, data) = match load(m, true) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let data = data.expect("fit loads data");
    let spec = &model.spec;
    let violations = kemcheck(spec);
    if !violations.is_empty() {
        report(&violations);
        return fail("the model cannot be fitted by EM as specified");
    }
    if let Err(e) = m.config.validate() {
        return fail(e.to_string());
    }
    let mut mc_best = None;
    let init = if m.config.mc_inits > 0 {
        match mc_init_search(spec, &data, &m.config) {
            Ok(o) => {
                m.say(format!("starting from restart {} of {}", o.best + 1, o.restarts.len()));
                mc_best = Some((o.best, o.loglik));
                o.params
            }
            Err(e) => return fail(e.to_string()),
        }
    } else {
        model.apply_values(&default_init(spec, &data))
    };
    let violations = probe(spec, &init, &data);
    if !violations.is_empty() {
        report(&violations);
        return fail("the model cannot be fitted by EM from these starting values");
    }
    let fit = match em_fit(spec, &init, &data, &m.config) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string()),
    };
    if let Err(e) = write_fit(out, &fit, mc_best) {
        return fail(e.to_string());
    }
    for w in &fit.warnings {
        m.say(format!("warning: {w}"));
    }
    m.say(format!(
        "log-likelihood {} after {} iterations ({})",
        fmt_f64(fit.loglik()),
        fit.iterations,
        if fit.converged { "converged" } else { "not converged" }
    ));
    if fit.converged {
        0
    } else {
        2
    }
}

pub fn run_simulate(m: &RunManifest) -> i32 {
    let out = match need(&m.output_dir, "out", m.command) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let (model, _) = match load(m, false) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    if model.spec.t_len == 0 {
        return fail("the model needs T to simulate");
    }
    if !(0.0..=1.0).contains(&m.missing_fraction) {
        return fail(format!("--missing must be in [0, 1], got {}", m.missing_fraction));
    }
    let params = match model.full_values() {
        Ok(p) => p,
        Err(missing) => {
            let names: Vec<&str> = missing.iter().map(|n| n.as_str()).collect();
            return fail(format!("values are required for {}", names.join(", ")));
        }
    };
    let sim = match simulate(&model.spec, &params, m.seed) {
        Ok(s) => s,
        Err(e) => return fail(e.to_string()),
    };
    let observations = if m.missing_fraction > 0.0 {
        apply_missing(&sim.observations, m.missing_fraction, m.seed.wrapping_add(1)).with_nan()
    } else {
        sim.observations
    };
    let written = io::write_file(&out.join("states.csv"), &io::format_series(&sim.states))
        .and_then(|_| io::write_file(&out.join("observations.csv"), &io::format_series(&observations)));
    if let Err(e) = written {
        return fail(e.to_string());
    }
    m.say(format!("wrote {} time steps to {}", model.spec.t_len, out.display()));
    0
}

/// Series length for structural checks when neither the model nor data gives one.
fn placeholder_length(spec: &ModelSpec) -> usize {
    let designs = ParamName::ALL.iter().map(|&n| spec.design(n).n_times());
    let loadings = [spec.g.len(), spec.h.len()].into_iter();
    designs.chain(loadings).filter(|&k| k > 1).max().unwrap_or(spec.t0 + 10)
}

pub fn run_check(m: &RunManifest) -> i32 {
    let (mut model, data) = match load(m, false) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    if model.spec.t_len == 0 {
        model.spec.t_len = placeholder_length(&model.spec);
    }
    let mut violations = kemcheck(&model.spec);
    if let (true, Some(data)) = (violations.is_empty(), &data) {
        let params = model.apply_values(&default_init(&model.spec, data));
        violations = probe(&model.spec, &params, data);
    }
    if violations.is_empty() {
        m.say("no problems found");
        0
    } else {
        report(&violations);
        1
    }
}

pub fn run_loglik(m: &RunManifest) -> i32 {
    let (model, data) = match load(m, true) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    let data = data.expect("loglik loads data");
    let params = match model.full_values() {
        Ok(p) => p,
        Err(missing) => {
            let names: Vec<&str> = missing.iter().map(|n| n.as_str()).collect();
            return fail(format!("values are required for {}", names.join(", ")));
        }
    };
    match crate::em::e_step(&model.spec, &params, &data) {
        Ok(ex) => {
            let _ = writeln!(std::io::stdout(), "{}", fmt_f64(ex.loglik));
            0
        }
        Err(e) => fail(e.to_string()),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match cli.command {
        Command::Fit(o) => run_fit(&RunManifest::from_options("fit", o)),
        Command::Simulate(o) => run_simulate(&RunManifest::from_options("simulate", o)),
        Command::Check(o) => run_check(&RunManifest::from_options("check", o)),
        Command::Loglik(o) => run_loglik(&RunManifest::from_options("loglik", o)),
    }
}
