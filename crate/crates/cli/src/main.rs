//! Command line front end: configuration-driven runs of the solvers and
//! experiments, with deterministic CSV artifacts.
//!
//! Configuration is a flat `key=value` file (`#` comments allowed); the
//! `--out` and `--seed` flags override the config's `out` and `seed`
//! keys. Every artifact opens with provenance comment lines: tool version
//! and subcommand, a hash of the effective configuration, and the seed,
//! so identical configurations reproduce identical bytes.
//!
//! Exit status: `0` success; `2` usage (bad flags, missing or malformed
//! configuration); `3` validation (readable inputs that fail regime,
//! dimension, or domain checks); `4` solver failure, with a diagnostic
//! file written next to the output path.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rrde_core::brownian::rough_convergence_stats;
use rrde_core::domain::Domain;
use rrde_core::io::{
    format_float, read_domain_file, read_path_csv, read_rough_csv, parse_kv, write_rough_csv,
};
use rrde_core::rough::{lift_piecewise_linear, RoughPath};
use rrde_core::rough_reflect::{defect_scan, solve_reflected_rough};
use rrde_core::skorohod::solve_skorohod;
use rrde_core::tensor::Mat;
use rrde_core::vfield::VectorField;
use rrde_core::wongzakai::{integral_gap_curve, wz_error_curve, ConvergenceReport};
use rrde_core::young_reflect::{default_partition_epsilon, solve_reflected_young};
use rrde_core::{Error, GridPath};

#[derive(Parser)]
#[command(name = "rrde", version, about = "Reflected differential equations driven by rough paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV path; overrides the config's `out` key.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed; overrides the config's `seed` key.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Discrete Skorohod problem for a sampled driver: `t, xi*, phi*, phiTV`.
    Skorohod,
    /// Reflected equation, Young regime (1 <= p < 2): `t, Y*, Phi*, phiTV`.
    SolveYoung,
    /// Reflected equation, rough regime (2 <= p < 3): `t, Y*, Phi*, phiTV`.
    SolveRough,
    /// Lift a path file to a rough-path CSV, or run the Brownian lift
    /// statistics (`mode=brownian`): `N, dp_gap, C_mean, C_q_mean`.
    Lift,
    /// Remainder scan of a rough solve over node pairs:
    /// `s, t, omega, absI, absJ`.
    DefectScan,
    /// Piecewise-linear approximation error curve:
    /// `N, mean_sq_err, stderr, samples_failed`.
    WzConverge,
    /// Integral-gap curve along the solution:
    /// `N, mean_sq_err, stderr, samples_failed`.
    IntegralGap,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Skorohod => "skorohod",
            Command::SolveYoung => "solve-young",
            Command::SolveRough => "solve-rough",
            Command::Lift => "lift",
            Command::DefectScan => "defect-scan",
            Command::WzConverge => "wz-converge",
            Command::IntegralGap => "integral-gap",
        }
    }
}

/// A classified failure: exit status, message, and (for solver failures)
/// a diagnostic body to drop next to the output artifact.
struct Failure {
    status: u8,
    message: String,
    diagnostic: Option<String>,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { status: 2, message: message.into(), diagnostic: None }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { status: 3, message: message.into(), diagnostic: None }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::StepTooLarge { .. }
            | Error::ContractionFailure { .. }
            | Error::NoConvergence { .. }
            | Error::BudgetExceeded(_)
            | Error::PartitionResolution(_) => Failure {
                status: 4,
                message: e.to_string(),
                diagnostic: Some(format!("{e}\n\n{e:#?}\n")),
            },
            _ => invalid(e.to_string()),
        }
    }
}

/// Parsed configuration with typed accessors. Missing or malformed keys
/// are usage errors; whether the described run makes sense is left to the
/// solvers (validation errors).
struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let map = parse_kv(&text)
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        Ok(Config { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn require(&self, key: &str) -> Result<&str, Failure> {
        self.get(key).ok_or_else(|| usage(format!("missing config key `{key}`")))
    }

    fn f64(&self, key: &str) -> Result<f64, Failure> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| usage(format!("config key `{key}`: bad float {raw:?}")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(_) => self.f64(key),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => {
                raw.parse().map_err(|_| usage(format!("config key `{key}`: bad integer {raw:?}")))
            }
        }
    }

    fn u64(&self, key: &str) -> Result<u64, Failure> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| usage(format!("config key `{key}`: bad integer {raw:?}")))
    }

    fn floats(&self, key: &str) -> Result<Vec<f64>, Failure> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| usage(format!("config key `{key}`: bad float list {raw:?}")))
            })
            .collect()
    }

    fn levels(&self, key: &str) -> Result<Vec<u32>, Failure> {
        let raw = self.require(key)?;
        raw.split(',')
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| usage(format!("config key `{key}`: bad level list {raw:?}")))
            })
            .collect()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of the effective run: subcommand, resolved seed, and every config
/// key except `out` and `seed` (the output location does not change the
/// content; the seed enters in resolved form).
fn config_hash(cmd: Command, cfg: &Config, seed: u64) -> u64 {
    let mut canon = String::new();
    canon.push_str(cmd.name());
    canon.push('\n');
    canon.push_str(&format!("seed={seed}\n"));
    for (k, v) in &cfg.map {
        if k != "out" && k != "seed" {
            canon.push_str(&format!("{k}={v}\n"));
        }
    }
    fnv1a(canon.as_bytes())
}

fn provenance(cmd: Command, cfg: &Config, seed: u64) -> Vec<String> {
    vec![
        format!("rrde {} {}", env!("CARGO_PKG_VERSION"), cmd.name()),
        format!("config_hash: {:016x}", config_hash(cmd, cfg, seed)),
        format!("seed: {seed}"),
    ]
}

/// Write a labeled table: `#` comments, header, then prepared rows.
fn emit_table(
    path: &Path,
    comments: &[String],
    header: &[String],
    rows: &[Vec<String>],
) -> Result<(), Failure> {
    let file = File::create(path)
        .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()
    };
    body().map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn open_input(path: &str) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| invalid(format!("cannot read {path}: {e}")))
}

fn load_domain(cfg: &Config) -> Result<Domain, Failure> {
    let path = cfg.require("domain")?;
    read_domain_file(open_input(path)?).map_err(Failure::from)
}

fn load_path(cfg: &Config, key: &str) -> Result<GridPath, Failure> {
    let path = cfg.require(key)?;
    read_path_csv(open_input(path)?).map_err(Failure::from)
}

/// Build the coefficient field from the config's `sigma*` keys.
///
/// Builtins: `zero`, `identity`, `constant` (inline `sigma_data` plus
/// `sigma_rows`/`sigma_cols`, or a `sigma_file` with one comma-separated
/// row per line), `bounded_sin` (`sigma_dim`, `sigma_driver_dim`,
/// `sigma_offset`, `sigma_amp`, `sigma_freq`).
fn load_sigma(cfg: &Config) -> Result<VectorField, Failure> {
    let name = cfg.require("sigma")?;
    match name {
        "zero" => {
            let d = cfg.u64("sigma_dim")? as usize;
            let n = cfg.u64_or("sigma_driver_dim", d as u64)? as usize;
            VectorField::zero(d, n).map_err(Failure::from)
        }
        "identity" => {
            let d = cfg.u64("sigma_dim")? as usize;
            VectorField::identity(d).map_err(Failure::from)
        }
        "constant" => {
            let m = if let Some(file) = cfg.get("sigma_file") {
                read_matrix_file(file)?
            } else {
                let rows = cfg.u64("sigma_rows")? as usize;
                let cols = cfg.u64("sigma_cols")? as usize;
                let data = cfg.floats("sigma_data")?;
                if data.len() != rows * cols {
                    return Err(usage(format!(
                        "sigma_data has {} entries, expected {rows}x{cols}",
                        data.len()
                    )));
                }
                Mat::from_flat(rows, cols, data)
            };
            VectorField::constant(m).map_err(Failure::from)
        }
        "bounded_sin" => {
            let d = cfg.u64("sigma_dim")? as usize;
            let n = cfg.u64_or("sigma_driver_dim", d as u64)? as usize;
            let offset = cfg.f64("sigma_offset")?;
            let amp = cfg.f64("sigma_amp")?;
            let freq = cfg.f64("sigma_freq")?;
            VectorField::bounded_sin(d, n, offset, amp, freq).map_err(Failure::from)
        }
        other => Err(usage(format!("unknown sigma builtin {other:?}"))),
    }
}

fn read_matrix_file(path: &str) -> Result<Mat, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read {path}: {e}")))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse()).collect();
        rows.push(row.map_err(|_| invalid(format!("{path}: bad float row {line:?}")))?);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(invalid(format!("{path}: expected a rectangular float table")));
    }
    let cols = rows[0].len();
    let flat: Vec<f64> = rows.concat();
    Ok(Mat::from_flat(rows.len(), cols, flat))
}

/// Load the rough driver: a `rough` CSV, or a `path` CSV lifted at `p`.
/// Either way a Holder-scaling certificate is attached (quadratic cost in
/// the node count) because the rough solver requires one.
fn load_rough_driver(cfg: &Config, p: f64) -> Result<RoughPath, Failure> {
    let raw = if let Some(file) = cfg.get("rough") {
        read_rough_csv(open_input(file)?, p)?
    } else {
        let path = load_path(cfg, "path")?;
        lift_piecewise_linear(&path, p)?
    };
    raw.with_holder_certificate().map_err(Failure::from)
}

/// Default partition resolution for a certified rough driver: fine enough
/// to shrink the steps (a 64th of the budget) but never below the grid's
/// own resolution, since no partition can split a single interval.
fn default_rough_epsilon(x: &RoughPath) -> f64 {
    match x.certificate() {
        Some(ctrl) => {
            let max_step = (0..ctrl.len() - 1)
                .map(|k| ctrl.eval_idx(k, k + 1))
                .fold(0.0_f64, f64::max);
            (ctrl.total() / 64.0).max(8.0 * max_step)
        }
        None => 1.0,
    }
}

fn state_table(
    times: &[f64],
    y: &GridPath,
    phi: &GridPath,
    phi_tv: &[f64],
    label: &str,
) -> (Vec<String>, Vec<Vec<String>>) {
    let d = y.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|c| format!("{label}{c}")));
    header.extend((1..=d).map(|c| format!("Phi{c}")));
    header.push("phiTV".to_string());
    let rows = (0..y.len())
        .map(|k| {
            let mut row = Vec::with_capacity(2 * d + 2);
            row.push(format_float(times[k]));
            for c in 0..d {
                row.push(format_float(y.at(k, c)));
            }
            for c in 0..d {
                row.push(format_float(phi.at(k, c)));
            }
            row.push(format_float(phi_tv[k]));
            row
        })
        .collect();
    (header, rows)
}

fn convergence_table(report: &ConvergenceReport) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["N", "mean_sq_err", "stderr", "samples_failed"]
        .map(String::from)
        .to_vec();
    let rows = report
        .n_values
        .iter()
        .enumerate()
        .map(|(i, n)| {
            vec![
                n.to_string(),
                format_float(report.mean_sq[i]),
                format_float(report.stderr[i]),
                report.samples_failed.to_string(),
            ]
        })
        .collect();
    (header, rows)
}

fn run_skorohod(cfg: &Config, out: &Path, comments: Vec<String>) -> Result<(), Failure> {
    let w = load_path(cfg, "path")?;
    let domain = load_domain(cfg)?;
    let y0 = cfg.floats("y0")?;
    let sol = solve_skorohod(&w, &domain, &y0)?;
    let (header, rows) = state_table(w.times(), &sol.xi, &sol.phi, &sol.phi_tv, "xi");
    emit_table(out, &comments, &header, &rows)
}

fn run_solve_young(cfg: &Config, out: &Path, comments: Vec<String>) -> Result<(), Failure> {
    let x = load_path(cfg, "path")?;
    let domain = load_domain(cfg)?;
    let sigma = load_sigma(cfg)?;
    let y0 = cfg.floats("y0")?;
    let p = cfg.f64("p")?;
    let epsilon = cfg.f64_or("epsilon", default_partition_epsilon(&sigma, &domain, p))?;
    let sol = solve_reflected_young(&x, &sigma, &domain, &y0, p, epsilon)?;
    let (header, rows) = state_table(x.times(), &sol.y, &sol.phi, &sol.phi_tv, "Y");
    emit_table(out, &comments, &header, &rows)
}

fn run_solve_rough(cfg: &Config, out: &Path, comments: Vec<String>) -> Result<(), Failure> {
    let p = cfg.f64("p")?;
    let x = load_rough_driver(cfg, p)?;
    let domain = load_domain(cfg)?;
    let sigma = load_sigma(cfg)?;
    let y0 = cfg.floats("y0")?;
    let default_eps = default_rough_epsilon(&x);
    let epsilon = cfg.f64_or("epsilon", default_eps)?;
    let (sol, _) = solve_reflected_rough(&x, &sigma, &domain, &y0, epsilon)?;
    let (header, rows) = state_table(sol.y.times(), &sol.y, &sol.phi, &sol.phi_tv, "Y");
    emit_table(out, &comments, &header, &rows)
}

fn run_lift(cfg: &Config, out: &Path, comments: Vec<String>, seed: u64) -> Result<(), Failure> {
    match cfg.get("mode").unwrap_or("path") {
        "path" => {
            let p = cfg.f64("p")?;
            let path = load_path(cfg, "path")?;
            let lift = lift_piecewise_linear(&path, p)?;
            let file = File::create(out)
                .map_err(|e| invalid(format!("cannot write {}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            write_rough_csv(&mut w, &lift, &comments)?;
            w.flush().map_err(|e| invalid(format!("cannot write {}: {e}", out.display())))
        }
        "brownian" => {
            let dim = cfg.u64_or("dim", 1)? as usize;
            let horizon = cfg.f64_or("horizon", 1.0)?;
            let levels = cfg.levels("levels")?;
            let p = cfg.f64_or("p", 2.5)?;
            let q = cfg.f64_or("q", 1.0)?;
            let p_probe = cfg.f64_or("p_probe", 1.9)?;
            let pair_cap = cfg.u64_or("pair_cap", 4096)? as usize;
            let samples = cfg.u64("samples")?;
            let reports =
                rough_convergence_stats(seed, samples, dim, horizon, &levels, p, q, p_probe, pair_cap)?;
            let header = ["N", "dp_gap", "C_mean", "C_q_mean"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| {
                    vec![
                        r.level.to_string(),
                        format_float(r.median_refinement_distance.unwrap_or(f64::NAN)),
                        format_float(r.mean_scaling),
                        format_float(r.mean_scaling_moment),
                    ]
                })
                .collect();
            emit_table(out, &comments, &header, &rows)
        }
        other => Err(usage(format!("unknown lift mode {other:?}"))),
    }
}

fn run_defect_scan(cfg: &Config, out: &Path, comments: Vec<String>) -> Result<(), Failure> {
    let p = cfg.f64("p")?;
    let x = load_rough_driver(cfg, p)?;
    let domain = load_domain(cfg)?;
    let sigma = load_sigma(cfg)?;
    let y0 = cfg.floats("y0")?;
    let default_eps = default_rough_epsilon(&x);
    let epsilon = cfg.f64_or("epsilon", default_eps)?;
    let max_points = cfg.u64_or("max_points", 120)? as usize;
    let (sol, _) = solve_reflected_rough(&x, &sigma, &domain, &y0, epsilon)?;
    let ctrl = x.certificate().expect("driver was certified on load").clone();
    let rows = defect_scan(&sol, &x, &sigma, &ctrl, max_points)?;
    let header = ["s", "t", "omega", "absI", "absJ"].map(String::from).to_vec();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                format_float(r.s),
                format_float(r.t),
                format_float(r.omega),
                format_float(r.abs_i),
                format_float(r.abs_j),
            ]
        })
        .collect();
    emit_table(out, &comments, &header, &table)
}

fn run_wz_converge(
    cfg: &Config,
    out: &Path,
    mut comments: Vec<String>,
    seed: u64,
) -> Result<(), Failure> {
    let domain = load_domain(cfg)?;
    let sigma = load_sigma(cfg)?;
    let y0 = cfg.floats("y0")?;
    let p = cfg.f64_or("p", 2.5)?;
    let n_range = level_range(cfg)?;
    let samples = cfg.u64("samples")?;
    let report = wz_error_curve(&sigma, &domain, &y0, &n_range, samples, p, seed)?;
    comments.push(format!("slope: {}", format_float(report.slope)));
    comments.push(format!("slope_halfwidth: {}", format_float(report.slope_halfwidth)));
    let (header, rows) = convergence_table(&report);
    emit_table(out, &comments, &header, &rows)
}

fn run_integral_gap(
    cfg: &Config,
    out: &Path,
    mut comments: Vec<String>,
    seed: u64,
) -> Result<(), Failure> {
    let domain = load_domain(cfg)?;
    let sigma = load_sigma(cfg)?;
    let y0 = cfg.floats("y0")?;
    let n_range = level_range(cfg)?;
    let samples = cfg.u64("samples")?;
    let report = integral_gap_curve(&sigma, &domain, &y0, &n_range, samples, seed)?;
    comments.push(format!("slope: {}", format_float(report.slope)));
    comments.push(format!("slope_halfwidth: {}", format_float(report.slope_halfwidth)));
    let (header, rows) = convergence_table(&report);
    emit_table(out, &comments, &header, &rows)
}

fn level_range(cfg: &Config) -> Result<Vec<u32>, Failure> {
    let lo = cfg.u64("n_min")? as u32;
    let hi = cfg.u64("n_max")? as u32;
    if lo >= hi {
        return Err(usage(format!("n_min={lo} must be below n_max={hi}")));
    }
    Ok((lo..=hi).collect())
}

fn dispatch(cmd: Command, cfg: &Config, out: &Path, seed: u64) -> Result<(), Failure> {
    let comments = provenance(cmd, cfg, seed);
    match cmd {
        Command::Skorohod => run_skorohod(cfg, out, comments),
        Command::SolveYoung => run_solve_young(cfg, out, comments),
        Command::SolveRough => run_solve_rough(cfg, out, comments),
        Command::Lift => run_lift(cfg, out, comments, seed),
        Command::DefectScan => run_defect_scan(cfg, out, comments),
        Command::WzConverge => run_wz_converge(cfg, out, comments, seed),
        Command::IntegralGap => run_integral_gap(cfg, out, comments, seed),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let config_path =
        cli.config.as_deref().ok_or_else(|| usage("missing required flag --config"))?;
    let cfg = Config::load(config_path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.get("out").map(PathBuf::from))
        .ok_or_else(|| usage("missing output path: pass --out or set out= in the config"))?;
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.u64_or("seed", 0)?,
    };
    let result = dispatch(cli.command, &cfg, &out, seed);
    if let Err(f) = &result {
        if let Some(diag) = &f.diagnostic {
            let diag_path = out.with_extension("diag");
            if std::fs::write(&diag_path, diag).is_ok() {
                eprintln!("diagnostic written to {}", diag_path.display());
            }
        }
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.status)
        }
    }
}
