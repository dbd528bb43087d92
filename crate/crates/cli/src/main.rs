//! Operator-facing command line for the rate-energy engine.
//!
//! Subcommands: `chi-table` (blockage factor table with built-in reference
//! check), `analyze` (analytic curves), `simulate` (Monte Carlo estimates),
//! and `tradeoff` (rate-energy curves and envelopes). Power crosses the CLI
//! surface in dBm and rates in kbps; the library works in watts and bits/s.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use swipt_core::analysis::{chi, Model, TruncationPolicy};
use swipt_core::geometry::SystemParams;
use swipt_core::montecarlo::estimate_jccdf;
use swipt_core::tradeoff::{default_rate_grid, envelope, tradeoff_curve, TradeoffPoint};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CHI_CHECK: u8 = 4;

#[derive(Debug)]
enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Config(String),
    /// A computation failed; exit code 3.
    Numeric(String),
    /// chi-table reference check failed; exit code 4.
    ChiCheck(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::ChiCheck(m) => write!(f, "chi-table check failed: {m}"),
        }
    }
}

impl From<swipt_core::Error> for CliError {
    fn from(e: swipt_core::Error) -> Self {
        match e {
            swipt_core::Error::Param(m) => CliError::Config(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn watts_from_dbm(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

fn dbm_from_watts(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
struct RunConfig {
    params: SystemParams,
    policy: TruncationPolicy,
    seed: u64,
    reps: usize,
    level: f64,
    format: Format,
}

impl RunConfig {
    fn defaults() -> Self {
        let params = SystemParams::defaults();
        let policy = TruncationPolicy::for_params(&params);
        RunConfig {
            params,
            policy,
            seed: 1,
            reps: 10_000,
            level: 0.75,
            format: Format::Csv,
        }
    }

    /// Apply one dotted key. Policy fields derived from params (n_max) are
    /// recomputed on `finish` unless explicitly pinned here.
    fn apply(&mut self, key: &str, value: &str, pinned_n_max: &mut bool) -> CliResult<()> {
        let bad = |what: &str| CliError::Config(format!("key {key}: {what}: {value}"));
        let f = |v: &str| v.parse::<f64>().map_err(|_| bad("expected a real number"));
        let p = &mut self.params;
        match key {
            "params.lambda_ph" => p.lambda_ph = f(value)?,
            "params.d_ph" => {
                let d = f(value)?;
                if d <= 0.0 {
                    return Err(bad("d_ph must be > 0"));
                }
                p.lambda_ph = 1.0 / (std::f64::consts::PI * d * d);
            }
            "params.lambda_w" => p.lambda_w = f(value)?,
            "params.r_d" => p.r_d = f(value)?,
            "params.beta" => p.beta = f(value)?,
            "params.f_c" => p.f_c = f(value)?,
            "params.k_pen" => p.k_pen = f(value)?,
            "params.p_tx" => p.p_tx = f(value)?,
            "params.b_c" => p.b_c = f(value)?,
            "params.sigma_n2" => p.sigma_n2 = f(value)?,
            "params.sigma_c2" => p.sigma_c2 = f(value)?,
            "params.rho" => p.rho = f(value)?,
            "params.xi" => p.xi = f(value)?,
            "params.n_t" => {
                p.n_t = value.parse().map_err(|_| bad("expected an integer"))?
            }
            "params.n_r" => {
                p.n_r = value.parse().map_err(|_| bad("expected an integer"))?
            }
            "policy.n_max" => {
                self.policy.n_max = value.parse().map_err(|_| bad("expected an integer"))?;
                *pinned_n_max = true;
            }
            "policy.eta_tol" => self.policy.eta_tol = f(value)?,
            "policy.eta_cap" => {
                self.policy.eta_cap = value.parse().map_err(|_| bad("expected an integer"))?
            }
            "policy.omega_max" => self.policy.omega_max = f(value)?,
            "policy.cf_tol" => self.policy.cf_tol = f(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad("expected an integer"))?,
            "reps" => self.reps = value.parse().map_err(|_| bad("expected an integer"))?,
            "level" => self.level = f(value)?,
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    _ => return Err(bad("expected csv or json")),
                }
            }
            _ => return Err(CliError::Config(format!("unknown config key: {key}"))),
        }
        Ok(())
    }

    fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = RunConfig::defaults();
        let mut pinned_n_max = false;
        let mut keys: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "{}:{}: expected key = value",
                    path.display(),
                    lineno + 1
                ))
            })?;
            keys.push((key.trim().to_string(), value.trim().to_string()));
        }
        // Params first so that derived policy defaults see the final values.
        keys.sort_by_key(|(k, _)| !k.starts_with("params."));
        let params_changed = keys.iter().any(|(k, _)| k.starts_with("params."));
        for (key, value) in &keys {
            cfg.apply(key, value, &mut pinned_n_max)?;
        }
        if params_changed && !pinned_n_max {
            let fresh = TruncationPolicy::for_params(&cfg.params);
            cfg.policy.n_max = fresh.n_max;
        }
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0 < self.level && self.level < 1.0) {
            return Err(CliError::Config(format!(
                "level must be in (0,1), got {}",
                self.level
            )));
        }
        if self.reps == 0 {
            return Err(CliError::Config("reps must be positive".into()));
        }
        Ok(())
    }

    /// Full dotted echo; feeding these lines back as a config file
    /// reproduces the run.
    fn echo(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let mut out: Vec<(String, String)> = vec![
            ("params.lambda_ph".into(), format!("{}", p.lambda_ph)),
            ("params.lambda_w".into(), format!("{}", p.lambda_w)),
            ("params.r_d".into(), format!("{}", p.r_d)),
            ("params.beta".into(), format!("{}", p.beta)),
            ("params.f_c".into(), format!("{}", p.f_c)),
            ("params.k_pen".into(), format!("{}", p.k_pen)),
            ("params.p_tx".into(), format!("{}", p.p_tx)),
            ("params.b_c".into(), format!("{}", p.b_c)),
            ("params.sigma_n2".into(), format!("{}", p.sigma_n2)),
            ("params.sigma_c2".into(), format!("{}", p.sigma_c2)),
            ("params.rho".into(), format!("{}", p.rho)),
            ("params.xi".into(), format!("{}", p.xi)),
            ("params.n_t".into(), format!("{}", p.n_t)),
            ("params.n_r".into(), format!("{}", p.n_r)),
            ("policy.n_max".into(), format!("{}", self.policy.n_max)),
            ("policy.eta_tol".into(), format!("{}", self.policy.eta_tol)),
            ("policy.eta_cap".into(), format!("{}", self.policy.eta_cap)),
            ("policy.omega_max".into(), format!("{}", self.policy.omega_max)),
            ("policy.cf_tol".into(), format!("{}", self.policy.cf_tol)),
        ];
        out.push(("seed".into(), format!("{}", self.seed)));
        out.push(("reps".into(), format!("{}", self.reps)));
        out.push(("level".into(), format!("{}", self.level)));
        out.push(("format".into(), self.format.as_str().into()));
        out
    }
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

struct Table {
    command: String,
    config: Vec<(String, String)>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(command: &str, cfg: &RunConfig, columns: Vec<&'static str>) -> Self {
        Table {
            command: command.to_string(),
            config: cfg.echo(),
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# swipt {}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(s, "# {k} = {v}");
        }
        let _ = writeln!(s, "# columns: {}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        s
    }

    fn to_json(&self) -> String {
        let config: serde_json::Map<String, serde_json::Value> = self
            .config
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                self.columns
                    .iter()
                    .zip(row)
                    .map(|(c, cell)| {
                        let v = cell
                            .parse::<f64>()
                            .map(|x| serde_json::json!(x))
                            .unwrap_or_else(|_| serde_json::json!(cell));
                        (c.to_string(), v)
                    })
                    .collect::<serde_json::Map<_, _>>()
                    .into()
            })
            .collect();
        let doc = serde_json::json!({
            "command": self.command,
            "config": config,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    fn write(&self, cfg: &RunConfig, out: Option<&Path>) -> CliResult<()> {
        let text = match cfg.format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        };
        match out {
            None => {
                print!("{text}");
                Ok(())
            }
            Some(path) => atomic_write(path, &text),
        }
    }
}

/// Write via a sibling temp file and rename, so readers never observe a
/// partial file.
fn atomic_write(path: &Path, text: &str) -> CliResult<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(".{}.tmp", path.display())),
    };
    let io = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, text).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "swipt",
    about = "Rate-energy analysis of dense indoor MIMO SWIPT networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key=value configuration file (dotted keys, '#' comments).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for the per-replication random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replication count.
    #[arg(long)]
    reps: Option<usize>,
    /// Reliability level in (0,1).
    #[arg(long)]
    level: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::defaults(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(reps) = self.reps {
            cfg.reps = reps;
        }
        if let Some(level) = self.level {
            cfg.level = level;
        }
        if let Some(format) = self.format {
            cfg.format = format;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AnalyzeMode {
    Minloss,
    Interference,
    Jccdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepKey {
    DPh,
    LambdaW,
    Rho,
    NT,
}

#[derive(Subcommand)]
enum Command {
    /// Blockage factor table chi_eta(lambda_w) with reference check.
    ChiTable {
        #[command(flatten)]
        common: Common,
        /// Wall frequencies, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.02, 0.03, 0.04, 0.05])]
        lambda_w: Vec<f64>,
        /// Largest crossing order.
        #[arg(long, default_value_t = 5)]
        eta_max: u32,
    },
    /// Analytic curves: loss CDF, conditional interference CDF, or J-CCDF.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        mode: AnalyzeMode,
        /// Grid size for the minloss / interference curves.
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Serving attenuation the interference CDF conditions on.
        #[arg(long, default_value_t = 1e5)]
        l0: f64,
        /// Rate demands in kbps (jccdf mode).
        #[arg(long, value_delimiter = ',', default_values_t = vec![50.0, 150.0, 300.0, 600.0, 1000.0])]
        rates: Vec<f64>,
        /// Power demands in dBm (jccdf mode).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-30.0, -25.0, -20.0, -15.0])]
        powers: Vec<f64>,
    },
    /// Monte Carlo J-CCDF estimates with 95% half-widths.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Rate demands in kbps.
        #[arg(long, value_delimiter = ',', default_values_t = vec![50.0, 150.0, 300.0, 600.0, 1000.0])]
        rates: Vec<f64>,
        /// Power demands in dBm.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = vec![-30.0, -25.0, -20.0, -15.0])]
        powers: Vec<f64>,
    },
    /// Rate-energy trade-off curves, optionally swept over one parameter.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep.
        #[arg(long, value_enum)]
        sweep: Option<SweepKey>,
        /// Sweep values, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Rate grid in kbps; defaults to 40 log-spaced points 10..2000.
        #[arg(long, value_delimiter = ',')]
        rates: Vec<f64>,
        /// Emit the pointwise envelope over the sweep instead of one curve
        /// per value.
        #[arg(long)]
        envelope: bool,
    },
}

// ---------------------------------------------------------------------------
// chi-table
// ---------------------------------------------------------------------------

/// Frozen reference entries for the default (lambda_w, eta) grid, as
/// printed: each literal's displayed precision sets one unit of rounding
/// slack on top of the 1% relative tolerance.
const CHI_REFERENCE: [(f64, [&str; 6]); 5] = [
    (0.01, ["1.5708", "0.02", "2.5e-4", "3.3e-6", "4.35e-8", "5.73e-10"]),
    (0.02, ["1.5708", "0.04", "1e-3", "2.6e-5", "6.96e-7", "1.83e-8"]),
    (0.03, ["1.5708", "0.06", "2.3e-3", "9e-5", "3.5e-6", "1.39e-7"]),
    (0.04, ["1.5708", "0.08", "4.1e-3", "2.1e-4", "1.1e-5", "5.87e-7"]),
    (0.05, ["1.5708", "0.1", "6.4e-3", "4.1e-4", "2.7e-5", "1.79e-6"]),
];

/// One unit in the last displayed digit of a decimal literal.
fn displayed_unit(literal: &str) -> f64 {
    let lower = literal.to_ascii_lowercase();
    let (mantissa, exp) = match lower.split_once('e') {
        Some((m, e)) => (m, e.parse::<i32>().unwrap_or(0)),
        None => (lower.as_str(), 0),
    };
    let frac_digits = mantissa
        .split_once('.')
        .map(|(_, f)| f.len() as i32)
        .unwrap_or(0);
    10f64.powi(exp - frac_digits)
}

fn cmd_chi_table(
    common: &Common,
    lambda_ws: &[f64],
    eta_max: u32,
) -> CliResult<()> {
    let cfg = common.resolve()?;
    let mut table = Table::new("chi-table", &cfg, vec!["lambda_w", "eta", "chi"]);
    let mut mismatches: Vec<String> = Vec::new();
    for &lw in lambda_ws {
        if lw < 0.0 {
            return Err(CliError::Config(format!("lambda_w must be >= 0, got {lw}")));
        }
        for eta in 0..=eta_max {
            let value = chi(eta, lw).map_err(|e| CliError::Numeric(e.to_string()))?;
            table.push(vec![fmt_num(lw), eta.to_string(), fmt_num(value)]);
            if let Some((_, refs)) = CHI_REFERENCE
                .iter()
                .find(|(rlw, _)| (rlw - lw).abs() < 1e-12)
            {
                if let Some(lit) = refs.get(eta as usize) {
                    let reference: f64 = lit.parse().expect("reference literal");
                    let tol = (0.01 * reference).max(displayed_unit(lit));
                    if (value - reference).abs() > tol {
                        mismatches.push(format!(
                            "chi_{eta}({lw}) = {value:.6e}, reference {lit}"
                        ));
                    }
                }
            }
        }
    }
    table.write(&cfg, common.out.as_deref())?;
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::ChiCheck(mismatches.join("; ")))
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn build_model(cfg: &RunConfig) -> CliResult<Model> {
    Model::new(cfg.params.clone(), cfg.policy.clone()).map_err(CliError::from)
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64))
        .collect()
}

fn cmd_analyze(
    common: &Common,
    mode: AnalyzeMode,
    points: usize,
    l0: f64,
    rates_kbps: &[f64],
    powers_dbm: &[f64],
) -> CliResult<()> {
    let cfg = common.resolve()?;
    if points < 2 {
        return Err(CliError::Config("points must be at least 2".into()));
    }
    let model = build_model(&cfg)?;
    let at = |ctx: &str, x: f64, e: swipt_core::Error| {
        CliError::Numeric(format!("{ctx} at {x}: {e}"))
    };
    let table = match mode {
        AnalyzeMode::Minloss => {
            let mut t = Table::new("analyze minloss", &cfg, vec!["alpha", "cdf"]);
            for alpha in log_grid(1e2, 1e9, points) {
                let v = model
                    .min_loss_cdf(alpha)
                    .map_err(|e| at("minloss", alpha, e))?;
                t.push(vec![fmt_num(alpha), fmt_num(v)]);
            }
            t
        }
        AnalyzeMode::Interference => {
            let mut t = Table::new("analyze interference", &cfg, vec!["l0", "z", "cdf"]);
            for z in log_grid(1e-9, 1e-1, points) {
                let v = model
                    .interference_cdf(z, l0)
                    .map_err(|e| at("interference", z, e))?;
                t.push(vec![fmt_num(l0), fmt_num(z), fmt_num(v)]);
            }
            t
        }
        AnalyzeMode::Jccdf => {
            let mut t = Table::new("analyze jccdf", &cfg, vec!["r_kbps", "q_dbm", "jccdf"]);
            for &rk in rates_kbps {
                for &qd in powers_dbm {
                    let v = model
                        .jccdf(rk * 1e3, watts_from_dbm(qd))
                        .map_err(|e| at("jccdf", rk, e))?;
                    t.push(vec![fmt_num(rk), fmt_num(qd), fmt_num(v)]);
                }
            }
            t
        }
    };
    table.write(&cfg, common.out.as_deref())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(common: &Common, rates_kbps: &[f64], powers_dbm: &[f64]) -> CliResult<()> {
    let cfg = common.resolve()?;
    let mut table = Table::new(
        "simulate",
        &cfg,
        vec!["r_kbps", "q_dbm", "estimate", "half_width_95"],
    );
    for &rk in rates_kbps {
        for &qd in powers_dbm {
            let (est, hw) = estimate_jccdf(
                &cfg.params,
                rk * 1e3,
                watts_from_dbm(qd),
                cfg.reps,
                cfg.seed,
            )?;
            table.push(vec![fmt_num(rk), fmt_num(qd), fmt_num(est), fmt_num(hw)]);
        }
    }
    table.write(&cfg, common.out.as_deref())
}

// ---------------------------------------------------------------------------
// tradeoff
// ---------------------------------------------------------------------------

fn apply_sweep(params: &SystemParams, key: SweepKey, value: f64) -> CliResult<SystemParams> {
    let mut p = params.clone();
    match key {
        SweepKey::DPh => {
            if value <= 0.0 {
                return Err(CliError::Config(format!("d_ph must be > 0, got {value}")));
            }
            p.lambda_ph = 1.0 / (std::f64::consts::PI * value * value);
        }
        SweepKey::LambdaW => p.lambda_w = value,
        SweepKey::Rho => p.rho = value,
        SweepKey::NT => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(CliError::Config(format!(
                    "n_t must be a positive integer, got {value}"
                )));
            }
            p.n_t = value as u32;
        }
    }
    p.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(p)
}

fn sweep_label(key: Option<SweepKey>) -> &'static str {
    match key {
        None => "none",
        Some(SweepKey::DPh) => "d_ph",
        Some(SweepKey::LambdaW) => "lambda_w",
        Some(SweepKey::Rho) => "rho",
        Some(SweepKey::NT) => "n_t",
    }
}

fn cmd_tradeoff(
    common: &Common,
    sweep: Option<SweepKey>,
    values: &[f64],
    rates_kbps: &[f64],
    want_envelope: bool,
) -> CliResult<()> {
    let cfg = common.resolve()?;
    if sweep.is_none() && !values.is_empty() {
        return Err(CliError::Config(
            "--values requires --sweep to name the parameter".into(),
        ));
    }
    if want_envelope && sweep.is_none() {
        return Err(CliError::Config("--envelope requires --sweep".into()));
    }
    let grid: Vec<f64> = if rates_kbps.is_empty() {
        default_rate_grid()
    } else {
        rates_kbps.iter().map(|r| r * 1e3).collect()
    };
    let mut table = Table::new(
        "tradeoff",
        &cfg,
        vec!["sweep", "value", "r_kbps", "q_dbm", "level"],
    );
    let label = sweep_label(sweep);
    let push_points = |table: &mut Table, value: f64, pts: &[TradeoffPoint]| {
        for pt in pts {
            table.push(vec![
                label.to_string(),
                fmt_num(value),
                fmt_num(pt.r_star / 1e3),
                fmt_num(dbm_from_watts(pt.q_star)),
                fmt_num(pt.level),
            ]);
        }
    };
    match sweep {
        None => {
            let model = build_model(&cfg)?;
            let curve = tradeoff_curve(&model, cfg.level, &grid)?;
            push_points(&mut table, 0.0, &curve.points);
        }
        Some(key) => {
            let mut models = Vec::new();
            for &v in values {
                let p = apply_sweep(&cfg.params, key, v)?;
                let policy = TruncationPolicy::for_params(&p);
                models.push((v, Model::new(p, policy)?));
            }
            if want_envelope {
                let only: Vec<Model> = models.into_iter().map(|(_, m)| m).collect();
                let env = envelope(&only, cfg.level, &grid)?;
                push_points(&mut table, f64::NAN, &env);
            } else {
                for (v, model) in &models {
                    let curve = tradeoff_curve(model, cfg.level, &grid)?;
                    push_points(&mut table, *v, &curve.points);
                }
            }
        }
    }
    table.write(&cfg, common.out.as_deref())
}

// ---------------------------------------------------------------------------

fn run() -> CliResult<()> {
    match Cli::parse().command {
        Command::ChiTable {
            common,
            lambda_w,
            eta_max,
        } => cmd_chi_table(&common, &lambda_w, eta_max),
        Command::Analyze {
            common,
            mode,
            points,
            l0,
            rates,
            powers,
        } => cmd_analyze(&common, mode, points, l0, &rates, &powers),
        Command::Simulate {
            common,
            rates,
            powers,
        } => cmd_simulate(&common, &rates, &powers),
        Command::Tradeoff {
            common,
            sweep,
            values,
            rates,
            envelope,
        } => cmd_tradeoff(&common, sweep, &values, &rates, envelope),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swipt: {e}");
            ExitCode::from(match e {
                CliError::Config(_) => EXIT_CONFIG,
                CliError::Numeric(_) => EXIT_NUMERIC,
                CliError::ChiCheck(_) => EXIT_CHI_CHECK,
            })
        }
    }
}
