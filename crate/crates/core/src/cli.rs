//! The `bextail` command line.
//!
//! Every command produces a [`Report`]: a [`RunManifest`] and a list of rows.
//! Reports go to standard output as an aligned table and optionally to JSON and
//! CSV files. The process exits with status 0 iff every row succeeded.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::exact_dist::{cdf_max, ln_tail_max, tail_max, DEFAULT_TOL};
use crate::excursion_mc::{collect_values, tail_from_values, McConfig, Sampler};
use crate::functionals::{FunctionalId, FunctionalSpec};
use crate::variational::{
    gamma_bounds, gamma_closed_form, gamma_closed_form_max, gamma_numeric, gamma_reference,
    GammaResult, Scope, SolverConfig,
};

/// Closed form and numeric values must agree to this for a row to pass.
pub const AGREEMENT_TOL: f64 = 5e-3;
/// Largest admissible `W_α` bound factor `ψ(α)^{1/2} √(2α+1)`.
pub const WALPHA_FACTOR_MAX: f64 = 1.051;

#[derive(Parser, Debug)]
#[command(
    name = "bextail",
    version,
    about = "Tail constants for functionals of Brownian excursion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Also write the report as JSON
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,

    /// Also write the rows as CSV
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,

    /// Significant digits in the table and CSV
    #[arg(long, global = true, default_value_t = 7,
          value_parser = clap::value_parser!(u8).range(1..=17))]
    pub digits: u8,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute γ by closed form, numeric ascent and/or analytic bounds
    Gamma(GammaArgs),
    /// Monte Carlo tail probabilities P(Φ(B_ex) > x)
    Simulate(SimulateArgs),
    /// The exact law of max B_ex
    Maxdist(MaxdistArgs),
    /// Every γ value and bound of the catalog, with numeric confirmation
    Papertable(PapertableArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Numeric,
    Bounds,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    BesselBridgeNorm,
    Vervaat,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::BesselBridgeNorm => Sampler::BesselBridgeNorm,
            SamplerArg::Vervaat => Sampler::Vervaat,
        }
    }
}

fn parse_functional(s: &str) -> std::result::Result<FunctionalId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug)]
pub struct GammaArgs {
    /// max, area, xi, eta, zeta or walpha
    #[arg(value_parser = parse_functional)]
    pub functional: FunctionalId,
    /// Exponent for walpha
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum, default_value_t = MethodArg::All)]
    pub method: MethodArg,
    /// Grid resolution for the numeric solver
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Seed for the random restarts; drawn from entropy when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gradient-norm stopping tolerance
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(value_parser = parse_functional)]
    pub functional: FunctionalId,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Thresholds (repeatable, or several values after one flag)
    #[arg(long = "x", required = true, num_args = 1.., action = clap::ArgAction::Append)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1024)]
    pub n: usize,
    /// Drawn from entropy when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = SamplerArg::BesselBridgeNorm)]
    pub sampler: SamplerArg,
}

#[derive(Args, Debug)]
pub struct MaxdistArgs {
    #[arg(long = "x", required = true, num_args = 1.., action = clap::ArgAction::Append)]
    pub x: Vec<f64>,
    /// Series truncation tolerance
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct PapertableArgs {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Provenance attached to every output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub version: String,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`, otherwise absent so
    /// that reruns are byte-identical.
    pub timestamp: Option<u64>,
}

impl RunManifest {
    fn new(command_line: Vec<String>) -> Self {
        Self {
            command_line,
            seed: None,
            n: None,
            samples: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|s| s.trim().parse().ok()),
        }
    }
}

/// One output row: ordered named cells plus a pass flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub cells: Map<String, Value>,
    pub ok: bool,
    pub note: Option<String>,
}

impl Row {
    fn new() -> Self {
        Self {
            cells: Map::new(),
            ok: true,
            note: None,
        }
    }

    fn set(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.cells.insert(key.to_string(), value.into());
        self
    }

    fn fail(mut self, why: impl Into<String>) -> Self {
        self.ok = false;
        self.note = Some(why.into());
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub manifest: RunManifest,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.ok)
    }

    fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for row in &self.rows {
            for k in row.cells.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols.push("status".into());
        cols
    }

    fn cell_text(row: &Row, col: &str, digits: usize) -> String {
        if col == "status" {
            return status_text(row);
        }
        match row.cells.get(col) {
            None | Some(Value::Null) => "-".into(),
            Some(Value::Number(x)) if x.is_f64() => fmt_sig(x.as_f64().unwrap(), digits),
            Some(Value::String(s)) => s.clone(),
            Some(v) => v.to_string(),
        }
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = r.cells.clone();
                m.insert("status".into(), json!(status_text(r)));
                Value::Object(m)
            })
            .collect();
        json!({ "manifest": self.manifest, "rows": rows })
    }

    pub fn write_table(&self, out: &mut impl Write, digits: usize) -> io::Result<()> {
        let m = &self.manifest;
        writeln!(out, "# {}", m.command_line.join(" "))?;
        writeln!(
            out,
            "# version {}  seed {}  n {}  samples {}  timestamp {}",
            m.version,
            opt_text(m.seed),
            opt_text(m.n),
            opt_text(m.samples),
            opt_text(m.timestamp)
        )?;
        let cols = self.columns();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| cols.iter().map(|c| Self::cell_text(r, c, digits)).collect())
            .collect();
        let widths: Vec<usize> = cols
            .iter()
            .enumerate()
            .map(|(j, c)| {
                body.iter()
                    .map(|r| r[j].chars().count())
                    .chain([c.chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        writeln!(out, "{}", line(&cols))?;
        for r in &body {
            writeln!(out, "{}", line(r))?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path, digits: usize) -> Result<()> {
        let io_err = |e: csv::Error| Error::Parameter(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        let cols = self.columns();
        w.write_record(&cols).map_err(io_err)?;
        for r in &self.rows {
            let rec: Vec<String> = cols.iter().map(|c| Self::cell_text(r, c, digits)).collect();
            w.write_record(&rec).map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display())))
    }
}

fn status_text(r: &Row) -> String {
    match (&r.note, r.ok) {
        (_, true) => "ok".into(),
        (Some(n), false) => format!("FAIL: {n}"),
        (None, false) => "FAIL".into(),
    }
}

fn opt_text<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

/// `x` with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn spec_from(id: FunctionalId, alpha: Option<f64>) -> Result<FunctionalSpec> {
    FunctionalSpec::new(id, alpha)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn gamma_row(label: &str, r: &GammaResult) -> Row {
    Row::new()
        .set("functional", r.spec.to_string())
        .set("method", label)
        .set("scope", scope_text(r.scope))
        .set("gamma", r.gamma)
        .set("lo", r.lo)
        .set("hi", r.hi)
        .set("iterations", r.iterations)
        .set("converged", r.converged)
}

fn scope_text(s: Scope) -> &'static str {
    match s {
        Scope::Kex => "K_ex",
        Scope::KsuOnly => "K_su only",
        Scope::Witness => "witness",
    }
}

fn closed_for(spec: &FunctionalSpec) -> Result<GammaResult> {
    if spec.id() == FunctionalId::Max {
        gamma_closed_form_max(crate::variational::CLOSED_FORM_GRID)
    } else {
        gamma_closed_form(spec)
    }
}

pub fn cmd_gamma(args: &GammaArgs, mut manifest: RunManifest) -> Result<Report> {
    let spec = spec_from(args.functional, args.alpha)?;
    let want = |m: MethodArg| args.method == m || args.method == MethodArg::All;
    let mut rows = Vec::new();

    let closed = if want(MethodArg::Closed) {
        match closed_for(&spec) {
            Ok(r) => {
                rows.push(gamma_row("closed", &r));
                Some(r)
            }
            Err(e) => {
                rows.push(Row::new().set("functional", spec.to_string()).set("method", "closed").fail(e.to_string()));
                None
            }
        }
    } else {
        None
    };

    let bounds = if args.method == MethodArg::Bounds
        || (args.method == MethodArg::All && gamma_bounds(&spec).is_ok())
    {
        match gamma_bounds(&spec) {
            Ok(b) => Some(b),
            Err(e) => {
                rows.push(Row::new().set("functional", spec.to_string()).set("method", "bounds").fail(e.to_string()));
                None
            }
        }
    } else {
        None
    };

    if want(MethodArg::Numeric) {
        let seed = resolve_seed(args.seed);
        manifest.seed = Some(seed);
        manifest.n = Some(args.n);
        let cfg = SolverConfig {
            n: args.n,
            seed,
            tol_grad: args.tol,
            ..SolverConfig::default()
        };
        let r = gamma_numeric(&spec, &cfg)?;
        let g = r.gamma.expect("numeric value");
        let mut row = gamma_row("numeric", &r);
        if let Some(c) = closed.as_ref().filter(|c| c.scope == Scope::Kex) {
            let delta = g - c.gamma.expect("closed value");
            row = row.set("delta", delta);
            if delta.abs() > AGREEMENT_TOL {
                row = row.fail(format!("numeric differs from closed form by {delta:.3e}"));
            }
        }
        if let Some(b) = &bounds {
            if g < b.lo - 1e-3 || g > b.hi {
                row = row.fail(format!("numeric value outside [{:.7}, {:.7}]", b.lo, b.hi));
            }
        }
        rows.push(row);
    }
    if let Some(b) = &bounds {
        rows.push(gamma_row("bounds", b));
    }
    Ok(Report { manifest, rows })
}

pub fn cmd_simulate(args: &SimulateArgs, mut manifest: RunManifest) -> Result<Report> {
    let spec = spec_from(args.functional, args.alpha)?;
    if let Some(x) = args.x.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("thresholds must be finite and >= 0, got {x}")));
    }
    let seed = resolve_seed(args.seed);
    let sampler = Sampler::from(args.sampler);
    let cfg = McConfig {
        n: args.n,
        samples: args.samples,
        seed,
        sampler,
    };
    manifest.seed = Some(seed);
    manifest.n = Some(args.n);
    manifest.samples = Some(args.samples);

    // a point γ where it is known, otherwise the bracket
    let (gamma, bracket) = match gamma_bounds(&spec) {
        Ok(b) => (None, Some((b.lo, b.hi))),
        Err(_) => (Some(gamma_reference(&spec)), None),
    };

    let values = collect_values(&cfg, std::slice::from_ref(&spec))?.remove(0);
    let mut rows = Vec::new();
    for &x in &args.x {
        let est = tail_from_values(&values, x, gamma)?;
        let ratio_at = |g: f64| -> Value {
            if est.p_hat > 0.0 && x > 0.0 {
                json!(-est.p_hat.ln() / (x * x / (2.0 * g * g)))
            } else {
                Value::Null
            }
        };
        let mut row = Row::new()
            .set("spec", spec.to_string())
            .set("x", x)
            .set("value", est.p_hat)
            .set("stderr", est.stderr)
            .set("ci_lo", est.ci_lo)
            .set("ci_hi", est.ci_hi)
            .set("n", args.n)
            .set("samples", args.samples)
            .set("seed", seed)
            .set("sampler", sampler.name())
            .set("gamma", gamma)
            .set("log_tail_ratio", est.log_tail_ratio);
        if let Some((lo, hi)) = bracket {
            row = row
                .set("gamma_lo", lo)
                .set("gamma_hi", hi)
                .set("log_tail_ratio_lo", ratio_at(lo))
                .set("log_tail_ratio_hi", ratio_at(hi));
        }
        row = row.set("below_resolution", est.below_resolution);
        rows.push(row);
    }
    Ok(Report { manifest, rows })
}

pub fn cmd_maxdist(args: &MaxdistArgs, manifest: RunManifest) -> Result<Report> {
    if let Some(x) = args.x.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("maxdist needs finite x > 0, got {x}")));
    }
    let mut rows = Vec::new();
    for &x in &args.x {
        let s = cdf_max(x, args.tol)?;
        let ln_tail = ln_tail_max(x, args.tol)?;
        let tail = tail_max(x, args.tol).ok();
        rows.push(
            Row::new()
                .set("x", x)
                .set("cdf", s.cdf)
                .set("tail", tail)
                .set("ln_tail", ln_tail)
                .set("ratio", -ln_tail / (2.0 * x * x))
                .set("terms", s.terms_used)
                .set("trunc_bound", s.trunc_bound),
        );
    }
    Ok(Report { manifest, rows })
}

pub fn cmd_papertable(args: &PapertableArgs, mut manifest: RunManifest) -> Result<Report> {
    let seed = resolve_seed(args.seed);
    manifest.seed = Some(seed);
    manifest.n = Some(args.n);
    let cfg = SolverConfig {
        n: args.n,
        seed,
        ..SolverConfig::default()
    };

    let mut specs = vec![
        FunctionalSpec::max(),
        FunctionalSpec::area(),
        FunctionalSpec::xi(),
        FunctionalSpec::eta(),
        FunctionalSpec::zeta(),
    ];
    for a in [1.5, 2.0, 3.0, 0.6, 0.75, 0.9] {
        specs.push(FunctionalSpec::walpha(a)?);
    }

    let mut rows = Vec::new();
    for spec in specs {
        let numeric = gamma_numeric(&spec, &cfg)?.gamma.expect("numeric value");
        let mut row = Row::new().set("functional", spec.to_string());
        match gamma_bounds(&spec) {
            Ok(b) => {
                let lower = closed_for(&spec)?.gamma.expect("closed value");
                row = row
                    .set("gamma", Value::Null)
                    .set("lo", b.lo)
                    .set("hi", b.hi)
                    .set("ksu", lower)
                    .set("numeric", numeric);
                if let Some(a) = spec.alpha() {
                    let factor = b.hi / b.lo;
                    row = row.set("factor", factor);
                    if factor > WALPHA_FACTOR_MAX {
                        row = row.fail(format!("bound factor {factor:.5} exceeds {WALPHA_FACTOR_MAX} at α={a}"));
                    }
                }
                if numeric < b.lo - 1e-3 || numeric > b.hi {
                    row = row.fail("numeric value outside the bounds");
                }
            }
            Err(_) => {
                let g = closed_for(&spec)?.gamma.expect("closed value");
                let delta = numeric - g;
                row = row
                    .set("gamma", g)
                    .set("lo", g)
                    .set("hi", g)
                    .set("ksu", g)
                    .set("numeric", numeric)
                    .set("delta", delta);
                if delta.abs() > AGREEMENT_TOL {
                    row = row.fail(format!("numeric differs by {delta:.3e}"));
                }
            }
        }
        rows.push(row);
    }
    Ok(Report { manifest, rows })
}

/// Parses `args` (program name first), runs the command and writes its
/// outputs. Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let command_line: Vec<String> = std::iter::once("bextail".to_string())
        .chain(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()))
        .collect();
    let manifest = RunManifest::new(command_line);

    let report = match &cli.command {
        Command::Gamma(a) => cmd_gamma(a, manifest),
        Command::Simulate(a) => cmd_simulate(a, manifest),
        Command::Maxdist(a) => cmd_maxdist(a, manifest),
        Command::Papertable(a) => cmd_papertable(a, manifest),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return match e {
                Error::Parameter(_) | Error::Domain(_) | Error::Unknown { .. } => 2,
                _ => 1,
            };
        }
    };

    let digits = usize::from(cli.digits);
    if let Err(e) = report.write_table(out, digits) {
        let _ = writeln!(err, "error: cannot write output: {e}");
        return 1;
    }
    if let Some(path) = &cli.json {
        let written = File::create(path).and_then(|mut f| {
            serde_json::to_writer_pretty(&mut f, &report.to_json())?;
            writeln!(f)
        });
        if let Err(e) = written {
            let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
            return 1;
        }
    }
    if let Some(path) = &cli.csv {
        if let Err(e) = report.write_csv(path, digits) {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    }
    let mut status = 0;
    for (i, row) in report.rows.iter().enumerate() {
        if !row.ok {
            let _ = writeln!(err, "row {i} failed: {}", status_text(row));
            status = 1;
        }
    }
    status
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.4472135955, 7), "0.4472136");
        assert_eq!(fmt_sig(0.5, 7), "0.5");
        assert_eq!(fmt_sig(1234567.0, 7), "1234567");
        assert_eq!(fmt_sig(12345678.0, 7), "1.234568e+07");
        assert_eq!(fmt_sig(3.8189246989685574e-20, 4), "3.819e-20");
        assert_eq!(fmt_sig(-0.000123456, 3), "-0.000123");
        assert_eq!(fmt_sig(-0.00004097049, 7), "-4.097049e-05");
        assert_eq!(fmt_sig(0.0, 7), "0");
    }

    #[test]
    fn usage_errors() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(["bextail", "gamma", "height"], &mut out, &mut err), 2);
        assert_eq!(run(["bextail", "gamma", "walpha", "--method", "closed"], &mut out, &mut err), 2);
        assert_eq!(run(["bextail", "maxdist"], &mut out, &mut err), 2);
        assert_eq!(run(["bextail", "maxdist", "--x", "-1"], &mut out, &mut err), 2);
    }

    #[test]
    fn maxdist_rows() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(["bextail", "maxdist", "--x", "1.5", "--x", "6"], &mut out, &mut err);
        assert_eq!(code, 0);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("0.177745"));
        assert!(text.contains("0.9214446"));
    }
}
