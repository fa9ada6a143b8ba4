//! Command-line front end. [`run`] parses arguments, dispatches to a
//! subcommand and returns the process exit code.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::atom::{transitions_from, validate, AtomSpec};
use crate::error::{Error, Result};
use crate::oracle::{run_verification, GridPreset, QuadratureConfig, VerifyConfig};
use crate::rates::{nonthermal_crossing, RateBreakdown, RateModel, DEFAULT_COUPLING};
use crate::special::Pair;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_VERIFY: i32 = 5;

/// Speed of light, cm/s.
pub const C_CGS: f64 = 2.99792458e10;
/// Reduced Planck constant, erg s.
pub const HBAR_CGS: f64 = 1.054571817e-27;
/// Boltzmann constant, erg/K.
pub const KB_CGS: f64 = 1.380649e-16;

pub const CSV_HEADER: [&str; 7] = ["variable", "omega_bd", "pair", "mechanism", "part", "channel", "rate"];

#[derive(Debug, Parser)]
#[command(name = "mirror-rates", version, about = "Atomic energy-change rates near a conducting plane")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full rate breakdown for one atom state.
    Rates(RatesArgs),
    /// Rates over a range of z, a or ω, written as CSV.
    Sweep(SweepArgs),
    /// Distances where the nonthermal part of the rate vanishes.
    Crossing(CrossingArgs),
    /// Convert laboratory scales (CGS) to the dimensionless parameters.
    Units(UnitsArgs),
    /// Run the quadrature and series-probe verification grid.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct AtomArgs {
    /// Atom spec file (JSON).
    #[arg(long)]
    atom: PathBuf,
    /// Initial level id; defaults to the file's initial_state.
    #[arg(long)]
    state: Option<String>,
    /// Coupling e² (Lorentz–Heaviside, natural units).
    #[arg(long, default_value_t = DEFAULT_COUPLING)]
    coupling: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct RatesArgs {
    #[command(flatten)]
    atom: AtomArgs,
    /// Distance to the plane.
    #[arg(long)]
    z: f64,
    /// Proper acceleration (parallel to the plane).
    #[arg(long, conflicts_with = "velocity")]
    accel: Option<f64>,
    /// Uniform velocity parallel to the plane, |v| < 1.
    #[arg(long)]
    velocity: Option<f64>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    Z,
    A,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct SweepArgs {
    #[command(flatten)]
    atom: AtomArgs,
    #[arg(long, value_enum)]
    var: SweepVariable,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long)]
    points: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    log: bool,
    /// Fixed distance (required unless the sweep is over z).
    #[arg(long)]
    z: Option<f64>,
    /// Fixed acceleration; without it a z or ω sweep is inertial.
    #[arg(long, conflicts_with = "velocity")]
    accel: Option<f64>,
    #[arg(long)]
    velocity: Option<f64>,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct CrossingArgs {
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long)]
    accel: f64,
    /// xx, yy or zz.
    #[arg(long)]
    component: String,
    #[arg(long)]
    zmin: f64,
    #[arg(long)]
    zmax: f64,
    #[arg(long, default_value_t = 64)]
    max_roots: usize,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
#[command(group(ArgGroup::new("scale").required(true).multiple(true).args(["omega", "z", "accel"])))]
struct UnitsArgs {
    /// Transition frequency, s⁻¹.
    #[arg(long)]
    omega: Option<f64>,
    /// Distance to the plane, cm.
    #[arg(long)]
    z: Option<f64>,
    /// Proper acceleration, cm/s².
    #[arg(long)]
    accel: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    /// default or smoke.
    #[arg(long, default_value = "default")]
    grid: String,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Comma-separated ε ladder in units of 1/ω.
    #[arg(long, value_delimiter = ',')]
    eps_ladder: Option<Vec<f64>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Failure of a subcommand with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidSpec(_) | Error::UnknownLevel(_) | Error::Parse(_) => EXIT_USAGE,
            Error::Domain(_) | Error::Quadrature(_) | Error::IllConditioned(_) => EXIT_DOMAIN,
            Error::Io(_) => EXIT_IO,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: format!("i/o error: {e}") }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Rates(a) => cmd_rates(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Crossing(a) => cmd_crossing(&a, out),
        Command::Units(a) => cmd_units(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_atom(path: &Path, state: Option<&str>) -> std::result::Result<(AtomSpec, String), Failure> {
    let spec = AtomSpec::from_path(path).map_err(|e| match e {
        Error::Io(io) => Failure { code: EXIT_IO, message: format!("cannot read {}: {io}", path.display()) },
        other => Failure::from(other),
    })?;
    let violations = validate(&spec);
    if !violations.is_empty() {
        let mut msg = format!("{} is not a valid atom spec:", path.display());
        for v in &violations {
            let _ = write!(msg, "\n  - {v}");
        }
        return Err(Failure::usage(msg));
    }
    let b = state.unwrap_or(&spec.initial_state).to_string();
    if spec.level(&b).is_none() {
        return Err(Failure::usage(format!("unknown level id `{b}`")));
    }
    Ok((spec, b))
}

fn ensure_printable(br: &RateBreakdown) -> std::result::Result<(), Failure> {
    if br.entries.iter().all(|e| e.rate().is_finite()) && br.total().is_finite() {
        Ok(())
    } else {
        Err(Failure { code: EXIT_DOMAIN, message: "non-finite rate encountered".into() })
    }
}

fn breakdown(model: &RateModel, spec: &AtomSpec, b: &str, z: f64, accel: Option<f64>) -> Result<RateBreakdown> {
    match accel {
        Some(a) => model.rate_accelerated(spec, b, z, a),
        None => model.rate_inertial(spec, b, z),
    }
}

fn check_velocity(v: Option<f64>) -> std::result::Result<(), Failure> {
    match v {
        Some(v) if !(v.is_finite() && v.abs() < 1.0) => Err(Failure::usage(format!("--velocity must satisfy |v| < 1, got {v}"))),
        _ => Ok(()),
    }
}

fn cmd_rates(args: &RatesArgs, out: &mut dyn Write) -> CmdResult {
    check_velocity(args.velocity)?;
    let (spec, b) = load_atom(&args.atom.atom, args.atom.state.as_deref())?;
    let model = RateModel::with_coupling(args.atom.coupling);
    let br = breakdown(&model, &spec, &b, args.z, args.accel)?;
    ensure_printable(&br)?;
    if args.json {
        let entries: Vec<serde_json::Value> = br
            .entries
            .iter()
            .map(|e| {
                serde_json::json!({
                    "partner": e.partner, "omega_bd": e.omega, "pair": e.pair, "mechanism": e.mechanism,
                    "part": e.part, "channel": e.channel, "rate": e.rate(), "rate_per_e2": e.per_e2,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "atom": spec.name, "state": b, "z": args.z, "accel": args.accel.unwrap_or(0.0),
            "velocity": args.velocity.unwrap_or(0.0), "coupling": br.coupling,
            "entries": entries,
            "boundary_totals": br.boundary_totals.iter().map(|t| serde_json::json!({
                "partner": t.partner, "omega_bd": t.omega, "pair": t.pair, "channel": t.channel,
                "rate": br.coupling * t.per_e2, "rate_per_e2": t.per_e2,
            })).collect::<Vec<_>>(),
            "grand_total": br.total(),
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json value serializes"))?;
        return Ok(EXIT_OK);
    }
    let motion = match args.accel {
        Some(a) => format!("accelerated a={a:e}"),
        None => format!("inertial v={}", args.velocity.unwrap_or(0.0)),
    };
    writeln!(out, "# atom={} state={b} z={:e} {motion} e2={:e}", spec.name, args.z, br.coupling)?;
    writeln!(out, "{:<10} {:>24} {:<4} {:<5} {:<9} {:<12} {:>24}", "partner", "omega_bd", "pair", "mech", "part", "channel", "rate")?;
    for e in &br.entries {
        writeln!(
            out,
            "{:<10} {:>24.16e} {:<4} {:<5} {:<9} {:<12} {:>24.16e}",
            e.partner, e.omega, e.pair, e.mechanism, e.part, e.channel, e.rate()
        )?;
    }
    writeln!(out, "grand_total {:.16e}", br.total())?;
    Ok(EXIT_OK)
}

/// Parameter sweep definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub variable: SweepVariable,
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub spacing: Spacing,
    pub z: Option<f64>,
    pub accel: Option<f64>,
    pub state: String,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.from.is_finite() && self.to.is_finite() && self.from < self.to) {
            bad.push(format!("need from < to, got from={} to={}", self.from, self.to));
        }
        if self.points < 2 {
            bad.push(format!("need at least 2 points, got {}", self.points));
        }
        if self.spacing == Spacing::Log && !(self.from > 0.0) {
            bad.push("log spacing needs from > 0".to_string());
        }
        match self.variable {
            SweepVariable::Z if self.from <= 0.0 => bad.push("z must be positive".into()),
            SweepVariable::A if self.from < 0.0 => bad.push("acceleration must be non-negative".into()),
            SweepVariable::Omega if self.from <= 0.0 => bad.push("omega must be positive".into()),
            _ => {}
        }
        if self.variable != SweepVariable::Z && self.z.is_none() {
            bad.push("--z is required unless sweeping z".into());
        }
        if self.variable == SweepVariable::A && self.accel.is_some() {
            bad.push("--accel cannot be fixed in an acceleration sweep".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Parse(bad.join("; ")))
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| {
                if k == n - 1 {
                    return self.to;
                }
                let t = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.from + (self.to - self.from) * t,
                    Spacing::Log => (self.from.ln() + (self.to.ln() - self.from.ln()) * t).exp(),
                }
            })
            .collect()
    }

    fn evaluate(&self, model: &RateModel, spec: &AtomSpec, value: f64) -> Result<RateBreakdown> {
        let b = self.state.as_str();
        match self.variable {
            SweepVariable::Z => breakdown(model, spec, b, value, self.accel),
            SweepVariable::A => model.rate_accelerated_or_rest(spec, b, self.z.unwrap_or(f64::NAN), value),
            SweepVariable::Omega => {
                let scaled = spec.scale_energies(value / max_gap(spec, b)?);
                breakdown(model, &scaled, b, self.z.unwrap_or(f64::NAN), self.accel)
            }
        }
    }

    /// CSV text for the whole plan, in plan order.
    pub fn to_csv(&self, model: &RateModel, spec: &AtomSpec) -> Result<String> {
        self.validate()?;
        let values = self.values();
        let blocks = values
            .par_iter()
            .map(|&v| {
                let br = self.evaluate(model, spec, v)?;
                let mut rows = Vec::with_capacity(br.entries.len());
                for e in &br.entries {
                    let rate = e.rate();
                    if !rate.is_finite() {
                        return Err(Error::Domain(format!("non-finite rate at {v}")));
                    }
                    rows.push([
                        format!("{v:.16e}"),
                        format!("{:.16e}", e.omega),
                        e.pair.to_string(),
                        e.mechanism.to_string(),
                        e.part.to_string(),
                        e.channel.to_string(),
                        format!("{rate:.16e}"),
                    ]);
                }
                Ok(rows)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in blocks.iter().flatten() {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Largest `|ω_bd|` out of state `b`.
fn max_gap(spec: &AtomSpec, b: &str) -> Result<f64> {
    let gap = transitions_from(spec, b)?.iter().map(|t| t.omega.abs()).fold(0.0, f64::max);
    if gap > 0.0 {
        Ok(gap)
    } else {
        Err(Error::Domain(format!("state `{b}` has no non-degenerate transition to rescale")))
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> std::result::Result<T, Failure> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Failure::usage("--workers must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure { code: EXIT_DOMAIN, message: format!("cannot start worker pool: {e}") })?;
            Ok(pool.install(f))
        }
    }
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    check_velocity(args.velocity)?;
    let (spec, b) = load_atom(&args.atom.atom, args.atom.state.as_deref())?;
    let plan = SweepPlan {
        variable: args.var,
        from: args.from,
        to: args.to,
        points: args.points,
        spacing: if args.log { Spacing::Log } else { Spacing::Linear },
        z: args.z,
        accel: args.accel,
        state: b,
    };
    plan.validate()?;
    let model = RateModel::with_coupling(args.atom.coupling);
    let text = with_workers(args.workers, || plan.to_csv(&model, &spec))??;
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure { code: EXIT_IO, message: format!("cannot write {}: {e}", path.display()) })?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn cmd_crossing(args: &CrossingArgs, out: &mut dyn Write) -> CmdResult {
    let component: Pair = args.component.parse()?;
    if !component.is_diagonal() {
        return Err(Failure::usage("--component must be xx, yy or zz"));
    }
    if !(args.zmin > 0.0 && args.zmin < args.zmax && args.zmax.is_finite()) {
        return Err(Failure::usage(format!("need 0 < zmin < zmax, got ({}, {})", args.zmin, args.zmax)));
    }
    if !(args.omega > 0.0 && args.accel > 0.0) {
        return Err(Failure::usage("--omega and --accel must be positive"));
    }
    let r = nonthermal_crossing(args.omega, args.accel, component, (args.zmin, args.zmax), args.max_roots)?;
    if r.roots.is_empty() {
        writeln!(out, "no roots")?;
    }
    for (z, res) in r.roots.iter().zip(&r.residuals) {
        writeln!(out, "root component={component} z={z:.16e} sigma={:.16e} residual={res:.3e}", z * args.omega)?;
    }
    Ok(EXIT_OK)
}

/// Laboratory scales in CGS units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitContext {
    pub omega_si: Option<f64>,
    pub z_si: Option<f64>,
    pub a_si: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NaturalParameters {
    /// `ω z / c`.
    pub sigma: Option<f64>,
    /// `a z / c²`.
    pub eta: Option<f64>,
    /// `a / (c ω)`.
    pub accel_over_omega: Option<f64>,
    /// `a ħ / (2π c k_B)`, kelvin.
    pub unruh_temperature: Option<f64>,
}

impl UnitContext {
    pub fn natural(&self) -> Result<NaturalParameters> {
        for (name, v) in [("omega", self.omega_si), ("z", self.z_si), ("accel", self.a_si)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Parse(format!("--{name} must be positive, got {v}")));
                }
            }
        }
        let both = |x: Option<f64>, y: Option<f64>| x.zip(y);
        Ok(NaturalParameters {
            sigma: both(self.omega_si, self.z_si).map(|(w, z)| w * z / C_CGS),
            eta: both(self.a_si, self.z_si).map(|(a, z)| a * z / (C_CGS * C_CGS)),
            accel_over_omega: both(self.a_si, self.omega_si).map(|(a, w)| a / (C_CGS * w)),
            unruh_temperature: self.a_si.map(|a| a * HBAR_CGS / (2.0 * std::f64::consts::PI * C_CGS * KB_CGS)),
        })
    }
}

fn cmd_units(args: &UnitsArgs, out: &mut dyn Write) -> CmdResult {
    let ctx = UnitContext { omega_si: args.omega, z_si: args.z, a_si: args.accel };
    let p = ctx.natural()?;
    let rows = [
        ("sigma", p.sigma),
        ("eta", p.eta),
        ("a_over_omega", p.accel_over_omega),
        ("unruh_temperature_K", p.unruh_temperature),
    ];
    for (name, v) in rows {
        if let Some(v) = v {
            writeln!(out, "{name} = {v:.10e}")?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let preset: GridPreset = args.grid.parse()?;
    let mut cfg = VerifyConfig::default();
    if let Some(r) = args.rel_tol {
        cfg.rel_tol = r;
    }
    if let Some(a) = args.abs_tol {
        cfg.abs_tol = a;
    }
    if !(cfg.rel_tol > 0.0 && cfg.abs_tol > 0.0) {
        return Err(Failure::usage("tolerances must be positive"));
    }
    if let Some(ladder) = &args.eps_ladder {
        cfg.quadrature = QuadratureConfig { eps_ladder: ladder.clone(), ..cfg.quadrature };
        cfg.quadrature.validate().map_err(|e| Failure::usage(e.to_string()))?;
    }
    let report = with_workers(args.workers, || run_verification(preset, &cfg))??;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
    } else {
        write!(out, "{}", report.to_table())?;
        let failed = report.failures().count();
        writeln!(out, "summary: {} rows, {} failed", report.reports.len(), failed)?;
    }
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERIFY })
}
