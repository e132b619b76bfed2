//! pdspec: command line front end for the period doubling spectral toolkit.
//!
//! Subcommands mirror the library modules: `seq` (substitution windows),
//! `traces` (trace orbits), `bands` (spectrum approximants), `bounds-audit`
//! (the 4×4 machinery and its constants), `growth` (truncated norms and
//! exponents), `transport` (averaged moments and dynamical exponents), and
//! `report` (the end-to-end pipeline). Exit codes: 0 success, 1 audit
//! failure, 2 usage error. All output is deterministic for a fixed
//! configuration.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{config_hash, parse_length, FileConfig};
use pdspec_core::bounds::{self, ConstantsLedger};
use pdspec_core::growth;
use pdspec_core::spectrum::{self, Band, ScanParams};
use pdspec_core::substitution::{self, Letter};
use pdspec_core::transfer::{self, NicState, PotentialMap};
use pdspec_core::transport;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

/// Depth and cap used when selecting orbit-bounded audit energies.
const AUDIT_DEPTH: u32 = 20;
const AUDIT_CAP: f64 = 1e3;

#[derive(Parser)]
#[command(
    name = "pdspec",
    version,
    about = "Spectral and transport audits for the period doubling Schrödinger operator",
    propagate_version = true
)]
struct Cli {
    /// Flat `key = value` configuration file; command line flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Potential value assigned to the letter a
    #[arg(long, global = true, value_name = "V")]
    potential_a: Option<f64>,

    /// Potential value assigned to the letter b
    #[arg(long, global = true, value_name = "V")]
    potential_b: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a window of the two-sided substitution sequence
    Seq(SeqArgs),
    /// Trace orbit x_n, y_n at a fixed energy (CSV)
    Traces(TracesArgs),
    /// Trace-bounded energy bands at one level
    Bands(BandsArgs),
    /// Audit the 4x4 propagation machinery and its constants (JSON)
    BoundsAudit(BoundsAuditArgs),
    /// Truncated solution norms and fitted growth exponents
    Growth(GrowthArgs),
    /// Laplace-averaged moments and dynamical exponent proxies
    Transport(TransportArgs),
    /// Full pipeline: spectrum, constants, growth, transport (JSON bundle)
    Report(ReportArgs),
}

#[derive(Args)]
struct SeqArgs {
    /// First position of the window (may be negative)
    #[arg(long, allow_hyphen_values = true)]
    start: Option<i64>,
    /// Window length; accepts forms like 4096 or 2^12
    #[arg(long)]
    len: Option<String>,
    /// Shift the window through the sequence before printing
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<i64>,
    /// Also print the n-partition at this level
    #[arg(long, value_name = "N")]
    partition: Option<u32>,
    /// Output format: text or json
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args)]
struct TracesArgs {
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Largest block level to trace
    #[arg(long)]
    nmax: Option<u32>,
}

#[derive(Args)]
struct BandsArgs {
    #[arg(long)]
    level: Option<u32>,
    /// Trace bound defining the bands
    #[arg(long)]
    bound: Option<f64>,
    /// Emit JSON (adds total_measure and the empirical trace bound)
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BoundsAuditArgs {
    /// Band detection level feeding the audit energies
    #[arg(long)]
    level: Option<u32>,
    /// Depth k of the audited products D(n, k)
    #[arg(long)]
    kmax: Option<u32>,
    /// Largest base level n of the audited products
    #[arg(long)]
    nmax: Option<u32>,
    /// Number of audit energies
    #[arg(long)]
    energies: Option<usize>,
}

#[derive(Args)]
struct GrowthArgs {
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    /// Largest truncation length; accepts 32768 or 2^15
    #[arg(long)]
    lmax: Option<String>,
    /// Which of the eight circle-sampled initial conditions to use
    #[arg(long, value_name = "J")]
    nic_index: Option<usize>,
}

#[derive(Args)]
struct TransportArgs {
    /// Half width N of the lattice [-N, N]
    #[arg(long)]
    half_width: Option<usize>,
    /// Moment order p
    #[arg(long)]
    p: Option<f64>,
    /// Largest averaging time
    #[arg(long)]
    tmax: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    half_width: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    tmax: Option<f64>,
    /// How many audit energies receive a growth profile
    #[arg(long)]
    growth_energies: Option<usize>,
}

enum CliError {
    Usage(String),
}

/// Print to stdout, treating a closed pipe as a normal early exit.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if out.write_all(text.as_bytes()).is_err() || out.flush().is_err() {
        std::process::exit(0);
    }
}

macro_rules! putln {
    ($($arg:tt)*) => { emit(&format!("{}\n", format_args!($($arg)*))) };
}

impl From<pdspec_core::Error> for CliError {
    fn from(e: pdspec_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<String> for CliError {
    fn from(e: String) -> Self {
        CliError::Usage(e)
    }
}

fn main() -> ExitCode {
    if let Ok(raw) = std::env::var("PDSPEC_THREADS") {
        if let Ok(n) = raw.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `pdspec --help` for usage");
            ExitCode::from(2)
        }
    }
}

/// Resolution order: command line flag, then config file, then default.
struct Resolver {
    file: FileConfig,
}

impl Resolver {
    fn new(path: Option<&PathBuf>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => FileConfig::load(p).map_err(CliError::Usage)?,
            None => FileConfig::default(),
        };
        Ok(Resolver { file })
    }

    fn get<T: std::str::FromStr + Copy>(
        &self,
        flag: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self
            .file
            .get::<T>(key)
            .map_err(CliError::Usage)?
            .unwrap_or(default))
    }

    fn get_length(&self, flag: Option<&String>, key: &str, default: u64) -> Result<u64, CliError> {
        let raw = match flag {
            Some(s) => Some(s.clone()),
            None => self.file.get::<String>(key).map_err(CliError::Usage)?,
        };
        match raw {
            Some(s) => parse_length(&s).map_err(CliError::Usage),
            None => Ok(default),
        }
    }

    fn potential(&self, cli: &Cli) -> Result<PotentialMap, CliError> {
        let a = self.get(cli.potential_a, "potential-a", -4.0)?;
        let b = self.get(cli.potential_b, "potential-b", 1.0)?;
        Ok(PotentialMap::new(a, b)?)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let resolver = Resolver::new(cli.config.as_ref())?;
    let pot = resolver.potential(&cli)?;
    match &cli.command {
        Command::Seq(args) => cmd_seq(args, &resolver),
        Command::Traces(args) => cmd_traces(args, &resolver, &pot),
        Command::Bands(args) => cmd_bands(args, &resolver, &pot),
        Command::BoundsAudit(args) => cmd_bounds_audit(args, &resolver, &pot),
        Command::Growth(args) => cmd_growth(args, &resolver, &pot),
        Command::Transport(args) => cmd_transport(args, &resolver, &pot),
        Command::Report(args) => cmd_report(args, &resolver, &pot),
    }
}

fn letter_str(l: Letter) -> &'static str {
    match l {
        Letter::A => "a",
        Letter::B => "b",
    }
}

fn cmd_seq(args: &SeqArgs, resolver: &Resolver) -> Result<u8, CliError> {
    let start = resolver.get(args.start, "start", 0)?;
    let len = resolver.get_length(args.len.as_ref(), "len", 8)? as usize;
    let shift = resolver.get(args.shift, "shift", 0)?;
    let mut window = substitution::fixed_point_window(start, len)?;
    if shift != 0 {
        window = substitution::shift_window(&window, shift)?;
    }
    let partition = match args.partition {
        Some(n) => Some(substitution::n_partition(&window, n)?),
        None => None,
    };
    match args.format.as_str() {
        "text" => {
            putln!("{}", window.letters);
            if let Some(blocks) = &partition {
                let line: Vec<String> = blocks
                    .iter()
                    .map(|b| {
                        format!(
                            "{}{}@{}",
                            letter_str(b.label),
                            args.partition.unwrap(),
                            b.offset
                        )
                    })
                    .collect();
                putln!("{}", line.join(" "));
            }
        }
        "json" => {
            let partition_json: Vec<Value> = partition
                .unwrap_or_default()
                .iter()
                .map(|b| {
                    json!({
                        "label": format!("{}{}", letter_str(b.label), args.partition.unwrap_or(0)),
                        "offset": b.offset,
                    })
                })
                .collect();
            let v = json!({
                "start": window.start,
                "letters": window.letters.to_string(),
                "partition": partition_json,
            });
            putln!("{}", output::render(&v));
        }
        other => return Err(CliError::Usage(format!("unknown format '{other}'"))),
    }
    Ok(0)
}

fn cmd_traces(args: &TracesArgs, resolver: &Resolver, pot: &PotentialMap) -> Result<u8, CliError> {
    let energy = resolver.get(args.energy, "energy", 0.0)?;
    let nmax = resolver.get(args.nmax, "nmax", 20)?;
    let orbit = transfer::trace_orbit(energy, nmax, pot);
    putln!("n,x_n,y_n,scale_log");
    for n in 0..orbit.xs.len() {
        putln!(
            "{},{},{},{}",
            n,
            orbit.xs[n],
            orbit.ys[n],
            orbit.scale_logs[n]
        );
    }
    if let Some(n) = orbit.overflowed_at {
        eprintln!("trace orbit escaped past 1e150 at level {n}; remaining levels omitted");
    }
    Ok(0)
}

fn scan_at(level: u32, bound: f64, pot: &PotentialMap) -> ScanParams {
    let mut params = ScanParams::for_potential(level, pot);
    params.bound = bound;
    params
}

fn cmd_bands(args: &BandsArgs, resolver: &Resolver, pot: &PotentialMap) -> Result<u8, CliError> {
    let level = resolver.get(args.level, "level", 10)?;
    let bound = resolver.get(args.bound, "bound", 2.0)?;
    let scan = spectrum::approximate_bands(&scan_at(level, bound, pot), pot)?;
    if scan.coarse_warning {
        eprintln!(
            "warning: bands at level {} are under-resolved on the default grid",
            level
        );
    }
    if args.json {
        let audit = spectrum::bounded_band_energies(&scan.bands, 50, AUDIT_DEPTH, AUDIT_CAP, pot);
        let c_emp = spectrum::orbit_sup(&audit, AUDIT_DEPTH, pot).max(2.0);
        let bands: Vec<Value> = scan
            .bands
            .iter()
            .map(|b| json!({"lo": b.lo, "hi": b.hi, "level": b.level}))
            .collect();
        let v = json!({
            "bands": bands,
            "total_measure": spectrum::band_measure(&scan.bands),
            "c_emp": c_emp,
        });
        putln!("{}", output::render(&v));
    } else {
        putln!("lo,hi,level");
        for b in &scan.bands {
            putln!("{},{},{}", b.lo, b.hi, b.level);
        }
    }
    Ok(0)
}

/// Bands, audit energies, and the ledger shared by the heavier commands.
struct Pipeline {
    bands: Vec<Band>,
    audit_energies: Vec<f64>,
    ledger: ConstantsLedger,
}

fn build_pipeline(level: u32, pot: &PotentialMap) -> Result<Pipeline, CliError> {
    let scan = spectrum::approximate_bands(&scan_at(level, 2.0, pot), pot)?;
    let audit_energies =
        spectrum::bounded_band_energies(&scan.bands, 50, AUDIT_DEPTH, AUDIT_CAP, pot);
    if audit_energies.is_empty() {
        return Err(CliError::Usage(format!(
            "no orbit-bounded band energies found at level {level}"
        )));
    }
    let c = spectrum::orbit_sup(&audit_energies, AUDIT_DEPTH, pot).max(2.0);
    let norms = bounds::norm_suprema(&audit_energies, pot);
    let ledger = bounds::constants_from_c(c, &norms)?;
    Ok(Pipeline {
        bands: scan.bands,
        audit_energies,
        ledger,
    })
}

fn ledger_json(l: &ConstantsLedger) -> Value {
    json!({
        "c": l.c,
        "k": l.k,
        "j": l.j,
        "s": l.s,
        "kappa": l.kappa,
        "gamma2": l.gamma2,
        "d": l.d,
        "gamma": l.gamma,
        "gamma1": l.gamma1,
        "alpha": l.alpha,
        "c1": l.c1,
    })
}

fn tally_json(t: &bounds::LemmaTally) -> Value {
    json!({"pass": t.pass, "fail": t.fail, "worst_margin": t.worst_margin})
}

fn cmd_bounds_audit(
    args: &BoundsAuditArgs,
    resolver: &Resolver,
    pot: &PotentialMap,
) -> Result<u8, CliError> {
    let level = resolver.get(args.level, "level", 10)?;
    let kmax = resolver.get(args.kmax, "kmax", 8)?;
    let nmax = resolver.get(args.nmax, "nmax", 6)?;
    let count = resolver.get(args.energies, "energies", 20)?;
    let pipeline = build_pipeline(level, pot)?;
    let energies: Vec<f64> = pipeline
        .audit_energies
        .iter()
        .copied()
        .take(count)
        .collect();
    let report = bounds::bounds_audit(&energies, nmax, kmax, &pipeline.ledger, pot);
    let v = json!({
        "c_emp": pipeline.ledger.c,
        "energies": energies.len(),
        "ledger": ledger_json(&pipeline.ledger),
        "lemma_results": {
            "row_recursion": tally_json(&report.row_recursion),
            "row_shift": tally_json(&report.row_shift),
            "b_determinant": tally_json(&report.b_determinant),
            "quad_propagation": tally_json(&report.quad_propagation),
            "entry_bound": tally_json(&report.entry_bound),
            "block_norm": tally_json(&report.block_norm),
            "pair_norm": tally_json(&report.pair_norm),
            "product_norm": tally_json(&report.product_norm),
            "prefix_norm": tally_json(&report.prefix_norm),
        },
    });
    putln!("{}", output::render(&v));
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn cmd_growth(args: &GrowthArgs, resolver: &Resolver, pot: &PotentialMap) -> Result<u8, CliError> {
    let lmax = resolver.get_length(args.lmax.as_ref(), "lmax", 1 << 15)?;
    let nic_index = resolver.get(args.nic_index, "nic-index", 0usize)?;
    if nic_index >= 8 {
        return Err(CliError::Usage("nic index must be 0..7".into()));
    }
    let pipeline = build_pipeline(10, pot)?;
    let energy = resolver.get(args.energy, "energy", pipeline.audit_energies[0])?;
    let max_exp = (lmax as f64).log2().floor() as u32;
    if max_exp < 8 {
        return Err(CliError::Usage(
            "lmax must be at least 256 so the exponent fit has enough samples".into(),
        ));
    }
    let nic = NicState::circle_samples()[nic_index];
    let ls = growth::dyadic_lengths(max_exp);
    let profile = growth::norm_profile(energy, &nic, &ls, pot)?;
    putln!("L,norm");
    for &(l, norm) in &profile.samples {
        putln!("{l},{norm}");
    }
    let alpha_emp = growth::alpha_from_gammas(profile.gamma1_emp, profile.gamma2_emp)?;
    let v = json!({
        "gamma1_emp": profile.gamma1_emp,
        "gamma2_emp": profile.gamma2_emp,
        "alpha_emp": alpha_emp,
        "ledger_alpha": pipeline.ledger.alpha,
    });
    putln!("{}", output::render(&v));
    Ok(0)
}

fn cmd_transport(
    args: &TransportArgs,
    resolver: &Resolver,
    pot: &PotentialMap,
) -> Result<u8, CliError> {
    let half_width = resolver.get(args.half_width, "half-width", 1024)?;
    let p = resolver.get(args.p, "p", 2.0)?;
    let tmax = resolver.get(args.tmax, "tmax", 1000.0)?;
    if tmax <= 1.0 {
        return Err(CliError::Usage("tmax must exceed 1".into()));
    }
    let pipeline = build_pipeline(10, pot)?;
    let h = transport::LatticeHamiltonian::period_doubling(half_width, pot)?;
    let engine = transport::MomentEngine::new(&h, p)?;
    let grid = transport::log_t_grid(1.0, tmax, 16);
    let series = transport::transport_series(&engine, &grid).map_err(|e| {
        CliError::Usage(format!(
            "{e}; the boundary guard capped the usable times, increase --half-width"
        ))
    })?;
    putln!("t,moment");
    for &(t, m) in &series.samples {
        putln!("{t},{m}");
    }
    let v = json!({
        "beta_minus": series.beta_minus,
        "beta_plus": series.beta_plus,
        "boundary_flag": series.boundary_flag,
        "alpha_ref": pipeline.ledger.alpha,
    });
    putln!("{}", output::render(&v));
    Ok(0)
}

fn cmd_report(args: &ReportArgs, resolver: &Resolver, pot: &PotentialMap) -> Result<u8, CliError> {
    let level = resolver.get(args.level, "level", 10)?;
    let half_width = resolver.get(args.half_width, "half-width", 512)?;
    let p = resolver.get(args.p, "p", 2.0)?;
    let tmax = resolver.get(args.tmax, "tmax", 300.0)?;
    let growth_energies = resolver.get(args.growth_energies, "growth-energies", 3)?;
    let mut failures = 0usize;

    let pipeline = build_pipeline(level, pot)?;
    let spectrum_json = json!({
        "level": level,
        "bound": 2.0,
        "band_count": pipeline.bands.len(),
        "total_measure": spectrum::band_measure(&pipeline.bands),
        "c_emp": pipeline.ledger.c,
    });

    let audit = bounds::bounds_audit(
        &pipeline
            .audit_energies
            .iter()
            .copied()
            .take(20)
            .collect::<Vec<_>>(),
        6,
        8,
        &pipeline.ledger,
        pot,
    );
    if !audit.all_pass() {
        failures += 1;
    }
    let lemma_json = json!({
        "row_recursion": tally_json(&audit.row_recursion),
        "row_shift": tally_json(&audit.row_shift),
        "b_determinant": tally_json(&audit.b_determinant),
        "quad_propagation": tally_json(&audit.quad_propagation),
        "entry_bound": tally_json(&audit.entry_bound),
        "block_norm": tally_json(&audit.block_norm),
        "pair_norm": tally_json(&audit.pair_norm),
        "product_norm": tally_json(&audit.product_norm),
        "prefix_norm": tally_json(&audit.prefix_norm),
    });

    let nics = NicState::circle_samples();
    let ls = growth::dyadic_lengths(15);
    let mut profiles = Vec::new();
    let mut gamma1_min = f64::MAX;
    let mut gamma2_max = f64::MIN;
    for &e in pipeline.audit_energies.iter().take(growth_energies) {
        for (j, nic) in nics.iter().enumerate() {
            match growth::norm_profile(e, nic, &ls, pot) {
                Ok(pr) => {
                    let alpha_emp =
                        growth::alpha_from_gammas(pr.gamma1_emp, pr.gamma2_emp).unwrap_or(f64::NAN);
                    gamma1_min = gamma1_min.min(pr.gamma1_emp);
                    gamma2_max = gamma2_max.max(pr.gamma2_emp);
                    profiles.push(json!({
                        "energy": e,
                        "nic_index": j,
                        "gamma1_emp": pr.gamma1_emp,
                        "gamma2_emp": pr.gamma2_emp,
                        "alpha_emp": alpha_emp,
                    }));
                }
                Err(err) => {
                    failures += 1;
                    profiles.push(json!({"energy": e, "nic_index": j, "error": err.to_string()}));
                }
            }
        }
    }
    let alpha_envelope = growth::alpha_from_gammas(gamma1_min, gamma2_max).unwrap_or(f64::NAN);

    let transport_json = match transport_stage(pot, half_width, p, tmax, pipeline.ledger.alpha) {
        Ok((v, pass)) => {
            if !pass {
                failures += 1;
            }
            v
        }
        Err(err) => {
            failures += 1;
            json!({"error": err})
        }
    };

    let mut canonical = resolver.file.canonical();
    canonical.push_str(&format!(
        "run: level={level} half-width={half_width} p={p} tmax={tmax} growth-energies={growth_energies} potential=({},{})\n",
        pot.value_a(),
        pot.value_b()
    ));

    let bundle = json!({
        "alpha": pipeline.ledger.alpha,
        "alpha_emp_envelope": alpha_envelope,
        "growth": {"profiles": profiles, "gamma1_min": gamma1_min, "gamma2_max": gamma2_max},
        "ledger": ledger_json(&pipeline.ledger),
        "lemma_audits": lemma_json,
        "provenance": {
            "config_hash": config_hash(&canonical),
            "version": env!("CARGO_PKG_VERSION"),
        },
        "spectrum": spectrum_json,
        "transport": transport_json,
        "failures": failures,
    });
    putln!("{}", output::render(&bundle));
    Ok(if failures == 0 { 0 } else { 1 })
}

fn transport_stage(
    pot: &PotentialMap,
    half_width: usize,
    p: f64,
    tmax: f64,
    alpha: f64,
) -> Result<(Value, bool), String> {
    let h = transport::LatticeHamiltonian::period_doubling(half_width, pot)
        .map_err(|e| e.to_string())?;
    let engine = transport::MomentEngine::new(&h, p).map_err(|e| e.to_string())?;
    let grid = transport::log_t_grid(1.0, tmax, 16);
    let series = transport::transport_series(&engine, &grid).map_err(|e| e.to_string())?;
    let report = transport::compare_guarneri(series.beta_minus, alpha);
    let samples: Vec<Value> = series
        .samples
        .iter()
        .map(|&(t, m)| json!({"moment": m, "t": t}))
        .collect();
    Ok((
        json!({
            "p": p,
            "half_width": half_width,
            "beta_minus": series.beta_minus,
            "beta_plus": series.beta_plus,
            "boundary_flag": series.boundary_flag,
            "samples": samples,
            "guarneri": {
                "alpha": report.alpha,
                "beta": report.beta,
                "margin": report.margin,
                "pass": report.pass,
            },
        }),
        report.pass,
    ))
}
