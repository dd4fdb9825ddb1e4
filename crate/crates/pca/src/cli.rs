//! `pca` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pca_core::analysis::phase_scan;
use pca_core::coupling::estimate_rho;
use pca_core::dynamics::Boundary;
use pca_core::exact::{gap_a, gibbs_table, nu_table, GapMethod, GapMode, McOptions, PotentialPhi};
use pca_core::lattice::{ball, Region, Site};
use pca_core::noise::RandomnessKey;
use pca_core::rule::{dv_threshold, ClassCRule, InteractionKernel};

use crate::config::RawConfig;
use crate::parallel::{Pool, THREADS_ENV};
use crate::report::{num, rho_row, scan_csv, scan_jsonl, summary_csv, RHO_HEADER};
use crate::table_io;
use crate::verify::{self, Level};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "pca", version, about = "Simulate and verify attractive probabilistic cellular automata on Z^d")]
pub struct Cli {
    /// Worker threads; 0 means one per logical core.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,

    /// Seed for every random stream. Commands without randomness accept and ignore it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the self-check suite and print PASS/FAIL per check.
    Verify(VerifyArgs),
    /// Run a parameter scan from a config file and write CSV and JSON-lines reports.
    Scan(ScanArgs),
    /// Estimate the coupled disagreement probability at the origin.
    Rho(RhoArgs),
    /// Magnetization gap between the plus and minus reversible measures on a ball.
    Gap(GapArgs),
    /// Export an exact measure table.
    NuTable(NuTableArgs),
    /// Print the single-site influence sum and the threshold where it reaches 1.
    Dv(DvArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct ModelArgs {
    /// Lattice dimension of the nearest-neighbour kernel.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// Nearest-neighbour coupling strength.
    #[arg(long = "J", default_value_t = 1.0)]
    pub coupling: f64,
}

impl ModelArgs {
    fn kernel(&self) -> Result<InteractionKernel, Failure> {
        InteractionKernel::nearest_neighbor(self.dim, self.coupling).map_err(usage)
    }

    fn rule(&self, beta: f64) -> Result<ClassCRule, Failure> {
        ClassCRule::new(beta, self.kernel()?).map_err(usage)
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Suite size: fast caps boxes at 5 sites and samples at 10^4.
    #[arg(default_value = "fast")]
    pub level: Level,
    /// Reference values file (`quantity beta=B L=R = value` per line); defaults to the built-in set.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Config file with [model], [scan] and [output] sections.
    pub config: PathBuf,
    /// Override a config entry, e.g. `--set scan.beta=0.2,0.6`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RhoArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// Horizons, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// Independent coupled runs per horizon.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GapModeArg {
    /// Exact enumeration only; larger balls are an error.
    Exact,
    /// Exact when within budget, Monte Carlo otherwise.
    Auto,
}

#[derive(Args, Debug)]
pub struct GapArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// Ball radius.
    #[arg(long = "L")]
    pub radius: u32,
    /// How to compute the gap.
    #[arg(long, value_enum, default_value_t = GapModeArg::Exact)]
    pub mode: GapModeArg,
    /// Monte Carlo samples (auto mode).
    #[arg(long, default_value_t = 2000)]
    pub mc_samples: u64,
    /// Monte Carlo burn-in steps (auto mode).
    #[arg(long, default_value_t = 200)]
    pub burn_in: u64,
    /// Monte Carlo averaging window (auto mode).
    #[arg(long, default_value_t = 100)]
    pub window: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    /// All spins +1.
    Plus,
    /// All spins -1.
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    /// Reversible measure of the dynamics.
    Nu,
    /// Gibbs measure of the associated potential.
    Gibbs,
}

#[derive(Args, Debug)]
pub struct NuTableArgs {
    /// Inverse temperature.
    #[arg(long)]
    pub beta: f64,
    /// L1 ball radius.
    #[arg(long = "L", conflicts_with = "square", required_unless_present = "square")]
    pub radius: Option<u32>,
    /// Side of a square (cube) box with corner at the origin.
    #[arg(long)]
    pub square: Option<u32>,
    /// Frozen spins outside the box.
    #[arg(long, value_enum, default_value_t = BoundaryArg::Plus)]
    pub boundary: BoundaryArg,
    /// Which measure to tabulate.
    #[arg(long, value_enum, default_value_t = MeasureArg::Nu)]
    pub measure: MeasureArg,
    /// Binary table file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table file (boxes of at most 8 sites).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct DvArgs {
    /// Also print the influence sum at this inverse temperature.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Bisection tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Check(String),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Check(_) => EXIT_FAILURE,
        }
    }
}

/// Parse `args`, run, and return the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Usage(m) => eprintln!("error: {m}"),
                Failure::Check(m) => eprintln!("{m}"),
            }
            f.code()
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let pool = Pool::new(cli.threads).map_err(usage)?;
    let seed = cli.seed;
    match &cli.command {
        Command::Verify(a) => cmd_verify(&pool, a, seed.unwrap_or(0), out),
        Command::Scan(a) => cmd_scan(&pool, a, seed, out),
        Command::Rho(a) => cmd_rho(&pool, a, seed.unwrap_or(0), out),
        Command::Gap(a) => cmd_gap(&pool, a, seed.unwrap_or(0), out),
        Command::NuTable(a) => cmd_nu_table(a, out),
        Command::Dv(a) => cmd_dv(a, out),
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::Usage(format!("output: {e}"))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_verify(pool: &Pool, a: &VerifyArgs, seed: u64, out: &mut dyn Write) -> Result<(), Failure> {
    let text = match &a.baseline {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => verify::DEFAULT_BASELINE.to_string(),
    };
    let results = verify::run_suite(pool, a.level, seed, &text);
    for r in &results {
        writeln!(out, "{r}").map_err(io)?;
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    writeln!(out, "{} of {} checks passed", results.len() - failed.len(), results.len()).map_err(io)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed: {}", failed.join(", "))))
    }
}

fn cmd_scan(pool: &Pool, a: &ScanArgs, seed: Option<u64>, out: &mut dyn Write) -> Result<(), Failure> {
    let mut raw = RawConfig::load(&a.config).map_err(usage)?;
    for o in &a.overrides {
        raw.set_override(o).map_err(usage)?;
    }
    if let Some(s) = seed {
        raw.set("scan", "seed", &s.to_string()).map_err(usage)?;
    }
    let mut cfg = raw.into_experiment().map_err(usage)?;
    if let Some(dir) = &a.out {
        cfg.out_dir = dir.clone();
    }
    let report = phase_scan(pool, &cfg.scan).map_err(usage)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| Failure::Usage(format!("{}: {e}", cfg.out_dir.display())))?;
    write_file(&cfg.out_dir.join("scan.csv"), scan_csv(&report).as_bytes())?;
    write_file(&cfg.out_dir.join("scan_summary.csv"), summary_csv(&report).as_bytes())?;
    write_file(&cfg.out_dir.join("scan.jsonl"), scan_jsonl(&cfg.scan, &report).as_bytes())?;
    let failed = report.cells.iter().filter(|c| c.result.is_err()).count();
    writeln!(out, "{} cells, {failed} failed; reports in {}", report.cells.len(), cfg.out_dir.display()).map_err(io)?;
    for s in &report.summaries {
        let lambda = s.n1.map(|(_, l)| format!("{l:.6}")).unwrap_or_else(|| "-".into());
        let m = s.spatial_fit.as_ref().map(|f| format!("{:.6}", f.rate)).unwrap_or_else(|_| "-".into());
        writeln!(out, "beta={} dv_sum={:.6} spatial_rate={m} temporal_lambda={lambda}", s.beta, s.dv_sum).map_err(io)?;
    }
    if report.any_success() {
        Ok(())
    } else {
        Err(Failure::Check("no cell succeeded".into()))
    }
}

fn cmd_rho(pool: &Pool, a: &RhoArgs, seed: u64, out: &mut dyn Write) -> Result<(), Failure> {
    let rule = a.model.rule(a.beta)?;
    if a.samples == 0 {
        return Err(usage("--samples must be at least 1"));
    }
    let key = RandomnessKey::new(seed);
    let mut csv = format!("{RHO_HEADER}\n");
    for &n in &a.n {
        let radius = u32::try_from(n).ok().and_then(|n| n.checked_mul(rule.range())).ok_or_else(|| usage("horizon too large"))?;
        let region = ball(rule.dim(), radius).map_err(usage)?;
        let e = estimate_rho(pool, &rule, &region, n, a.samples, &key.with_experiment(n)).map_err(usage)?;
        csv.push_str(&rho_row(&e, a.beta, radius, seed));
        csv.push('\n');
    }
    match &a.csv {
        Some(p) => write_file(p, csv.as_bytes()),
        None => out.write_all(csv.as_bytes()).map_err(io),
    }
}

fn cmd_gap(pool: &Pool, a: &GapArgs, seed: u64, out: &mut dyn Write) -> Result<(), Failure> {
    let rule = a.model.rule(a.beta)?;
    let mode = match a.mode {
        GapModeArg::Exact => GapMode::ExactOnly,
        GapModeArg::Auto => {
            GapMode::Auto(McOptions { samples: a.mc_samples, burn_in: a.burn_in, window: a.window, key: RandomnessKey::new(seed) })
        }
    };
    let g = gap_a(pool, &rule, a.radius, mode).map_err(usage)?;
    match g.method {
        GapMethod::Exact => writeln!(out, "gap beta={} L={} value={} method=exact", a.beta, a.radius, num(g.value)),
        GapMethod::MonteCarlo { stderr, samples, early, .. } => writeln!(
            out,
            "gap beta={} L={} value={} method=mc stderr={} samples={samples} early_window={}",
            a.beta,
            a.radius,
            num(g.value),
            num(stderr),
            num(early)
        ),
    }
    .map_err(io)
}

fn cmd_nu_table(a: &NuTableArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let rule = a.model.rule(a.beta)?;
    let region = match (a.radius, a.square) {
        (Some(r), _) => ball(rule.dim(), r).map_err(usage)?,
        (None, Some(side)) => Region::cube(Site::origin(rule.dim()).map_err(usage)?, side).map_err(usage)?,
        (None, None) => return Err(usage("one of --L or --square is required")),
    };
    let boundary = match a.boundary {
        BoundaryArg::Plus => Boundary::AllPlus,
        BoundaryArg::Minus => Boundary::AllMinus,
    };
    let table = match a.measure {
        MeasureArg::Nu => nu_table(&rule, &region, &boundary),
        MeasureArg::Gibbs => gibbs_table(&PotentialPhi::of(&rule), &region, &boundary),
    }
    .map_err(usage)?;
    if let Some(p) = &a.out {
        write_file(p, &table_io::encode(&table))?;
    }
    let csv = table_io::to_csv(&table);
    if let Some(p) = &a.csv {
        let csv = csv.as_ref().ok_or_else(|| usage(format!("CSV export is limited to {} sites", table_io::CSV_MAX_SITES)))?;
        write_file(p, csv.as_bytes())?;
    }
    writeln!(out, "sites={} states={} total={}", region.len(), table.probs().len(), num(table.total())).map_err(io)?;
    if a.out.is_none() && a.csv.is_none() {
        if let Some(csv) = csv {
            out.write_all(csv.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}

fn cmd_dv(a: &DvArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let kernel = a.model.kernel()?;
    if let Some(beta) = a.beta {
        let rule = ClassCRule::new(beta, kernel.clone()).map_err(usage)?;
        let s = rule.dv_sum();
        writeln!(out, "dv_sum beta={beta} value={} contraction={}", num(s), s < 1.0).map_err(io)?;
    }
    match dv_threshold(&kernel, a.tol).map_err(usage)? {
        Some(b) => writeln!(out, "threshold={}", num(b)),
        None => writeln!(out, "threshold=none (influence sum stays below 1)"),
    }
    .map_err(io)
}

pub fn run_to_stdout() -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    main_with(std::env::args_os(), &mut lock)
}
