//! Command-line front end for the phase-estimation campaigns.
//!
//! Exit status: 0 success, 1 a reported check failed, 2 invalid usage or
//! configuration, 3 numerical or I/O failure, 4 unreliable campaign.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use homodyne_lab::config::{RuleKind, RunConfig};
use homodyne_lab::experiments::{
    bound_table, convergence_trace, header, scaling_study, trace_flatness, write_trace_csv,
};
use homodyne_lab::fock;
use homodyne_lab::homodyne::{
    central_peak_mass, cramer_rao_bound, fisher_information, fisher_leading_order, squeezed_fisher,
    FisherConfig,
};
use homodyne_lab::sampler::{sample, SeedSpec};
use homodyne_lab::{DensityMode, Error, ProbeSpec, TabulatedDensity};

const TABLE_NBARS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
const DEFAULT_NU: f64 = 0.05;
const DEFAULT_TRIALS: usize = 100_000;

#[derive(Parser)]
#[command(name = "homodyne-lab", version, about = "Single-shot phase estimation with a vacuum/squeezed probe")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Single-shot rmse against the Heisenberg and Cramér-Rao bounds (table1.csv).
    Table1,
    /// rmse against total photon number with a power-law fit (scaling.csv, scaling_fit.json).
    Scaling,
    /// rmse on growing prefixes of one trial stream (convergence.csv).
    Convergence,
    /// Tabulated homodyne density (density.csv).
    Density,
    /// Classical and quantum Fisher information with the associated bounds.
    Fisher,
    /// Raw homodyne outcomes (samples.csv).
    Sample {
        /// Number of outcomes.
        #[arg(long, default_value_t = 1000)]
        count: usize,
    },
    /// Number-basis cross-checks of every closed form.
    Validate,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    /// Photon budget, or a comma-separated list.
    #[arg(long, global = true, allow_hyphen_values = true)]
    nbar: Option<String>,
    /// ν for the constant rule, c in ν = c/nbar for the reciprocal rule.
    #[arg(long, global = true, allow_hyphen_values = true)]
    nu: Option<String>,
    #[arg(long, global = true, value_parser = ["constant", "reciprocal"])]
    nu_rule: Option<String>,
    /// Outcomes per estimate.
    #[arg(long, global = true)]
    m: Option<String>,
    #[arg(long, global = true, value_parser = ["first-order", "exact"])]
    mode: Option<String>,
    /// Density used by the likelihood when it differs from the sampled one.
    #[arg(long, global = true, value_parser = ["first-order", "exact"])]
    inference_mode: Option<String>,
    /// True phase.
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Half-width of the phase search window.
    #[arg(long, global = true)]
    window: Option<String>,
    /// Comma-separated trial counts for the convergence trace.
    #[arg(long, global = true)]
    checkpoints: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<String>,
    /// Omit the `# generated` line from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

impl Common {
    fn run_config(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags = [
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("nbar", &self.nbar),
            ("nu", &self.nu),
            ("nu_rule", &self.nu_rule),
            ("m", &self.m),
            ("mode", &self.mode),
            ("inference_mode", &self.inference_mode),
            ("phi", &self.phi),
            ("window", &self.window),
            ("checkpoints", &self.checkpoints),
            ("workers", &self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.no_timestamp {
            cfg.timestamp = false;
        }
        Ok(cfg)
    }
}

enum Failure {
    Check(String),
    Usage(String),
    Runtime(String),
    Unreliable(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Files are rendered in memory and written only once a command succeeded
/// in computing them.
struct Outputs {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: &'static str, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn flush(self, cfg: &RunConfig) -> Result<(), Failure> {
        if self.files.is_empty() {
            return Ok(());
        }
        fs::create_dir_all(&cfg.out)?;
        for (name, bytes) in self.files {
            let path = cfg.out.join(name);
            fs::write(&path, bytes)?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .common
        .run_config()
        .map_err(Failure::from)
        .and_then(|cfg| run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Unreliable(msg)) => {
            eprintln!("unreliable: {msg}");
            ExitCode::from(4)
        }
    }
}

fn run(command: &Command, cfg: &RunConfig) -> Outcome {
    match command {
        Command::Table1 => table1(cfg),
        Command::Scaling => scaling(cfg),
        Command::Convergence => convergence(cfg),
        Command::Density => density(cfg),
        Command::Fisher => fisher(cfg),
        Command::Sample { count } => samples(cfg, *count),
        Command::Validate => validate(),
    }
}

fn table1(cfg: &RunConfig) -> Outcome {
    let nbars = cfg.nbars_or(&TABLE_NBARS);
    let template = cfg.campaign(cfg.rule(RuleKind::Constant, DEFAULT_NU), &nbars, DEFAULT_TRIALS)?;
    let table = bound_table(&template, &nbars)?;

    println!(
        "{:>6} {:>9} {:>12} {:>12} {:>10} {:>10} {:>9}",
        "nbar", "nu", "mean", "rmse", "stderr", "1/(2NT)", "CR"
    );
    for r in &table.rows {
        println!(
            "{:>6.2} {:>9.5} {:>12.3e} {:>12.5} {:>10.2e} {:>10.4} {:>9.5}",
            r.nbar, r.nu, r.mean_estimate, r.rmse, r.rmse_stderr, r.heisenberg, r.cr_bound
        );
    }
    let mut out = Outputs::new();
    let mut csv = Vec::new();
    table.write_csv(&mut csv, cfg.timestamp)?;
    out.add("table1.csv", csv);
    out.flush(cfg)?;

    if let Some(r) = table.rows.iter().find(|r| r.unreliable) {
        return Err(Failure::Unreliable(format!(
            "nbar = {}: {:.1}% of estimates hit the search window edge",
            r.nbar,
            100.0 * r.boundary_fraction
        )));
    }
    if !table.all_beat_heisenberg() {
        return Err(Failure::Check("not every row is below the Heisenberg bound".into()));
    }
    Ok(())
}

fn scaling(cfg: &RunConfig) -> Outcome {
    let nbars = cfg.nbars_or(&TABLE_NBARS);
    if nbars.len() < 3 {
        return Err(Failure::Usage(format!(
            "a scaling fit needs at least 3 nbar values, got {}",
            nbars.len()
        )));
    }
    let template = cfg.campaign(cfg.rule(RuleKind::Reciprocal, DEFAULT_NU), &nbars, DEFAULT_TRIALS)?;
    let fit = scaling_study(&template, &nbars)?;
    println!("{:>6} {:>10} {:>10} {:>12} {:>10}", "nbar", "nu", "NT", "rmse", "stderr");
    for p in &fit.points {
        println!("{:>6.2} {:>10.5} {:>10.2} {:>12.6} {:>10.2e}", p.nbar, p.nu, p.nt, p.rmse, p.stderr);
    }
    println!(
        "rmse = ({:.5} ± {:.5}) / NT^({:.4} ± {:.4})",
        fit.fit.prefactor, fit.fit.prefactor_err, fit.fit.exponent, fit.fit.exponent_err
    );
    println!(
        "weighted: ({:.5} ± {:.5}) / NT^({:.4} ± {:.4})",
        fit.weighted.prefactor, fit.weighted.prefactor_err, fit.weighted.exponent, fit.weighted.exponent_err
    );
    let mut out = Outputs::new();
    let mut csv = Vec::new();
    fit.write_csv(&mut csv, cfg.timestamp)?;
    out.add("scaling.csv", csv);
    let mut json = Vec::new();
    fit.write_json(&mut json)?;
    out.add("scaling_fit.json", json);
    out.flush(cfg)
}

fn convergence(cfg: &RunConfig) -> Outcome {
    let nbars = cfg.nbars_or(&TABLE_NBARS[..1]);
    let template = cfg.campaign(cfg.rule(RuleKind::Constant, DEFAULT_NU), &nbars[..1], DEFAULT_TRIALS)?;
    let checkpoints = match &cfg.checkpoints {
        Some(c) => c.clone(),
        None => {
            let mut c: Vec<usize> = [1_000, 2_000, 5_000, 10_000, 20_000, 50_000]
                .into_iter()
                .filter(|&k| k < template.trials)
                .collect();
            c.push(template.trials);
            c
        }
    };
    let trace = convergence_trace(&template, &checkpoints)?;
    println!("{:>10} {:>12} {:>10}", "trials", "rmse", "stderr");
    for p in &trace {
        println!("{:>10} {:>12.6} {:>10.2e}", p.trials, p.rmse, p.rmse_stderr);
    }
    let mut out = Outputs::new();
    let mut csv = Vec::new();
    write_trace_csv(&trace, &mut csv, cfg.timestamp)?;
    out.add("convergence.csv", csv);
    out.flush(cfg)?;
    if let Some(flat) = trace_flatness(&trace) {
        println!("relative change over the last decade: {:.3}%", 100.0 * flat);
        if flat >= 0.02 {
            return Err(Failure::Check(format!("trace not flat: {:.3}% change", 100.0 * flat)));
        }
    }
    Ok(())
}

fn density(cfg: &RunConfig) -> Outcome {
    let nbar = cfg.nbars_or(&[25.0])[0];
    let nu = cfg.nu.unwrap_or(DEFAULT_NU);
    let mode = cfg.mode.unwrap_or(DensityMode::FirstOrder);
    let spec = ProbeSpec::build(nbar, nu)?;
    let d = TabulatedDensity::tabulate(&spec, cfg.phi, mode, &cfg.grid)?;
    println!("nbar {nbar}, nu {nu}, phi {}, mode {mode}", cfg.phi);
    println!("  mu = {:.6}, <0|xi> = {:.6}, nxi = {:.3}", spec.mu, spec.overlap, spec.squeezed.nxi());
    println!("  grid points {}, step {:.3e}", d.grid().len(), d.step());
    println!("  raw mass {:.8}, clamped mass {:.8}", d.raw_mass, d.clamped_mass);
    println!("  mean {:.6e}, variance {:.6}", d.mean(), d.variance());
    if let Ok(peak) = central_peak_mass(&spec) {
        println!("  central peak mass {peak:.5}");
    }
    let mut out = Outputs::new();
    let mut csv = Vec::new();
    header(&mut csv, cfg.timestamp)?;
    d.write_csv(&mut csv)?;
    out.add("density.csv", csv);
    out.flush(cfg)
}

fn fisher(cfg: &RunConfig) -> Outcome {
    let nbars = cfg.nbars_or(&TABLE_NBARS[..1]);
    let nu = cfg.nu.unwrap_or(DEFAULT_NU);
    let mode = cfg.mode.unwrap_or(DensityMode::Exact);
    let fc = FisherConfig {
        grid: cfg.grid,
        ..FisherConfig::default()
    };
    let specs = nbars
        .iter()
        .map(|&n| ProbeSpec::build(n, nu))
        .collect::<Result<Vec<_>, _>>()?;
    for spec in &specs {
        let report = fisher_information(spec, cfg.phi, mode, &fc)?;
        let f = report.value;
        let qfi = spec.quantum_fisher();
        println!("nbar {}, nu {}, phi {}, mode {mode}", spec.nbar, spec.nu, cfg.phi);
        println!("  F               = {f:.6}  (coarse grid {:.6})", report.coarse_value);
        if spec.mu == 0.0 {
            let sq = squeezed_fisher(spec);
            println!("  ybar²/ΔX²       = {sq:.6}  ratio {:.5}", f / sq);
            println!("  4 nbar²         = {:.6}  ratio {:.5}", 4.0 * spec.nbar * spec.nbar, f / (4.0 * spec.nbar * spec.nbar));
        } else {
            let lead = fisher_leading_order(spec);
            println!("  4 nbar²/ν²      = {lead:.6}  ratio {:.5}", f / lead);
        }
        let q_lead = if spec.mu == 0.0 { 6.0 } else { 10.0 / (spec.nu * spec.nu) } * spec.nbar * spec.nbar;
        println!("  quantum F_Q     = {qfi:.6}  (leading order {q_lead:.6})");
        println!("  1/sqrt(m F)     = {:.6e}  (m = {})", cramer_rao_bound(f, cfg.m)?, cfg.m);
        println!("  ν/(2√m nbar)    = {:.6e}", spec.nu / (2.0 * (cfg.m as f64).sqrt() * spec.nbar));
        println!("  1/(2 m nbar)    = {:.6e}", 1.0 / (2.0 * cfg.m as f64 * spec.nbar));
    }
    Ok(())
}

fn samples(cfg: &RunConfig, count: usize) -> Outcome {
    if count == 0 {
        return Err(Failure::Usage("count must be at least 1".into()));
    }
    let nbar = cfg.nbars_or(&TABLE_NBARS[..1])[0];
    let nu = cfg.nu.unwrap_or(DEFAULT_NU);
    let mode = cfg.mode.unwrap_or(DensityMode::FirstOrder);
    let spec = ProbeSpec::build(nbar, nu)?;
    let d = TabulatedDensity::tabulate(&spec, cfg.phi, mode, &cfg.grid)?;
    let xs = sample(&d, SeedSpec::new(cfg.seed, 0), count);
    let mut csv = Vec::new();
    header(&mut csv, cfg.timestamp)?;
    writeln!(csv, "x")?;
    for x in &xs {
        writeln!(csv, "{x:.16e}")?;
    }
    let mut out = Outputs::new();
    out.add("samples.csv", csv);
    out.flush(cfg)
}

fn validate() -> Outcome {
    let checks = fock::validate()?;
    let mut failed = 0;
    for c in &checks {
        println!(
            "{} {:<40} error {:.3e} (tolerance {:.0e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.error,
            c.tolerance
        );
        failed += usize::from(!c.pass);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} oracle checks failed")));
    }
    Ok(())
}
