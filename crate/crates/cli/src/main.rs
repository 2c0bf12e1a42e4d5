//! Command-line harness for the Hodge-Laplacian laboratory.
//!
//! Exit codes: 0 pass, 1 verdict fail, 2 usage error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hodgelab_cli::config::StudyConfig;
use hodgelab_cli::study;

#[derive(Parser)]
#[command(name = "hodgelab", version, about = "Mixed Hodge-Laplacian studies on approximated surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Flat key = value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Surface: sphere or torus.
    #[arg(long)]
    surface: Option<String>,
    /// Form degree k of the mixed problem.
    #[arg(long)]
    k: Option<usize>,
    /// Geometry degree s.
    #[arg(long)]
    s: Option<usize>,
    /// Element degree r.
    #[arg(long)]
    r: Option<usize>,
    /// Number of refinement levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Coarsest level of the family.
    #[arg(long)]
    base_level: Option<usize>,
    /// Spherical-harmonic degree of the manufactured solution.
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    quad_degree: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (files are skipped when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format: csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Treat the mesh itself as the exact surface (no geometric crime).
    #[arg(long)]
    exact_geometry: bool,
}

impl CommonOpts {
    fn build(&self, default_base: usize) -> anyhow::Result<StudyConfig> {
        let mut cfg = StudyConfig { base_level: default_base, ..StudyConfig::default() };
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(v) = &self.surface {
            cfg.apply_key("surface", v)?;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.s {
            cfg.s = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.base_level {
            cfg.base_level = v;
        }
        if let Some(v) = self.ell {
            cfg.ell = v;
        }
        if let Some(v) = self.quad_degree {
            cfg.quad_degree = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if let Some(v) = &self.format {
            cfg.apply_key("format", v)?;
        }
        if self.exact_geometry {
            cfg.exact_geometry = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the mesh family and write SOFF files.
    Mesh(CommonOpts),
    /// Geometry-error report across levels with fitted rates.
    Geom(CommonOpts),
    /// Solve the mixed problem at one level.
    Solve {
        #[command(flatten)]
        opts: CommonOpts,
        /// Refinement level to solve at.
        #[arg(long, default_value_t = 2)]
        level: usize,
    },
    /// Refinement study with rate fitting and a pass/fail verdict.
    Study(CommonOpts),
    /// Eigenvalue study across levels.
    Eigen {
        #[command(flatten)]
        opts: CommonOpts,
        /// Number of nonzero eigenvalues per level.
        #[arg(long, default_value_t = 6)]
        nev: usize,
    },
    /// Randomized abstract property battery.
    Abstract {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CmdError {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Runtime(e)
    }
}

fn usage(r: anyhow::Result<StudyConfig>) -> Result<StudyConfig, CmdError> {
    r.map_err(CmdError::Usage)
}

fn run() -> Result<bool, CmdError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Mesh(opts) => {
            let cfg = usage(opts.build(0))?;
            let info = study::run_mesh(&cfg)?;
            for row in &info {
                println!(
                    "level {}: V={} E={} F={} chi={} h={}",
                    row.level,
                    row.vertices,
                    row.edges,
                    row.triangles,
                    row.euler_characteristic,
                    study::fmt12(row.h)
                );
            }
            Ok(true)
        }
        Command::Geom(opts) => {
            let cfg = usage(opts.build(0))?;
            let output = study::run_geom(&cfg)?;
            print!("{}", study::geom_table(&output.rows).to_csv());
            print_verdict(&output.verdict);
            Ok(output.verdict.pass)
        }
        Command::Solve { opts, level } => {
            let cfg = usage(opts.build(level))?;
            let output = study::run_solve(&cfg, level)?;
            println!("{}", serde_json::to_string_pretty(&output).map_err(anyhow::Error::from)?);
            Ok(true)
        }
        Command::Study(opts) => {
            let cfg = usage(opts.build(1))?;
            let output = study::run_study(&cfg)?;
            print!("{}", study::study_table(&output.rows).to_csv());
            for (name, rate) in &output.fitted_rates {
                println!("rate {name} = {}", study::fmt12(*rate));
            }
            print_verdict(&output.verdict);
            Ok(output.verdict.pass)
        }
        Command::Eigen { opts, nev } => {
            let cfg = usage(opts.build(2))?;
            let output = study::run_eigen(&cfg, nev)?;
            for row in &output.rows {
                let vals: Vec<String> =
                    row.eigenvalues.iter().map(|&l| study::fmt12(l)).collect();
                println!("level {} h={} lambda=[{}]", row.level, study::fmt12(row.h), vals.join(", "));
            }
            println!("cluster rate = {}", study::fmt12(output.cluster_rate));
            print_verdict(&output.verdict);
            Ok(output.verdict.pass)
        }
        Command::Abstract { seed, trials, out } => {
            let report = study::run_abstract(seed, trials)?;
            let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
            println!("{text}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(anyhow::Error::from)?;
                std::fs::write(dir.join("abstract.json"), &text).map_err(anyhow::Error::from)?;
            }
            Ok(report.pass)
        }
    }
}

fn print_verdict(verdict: &study::Verdict) {
    for (t, f) in verdict.targets.iter().zip(&verdict.fitted) {
        let relation = if t.at_least { ">=" } else { "~" };
        println!(
            "target {} {relation} {} (tol {}): fitted {}",
            t.name,
            t.target,
            t.tolerance,
            study::fmt12(*f)
        );
    }
    println!("verdict: {}", if verdict.pass { "PASS" } else { "FAIL" });
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CmdError::Usage(err)) => {
            eprintln!("usage error: {err:#}");
            ExitCode::from(2)
        }
        Err(CmdError::Runtime(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(3)
        }
    }
}
