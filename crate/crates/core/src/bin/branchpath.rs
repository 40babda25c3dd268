//! Command-line front end. Every subcommand reads JSON, prints JSON on
//! stdout, and exits 0 on success/PASS, 2 on FAIL, 1 on error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use branchpath::connector::connect;
use branchpath::currents::{h_mass, mass, slice};
use branchpath::decomposition::{good_decomposition, is_acyclic, remove_cycles};
use branchpath::flatnorm::{flat_norm, rasterize, TriComplex};
use branchpath::geometry::shift_grid_avoiding;
use branchpath::lab::{run_counterexample_with, run_stability, run_threshold, ExperimentConfig};
use branchpath::solver::{solve, TransportInstance};
use branchpath::{CostSpec, Cube, Point, PolyhedralCurrent, Result, SignedAtomicMeasure};

#[derive(Parser)]
#[command(name = "branchpath", version, about = "Branched transport toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal traffic path of a small instance.
    Solve {
        instance: PathBuf,
        /// Overrides the instance's Steiner budget.
        #[arg(long)]
        max_steiner: Option<usize>,
    },
    /// Dyadic connection between two positive measures of equal mass.
    Connect {
        mu: PathBuf,
        nu: PathBuf,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        alpha: f64,
    },
    /// Sup-norm slice of a current at a sphere.
    Slice {
        current: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
    },
    /// Good decomposition into weighted simple paths (cycles removed first).
    Decompose { current: PathBuf },
    /// Simplicial flat distance between two planar currents.
    Flatnorm {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        mesh: f64,
        #[arg(long, default_value_t = 0.125)]
        margin: f64,
    },
    /// Experiment harness; writes report.csv and summary.json.
    Lab {
        #[arg(value_enum)]
        experiment: Experiment,
        config: PathBuf,
        /// Output directory (default: the config's output_dir, else ".").
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Experiment {
    Counterexample,
    Threshold,
    Stability,
}

fn read<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn print(v: &serde_json::Value) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { instance, max_steiner } => {
            let inst: TransportInstance = read(&instance)?;
            let s = solve(&inst, max_steiner.unwrap_or(inst.max_steiner))?;
            print(&json!({
                "energy": s.energy,
                "optimality": s.optimality,
                "topology": s.topology,
                "current": s.current,
            }));
        }
        Command::Connect { mu, nu, k, alpha } => {
            let mu: SignedAtomicMeasure = read(&mu)?;
            let nu: SignedAtomicMeasure = read(&nu)?;
            let cost = CostSpec::power(alpha)?;
            let atoms: Vec<Point> = mu.points().into_iter().chain(nu.points()).collect();
            let q = shift_grid_avoiding(&Cube::bounding(&atoms, 0.0)?, &atoms, k)?;
            let r = connect(&mu, &nu, &q, k, &cost)?;
            print(&json!({
                "cube": q,
                "k": r.k,
                "energy": r.energy(&cost),
                "bound": r.bound,
                "sigma": r.sigma,
                "current": r.current,
            }));
        }
        Command::Slice { current, center, radius } => {
            let t: PolyhedralCurrent = read(&current)?;
            let s = slice(&t, &Point::try_new(center)?, radius)?;
            print(&json!({ "mass": s.mass(), "slice": s.measure() }));
        }
        Command::Decompose { current } => {
            let t: PolyhedralCurrent = read(&current)?;
            let acyclic = if is_acyclic(&t) { t.clone() } else { remove_cycles(&t) };
            let d = good_decomposition(&acyclic)?;
            print(&json!({
                "removed_cycle_mass": mass(&t) - mass(&acyclic),
                "total_weight": d.total_weight(),
                "paths": d.paths,
            }));
        }
        Command::Flatnorm { a, b, mesh, margin } => {
            let a: PolyhedralCurrent = read(&a)?;
            let b: PolyhedralCurrent = read(&b)?;
            let diff = a.sub(&b);
            let c = TriComplex::covering(&[&diff], mesh, margin)?;
            let f = flat_norm(&rasterize(&diff, &c)?, &c)?;
            print(&json!({
                "value": f.value,
                "mass": mass(&diff),
                "size": h_mass(&diff, &CostSpec::Size),
                "mesh": mesh,
                "squares_per_side": c.side(),
            }));
        }
        Command::Lab { experiment, config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
            let pass = match experiment {
                Experiment::Counterexample => {
                    let r = run_counterexample_with(&cfg)?;
                    r.write(&dir)?;
                    print(&serde_json::to_value(&r)?);
                    r.pass()
                }
                Experiment::Threshold => {
                    let r = run_threshold(&cfg.alpha_list, cfg.d, cfg.kmax)?;
                    r.write(&dir)?;
                    print(&serde_json::to_value(&r)?);
                    r.pass
                }
                Experiment::Stability => {
                    let r = run_stability(&cfg)?;
                    r.write(&dir)?;
                    print(&serde_json::to_value(&r)?);
                    r.pass
                }
            };
            eprintln!("{}", if pass { "PASS" } else { "FAIL" });
            return Ok(pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
