//! `pubcultures replicator`: trajectories, equilibria, bifurcation scans,
//! and synthetic ratio samples from the publishing-choice game.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use pubcultures::replicator::{
    bifurcation_scan, find_equilibria, integrate, synthesize_rho_samples, write_bifurcation_csv,
    write_trajectory_csv, ReplicatorSystem,
};

use super::Format;
use crate::commands::correlate::manifest_path;
use crate::manifest::RunManifest;
use crate::{CliError, GlobalArgs};

#[derive(Subcommand, Debug)]
pub enum ReplicatorCommand {
    /// Integrate the cooperator fraction from omega0
    Trajectory(TrajectoryArgs),
    /// Fixed points and their stability for one (lambda, k)
    Equilibria(EquilibriaArgs),
    /// Equilibria across a lambda grid
    Bifurcation(BifurcationArgs),
    /// Draw bimodal ratio samples from a population state
    Synthesize(SynthesizeArgs),
}

#[derive(Args, Debug)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub k: f64,
    #[arg(long)]
    pub omega0: f64,
    #[arg(long, default_value_t = 200.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EquilibriaArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BifurcationArgs {
    #[arg(long)]
    pub lambda_min: f64,
    #[arg(long)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long)]
    pub k: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// Fraction of the population in the high-ratio peak
    #[arg(long)]
    pub omega_coop: f64,
    #[arg(long, default_value_t = 0.10)]
    pub low_mu: f64,
    #[arg(long, default_value_t = 0.03)]
    pub low_sigma: f64,
    #[arg(long, default_value_t = 0.30)]
    pub high_mu: f64,
    #[arg(long, default_value_t = 0.05)]
    pub high_sigma: f64,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(global: &GlobalArgs, command: &ReplicatorCommand) -> Result<(), CliError> {
    match command {
        ReplicatorCommand::Trajectory(args) => trajectory(global, args),
        ReplicatorCommand::Equilibria(args) => equilibria(global, args),
        ReplicatorCommand::Bifurcation(args) => bifurcation(global, args),
        ReplicatorCommand::Synthesize(args) => synthesize(global, args),
    }
}

fn trajectory(global: &GlobalArgs, args: &TrajectoryArgs) -> Result<(), CliError> {
    let system = ReplicatorSystem::new(args.lambda, args.k)?;
    let trajectory = integrate(args.omega0, &system, args.t_end, args.step)?;
    match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory_csv(&trajectory, &mut buf)?;
            std::fs::write(&args.out, buf)?;
        }
        Format::Json => write_json(&args.out, &trajectory)?,
    }
    println!(
        "integrated to t={}: omega={:.6}",
        args.t_end,
        trajectory.final_omega()
    );
    let parameters = BTreeMap::from([
        ("lambda".to_string(), args.lambda.to_string()),
        ("k".to_string(), args.k.to_string()),
        ("omega0".to_string(), args.omega0.to_string()),
        ("t_end".to_string(), args.t_end.to_string()),
        ("step".to_string(), args.step.to_string()),
    ]);
    write_manifest("replicator trajectory", parameters, global, &args.out)
}

fn equilibria(global: &GlobalArgs, args: &EquilibriaArgs) -> Result<(), CliError> {
    let system = ReplicatorSystem::new(args.lambda, args.k)?;
    let points = find_equilibria(&system);
    write_json(&args.out, &points)?;
    for eq in &points {
        println!(
            "omega={:.6} {} (f'={:+.4})",
            eq.omega, eq.stability, eq.derivative
        );
    }
    let parameters = BTreeMap::from([
        ("lambda".to_string(), args.lambda.to_string()),
        ("k".to_string(), args.k.to_string()),
    ]);
    write_manifest("replicator equilibria", parameters, global, &args.out)
}

fn bifurcation(global: &GlobalArgs, args: &BifurcationArgs) -> Result<(), CliError> {
    let scan = bifurcation_scan(args.lambda_min, args.lambda_max, args.steps, args.k)?;
    match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_bifurcation_csv(&scan, &mut buf)?;
            std::fs::write(&args.out, buf)?;
        }
        Format::Json => write_json(&args.out, &scan)?,
    }
    let interior = scan.iter().filter(|p| p.equilibria.len() == 3).count();
    println!(
        "scanned {} lambda values in [{}, {}]: {interior} with an interior equilibrium",
        args.steps, args.lambda_min, args.lambda_max
    );
    let parameters = BTreeMap::from([
        ("lambda_min".to_string(), args.lambda_min.to_string()),
        ("lambda_max".to_string(), args.lambda_max.to_string()),
        ("steps".to_string(), args.steps.to_string()),
        ("k".to_string(), args.k.to_string()),
    ]);
    write_manifest("replicator bifurcation", parameters, global, &args.out)
}

fn synthesize(global: &GlobalArgs, args: &SynthesizeArgs) -> Result<(), CliError> {
    let samples = synthesize_rho_samples(
        args.omega_coop,
        (args.low_mu, args.low_sigma),
        (args.high_mu, args.high_sigma),
        args.n,
        global.seed,
    )?;
    match global.format {
        Format::Csv => {
            let mut buf = String::from("rho\n");
            for s in &samples {
                buf.push_str(&format!("{s}\n"));
            }
            std::fs::write(&args.out, buf)?;
        }
        Format::Json => write_json(&args.out, &samples)?,
    }
    println!("wrote {} samples to {}", samples.len(), args.out.display());
    let parameters = BTreeMap::from([
        ("omega_coop".to_string(), args.omega_coop.to_string()),
        ("low_mu".to_string(), args.low_mu.to_string()),
        ("low_sigma".to_string(), args.low_sigma.to_string()),
        ("high_mu".to_string(), args.high_mu.to_string()),
        ("high_sigma".to_string(), args.high_sigma.to_string()),
        ("n".to_string(), args.n.to_string()),
    ]);
    write_manifest("replicator synthesize", parameters, global, &args.out)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut body = serde_json::to_vec_pretty(value)?;
    body.push(b'\n');
    std::fs::write(path, body)?;
    Ok(())
}

fn write_manifest(
    command: &str,
    parameters: BTreeMap<String, String>,
    global: &GlobalArgs,
    out: &Path,
) -> Result<(), CliError> {
    RunManifest::new(command, parameters, global.seed, "none".to_string())
        .write(&manifest_path(out))
}
