//! Command-line entry point wiring the pipeline together: `minimize`,
//! `nvt`, `md`, `dock`, `bench md|dock`, and `analyze`.
//!
//! Every run writes a `run.log` with the full resolved configuration into
//! the output directory. All randomized behavior is governed by `--seed`,
//! and rerunning any subcommand with identical flags and seed produces
//! byte-identical CSV outputs (timestamps are confined to the log).
//!
//! Worker-count precedence: `--workers` flag, then the `DESKMD_WORKERS`
//! environment variable, then 1.

use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::bench::{
    self, amdahl_fit, compute_scaling, records_from_csv, records_to_csv, scaling_to_csv,
    BenchStage, BenchmarkRecord,
};
use crate::docking::{dock, poses_csv, select_top_k, DockMode, DockingJob};
use crate::exec::WorkerPoolConfig;
use crate::mdsim::{
    maxwell_boltzmann_velocities, run_stage, steepest_descent_minimize, trajectory_csv,
    EMSettings, SimState, StageKind, ThermoSettings,
};
use crate::plot::{plot_docking_time, plot_scaling, PlotKind};
use crate::potential::PotentialParams;
use crate::structio::{
    apply_parameters, parse_parameter_file, parse_structure, write_structure, StructureFormat,
};
use crate::system::MolecularSystem;
use crate::{Error, Result};

pub const WORKERS_ENV: &str = "DESKMD_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "deskmd", version, about = "Desk-scale MD, docking, and scaling benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Steepest-descent energy minimization of a structure
    Minimize(MinimizeArgs),
    /// NVT equilibration (thermostat on)
    Nvt(StageArgs),
    /// Production MD (thermostat optional)
    Md(StageArgs),
    /// Rigid-body docking of a ligand into a receptor pocket
    Dock(DockArgs),
    /// Timed sweeps over workers and workloads, written as raw CSV
    Bench(BenchArgs),
    /// Scaling rows, Amdahl fit, and plots from a raw CSV
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Output directory (created if missing)
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker count (overrides DESKMD_WORKERS)
    #[arg(long)]
    workers: Option<usize>,
    /// Fixed-order reductions for bit-identical results at any worker count
    #[arg(long, default_value_t = true)]
    deterministic: bool,
    /// RNG seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct StructureInput {
    /// Structure file (.pdb or .xyz)
    #[arg(long)]
    input: PathBuf,
    /// Force-field parameter file (key.field = value lines)
    #[arg(long)]
    params: Option<PathBuf>,
    /// Cubic box edge in nm; enables periodic boundaries
    #[arg(long)]
    box_length: Option<f64>,
}

#[derive(Args, Debug)]
struct PotArgs {
    /// Pair cutoff radius in nm
    #[arg(long, default_value_t = 1.0)]
    cutoff: f64,
    /// Disable the energy shift at the cutoff
    #[arg(long)]
    no_shift: bool,
}

#[derive(Args, Debug)]
struct MinimizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    structure: StructureInput,
    #[command(flatten)]
    pot: PotArgs,
    /// Convergence threshold on the maximum force (kJ/mol/nm)
    #[arg(long, default_value_t = 1000.0)]
    fmax_tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = 50_000)]
    max_steps: usize,
}

#[derive(Args, Debug)]
struct StageArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    structure: StructureInput,
    #[command(flatten)]
    pot: PotArgs,
    /// Number of integration steps
    #[arg(long, default_value_t = 25_000)]
    steps: usize,
    /// Timestep in ps
    #[arg(long, default_value_t = 0.002)]
    dt: f64,
    /// Reference temperature in K
    #[arg(long, default_value_t = 300.0)]
    tref: f64,
    /// Thermostat coupling time in ps
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Trajectory-summary sampling stride in steps
    #[arg(long, default_value_t = 100)]
    stride: usize,
    /// Disable the thermostat (NVE); only valid for `md`
    #[arg(long)]
    no_thermostat: bool,
    /// Request constant-pressure coupling (unsupported; hard error)
    #[arg(long)]
    pressure_coupling: bool,
}

#[derive(Args, Debug)]
struct DockArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Receptor structure file
    #[arg(long)]
    receptor: PathBuf,
    /// Ligand structure file
    #[arg(long)]
    ligand: PathBuf,
    /// Force-field parameter file applied to both molecules
    #[arg(long)]
    params: Option<PathBuf>,
    /// Number of conformers
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Number of top-ranked poses to keep
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Pocket radius in nm around the receptor centroid
    #[arg(long, default_value_t = 1.5)]
    pocket_radius: f64,
    /// Include Coulomb terms in the score
    #[arg(long)]
    electrostatics: bool,
    #[command(flatten)]
    pot: PotArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// What to benchmark: md or dock
    #[arg(value_parser = ["md", "dock"])]
    target: String,
    /// Comma-separated workloads (conformers for dock, steps for md)
    #[arg(long, value_delimiter = ',', default_values_t = vec![10usize, 100, 500])]
    n: Vec<usize>,
    /// Comma-separated worker counts to sweep
    #[arg(long = "sweep-workers", value_delimiter = ',', default_values_t = vec![1usize, 2, 4, 8])]
    sweep_workers: Vec<usize>,
    /// Timed repetitions per grid point
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Untimed warmup executions per grid point
    #[arg(long, default_value_t = 1)]
    warmup: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Raw benchmark CSV (stage,workload,workers,repetition,wall_seconds)
    #[arg(long)]
    csv: PathBuf,
    /// Fit the scaling model and write amdahl.log
    #[arg(long)]
    amdahl: bool,
    /// Emit SVG plots
    #[arg(long)]
    plots: bool,
    /// Stage to analyze (EM, NVT, MD, DOCK); defaults to the first in the file
    #[arg(long)]
    stage: Option<String>,
    /// Workload to analyze; defaults to the largest present for the stage
    #[arg(long)]
    workload: Option<usize>,
}

/// Parse argv and run. Exit codes: 0 success, 1 usage error, 2 runtime
/// error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successes, everything else is usage
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Minimize(args) => cmd_minimize(args),
        Command::Nvt(args) => cmd_stage(args, StageKind::Nvt),
        Command::Md(args) => cmd_stage(args, StageKind::Md),
        Command::Dock(args) => cmd_dock(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Analyze(args) => cmd_analyze(args),
    }
}

fn resolve_workers(flag: Option<usize>) -> usize {
    flag.or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1)
        .max(1)
}

fn pool_config(common: &CommonArgs) -> WorkerPoolConfig {
    WorkerPoolConfig {
        workers: resolve_workers(common.workers),
        deterministic: common.deterministic,
    }
}

fn format_for(path: &Path) -> Result<StructureFormat> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("pdb") => Ok(StructureFormat::PdbSubset),
        Some("xyz") => Ok(StructureFormat::Xyz),
        other => Err(Error::InvalidArgument(format!(
            "cannot determine structure format from extension {other:?} of {}; use .pdb or .xyz",
            path.display()
        ))),
    }
}

fn load_structure(path: &Path, params: Option<&Path>, box_length: Option<f64>) -> Result<MolecularSystem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let mut system = parse_structure(&text, format_for(path)?)?.system;
    if let Some(p) = params {
        let ptext = std::fs::read_to_string(p)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", p.display())))?;
        let table = parse_parameter_file(&ptext)?;
        apply_parameters(&mut system, &table);
    }
    system.box_length = box_length;
    Ok(system)
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_run_log(dir: &Path, lines: &[String]) -> Result<()> {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut log = format!("# deskmd run log (unix time {ts})\n");
    for l in lines {
        log.push_str(l);
        log.push('\n');
    }
    write_out(dir, "run.log", &log)
}

fn cmd_minimize(args: MinimizeArgs) -> Result<()> {
    let cfg = pool_config(&args.common);
    let system = load_structure(
        &args.structure.input,
        args.structure.params.as_deref(),
        args.structure.box_length,
    )?;
    let pot = PotentialParams {
        cutoff: args.pot.cutoff,
        periodic: args.structure.box_length.is_some(),
        shift_at_cutoff: !args.pot.no_shift,
    };
    system.validate(Some(pot.cutoff))?;
    let em = EMSettings { fmax_tol: args.fmax_tol, max_steps: args.max_steps, ..Default::default() };
    let (minimized, report, _) = steepest_descent_minimize(&system, &pot, &em, &cfg)?;
    write_out(&args.common.out, "minimized.xyz", &write_structure(&minimized)?)?;
    write_run_log(
        &args.common.out,
        &[
            "subcommand = minimize".to_string(),
            format!("input = {}", args.structure.input.display()),
            format!("workers = {}", cfg.workers),
            format!("deterministic = {}", cfg.deterministic),
            format!("cutoff_nm = {}", pot.cutoff),
            format!("fmax_tol = {}", em.fmax_tol),
            format!("max_steps = {}", em.max_steps),
            format!("status = {:?}", report.status),
            format!("steps_taken = {}", report.steps_taken),
            format!("final_energy_kjmol = {}", report.final_energy),
            format!("final_fmax = {}", report.final_fmax),
            format!("wall_seconds = {}", report.wall_seconds),
        ],
    )?;
    println!(
        "minimize: {:?} after {} iterations, E = {:.6} kJ/mol, Fmax = {:.3} kJ/mol/nm",
        report.status, report.steps_taken, report.final_energy, report.final_fmax
    );
    Ok(())
}

fn cmd_stage(args: StageArgs, stage: StageKind) -> Result<()> {
    let cfg = pool_config(&args.common);
    let system = load_structure(
        &args.structure.input,
        args.structure.params.as_deref(),
        args.structure.box_length,
    )?;
    let pot = PotentialParams {
        cutoff: args.pot.cutoff,
        periodic: args.structure.box_length.is_some(),
        shift_at_cutoff: !args.pot.no_shift,
    };
    system.validate(Some(pot.cutoff))?;
    let thermo = ThermoSettings {
        t_ref: args.tref,
        tau: args.tau,
        dt: args.dt,
        n_steps: args.steps,
        sample_stride: args.stride,
        pressure_coupling: args.pressure_coupling,
        ..Default::default()
    };
    let thermostat_on = match stage {
        StageKind::Nvt => true,
        _ => !args.no_thermostat,
    };
    let mut state = SimState::from_system(&system);
    maxwell_boltzmann_velocities(&mut state, args.tref, args.common.seed);
    let (final_state, report, rows) =
        run_stage(&system, state, stage, &thermo, &pot, thermostat_on, None, &cfg)?;
    write_out(&args.common.out, "traj.csv", &trajectory_csv(&rows))?;
    write_out(&args.common.out, "final.xyz", &write_structure(&final_state.apply_to(&system))?)?;
    write_run_log(
        &args.common.out,
        &[
            format!("subcommand = {stage}"),
            format!("input = {}", args.structure.input.display()),
            format!("seed = {}", args.common.seed),
            format!("workers = {}", cfg.workers),
            format!("steps = {}", thermo.n_steps),
            format!("dt_ps = {}", thermo.dt),
            format!("tref_k = {}", thermo.t_ref),
            format!("tau_ps = {}", thermo.tau),
            format!("thermostat = {}", thermostat_on),
            format!("mean_temperature_k = {:?}", report.mean_temperature),
            format!("final_energy_kjmol = {}", report.final_energy),
            format!("wall_seconds = {}", report.wall_seconds),
        ],
    )?;
    println!(
        "{stage}: {} steps, mean T = {}, E = {:.6} kJ/mol",
        report.steps_taken,
        report
            .mean_temperature
            .map(|t| format!("{t:.1} K"))
            .unwrap_or_else(|| "n/a".into()),
        report.final_energy
    );
    Ok(())
}

fn cmd_dock(args: DockArgs) -> Result<()> {
    let workers = resolve_workers(args.common.workers);
    let receptor = load_structure(&args.receptor, args.params.as_deref(), None)?;
    let ligand = load_structure(&args.ligand, args.params.as_deref(), None)?;
    let mut job = DockingJob::new(receptor, ligand, args.n, args.common.seed);
    job.pocket_radius = args.pocket_radius;
    job.electrostatics_on = args.electrostatics;
    job.pot = PotentialParams {
        cutoff: args.pot.cutoff,
        periodic: false,
        shift_at_cutoff: !args.pot.no_shift,
    };
    let mode = if workers > 1 { DockMode::Parallel } else { DockMode::Sequential };
    let result = dock(&job, workers, mode)?;
    let (top, truncated) = select_top_k(&result.poses, args.top)?;
    write_out(&args.common.out, "poses.csv", &poses_csv(&result.poses))?;
    write_out(&args.common.out, "ranked.csv", &poses_csv(&top))?;
    write_run_log(
        &args.common.out,
        &[
            "subcommand = dock".to_string(),
            format!("receptor = {}", args.receptor.display()),
            format!("ligand = {}", args.ligand.display()),
            format!("n_conformers = {}", args.n),
            format!("seed = {}", job.seed),
            format!("workers = {workers}"),
            format!("pocket_center = {:?}", job.pocket_center),
            format!("pocket_radius_nm = {}", job.pocket_radius),
            format!("electrostatics = {}", job.electrostatics_on),
            format!("clash_count = {}", result.clash_count),
            format!("top_k = {} (truncated = {truncated})", args.top),
            format!("wall_seconds = {}", result.wall_seconds),
        ],
    )?;
    println!(
        "dock: {} conformers, {} clashes, best score {:.6} kJ/mol, {:.3} s",
        args.n,
        result.clash_count,
        top.first().map(|p| p.score).unwrap_or(f64::NAN),
        result.wall_seconds
    );
    Ok(())
}

/// Built-in synthetic docking workload used by `bench dock`: an argon
/// cluster receptor and a small rigid ligand.
pub fn synthetic_dock_job(n_conformers: usize, seed: u64) -> DockingJob {
    let mut receptor = MolecularSystem::argon_lattice(6, 2.4);
    receptor.box_length = None;
    let mut ligand = MolecularSystem::argon_lattice(2, 0.8);
    ligand.box_length = None;
    for (i, a) in ligand.atoms.iter_mut().enumerate() {
        a.id = i;
    }
    DockingJob::new(receptor, ligand, n_conformers, seed)
}

fn checksum_f64s<I: IntoIterator<Item = f64>>(values: I) -> u64 {
    // FNV-1a over the raw bit patterns
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    h
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let stage = match args.target.as_str() {
        "md" => BenchStage::Md,
        _ => BenchStage::Dock,
    };
    let mut records: Vec<BenchmarkRecord> = Vec::new();
    for &workload in &args.n {
        for &workers in &args.sweep_workers {
            let batch = match stage {
                BenchStage::Dock => {
                    let job = synthetic_dock_job(workload, args.common.seed);
                    let mode = if workers > 1 { DockMode::Parallel } else { DockMode::Sequential };
                    bench::measure(stage, workload, workers, args.reps, args.warmup, || {
                        let res = dock(&job, workers, mode)?;
                        Ok(checksum_f64s(res.poses.iter().map(|p| p.score)))
                    })?
                }
                _ => {
                    let system = MolecularSystem::argon_lattice(4, 2.2);
                    let pot = PotentialParams { periodic: true, ..Default::default() };
                    let thermo = ThermoSettings {
                        n_steps: workload,
                        sample_stride: 0,
                        ..Default::default()
                    };
                    let cfg = WorkerPoolConfig {
                        workers,
                        deterministic: args.common.deterministic,
                    };
                    bench::measure(stage, workload, workers, args.reps, args.warmup, || {
                        let mut state = SimState::from_system(&system);
                        maxwell_boltzmann_velocities(&mut state, 300.0, args.common.seed);
                        let (final_state, _, _) = run_stage(
                            &system,
                            state,
                            StageKind::Md,
                            &thermo,
                            &pot,
                            true,
                            None,
                            &cfg,
                        )?;
                        Ok(checksum_f64s(
                            final_state.positions.iter().flat_map(|p| [p.x, p.y, p.z]),
                        ))
                    })?
                }
            };
            records.extend(batch);
        }
    }
    write_out(&args.common.out, "raw.csv", &records_to_csv(&records))?;
    write_run_log(
        &args.common.out,
        &[
            format!("subcommand = bench {}", args.target),
            format!("workloads = {:?}", args.n),
            format!("workers_sweep = {:?}", args.sweep_workers),
            format!("reps = {}", args.reps),
            format!("warmup = {}", args.warmup),
            format!("seed = {}", args.common.seed),
            format!("records = {}", records.len()),
        ],
    )?;
    println!("bench {}: {} records -> {}", args.target, records.len(), args.common.out.join("raw.csv").display());
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.csv)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", args.csv.display())))?;
    let records = records_from_csv(&text)?;
    if records.is_empty() {
        return Err(Error::InvalidArgument("raw CSV contains no records".into()));
    }
    let stage = match &args.stage {
        Some(s) => s.parse::<BenchStage>()?,
        None => records[0].stage,
    };
    let workload = match args.workload {
        Some(w) => w,
        None => records
            .iter()
            .filter(|r| r.stage == stage)
            .map(|r| r.workload)
            .max()
            .ok_or_else(|| Error::InvalidArgument(format!("no records for stage {stage}")))?,
    };
    let selected: Vec<BenchmarkRecord> = records
        .iter()
        .filter(|r| r.stage == stage && r.workload == workload)
        .cloned()
        .collect();
    let rows = compute_scaling(&selected)?;
    write_out(&args.common.out, "scaling.csv", &scaling_to_csv(&rows))?;
    let mut log_lines = vec![
        format!("subcommand = analyze"),
        format!("csv = {}", args.csv.display()),
        format!("stage = {stage}"),
        format!("workload = {workload}"),
        format!("rows = {}", rows.len()),
    ];
    if args.amdahl {
        let fit = amdahl_fit(&rows)?;
        write_out(&args.common.out, "amdahl.log", &format!("{}\n", fit.log_line()))?;
        log_lines.push(format!("amdahl: {}", fit.log_line()));
        println!("amdahl: {}", fit.log_line());
    }
    if args.plots {
        let label = format!("{stage} n={workload}");
        write_out(
            &args.common.out,
            PlotKind::Speedup.file_name(),
            &plot_scaling(&label, &rows, PlotKind::Speedup)?,
        )?;
        write_out(
            &args.common.out,
            PlotKind::Efficiency.file_name(),
            &plot_scaling(&label, &rows, PlotKind::Efficiency)?,
        )?;
        let mut plot_files = 2;
        let dock_records: Vec<BenchmarkRecord> =
            records.iter().filter(|r| r.stage == BenchStage::Dock).cloned().collect();
        let dock_workloads: std::collections::HashSet<usize> =
            dock_records.iter().map(|r| r.workload).collect();
        if dock_workloads.len() > 1 {
            write_out(
                &args.common.out,
                PlotKind::DockingTime.file_name(),
                &plot_docking_time(&dock_records)?,
            )?;
            plot_files += 1;
        }
        log_lines.push(format!("plot_files = {plot_files}"));
    }
    write_run_log(&args.common.out, &log_lines)?;
    let mut summary = String::new();
    for r in &rows {
        let _ = writeln!(
            summary,
            "p={} T={:.4}s S={:.3} E={:.3}",
            r.workers, r.median_seconds, r.speedup, r.efficiency
        );
    }
    print!("{summary}");
    Ok(())
}
