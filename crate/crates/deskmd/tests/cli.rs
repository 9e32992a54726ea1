//! Black-box tests of the command-line surface: exit codes, output files,
//! and the worker-count precedence rules.

use std::fs;
use std::path::Path;

use deskmd::cli::run_cli;
use deskmd::structio::write_structure;
use deskmd::system::MolecularSystem;

fn write_fluid(dir: &Path) -> (String, String) {
    let structure = dir.join("fluid.xyz");
    fs::write(&structure, write_structure(&MolecularSystem::argon_lattice(3, 2.4)).unwrap())
        .unwrap();
    let params = dir.join("argon.params");
    fs::write(&params, "Ar.sigma = 0.3405\nAr.epsilon = 0.996\nAr.mass = 39.948\n").unwrap();
    (structure.to_str().unwrap().into(), params.to_str().unwrap().into())
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run_cli(["deskmd", "--help"]), 0);
    assert_eq!(run_cli(["deskmd", "--version"]), 0);
    assert_eq!(run_cli(["deskmd", "dock", "--help"]), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run_cli(["deskmd"]), 1);
    assert_eq!(run_cli(["deskmd", "frobnicate"]), 1);
    assert_eq!(run_cli(["deskmd", "minimize"]), 1); // --input is required
    assert_eq!(run_cli(["deskmd", "bench", "juggle"]), 1);
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // nonexistent input file
    assert_eq!(
        run_cli([
            "deskmd", "minimize",
            "--input", dir.path().join("missing.xyz").to_str().unwrap(),
            "--out", out.to_str().unwrap(),
        ]),
        2
    );
    // pressure coupling is a hard runtime error, not a silent no-op
    let (structure, params) = write_fluid(dir.path());
    assert_eq!(
        run_cli([
            "deskmd", "nvt",
            "--input", &structure,
            "--params", &params,
            "--box-length", "2.4",
            "--steps", "10",
            "--pressure-coupling",
            "--out", out.to_str().unwrap(),
        ]),
        2
    );
}

#[test]
fn minimize_writes_expected_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (structure, params) = write_fluid(dir.path());
    let out = dir.path().join("out");
    let code = run_cli([
        "deskmd", "minimize",
        "--input", &structure,
        "--params", &params,
        "--box-length", "2.4",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.join("minimized.xyz").is_file());
    let log = fs::read_to_string(out.join("run.log")).unwrap();
    assert!(log.contains("minimize"), "run.log should record the subcommand:\n{log}");
    assert!(log.contains("fmax_tol"), "run.log should record the resolved settings");
}

#[test]
fn md_stage_writes_trajectory_and_final_structure() {
    let dir = tempfile::tempdir().unwrap();
    let (structure, params) = write_fluid(dir.path());
    let out = dir.path().join("out");
    let code = run_cli([
        "deskmd", "md",
        "--input", &structure,
        "--params", &params,
        "--box-length", "2.4",
        "--steps", "100",
        "--stride", "10",
        "--no-thermostat",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let traj = fs::read_to_string(out.join("traj.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("step,time_ps,epot_kjmol,ekin_kjmol,temperature_k"));
    assert!(lines.count() >= 10);
    assert!(out.join("final.xyz").is_file());
}

#[test]
fn bench_then_analyze_produces_scaling_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let code = run_cli([
        "deskmd", "bench", "dock",
        "--n", "5,20",
        "--sweep-workers", "1,2",
        "--reps", "2",
        "--warmup", "0",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let raw = out.join("raw.csv");
    let text = fs::read_to_string(&raw).unwrap();
    assert!(text.starts_with("stage,workload,workers,repetition,wall_seconds"));
    // 2 workloads x 2 worker counts x 2 reps
    assert_eq!(text.lines().count(), 1 + 8);

    let analyzed = dir.path().join("analysis");
    let code = run_cli([
        "deskmd", "analyze",
        "--csv", raw.to_str().unwrap(),
        "--amdahl",
        "--plots",
        "--out", analyzed.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(analyzed.join("scaling.csv").is_file());
    assert!(analyzed.join("speedup.svg").is_file());
    assert!(analyzed.join("efficiency.svg").is_file());
    assert!(analyzed.join("docking_time.svg").is_file(), "DOCK records span two workloads");
    let log = fs::read_to_string(analyzed.join("amdahl.log")).unwrap();
    assert!(log.contains("f=") && log.contains("t1="), "amdahl.log: {log}");
    let svg = fs::read_to_string(analyzed.join("speedup.svg")).unwrap();
    assert!(svg.contains("<polyline") && svg.contains("data-x="));
}

#[test]
fn workers_env_var_is_overridden_by_flag() {
    let dir = tempfile::tempdir().unwrap();
    let (structure, params) = write_fluid(dir.path());
    let ligand = dir.path().join("ligand.xyz");
    fs::write(&ligand, write_structure(&MolecularSystem::argon_pair(0.38)).unwrap()).unwrap();

    // env var applies when no flag is given, and the flag wins otherwise;
    // either way the poses are byte-identical because scoring is
    // deterministic across worker counts
    std::env::set_var(deskmd::cli::WORKERS_ENV, "3");
    let out_env = dir.path().join("env");
    let code = run_cli([
        "deskmd", "dock",
        "--receptor", &structure,
        "--ligand", ligand.to_str().unwrap(),
        "--params", &params,
        "--n", "20",
        "--out", out_env.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let log = fs::read_to_string(out_env.join("run.log")).unwrap();
    assert!(log.contains("workers = 3"), "env var should set workers:\n{log}");

    let out_flag = dir.path().join("flag");
    let code = run_cli([
        "deskmd", "dock",
        "--receptor", &structure,
        "--ligand", ligand.to_str().unwrap(),
        "--params", &params,
        "--n", "20",
        "--workers", "2",
        "--out", out_flag.to_str().unwrap(),
    ]);
    std::env::remove_var(deskmd::cli::WORKERS_ENV);
    assert_eq!(code, 0);
    let log = fs::read_to_string(out_flag.join("run.log")).unwrap();
    assert!(log.contains("workers = 2"), "flag should win over env var:\n{log}");
    assert_eq!(
        fs::read(out_env.join("poses.csv")).unwrap(),
        fs::read(out_flag.join("poses.csv")).unwrap()
    );
}
