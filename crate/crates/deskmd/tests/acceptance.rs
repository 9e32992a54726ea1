//! End-to-end acceptance suite. Each test checks one headline property of
//! the engine and prints a PASS line; a failed assertion reads as FAIL in
//! the cargo output.
//!
//! Criteria that compare parallel and sequential wall time only apply on a
//! host with at least 4 hardware threads and are reported as SKIP below
//! that.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use deskmd::bench::{amdahl_fit, amdahl_model_times, compute_scaling, records_from_csv, records_to_csv, BenchStage, BenchmarkRecord, ScalingRow};
use deskmd::cli::synthetic_dock_job;
use deskmd::docking::{dock, DockMode};
use deskmd::exec::WorkerPoolConfig;
use deskmd::geom::Vec3;
use deskmd::mdsim::{
    maxwell_boltzmann_velocities, run_stage, steepest_descent_minimize, EMSettings, SimState,
    StageKind, StageStatus, ThermoSettings,
};
use deskmd::potential::{max_force_norm, system_energy_forces, PotentialParams};
use deskmd::structio::{parse_structure, write_structure, StructureFormat};
use deskmd::system::{Atom, MolecularSystem};
use deskmd::units::{ARGON_EPSILON, ARGON_SIGMA};

fn pass(criterion: &str, detail: &str) {
    println!("ACCEPTANCE {criterion}: PASS ({detail})");
}

fn skip(criterion: &str, detail: &str) {
    println!("ACCEPTANCE {criterion}: SKIP ({detail})");
}

fn hardware_threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Random LJ+Coulomb system with a minimum-separation guard so forces stay
/// finite.
fn random_charged_system(n: usize, seed: u64) -> MolecularSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions: Vec<Vec3> = Vec::with_capacity(n);
    while positions.len() < n {
        let p = Vec3::new(
            rng.gen_range(0.0..2.5),
            rng.gen_range(0.0..2.5),
            rng.gen_range(0.0..2.5),
        );
        if positions.iter().all(|q| (*q - p).norm() > 0.25) {
            positions.push(p);
        }
    }
    let atoms = positions
        .into_iter()
        .enumerate()
        .map(|(id, position)| Atom {
            id,
            name: "Ar".into(),
            element: "Ar".into(),
            mass: 39.948,
            charge: if id % 2 == 0 { 0.2 } else { -0.2 },
            lj_sigma: ARGON_SIGMA,
            lj_epsilon: ARGON_EPSILON,
            position,
        })
        .collect();
    MolecularSystem::new(atoms, None, "random charged gas")
}

#[test]
fn criterion_1_docking_sequential_parallel_equivalence() {
    let start = Instant::now();
    for n in [10usize, 100, 500] {
        let job = synthetic_dock_job(n, 42);
        let seq = dock(&job, 1, DockMode::Sequential).unwrap();
        for workers in [2usize, 4, 8] {
            let par = dock(&job, workers, DockMode::Parallel).unwrap();
            assert_eq!(seq.poses.len(), par.poses.len());
            for (a, b) in seq.poses.iter().zip(&par.poses) {
                assert_eq!(a.score.to_bits(), b.score.to_bits(), "n={n} workers={workers}");
                assert_eq!(a.pose, b.pose);
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1} s");
    pass("1 docking equivalence", &format!("n in {{10,100,500}}, workers in {{2,4,8}}, bit-identical, {elapsed:.1} s"));
}

#[test]
fn criterion_2_docking_scaling_trend() {
    // sequential wall time grows monotonically with n regardless of host
    let median_seq = |n: usize| -> f64 {
        let job = synthetic_dock_job(n, 42);
        let mut times: Vec<f64> = (0..3)
            .map(|_| {
                let r = dock(&job, 1, DockMode::Sequential).unwrap();
                r.wall_seconds
            })
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times[1]
    };
    let t10 = median_seq(10);
    let t100 = median_seq(100);
    let t500 = median_seq(500);
    assert!(t10 < t100 && t100 < t500, "sequential times not monotone: {t10} {t100} {t500}");

    if hardware_threads() < 4 {
        skip(
            "2 docking scaling trend",
            &format!(
                "host has {} hardware thread(s); speedup assertions require >= 4 (monotone sequential time verified: {t10:.4} < {t100:.4} < {t500:.4} s)",
                hardware_threads()
            ),
        );
        return;
    }

    let speedup = |n: usize| -> f64 {
        let job = synthetic_dock_job(n, 42);
        let median = |mode: DockMode, w: usize| -> f64 {
            let mut times: Vec<f64> = (0..3).map(|_| dock(&job, w, mode).unwrap().wall_seconds).collect();
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times[1]
        };
        median(DockMode::Sequential, 1) / median(DockMode::Parallel, 4)
    };
    let s100 = speedup(100);
    let s500 = speedup(500);
    assert!(s500 > s100, "S(500)={s500:.2} must exceed S(100)={s100:.2}");
    assert!(s500 >= 2.0, "S(500)={s500:.2} below 2.0 with 4 workers");
    pass("2 docking scaling trend", &format!("S(100)={s100:.2}, S(500)={s500:.2}"));
}

#[test]
fn criterion_3_force_correctness_finite_differences() {
    let start = Instant::now();
    let pot = PotentialParams { cutoff: 1.0, periodic: false, shift_at_cutoff: true };
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let sys = random_charged_system(50, 1000 + trial);
        let ef = system_energy_forces(&sys, &pot, None).unwrap();
        let force_scale = max_force_norm(&ef);
        // central finite differences of the energy, one coordinate at a time
        for i in 0..sys.len() {
            for axis in 0..3 {
                let mut plus = sys.clone();
                let mut minus = sys.clone();
                let bump = |s: &mut MolecularSystem, delta: f64| match axis {
                    0 => s.atoms[i].position.x += delta,
                    1 => s.atoms[i].position.y += delta,
                    _ => s.atoms[i].position.z += delta,
                };
                bump(&mut plus, h);
                bump(&mut minus, -h);
                let e_plus = system_energy_forces(&plus, &pot, None).unwrap().potential_energy;
                let e_minus = system_energy_forces(&minus, &pot, None).unwrap().potential_energy;
                let fd = -(e_plus - e_minus) / (2.0 * h);
                let analytic = match axis {
                    0 => ef.forces[i].x,
                    1 => ef.forces[i].y,
                    _ => ef.forces[i].z,
                };
                worst = worst.max((analytic - fd).abs() / force_scale);
            }
        }
    }
    assert!(worst < 1e-5, "max relative force error {worst:.2e}");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "took {elapsed:.1} s");
    pass("3 force correctness", &format!("20 systems, max relative error {worst:.2e}, {elapsed:.1} s"));
}

#[test]
fn criterion_4_em_contract() {
    let start = Instant::now();

    // clashed 100-atom LJ gas: random placement with no separation guard
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let atoms: Vec<Atom> = (0..100)
        .map(|id| Atom {
            id,
            name: "Ar".into(),
            element: "Ar".into(),
            mass: 39.948,
            charge: 0.0,
            lj_sigma: ARGON_SIGMA,
            lj_epsilon: ARGON_EPSILON,
            position: Vec3::new(
                rng.gen_range(0.0..1.6),
                rng.gen_range(0.0..1.6),
                rng.gen_range(0.0..1.6),
            ),
        })
        .collect();
    let sys = MolecularSystem::new(atoms, None, "clashed gas");
    let pot = PotentialParams { cutoff: 1.0, periodic: false, shift_at_cutoff: true };
    let em = EMSettings::default();
    let (_, report, trace) =
        steepest_descent_minimize(&sys, &pot, &em, &WorkerPoolConfig::default()).unwrap();
    assert_eq!(report.status, StageStatus::Converged, "EM did not converge");
    assert!(report.final_fmax < 1000.0, "final Fmax {}", report.final_fmax);
    assert!(report.steps_taken < 50_000);
    assert!(
        trace.windows(2).all(|w| w[1] < w[0]),
        "accepted-step energies must strictly decrease"
    );

    // two-atom clash relaxes to the analytic LJ minimum separation
    let pair = MolecularSystem::argon_pair(0.5 * ARGON_SIGMA);
    let tight = EMSettings { fmax_tol: 0.1, ..Default::default() };
    let no_cut = PotentialParams { cutoff: f64::INFINITY, periodic: false, shift_at_cutoff: false };
    let (minimized, _, _) =
        steepest_descent_minimize(&pair, &no_cut, &tight, &WorkerPoolConfig::default()).unwrap();
    let r = (minimized.atoms[1].position - minimized.atoms[0].position).norm();
    let r_min = 2f64.powf(1.0 / 6.0) * ARGON_SIGMA;
    assert!((r - r_min).abs() / r_min < 0.01, "separation {r} vs analytic {r_min}");

    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "took {elapsed:.1} s");
    pass(
        "4 EM contract",
        &format!(
            "100-atom gas converged in {} iterations, pair separation within {:.3}% of analytic, {elapsed:.1} s",
            report.steps_taken,
            100.0 * (r - r_min).abs() / r_min
        ),
    );
}

fn fluid_64() -> (MolecularSystem, PotentialParams) {
    let sys = MolecularSystem::argon_lattice(4, 2.2);
    let pot = PotentialParams { cutoff: 1.0, periodic: true, shift_at_cutoff: true };
    (sys, pot)
}

#[test]
fn criterion_5_nve_conservation() {
    let start = Instant::now();
    let (sys, pot) = fluid_64();
    let mut state = SimState::from_system(&sys);
    maxwell_boltzmann_velocities(&mut state, 300.0, 5);
    let thermo = ThermoSettings {
        dt: 0.002,
        n_steps: 10_000,
        sample_stride: 1,
        remove_com_interval: 0,
        ..Default::default()
    };
    let (_, _, rows) = run_stage(
        &sys,
        state,
        StageKind::Md,
        &thermo,
        &pot,
        false,
        None,
        &WorkerPoolConfig::default(),
    )
    .unwrap();
    let e0 = rows.first().map(|r| r.epot_kjmol + r.ekin_kjmol).unwrap();
    let e_end = rows.last().map(|r| r.epot_kjmol + r.ekin_kjmol).unwrap();
    let drift = (e_end - e0).abs() / e0.abs();
    assert!(drift < 1e-3, "relative energy drift {drift:.2e} (E0={e0:.3}, E={e_end:.3})");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "took {elapsed:.1} s");
    pass("5 NVE conservation", &format!("|dE|/|E0| = {drift:.2e} over 10000 steps, {elapsed:.1} s"));
}

#[test]
fn criterion_6_nvt_temperature_control() {
    let start = Instant::now();
    let (sys, pot) = fluid_64();
    let mut state = SimState::from_system(&sys);
    maxwell_boltzmann_velocities(&mut state, 300.0, 6);
    let thermo = ThermoSettings {
        t_ref: 300.0,
        tau: 0.1,
        dt: 0.002,
        n_steps: 25_000,
        sample_stride: 0,
        remove_com_interval: 100,
        ..Default::default()
    };
    let (_, report, _) = run_stage(
        &sys,
        state,
        StageKind::Nvt,
        &thermo,
        &pot,
        true,
        None,
        &WorkerPoolConfig::default(),
    )
    .unwrap();
    let mean_t = report.mean_temperature.unwrap();
    assert!(
        (mean_t - 300.0).abs() / 300.0 < 0.10,
        "mean T over final half = {mean_t:.1} K, outside 300 K +/- 10%"
    );
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "took {elapsed:.1} s");
    pass("6 NVT control", &format!("mean T = {mean_t:.1} K over final half, {elapsed:.1} s"));
}

#[test]
fn criterion_7_metric_identities() {
    let rec = |workers: usize, wall: f64| BenchmarkRecord {
        stage: BenchStage::Md,
        workload: 1000,
        workers,
        repetition: 0,
        wall_seconds: wall,
    };
    let rows = compute_scaling(&[rec(1, 100.0), rec(2, 60.0), rec(4, 25.0), rec(8, 20.0)]).unwrap();
    assert_eq!(rows[0].speedup, 1.0, "S(1) must be exactly 1");
    for r in &rows {
        assert_eq!(r.efficiency, r.speedup / r.workers as f64, "E(p) = S(p)/p exactly");
    }
    let s4 = rows.iter().find(|r| r.workers == 4).unwrap();
    assert_eq!(s4.speedup, 4.0);
    assert_eq!(s4.efficiency, 1.0);
    pass("7 metric identities", "S(1)=1, E(p)=S(p)/p exact; T(1)=100,T(4)=25 -> S=4,E=1");
}

#[test]
fn criterion_8_amdahl_recovery() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    // noiseless: exact recovery for 100 random sequential fractions
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let f: f64 = rng.gen_range(0.0..=1.0);
        let rows = amdahl_model_times(f, 50.0, &[1, 2, 4, 8]);
        let fit = amdahl_fit(&rows).unwrap();
        worst = worst.max((fit.f - f).abs());
    }
    assert!(worst < 1e-9, "noiseless worst error {worst:.2e}");

    // +/- 1% multiplicative noise: within 0.05 in at least 95 of 100 trials
    let mut hits = 0;
    for _ in 0..100 {
        let f: f64 = rng.gen_range(0.0..=1.0);
        let mut rows: Vec<ScalingRow> = amdahl_model_times(f, 50.0, &[1, 2, 4, 8]);
        for r in &mut rows {
            r.median_seconds *= 1.0 + rng.gen_range(-0.01..=0.01);
        }
        let fit = amdahl_fit(&rows).unwrap();
        if (fit.f - f).abs() < 0.05 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "only {hits}/100 noisy fits within 0.05");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 5.0, "took {elapsed:.1} s");
    pass("8 Amdahl recovery", &format!("noiseless worst {worst:.1e}, noisy hits {hits}/100, {elapsed:.2} s"));
}

#[test]
fn criterion_9_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();

    // structure inputs for dock
    let receptor = MolecularSystem::argon_lattice(3, 1.8);
    let receptor = MolecularSystem::new(receptor.atoms, None, "receptor");
    let ligand = MolecularSystem::argon_pair(0.38);
    let receptor_path = base.join("receptor.xyz");
    let ligand_path = base.join("ligand.xyz");
    std::fs::write(&receptor_path, write_structure(&receptor).unwrap()).unwrap();
    std::fs::write(&ligand_path, write_structure(&ligand).unwrap()).unwrap();
    let params_path = base.join("argon.params");
    std::fs::write(&params_path, "Ar.sigma = 0.3405\nAr.epsilon = 0.996\n").unwrap();

    let run_dock = |out: &str, workers: &str| {
        let code = deskmd::cli::run_cli([
            "deskmd", "dock",
            "--receptor", receptor_path.to_str().unwrap(),
            "--ligand", ligand_path.to_str().unwrap(),
            "--params", params_path.to_str().unwrap(),
            "--n", "50",
            "--seed", "42",
            "--workers", workers,
            "--top", "5",
            "--out", base.join(out).to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    };
    run_dock("a", "1");
    run_dock("b", "1");
    run_dock("c", "8");
    let read = |out: &str, f: &str| std::fs::read(base.join(out).join(f)).unwrap();
    assert_eq!(read("a", "poses.csv"), read("b", "poses.csv"), "rerun must be byte-identical");
    assert_eq!(read("a", "ranked.csv"), read("b", "ranked.csv"));
    assert_eq!(read("a", "poses.csv"), read("c", "poses.csv"), "workers must not change output");
    assert_eq!(read("a", "ranked.csv"), read("c", "ranked.csv"));

    // nvt rerun: trajectory CSV byte-identical
    let fluid_path = base.join("fluid.xyz");
    std::fs::write(&fluid_path, write_structure(&MolecularSystem::argon_lattice(3, 2.4)).unwrap())
        .unwrap();
    let run_nvt = |out: &str| {
        let code = deskmd::cli::run_cli([
            "deskmd", "nvt",
            "--input", fluid_path.to_str().unwrap(),
            "--params", params_path.to_str().unwrap(),
            "--box-length", "2.4",
            "--steps", "200",
            "--seed", "7",
            "--out", base.join(out).to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    };
    run_nvt("n1");
    run_nvt("n2");
    assert_eq!(read("n1", "traj.csv"), read("n2", "traj.csv"));
    assert_eq!(read("n1", "final.xyz"), read("n2", "final.xyz"));

    pass("9 CLI determinism", "dock rerun and workers 1 vs 8 byte-identical; nvt rerun byte-identical");
}

#[test]
fn criterion_10_io_round_trips() {
    // structure round trip to 1e-6 nm
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let atoms: Vec<Atom> = (0..50)
        .map(|id| Atom {
            id,
            name: "Ar".into(),
            element: "Ar".into(),
            mass: 39.948,
            charge: 0.0,
            lj_sigma: ARGON_SIGMA,
            lj_epsilon: ARGON_EPSILON,
            position: Vec3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            ),
        })
        .collect();
    let sys = MolecularSystem::new(atoms, None, "random");
    let text = write_structure(&sys).unwrap();
    let back = parse_structure(&text, StructureFormat::Xyz).unwrap().system;
    for (a, b) in sys.atoms.iter().zip(&back.atoms) {
        assert_eq!(a.element, b.element);
        assert!((a.position - b.position).norm() < 1e-6);
    }

    // benchmark CSV round trip lossless at full precision
    let records: Vec<BenchmarkRecord> = (0..30)
        .map(|i| BenchmarkRecord {
            stage: [BenchStage::Em, BenchStage::Nvt, BenchStage::Md, BenchStage::Dock][i % 4],
            workload: 10 * (i + 1),
            workers: 1 + i % 8,
            repetition: i / 8,
            wall_seconds: rng.gen_range(1e-6..1e3),
        })
        .collect();
    let back = records_from_csv(&records_to_csv(&records)).unwrap();
    assert_eq!(back.len(), records.len());
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.wall_seconds.to_bits(), b.wall_seconds.to_bits(), "CSV must be lossless");
        assert_eq!(a, b);
    }
    pass("10 I/O round trips", "structure within 1e-6 nm; benchmark CSV bit-lossless");
}
