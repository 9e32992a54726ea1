//! The three-stage simulation workflow: steepest-descent energy
//! minimization, NVT equilibration with velocity rescaling, and leapfrog
//! production MD.
//!
//! The thermostat is a deterministic velocity-rescaling form: velocities are
//! scaled by `λ = √(1 + (dt/τ)(T_ref/T_inst − 1))` with λ clamped to
//! [0.8, 1.25]. There is no stochastic term, so identical inputs and seed
//! give bit-identical trajectories.
//!
//! ```
//! use deskmd::exec::WorkerPoolConfig;
//! use deskmd::mdsim::{steepest_descent_minimize, EMSettings, StageStatus};
//! use deskmd::potential::PotentialParams;
//! use deskmd::system::MolecularSystem;
//!
//! // Two argon atoms far too close together relax downhill; the accepted
//! // energies decrease strictly at every step.
//! let clashed = MolecularSystem::argon_pair(0.25);
//! let em = EMSettings { fmax_tol: 0.1, ..EMSettings::default() };
//! let (relaxed, report, trace) = steepest_descent_minimize(
//!     &clashed,
//!     &PotentialParams::default(),
//!     &em,
//!     &WorkerPoolConfig::default(),
//! )
//! .unwrap();
//! assert_eq!(report.status, StageStatus::Converged);
//! assert!(trace.windows(2).all(|w| w[1] < w[0]));
//!
//! // separation lands within 1% of the analytic minimum 2^(1/6)·σ
//! let r = (relaxed.atoms[1].position - relaxed.atoms[0].position).norm();
//! let r_min = 2f64.powf(1.0 / 6.0) * 0.3405;
//! assert!((r - r_min).abs() / r_min < 0.01);
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;
use std::time::Instant;

use crate::exec::WorkerPoolConfig;
use crate::geom::{wrap_into_box, Vec3};
use crate::potential::{max_force_norm, system_energy_forces_with, PotentialParams, Restraint};
use crate::system::MolecularSystem;
use crate::units::K_B;
use crate::{Error, Result};

/// Positions, half-step velocities, masses and the clock of an MD run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub masses: Vec<f64>,
    /// Simulation time in ps.
    pub time: f64,
    pub box_length: Option<f64>,
}

impl SimState {
    /// State from a system with zero velocities.
    pub fn from_system(system: &MolecularSystem) -> Self {
        SimState {
            positions: system.atoms.iter().map(|a| a.position).collect(),
            velocities: vec![Vec3::ZERO; system.len()],
            masses: system.atoms.iter().map(|a| a.mass).collect(),
            time: 0.0,
            box_length: system.box_length,
        }
    }

    /// Copy current positions back into a system clone.
    pub fn apply_to(&self, system: &MolecularSystem) -> MolecularSystem {
        let mut out = system.clone();
        for (a, &p) in out.atoms.iter_mut().zip(&self.positions) {
            a.position = p;
        }
        out
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self
            .masses
            .iter()
            .zip(&self.velocities)
            .map(|(&m, v)| m * v.norm_sq())
            .sum::<f64>()
    }
}

/// Steepest-descent settings. Defaults: stop below 1000 kJ·mol⁻¹·nm⁻¹ of
/// maximum force or after 50 000 iterations, initial step 0.01 nm.
#[derive(Debug, Clone, Copy)]
pub struct EMSettings {
    pub fmax_tol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
    pub grow_factor: f64,
    pub shrink_factor: f64,
}

impl Default for EMSettings {
    fn default() -> Self {
        EMSettings {
            fmax_tol: 1000.0,
            max_steps: 50_000,
            initial_step: 0.01,
            grow_factor: 1.2,
            shrink_factor: 0.2,
        }
    }
}

/// NVT/MD stage settings. Defaults: 300 K, τ = 0.1 ps, dt = 2 fs.
#[derive(Debug, Clone, Copy)]
pub struct ThermoSettings {
    pub t_ref: f64,
    pub tau: f64,
    pub dt: f64,
    pub n_steps: usize,
    /// Remove center-of-mass motion every this many steps; 0 disables.
    pub remove_com_interval: usize,
    /// Emit a trajectory-summary row every this many steps.
    pub sample_stride: usize,
    /// Constant-pressure coupling is not supported; requesting it is a
    /// hard error, not a silent ignore.
    pub pressure_coupling: bool,
}

impl Default for ThermoSettings {
    fn default() -> Self {
        ThermoSettings {
            t_ref: 300.0,
            tau: 0.1,
            dt: 0.002,
            n_steps: 1000,
            remove_com_interval: 100,
            sample_stride: 100,
            pressure_coupling: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    Em,
    Nvt,
    Md,
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StageKind::Em => write!(f, "EM"),
            StageKind::Nvt => write!(f, "NVT"),
            StageKind::Md => write!(f, "MD"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Converged,
    MaxSteps,
    Completed,
}

/// Outcome summary of one pipeline stage.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: StageKind,
    pub status: StageStatus,
    pub steps_taken: usize,
    pub final_energy: f64,
    pub final_fmax: f64,
    pub mean_temperature: Option<f64>,
    pub wall_seconds: f64,
}

/// One sampled row of a trajectory summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub time_ps: f64,
    pub epot_kjmol: f64,
    pub ekin_kjmol: f64,
    pub temperature_k: f64,
}

pub const TRAJECTORY_CSV_HEADER: &str = "step,time_ps,epot_kjmol,ekin_kjmol,temperature_k";

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::from(TRAJECTORY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.time_ps, r.epot_kjmol, r.ekin_kjmol, r.temperature_k
        ));
    }
    out
}

/// Steepest-descent minimization: trial displacement `h·F_i/F_max`,
/// accepted only if it lowers the energy (then h grows ×1.2), otherwise
/// rejected and retried with h shrunk ×0.2. Accepted energies form a
/// strictly decreasing sequence, returned as the third element (starting
/// from the initial energy).
pub fn steepest_descent_minimize(
    system: &MolecularSystem,
    pot: &PotentialParams,
    em: &EMSettings,
    cfg: &WorkerPoolConfig,
) -> Result<(MolecularSystem, StageReport, Vec<f64>)> {
    let start = Instant::now();
    let mut current = system.clone();
    let mut ef = system_energy_forces_with(&current, pot, None, cfg)?;
    let mut fmax = max_force_norm(&ef);
    let mut h = em.initial_step;
    let mut iterations = 0usize;
    let mut accepted_any = false;
    let mut energy_trace = vec![ef.potential_energy];
    let mut status = StageStatus::Converged;

    while fmax >= em.fmax_tol {
        if iterations >= em.max_steps {
            status = StageStatus::MaxSteps;
            break;
        }
        if h < 1e-12 {
            if !accepted_any {
                return Err(Error::StuckMinimization { h });
            }
            // progress was made earlier; floor the step and keep counting
            // iterations toward max_steps
            h = 1e-12;
        }
        let mut trial = current.clone();
        let scale = if fmax > 0.0 { h / fmax } else { 0.0 };
        for (atom, f) in trial.atoms.iter_mut().zip(&ef.forces) {
            atom.position += *f * scale;
            if let Some(l) = trial.box_length {
                atom.position.x = wrap_into_box(atom.position.x, l);
                atom.position.y = wrap_into_box(atom.position.y, l);
                atom.position.z = wrap_into_box(atom.position.z, l);
            }
        }
        iterations += 1;
        let trial_ef = system_energy_forces_with(&trial, pot, None, cfg)?;
        if trial_ef.potential_energy < ef.potential_energy {
            current = trial;
            ef = trial_ef;
            fmax = max_force_norm(&ef);
            h *= em.grow_factor;
            accepted_any = true;
            energy_trace.push(ef.potential_energy);
        } else {
            h *= em.shrink_factor;
        }
    }

    let report = StageReport {
        stage: StageKind::Em,
        status,
        steps_taken: iterations,
        final_energy: ef.potential_energy,
        final_fmax: fmax,
        mean_temperature: None,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((current, report, energy_trace))
}

/// One leapfrog update: `v(t+dt/2) = v(t−dt/2) + (F/m)·dt`, then
/// `x(t+dt) = x(t) + v(t+dt/2)·dt`. Periodic positions are wrapped into
/// the box; time advances by dt.
pub fn leapfrog_step(state: &mut SimState, forces: &[Vec3], dt: f64) -> Result<()> {
    for (i, ((v, x), (&m, f))) in state
        .velocities
        .iter_mut()
        .zip(state.positions.iter_mut())
        .zip(state.masses.iter().zip(forces))
        .enumerate()
    {
        if !f.is_finite() {
            return Err(Error::Integration { step: 0, message: format!("non-finite force on atom {i}") });
        }
        *v += *f * (dt / m);
        *x += *v * dt;
        if let Some(l) = state.box_length {
            x.x = wrap_into_box(x.x, l);
            x.y = wrap_into_box(x.y, l);
            x.z = wrap_into_box(x.z, l);
        }
    }
    state.time += dt;
    Ok(())
}

/// Kinetic temperature `T = 2·KE / (n_df·k_B)`.
pub fn instantaneous_temperature(state: &SimState, n_df: usize) -> Result<f64> {
    if n_df == 0 {
        return Err(Error::InvalidArgument("temperature needs n_df >= 1".into()));
    }
    Ok(2.0 * state.kinetic_energy() / (n_df as f64 * K_B))
}

/// Velocity-rescaling thermostat step. No-op at T_inst = 0 (nothing to
/// rescale) and an exact fixed point at T_inst = T_ref.
pub fn apply_thermostat(state: &mut SimState, t_ref: f64, tau: f64, dt: f64, n_df: usize) -> Result<()> {
    let t_inst = instantaneous_temperature(state, n_df)?;
    if t_inst == 0.0 {
        return Ok(());
    }
    if t_inst == t_ref {
        return Ok(());
    }
    let lambda = (1.0 + (dt / tau) * (t_ref / t_inst - 1.0)).sqrt().clamp(0.8, 1.25);
    for v in &mut state.velocities {
        *v = *v * lambda;
    }
    Ok(())
}

/// Subtract the mass-weighted mean velocity; total momentum is zero
/// afterward.
pub fn remove_com_motion(state: &mut SimState) {
    let total_mass: f64 = state.masses.iter().sum();
    let mut momentum = Vec3::ZERO;
    for (&m, v) in state.masses.iter().zip(&state.velocities) {
        momentum += *v * m;
    }
    let v_com = momentum / total_mass;
    for v in &mut state.velocities {
        *v -= v_com;
    }
}

/// Draw Maxwell-Boltzmann velocities at `t_ref` from a seeded generator,
/// then remove the center-of-mass drift.
pub fn maxwell_boltzmann_velocities(state: &mut SimState, t_ref: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (&m, v) in state.masses.iter().zip(&mut state.velocities) {
        let sd = (K_B * t_ref / m).sqrt();
        let normal = Normal::new(0.0, sd).expect("positive standard deviation");
        *v = Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
    }
    remove_com_motion(state);
}

/// Run an NVT or MD stage: leapfrog integration with the thermostat applied
/// each step when `thermostat_on`, COM-motion removal on its interval, and
/// summary rows at the configured stride. The report's mean temperature
/// covers the final half of the run.
#[allow(clippy::too_many_arguments)]
pub fn run_stage(
    system: &MolecularSystem,
    mut state: SimState,
    stage: StageKind,
    thermo: &ThermoSettings,
    pot: &PotentialParams,
    thermostat_on: bool,
    restraint: Option<&Restraint>,
    cfg: &WorkerPoolConfig,
) -> Result<(SimState, StageReport, Vec<TrajectoryRow>)> {
    if thermo.pressure_coupling {
        return Err(Error::Unsupported(
            "pressure coupling (barostat) is not available; runs are constant-volume".into(),
        ));
    }
    let start = Instant::now();
    let n = state.positions.len();
    let n_df = if thermo.remove_com_interval > 0 { 3 * n - 3 } else { 3 * n };
    let mut rows = Vec::new();
    let mut temps = Vec::with_capacity(thermo.n_steps);

    let mut work = state.apply_to(system);
    let mut ef = system_energy_forces_with(&work, pot, restraint, cfg)?;

    for step in 0..thermo.n_steps {
        let v_old = state.velocities.clone();
        leapfrog_step(&mut state, &ef.forces, thermo.dt)
            .map_err(|e| match e {
                Error::Integration { message, .. } => Error::Integration { step, message },
                other => other,
            })?;

        // on-step kinetic energy from the average of the two half-step
        // velocities around time t
        let mut ekin = 0.0;
        for ((&m, vo), vn) in state.masses.iter().zip(&v_old).zip(&state.velocities) {
            let v_mid = (*vo + *vn) * 0.5;
            ekin += 0.5 * m * v_mid.norm_sq();
        }
        let temp = 2.0 * ekin / (n_df as f64 * K_B);
        temps.push(temp);
        if thermo.sample_stride > 0 && step % thermo.sample_stride == 0 {
            rows.push(TrajectoryRow {
                step,
                time_ps: state.time - thermo.dt,
                epot_kjmol: ef.potential_energy,
                ekin_kjmol: ekin,
                temperature_k: temp,
            });
        }

        if thermostat_on {
            apply_thermostat(&mut state, thermo.t_ref, thermo.tau, thermo.dt, n_df)?;
        }
        if thermo.remove_com_interval > 0 && (step + 1) % thermo.remove_com_interval == 0 {
            remove_com_motion(&mut state);
        }

        for (a, &p) in work.atoms.iter_mut().zip(&state.positions) {
            a.position = p;
        }
        ef = system_energy_forces_with(&work, pot, restraint, cfg)?;
        if !ef.potential_energy.is_finite() {
            return Err(Error::Integration { step, message: "non-finite potential energy".into() });
        }
    }

    let mean_temperature = if temps.is_empty() {
        None
    } else {
        let half = &temps[temps.len() / 2..];
        Some(half.iter().sum::<f64>() / half.len() as f64)
    };
    let report = StageReport {
        stage,
        status: StageStatus::Completed,
        steps_taken: thermo.n_steps,
        final_energy: ef.potential_energy,
        final_fmax: max_force_norm(&ef),
        mean_temperature,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((state, report, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ARGON_EPSILON, ARGON_SIGMA};

    fn lj_pot() -> PotentialParams {
        PotentialParams { cutoff: f64::INFINITY, periodic: false, shift_at_cutoff: false }
    }

    #[test]
    fn minimize_clashed_pair_reaches_lj_minimum() {
        let sys = MolecularSystem::argon_pair(0.5 * ARGON_SIGMA);
        // the 1000 kJ/mol/nm default is sized for clashed many-atom systems;
        // a single argon pair needs a tight tolerance to land on the minimum
        let em = EMSettings { fmax_tol: 0.1, ..Default::default() };
        let (min_sys, report, trace) = steepest_descent_minimize(
            &sys,
            &lj_pot(),
            &em,
            &WorkerPoolConfig::default(),
        )
        .unwrap();
        assert_eq!(report.status, StageStatus::Converged);
        assert!(trace.windows(2).all(|w| w[1] < w[0]), "accepted energies must strictly decrease");
        assert!(report.final_energy <= -0.99 * ARGON_EPSILON, "energy {}", report.final_energy);
        let r = (min_sys.atoms[1].position - min_sys.atoms[0].position).norm();
        let r_min = 2f64.powf(1.0 / 6.0) * ARGON_SIGMA;
        assert!((r - r_min).abs() / r_min < 0.01, "separation {r} vs {r_min}");
    }

    #[test]
    fn minimize_already_converged_takes_no_steps() {
        let r_min = 2f64.powf(1.0 / 6.0) * ARGON_SIGMA;
        let sys = MolecularSystem::argon_pair(r_min);
        let (_, report, _) = steepest_descent_minimize(
            &sys,
            &lj_pot(),
            &EMSettings::default(),
            &WorkerPoolConfig::default(),
        )
        .unwrap();
        assert_eq!(report.status, StageStatus::Converged);
        assert_eq!(report.steps_taken, 0);
    }

    #[test]
    fn minimize_unreachable_tolerance_hits_max_steps() {
        let sys = MolecularSystem::argon_pair(0.9 * ARGON_SIGMA);
        let em = EMSettings { fmax_tol: 0.0, max_steps: 200, ..Default::default() };
        let (_, report, _) =
            steepest_descent_minimize(&sys, &lj_pot(), &em, &WorkerPoolConfig::default()).unwrap();
        assert_eq!(report.status, StageStatus::MaxSteps);
        assert_eq!(report.steps_taken, 200);
    }

    #[test]
    fn minimize_stuck_from_the_start_errors() {
        // both atoms beyond the cutoff: energy is exactly zero everywhere
        // nearby, so no trial is ever accepted and the step size underflows
        let sys = MolecularSystem::argon_pair(2.0);
        let em = EMSettings { fmax_tol: 0.0, ..Default::default() };
        let pot = PotentialParams::default();
        let err = steepest_descent_minimize(&sys, &pot, &em, &WorkerPoolConfig::default())
            .unwrap_err();
        assert!(matches!(err, Error::StuckMinimization { .. }));
    }

    #[test]
    fn leapfrog_free_flight() {
        let mut state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::new(1.0, 0.0, 0.0)],
            masses: vec![1.0],
            time: 0.0,
            box_length: None,
        };
        leapfrog_step(&mut state, &[Vec3::ZERO], 0.002).unwrap();
        assert!((state.positions[0].x - 0.002).abs() < 1e-15);
        assert_eq!(state.velocities[0], Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(state.time, 0.002);
    }

    #[test]
    fn leapfrog_rest_state_only_advances_time() {
        let mut state = SimState {
            positions: vec![Vec3::new(1.0, 2.0, 3.0)],
            velocities: vec![Vec3::ZERO],
            masses: vec![1.0],
            time: 0.0,
            box_length: None,
        };
        leapfrog_step(&mut state, &[Vec3::ZERO], 0.002).unwrap();
        assert_eq!(state.positions[0], Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(state.velocities[0], Vec3::ZERO);
        assert!(state.time > 0.0);
    }

    #[test]
    fn leapfrog_free_particle_time_reversible() {
        let mut state = SimState {
            positions: vec![Vec3::new(0.5, 0.25, -0.75)],
            velocities: vec![Vec3::new(0.3, -0.2, 0.1)],
            masses: vec![39.948],
            time: 0.0,
            box_length: None,
        };
        let orig = state.positions[0];
        leapfrog_step(&mut state, &[Vec3::ZERO], 0.002).unwrap();
        leapfrog_step(&mut state, &[Vec3::ZERO], -0.002).unwrap();
        assert!((state.positions[0] - orig).norm() < 1e-12);
    }

    #[test]
    fn leapfrog_nan_force_errors() {
        let mut state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::ZERO],
            masses: vec![1.0],
            time: 0.0,
            box_length: None,
        };
        let err = leapfrog_step(&mut state, &[Vec3::new(f64::NAN, 0.0, 0.0)], 0.002).unwrap_err();
        assert!(matches!(err, Error::Integration { .. }));
    }

    #[test]
    fn leapfrog_energy_vs_high_resolution_reference() {
        // two-atom bound LJ pair: dt = 2 fs total energy tracks a dt = 0.1 fs
        // reference trajectory's conserved energy within 1e-3 relative
        let run = |dt: f64, n_steps: usize| -> f64 {
            let sys = MolecularSystem::argon_pair(0.38);
            let mut state = SimState::from_system(&sys);
            state.velocities[0] = Vec3::new(0.05, 0.0, 0.0);
            state.velocities[1] = Vec3::new(-0.05, 0.0, 0.0);
            let pot = lj_pot();
            let mut work = sys.clone();
            let mut ef = system_energy_forces_with(&work, &pot, None, &WorkerPoolConfig::default()).unwrap();
            let mut e_total = 0.0;
            for _ in 0..n_steps {
                let v_old = state.velocities.clone();
                leapfrog_step(&mut state, &ef.forces, dt).unwrap();
                let mut ekin = 0.0;
                for ((&m, vo), vn) in state.masses.iter().zip(&v_old).zip(&state.velocities) {
                    let v_mid = (*vo + *vn) * 0.5;
                    ekin += 0.5 * m * v_mid.norm_sq();
                }
                e_total = ef.potential_energy + ekin;
                for (a, &p) in work.atoms.iter_mut().zip(&state.positions) {
                    a.position = p;
                }
                ef = system_energy_forces_with(&work, &pot, None, &WorkerPoolConfig::default()).unwrap();
            }
            e_total
        };
        let coarse = run(0.002, 10_000);
        let reference = run(0.0001, 200_000);
        assert!(
            (coarse - reference).abs() / reference.abs() < 1e-3,
            "coarse {coarse} vs reference {reference}"
        );
    }

    #[test]
    fn temperature_definition() {
        let mut state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::ZERO],
            masses: vec![39.948],
            time: 0.0,
            box_length: None,
        };
        assert_eq!(instantaneous_temperature(&state, 3).unwrap(), 0.0);

        // KE = (3/2)·k_B·300 for one free atom with n_df = 3
        let ke_target = 1.5 * K_B * 300.0;
        let speed = (2.0 * ke_target / 39.948).sqrt();
        state.velocities[0] = Vec3::new(speed, 0.0, 0.0);
        let t = instantaneous_temperature(&state, 3).unwrap();
        assert!((t - 300.0).abs() < 1e-9);

        state.velocities[0] = state.velocities[0] * 2.0;
        let t4 = instantaneous_temperature(&state, 3).unwrap();
        assert!((t4 - 1200.0).abs() < 1e-9);
    }

    #[test]
    fn temperature_zero_df_errors() {
        let state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::ZERO],
            masses: vec![1.0],
            time: 0.0,
            box_length: None,
        };
        assert!(instantaneous_temperature(&state, 0).is_err());
    }

    #[test]
    fn thermostat_fixed_point_and_formula() {
        let speed_for = |t: f64, m: f64, n_df: usize| {
            (n_df as f64 * K_B * t / m).sqrt()
        };
        let m = 39.948;
        let mut state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::new(speed_for(300.0, m, 3), 0.0, 0.0)],
            masses: vec![m],
            time: 0.0,
            box_length: None,
        };
        let before = state.velocities.clone();
        apply_thermostat(&mut state, 300.0, 0.1, 0.002, 3).unwrap();
        assert_eq!(state.velocities, before, "T_inst = T_ref is a bit-exact fixed point");

        // T_inst = 600 K, T_ref = 300 K, dt/τ = 0.02 → λ = √0.99
        state.velocities[0] = Vec3::new(speed_for(600.0, m, 3), 0.0, 0.0);
        let v0 = state.velocities[0].x;
        apply_thermostat(&mut state, 300.0, 0.1, 0.002, 3).unwrap();
        let lambda = state.velocities[0].x / v0;
        assert!((lambda - 0.99f64.sqrt()).abs() < 1e-12, "λ = {lambda}");
    }

    #[test]
    fn thermostat_zero_velocities_noop() {
        let mut state = SimState {
            positions: vec![Vec3::ZERO],
            velocities: vec![Vec3::ZERO],
            masses: vec![1.0],
            time: 0.0,
            box_length: None,
        };
        apply_thermostat(&mut state, 300.0, 0.1, 0.002, 3).unwrap();
        assert_eq!(state.velocities[0], Vec3::ZERO);
    }

    #[test]
    fn com_removal() {
        let mut state = SimState {
            positions: vec![Vec3::ZERO; 3],
            velocities: vec![Vec3::new(1.0, 0.0, 0.0); 3],
            masses: vec![1.0, 2.0, 3.0],
            time: 0.0,
            box_length: None,
        };
        remove_com_motion(&mut state);
        for v in &state.velocities {
            assert!(v.norm() < 1e-12);
        }

        // symmetric pair is unchanged
        let mut state = SimState {
            positions: vec![Vec3::ZERO; 2],
            velocities: vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)],
            masses: vec![1.0, 1.0],
            time: 0.0,
            box_length: None,
        };
        let before = state.velocities.clone();
        remove_com_motion(&mut state);
        for (a, b) in state.velocities.iter().zip(&before) {
            assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn run_stage_zero_steps_is_identity() {
        let sys = MolecularSystem::argon_lattice(2, 2.2);
        let state = SimState::from_system(&sys);
        let thermo = ThermoSettings { n_steps: 0, ..Default::default() };
        let pot = PotentialParams { periodic: true, ..Default::default() };
        let (out, report, rows) = run_stage(
            &sys,
            state.clone(),
            StageKind::Nvt,
            &thermo,
            &pot,
            true,
            None,
            &WorkerPoolConfig::default(),
        )
        .unwrap();
        assert_eq!(out.positions, state.positions);
        assert_eq!(report.status, StageStatus::Completed);
        assert_eq!(report.steps_taken, 0);
        assert!(rows.is_empty());
    }

    #[test]
    fn run_stage_rejects_pressure_coupling() {
        let sys = MolecularSystem::argon_lattice(2, 2.2);
        let state = SimState::from_system(&sys);
        let thermo = ThermoSettings { pressure_coupling: true, ..Default::default() };
        let pot = PotentialParams { periodic: true, ..Default::default() };
        let err = run_stage(
            &sys,
            state,
            StageKind::Nvt,
            &thermo,
            &pot,
            true,
            None,
            &WorkerPoolConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn trajectories_deterministic_for_fixed_seed() {
        let sys = MolecularSystem::argon_lattice(2, 2.2);
        let pot = PotentialParams { periodic: true, ..Default::default() };
        let thermo = ThermoSettings { n_steps: 50, ..Default::default() };
        let run = || {
            let mut state = SimState::from_system(&sys);
            maxwell_boltzmann_velocities(&mut state, 300.0, 7);
            let (out, _, _) = run_stage(
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
            out
        };
        let a = run();
        let b = run();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.velocities, b.velocities);
    }

    #[test]
    fn momentum_conserved_between_com_removals() {
        let sys = MolecularSystem::argon_lattice(3, 2.4);
        let pot = PotentialParams { periodic: true, ..Default::default() };
        let mut state = SimState::from_system(&sys);
        maxwell_boltzmann_velocities(&mut state, 300.0, 3);
        let thermo = ThermoSettings {
            n_steps: 200,
            remove_com_interval: 1_000_000,
            ..Default::default()
        };
        let (out, _, _) = run_stage(
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
        let mut p = Vec3::ZERO;
        for (&m, v) in out.masses.iter().zip(&out.velocities) {
            p += *v * m;
        }
        assert!(p.norm() < 1e-8, "net momentum {:?}", p);
    }
}
