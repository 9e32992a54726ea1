//! Rigid-body docking prototype: deterministic random pose generation,
//! pairwise-interaction scoring of ligand against receptor, sequential and
//! parallel evaluation, and top-K selection.
//!
//! Pose `k` is a pure function of `(seed, k)`: a splitmix-style mix derives
//! an independent generator per conformer index, so parallel output is
//! bit-identical to sequential output for any worker count or chunking.
//!
//! ```
//! use deskmd::docking::{dock, select_top_k, DockMode, DockingJob};
//! use deskmd::system::MolecularSystem;
//!
//! let receptor = MolecularSystem::argon_lattice(3, 1.8);
//! let ligand = MolecularSystem::argon_pair(0.38);
//! let job = DockingJob::new(receptor, ligand, 40, 7);
//!
//! let seq = dock(&job, 1, DockMode::Sequential).unwrap();
//! let par = dock(&job, 4, DockMode::Parallel).unwrap();
//! for (a, b) in seq.poses.iter().zip(&par.poses) {
//!     assert_eq!(a.score.to_bits(), b.score.to_bits());
//! }
//!
//! let (top, truncated) = select_top_k(&seq.poses, 5).unwrap();
//! assert_eq!(top.len(), 5);
//! assert!(!truncated);
//! assert!(top.windows(2).all(|w| w[0].score <= w[1].score));
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::exec::{self, WorkerPoolConfig};
use crate::geom::Vec3;
use crate::potential::{pair_energy_force, PairParams, PotentialParams};
use crate::system::MolecularSystem;
use crate::{Error, Result};

/// Score assigned to a clashing pose; effectively infinite but finite so a
/// batch survives and CSV stays well-formed.
pub const CLASH_SCORE: f64 = 1e30;

/// Unit quaternion for rigid rotations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        let mut q = Quaternion { w, x, y, z };
        q.normalize();
        q
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn normalize(&mut self) {
        let n = self.norm();
        self.w /= n;
        self.x /= n;
        self.y /= n;
        self.z /= n;
    }

    /// Rotate a vector: v' = v + 2w(q×v) + 2q×(q×v).
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let q = Vec3::new(self.x, self.y, self.z);
        let t = cross(q, v) * 2.0;
        v + t * self.w + cross(q, t)
    }

    /// Uniform rotation on SO(3) by Shoemake's subgroup method.
    pub fn uniform<R: Rng>(rng: &mut R) -> Self {
        use std::f64::consts::TAU;
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        let u3: f64 = rng.gen();
        let a = (1.0 - u1).sqrt();
        let b = u1.sqrt();
        Quaternion::new(
            b * (TAU * u3).cos(),
            a * (TAU * u2).sin(),
            a * (TAU * u2).cos(),
            b * (TAU * u3).sin(),
        )
    }
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// One candidate rigid placement of the ligand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub conformer_index: usize,
    pub rotation: Quaternion,
    pub translation: Vec3,
}

/// A pose with its interaction score (kJ/mol; lower is better).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredPose {
    pub pose: Pose,
    pub score: f64,
}

/// All inputs of one docking run.
#[derive(Debug, Clone)]
pub struct DockingJob {
    pub receptor: MolecularSystem,
    pub ligand: MolecularSystem,
    pub n_conformers: usize,
    pub seed: u64,
    pub pocket_center: Vec3,
    pub pocket_radius: f64,
    pub pot: PotentialParams,
    pub electrostatics_on: bool,
}

impl DockingJob {
    /// Job with the pocket defaulting to the receptor centroid and a
    /// 1.5 nm radius.
    pub fn new(receptor: MolecularSystem, ligand: MolecularSystem, n_conformers: usize, seed: u64) -> Self {
        let pocket_center = receptor.centroid();
        DockingJob {
            receptor,
            ligand,
            n_conformers,
            seed,
            pocket_center,
            pocket_radius: 1.5,
            pot: PotentialParams { periodic: false, ..Default::default() },
            electrostatics_on: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DockMode {
    Sequential,
    Parallel,
}

/// Result of a docking run: one scored pose per conformer index, plus
/// diagnostics.
#[derive(Debug, Clone)]
pub struct DockResult {
    pub poses: Vec<ScoredPose>,
    pub clash_count: usize,
    /// Wall seconds of the evaluation loop only (generation + scoring).
    pub wall_seconds: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic pose for conformer `k`: uniform rotation and a uniform
/// point in the pocket ball, drawn from a generator derived purely from
/// `(seed, k)`.
pub fn generate_pose(job: &DockingJob, k: usize) -> Result<Pose> {
    if k >= job.n_conformers {
        return Err(Error::InvalidArgument(format!(
            "conformer index {k} out of range (n_conformers = {})",
            job.n_conformers
        )));
    }
    let stream = splitmix64(job.seed ^ splitmix64(k as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let rotation = Quaternion::uniform(&mut rng);
    // rejection sampling from the unit cube keeps the ball uniform
    let unit = loop {
        let p = Vec3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        if p.norm_sq() <= 1.0 {
            break p;
        }
    };
    let translation = job.pocket_center + unit * job.pocket_radius;
    Ok(Pose { conformer_index: k, rotation, translation })
}

/// Rigid transform of the ligand about its centroid:
/// `x' = R·(x − centroid) + centroid + translation`.
pub fn apply_pose(ligand: &MolecularSystem, pose: &Pose) -> MolecularSystem {
    let centroid = ligand.centroid();
    let mut out = ligand.clone();
    for a in &mut out.atoms {
        a.position = pose.rotation.rotate(a.position - centroid) + centroid + pose.translation;
    }
    out
}

/// Sum of receptor-ligand pair interactions within the cutoff (LJ, plus
/// Coulomb when `electrostatics_on`). Intra-molecular terms are excluded
/// and the evaluation is non-periodic. A clashing pair yields
/// [`CLASH_SCORE`] instead of an error.
pub fn score_pose(
    receptor: &MolecularSystem,
    posed_ligand: &MolecularSystem,
    pot: &PotentialParams,
    electrostatics_on: bool,
) -> f64 {
    let pot = PotentialParams { periodic: false, ..*pot };
    let mut score = 0.0;
    for ra in &receptor.atoms {
        let mut pr = PairParams::from(ra);
        if !electrostatics_on {
            pr.charge = 0.0;
        }
        for la in &posed_ligand.atoms {
            let mut pl = PairParams::from(la);
            if !electrostatics_on {
                pl.charge = 0.0;
            }
            let r_vec = la.position - ra.position;
            match pair_energy_force(r_vec, pr, pl, &pot) {
                Ok((e, _)) => score += e,
                Err(_) => return CLASH_SCORE,
            }
        }
    }
    score
}

/// Generate and score every conformer. Parallel output is element-wise
/// bit-identical to sequential output.
pub fn dock(job: &DockingJob, workers: usize, mode: DockMode) -> Result<DockResult> {
    let workers = match mode {
        DockMode::Sequential => 1,
        DockMode::Parallel => workers.max(1),
    };
    let start = Instant::now();
    let plan = exec::plan_chunks(job.n_conformers, workers);
    let cfg = WorkerPoolConfig::new(workers);
    let poses = exec::parallel_map_indexed(&plan, &cfg, |k| {
        let pose = generate_pose(job, k)?;
        let placed = apply_pose(&job.ligand, &pose);
        let score = score_pose(&job.receptor, &placed, &job.pot, job.electrostatics_on);
        Ok(ScoredPose { pose, score })
    })?;
    let wall_seconds = start.elapsed().as_secs_f64();
    let clash_count = poses.iter().filter(|p| p.score >= CLASH_SCORE).count();
    Ok(DockResult { poses, clash_count, wall_seconds })
}

/// The `k` best (lowest-score) poses, ties broken by smaller conformer
/// index. When fewer than `k` results exist, all are returned and the
/// truncation flag is set.
pub fn select_top_k(results: &[ScoredPose], k: usize) -> Result<(Vec<ScoredPose>, bool)> {
    if k == 0 {
        return Err(Error::InvalidArgument("top-k selection needs k >= 1".into()));
    }
    let mut sorted: Vec<ScoredPose> = results.to_vec();
    sorted.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .unwrap()
            .then(a.pose.conformer_index.cmp(&b.pose.conformer_index))
    });
    let truncated = k > sorted.len();
    sorted.truncate(k.min(results.len()));
    Ok((sorted, truncated))
}

pub const POSES_CSV_HEADER: &str = "conformer_index,score_kjmol,qw,qx,qy,qz,tx_nm,ty_nm,tz_nm";

/// Serialize scored poses in index order (full shortest-round-trip float
/// precision).
pub fn poses_csv(results: &[ScoredPose]) -> String {
    let mut out = String::from(POSES_CSV_HEADER);
    out.push('\n');
    for sp in results {
        let q = sp.pose.rotation;
        let t = sp.pose.translation;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            sp.pose.conformer_index, sp.score, q.w, q.x, q.y, q.z, t.x, t.y, t.z
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{ARGON_EPSILON, ARGON_SIGMA};

    fn small_job(n: usize, seed: u64) -> DockingJob {
        let receptor = MolecularSystem::argon_lattice(2, 1.6);
        let receptor = MolecularSystem::new(receptor.atoms, None, "receptor");
        let ligand = MolecularSystem::argon_pair(0.38);
        DockingJob::new(receptor, ligand, n, seed)
    }

    #[test]
    fn pose_is_pure_function_of_seed_and_index() {
        let job = small_job(10, 42);
        let a = generate_pose(&job, 3).unwrap();
        let b = generate_pose(&job, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_pose(&job, 4).unwrap();
        assert_ne!(a.rotation, c.rotation);
    }

    #[test]
    fn pose_index_out_of_range() {
        let job = small_job(10, 42);
        assert!(generate_pose(&job, 10).is_err());
    }

    #[test]
    fn rotations_are_uniform_on_average() {
        let job = small_job(10_000, 7);
        let mut mean = Vec3::ZERO;
        for k in 0..10_000 {
            let pose = generate_pose(&job, k).unwrap();
            mean += pose.rotation.rotate(Vec3::new(1.0, 0.0, 0.0));
        }
        mean = mean / 10_000.0;
        assert!(mean.x.abs() < 0.05 && mean.y.abs() < 0.05 && mean.z.abs() < 0.05,
            "mean rotated vector {mean:?}");
    }

    #[test]
    fn quaternions_unit_norm() {
        let job = small_job(100, 1);
        for k in 0..100 {
            let q = generate_pose(&job, k).unwrap().rotation;
            assert!((q.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn translations_stay_in_pocket() {
        let job = small_job(200, 9);
        for k in 0..200 {
            let pose = generate_pose(&job, k).unwrap();
            let d = (pose.translation - job.pocket_center).norm();
            assert!(d <= job.pocket_radius + 1e-12);
        }
    }

    #[test]
    fn apply_pose_identity() {
        let ligand = MolecularSystem::argon_pair(0.38);
        let pose = Pose {
            conformer_index: 0,
            rotation: Quaternion::IDENTITY,
            translation: Vec3::ZERO,
        };
        let out = apply_pose(&ligand, &pose);
        for (a, b) in out.atoms.iter().zip(&ligand.atoms) {
            assert!((a.position - b.position).norm() < 1e-12);
        }
    }

    #[test]
    fn apply_pose_half_turn_about_z() {
        let ligand = MolecularSystem::argon_pair(2.0); // centroid at (1,0,0)
        let pose = Pose {
            conformer_index: 0,
            rotation: Quaternion::new(0.0, 0.0, 0.0, 1.0),
            translation: Vec3::ZERO,
        };
        let out = apply_pose(&ligand, &pose);
        // atom 0 was centroid + (-1,0,0), maps to centroid + (1,0,0)
        assert!((out.atoms[0].position - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((out.atoms[1].position - Vec3::new(0.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn apply_pose_preserves_distances() {
        let mut ligand = MolecularSystem::argon_lattice(2, 1.0);
        ligand.box_length = None;
        ligand.atoms.truncate(5);
        for (i, a) in ligand.atoms.iter_mut().enumerate() {
            a.id = i;
        }
        let job = DockingJob::new(MolecularSystem::argon_pair(0.4), ligand.clone(), 1, 5);
        let pose = generate_pose(&job, 0).unwrap();
        let out = apply_pose(&ligand, &pose);
        for i in 0..5 {
            for j in (i + 1)..5 {
                let before = (ligand.atoms[i].position - ligand.atoms[j].position).norm();
                let after = (out.atoms[i].position - out.atoms[j].position).norm();
                assert!((before - after).abs() < 1e-9, "pair {i},{j}");
            }
        }
    }

    #[test]
    fn score_zero_beyond_cutoff() {
        let receptor = MolecularSystem::argon_pair(0.38);
        let mut ligand = MolecularSystem::argon_pair(0.38);
        for a in &mut ligand.atoms {
            a.position += Vec3::new(10.0, 0.0, 0.0);
        }
        let pot = PotentialParams::default();
        assert_eq!(score_pose(&receptor, &ligand, &pot, false), 0.0);
    }

    #[test]
    fn score_single_pair_at_lj_minimum() {
        let mut receptor = MolecularSystem::argon_pair(0.38);
        receptor.atoms.truncate(1);
        let mut ligand = MolecularSystem::argon_pair(0.38);
        ligand.atoms.truncate(1);
        let r_min = 2f64.powf(1.0 / 6.0) * ARGON_SIGMA;
        ligand.atoms[0].position = Vec3::new(r_min, 0.0, 0.0);
        let pot = PotentialParams { cutoff: f64::INFINITY, shift_at_cutoff: false, ..Default::default() };
        let score = score_pose(&receptor, &ligand, &pot, false);
        assert!((score - (-ARGON_EPSILON)).abs() < 1e-9);
    }

    #[test]
    fn score_matches_brute_force_sum() {
        // 3-atom receptor x 2-atom ligand: all 6 pairs summed independently
        let mut receptor = MolecularSystem::argon_lattice(2, 1.2);
        receptor.box_length = None;
        receptor.atoms.truncate(3);
        for (i, a) in receptor.atoms.iter_mut().enumerate() {
            a.id = i;
            a.charge = 0.05 * (i as f64 + 1.0);
        }
        let mut ligand = MolecularSystem::argon_pair(0.3);
        for a in &mut ligand.atoms {
            a.position += Vec3::new(0.9, 0.1, 0.2);
            a.charge = -0.1;
        }
        let pot = PotentialParams { cutoff: 2.5, shift_at_cutoff: true, ..Default::default() };
        let score = score_pose(&receptor, &ligand, &pot, true);
        let mut expected = 0.0;
        for ra in &receptor.atoms {
            for la in &ligand.atoms {
                let (e, _) = pair_energy_force(
                    la.position - ra.position,
                    PairParams::from(ra),
                    PairParams::from(la),
                    &pot,
                )
                .unwrap();
                expected += e;
            }
        }
        assert!((score - expected).abs() < 1e-12);
    }

    #[test]
    fn clash_gives_sentinel_not_error() {
        let mut receptor = MolecularSystem::argon_pair(0.38);
        receptor.atoms.truncate(1);
        let mut ligand = MolecularSystem::argon_pair(0.38);
        ligand.atoms.truncate(1);
        ligand.atoms[0].position = receptor.atoms[0].position;
        let score = score_pose(&receptor, &ligand, &PotentialParams::default(), false);
        assert_eq!(score, CLASH_SCORE);
    }

    #[test]
    fn parallel_bit_identical_to_sequential() {
        let job = small_job(50, 42);
        let seq = dock(&job, 1, DockMode::Sequential).unwrap();
        let par = dock(&job, 8, DockMode::Parallel).unwrap();
        assert_eq!(seq.poses.len(), par.poses.len());
        for (a, b) in seq.poses.iter().zip(&par.poses) {
            assert_eq!(a.score.to_bits(), b.score.to_bits());
            assert_eq!(a.pose, b.pose);
        }
        assert_eq!(seq.clash_count, par.clash_count);
    }

    #[test]
    fn standard_conformer_counts_run() {
        for n in [10, 100, 500] {
            let job = small_job(n, 42);
            let res = dock(&job, 2, DockMode::Parallel).unwrap();
            assert_eq!(res.poses.len(), n);
        }
    }

    #[test]
    fn top_k_selection() {
        let mk = |idx: usize, score: f64| ScoredPose {
            pose: Pose {
                conformer_index: idx,
                rotation: Quaternion::IDENTITY,
                translation: Vec3::ZERO,
            },
            score,
        };
        let results = vec![mk(0, 5.0), mk(1, 1.0), mk(2, 3.0)];
        let (top, truncated) = select_top_k(&results, 2).unwrap();
        assert!(!truncated);
        assert_eq!(top[0].pose.conformer_index, 1);
        assert_eq!(top[1].pose.conformer_index, 2);

        // tie-break by smaller index
        let results = vec![mk(4, 2.0), mk(2, 2.0)];
        let (top, _) = select_top_k(&results, 1).unwrap();
        assert_eq!(top[0].pose.conformer_index, 2);

        // k larger than the result set
        let results = vec![mk(0, 1.0), mk(1, 2.0), mk(2, 3.0)];
        let (top, truncated) = select_top_k(&results, 10).unwrap();
        assert_eq!(top.len(), 3);
        assert!(truncated);
    }

    #[test]
    fn poses_csv_has_header_and_rows() {
        let job = small_job(3, 1);
        let res = dock(&job, 1, DockMode::Sequential).unwrap();
        let csv = poses_csv(&res.poses);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], POSES_CSV_HEADER);
        assert_eq!(lines.len(), 4);
    }
}
