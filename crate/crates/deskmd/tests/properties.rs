//! Randomized property tests for the invariants the library leans on:
//! chunk plans partition their range, the Amdahl fit is exact on model
//! data, CSV round trips are lossless, medians ignore record order, and
//! pose application preserves rigid geometry.

use proptest::prelude::*;

use deskmd::bench::{
    amdahl_fit, amdahl_model_times, compute_scaling, records_from_csv, records_to_csv,
    scaling_from_csv, scaling_to_csv, BenchStage, BenchmarkRecord,
};
use deskmd::docking::{apply_pose, Pose, Quaternion};
use deskmd::exec::plan_chunks;
use deskmd::geom::{min_image_displacement, Vec3};
use deskmd::system::MolecularSystem;

proptest! {
    #[test]
    fn chunk_plan_partitions_range(total in 0usize..5000, workers in 1usize..64) {
        let plan = plan_chunks(total, workers);
        // chunks are contiguous, in order, and cover 0..total exactly once
        let mut next = 0usize;
        for chunk in &plan.chunks {
            prop_assert_eq!(chunk.start, next);
            prop_assert!(chunk.end > chunk.start);
            prop_assert!(chunk.end - chunk.start <= plan.chunk_size);
            next = chunk.end;
        }
        prop_assert_eq!(next, total);
        if total > 0 {
            prop_assert!(plan.chunk_size >= 1);
        }
    }

    #[test]
    fn amdahl_fit_recovers_model_fraction(f in 0.0f64..=1.0, t1 in 0.1f64..1000.0) {
        let rows = amdahl_model_times(f, t1, &[1, 2, 3, 4, 6, 8]);
        let fit = amdahl_fit(&rows).unwrap();
        prop_assert!((fit.f - f).abs() < 1e-9, "f {} vs {}", fit.f, f);
        prop_assert!((fit.t1 - t1).abs() / t1 < 1e-9);
        prop_assert!(fit.residual < 1e-9 * t1);
    }

    #[test]
    fn benchmark_csv_round_trip_is_lossless(
        walls in prop::collection::vec(1e-9f64..1e6, 1..40),
    ) {
        let records: Vec<BenchmarkRecord> = walls
            .iter()
            .enumerate()
            .map(|(i, &wall_seconds)| BenchmarkRecord {
                stage: [BenchStage::Em, BenchStage::Nvt, BenchStage::Md, BenchStage::Dock][i % 4],
                workload: i * 7 + 1,
                workers: i % 16 + 1,
                repetition: i,
                wall_seconds,
            })
            .collect();
        let back = records_from_csv(&records_to_csv(&records)).unwrap();
        prop_assert_eq!(&records, &back);
        for (a, b) in records.iter().zip(&back) {
            prop_assert_eq!(a.wall_seconds.to_bits(), b.wall_seconds.to_bits());
        }
    }

    #[test]
    fn scaling_csv_round_trip_is_lossless(f in 0.0f64..=1.0, t1 in 0.1f64..100.0) {
        let rows = amdahl_model_times(f, t1, &[1, 2, 4, 8, 16]);
        let back = scaling_from_csv(&scaling_to_csv(&rows)).unwrap();
        prop_assert_eq!(rows.len(), back.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!(a.median_seconds.to_bits(), b.median_seconds.to_bits());
            prop_assert_eq!(a.speedup.to_bits(), b.speedup.to_bits());
            prop_assert_eq!(a.efficiency.to_bits(), b.efficiency.to_bits());
        }
    }

    #[test]
    fn scaling_medians_ignore_record_order(
        walls in prop::collection::vec(0.01f64..10.0, 3..9),
        perm_seed in any::<u64>(),
    ) {
        // one stage/workload, single-worker baseline plus the same
        // repetitions shuffled: medians must not depend on record order
        let mut records: Vec<BenchmarkRecord> = walls
            .iter()
            .enumerate()
            .map(|(i, &wall_seconds)| BenchmarkRecord {
                stage: BenchStage::Dock,
                workload: 100,
                workers: 1,
                repetition: i,
                wall_seconds,
            })
            .collect();
        let baseline = compute_scaling(&records).unwrap();
        // deterministic shuffle driven by perm_seed
        let mut s = perm_seed;
        for i in (1..records.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (s >> 33) as usize % (i + 1);
            records.swap(i, j);
        }
        let shuffled = compute_scaling(&records).unwrap();
        prop_assert_eq!(
            baseline[0].median_seconds.to_bits(),
            shuffled[0].median_seconds.to_bits()
        );
    }

    #[test]
    fn pose_application_is_rigid(
        qw in -1.0f64..1.0, qx in -1.0f64..1.0, qy in -1.0f64..1.0, qz in -1.0f64..1.0,
        tx in -2.0f64..2.0, ty in -2.0f64..2.0, tz in -2.0f64..2.0,
    ) {
        prop_assume!((qw * qw + qx * qx + qy * qy + qz * qz).sqrt() > 1e-3);
        let ligand = MolecularSystem::argon_lattice(2, 0.8);
        let pose = Pose {
            conformer_index: 0,
            rotation: Quaternion::new(qw, qx, qy, qz),
            translation: Vec3::new(tx, ty, tz),
        };
        let moved = apply_pose(&ligand, &pose);
        for i in 0..ligand.len() {
            for j in (i + 1)..ligand.len() {
                let before = (ligand.atoms[j].position - ligand.atoms[i].position).norm();
                let after = (moved.atoms[j].position - moved.atoms[i].position).norm();
                prop_assert!((before - after).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn min_image_components_stay_in_half_open_box(
        ax in -30.0f64..30.0, ay in -30.0f64..30.0, az in -30.0f64..30.0,
        bx in -30.0f64..30.0, by in -30.0f64..30.0, bz in -30.0f64..30.0,
        l in 0.5f64..10.0,
    ) {
        let d = min_image_displacement(Vec3::new(ax, ay, az), Vec3::new(bx, by, bz), Some(l));
        for c in [d.x, d.y, d.z] {
            prop_assert!(c > -l / 2.0 - 1e-12 && c <= l / 2.0 + 1e-12, "component {c} box {l}");
        }
    }
}
