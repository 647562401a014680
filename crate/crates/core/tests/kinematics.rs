mod common;

use std::collections::HashSet;

use common::*;
use nalgebra::{UnitQuaternion, Vector3};
use wristcap_core::kinematics::{
    fk, ik, jacobian, make_variant, IkOptions, JointSpec, KinematicChain, Variant, VariantParams,
};
use wristcap_core::pose::Pose;
use wristcap_core::transmission::WristLimits;

fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..3 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).abs());
        }
    }
    m
}

#[test]
fn fk_matches_matrix_product_oracle() {
    let mut rng = rng(11);
    for _ in 0..1000 {
        let chain = random_chain(&mut rng);
        let q = random_joints(&chain, &mut rng);
        let got = pose_matrix(&fk(&chain, &q).unwrap());
        let want = oracle_fk(&chain, &q);
        assert!(max_abs_diff(&got, &want) < 1e-9, "{got:?} vs {want:?}");
    }
}

#[test]
fn fk_matches_oracle_on_shipped_arms_and_variants() {
    let mut rng = rng(12);
    let params = VariantParams::default();
    for text in [
        wristcap_core::scenario::BUILTIN_LWA3,
        wristcap_core::scenario::BUILTIN_IIWA,
    ] {
        let bare = wristcap_core::kinematics::ChainFile::parse(text)
            .unwrap()
            .to_chain()
            .unwrap();
        for v in Variant::ALL {
            let chain = make_variant(&bare, v, &params).unwrap();
            for _ in 0..200 {
                let q = random_joints(&chain, &mut rng);
                let got = pose_matrix(&fk(&chain, &q).unwrap());
                assert!(max_abs_diff(&got, &oracle_fk(&chain, &q)) < 1e-9);
            }
        }
    }
}

#[test]
fn fk_is_bit_deterministic() {
    let mut rng = rng(13);
    let chain = random_chain(&mut rng);
    let q = random_joints(&chain, &mut rng);
    let a = fk(&chain, &q).unwrap();
    let b = fk(&chain, &q).unwrap();
    assert_eq!(a.position, b.position);
    assert_eq!(a.orientation.coords, b.orientation.coords);
}

#[test]
fn jacobian_matches_finite_differences() {
    let mut rng = rng(21);
    for _ in 0..300 {
        let chain = random_chain(&mut rng);
        // keep the step inside the limits
        let q: Vec<f64> = chain
            .joints
            .iter()
            .map(|j| {
                use rand::Rng;
                rng.random_range(j.lo + 0.01..j.hi - 0.01)
            })
            .collect();
        let jac = jacobian(&chain, &q).unwrap();
        for (i, col) in finite_difference_jacobian(&chain, &q).iter().enumerate() {
            let lin_fd = Vector3::new(col[0], col[1], col[2]);
            let ang_fd = Vector3::new(col[3], col[4], col[5]);
            let lin = jac.fixed_view::<3, 1>(0, i).into_owned();
            let ang = jac.fixed_view::<3, 1>(3, i).into_owned();
            assert!(
                (lin - lin_fd).norm() <= 1e-5 * lin_fd.norm().max(1.0),
                "linear column {i}: {lin:?} vs {lin_fd:?}"
            );
            assert!(
                (ang - ang_fd).norm() <= 1e-5 * ang_fd.norm().max(1.0),
                "angular column {i}: {ang:?} vs {ang_fd:?}"
            );
        }
    }
}

#[test]
fn ik_solves_fk_generated_targets() {
    let chain = default_arm();
    let opts = IkOptions::default();
    let mut rng = rng(31);
    let mut solved = 0;
    for _ in 0..1000 {
        let q = random_joints(&chain, &mut rng);
        let target = fk(&chain, &q).unwrap();
        if let Some(sol) = ik(&chain, &target, &opts).unwrap().solution() {
            // every certificate re-verified independently
            let m = oracle_fk(&chain, &sol.joints);
            let t = pose_matrix(&target);
            let dp = ((m[0][3] - t[0][3]).powi(2)
                + (m[1][3] - t[1][3]).powi(2)
                + (m[2][3] - t[2][3]).powi(2))
            .sqrt();
            assert!(dp <= opts.pos_tol, "position error {dp}");
            assert!(rotation_angle_deg(&m, &t) <= opts.ori_tol);
            assert!(chain.check_joints(&sol.joints).is_ok());
            solved += 1;
        }
    }
    assert!(solved >= 990, "solved {solved}/1000");
}

#[test]
fn ik_restarts_are_deterministic() {
    let chain = default_arm();
    let mut rng = rng(32);
    for seed in 0..20 {
        let q = random_joints(&chain, &mut rng);
        let target = fk(&chain, &q).unwrap();
        let opts = IkOptions::default().with_seed(seed);
        assert_eq!(
            ik(&chain, &target, &opts).unwrap(),
            ik(&chain, &target, &opts).unwrap()
        );
    }
}

#[test]
fn adapter_moves_only_orientation_when_tool_lies_on_its_axis() {
    // tool offset along the flange x axis, which is the adapter tilt axis
    let bare = KinematicChain::new(
        "probe",
        vec![
            JointSpec::dh(
                "j1",
                0.0,
                -std::f64::consts::FRAC_PI_2,
                300.0,
                0.0,
                -170.0,
                170.0,
            ),
            JointSpec::dh("j2", 250.0, 0.0, 0.0, 0.0, -120.0, 120.0),
            JointSpec::dh(
                "j3",
                0.0,
                std::f64::consts::FRAC_PI_2,
                0.0,
                0.0,
                -170.0,
                170.0,
            ),
        ],
        Pose::from_translation(120.0, 0.0, 0.0),
    )
    .unwrap();
    let adapter = make_variant(&bare, Variant::Adapter60, &VariantParams::default()).unwrap();
    let mut rng = rng(41);
    for _ in 0..500 {
        let q = random_joints(&bare, &mut rng);
        let a = fk(&bare, &q).unwrap();
        let b = fk(&adapter, &q).unwrap();
        assert!((a.position - b.position).norm() < 1e-9);
        assert!((a.orientation_error_deg(&b) - 60.0).abs() < 1e-9);
    }
}

#[test]
fn adapter_offset_is_constant_in_the_tool_frame() {
    let bare = default_arm();
    let adapter = make_variant(&bare, Variant::Adapter60, &VariantParams::default()).unwrap();
    let mut rng = rng(42);
    let mut first: Option<UnitQuaternion<f64>> = None;
    for _ in 0..200 {
        let q = random_joints(&bare, &mut rng);
        let rel = fk(&bare, &q)
            .unwrap()
            .inverse()
            .compose(&fk(&adapter, &q).unwrap());
        let r = rel.orientation;
        assert!((r.angle().to_degrees() - 60.0).abs() < 1e-9);
        match first {
            None => first = Some(r),
            Some(f) => assert!(f.angle_to(&r) < 1e-9),
        }
    }
}

/// Reachable (position, orientation) cells of a chain under exhaustive
/// enumeration: positions on a 10 mm lattice, rotation entries on a 0.05 lattice.
fn reachable_cells(chain: &KinematicChain, step: f64) -> HashSet<[i64; 12]> {
    let axes: Vec<Vec<f64>> = chain
        .joints
        .iter()
        .map(|j| {
            let n = ((j.hi - j.lo) / step).round() as usize;
            (0..=n).map(|k| j.lo + k as f64 * step).collect()
        })
        .collect();
    let mut cells = HashSet::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let q: Vec<f64> = idx.iter().zip(&axes).map(|(i, a)| a[*i]).collect();
        let m = oracle_fk(chain, &q);
        let mut key = [0i64; 12];
        for r in 0..3 {
            key[r] = (m[r][3] / 10.0).round() as i64;
            for c in 0..3 {
                key[3 + 3 * r + c] = (m[r][c] * 20.0).round() as i64;
            }
        }
        cells.insert(key);
        let mut k = 0;
        loop {
            if k == idx.len() {
                return cells;
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[test]
fn wrist_reaches_a_superset_of_bare_cells() {
    let bare = KinematicChain::new(
        "planar3",
        vec![
            JointSpec::dh("j1", 100.0, 0.0, 0.0, 0.0, -45.0, 45.0),
            JointSpec::dh("j2", 80.0, 0.0, 0.0, 0.0, -45.0, 45.0),
            JointSpec::dh("j3", 60.0, 0.0, 0.0, 0.0, -45.0, 45.0),
        ],
        Pose::from_xyz_rpy([0.0; 3], [180.0, 0.0, 0.0]),
    )
    .unwrap();
    let params = VariantParams {
        wrist_length: 0.0,
        wrist_limits: WristLimits::default(),
        ..VariantParams::default()
    };
    let wrist = make_variant(&bare, Variant::Wrist, &params).unwrap();
    let bare_cells = reachable_cells(&bare, 5.0);
    let wrist_cells = reachable_cells(&wrist, 5.0);
    assert!(wrist_cells.len() > bare_cells.len());
    let missing = bare_cells.difference(&wrist_cells).count();
    assert_eq!(
        missing, 0,
        "{missing} bare cells not reached with the wrist"
    );
}

#[test]
fn neutral_wrist_extends_the_flange_by_its_length() {
    let bare = default_arm();
    let params = VariantParams::default();
    let wrist = make_variant(&bare, Variant::Wrist, &params).unwrap();
    let mut rng = rng(51);
    for _ in 0..100 {
        let q = random_joints(&bare, &mut rng);
        let mut qw = q.clone();
        qw.extend([0.0, 0.0]);
        let a = fk(&bare, &q).unwrap();
        let b = fk(&wrist, &qw).unwrap();
        let expected = a.position + a.orientation * Vector3::new(0.0, 0.0, params.wrist_length);
        assert!((b.position - expected).norm() < 1e-9);
        assert!(a.orientation_error_deg(&b) < 1e-9);
    }
}
