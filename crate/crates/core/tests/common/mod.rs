//! Independent oracles and toy fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wristcap_core::kinematics::{ChainFile, JointRow, JointSpec, KinematicChain, PoseRow};
use wristcap_core::pose::Pose;
use wristcap_core::scenario::{
    BoxGeometry, ClearanceSpec, GridSpec, OrientationSpec, ScenarioConfig, ScenarioSettings,
};
use wristcap_core::transmission::{TransmissionParams, WristLimits};

pub type Mat4 = [[f64; 4]; 4];

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn identity() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn rot_x(t: f64) -> Mat4 {
    let (s, c) = t.sin_cos();
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, c, -s, 0.0],
        [0.0, s, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn rot_y(t: f64) -> Mat4 {
    let (s, c) = t.sin_cos();
    [
        [c, 0.0, s, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [-s, 0.0, c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn rot_z(t: f64) -> Mat4 {
    let (s, c) = t.sin_cos();
    [
        [c, -s, 0.0, 0.0],
        [s, c, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

pub fn trans(x: f64, y: f64, z: f64) -> Mat4 {
    let mut m = identity();
    m[0][3] = x;
    m[1][3] = y;
    m[2][3] = z;
    m
}

/// Homogeneous matrix of a pose given as position + rotation matrix.
pub fn pose_matrix(p: &Pose) -> Mat4 {
    let r = p.orientation.to_rotation_matrix();
    let mut m = identity();
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = r[(i, j)];
        }
        m[i][3] = p.position[i];
    }
    m
}

/// Tool matrix by chained 4x4 products, written from the DH definition
/// independently of the library's isometry code.
pub fn oracle_fk(chain: &KinematicChain, q_deg: &[f64]) -> Mat4 {
    let mut t = identity();
    for (j, q) in chain.joints.iter().zip(q_deg) {
        t = mat_mul(&t, &pose_matrix(&j.mount));
        t = mat_mul(&t, &rot_z(q.to_radians() + j.theta_offset));
        t = mat_mul(&t, &trans(0.0, 0.0, j.d));
        t = mat_mul(&t, &trans(j.a, 0.0, 0.0));
        t = mat_mul(&t, &rot_x(j.alpha));
    }
    mat_mul(&t, &pose_matrix(&chain.tool))
}

pub fn random_pose(rng: &mut impl Rng, scale: f64) -> Pose {
    Pose::from_xyz_rpy(
        [
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
            rng.random_range(-scale..scale),
        ],
        [
            rng.random_range(-180.0..180.0),
            rng.random_range(-89.0..89.0),
            rng.random_range(-180.0..180.0),
        ],
    )
}

/// Random chain of 1..=8 joints with random DH rows, some with mounts.
pub fn random_chain(rng: &mut impl Rng) -> KinematicChain {
    let n = rng.random_range(1..=8);
    let joints = (0..n)
        .map(|i| {
            let lo = rng.random_range(-180.0..0.0);
            let hi = rng.random_range(1.0..180.0);
            let j = JointSpec::dh(
                format!("j{i}"),
                rng.random_range(-400.0..400.0),
                rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
                rng.random_range(-400.0..400.0),
                rng.random_range(-1.0..1.0),
                lo,
                hi,
            );
            if rng.random_bool(0.3) {
                j.with_mount(random_pose(rng, 100.0))
            } else {
                j
            }
        })
        .collect();
    KinematicChain::new("random", joints, random_pose(rng, 200.0)).unwrap()
}

pub fn random_joints(chain: &KinematicChain, rng: &mut impl Rng) -> Vec<f64> {
    chain
        .joints
        .iter()
        .map(|j| rng.random_range(j.lo..=j.hi))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn default_arm() -> KinematicChain {
    ChainFile::parse(wristcap_core::scenario::BUILTIN_LWA3)
        .unwrap()
        .to_chain()
        .unwrap()
}

/// Two-joint toy: a 100 mm shoulder link about the base z axis and a spin
/// joint about the vertical tool axis at its tip. The tool points down.
pub fn toy_chain_file() -> ChainFile {
    ChainFile {
        name: "toy".into(),
        home: vec![],
        tool: PoseRow {
            xyz: [0.0; 3],
            rpy: [180.0, 0.0, 0.0],
        },
        joints: vec![
            JointRow {
                name: "shoulder".into(),
                a: 100.0,
                alpha: 0.0,
                d: 0.0,
                theta_offset: 0.0,
                lo: -100.0,
                hi: 100.0,
                max_velocity: 0.0,
                mount: None,
            },
            JointRow {
                name: "spin".into(),
                a: 0.0,
                alpha: 0.0,
                d: 0.0,
                theta_offset: 0.0,
                lo: -90.0,
                hi: 90.0,
                max_velocity: 0.0,
                mount: None,
            },
        ],
    }
}

/// 3x3x1 grid at z = 0 on a 100 mm pitch centred on the base, 36 yaws,
/// no clearance. The wrist sits at the tool point with narrowed limits.
pub fn toy_scenario() -> ScenarioConfig {
    let settings = ScenarioSettings {
        chain: String::new(),
        bin: BoxGeometry {
            length: 300.0,
            width: 300.0,
            depth: 20.0,
            wall_thickness: 5.0,
            pose: PoseRow {
                xyz: [0.0, 0.0, -10.0],
                rpy: [0.0; 3],
            },
        },
        grid: GridSpec {
            nx: 3,
            ny: 3,
            nz: 1,
            margin: 0.0,
            floor_margin: 0.0,
            rim_margin: 0.0,
        },
        orientation: OrientationSpec::default(),
        variants: wristcap_core::scenario::VariantGeometry {
            wrist_length: 0.0,
            ..Default::default()
        },
        transmission: TransmissionParams {
            limits: WristLimits {
                flexion_min: 0.0,
                flexion_max: 10.0,
                abduction_min: -10.0,
                abduction_max: 10.0,
            },
            ..TransmissionParams::default()
        },
        clearance: ClearanceSpec {
            enabled: false,
            capsules: vec![],
        },
        ..ScenarioSettings::default()
    };
    settings.validate().unwrap();
    ScenarioConfig {
        settings,
        arm: toy_chain_file(),
    }
}

/// Capability fractions by exhaustive 1° enumeration of every joint: a
/// target counts as reachable when some lattice configuration lands within
/// the IK tolerances of it.
pub fn enumeration_scores(scenario: &ScenarioConfig) -> Vec<f64> {
    let s = &scenario.settings;
    let chain = scenario.chain().unwrap();
    let positions = wristcap_core::scenario::generate_grid(&s.bin, &s.grid).unwrap();
    let rotations = wristcap_core::scenario::orientation_samples(&s.orientation).unwrap();
    let targets: Vec<Vec<Mat4>> = positions
        .iter()
        .map(|p| {
            rotations
                .iter()
                .map(|r| pose_matrix(&Pose::new(*p, *r)))
                .collect()
        })
        .collect();
    let mut hit = vec![vec![false; rotations.len()]; positions.len()];

    let axes: Vec<Vec<f64>> = chain
        .joints
        .iter()
        .map(|j| {
            let lo = j.lo.ceil() as i64;
            let hi = j.hi.floor() as i64;
            (lo..=hi).map(|v| v as f64).collect()
        })
        .collect();
    let mut idx = vec![0usize; axes.len()];
    let mut q = vec![0.0; axes.len()];
    loop {
        for (k, i) in idx.iter().enumerate() {
            q[k] = axes[k][*i];
        }
        let m = oracle_fk(&chain, &q);
        for (c, per_cell) in targets.iter().enumerate() {
            let t0 = &per_cell[0];
            let dp = ((m[0][3] - t0[0][3]).powi(2)
                + (m[1][3] - t0[1][3]).powi(2)
                + (m[2][3] - t0[2][3]).powi(2))
            .sqrt();
            if dp > s.ik.pos_tol {
                continue;
            }
            for (r, t) in per_cell.iter().enumerate() {
                if rotation_angle_deg(&m, t) <= s.ik.ori_tol {
                    hit[c][r] = true;
                }
            }
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == idx.len() {
                return hit
                    .iter()
                    .map(|row| row.iter().filter(|h| **h).count() as f64 / row.len() as f64)
                    .collect();
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

/// Angle of `a^T b` from its trace.
pub fn rotation_angle_deg(a: &Mat4, b: &Mat4) -> f64 {
    let mut tr = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr += a[k][i] * b[k][i];
        }
    }
    ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

/// Central differences of fk with a 1e-6 rad step.
pub fn finite_difference_jacobian(chain: &KinematicChain, q: &[f64]) -> Vec<[f64; 6]> {
    let h: f64 = 1e-6;
    (0..q.len())
        .map(|i| {
            let mut plus = q.to_vec();
            let mut minus = q.to_vec();
            plus[i] += h.to_degrees();
            minus[i] -= h.to_degrees();
            let a = oracle_fk(chain, &plus);
            let b = oracle_fk(chain, &minus);
            let mut col = [0.0; 6];
            for k in 0..3 {
                col[k] = (a[k][3] - b[k][3]) / (2.0 * h);
            }
            // skew part of Ra Rb^T; the trace-based angle is too coarse at this step
            let ra = nalgebra::Matrix3::from_fn(|r, c| a[r][c]);
            let rb = nalgebra::Matrix3::from_fn(|r, c| b[r][c]);
            let d = ra * rb.transpose();
            let w = nalgebra::Vector3::new(
                d[(2, 1)] - d[(1, 2)],
                d[(0, 2)] - d[(2, 0)],
                d[(1, 0)] - d[(0, 1)],
            ) / (4.0 * h);
            col[3..].copy_from_slice(w.as_slice());
            col
        })
        .collect()
}
