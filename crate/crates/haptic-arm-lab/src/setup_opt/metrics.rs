use nalgebra::{DVector, Vector3};

use super::{Capsule, HumanModel, IkOptions, ScoreBreakdown, SetupConfiguration, Weights, WorkspaceSample};
use super::ik::{solve_ik, IkOutcome};
use crate::rigid_body::RobotModel;
use crate::Result;

/// Proximity below which the collision penalty ramps up, m.
pub const SAFE_DISTANCE: f64 = 0.1;
/// Flat penalty added per interpenetrating sample.
pub const HARD_INFEASIBILITY_PENALTY: f64 = 100.0;
/// Robot capsule material within this radius of the end-effector belongs to
/// the grasped handle assembly and is excluded from collision checks, m.
pub const HANDLE_EXCLUSION_RADIUS: f64 = 0.2;

/// IK postures for every sample (None where unreachable). All metric
/// functions share this so their notions of "reachable" agree.
fn reach_postures(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    ik: &IkOptions,
) -> Result<Vec<Option<DVector<f64>>>> {
    samples
        .iter()
        .map(|s| {
            Ok(match solve_ik(model, config, &s.pose, ik)? {
                IkOutcome::Converged(q) => Some(q),
                IkOutcome::Unreachable(_) => None,
            })
        })
        .collect()
}

/// Fraction of workspace samples with successful IK.
pub fn coverage_score(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    ik: &IkOptions,
) -> Result<f64> {
    let postures = reach_postures(model, config, samples, ik)?;
    Ok(coverage_from(&postures))
}

fn coverage_from(postures: &[Option<DVector<f64>>]) -> f64 {
    postures.iter().filter(|p| p.is_some()).count() as f64 / postures.len() as f64
}

/// Translational manipulability: the square root of the product of the
/// `min(3, dof)` largest eigenvalues of `J_lin J_linᵀ`. For spatial arms
/// this is the Yoshikawa measure `√det(J J ᵀ)`; for planar arms the
/// structurally zero direction is excluded so the in-plane volume is
/// measured instead of a hard zero.
pub fn manipulability(model: &RobotModel, q: &DVector<f64>) -> Result<f64> {
    let jac = model.jacobian(q)?;
    let jlin = jac.rows(0, 3).into_owned();
    let gram = &jlin * jlin.transpose();
    let mut eig: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = model.dof().min(3);
    let product: f64 = eig.iter().take(k).map(|e| e.max(0.0)).product();
    Ok(product.sqrt())
}

/// Joint-limit margin factor `Π 4 dᵢ (1 - dᵢ)` with `dᵢ` the normalized
/// position in limits: 1 at mid-range, 0 at a limit.
fn limit_margin(model: &RobotModel, q: &DVector<f64>) -> f64 {
    q.iter()
        .zip(&model.joints)
        .map(|(qi, j)| {
            let d = (qi - j.pos_limits.0) / (j.pos_limits.1 - j.pos_limits.0);
            (4.0 * d * (1.0 - d)).max(0.0)
        })
        .product()
}

/// Mean manipulability × joint-limit margin over the sample set; unreachable
/// samples contribute zero.
pub fn dexterity_score(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    ik: &IkOptions,
) -> Result<f64> {
    let postures = reach_postures(model, config, samples, ik)?;
    dexterity_from(model, &postures)
}

fn dexterity_from(model: &RobotModel, postures: &[Option<DVector<f64>>]) -> Result<f64> {
    let mut sum = 0.0;
    for p in postures.iter().flatten() {
        sum += manipulability(model, p)? * limit_margin(model, p);
    }
    Ok(sum / postures.len() as f64)
}

/// The 26 unit direction vectors {-1,0,1}³ \ {0}, normalized.
fn wrench_directions() -> Vec<Vector3<f64>> {
    let mut dirs = Vec::with_capacity(26);
    for i in -1..=1 {
        for j in -1..=1 {
            for k in -1..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                dirs.push(Vector3::new(i as f64, j as f64, k as f64).normalize());
            }
        }
    }
    dirs
}

/// How much of each sample's required wrench is renderable within the joint
/// torque limits, worst case over 26 directions, clamped at 1; mean over the
/// sample set (unreachable samples contribute zero).
pub fn wrench_feasibility_score(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    ik: &IkOptions,
) -> Result<f64> {
    let postures = reach_postures(model, config, samples, ik)?;
    wrench_from(model, samples, &postures)
}

fn wrench_from(
    model: &RobotModel,
    samples: &[WorkspaceSample],
    postures: &[Option<DVector<f64>>],
) -> Result<f64> {
    let dirs = wrench_directions();
    let limits = model.torque_limit_vector();
    let mut sum = 0.0;
    for (sample, posture) in samples.iter().zip(postures) {
        let Some(q) = posture else { continue };
        let jac_t = model.jacobian(q)?.transpose();
        let mut worst: f64 = 1.0;
        for d in &dirs {
            let w = DVector::from_column_slice(&[
                sample.force_requirement * d.x,
                sample.force_requirement * d.y,
                sample.force_requirement * d.z,
                sample.torque_requirement * d.x,
                sample.torque_requirement * d.y,
                sample.torque_requirement * d.z,
            ]);
            let tau = &jac_t * &w;
            // Largest α with |α τᵢ| ≤ limᵢ for all joints: the per-joint
            // linear program in closed form.
            let mut alpha = f64::INFINITY;
            for i in 0..model.dof() {
                if tau[i].abs() > 1e-12 {
                    alpha = alpha.min(limits[i] / tau[i].abs());
                }
            }
            let requirement_nonzero =
                sample.force_requirement > 0.0 || sample.torque_requirement > 0.0;
            if alpha.is_infinite() && requirement_nonzero && tau.amax() <= 1e-12 {
                // Null-space wrench with a real requirement: cannot render.
                alpha = 0.0;
            }
            worst = worst.min(alpha.min(1.0));
            if worst == 0.0 {
                break;
            }
        }
        sum += worst;
    }
    Ok(sum / samples.len() as f64)
}

/// Robot link capsules at a posture: consecutive frame origins swept by the
/// model's link radius (zero-length segments skipped). Material within
/// `HANDLE_EXCLUSION_RADIUS` of the end-effector is the grasped handle
/// assembly — the operator's hand is on it by design — and is clipped away.
fn robot_capsules(
    model: &RobotModel,
    config: &SetupConfiguration,
    q: &DVector<f64>,
) -> Result<Vec<Capsule>> {
    let base = config.base_pose();
    let mut points = vec![base.translation];
    for pose in model.link_poses(q)? {
        points.push(base.compose(&pose).translation);
    }
    let ee = points.pop().expect("terminal pose present");
    let mut caps = Vec::new();
    for pair in points.windows(2) {
        if (pair[1] - pair[0]).norm() > 1e-9 {
            for (a, b) in clip_segment_outside_sphere(pair[0], pair[1], ee, HANDLE_EXCLUSION_RADIUS)
            {
                caps.push(Capsule::new(a, b, model.link_radius));
            }
        }
    }
    Ok(caps)
}

/// The (up to two) sub-segments of [a, b] lying outside the sphere
/// (center, radius).
fn clip_segment_outside_sphere(
    a: Vector3<f64>,
    b: Vector3<f64>,
    center: Vector3<f64>,
    radius: f64,
) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let d = b - a;
    let f = a - center;
    let qa = d.dot(&d);
    let qb = 2.0 * f.dot(&d);
    let qc = f.dot(&f) - radius * radius;
    if qa < 1e-18 {
        return if qc > 0.0 { vec![(a, b)] } else { vec![] };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        // No crossing: entirely inside or outside.
        return if qc > 0.0 { vec![(a, b)] } else { vec![] };
    }
    let sq = disc.sqrt();
    let t1 = ((-qb - sq) / (2.0 * qa)).clamp(0.0, 1.0);
    let t2 = ((-qb + sq) / (2.0 * qa)).clamp(0.0, 1.0);
    let mut out = Vec::new();
    let point = |t: f64| a + d * t;
    if t1 > 1e-9 {
        out.push((a, point(t1)));
    }
    if t2 < 1.0 - 1e-9 {
        out.push((point(t2), b));
    }
    out.retain(|(p, q)| (q - p).norm() > 1e-9);
    out
}

/// Mean hinge penalty on robot-to-human proximity below `SAFE_DISTANCE`,
/// plus a flat `HARD_INFEASIBILITY_PENALTY` per interpenetrating sample.
/// Returns `(penalty, hard_infeasible)`.
pub fn collision_penalty(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    hm: &HumanModel,
    ik: &IkOptions,
) -> Result<(f64, bool)> {
    let postures = reach_postures(model, config, samples, ik)?;
    collision_from(model, config, samples, hm, &postures)
}

fn collision_from(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    hm: &HumanModel,
    postures: &[Option<DVector<f64>>],
) -> Result<(f64, bool)> {
    let mut sum = 0.0;
    let mut hard = false;
    for (sample, posture) in samples.iter().zip(postures) {
        let Some(q) = posture else { continue };
        let human = hm.capsules(&sample.pose.translation);
        let mut d_min = f64::INFINITY;
        for rc in robot_capsules(model, config, q)? {
            for hc in &human {
                d_min = d_min.min(rc.distance(hc));
            }
        }
        if d_min < 0.0 {
            hard = true;
            sum += HARD_INFEASIBILITY_PENALTY;
        }
        sum += ((SAFE_DISTANCE - d_min).max(0.0)) / SAFE_DISTANCE;
    }
    Ok((sum / samples.len() as f64, hard))
}

/// Assemble the four metrics into a `ScoreBreakdown` with the weighted
/// total. Pure and deterministic given the samples; `weights.dexterity_scale`
/// must be resolved (Some) by the caller.
pub fn evaluate(
    model: &RobotModel,
    config: &SetupConfiguration,
    samples: &[WorkspaceSample],
    hm: &HumanModel,
    weights: &Weights,
    ik: &IkOptions,
) -> Result<ScoreBreakdown> {
    let postures = reach_postures(model, config, samples, ik)?;
    let coverage = coverage_from(&postures);
    let dexterity = dexterity_from(model, &postures)?;
    let wrench = wrench_from(model, samples, &postures)?;
    let (collision, hard) = collision_from(model, config, samples, hm, &postures)?;
    let scale = weights.dexterity_scale.unwrap_or(1.0).max(1e-12);
    let dexterity_normalized = (dexterity / scale).clamp(0.0, 1.0);
    let total = weights.coverage * coverage
        + weights.dexterity * dexterity_normalized
        + weights.wrench * wrench
        - weights.collision * collision;
    Ok(ScoreBreakdown {
        coverage,
        dexterity,
        dexterity_normalized,
        wrench_feasibility: wrench,
        collision_penalty: collision,
        hard_infeasible: hard,
        total,
    })
}
