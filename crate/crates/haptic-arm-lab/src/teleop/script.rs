use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One scripted hand-position keyframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub t: f64,
    pub position: [f64; 3],
}

/// Piecewise-cubic (Catmull-Rom) interpolation of position keyframes with a
/// fixed orientation. Holds the end positions with zero velocity outside the
/// keyframe span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub keyframes: Vec<Keyframe>,
    /// Constant hand orientation as a rotation vector, rad.
    #[serde(default)]
    pub orientation: [f64; 3],
}

impl Trajectory {
    pub fn new(keyframes: Vec<Keyframe>) -> Result<Self> {
        let t = Trajectory {
            keyframes,
            orientation: [0.0; 3],
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.keyframes.len() < 2 {
            return Err(Error::InvalidConfig(
                "trajectory needs at least two keyframes".into(),
            ));
        }
        for pair in self.keyframes.windows(2) {
            if !(pair[0].t < pair[1].t) {
                return Err(Error::InvalidConfig(
                    "keyframe times must be strictly increasing".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_scaled_axis(Vector3::from(self.orientation))
    }

    pub fn duration(&self) -> f64 {
        self.keyframes.last().map(|k| k.t).unwrap_or(0.0)
    }

    /// Position and velocity at time `t`.
    pub fn sample(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let kf = &self.keyframes;
        let first = kf.first().unwrap();
        let last = kf.last().unwrap();
        if t <= first.t {
            return (Vector3::from(first.position), Vector3::zeros());
        }
        if t >= last.t {
            return (Vector3::from(last.position), Vector3::zeros());
        }
        let seg = kf.partition_point(|k| k.t <= t).saturating_sub(1);
        let k1 = &kf[seg];
        let k2 = &kf[seg + 1];
        let h = k2.t - k1.t;
        let s = (t - k1.t) / h;
        let p1 = Vector3::from(k1.position);
        let p2 = Vector3::from(k2.position);
        let m1 = self.tangent(seg);
        let m2 = self.tangent(seg + 1);
        // Cubic Hermite basis.
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let pos = p1 * h00 + m1 * (h10 * h) + p2 * h01 + m2 * (h11 * h);
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let vel = (p1 * dh00 + m1 * (dh10 * h) + p2 * dh01 + m2 * (dh11 * h)) / h;
        (pos, vel)
    }

    /// Velocity tangent at keyframe `k`. Catmull-Rom finite differences,
    /// except that a keyframe adjacent to a constant (hold) segment gets a
    /// zero tangent: holds stay exactly still and motion eases in and out
    /// of them.
    fn tangent(&self, k: usize) -> Vector3<f64> {
        let kf = &self.keyframes;
        let slope = |a: usize, b: usize| {
            (Vector3::from(kf[b].position) - Vector3::from(kf[a].position))
                / (kf[b].t - kf[a].t)
        };
        let prev = (k > 0).then(|| slope(k - 1, k));
        let next = (k + 1 < kf.len()).then(|| slope(k, k + 1));
        const STILL: f64 = 1e-12;
        match (prev, next) {
            (Some(p), Some(n)) => {
                if p.norm() < STILL || n.norm() < STILL {
                    Vector3::zeros()
                } else {
                    (Vector3::from(kf[k + 1].position) - Vector3::from(kf[k - 1].position))
                        / (kf[k + 1].t - kf[k - 1].t)
                }
            }
            (None, Some(n)) => n,
            (Some(p), None) => p,
            (None, None) => Vector3::zeros(),
        }
    }

    /// Mirror across the sagittal plane (y = 0).
    pub fn mirrored(&self) -> Trajectory {
        Trajectory {
            keyframes: self
                .keyframes
                .iter()
                .map(|k| Keyframe {
                    t: k.t,
                    position: [k.position[0], -k.position[1], k.position[2]],
                })
                .collect(),
            orientation: [
                -self.orientation[0],
                self.orientation[1],
                -self.orientation[2],
            ],
        }
    }
}
