use nalgebra::Vector3;

/// Capsule: a segment swept by a sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Self {
        Capsule { a, b, radius }
    }

    /// Signed surface distance to another capsule; negative means
    /// interpenetration.
    pub fn distance(&self, other: &Capsule) -> f64 {
        segment_distance(&self.a, &self.b, &other.a, &other.b) - self.radius - other.radius
    }
}

/// Closest distance between segments `[p1, q1]` and `[p2, q2]`.
///
/// Standard clamped closest-point parametrization; handles degenerate
/// (point-like) segments.
pub fn segment_distance(
    p1: &Vector3<f64>,
    q1: &Vector3<f64>,
    p2: &Vector3<f64>,
    q2: &Vector3<f64>,
) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (s, t);
    const EPS: f64 = 1e-14;
    if a <= EPS && e <= EPS {
        s = 0.0;
        t = 0.0;
    } else if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let s0 = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                s = s0;
                t = t0;
            }
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: grid sampling of the (s,t) parameter square to
    /// find the basin, then exact alternating 1-D minimization. The squared
    /// distance is convex in (s,t), so coordinate descent with closed-form
    /// clamped line minima converges to the global minimum even along the
    /// flat valleys of near-parallel segments.
    fn brute_force(
        p1: &Vector3<f64>,
        q1: &Vector3<f64>,
        p2: &Vector3<f64>,
        q2: &Vector3<f64>,
    ) -> f64 {
        let eval = |s: f64, t: f64| {
            let c1 = p1 + (q1 - p1) * s;
            let c2 = p2 + (q2 - p2) * t;
            (c1 - c2).norm()
        };
        let coarse = 100usize;
        let mut best = (0.0, 0.0, f64::INFINITY);
        for i in 0..=coarse {
            for j in 0..=coarse {
                let (s, t) = (i as f64 / coarse as f64, j as f64 / coarse as f64);
                let d = eval(s, t);
                if d < best.2 {
                    best = (s, t, d);
                }
            }
        }
        let d1 = q1 - p1;
        let d2 = q2 - p2;
        let (mut s, mut t) = (best.0, best.1);
        for _ in 0..200 {
            // argmin over s for fixed t, clamped; then the same over t.
            let a = d1.dot(&d1);
            if a > 1e-14 {
                let target = p2 + d2 * t;
                s = ((target - p1).dot(&d1) / a).clamp(0.0, 1.0);
            }
            let e = d2.dot(&d2);
            if e > 1e-14 {
                let target = p1 + d1 * s;
                t = ((target - p2).dot(&d2) / e).clamp(0.0, 1.0);
            }
        }
        eval(s, t).min(best.2)
    }

    #[test]
    fn matches_brute_force_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let rv = |rng: &mut ChaCha8Rng| {
            Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        };
        for _ in 0..1000 {
            let (p1, q1, p2, q2) = (rv(&mut rng), rv(&mut rng), rv(&mut rng), rv(&mut rng));
            let fast = segment_distance(&p1, &q1, &p2, &q2);
            let slow = brute_force(&p1, &q1, &p2, &q2);
            assert!(
                (fast - slow).abs() < 1e-6,
                "distance {fast} vs brute {slow}"
            );
        }
    }

    #[test]
    fn overlapping_unit_capsules_interpenetrate() {
        let a = Capsule::new(
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            1.0,
        );
        let b = Capsule::new(
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(1.0, 1.0, 0.0),
            1.0,
        );
        let d = a.distance(&b);
        assert!((d - (1.0 - 2.0)).abs() < 1e-12);
        assert!(d < 0.0);
    }

    #[test]
    fn degenerate_segments_fall_back_to_points() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        let q = Vector3::new(4.0, 2.0, 3.0);
        assert!((segment_distance(&p, &p, &q, &q) - 3.0).abs() < 1e-12);
        assert!((segment_distance(&p, &p, &p, &p)).abs() < 1e-15);
    }

    #[test]
    fn parallel_segments() {
        let d = segment_distance(
            &Vector3::new(0.0, 0.0, 0.0),
            &Vector3::new(1.0, 0.0, 0.0),
            &Vector3::new(0.0, 0.5, 0.0),
            &Vector3::new(1.0, 0.5, 0.0),
        );
        assert!((d - 0.5).abs() < 1e-12);
    }
}
