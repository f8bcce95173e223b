//! Arithmetic on the 3-torus `(R/Z)^3`, the circle, and integer automorphisms of `T^2`.

use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values this close below an integer wrap to zero instead of to `0.999...`.
pub const WRAP_CLAMP: f64 = 1e-15;

/// Reduce a real number to `[0, 1)`.
///
/// Uses floor-based wrapping; anything within [`WRAP_CLAMP`] below the next integer is
/// sent to `0.0` so that grid-cell ids computed from reduced coordinates are stable.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    let r = v - v.floor();
    if r >= 1.0 - WRAP_CLAMP {
        0.0
    } else {
        r
    }
}

/// Signed representative of `v` modulo 1 in `[-1/2, 1/2)`.
#[inline]
pub fn wrap_centered(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

/// `(sin 2πt, cos 2πt)` with the argument reduced to the nearest quarter turn first.
///
/// Quarter-turn points are exact: `cos` at `t = 1/4` is exactly zero, which keeps
/// the fixed points `(0, 0, 1/4)` and `(0, 0, 3/4)` of the skew families exactly fixed.
#[inline]
pub fn sin_cos_turns(t: f64) -> (f64, f64) {
    let quarter = (4.0 * t).round();
    let r = t - 0.25 * quarter;
    let (s, c) = (TAU * r).sin_cos();
    match (quarter as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

#[inline]
pub fn sin_turns(t: f64) -> f64 {
    sin_cos_turns(t).0
}

/// A point of `T^3`, every coordinate in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl TorusPoint {
    pub const ORIGIN: TorusPoint = TorusPoint { x: 0.0, y: 0.0, z: 0.0 };

    /// Reduce finite coordinates onto the torus.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        reduce([x, y, z])
    }

    /// Reduce coordinates that are known to be finite (map outputs).
    #[inline]
    pub(crate) fn wrap(c: [f64; 3]) -> Self {
        debug_assert!(c.iter().all(|v| v.is_finite()), "non-finite lift {c:?}");
        TorusPoint { x: wrap_unit(c[0]), y: wrap_unit(c[1]), z: wrap_unit(c[2]) }
    }

    #[inline]
    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Uniform (volume) random point.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        TorusPoint::wrap([rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
    }

    /// Translate by a real vector and reduce.
    pub fn shifted(&self, d: [f64; 3]) -> Self {
        TorusPoint::wrap([self.x + d[0], self.y + d[1], self.z + d[2]])
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.12}, {:.12}, {:.12})", self.x, self.y, self.z)
    }
}

/// Reduce a raw triple to the torus; non-finite input is rejected.
pub fn reduce(c: [f64; 3]) -> Result<TorusPoint> {
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::InputDomain(format!("non-finite coordinates {c:?}")));
    }
    Ok(TorusPoint::wrap(c))
}

/// Componentwise shortest displacement `q - p` over integer shifts.
#[inline]
pub fn torus_delta(p: &TorusPoint, q: &TorusPoint) -> [f64; 3] {
    [wrap_centered(q.x - p.x), wrap_centered(q.y - p.y), wrap_centered(q.z - p.z)]
}

/// Flat distance on `T^3`: the minimum over integer shifts of the Euclidean distance.
#[inline]
pub fn torus_dist(p: &TorusPoint, q: &TorusPoint) -> f64 {
    let d = torus_delta(p, q);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Distance between a torus point and a lifted point, over integer shifts.
#[inline]
pub fn lift_dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [wrap_centered(b[0] - a[0]), wrap_centered(b[1] - a[1]), wrap_centered(b[2] - a[2])];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Arc distance on the circle `R/Z`, in `[0, 1/2]`.
#[inline]
pub fn circle_dist(s: f64, t: f64) -> f64 {
    let d = (s - t).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// An integer 2x2 matrix with determinant ±1, i.e. an automorphism of `T^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat2Z {
    pub a11: i64,
    pub a12: i64,
    pub a21: i64,
    pub a22: i64,
}

impl Mat2Z {
    /// The cat map `(2 1; 1 1)`.
    pub const CAT: Mat2Z = Mat2Z { a11: 2, a12: 1, a21: 1, a22: 1 };
    /// `(3 2; 1 1)`, base of the Z_2-equivariant family.
    pub const THREE_TWO: Mat2Z = Mat2Z { a11: 3, a12: 2, a21: 1, a22: 1 };

    pub fn new(a11: i64, a12: i64, a21: i64, a22: i64) -> Result<Self> {
        let m = Mat2Z { a11, a12, a21, a22 };
        if m.det().abs() != 1 {
            return Err(Error::Config(format!("{m:?} has determinant {}, not ±1", m.det())));
        }
        Ok(m)
    }

    pub fn det(&self) -> i64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> i64 {
        self.a11 + self.a22
    }

    /// No eigenvalue on the unit circle.
    pub fn is_hyperbolic(&self) -> bool {
        match self.det() {
            1 => self.trace().abs() > 2,
            -1 => self.trace() != 0,
            _ => false,
        }
    }

    pub fn inverse(&self) -> Mat2Z {
        let d = self.det();
        Mat2Z { a11: d * self.a22, a12: -d * self.a12, a21: -d * self.a21, a22: d * self.a11 }
    }

    pub fn mul(&self, o: &Mat2Z) -> Mat2Z {
        Mat2Z {
            a11: self.a11 * o.a11 + self.a12 * o.a21,
            a12: self.a11 * o.a12 + self.a12 * o.a22,
            a21: self.a21 * o.a11 + self.a22 * o.a21,
            a22: self.a21 * o.a12 + self.a22 * o.a22,
        }
    }

    pub fn pow(&self, n: u32) -> Mat2Z {
        (0..n).fold(Mat2Z { a11: 1, a12: 0, a21: 0, a22: 1 }, |acc, _| acc.mul(self))
    }

    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a11 as f64 * x + self.a12 as f64 * y, self.a21 as f64 * x + self.a22 as f64 * y)
    }

    /// Real eigenvalues (larger modulus first); `None` when the pair is complex.
    pub fn eigenvalues(&self) -> Option<(f64, f64)> {
        let t = self.trace() as f64;
        let d = self.det() as f64;
        let disc = t * t - 4.0 * d;
        if disc < 0.0 {
            return None;
        }
        let big = 0.5 * (t + t.signum() * disc.sqrt());
        Some((big, d / big))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64, z: f64) -> TorusPoint {
        TorusPoint::new(x, y, z).unwrap()
    }

    #[test]
    fn reduce_shifts_by_integers() {
        assert_eq!(pt(1.25, -0.5, 3.0), TorusPoint { x: 0.25, y: 0.5, z: 0.0 });
        assert_eq!(pt(0.0, 0.999999, 0.5), TorusPoint { x: 0.0, y: 0.999999, z: 0.5 });
    }

    #[test]
    fn tiny_negative_wraps_to_zero() {
        let p = pt(-1e-17, 0.0, 0.0);
        assert_eq!(p.x, 0.0);
        assert_eq!(wrap_unit(-1e-16), 0.0);
        assert_eq!(wrap_unit(1.0 - 5e-16), 0.0);
        assert!(wrap_unit(1.0 - 1e-14) > 0.99);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(TorusPoint::new(f64::NAN, 0.0, 0.0), Err(Error::InputDomain(_))));
        assert!(reduce([0.0, f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn distances() {
        assert_eq!(torus_dist(&TorusPoint::ORIGIN, &TorusPoint::ORIGIN), 0.0);
        assert!((torus_dist(&pt(0.1, 0.0, 0.0), &pt(0.9, 0.0, 0.0)) - 0.2).abs() < 1e-15);
        assert_eq!(circle_dist(0.0, 0.5), 0.5);
        assert!((circle_dist(0.95, 0.05) - 0.1).abs() < 1e-15);
        assert_eq!(circle_dist(0.3, 0.3), 0.0);
    }

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(sin_cos_turns(0.25).1, 0.0);
        assert_eq!(sin_cos_turns(0.75).1, 0.0);
        assert_eq!(sin_cos_turns(0.0).0, 0.0);
        assert_eq!(sin_cos_turns(0.5).0, 0.0);
        assert_eq!(sin_cos_turns(0.25).0, 1.0);
        for &t in &[0.1, 0.37, 0.61, 0.93, -0.2, 3.7, 12.123] {
            let (s, c) = sin_cos_turns(t);
            assert!((s - (TAU * t).sin()).abs() < 1e-13);
            assert!((c - (TAU * t).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn cat_map_spectrum() {
        let a = Mat2Z::CAT;
        assert_eq!(a.det(), 1);
        assert_eq!(a.trace(), 3);
        assert!(a.is_hyperbolic());
        let (l1, l2) = a.eigenvalues().unwrap();
        let s5 = 5f64.sqrt();
        assert!((l1 - (3.0 + s5) / 2.0).abs() < 1e-12);
        assert!((l2 - (3.0 - s5) / 2.0).abs() < 1e-12);
        assert_eq!(a.mul(&a.inverse()), Mat2Z { a11: 1, a12: 0, a21: 0, a22: 1 });
        assert!(!Mat2Z::new(1, 1, 0, 1).unwrap().is_hyperbolic());
        assert!(Mat2Z::new(2, 0, 0, 1).is_err());
    }

    #[test]
    fn period_four_base_point() {
        // A^4 = (34 21; 21 13) fixes (1/15, 2/15) mod 1.
        let a4 = Mat2Z::CAT.pow(4);
        assert_eq!(a4, Mat2Z { a11: 34, a12: 21, a21: 21, a22: 13 });
        let (x, y) = a4.apply(1.0, 2.0);
        assert_eq!((x as i64 - 1) % 15, 0);
        assert_eq!((y as i64 - 2) % 15, 0);
    }

    #[test]
    fn triangle_inequality_against_shift_enumeration() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let brute = |p: &TorusPoint, q: &TorusPoint| {
            let mut best = f64::INFINITY;
            for i in -1..=1 {
                for j in -1..=1 {
                    for k in -1..=1 {
                        let d = [q.x - p.x + i as f64, q.y - p.y + j as f64, q.z - p.z + k as f64];
                        best = best.min((d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt());
                    }
                }
            }
            best
        };
        for _ in 0..1000 {
            let (p, q, r) = (TorusPoint::random(&mut rng), TorusPoint::random(&mut rng), TorusPoint::random(&mut rng));
            assert!((torus_dist(&p, &q) - brute(&p, &q)).abs() < 1e-14);
            assert!(torus_dist(&p, &r) <= torus_dist(&p, &q) + torus_dist(&q, &r) + 1e-14);
            assert!(torus_dist(&p, &q) <= 3f64.sqrt() / 2.0 + 1e-15);
        }
    }

    #[test]
    fn lift_round_trip_many_points() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let p = TorusPoint::random(&mut rng);
            let m: [i32; 3] = [0, 1, 2].map(|_| rand::Rng::gen_range(&mut rng, -50..50));
            let q = reduce([p.x + m[0] as f64, p.y + m[1] as f64, p.z + m[2] as f64]).unwrap();
            assert!(torus_dist(&p, &q) < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn reduced_coordinates_in_unit_interval(x in -1e6f64..1e6, y in -1e6f64..1e6, z in -1e6f64..1e6) {
            let p = reduce([x, y, z]).unwrap();
            for c in p.coords() {
                prop_assert!((0.0..1.0).contains(&c));
            }
            let d = [x - p.x, y - p.y, z - p.z];
            for v in d {
                prop_assert!((v - v.round()).abs() < 1e-9);
            }
        }

        #[test]
        fn torus_dist_shift_invariant(
            p in (0f64..1.0, 0f64..1.0, 0f64..1.0),
            q in (0f64..1.0, 0f64..1.0, 0f64..1.0),
            m in (-5i32..5, -5i32..5, -5i32..5),
        ) {
            let a = reduce([p.0, p.1, p.2]).unwrap();
            let b = reduce([q.0, q.1, q.2]).unwrap();
            let a2 = a.shifted([m.0 as f64 + 0.0, m.1 as f64, m.2 as f64]);
            let b2 = b.shifted([m.0 as f64, m.1 as f64, m.2 as f64]);
            prop_assert!((torus_dist(&a, &b) - torus_dist(&a2, &b2)).abs() < 1e-12);
            prop_assert!((torus_dist(&a, &b) - torus_dist(&b, &a)).abs() < 1e-15);
        }

        #[test]
        fn circle_dist_bounded(s in 0f64..1.0, t in 0f64..1.0) {
            let d = circle_dist(s, t);
            prop_assert!((0.0..=0.5).contains(&d));
            prop_assert_eq!(d, circle_dist(t, s));
        }
    }
}
