//! Small dense linear algebra on `R^3`.

use nalgebra::{Complex, Matrix3, Vector3};

pub type Mat3 = Matrix3<f64>;
pub type TangentVector = Vector3<f64>;

/// Unit vector in the direction of `v`; `None` for the zero vector.
pub fn normalize(v: &TangentVector) -> Option<TangentVector> {
    let n = v.norm();
    (n > 0.0 && n.is_finite()).then(|| v / n)
}

/// Angle between the lines spanned by `u` and `v`, in `[0, π/2]`.
pub fn line_angle(u: &TangentVector, v: &TangentVector) -> f64 {
    let c = u.cross(v).norm();
    let d = u.dot(v).abs();
    c.atan2(d)
}

/// Angle between a vector and a plane given by its normal.
pub fn angle_to_plane(v: &TangentVector, normal: &TangentVector) -> f64 {
    let s = v.dot(normal).abs() / (v.norm() * normal.norm());
    s.min(1.0).asin()
}

/// Angle between two planes given by their normals.
pub fn plane_angle(n1: &TangentVector, n2: &TangentVector) -> f64 {
    line_angle(n1, n2)
}

/// Modified Gram-Schmidt: returns `Q` with orthonormal columns and the diagonal of `R`.
///
/// Columns are processed left to right; the diagonal entries are the norms of the
/// successive orthogonalized columns and are always nonnegative.
pub fn mgs_qr(m: &Mat3) -> (Mat3, [f64; 3]) {
    let mut cols = [m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned()];
    let mut r = [0.0; 3];
    for i in 0..3 {
        let n = cols[i].norm();
        r[i] = n;
        if n > 0.0 {
            cols[i] /= n;
        }
        for j in (i + 1)..3 {
            let c = cols[i].dot(&cols[j]);
            cols[j] -= cols[i] * c;
        }
    }
    (Mat3::from_columns(&cols), r)
}

/// Coefficients `(c2, c1, c0)` of the monic characteristic polynomial
/// `λ^3 + c2 λ^2 + c1 λ + c0`.
pub fn char_poly(m: &Mat3) -> (f64, f64, f64) {
    let tr = m.trace();
    let minors = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] + m[(0, 0)] * m[(2, 2)] - m[(0, 2)] * m[(2, 0)] + m[(1, 1)] * m[(2, 2)]
        - m[(1, 2)] * m[(2, 1)];
    (-tr, minors, -m.determinant())
}

fn polish(c2: f64, c1: f64, c0: f64, mut r: f64) -> f64 {
    for _ in 0..4 {
        let p = ((r + c2) * r + c1) * r + c0;
        let dp = (3.0 * r + 2.0 * c2) * r + c1;
        if dp == 0.0 {
            break;
        }
        let next = r - p / dp;
        if !next.is_finite() || (next - r).abs() <= f64::EPSILON * r.abs() {
            if next.is_finite() {
                r = next;
            }
            break;
        }
        r = next;
    }
    r
}

/// Roots of `λ^3 + c2 λ^2 + c1 λ + c0`, real roots polished by Newton.
///
/// The real root of largest modulus is found in closed form and the remaining
/// pair comes from Vieta's relations, which avoids cancellation when the
/// roots are widely spread.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [Complex<f64>; 3] {
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 + if q <= 0.0 { s } else { -s }).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - p / (3.0 * u)
        }
    } else if p == 0.0 {
        0.0
    } else {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let roots = [0.0, 1.0, 2.0].map(|k| m * (theta - 2.0 * std::f64::consts::PI * k / 3.0).cos());
        *roots.iter().max_by(|a, b| (*a - shift).abs().total_cmp(&(*b - shift).abs())).unwrap()
    };
    let r = polish(c2, c1, c0, t - shift);
    let sum = -c2 - r;
    let prod = if r != 0.0 { -c0 / r } else { c1 };
    let d = sum * sum - 4.0 * prod;
    let mut out = if d >= 0.0 {
        let big = 0.5 * (sum + sum.signum() * d.sqrt());
        let small = if big != 0.0 { prod / big } else { 0.0 };
        [Complex::new(r, 0.0), Complex::new(polish(c2, c1, c0, big), 0.0), Complex::new(polish(c2, c1, c0, small), 0.0)]
    } else {
        let im = 0.5 * (-d).sqrt();
        [Complex::new(r, 0.0), Complex::new(sum / 2.0, im), Complex::new(sum / 2.0, -im)]
    };
    out.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    out
}

/// Eigenvalues of a real 3x3 matrix sorted by increasing modulus.
pub fn eigenvalues(m: &Mat3) -> [Complex<f64>; 3] {
    let (c2, c1, c0) = char_poly(m);
    cubic_roots(c2, c1, c0)
}

/// A unit vector in the kernel of a (numerically) rank-two matrix.
pub fn null_vector(m: &Mat3) -> TangentVector {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let cands = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    let best = cands.iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
    best.normalize()
}
