//! Derivative cocycles along orbits: Lyapunov spectra, the invariant splitting,
//! periodic points and their eigenvalue relations.

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::batch;
use crate::error::{Error, Result};
use crate::linalg::{self, line_angle, mgs_qr, Mat3, TangentVector};
use crate::maps::MapFamily;
use crate::torus::{sin_cos_turns, torus_dist, wrap_centered, TorusPoint};

pub const DEFAULT_DEPTH: usize = 40;
pub const MIN_LYAPUNOV_STEPS: usize = 1000;
/// Re-orthonormalization steps discarded before averaging so the frame is aligned.
pub const LYAPUNOV_BURN_IN: usize = 100;
const UNDERFLOW: f64 = 1e-300;
const DEGENERATE_ANGLE: f64 = 1e-6;
const NEWTON_STEPS: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
const SINGULAR_DET: f64 = 1e-10;
const ORDER_MARGIN: f64 = 1e-6;

fn generic_vector() -> TangentVector {
    TangentVector::new(0.512_3, -0.331_1, 0.791_9).normalize()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Descending.
    pub exponents: [f64; 3],
    pub n_iterations: usize,
    /// Spread of the running averages over the last 10% of iterates.
    pub tail_variation: [f64; 3],
}

impl LyapunovSpectrum {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    pub fn center(&self) -> f64 {
        self.exponents[1]
    }
}

/// Exponents from repeated QR re-orthonormalization of `DF` along the orbit of `p`.
///
/// The first [`LYAPUNOV_BURN_IN`] steps only align the frame; the `n` steps after
/// them are averaged.
pub fn lyapunov_spectrum(map: &MapFamily, p: &TorusPoint, n: usize) -> Result<LyapunovSpectrum> {
    if n < MIN_LYAPUNOV_STEPS {
        return Err(Error::Precondition(format!("lyapunov_spectrum needs n >= {MIN_LYAPUNOV_STEPS}, got {n}")));
    }
    let tail_start = n - n / 10;
    let mut q = Mat3::identity();
    let mut x = *p;
    for _ in 0..LYAPUNOV_BURN_IN {
        let (next, j) = map.step(&x);
        q = mgs_qr(&(j * q)).0;
        x = next;
    }
    let mut sums = [0.0f64; 3];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for i in 0..n {
        let (next, j) = map.step(&x);
        let (q2, r) = mgs_qr(&(j * q));
        for k in 0..3 {
            if !(r[k] > UNDERFLOW) {
                return Err(Error::Underflow { iterate: i });
            }
            sums[k] += r[k].ln();
        }
        if i + 1 >= tail_start {
            for k in 0..3 {
                let avg = sums[k] / (i + 1) as f64;
                lo[k] = lo[k].min(avg);
                hi[k] = hi[k].max(avg);
            }
        }
        q = q2;
        x = next;
    }
    let mut exponents = sums.map(|s| s / n as f64);
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum { exponents, n_iterations: n, tail_variation: [0, 1, 2].map(|k| hi[k] - lo[k]) })
}

/// Normal of the center-stable plane: covector pulled back from `F^depth(p)`.
pub fn cs_normal(map: &MapFamily, p: &TorusPoint, depth: usize) -> TangentVector {
    let mut jacs = Vec::with_capacity(depth);
    let mut x = *p;
    for _ in 0..depth {
        let (next, j) = map.step(&x);
        jacs.push(j);
        x = next;
    }
    let mut n = generic_vector();
    for j in jacs.iter().rev() {
        n = (j.transpose() * n).normalize();
    }
    n
}

/// Normal of the center-unstable plane: covector pushed forward from `F^{-depth}(p)`.
pub fn cu_normal(map: &MapFamily, p: &TorusPoint, depth: usize) -> TangentVector {
    let inv = map.inverse();
    let mut jacs = Vec::with_capacity(depth);
    let mut x = *p;
    for _ in 0..depth {
        let (prev, j) = inv.step(&x);
        jacs.push(j);
        x = prev;
    }
    let mut n = generic_vector();
    for j in jacs.iter().rev() {
        n = (j.transpose() * n).normalize();
    }
    n
}

fn orient_up(v: TangentVector) -> TangentVector {
    if v.z.abs() > 1e-12 {
        return if v.z < 0.0 { -v } else { v };
    }
    let k = v.iamax();
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

fn orient_x(v: TangentVector) -> TangentVector {
    if v.x.abs() > 1e-12 {
        return if v.x < 0.0 { -v } else { v };
    }
    orient_up(v)
}

/// Unit center direction `n_cu × n_cs`, oriented with positive `z`.
pub fn center_direction(map: &MapFamily, p: &TorusPoint, depth: usize) -> Result<TangentVector> {
    let c = cu_normal(map, p, depth).cross(&cs_normal(map, p, depth));
    let s = c.norm();
    if s < DEGENERATE_ANGLE {
        return Err(Error::DegenerateSplitting { angle: s.asin() });
    }
    Ok(orient_up(c / s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strong {
    Stable,
    Unstable,
}

/// Strong stable or unstable direction by power iteration over `depth` steps.
pub fn strong_direction(map: &MapFamily, p: &TorusPoint, which: Strong, depth: usize) -> TangentVector {
    // unstable: push forward along the backward orbit; stable: the same for the inverse map
    let g = match which {
        Strong::Unstable => *map,
        Strong::Stable => map.inverse(),
    };
    let back = g.inverse();
    let mut pts = Vec::with_capacity(depth + 1);
    let mut x = *p;
    for _ in 0..depth {
        x = back.eval(&x);
        pts.push(x);
    }
    let mut v = generic_vector();
    for q in pts.iter().rev() {
        v = (g.jacobian(q) * v).normalize();
    }
    orient_x(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Splitting {
    pub base: TorusPoint,
    pub e_s: TangentVector,
    pub e_c: TangentVector,
    pub e_u: TangentVector,
    pub cs_normal: TangentVector,
    pub cu_normal: TangentVector,
    /// `|DF e_c| / |DF e_s|` at the base point.
    pub gap_sc: f64,
    /// `|DF e_u| / |DF e_c|` at the base point.
    pub gap_cu: f64,
    /// Angle between the cu- and cs-planes.
    pub plane_angle: f64,
    /// `|det(e_s, e_c, e_u)|`.
    pub transversality: f64,
    pub depth: usize,
}

pub fn splitting_at(map: &MapFamily, p: &TorusPoint, depth: usize) -> Result<Splitting> {
    if depth < 10 {
        return Err(Error::Precondition(format!("splitting depth must be >= 10, got {depth}")));
    }
    let n_cs = cs_normal(map, p, depth);
    let n_cu = cu_normal(map, p, depth);
    let c = n_cu.cross(&n_cs);
    let s = c.norm();
    let plane_angle = line_angle(&n_cu, &n_cs);
    if s < DEGENERATE_ANGLE {
        return Err(Error::DegenerateSplitting { angle: plane_angle });
    }
    let e_c = orient_up(c / s);
    let e_u = strong_direction(map, p, Strong::Unstable, depth);
    let e_s = strong_direction(map, p, Strong::Stable, depth);
    let j = map.jacobian(p);
    let (gs, gc, gu) = ((j * e_s).norm(), (j * e_c).norm(), (j * e_u).norm());
    let transversality = Mat3::from_columns(&[e_s, e_c, e_u]).determinant().abs();
    Ok(Splitting {
        base: *p,
        e_s,
        e_c,
        e_u,
        cs_normal: n_cs,
        cu_normal: n_cu,
        gap_sc: gc / gs,
        gap_cu: gu / gc,
        plane_angle,
        transversality,
        depth,
    })
}

/// Angle between `DF(p) v` and the line `w` at `F(p)`.
pub fn transport_angle(map: &MapFamily, p: &TorusPoint, v: &TangentVector, w: &TangentVector) -> f64 {
    line_angle(&(map.jacobian(p) * v), w)
}

/// `(1/n) Σ ln |DF(p_i) e_c(p_i)|` along the orbit after `depth` burn-in steps.
///
/// The vector is pushed forward and projected back onto the cs-plane at every step;
/// cs-normals come from a backward covector sweep over blocks of the orbit with
/// `depth` steps of look-ahead.
pub fn center_exponent(map: &MapFamily, p: &TorusPoint, n: usize, depth: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("center_exponent needs n >= 1".into()));
    }
    const BLOCK: usize = 4096;
    let total = depth + n;
    let mut x0 = *p;
    let mut v: Option<TangentVector> = None;
    let mut sum = 0.0;
    let mut k = 0;
    let mut pts: Vec<TorusPoint> = Vec::with_capacity(BLOCK + depth + 1);
    let mut jacs: Vec<Mat3> = Vec::with_capacity(BLOCK + depth);
    let mut normals: Vec<TangentVector> = vec![TangentVector::zeros(); BLOCK];
    while k < total {
        let len = BLOCK.min(total - k);
        pts.clear();
        jacs.clear();
        pts.push(x0);
        for i in 0..len + depth {
            let (next, j) = map.step(&pts[i]);
            jacs.push(j);
            pts.push(next);
        }
        let mut c = generic_vector();
        for i in (0..len + depth).rev() {
            c = (jacs[i].transpose() * c).normalize();
            if i < len {
                normals[i] = c;
            }
        }
        for i in 0..len {
            let nrm = normals[i];
            let mut u = v.unwrap_or_else(|| {
                let ez = TangentVector::z();
                let w = ez - nrm * ez.dot(&nrm);
                if w.norm() > 1e-3 {
                    w
                } else {
                    TangentVector::x() - nrm * nrm.x
                }
            });
            u -= nrm * u.dot(&nrm);
            u /= u.norm();
            let w = jacs[i] * u;
            let g = w.norm();
            if !(g > UNDERFLOW) {
                return Err(Error::Underflow { iterate: k + i });
            }
            if k + i >= depth {
                sum += g.ln();
            }
            v = Some(w / g);
        }
        x0 = pts[len];
        k += len;
    }
    Ok(sum / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRecord {
    pub point: TorusPoint,
    pub period: u32,
    /// `(re, im)` sorted by increasing modulus.
    pub eigenvalues: [[f64; 2]; 3],
    /// `|λ^s| <= |λ^c| <= |λ^u|`.
    pub moduli: [f64; 3],
    /// The two smallest eigenvalues form a complex pair (no real center direction).
    pub complex_pair: bool,
    pub center_attracting: bool,
    /// `min(|λ^c|/|λ^s|, |λ^u|/|λ^c|) - 1`.
    pub ordering_margin: f64,
    /// `|F^k(point) - point|` on the torus.
    pub residual: f64,
    /// Newton residual norms, one per evaluation.
    pub newton_residuals: Vec<f64>,
}

impl FixedPointRecord {
    pub fn lambda_s(&self) -> f64 {
        self.moduli[0]
    }

    pub fn lambda_c(&self) -> f64 {
        self.moduli[1]
    }

    pub fn lambda_u(&self) -> f64 {
        self.moduli[2]
    }

    /// Moduli strictly ordered with the required margin.
    pub fn is_partially_hyperbolic(&self) -> bool {
        self.ordering_margin > ORDER_MARGIN
    }
}

fn lifted_residual(c: [f64; 3], y: [f64; 3]) -> TangentVector {
    TangentVector::new(wrap_centered(y[0] - c[0]), wrap_centered(y[1] - c[1]), wrap_centered(y[2] - c[2]))
}

/// Newton's method on `F^k(x) - x` in lifted coordinates.
pub fn find_periodic(map: &MapFamily, guess: &TorusPoint, k: u32) -> Result<FixedPointRecord> {
    if k == 0 {
        return Err(Error::Precondition("period must be >= 1".into()));
    }
    let mut c = guess.coords();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..=NEWTON_STEPS {
        let (y, j) = map.step_n_lift(c, k);
        let g = lifted_residual(c, y);
        let r = g.norm();
        history.push(r);
        let a = j - Mat3::identity();
        let det = a.determinant();
        if det.abs() < SINGULAR_DET {
            return Err(Error::NonHyperbolic { det: det.abs() });
        }
        if r < NEWTON_TOL {
            converged = true;
            break;
        }
        if history.len() > NEWTON_STEPS {
            break;
        }
        let delta = a.lu().solve(&(-g)).ok_or(Error::NonHyperbolic { det: det.abs() })?;
        for i in 0..3 {
            c[i] += delta[i];
        }
    }
    if !converged {
        return Err(Error::SearchFailure { steps: NEWTON_STEPS, residual: *history.last().unwrap() });
    }
    let point = TorusPoint::wrap(c);
    let (_, dfk) = map.step_n_lift(point.coords(), k);
    let residual = torus_dist(&map.apply_n(&point, k as i64), &point);
    Ok(classify(point, k, &dfk, residual, history))
}

fn classify(point: TorusPoint, period: u32, dfk: &Mat3, residual: f64, newton_residuals: Vec<f64>) -> FixedPointRecord {
    let ev = linalg::eigenvalues(dfk);
    let moduli = ev.map(|z| z.norm());
    let complex_pair = ev.iter().any(|z: &Complex<f64>| z.im != 0.0);
    if complex_pair {
        log::warn!("non-real spectrum at {point} (period {period}): {:.6}±{:.6}i, {:.6}", ev[0].re, ev[0].im.abs(), ev[2].re);
    }
    let ordering_margin = (moduli[1] / moduli[0]).min(moduli[2] / moduli[1]) - 1.0;
    FixedPointRecord {
        point,
        period,
        eigenvalues: ev.map(|z| [z.re, z.im]),
        moduli,
        complex_pair,
        center_attracting: moduli[1] < 1.0,
        ordering_margin,
        residual,
        newton_residuals,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `λ^u(Q) λ^c(Q) - λ^u(P)`.
    pub gap: f64,
    /// `|λ^u(Q) - λ^u(P)|`.
    pub unstable_mismatch: f64,
    /// `|λ^s λ^c λ^u - 1|` at P and at Q.
    pub volume_error: [f64; 2],
    pub gap_positive: bool,
    pub unstable_equal: bool,
    pub volume_ok: bool,
}

pub const EIGEN_TOL: f64 = 1e-8;

pub fn eigenvalue_gap_check(p: &FixedPointRecord, q: &FixedPointRecord) -> Result<GapReport> {
    if !p.center_attracting || q.center_attracting {
        return Err(Error::Config(format!(
            "expected attracting P and repelling Q, got |λc(P)| = {}, |λc(Q)| = {}",
            p.lambda_c(),
            q.lambda_c()
        )));
    }
    if p.period != q.period {
        return Err(Error::Config(format!("periods differ: {} vs {}", p.period, q.period)));
    }
    let gap = q.lambda_u() * q.lambda_c() - p.lambda_u();
    let unstable_mismatch = (q.lambda_u() - p.lambda_u()).abs();
    let volume_error = [p, q].map(|r| (r.moduli.iter().product::<f64>() - 1.0).abs());
    Ok(GapReport {
        gap,
        unstable_mismatch,
        volume_error,
        gap_positive: gap > 0.0,
        unstable_equal: unstable_mismatch < EIGEN_TOL,
        volume_ok: volume_error.iter().all(|&e| e < EIGEN_TOL),
    })
}

/// Zero-mean trigonometric observables used by the ergodicity probe.
pub const OBSERVABLES: [&str; 5] = ["cos 2πx", "sin 2πy", "cos 2πz", "cos 2π(x+z)", "sin 2π(y+2z)"];

fn observe(p: &TorusPoint) -> [f64; 5] {
    [sin_cos_turns(p.x).1, sin_cos_turns(p.y).0, sin_cos_turns(p.z).1, sin_cos_turns(p.x + p.z).1, sin_cos_turns(p.y + 2.0 * p.z).0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityReport {
    pub observables: Vec<String>,
    pub n: usize,
    /// One row per seed.
    pub means: Vec<[f64; 5]>,
    /// Max minus min over seeds, per observable.
    pub spread: [f64; 5],
    pub tolerance: f64,
    pub pass: bool,
}

/// Birkhoff averages of [`OBSERVABLES`] from each seed; a heuristic, not a proof.
pub fn ergodicity_probe(map: &MapFamily, seeds: &[TorusPoint], n: usize, tolerance: f64) -> ErgodicityReport {
    let means = batch::map_indexed(seeds, |_, p| {
        let mut acc = [0.0; 5];
        let mut x = *p;
        for _ in 0..n {
            x = map.eval(&x);
            let o = observe(&x);
            for k in 0..5 {
                acc[k] += o[k];
            }
        }
        acc.map(|s| s / n as f64)
    });
    let mut spread = [0.0; 5];
    for k in 0..5 {
        let (lo, hi) = means.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| (lo.min(m[k]), hi.max(m[k])));
        spread[k] = if means.is_empty() { 0.0 } else { hi - lo };
    }
    ErgodicityReport {
        observables: OBSERVABLES.iter().map(|s| s.to_string()).collect(),
        n,
        means,
        spread,
        tolerance,
        pass: spread.iter().all(|&s| s < tolerance),
    }
}

/// Spectra for many seeds, in seed order.
pub fn lyapunov_batch(map: &MapFamily, seeds: &[TorusPoint], n: usize) -> Vec<Result<LyapunovSpectrum>> {
    batch::map_indexed(seeds, |_, p| lyapunov_spectrum(map, p, n))
}

/// Splittings for many points, in input order.
pub fn splitting_batch(map: &MapFamily, points: &[TorusPoint], depth: usize) -> Vec<Result<Splitting>> {
    batch::map_indexed(points, |_, p| splitting_at(map, p, depth))
}
