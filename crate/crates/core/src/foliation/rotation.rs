//! Circle dynamics on invariant center leaves: rotation numbers, the continued
//! periodic circle and fixed points of the return map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::leaf::{land_on, trace_center_leaf, CenterField, CenterLeaf, LineField, TraceOptions};
use crate::maps::MapFamily;
use crate::torus::{circle_dist, wrap_centered, TorusPoint};

const CF_TERMS: usize = 12;
const CF_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationNumberResult {
    /// In `[0, 1)`.
    pub rho: f64,
    pub n_iterations: usize,
    /// `|ρ_n − ρ_{n/2}|` on the circle.
    pub convergence: f64,
    /// Leading continued-fraction partial quotients of `ρ`.
    pub partial_quotients: Vec<u64>,
    pub k: u32,
}

/// Lifted return map on an invariant leaf.
pub struct ReturnMap<'a> {
    pub map: MapFamily,
    pub leaf: &'a CenterLeaf,
    pub k: u32,
}

impl ReturnMap<'_> {
    /// `(T(t), distance)`: lifted image parameter of `t` and how far `F^k` of the leaf
    /// point lands from the leaf.
    pub fn lift(&self, t: f64) -> (f64, f64) {
        let x = self.leaf.lift_at(t);
        let y = self.map.apply_n_lift(x, self.k as i64);
        let loc = self.leaf.locate(&TorusPoint::wrap(y));
        let b = self.leaf.lift_at(loc.t);
        let sz = self.leaf.shift[2] as f64;
        let m = ((y[2] - b[2]) / sz).round();
        (loc.t + m, loc.distance)
    }

    /// Displacement `T(t) − t`.
    pub fn displacement(&self, t: f64) -> f64 {
        self.lift(t).0 - t
    }
}

/// Partial quotients of `x ∈ [0, 1)`, stopping once the remainder is below round-off.
pub fn continued_fraction(x: f64, terms: usize) -> Vec<u64> {
    let mut out = Vec::new();
    let mut r = x;
    for _ in 0..terms {
        if r < CF_FLOOR {
            break;
        }
        let inv = 1.0 / r;
        if (inv - inv.round()).abs() < CF_FLOOR {
            out.push(inv.round() as u64);
            break;
        }
        let a = inv.floor();
        if !a.is_finite() || a > 1e12 {
            break;
        }
        out.push(a as u64);
        r = inv - a;
    }
    out
}

/// Birkhoff average of the lifted displacement of `F^k` on an invariant leaf.
pub fn rotation_number(map: &MapFamily, leaf: &CenterLeaf, k: u32, n: usize) -> Result<RotationNumberResult> {
    if k == 0 || n < 2 {
        return Err(Error::Precondition(format!("rotation_number needs k >= 1 and n >= 2, got k={k} n={n}")));
    }
    let h = leaf.image_hausdorff(map, k as i64, leaf);
    if h >= 10.0 * leaf.step {
        return Err(Error::Precondition(format!("leaf is not invariant under F^{k}: Hausdorff {h:e}")));
    }
    let rm = ReturnMap { map: *map, leaf, k };
    let mut t = 0.0;
    let mut sum = 0.0;
    let mut half = 0.0;
    for i in 0..n {
        let (tt, _) = rm.lift(t);
        sum += tt - t;
        t = tt.rem_euclid(1.0);
        if i + 1 == n / 2 {
            half = sum / (n / 2) as f64;
        }
    }
    let rho = (sum / n as f64).rem_euclid(1.0);
    let rho = if rho >= 1.0 { 0.0 } else { rho };
    Ok(RotationNumberResult {
        rho,
        n_iterations: n,
        convergence: circle_dist(rho, half.rem_euclid(1.0)),
        partial_quotients: continued_fraction(rho, CF_TERMS),
        k,
    })
}

/// Move along the center leaf from `c` to the nearest height `≡ z0 (mod 1)`.
fn slide_to_height(field: &CenterField, c: [f64; 3], z0: f64, h: f64) -> Result<[f64; 3]> {
    let target = z0 + (c[2] - z0).round();
    let sign = if target >= c[2] { 1.0 } else { -1.0 };
    let g = |y: [f64; 3]| sign * (y[2] - target);
    let mut x = c;
    let mut k1 = field.direction(x)? * sign;
    if g(x) == 0.0 {
        return Ok(x);
    }
    for _ in 0..((1.0 / h) as usize * 2) {
        let next = field.rk4(x, &k1, h)?;
        if g(next) >= 0.0 {
            return Ok(land_on(field, x, &k1, h, g)?.1);
        }
        k1 = field.oriented(next, &k1)?;
        x = next;
    }
    Err(Error::Tracing(format!("center curve from {c:?} never reaches height {target}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicLeaf {
    /// Section point `(x, y, z0)` of the invariant circle.
    pub section: TorusPoint,
    pub k: u32,
    pub newton_residuals: Vec<f64>,
    pub leaf: CenterLeaf,
    /// Hausdorff distance between `F^k(leaf)` and the leaf.
    pub invariance: f64,
}

/// Center circle invariant under `F^k`, found by Newton on the height section `z = guess.z`.
///
/// The unknown is the section point `(x, y)`; the residual is the section point of the
/// leaf through `F^k(x, y, z0)` minus `(x, y)`.
pub fn periodic_leaf(map: &MapFamily, guess: &TorusPoint, k: u32, opts: &TraceOptions) -> Result<PeriodicLeaf> {
    let field = CenterField { map: *map, depth: opts.depth };
    let z0 = guess.z;
    let h = opts.step;
    let residual = |x: f64, y: f64| -> Result<[f64; 2]> {
        let img = map.apply_n_lift([x, y, z0], k as i64);
        let s = slide_to_height(&field, img, z0, h)?;
        Ok([wrap_centered(s[0] - x), wrap_centered(s[1] - y)])
    };
    let (mut x, mut y) = (guess.x, guess.y);
    let mut residuals = Vec::new();
    let fd = 1e-7;
    for _ in 0..30 {
        let r = residual(x, y)?;
        let norm = r[0].hypot(r[1]);
        residuals.push(norm);
        if norm < 1e-12 {
            break;
        }
        let rx = residual(x + fd, y)?;
        let ry = residual(x, y + fd)?;
        let j = [[(rx[0] - r[0]) / fd, (ry[0] - r[0]) / fd], [(rx[1] - r[1]) / fd, (ry[1] - r[1]) / fd]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-12 {
            return Err(Error::SearchFailure { steps: residuals.len(), residual: norm });
        }
        let dx = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dy = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        x -= dx;
        y -= dy;
        if residuals.len() >= 3 && norm < 1e-10 && residuals[residuals.len() - 2] <= norm {
            break;
        }
    }
    let last = *residuals.last().unwrap();
    if last > 1e-9 {
        return Err(Error::SearchFailure { steps: residuals.len(), residual: last });
    }
    let section = TorusPoint::wrap([x, y, z0]);
    let leaf = trace_center_leaf(map, &section, opts)?;
    let invariance = leaf.image_hausdorff(map, k as i64, &leaf);
    Ok(PeriodicLeaf { section, k, newton_residuals: residuals, leaf, invariance })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleFixedPoint {
    pub t: f64,
    pub point: TorusPoint,
    pub multiplier: f64,
    pub attracting: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorseSmaleReport {
    pub fixed: Vec<CircleFixedPoint>,
    pub n_attracting: usize,
    pub n_repelling: usize,
    /// Smallest `|multiplier − 1|`.
    pub hyperbolicity: f64,
    /// Finitely many hyperbolic fixed points, alternating in type.
    pub morse_smale: bool,
    /// Largest distance from `F^k` of a grid point to the leaf.
    pub invariance: f64,
}

/// Fixed points of the lifted return map on an invariant leaf, from sign changes of the
/// displacement on a grid refined by bisection.
pub fn fixed_leaf_analysis(map: &MapFamily, leaf: &CenterLeaf, k: u32, grid: usize) -> Result<MorseSmaleReport> {
    let rm = ReturnMap { map: *map, leaf, k };
    let ts: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    let evals: Vec<(f64, f64)> = crate::batch::map_indexed(&ts, |_, &t| rm.lift(t));
    let invariance = evals.iter().map(|e| e.1).fold(0.0, f64::max);
    let d: Vec<f64> = evals.iter().zip(&ts).map(|(e, t)| wrap_centered(e.0 - t)).collect();
    let mut fixed = Vec::new();
    for i in 0..grid {
        let j = (i + 1) % grid;
        let (a, b) = (d[i], d[j]);
        if a.abs() > 0.25 || b.abs() > 0.25 || (a < 0.0) == (b < 0.0) && a != 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (ts[i], ts[i] + 1.0 / grid as f64);
        let mut flo = a;
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            let fm = wrap_centered(rm.displacement(m.rem_euclid(1.0)));
            if (fm < 0.0) == (flo < 0.0) {
                lo = m;
                flo = fm;
            } else {
                hi = m;
            }
        }
        let t = (0.5 * (lo + hi)).rem_euclid(1.0);
        let e = 1e-6;
        let multiplier = 1.0
            + (wrap_centered(rm.displacement((t + e).rem_euclid(1.0))) - wrap_centered(rm.displacement((t - e).rem_euclid(1.0))))
                / (2.0 * e);
        fixed.push(CircleFixedPoint { t, point: leaf.point_at(t), multiplier, attracting: multiplier.abs() < 1.0 });
    }
    let n_attracting = fixed.iter().filter(|f| f.attracting).count();
    let n_repelling = fixed.len() - n_attracting;
    let hyperbolicity = fixed.iter().map(|f| (f.multiplier.abs() - 1.0).abs()).fold(f64::INFINITY, f64::min);
    let alternating = fixed.windows(2).all(|w| w[0].attracting != w[1].attracting)
        && (fixed.len() < 2 || fixed[0].attracting != fixed[fixed.len() - 1].attracting);
    let morse_smale = !fixed.is_empty() && fixed.len() % 2 == 0 && alternating && hyperbolicity > 1e-3;
    Ok(MorseSmaleReport { fixed, n_attracting, n_repelling, hyperbolicity, morse_smale, invariance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::r4;

    fn pt(x: f64, y: f64, z: f64) -> TorusPoint {
        TorusPoint::new(x, y, z).unwrap()
    }

    #[test]
    fn continued_fraction_of_rationals_and_golden_mean() {
        assert_eq!(continued_fraction(0.375, 10), vec![2, 1, 2]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        assert!(continued_fraction(g, 10).iter().all(|&a| a == 1));
    }

    #[test]
    fn rigid_rotation_on_period_four_fiber() {
        let opts = TraceOptions::default();
        for b in [0.02, 0.05] {
            let f = MapFamily::shub_wilkinson(0.0, b).inverse();
            let leaf = trace_center_leaf(&f, &pt(1.0 / 15.0, 2.0 / 15.0, 0.0), &opts).unwrap();
            let r = rotation_number(&f, &leaf, 4, 2000).unwrap();
            let expect = (b * r4(1.0 / 15.0, 2.0 / 15.0)).rem_euclid(1.0);
            assert!(circle_dist(r.rho, expect) < 1e-10, "{} vs {expect}", r.rho);
            assert!(r.convergence < 1e-10);
        }
    }

    #[test]
    fn identity_fibers_do_not_rotate() {
        let f = MapFamily::shub_wilkinson(0.0, 0.0);
        let leaf = trace_center_leaf(&f, &pt(0.0, 0.0, 0.3), &TraceOptions::default()).unwrap();
        let r = rotation_number(&f, &leaf, 1, 100).unwrap();
        assert!(circle_dist(r.rho, 0.0) < 1e-12);
    }

    #[test]
    fn non_invariant_leaf_is_rejected() {
        let f = MapFamily::shub_wilkinson(0.0, 0.05);
        let leaf = trace_center_leaf(&f, &pt(0.3, 0.1, 0.0), &TraceOptions::default()).unwrap();
        assert!(matches!(rotation_number(&f, &leaf, 1, 100), Err(Error::Precondition(_))));
    }

    #[test]
    fn fixed_leaf_is_morse_smale() {
        let f = MapFamily::shub_wilkinson(0.01, 0.01);
        let leaf = trace_center_leaf(&f, &pt(0.0, 0.0, 0.25), &TraceOptions::default()).unwrap();
        assert!(leaf.locate(&pt(0.0, 0.0, 0.75)).distance < 1e-4);
        let r = fixed_leaf_analysis(&f, &leaf, 1, 256).unwrap();
        assert_eq!((r.n_attracting, r.n_repelling), (1, 1));
        assert!(r.morse_smale);
        let att = r.fixed.iter().find(|p| p.attracting).unwrap();
        let d = crate::torus::torus_dist(&att.point, &pt(0.0, 0.0, 0.25));
        assert!(d < 1e-4, "{:?} at {d:e}", r.fixed);
        let rep = r.fixed.iter().find(|p| !p.attracting).unwrap();
        assert!(crate::torus::torus_dist(&rep.point, &pt(0.0, 0.0, 0.75)) < 1e-4);
        assert!((att.multiplier - 0.7302).abs() < 1e-3, "{}", att.multiplier);
    }

    #[test]
    fn continued_circle_rotates_like_the_fiber() {
        let f = MapFamily::shub_wilkinson(0.01, 0.01).inverse();
        let opts = TraceOptions::default();
        let pl = periodic_leaf(&f, &pt(1.0 / 15.0, 2.0 / 15.0, 0.0), 4, &opts).unwrap();
        assert!(pl.invariance < 10.0 * opts.step);
        let r = rotation_number(&f, &pl.leaf, 4, 4000).unwrap();
        let base = (0.01 * r4(1.0 / 15.0, 2.0 / 15.0)).rem_euclid(1.0);
        assert!(circle_dist(r.rho, base) < 0.05, "{} vs {base}", r.rho);
    }
}
