//! Center leaves traced as closed curves by integrating the unit center field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::TangentVector;
use crate::maps::MapFamily;
use crate::tangent::{center_direction, DEFAULT_DEPTH};
use crate::torus::{wrap_centered, TorusPoint};

pub const DEFAULT_STEP: f64 = 2e-3;
pub const MAX_LENGTH: f64 = 3.0;
/// Closure residual allowed per unit of leaf length.
pub const CLOSURE_TOL: f64 = 1e-6;
pub const HAUSDORFF_SAMPLES: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    pub step: f64,
    pub depth: usize,
    pub max_length: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { step: DEFAULT_STEP, depth: DEFAULT_DEPTH, max_length: MAX_LENGTH }
    }
}

impl TraceOptions {
    pub fn with_step(step: f64) -> Self {
        TraceOptions { step, ..Default::default() }
    }
}

#[inline]
pub(crate) fn add(c: [f64; 3], v: &TangentVector, h: f64) -> [f64; 3] {
    [c[0] + h * v.x, c[1] + h * v.y, c[2] + h * v.z]
}

#[inline]
fn sub(a: [f64; 3], b: [f64; 3]) -> TangentVector {
    TangentVector::new(a[0] - b[0], a[1] - b[1], a[2] - b[2])
}

/// Unit line field oriented against a reference direction.
pub(crate) trait LineField {
    fn direction(&self, c: [f64; 3]) -> Result<TangentVector>;

    fn oriented(&self, c: [f64; 3], reference: &TangentVector) -> Result<TangentVector> {
        let v = self.direction(c)?;
        Ok(if v.dot(reference) < 0.0 { -v } else { v })
    }

    /// One classical Runge-Kutta step of length `h` from `c` with oriented tangent `k1`.
    fn rk4(&self, c: [f64; 3], k1: &TangentVector, h: f64) -> Result<[f64; 3]> {
        let k2 = self.oriented(add(c, k1, h / 2.0), k1)?;
        let k3 = self.oriented(add(c, &k2, h / 2.0), k1)?;
        let k4 = self.oriented(add(c, &k3, h), k1)?;
        let v = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        Ok(add(c, &v, h))
    }
}

pub(crate) struct CenterField {
    pub map: MapFamily,
    pub depth: usize,
}

impl LineField for CenterField {
    fn direction(&self, c: [f64; 3]) -> Result<TangentVector> {
        center_direction(&self.map, &TorusPoint::wrap(c), self.depth)
    }
}

/// Cubic Hermite interpolation on one segment.
#[inline]
pub(crate) fn hermite(p0: [f64; 3], t0: &TangentVector, p1: [f64; 3], t1: &TangentVector, ds: f64, u: f64) -> [f64; 3] {
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    [0, 1, 2].map(|k| h00 * p0[k] + h10 * ds * t0[k] + h01 * p1[k] + h11 * ds * t1[k])
}

#[inline]
fn hermite_d1(p0: [f64; 3], t0: &TangentVector, p1: [f64; 3], t1: &TangentVector, ds: f64, u: f64) -> [f64; 3] {
    let u2 = u * u;
    let (a, b, c, d) = (6.0 * u2 - 6.0 * u, 3.0 * u2 - 4.0 * u + 1.0, -6.0 * u2 + 6.0 * u, 3.0 * u2 - 2.0 * u);
    [0, 1, 2].map(|k| a * p0[k] + b * ds * t0[k] + c * p1[k] + d * ds * t1[k])
}

#[inline]
fn hermite_d2(p0: [f64; 3], t0: &TangentVector, p1: [f64; 3], t1: &TangentVector, ds: f64, u: f64) -> [f64; 3] {
    let (a, b, c, d) = (12.0 * u - 6.0, 6.0 * u - 4.0, -12.0 * u + 6.0, 6.0 * u - 2.0);
    [0, 1, 2].map(|k| a * p0[k] + b * ds * t0[k] + c * p1[k] + d * ds * t1[k])
}

/// Nearest point of a Hermite segment to a lifted target: `(u, squared distance)`.
pub(crate) fn nearest_on_segment(p0: [f64; 3], t0: &TangentVector, p1: [f64; 3], t1: &TangentVector, ds: f64, q: [f64; 3]) -> (f64, f64) {
    let chord = sub(p1, p0);
    let c2 = chord.norm_squared();
    let mut u = if c2 > 0.0 { (sub(q, p0).dot(&chord) / c2).clamp(0.0, 1.0) } else { 0.0 };
    for _ in 0..4 {
        let h = sub(hermite(p0, t0, p1, t1, ds, u), q);
        let d1 = TangentVector::from(hermite_d1(p0, t0, p1, t1, ds, u));
        let d2 = TangentVector::from(hermite_d2(p0, t0, p1, t1, ds, u));
        let g = h.dot(&d1);
        let gp = d1.norm_squared() + h.dot(&d2);
        if gp <= 0.0 {
            break;
        }
        let next = (u - g / gp).clamp(0.0, 1.0);
        if (next - u).abs() < 1e-15 {
            u = next;
            break;
        }
        u = next;
    }
    (u, sub(hermite(p0, t0, p1, t1, ds, u), q).norm_squared())
}

/// Result of projecting a point onto a leaf.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Located {
    /// Arclength from the first node, in `[0, L)`.
    pub s: f64,
    /// Leaf parameter in `[0, 1)`.
    pub t: f64,
    pub distance: f64,
    /// Lifted coordinates of the nearest leaf point.
    pub lift: [f64; 3],
}

/// A closed center curve, stored as lifted nodes with unit tangents.
///
/// Node `N` (the last) closes the curve at node 0 translated by `shift`; the raw
/// integration gap, reported as `closure_residual`, is spread along the nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterLeaf {
    pub base: TorusPoint,
    pub nodes: Vec<[f64; 3]>,
    pub tangents: Vec<TangentVector>,
    pub arclength: Vec<f64>,
    pub length: f64,
    pub closure_residual: f64,
    /// Integer translation between the first and last node.
    pub shift: [i64; 3],
    /// Arclength of the `z ≡ 0` crossing; leaf parameters are measured from here.
    pub origin: f64,
    pub step: f64,
    pub depth: usize,
    /// Node heights strictly increase, so `locate` can search by `z`.
    pub z_monotone: bool,
}

impl CenterLeaf {
    pub fn winding(&self) -> i64 {
        self.shift[2]
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Segment `j` of the bi-infinite periodic lift, with its arclength offset.
    #[inline]
    fn seg(&self, j: i64) -> ([f64; 3], [f64; 3], usize, f64) {
        let n = self.segments() as i64;
        let k = j.div_euclid(n);
        let i = j.rem_euclid(n) as usize;
        let off = [0, 1, 2].map(|c| (k * self.shift[c]) as f64);
        let a = self.nodes[i];
        let b = self.nodes[i + 1];
        ([a[0] + off[0], a[1] + off[1], a[2] + off[2]], [b[0] + off[0], b[1] + off[1], b[2] + off[2]], i, k as f64 * self.length)
    }

    /// Lifted point at arclength `s` (any real; periodic up to `shift`).
    pub fn lift_at_s(&self, s: f64) -> [f64; 3] {
        let k = (s / self.length).floor();
        let r = s - k * self.length;
        let i = match self.arclength.partition_point(|&a| a <= r) {
            0 => 0,
            j => (j - 1).min(self.segments() - 1),
        };
        let ds = self.arclength[i + 1] - self.arclength[i];
        let u = if ds > 0.0 { ((r - self.arclength[i]) / ds).clamp(0.0, 1.0) } else { 0.0 };
        let c = hermite(self.nodes[i], &self.tangents[i], self.nodes[i + 1], &self.tangents[i + 1], ds, u);
        [0, 1, 2].map(|m| c[m] + k * self.shift[m] as f64)
    }

    /// Lifted point at leaf parameter `t` (periodic with period 1 up to `shift`).
    pub fn lift_at(&self, t: f64) -> [f64; 3] {
        self.lift_at_s(self.origin + t * self.length)
    }

    pub fn point_at(&self, t: f64) -> TorusPoint {
        TorusPoint::wrap(self.lift_at(t))
    }

    pub fn param_of_s(&self, s: f64) -> f64 {
        let t = ((s - self.origin) / self.length).rem_euclid(1.0);
        if t >= 1.0 {
            0.0
        } else {
            t
        }
    }

    /// Nearest leaf point to `q` (flat torus metric).
    pub fn locate(&self, q: &TorusPoint) -> Located {
        if self.z_monotone {
            self.locate_by_height(q)
        } else {
            self.locate_scan(q)
        }
    }

    fn finish(&self, j: i64, u: f64, d2: f64) -> Located {
        let (a, b, i, soff) = self.seg(j);
        let ds = self.arclength[i + 1] - self.arclength[i];
        let s = (soff + self.arclength[i] + u * ds).rem_euclid(self.length);
        let lift = hermite(a, &self.tangents[i], b, &self.tangents[i + 1], ds, u);
        Located { s, t: self.param_of_s(s), distance: d2.sqrt(), lift }
    }

    fn seg_distance(&self, j: i64, q: &TorusPoint) -> (f64, f64) {
        let (a, b, i, _) = self.seg(j);
        let qc = q.coords();
        let target = [0, 1, 2].map(|m| a[m] + wrap_centered(qc[m] - a[m]));
        let ds = self.arclength[i + 1] - self.arclength[i];
        nearest_on_segment(a, &self.tangents[i], b, &self.tangents[i + 1], ds, target)
    }

    fn node_dist2(&self, j: i64, q: &TorusPoint) -> f64 {
        let (a, _, _, _) = self.seg(j);
        let qc = q.coords();
        (0..3).map(|m| wrap_centered(qc[m] - a[m]).powi(2)).sum()
    }

    fn locate_by_height(&self, q: &TorusPoint) -> Located {
        let n = self.segments() as i64;
        let z0 = self.nodes[0][2];
        let zq = z0 + (q.z - z0).rem_euclid(1.0);
        let mid = self.nodes[..self.segments()].partition_point(|c| c[2] <= zq) as i64 - 1;
        // walk outward from the height match while the height gap can still beat the best node
        let mut best = (mid, self.node_dist2(mid, q));
        for dir in [-1i64, 1] {
            let mut j = if dir < 0 { mid - 1 } else { mid + 1 };
            for _ in 0..n {
                let (a, _, _, _) = self.seg(j);
                let dz = wrap_centered(q.z - a[2]);
                if dz * dz > best.1 {
                    break;
                }
                let d2 = self.node_dist2(j, q);
                if d2 < best.1 {
                    best = (j, d2);
                }
                j += dir;
            }
        }
        let (u0, d0) = self.seg_distance(best.0 - 1, q);
        let (u1, d1) = self.seg_distance(best.0, q);
        let out = if d0 < d1 { self.finish(best.0 - 1, u0, d0) } else { self.finish(best.0, u1, d1) };
        // a far-away target may have its true nearest point outside the walked window
        if out.distance > 0.05 {
            let full = self.locate_scan(q);
            if full.distance < out.distance {
                return full;
            }
        }
        out
    }

    fn locate_scan(&self, q: &TorusPoint) -> Located {
        let n = self.segments() as i64;
        let mut order: Vec<(f64, i64)> = (0..n).map(|j| (self.node_dist2(j, q), j)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best: Option<(i64, f64, f64)> = None;
        for &(_, j) in order.iter().take(4) {
            for jj in [j - 1, j] {
                let (u, d2) = self.seg_distance(jj, q);
                if best.is_none_or(|b| d2 < b.2) {
                    best = Some((jj, u, d2));
                }
            }
        }
        let (j, u, d2) = best.unwrap();
        self.finish(j, u, d2)
    }

    /// Evenly spaced parameters `k / n`.
    pub fn sample_points(&self, n: usize) -> Vec<TorusPoint> {
        (0..n).map(|k| self.point_at(k as f64 / n as f64)).collect()
    }

    /// Symmetric sampled Hausdorff distance between two leaves.
    pub fn hausdorff(&self, other: &CenterLeaf) -> f64 {
        let one =
            |a: &CenterLeaf, b: &CenterLeaf| a.sample_points(HAUSDORFF_SAMPLES).iter().map(|p| b.locate(p).distance).fold(0.0, f64::max);
        one(self, other).max(one(other, self))
    }

    /// Smallest sampled distance between two leaves.
    pub fn min_distance(&self, other: &CenterLeaf) -> f64 {
        self.sample_points(HAUSDORFF_SAMPLES).iter().map(|p| other.locate(p).distance).fold(f64::INFINITY, f64::min)
    }

    /// Hausdorff distance between `F^k(self)` and `target`.
    pub fn image_hausdorff(&self, map: &MapFamily, k: i64, target: &CenterLeaf) -> f64 {
        let image: Vec<TorusPoint> = self.sample_points(HAUSDORFF_SAMPLES).iter().map(|p| map.apply_n(p, k)).collect();
        let forward = image.iter().map(|p| target.locate(p).distance).fold(0.0, f64::max);
        let backward = target
            .sample_points(HAUSDORFF_SAMPLES)
            .iter()
            .map(|b| image.iter().map(|p| crate::torus::torus_dist(p, b)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        forward.max(backward)
    }

    /// Invariants: closure, winding and node spacing.
    pub fn validate(&self) -> Result<()> {
        if self.closure_residual >= CLOSURE_TOL * self.length {
            return Err(Error::Tracing(format!("closure residual {:e} exceeds {:e}", self.closure_residual, CLOSURE_TOL * self.length)));
        }
        if self.winding().abs() != 1 {
            return Err(Error::Tracing(format!("winding number {} in z", self.winding())));
        }
        let spacing = self.arclength.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if spacing > self.step * (1.0 + 1e-12) {
            return Err(Error::Tracing(format!("node spacing {spacing} exceeds step {}", self.step)));
        }
        Ok(())
    }

    /// Polyline rows `(index, x, y, z, arclength)` with reduced coordinates.
    pub fn rows(&self) -> Vec<(usize, f64, f64, f64, f64)> {
        self.nodes
            .iter()
            .zip(&self.arclength)
            .enumerate()
            .map(|(i, (c, s))| {
                let p = TorusPoint::wrap(*c);
                (i, p.x, p.y, p.z, *s)
            })
            .collect()
    }
}

/// Crossing of a linear functional along one RK step, by Illinois regula falsi on the step size.
pub(crate) fn land_on<F: LineField>(
    field: &F,
    c: [f64; 3],
    k1: &TangentVector,
    h: f64,
    g: impl Fn([f64; 3]) -> f64,
) -> Result<(f64, [f64; 3])> {
    let (mut lo, mut hi) = (0.0, h);
    let (mut glo, mut ghi) = (g(c), g(field.rk4(c, k1, h)?));
    let mut side = 0;
    let mut best = (h, field.rk4(c, k1, h)?);
    for _ in 0..60 {
        let m = if ghi != glo { (lo * ghi - hi * glo) / (ghi - glo) } else { 0.5 * (lo + hi) };
        let m = if m <= lo || m >= hi { 0.5 * (lo + hi) } else { m };
        let x = field.rk4(c, k1, m)?;
        let gm = g(x);
        best = (m, x);
        if gm.abs() < 1e-15 || (hi - lo) < 1e-16 {
            break;
        }
        if (gm < 0.0) == (glo < 0.0) {
            lo = m;
            glo = gm;
            if side == -1 {
                ghi /= 2.0;
            }
            side = -1;
        } else {
            hi = m;
            ghi = gm;
            if side == 1 {
                glo /= 2.0;
            }
            side = 1;
        }
    }
    Ok(best)
}

/// Integrate the center field from `p` until the first return to the section through `p`.
pub fn trace_center_leaf(map: &MapFamily, p: &TorusPoint, opts: &TraceOptions) -> Result<CenterLeaf> {
    if !(opts.step > 0.0 && opts.step <= 1e-2) {
        return Err(Error::Precondition(format!("step must be in (0, 1e-2], got {}", opts.step)));
    }
    let field = CenterField { map: *map, depth: opts.depth };
    let x0 = p.coords();
    let t0 = field.direction(x0)?;
    let h = opts.step;
    let mut nodes = vec![x0];
    let mut tangents = vec![t0];
    let mut arclength = vec![0.0];
    let mut c = x0;
    let mut k1 = t0;
    let mut s = 0.0;
    loop {
        if s > opts.max_length {
            return Err(Error::Tracing(format!("no first return within length {}", opts.max_length)));
        }
        let next = field.rk4(c, &k1, h)?;
        let dz = next[2] - x0[2];
        if dz > 0.5 {
            let target = [x0[0] + (next[0] - x0[0]).round(), x0[1] + (next[1] - x0[1]).round(), x0[2] + 1.0];
            let g = |y: [f64; 3]| sub(y, target).dot(&t0);
            if g(c) < 0.0 && g(next) >= 0.0 && sub(next, target).norm() < 0.25 {
                let (hh, end) = land_on(&field, c, &k1, h, g)?;
                let t_end = field.oriented(end, &k1)?;
                nodes.push(end);
                tangents.push(t_end);
                arclength.push(s + hh);
                let shift = [target[0] - x0[0], target[1] - x0[1], 1.0].map(|v| v.round() as i64);
                let closure_residual = sub(end, target).norm();
                return Ok(finish_leaf(*p, nodes, tangents, arclength, shift, closure_residual, opts));
            }
        }
        let t_next = field.oriented(next, &k1)?;
        s += h;
        nodes.push(next);
        tangents.push(t_next);
        arclength.push(s);
        c = next;
        k1 = t_next;
    }
}

fn finish_leaf(
    base: TorusPoint,
    nodes: Vec<[f64; 3]>,
    tangents: Vec<TangentVector>,
    arclength: Vec<f64>,
    shift: [i64; 3],
    closure_residual: f64,
    opts: &TraceOptions,
) -> CenterLeaf {
    let length = *arclength.last().unwrap();
    // close the polyline: spread the endpoint gap linearly in arclength
    let mut nodes = nodes;
    let x0 = nodes[0];
    let end = *nodes.last().unwrap();
    let gap = [0, 1, 2].map(|k| end[k] - (x0[k] + shift[k] as f64));
    for (c, s) in nodes.iter_mut().zip(&arclength) {
        let w = s / length;
        for k in 0..3 {
            c[k] -= w * gap[k];
        }
    }
    let z_monotone = nodes.windows(2).all(|w| w[1][2] > w[0][2]);
    let mut leaf = CenterLeaf {
        base,
        nodes,
        tangents,
        arclength,
        length,
        closure_residual,
        shift,
        origin: 0.0,
        step: opts.step,
        depth: opts.depth,
        z_monotone,
    };
    leaf.origin = z_origin(&leaf);
    leaf
}

/// Arclength where the lifted height first reaches an integer.
fn z_origin(leaf: &CenterLeaf) -> f64 {
    let z0 = leaf.nodes[0][2];
    if z0 == z0.floor() {
        return 0.0;
    }
    let level = z0.ceil();
    for i in 0..leaf.segments() {
        let (a, b) = (leaf.nodes[i], leaf.nodes[i + 1]);
        if a[2] < level && b[2] >= level {
            let ds = leaf.arclength[i + 1] - leaf.arclength[i];
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let m = 0.5 * (lo + hi);
                let z = hermite(a, &leaf.tangents[i], b, &leaf.tangents[i + 1], ds, m)[2];
                if z < level {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            let s = leaf.arclength[i] + hi * ds;
            return if s >= leaf.length { 0.0 } else { s };
        }
    }
    0.0
}

/// Leaves through many points, in input order.
pub fn trace_batch(map: &MapFamily, points: &[TorusPoint], opts: &TraceOptions) -> Vec<Result<CenterLeaf>> {
    crate::batch::map_indexed(points, |_, p| trace_center_leaf(map, p, opts))
}
