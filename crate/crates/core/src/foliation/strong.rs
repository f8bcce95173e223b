//! Open arcs of the strong stable and strong unstable foliations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::leaf::{hermite, land_on, nearest_on_segment, LineField, TraceOptions};
use crate::linalg::TangentVector;
use crate::maps::MapFamily;
use crate::tangent::{strong_direction, Strong};
use crate::torus::{torus_dist, wrap_centered, TorusPoint};

pub(crate) struct StrongField {
    pub map: MapFamily,
    pub which: Strong,
    pub depth: usize,
}

impl LineField for StrongField {
    fn direction(&self, c: [f64; 3]) -> Result<TangentVector> {
        Ok(strong_direction(&self.map, &TorusPoint::wrap(c), self.which, self.depth))
    }
}

/// A strong stable or unstable arc centred on its base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCurve {
    pub base: TorusPoint,
    pub which: Strong,
    /// Lifted nodes, ordered along the curve.
    pub nodes: Vec<[f64; 3]>,
    pub tangents: Vec<TangentVector>,
    pub arclength: Vec<f64>,
    /// Index of the base point among the nodes.
    pub base_index: usize,
    pub step: f64,
    pub depth: usize,
}

impl InvariantCurve {
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    /// Signed arclength of the base point from the first node.
    pub fn base_s(&self) -> f64 {
        self.arclength[self.base_index]
    }

    /// Lifted point at arclength `s ∈ [0, length]` from the first node.
    pub fn lift_at_s(&self, s: f64) -> [f64; 3] {
        let s = s.clamp(0.0, self.length());
        let i = match self.arclength.partition_point(|&a| a <= s) {
            0 => 0,
            j => (j - 1).min(self.nodes.len() - 2),
        };
        let ds = self.arclength[i + 1] - self.arclength[i];
        let u = if ds > 0.0 { ((s - self.arclength[i]) / ds).clamp(0.0, 1.0) } else { 0.0 };
        hermite(self.nodes[i], &self.tangents[i], self.nodes[i + 1], &self.tangents[i + 1], ds, u)
    }

    pub fn point_at_s(&self, s: f64) -> TorusPoint {
        TorusPoint::wrap(self.lift_at_s(s))
    }

    /// Nearest curve point to `q`: `(arclength, distance)`.
    pub fn locate(&self, q: &TorusPoint) -> (f64, f64) {
        let qc = q.coords();
        let n = self.nodes.len();
        let d2 = |i: usize| (0..3).map(|m| wrap_centered(qc[m] - self.nodes[i][m]).powi(2)).sum::<f64>();
        let k = (0..n).min_by(|&a, &b| d2(a).total_cmp(&d2(b))).unwrap();
        let mut best = (self.arclength[k], d2(k));
        for i in [k.saturating_sub(1), k] {
            if i + 1 >= n {
                continue;
            }
            let a = self.nodes[i];
            let target = [0, 1, 2].map(|m| a[m] + wrap_centered(qc[m] - a[m]));
            let ds = self.arclength[i + 1] - self.arclength[i];
            let (u, e2) = nearest_on_segment(a, &self.tangents[i], self.nodes[i + 1], &self.tangents[i + 1], ds, target);
            if e2 < best.1 {
                best = (self.arclength[i] + u * ds, e2);
            }
        }
        (best.0, best.1.sqrt())
    }

    /// Largest angle between a node tangent and the strong direction computed there.
    pub fn tangent_error(&self, map: &MapFamily) -> f64 {
        self.nodes
            .iter()
            .zip(&self.tangents)
            .map(|(c, t)| {
                let e = strong_direction(map, &TorusPoint::wrap(*c), self.which, self.depth);
                crate::linalg::line_angle(t, &e)
            })
            .fold(0.0, f64::max)
    }

    /// Largest distance from the image of this curve (under `F` for stable arcs,
    /// `F^{-1}` for unstable ones) to `target`, sampled every `step`.
    pub fn image_distance(&self, map: &MapFamily, target: &InvariantCurve) -> f64 {
        let g = match self.which {
            Strong::Stable => *map,
            Strong::Unstable => map.inverse(),
        };
        let n = (self.length() / self.step).ceil() as usize;
        (0..=n)
            .map(|k| {
                let p = g.eval(&self.point_at_s(k as f64 * self.length() / n as f64));
                target.locate(&p).1
            })
            .fold(0.0, f64::max)
    }
}

/// Integrate the strong stable or unstable line field through `p`, `arclength / 2` each way.
pub fn trace_strong_curve(map: &MapFamily, p: &TorusPoint, which: Strong, arclength: f64, opts: &TraceOptions) -> Result<InvariantCurve> {
    let h = opts.step;
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::Precondition(format!("step must be in (0, 1e-2], got {h}")));
    }
    if !(arclength > 0.0 && arclength <= 1e3 * h) {
        return Err(Error::Precondition(format!("arclength {arclength} must be in (0, 1e3 step]")));
    }
    let field = StrongField { map: *map, which, depth: opts.depth };
    let x0 = p.coords();
    let t0 = field.direction(x0)?;
    let half = arclength / 2.0;
    let mut branches = Vec::with_capacity(2);
    for sign in [-1.0, 1.0] {
        let mut c = x0;
        let mut k1 = t0 * sign;
        let mut s = 0.0;
        let mut pts = Vec::new();
        while s < half - 1e-15 {
            let hh = h.min(half - s);
            c = field.rk4(c, &k1, hh)?;
            k1 = field.oriented(c, &k1)?;
            s += hh;
            pts.push((c, k1 * sign, s * sign));
        }
        branches.push(pts);
    }
    let back = branches.remove(0);
    let fwd = branches.remove(0);
    let mut nodes = Vec::with_capacity(back.len() + fwd.len() + 1);
    let mut tangents = Vec::with_capacity(nodes.capacity());
    let mut signed = Vec::with_capacity(nodes.capacity());
    for (c, t, s) in back.into_iter().rev() {
        nodes.push(c);
        tangents.push(t);
        signed.push(s);
    }
    let base_index = nodes.len();
    nodes.push(x0);
    tangents.push(t0);
    signed.push(0.0);
    for (c, t, s) in fwd {
        nodes.push(c);
        tangents.push(t);
        signed.push(s);
    }
    let arclength = signed.iter().map(|s| s - signed[0]).collect();
    Ok(InvariantCurve { base: *p, which, nodes, tangents, arclength, base_index, step: h, depth: opts.depth })
}

/// Integrate the strong field from `p` in direction `sign` until `g` changes sign.
///
/// Returns the lifted crossing point and the arclength travelled, or `None` when
/// no crossing occurs within `max_length`.
pub(crate) fn strong_until(
    map: &MapFamily,
    p: [f64; 3],
    which: Strong,
    sign: f64,
    opts: &TraceOptions,
    max_length: f64,
    g: impl Fn([f64; 3]) -> f64,
) -> Result<Option<([f64; 3], f64)>> {
    let field = StrongField { map: *map, which, depth: opts.depth };
    let mut c = p;
    let mut k1 = field.direction(c)? * sign;
    let mut s = 0.0;
    let mut gc = g(c);
    if gc == 0.0 {
        return Ok(Some((c, 0.0)));
    }
    while s < max_length {
        let next = field.rk4(c, &k1, opts.step)?;
        let gn = g(next);
        if (gn < 0.0) != (gc < 0.0) || gn == 0.0 {
            let (hh, end) = land_on(&field, c, &k1, opts.step, &g)?;
            return Ok(Some((end, s + hh)));
        }
        k1 = field.oriented(next, &k1)?;
        c = next;
        gc = gn;
        s += opts.step;
    }
    Ok(None)
}

/// Distances `|F^n(q) − F^n(r)|` for `n = 0..=n_max` between two points of a stable arc.
///
/// `raw` iterates both points directly. `anchored` re-projects the second orbit onto a
/// freshly traced stable arc through the first after every step, which removes the
/// unstable component that floating-point error otherwise feeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableContraction {
    pub raw: Vec<f64>,
    pub anchored: Vec<f64>,
}

impl StableContraction {
    /// Number of leading steps over which the sequence strictly decreases.
    pub fn monotone_steps(seq: &[f64]) -> usize {
        seq.windows(2).take_while(|w| w[1] < w[0]).count()
    }
}

pub fn stable_contraction(
    map: &MapFamily,
    q: &TorusPoint,
    separation: f64,
    n_max: usize,
    opts: &TraceOptions,
) -> Result<StableContraction> {
    let arc = trace_strong_curve(map, q, Strong::Stable, 2.0 * separation + 4.0 * opts.step, opts)?;
    let r = arc.point_at_s(arc.base_s() + separation);
    let mut raw = Vec::with_capacity(n_max + 1);
    let (mut a, mut b) = (*q, r);
    for _ in 0..=n_max {
        raw.push(torus_dist(&a, &b));
        a = map.eval(&a);
        b = map.eval(&b);
    }
    let mut anchored = Vec::with_capacity(n_max + 1);
    let (mut a, mut b) = (*q, r);
    let mut d = separation;
    anchored.push(separation);
    for _ in 0..n_max {
        a = map.eval(&a);
        b = map.eval(&b);
        // a short stable arc through the new base, scaled to the current separation
        let span = 2.0 * d.max(opts.step) + 4.0 * opts.step;
        let local = TraceOptions { step: opts.step.min(d.max(1e-12) / 4.0).max(1e-12), ..*opts };
        let arc = trace_strong_curve(map, &a, Strong::Stable, span.min(1e3 * local.step), &local)?;
        let (s, _) = arc.locate(&b);
        d = (s - arc.base_s()).abs();
        b = arc.point_at_s(s);
        anchored.push(d);
    }
    Ok(StableContraction { raw, anchored })
}
