//! Stable holonomy between center leaves lying in a common cs-plaque.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::foliation::leaf::{trace_center_leaf, CenterLeaf, TraceOptions};
use crate::foliation::strong::strong_until;
use crate::linalg::TangentVector;
use crate::maps::MapFamily;
use crate::tangent::{strong_direction, Strong};
use crate::torus::{circle_dist, torus_delta, wrap_centered, TorusPoint};

/// Largest torus distance between the two base points.
pub const PLAQUE_RADIUS: f64 = 0.05;
/// Stable arclength searched on each side before giving up.
const SEARCH_LENGTH: f64 = 0.25;
const FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub params_in: Vec<f64>,
    pub params_out: Vec<f64>,
    /// Distance of each stable-curve crossing from the target leaf.
    pub max_crossing_distance: f64,
    /// Extremes of the finite-difference derivative over the input parameters.
    pub jacobian_min: f64,
    pub jacobian_max: f64,
    /// Whether sorted inputs map to cyclically ordered outputs.
    pub monotone: bool,
}

impl HolonomyReport {
    /// Smallest `K` with all derivatives in `[1/K, K]`.
    pub fn k_bound(&self) -> f64 {
        self.jacobian_max.max(1.0 / self.jacobian_min)
    }
}

fn delta(a: [f64; 3], b: [f64; 3]) -> TangentVector {
    TangentVector::new(wrap_centered(a[0] - b[0]), wrap_centered(a[1] - b[1]), wrap_centered(a[2] - b[2]))
}

/// Image on `to` of the point with parameter `t` on `from`, sliding along the strong stable curve.
fn slide_one(map: &MapFamily, from: &CenterLeaf, to: &CenterLeaf, t: f64, opts: &TraceOptions) -> Result<(f64, f64)> {
    let x = from.lift_at(t);
    let w = strong_direction(map, &TorusPoint::wrap(x), Strong::Stable, opts.depth);
    let g = |c: [f64; 3]| {
        let loc = to.locate(&TorusPoint::wrap(c));
        delta(c, loc.lift).dot(&w)
    };
    let g0 = g(x);
    let end = if g0.abs() < 1e-14 {
        x
    } else {
        let sign = if g0 > 0.0 { -1.0 } else { 1.0 };
        match strong_until(map, x, Strong::Stable, sign, opts, SEARCH_LENGTH, g)? {
            Some((end, _)) => end,
            None => {
                return Err(Error::Holonomy(format!(
                    "stable curve from parameter {t} does not cross the target leaf within {SEARCH_LENGTH}"
                )))
            }
        }
    };
    let loc = to.locate(&TorusPoint::wrap(end));
    Ok((loc.t, loc.distance))
}

/// Holonomy along strong stable curves from `from` to `to` at the given parameters.
pub fn holonomy_between(
    map: &MapFamily,
    from: &CenterLeaf,
    to: &CenterLeaf,
    params: &[f64],
    opts: &TraceOptions,
) -> Result<HolonomyReport> {
    let d = torus_delta(&from.base, &to.base);
    let dist = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dist > PLAQUE_RADIUS {
        return Err(Error::Precondition(format!("base points are {dist:.4} apart, more than {PLAQUE_RADIUS}")));
    }
    let mut out = Vec::with_capacity(params.len());
    let mut worst: f64 = 0.0;
    let mut jmin = f64::INFINITY;
    let mut jmax: f64 = 0.0;
    for &t in params {
        let (s, e) = slide_one(map, from, to, t, opts)?;
        worst = worst.max(e);
        let (lo, _) = slide_one(map, from, to, (t - FD_STEP).rem_euclid(1.0), opts)?;
        let (hi, _) = slide_one(map, from, to, (t + FD_STEP).rem_euclid(1.0), opts)?;
        let j = wrap_centered(hi - lo) / (2.0 * FD_STEP);
        jmin = jmin.min(j);
        jmax = jmax.max(j);
        out.push(s);
    }
    if worst > from.step.max(to.step) {
        return Err(Error::Holonomy(format!("stable crossing lands {worst:e} away from the target leaf")));
    }
    let monotone = cyclically_ordered(params, &out);
    Ok(HolonomyReport {
        params_in: params.to_vec(),
        params_out: out,
        max_crossing_distance: worst,
        jacobian_min: jmin,
        jacobian_max: jmax,
        monotone,
    })
}

/// Trace both leaves and compute the holonomy from `W^c(p)` to `W^c(q)`.
pub fn stable_holonomy(map: &MapFamily, p: &TorusPoint, q: &TorusPoint, params: &[f64], opts: &TraceOptions) -> Result<HolonomyReport> {
    let lp = trace_center_leaf(map, p, opts)?;
    let lq = if p == q { lp.clone() } else { trace_center_leaf(map, q, opts)? };
    holonomy_between(map, &lp, &lq, params, opts)
}

/// Sorting `inputs` induces a cyclic order on `outputs` with the same orientation.
pub fn cyclically_ordered(inputs: &[f64], outputs: &[f64]) -> bool {
    let mut idx: Vec<usize> = (0..inputs.len()).collect();
    idx.sort_by(|&a, &b| inputs[a].total_cmp(&inputs[b]));
    let mut total = 0.0;
    for w in 0..idx.len() {
        let a = outputs[idx[w]];
        let b = outputs[idx[(w + 1) % idx.len()]];
        let step = (b - a).rem_euclid(1.0);
        if circle_dist(a, b) < 1e-15 && idx.len() > 1 {
            return false;
        }
        total += step;
    }
    idx.len() < 2 || (total - 1.0).abs() < 1e-9
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> TorusPoint {
        TorusPoint::new(x, y, z).unwrap()
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect()
    }

    #[test]
    fn identity_when_leaves_coincide() {
        let f = MapFamily::shub_wilkinson(0.01, 0.01);
        let p = pt(0.41, 0.13, 0.52);
        let r = stable_holonomy(&f, &p, &p, &grid(16), &TraceOptions::default()).unwrap();
        for (a, b) in r.params_in.iter().zip(&r.params_out) {
            assert!(circle_dist(*a, *b) < 1e-8, "{a} -> {b}");
        }
    }

    #[test]
    fn product_case_translates_rigidly() {
        let f = MapFamily::shub_wilkinson(0.0, 0.03);
        let p = pt(0.3, 0.6, 0.0);
        let opts = TraceOptions::default();
        let e_s = strong_direction(&f, &p, Strong::Stable, opts.depth);
        let q = p.shifted([0.02 * e_s.x, 0.02 * e_s.y, 0.0]);
        let r = stable_holonomy(&f, &p, &q, &grid(12), &opts).unwrap();
        let shift = wrap_centered(r.params_out[0] - r.params_in[0]);
        assert!(shift.abs() > 1e-4);
        for (a, b) in r.params_in.iter().zip(&r.params_out) {
            assert!((wrap_centered(b - a) - shift).abs() < 1e-9);
        }
        assert!(r.monotone);
    }

    #[test]
    fn holonomy_is_monotone_with_bounded_derivative() {
        let f = MapFamily::shub_wilkinson(0.01, 0.01);
        let p = pt(0.27, 0.58, 0.33);
        let opts = TraceOptions::default();
        let e_s = strong_direction(&f, &p, Strong::Stable, opts.depth);
        let q = p.shifted([0.03 * e_s.x, 0.03 * e_s.y, 0.03 * e_s.z]);
        let r = stable_holonomy(&f, &p, &q, &grid(24), &opts).unwrap();
        assert!(r.monotone);
        assert!(r.k_bound() < 2.0, "K = {}", r.k_bound());
        assert!(r.max_crossing_distance < 1e-6);
    }

    #[test]
    fn far_leaves_are_rejected() {
        let f = MapFamily::shub_wilkinson(0.01, 0.01);
        let r = stable_holonomy(&f, &pt(0.1, 0.1, 0.1), &pt(0.4, 0.4, 0.1), &[0.5], &TraceOptions::default());
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn cyclic_order() {
        assert!(cyclically_ordered(&[0.1, 0.5, 0.9], &[0.6, 0.95, 0.3]));
        assert!(!cyclically_ordered(&[0.1, 0.5, 0.9], &[0.6, 0.3, 0.95]));
    }
}
