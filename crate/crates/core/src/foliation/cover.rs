//! Grid coverage of a growing strong unstable curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::MapFamily;
use crate::tangent::{strong_direction, Strong, DEFAULT_DEPTH};
use crate::torus::{torus_dist, TorusPoint};

pub const RESOLUTIONS: [usize; 3] = [16, 32, 64];
pub const TARGET: f64 = 0.99;
/// Half-length of the initial unstable segment.
const SEED_RADIUS: f64 = 1e-6;
const CHUNKS: usize = 64;
const MAX_BISECTIONS: u32 = 60;
const MAX_LEVELS: u32 = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub resolution: usize,
    pub budget: u64,
    pub points: u64,
    pub levels: u32,
    /// Visited fraction of the `resolution³` grid.
    pub coverage: f64,
    /// `(points generated, fraction)` after each level; nondecreasing in both.
    pub curve: Vec<(u64, f64)>,
    /// Final fraction at every standard resolution up to `resolution`.
    pub by_resolution: Vec<(usize, f64)>,
    /// Final fraction of the `resolution²` grid of the `(x, y)` projection.
    pub projection_2d: f64,
    /// Reached [`TARGET`] before the budget ran out.
    pub conclusive: bool,
}

#[derive(Clone)]
struct Cells {
    res: Vec<usize>,
    sets: Vec<Vec<u64>>,
    flat: usize,
    flat_set: Vec<u64>,
}

impl Cells {
    fn new(resolution: usize) -> Self {
        let res: Vec<usize> = RESOLUTIONS.iter().copied().filter(|&r| r <= resolution).collect();
        let sets = res.iter().map(|r| vec![0u64; (r * r * r).div_ceil(64)]).collect();
        Cells { res, sets, flat: resolution, flat_set: vec![0u64; (resolution * resolution).div_ceil(64)] }
    }

    fn mark(&mut self, p: &TorusPoint) {
        for (r, set) in self.res.iter().zip(self.sets.iter_mut()) {
            let id = cell(p.x, *r) + r * (cell(p.y, *r) + r * cell(p.z, *r));
            set[id / 64] |= 1 << (id % 64);
        }
        let r = self.flat;
        let id = cell(p.x, r) + r * cell(p.y, r);
        self.flat_set[id / 64] |= 1 << (id % 64);
    }

    fn merge(&mut self, other: &Cells) {
        for (a, b) in self.sets.iter_mut().zip(&other.sets) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x |= y);
        }
        self.flat_set.iter_mut().zip(&other.flat_set).for_each(|(x, y)| *x |= y);
    }

    fn fraction(&self, i: usize) -> f64 {
        let r = self.res[i];
        count(&self.sets[i]) as f64 / (r * r * r) as f64
    }

    fn flat_fraction(&self) -> f64 {
        count(&self.flat_set) as f64 / (self.flat * self.flat) as f64
    }
}

/// Cell index of a coordinate in `[0, 1)`, using the torus floor convention.
fn cell(v: f64, r: usize) -> usize {
    ((v * r as f64).floor() as usize).min(r - 1)
}

fn count(set: &[u64]) -> u64 {
    set.iter().map(|w| w.count_ones() as u64).sum()
}

/// The seed segment `u ↦ seed + u · SEED_RADIUS · e_u` and the parameter
/// intervals whose images are drawn at each level.
struct Seed {
    base: [f64; 3],
    dir: [f64; 3],
    pieces: Vec<(f64, f64)>,
}

impl Seed {
    fn new(map: &MapFamily, seed: &TorusPoint) -> Self {
        let e = strong_direction(map, seed, Strong::Unstable, DEFAULT_DEPTH);
        let base = seed.coords();
        let dir = [e.x * SEED_RADIUS, e.y * SEED_RADIUS, e.z * SEED_RADIUS];
        let fixed = torus_dist(&map.eval(seed), seed) < 1e-12;
        let pieces = if fixed {
            // fundamental domains on both sides: level n draws W^u between λ^n and λ^(n+1)
            let lam = (map.jacobian(seed) * e).norm();
            vec![(-lam, -1.0), (1.0, lam)]
        } else {
            vec![(-1.0, 1.0)]
        };
        Seed { base, dir, pieces }
    }

    fn image(&self, map: &MapFamily, u: f64, n: u32) -> TorusPoint {
        let c = [0, 1, 2].map(|k| self.base[k] + u * self.dir[k]);
        TorusPoint::wrap(map.apply_n_lift(c, n as i64))
    }
}

/// Sample `F^n` of a parameter interval densely enough that consecutive image points
/// are at most `spacing` apart; returns the number of points evaluated.
fn sample_chunk(map: &MapFamily, seed: &Seed, n: u32, (lo, hi): (f64, f64), spacing: f64, budget: u64, cells: &mut Cells) -> u64 {
    let a = seed.image(map, lo, n);
    let b = seed.image(map, hi, n);
    cells.mark(&a);
    cells.mark(&b);
    let mut used = 2;
    let mut stack = vec![(lo, a, hi, b, 0u32)];
    while let Some((u0, p0, u1, p1, depth)) = stack.pop() {
        if used >= budget {
            break;
        }
        if torus_dist(&p0, &p1) <= spacing || depth >= MAX_BISECTIONS {
            continue;
        }
        let um = 0.5 * (u0 + u1);
        let pm = seed.image(map, um, n);
        cells.mark(&pm);
        used += 1;
        // right half pushed first so the left half is explored first
        stack.push((um, pm, u1, p1, depth + 1));
        stack.push((u0, p0, um, pm, depth + 1));
    }
    used
}

/// Grow `W^u(seed)` under `F` until [`TARGET`] coverage of the `resolution³` grid or
/// until `budget` curve points have been generated.
pub fn density_cover(map: &MapFamily, seed: &TorusPoint, resolution: usize, budget: u64) -> Result<CoverReport> {
    if !RESOLUTIONS.contains(&resolution) {
        return Err(Error::Precondition(format!("resolution must be one of {RESOLUTIONS:?}, got {resolution}")));
    }
    let s = Seed::new(map, seed);
    let spacing = 0.5 / resolution as f64;
    let mut cells = Cells::new(resolution);
    let top = cells.res.len() - 1;
    let mut points = 0u64;
    let mut curve = Vec::new();
    let mut levels = 0;
    let mut conclusive = false;
    let chunks: Vec<(f64, f64)> = s
        .pieces
        .iter()
        .flat_map(|&(a, b)| {
            (0..CHUNKS).map(move |i| (a + (b - a) * i as f64 / CHUNKS as f64, a + (b - a) * (i + 1) as f64 / CHUNKS as f64))
        })
        .collect();
    for n in 0..MAX_LEVELS {
        if points >= budget {
            break;
        }
        let share = ((budget - points) / chunks.len() as u64).max(2);
        let empty = Cells::new(resolution);
        let results = crate::batch::map_indexed(&chunks, |_, &iv| {
            let mut local = empty.clone();
            let used = sample_chunk(map, &s, n, iv, spacing, share, &mut local);
            (used, local)
        });
        for (used, local) in &results {
            points += used;
            cells.merge(local);
        }
        levels = n + 1;
        let frac = cells.fraction(top);
        curve.push((points, frac));
        if frac >= TARGET {
            conclusive = true;
            break;
        }
    }
    let by_resolution = cells.res.iter().enumerate().map(|(i, &r)| (r, cells.fraction(i))).collect();
    Ok(CoverReport {
        resolution,
        budget,
        points,
        levels,
        coverage: cells.fraction(top),
        curve,
        by_resolution,
        projection_2d: cells.flat_fraction(),
        conclusive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> TorusPoint {
        TorusPoint::new(x, y, z).unwrap()
    }

    #[test]
    fn product_case_fills_the_base_only() {
        let f = MapFamily::shub_wilkinson(0.0, 0.0);
        let r = density_cover(&f, &pt(0.0, 0.0, 0.25), 16, 200_000).unwrap();
        assert!(r.projection_2d >= 0.99, "{}", r.projection_2d);
        assert!(r.coverage < 0.99);
        assert!(!r.conclusive);
    }

    #[test]
    fn coverage_curve_is_monotone_and_coarser_is_easier() {
        let f = MapFamily::shub_wilkinson(0.05, 0.05);
        let r = density_cover(&f, &pt(0.0, 0.0, 0.25), 32, 300_000).unwrap();
        assert!(r.curve.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        assert!(r.by_resolution[0].1 >= r.by_resolution[1].1);
        assert!(r.points <= r.budget + 2 * CHUNKS as u64 * 2);
    }

    #[test]
    fn resolution_precondition() {
        let f = MapFamily::shub_wilkinson(0.05, 0.05);
        assert!(density_cover(&f, &pt(0.0, 0.0, 0.25), 20, 10).is_err());
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let f = MapFamily::shub_wilkinson(0.05, 0.05);
        let one = crate::batch::with_threads(1, || density_cover(&f, &pt(0.0, 0.0, 0.25), 16, 50_000).unwrap());
        let four = crate::batch::with_threads(4, || density_cover(&f, &pt(0.0, 0.0, 0.25), 16, 50_000).unwrap());
        assert_eq!(one, four);
    }
}
