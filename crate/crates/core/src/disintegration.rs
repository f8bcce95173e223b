//! Conditional measures on center leaves: pushforwards of leaf Lebesgue measure,
//! atom clustering, the contraction probe and the `Z_q` symmetry check.

use serde::{Deserialize, Serialize};

use crate::batch;
use crate::error::{Error, Result};
use crate::foliation::leaf::{trace_center_leaf, CenterLeaf, TraceOptions};
use crate::maps::{Family, MapFamily, MapSpec};
use crate::torus::{circle_dist, wrap_centered, TorusPoint};

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_MASS_FLOOR: f64 = 0.02;
pub const DEFAULT_SAMPLES: usize = 4096;
pub const MIN_SAMPLES: usize = 1024;
pub const DEFAULT_N: usize = 40;
/// Largest pushforward depth accepted; the anchored chain has no precision limit,
/// only a cost one leaf trace per stride.
pub const MAX_N: usize = 4000;
/// Clusters wider than this are not atoms.
/// Step halvings allowed for a chain leaf that fails to close.
const MAX_REFINEMENTS: u32 = 2;
const ATOM_EXTENT: f64 = 0.25;
/// Mesh for tabulated one-step leaf maps.
const TABLE: usize = 2048;
/// Mesh on the source leaf in the contraction probe.
const PROBE_MESH: usize = 4096;

/// Weighted parameters on one leaf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafSample {
    pub base: TorusPoint,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LeafSample {
    pub fn uniform(base: TorusPoint, n: usize) -> Self {
        LeafSample { base, params: (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(), weights: vec![1.0 / n as f64; n] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.weights.len() {
            return Err(Error::InputDomain("params and weights differ in length".into()));
        }
        if self.params.iter().any(|t| !(0.0..1.0).contains(t)) {
            return Err(Error::InputDomain("leaf parameter outside [0, 1)".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InputDomain("negative weight".into()));
        }
        let s = exact_sum(self.weights.clone());
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InputDomain(format!("weights sum to {s}")));
        }
        Ok(())
    }
}

/// Order-independent sum: sort, then add with Neumaier compensation.
fn exact_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in v {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Weighted circular mean.
    pub center: f64,
    pub mass: f64,
    /// Arc from the first to the last member.
    pub extent: f64,
    pub count: usize,
}

/// Single-linkage clusters on the circle with linking radius `delta`.
///
/// Inputs are sorted first, so the result does not depend on their order. Clusters
/// are returned by decreasing mass, ties broken by center.
pub fn cluster_atoms(points: &[(f64, f64)], delta: f64) -> Result<Vec<Cluster>> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::Precondition(format!("delta must be in (0, 0.25), got {delta}")));
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(t, w)| (t.rem_euclid(1.0) % 1.0, w)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len();
    let gap = |i: usize| {
        let j = (i + 1) % n;
        (pts[j].0 - pts[i].0).rem_euclid(1.0)
    };
    // start right after the widest gap; with no gap above delta everything is one cluster
    let widest = (0..n).max_by(|&a, &b| gap(a).total_cmp(&gap(b)).then(b.cmp(&a))).unwrap();
    let start = (widest + 1) % n;
    let mut runs: Vec<Vec<usize>> = vec![vec![start]];
    for k in 1..n {
        let i = (start + k) % n;
        let prev = (start + k - 1) % n;
        if gap(prev) > delta {
            runs.push(Vec::new());
        }
        runs.last_mut().unwrap().push(i);
    }
    let single = n == 1 || gap(widest) <= delta;
    let mut clusters: Vec<Cluster> = runs
        .iter()
        .map(|run| {
            let mass = exact_sum(run.iter().map(|&i| pts[i].1).collect());
            let (s, c) = run.iter().fold((0.0, 0.0), |(s, c), &i| {
                let a = std::f64::consts::TAU * pts[i].0;
                (s + pts[i].1 * a.sin(), c + pts[i].1 * a.cos())
            });
            let center = (s.atan2(c) / std::f64::consts::TAU).rem_euclid(1.0);
            let extent = if single { 1.0 } else { (pts[*run.last().unwrap()].0 - pts[run[0]].0).rem_euclid(1.0) };
            Cluster { center: if center >= 1.0 { 0.0 } else { center }, mass, extent, count: run.len() }
        })
        .collect();
    clusters.sort_by(|a, b| b.mass.total_cmp(&a.mass).then(a.center.total_cmp(&b.center)));
    Ok(clusters)
}

/// Largest total weight inside a closed arc of length `delta`.
pub fn window_mass(points: &[(f64, f64)], delta: f64) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut pts: Vec<(f64, f64)> = points.iter().map(|&(t, w)| (t.rem_euclid(1.0) % 1.0, w)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = pts.len();
    let mut best = 0.0f64;
    let mut j = 0usize;
    let mut acc = 0.0;
    // two pointers over the doubled circle
    for i in 0..n {
        if j < i {
            j = i;
            acc = 0.0;
        }
        while j < i + n {
            let (t, w) = pts[j % n];
            let lifted = t + (j / n) as f64;
            if lifted - pts[i].0 > delta {
                break;
            }
            acc += w;
            j += 1;
        }
        best = best.max(acc);
        acc -= pts[i].1;
    }
    best.min(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomReport {
    pub map: MapSpec,
    pub base: TorusPoint,
    pub n: usize,
    pub samples: usize,
    pub delta: f64,
    pub mass_floor: f64,
    pub clusters: Vec<Cluster>,
    /// Largest mass in an arc of length `delta`.
    pub m_1: f64,
    /// Clusters heavier than `mass_floor`.
    pub k_estimate: usize,
    /// Mass in clusters at or below `mass_floor`.
    pub dust_mass: f64,
    /// Some cluster above the floor is narrower than a quarter circle.
    pub concentrated: bool,
    /// Mean resultant length `|Σ w e^{2πit}|` of the landed parameters.
    pub resultant: f64,
    /// Largest landing distance to a traced leaf along the chain.
    pub coherence: f64,
    /// Circle distance from the heaviest cluster to the parameter of `p` itself.
    pub base_offset: f64,
}

impl AtomReport {
    pub fn from_points(
        map: &MapFamily,
        base: TorusPoint,
        base_param: f64,
        n: usize,
        pts: &[(f64, f64)],
        opts: &PushOptions,
        coherence: f64,
    ) -> Result<Self> {
        let clusters = cluster_atoms(pts, opts.delta)?;
        let heavy: Vec<&Cluster> = clusters.iter().filter(|c| c.mass > opts.mass_floor).collect();
        let k_estimate = heavy.len().max(1);
        let dust_mass = exact_sum(clusters.iter().filter(|c| c.mass <= opts.mass_floor).map(|c| c.mass).collect());
        let concentrated = heavy.iter().any(|c| c.extent < ATOM_EXTENT);
        let (s, c) = pts.iter().fold((0.0, 0.0), |(s, c), &(t, w)| {
            let a = std::f64::consts::TAU * t;
            (s + w * a.sin(), c + w * a.cos())
        });
        Ok(AtomReport {
            map: map.spec(),
            base,
            n,
            samples: pts.len(),
            delta: opts.delta,
            mass_floor: opts.mass_floor,
            m_1: window_mass(pts, opts.delta),
            k_estimate,
            dust_mass,
            concentrated,
            resultant: s.hypot(c),
            base_offset: clusters
                .iter()
                .filter(|c| c.mass > opts.mass_floor)
                .map(|c| circle_dist(c.center, base_param))
                .fold(0.5, f64::min),
            clusters,
            coherence,
        })
    }

    pub fn total_mass(&self) -> f64 {
        exact_sum(self.clusters.iter().map(|c| c.mass).collect())
    }

    /// Mass conservation, arc budget and `k ≥ 1`.
    pub fn validate(&self) -> Result<()> {
        if (self.total_mass() - 1.0).abs() > 1e-12 {
            return Err(Error::InputDomain(format!("cluster masses sum to {}", self.total_mass())));
        }
        if self.k_estimate < 1 {
            return Err(Error::InputDomain("k_estimate is zero".into()));
        }
        if self.clusters.iter().any(|c| c.count == 0 || !(c.mass > 0.0)) {
            return Err(Error::InputDomain("empty cluster".into()));
        }
        if self.clusters.len() > 1 {
            // centers are weighted means, so only the total arc budget is checkable:
            // member arcs plus a gap wider than delta after each cluster fit on the circle
            let used: f64 = self.clusters.iter().map(|c| c.extent + self.delta).sum();
            if used > 1.0 + 1e-9 {
                return Err(Error::InputDomain(format!(
                    "{} clusters with total extent {} cannot be delta-separated",
                    self.clusters.len(),
                    used - self.delta * self.clusters.len() as f64
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushOptions {
    pub trace: TraceOptions,
    /// Leaves are traced every `stride` steps of the backward orbit.
    pub stride: usize,
    pub delta: f64,
    pub mass_floor: f64,
    /// Landing distance allowed, in units of the trace step.
    pub coherence_steps: f64,
}

impl Default for PushOptions {
    fn default() -> Self {
        PushOptions {
            trace: TraceOptions::default(),
            stride: 10,
            delta: DEFAULT_DELTA,
            mass_floor: DEFAULT_MASS_FLOOR,
            coherence_steps: 10.0,
        }
    }
}

/// Center leaves along the backward orbit `q_j = F^{-j}(p)`, traced at the anchor depths.
#[derive(Clone, Debug)]
pub struct LeafChain {
    pub map: MapFamily,
    pub base: TorusPoint,
    /// Increasing depths, starting at 0.
    pub anchors: Vec<usize>,
    pub leaves: Vec<CenterLeaf>,
    pub limit: f64,
}

impl LeafChain {
    /// Anchors at every multiple of `stride` up to `n`, plus `n` and any `extra` depths.
    pub fn build(map: &MapFamily, p: &TorusPoint, n: usize, extra: &[usize], opts: &PushOptions) -> Result<Self> {
        if n > MAX_N {
            return Err(Error::Precondition(format!("pushforward depth {n} exceeds {MAX_N}")));
        }
        if opts.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        let mut anchors: Vec<usize> = (0..=n).step_by(opts.stride).collect();
        anchors.push(n);
        anchors.extend(extra.iter().copied().filter(|&e| e <= n));
        anchors.sort_unstable();
        anchors.dedup();
        let inv = map.inverse();
        let mut orbit = Vec::with_capacity(n + 1);
        let mut q = *p;
        for j in 0..=n {
            orbit.push(q);
            if j < n {
                q = inv.eval(&q);
            }
        }
        let starts: Vec<TorusPoint> = anchors.iter().map(|&j| orbit[j]).collect();
        let leaves = batch::map_indexed(&starts, |_, q| {
            // a rare leaf misses the closure tolerance at the default step; refine it
            let mut trace = opts.trace;
            let mut refinements = 0;
            loop {
                match trace_center_leaf(map, q, &trace).and_then(|leaf| leaf.validate().map(|_| leaf)) {
                    Err(Error::Tracing(_)) if refinements < MAX_REFINEMENTS => {
                        trace.step *= 0.5;
                        refinements += 1;
                    }
                    other => return other,
                }
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(LeafChain { map: *map, base: *p, anchors, leaves, limit: opts.coherence_steps * opts.trace.step })
    }

    fn anchor_index(&self, depth: usize) -> Result<usize> {
        self.anchors.binary_search(&depth).map_err(|_| Error::Precondition(format!("depth {depth} is not an anchor of the chain")))
    }

    /// Push parameters on the leaf at anchor depth `depth` forward to `W^c(p)`,
    /// re-projecting onto each intermediate anchor leaf. Returns the landed
    /// parameters and the largest landing distance.
    pub fn push(&self, params: &[f64], depth: usize) -> Result<(Vec<f64>, f64)> {
        let mut k = self.anchor_index(depth)?;
        let mut t = params.to_vec();
        let mut worst: f64 = 0.0;
        while k > 0 {
            let (from, to) = (&self.leaves[k], &self.leaves[k - 1]);
            let steps = (self.anchors[k] - self.anchors[k - 1]) as i64;
            let landed: Vec<(f64, f64)> = batch::map_indexed(&t, |_, &s| {
                let y = self.map.apply_n(&from.point_at(s), steps);
                let loc = to.locate(&y);
                (loc.t, loc.distance)
            });
            for (i, (s, d)) in landed.into_iter().enumerate() {
                worst = worst.max(d);
                t[i] = s;
            }
            if worst > self.limit {
                return Err(Error::Coherence { distance: worst, limit: self.limit });
            }
            k -= 1;
        }
        Ok((t, worst))
    }

    /// Atom reports for uniform leaf measure pushed from each anchor depth in `depths`.
    pub fn atom_reports(&self, depths: &[usize], samples: usize, opts: &PushOptions) -> Result<Vec<AtomReport>> {
        if samples < MIN_SAMPLES {
            return Err(Error::Precondition(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
        }
        let sample = LeafSample::uniform(self.base, samples);
        let base_param = self.leaves[0].param_of_s(0.0);
        depths
            .iter()
            .map(|&d| {
                let (t, coh) = self.push(&sample.params, d)?;
                let pts: Vec<(f64, f64)> = t.into_iter().zip(sample.weights.iter().copied()).collect();
                AtomReport::from_points(&self.map, self.base, base_param, d, &pts, opts, coh)
            })
            .collect()
    }
}

/// Push uniform leaf measure on `W^c(F^{-n}(p))` forward `n` times and cluster it on `W^c(p)`.
pub fn pushforward_leaf_measure(map: &MapFamily, p: &TorusPoint, n: usize, samples: usize, opts: &PushOptions) -> Result<AtomReport> {
    Ok(concentration_curve(map, p, &[n], samples, opts)?.remove(0))
}

/// Atom reports at several depths from one shared leaf chain.
pub fn concentration_curve(
    map: &MapFamily,
    p: &TorusPoint,
    depths: &[usize],
    samples: usize,
    opts: &PushOptions,
) -> Result<Vec<AtomReport>> {
    if samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let n = depths.iter().copied().max().unwrap_or(0);
    LeafChain::build(map, p, n, depths, opts)?.atom_reports(depths, samples, opts)
}

/// Lifted leaf map `W^c(q_j) → W^c(q_i)` along `F^{j-i}`, tabulated on a uniform mesh.
struct Table {
    values: Vec<f64>,
}

impl Table {
    fn new(map: &MapFamily, from: &CenterLeaf, to: &CenterLeaf, steps: usize, limit: f64) -> Result<Self> {
        let raw: Vec<(f64, f64)> = (0..=TABLE)
            .map(|i| {
                let loc = to.locate(&map.apply_n(&from.point_at(i as f64 / TABLE as f64), steps as i64));
                (loc.t, loc.distance)
            })
            .collect();
        let worst = raw.iter().map(|r| r.1).fold(0.0, f64::max);
        if worst > limit {
            return Err(Error::Coherence { distance: worst, limit });
        }
        let mut values = Vec::with_capacity(raw.len());
        values.push(raw[0].0);
        for i in 1..raw.len() {
            let prev = values[i - 1];
            values.push(prev + wrap_centered(raw[i].0 - prev));
        }
        // the last mesh point is the first one a full turn later
        let turn = values[TABLE] - values[0];
        if (turn - 1.0).abs() > 0.25 {
            return Err(Error::Tracing(format!("leaf map has degree {turn:.3}, expected 1")));
        }
        values[TABLE] = values[0] + 1.0;
        Ok(Table { values })
    }

    fn eval(&self, t: f64) -> f64 {
        let k = t.floor();
        let x = (t - k) * TABLE as f64;
        let i = (x.floor() as usize).min(TABLE - 1);
        let u = x - i as f64;
        k + self.values[i] + u * (self.values[i + 1] - self.values[i])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionProbe {
    pub eps: f64,
    /// Interval `V` on `W^c(F^{-N}(p))` as `(start, length)` in leaf parameters.
    pub v_start: f64,
    pub v_length: f64,
    /// Smallest probed `N` with image diameter below `eps`.
    pub n: Option<usize>,
    /// Image diameter at `n`, or the smallest seen when not achieved.
    pub diameter: f64,
    /// `(N, best image diameter)` for every probed depth.
    pub diameters: Vec<(usize, f64)>,
}

impl ContractionProbe {
    pub fn achieved(&self) -> bool {
        self.n.is_some()
    }
}

/// Smallest `N ≤ n_max` at which some interval of length `> 1 − eps` on
/// `W^c(F^{-N}(p))` maps into an arc shorter than `eps` on `W^c(p)`.
///
/// Depths are probed at the chain anchors, every `opts.stride` steps. For each `N`
/// the complementary window of length `< eps` is placed where its image is longest,
/// which makes the image of `V` shortest.
pub fn contraction_probe(map: &MapFamily, p: &TorusPoint, eps: f64, n_max: usize, opts: &PushOptions) -> Result<ContractionProbe> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Precondition(format!("eps must be in (0, 0.5), got {eps}")));
    }
    LeafChain::build(map, p, n_max, &[], opts)?.contraction(eps)
}

impl LeafChain {
    /// [`contraction_probe`] on the anchor depths of an existing chain.
    pub fn contraction(&self, eps: f64) -> Result<ContractionProbe> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Precondition(format!("eps must be in (0, 0.5), got {eps}")));
        }
        let (chain, map) = (self, &self.map);
        let links: Vec<usize> = (1..chain.anchors.len()).collect();
        let tables = batch::map_indexed(&links, |_, &k| {
            let steps = chain.anchors[k] - chain.anchors[k - 1];
            Table::new(map, &chain.leaves[k], &chain.leaves[k - 1], steps, chain.limit)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let w = ((eps * PROBE_MESH as f64).ceil() as usize - 1).max(1);
        let mesh: Vec<f64> = (0..=PROBE_MESH).map(|i| i as f64 / PROBE_MESH as f64).collect();
        let mut diameters = Vec::with_capacity(tables.len());
        let mut found: Option<(usize, f64, usize)> = None;
        for k in 1..chain.anchors.len() {
            let images: Vec<f64> = batch::map_indexed(&mesh, |_, &t| tables[..k].iter().rev().fold(t, |s, tab| tab.eval(s)));
            let mut best = (f64::NEG_INFINITY, 0usize);
            for i in 0..PROBE_MESH {
                let j = i + w;
                let hi = if j <= PROBE_MESH { images[j] } else { images[j - PROBE_MESH] + 1.0 };
                if hi - images[i] > best.0 {
                    best = (hi - images[i], i);
                }
            }
            let diameter = (1.0 - best.0).max(0.0);
            diameters.push((chain.anchors[k], diameter));
            if found.is_none() && diameter < eps {
                found = Some((chain.anchors[k], diameter, best.1));
            }
        }
        let v_length = 1.0 - w as f64 / PROBE_MESH as f64;
        Ok(match found {
            Some((n, d, i)) => ContractionProbe {
                eps,
                v_start: ((i + w) % PROBE_MESH) as f64 / PROBE_MESH as f64,
                v_length,
                n: Some(n),
                diameter: d,
                diameters,
            },
            None => {
                let d = diameters.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
                ContractionProbe { eps, v_start: 0.0, v_length, n: None, diameter: d, diameters }
            }
        })
    }
}

/// The heavy-cluster set is invariant under the parameter shift by `1/q`, within `delta`.
pub fn atom_symmetry_check(report: &AtomReport, q: u32) -> Result<bool> {
    match MapFamily::try_from(report.map.clone())?.family() {
        Family::ZqVariant { q: mq } if mq == q => {}
        other => return Err(Error::Config(format!("symmetry order {q} does not match map {}", other.id()))),
    }
    let heavy: Vec<&Cluster> = report.clusters.iter().filter(|c| c.mass > report.mass_floor).collect();
    let shift = 1.0 / q as f64;
    Ok(heavy.iter().all(|c| {
        let target = (c.center + shift).rem_euclid(1.0);
        heavy.iter().any(|d| circle_dist(d.center, target) <= report.delta)
    }))
}

/// Fiber-parameter spread of one long orbit near a set of reference leaves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionRow {
    /// Orbit prefix length.
    pub length: usize,
    /// Orbit points within the tube, per reference leaf.
    pub hits: Vec<usize>,
    /// `1 − |mean e^{2πit}|` per leaf, `None` below 10 hits.
    pub dispersion: Vec<Option<f64>>,
    /// Mean over leaves with a value.
    pub mean: f64,
}

const HEIGHT_BINS: usize = 256;

/// Assign each point of the orbit of `x0` to the nearest reference leaf within `tube`
/// and measure how spread its leaf parameters are, for each prefix in `lengths`.
pub fn orbit_dispersion(
    map: &MapFamily,
    x0: &TorusPoint,
    lengths: &[usize],
    leaves: &[CenterLeaf],
    tube: f64,
) -> Result<Vec<DispersionRow>> {
    if leaves.iter().any(|l| !l.z_monotone) {
        return Err(Error::Precondition("reference leaves must be graphs over the fiber".into()));
    }
    // horizontal position of every leaf at a grid of heights, for a cheap prefilter
    let sketch: Vec<Vec<[f64; 2]>> = leaves
        .iter()
        .map(|l| {
            (0..HEIGHT_BINS)
                .map(|k| {
                    let q = TorusPoint::wrap([l.base.x, l.base.y, (k as f64 + 0.5) / HEIGHT_BINS as f64]);
                    let c = l.locate(&q).lift;
                    [c[0].rem_euclid(1.0), c[1].rem_euclid(1.0)]
                })
                .collect()
        })
        .collect();
    let slack = leaves.iter().map(|l| l.step).fold(0.0, f64::max) + 2.0 / HEIGHT_BINS as f64;
    let n = lengths.iter().copied().max().unwrap_or(0);
    let mut sums = vec![(0usize, 0.0f64, 0.0f64); leaves.len()];
    let mut rows = Vec::new();
    let mut x = *x0;
    for i in 1..=n {
        x = map.eval(&x);
        let bin = ((x.z * HEIGHT_BINS as f64) as usize).min(HEIGHT_BINS - 1);
        let mut best: Option<(usize, f64, f64)> = None;
        for (j, leaf) in leaves.iter().enumerate() {
            let [sx, sy] = sketch[j][bin];
            if wrap_centered(x.x - sx).hypot(wrap_centered(x.y - sy)) > tube + slack {
                continue;
            }
            let loc = leaf.locate(&x);
            if loc.distance <= tube && best.is_none_or(|b| loc.distance < b.1) {
                best = Some((j, loc.distance, loc.t));
            }
        }
        if let Some((j, _, t)) = best {
            let (c, s) = (std::f64::consts::TAU * t).sin_cos();
            sums[j] = (sums[j].0 + 1, sums[j].1 + s, sums[j].2 + c);
        }
        if lengths.contains(&i) {
            let dispersion: Vec<Option<f64>> = sums.iter().map(|&(k, c, s)| (k >= 10).then(|| 1.0 - c.hypot(s) / k as f64)).collect();
            let vals: Vec<f64> = dispersion.iter().flatten().copied().collect();
            let mean = if vals.is_empty() { f64::NAN } else { vals.iter().sum::<f64>() / vals.len() as f64 };
            rows.push(DispersionRow { length: i, hits: sums.iter().map(|s| s.0).collect(), dispersion, mean });
        }
    }
    Ok(rows)
}
