//! Closed-form diffeomorphism families of `T^3`.
//!
//! Every family is a composition of a *shear* `j`, which pushes `(x, y)` along a fixed
//! vector by an amount depending on `z`, and a *skew product* `h` over a hyperbolic
//! automorphism of `T^2`. Both factors have closed-form inverses, so forward and
//! inverse maps and their Jacobians are evaluated without root finding.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat3;
use crate::torus::{sin_cos_turns, sin_turns, torus_dist, Mat2Z, TorusPoint};

/// Hard cap on stored orbit length.
pub const DEFAULT_MAX_ITERATES: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Inverse,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Forward => Direction::Inverse,
            Direction::Inverse => Direction::Forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// `F_{a,b} = (j∘h)^{-1}` over the cat map.
    ShubWilkinson,
    /// Same, with the shear frequency multiplied by `q`.
    ZqVariant { q: u32 },
    /// `A_{a,b} = j∘h` over `(3 2; 1 1)`.
    BonattiWilkinson,
    /// `(x, y, z) ↦ (A(x, y), z)`; `a` and `b` are ignored.
    LinearSkew(Mat2Z),
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::ShubWilkinson => "shub-wilkinson",
            Family::ZqVariant { .. } => "zq-variant",
            Family::BonattiWilkinson => "bonatti-wilkinson",
            Family::LinearSkew(_) => "linear-skew",
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Shear {
    cx: f64,
    cy: f64,
    freq: f64,
}

#[derive(Clone, Copy, Debug)]
struct Skew {
    m: Mat2Z,
    inv: Mat2Z,
    lx: f64,
    ly: f64,
}

/// Both sides of a symmetry relation at a point.
type SidesFn = dyn Fn(&TorusPoint) -> (TorusPoint, TorusPoint);

/// Flat, serializable description of a map; also the config-file form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    pub family: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[i64; 4]>,
    #[serde(default = "default_direction")]
    pub direction: Direction,
}

fn default_direction() -> Direction {
    Direction::Forward
}

/// A validated member of one of the families, with an orientation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapSpec", into = "MapSpec")]
pub struct MapFamily {
    family: Family,
    a: f64,
    b: f64,
    direction: Direction,
}

impl TryFrom<MapSpec> for MapFamily {
    type Error = Error;

    fn try_from(s: MapSpec) -> Result<Self> {
        let family = match s.family.as_str() {
            "shub-wilkinson" => Family::ShubWilkinson,
            "zq-variant" => Family::ZqVariant { q: s.q.unwrap_or(2) },
            "bonatti-wilkinson" => Family::BonattiWilkinson,
            "linear-skew" => {
                let m = s.matrix.unwrap_or([2, 1, 1, 1]);
                Family::LinearSkew(Mat2Z::new(m[0], m[1], m[2], m[3])?)
            }
            other => return Err(Error::Config(format!("unknown map family '{other}'"))),
        };
        let mut map = MapFamily::new(family, s.a, s.b)?;
        map.direction = s.direction;
        Ok(map)
    }
}

impl From<MapFamily> for MapSpec {
    fn from(m: MapFamily) -> Self {
        MapSpec {
            family: m.family.id().to_string(),
            a: m.a,
            b: m.b,
            q: match m.family {
                Family::ZqVariant { q } => Some(q),
                _ => None,
            },
            matrix: match m.family {
                Family::LinearSkew(x) => Some([x.a11, x.a12, x.a21, x.a22]),
                _ => None,
            },
            direction: m.direction,
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shub-wilkinson" | "sw" => Ok(Family::ShubWilkinson),
            "zq-variant" | "zq" => Ok(Family::ZqVariant { q: 2 }),
            "bonatti-wilkinson" | "bw" => Ok(Family::BonattiWilkinson),
            "linear-skew" | "linear" => Ok(Family::LinearSkew(Mat2Z::CAT)),
            other => Err(Error::Config(format!("unknown map family '{other}'"))),
        }
    }
}

impl fmt::Display for MapFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.id())?;
        if let Family::ZqVariant { q } = self.family {
            write!(f, "[q={q}]")?;
        }
        if let Family::LinearSkew(m) = self.family {
            write!(f, "[{} {}; {} {}]", m.a11, m.a12, m.a21, m.a22)?;
        }
        write!(f, "(a={}, b={})", self.a, self.b)?;
        if self.direction == Direction::Inverse {
            write!(f, "^-1")?;
        }
        Ok(())
    }
}

impl MapFamily {
    pub fn new(family: Family, a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Config(format!("non-finite parameters a={a}, b={b}")));
        }
        match family {
            Family::ZqVariant { q } if q < 2 => return Err(Error::Config(format!("Z_q variant needs q >= 2, got {q}"))),
            Family::LinearSkew(m) if !m.is_hyperbolic() || m.det().abs() != 1 => {
                return Err(Error::Config(format!("{m:?} is not a hyperbolic automorphism")))
            }
            _ => {}
        }
        Ok(MapFamily { family, a, b, direction: Direction::Forward })
    }

    pub fn shub_wilkinson(a: f64, b: f64) -> Self {
        Self::new(Family::ShubWilkinson, a, b).expect("finite parameters")
    }

    pub fn zq(q: u32, a: f64, b: f64) -> Result<Self> {
        Self::new(Family::ZqVariant { q }, a, b)
    }

    pub fn bonatti_wilkinson(a: f64, b: f64) -> Self {
        Self::new(Family::BonattiWilkinson, a, b).expect("finite parameters")
    }

    pub fn linear(m: Mat2Z) -> Result<Self> {
        Self::new(Family::LinearSkew(m), 0.0, 0.0)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn q(&self) -> Option<u32> {
        match self.family {
            Family::ZqVariant { q } => Some(q),
            _ => None,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn spec(&self) -> MapSpec {
        (*self).into()
    }

    /// The same map with reversed orientation.
    pub fn inverse(&self) -> Self {
        MapFamily { direction: self.direction.reversed(), ..*self }
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        MapFamily { direction, ..*self }
    }

    /// Base automorphism of `T^2` (for the forward family map).
    pub fn base_matrix(&self) -> Mat2Z {
        match self.family {
            Family::ShubWilkinson | Family::ZqVariant { .. } => Mat2Z::CAT,
            Family::BonattiWilkinson => Mat2Z::THREE_TWO,
            Family::LinearSkew(m) => m,
        }
    }

    fn shear(&self) -> Option<Shear> {
        let s5 = 5f64.sqrt();
        match self.family {
            Family::ShubWilkinson => Some(Shear { cx: (1.0 + s5) * self.a, cy: 2.0 * self.a, freq: 1.0 }),
            Family::ZqVariant { q } => Some(Shear { cx: (1.0 + s5) * self.a, cy: 2.0 * self.a, freq: q as f64 }),
            Family::BonattiWilkinson => Some(Shear { cx: (1.0 + 3f64.sqrt()) * self.a, cy: self.a, freq: 1.0 }),
            Family::LinearSkew(_) => None,
        }
    }

    fn skew(&self) -> (Skew, f64) {
        let m = self.base_matrix();
        let (lx, ly, b) = match self.family {
            Family::ShubWilkinson | Family::ZqVariant { .. } => (1.0, 1.0, self.b),
            Family::BonattiWilkinson => (0.0, 0.0, self.b),
            Family::LinearSkew(_) => (0.0, 0.0, 0.0),
        };
        (Skew { m, inv: m.inverse(), lx, ly }, b)
    }

    /// Whether the oriented map is `j∘h` (as opposed to `h^{-1}∘j^{-1}`).
    fn is_jh(&self) -> bool {
        let family_forward_is_jh = !matches!(self.family, Family::ShubWilkinson | Family::ZqVariant { .. });
        family_forward_is_jh == (self.direction == Direction::Forward)
    }

    /// The oriented map on lifted coordinates (no reduction).
    pub fn eval_lift(&self, c: [f64; 3]) -> [f64; 3] {
        self.step_lift(c, false).0
    }

    /// Image and Jacobian on lifted coordinates.
    pub fn step_lift(&self, c: [f64; 3], with_jac: bool) -> ([f64; 3], Mat3) {
        let shear = self.shear();
        let (skew, b) = self.skew();
        if self.is_jh() {
            // h then j
            let (hx, hy) = skew.m.apply(c[0], c[1]);
            let (sy, cy) = sin_cos_turns(c[1]);
            let hz = c[2] + skew.lx * c[0] + skew.ly * c[1] + b * sy;
            let mut out = [hx, hy, hz];
            let mut dj = Mat3::identity();
            if let Some(s) = shear {
                let (sz, cz) = sin_cos_turns(s.freq * hz);
                out[0] += s.cx * cz;
                out[1] += s.cy * cz;
                dj[(0, 2)] = -TAU * s.freq * s.cx * sz;
                dj[(1, 2)] = -TAU * s.freq * s.cy * sz;
            }
            if !with_jac {
                return (out, Mat3::zeros());
            }
            let m = skew.m;
            let dh = Mat3::new(m.a11 as f64, m.a12 as f64, 0.0, m.a21 as f64, m.a22 as f64, 0.0, skew.lx, skew.ly + TAU * b * cy, 1.0);
            (out, dj * dh)
        } else {
            // j^{-1} then h^{-1}
            let mut u = c;
            let mut dji = Mat3::identity();
            if let Some(s) = shear {
                let (sz, cz) = sin_cos_turns(s.freq * c[2]);
                u[0] -= s.cx * cz;
                u[1] -= s.cy * cz;
                dji[(0, 2)] = TAU * s.freq * s.cx * sz;
                dji[(1, 2)] = TAU * s.freq * s.cy * sz;
            }
            let (x, y) = skew.inv.apply(u[0], u[1]);
            let (sy, cy) = sin_cos_turns(y);
            let z = u[2] - skew.lx * x - skew.ly * y - b * sy;
            if !with_jac {
                return ([x, y, z], Mat3::zeros());
            }
            let i = skew.inv;
            let (i11, i12, i21, i22) = (i.a11 as f64, i.a12 as f64, i.a21 as f64, i.a22 as f64);
            let l = skew.ly + TAU * b * cy;
            let dhi = Mat3::new(i11, i12, 0.0, i21, i22, 0.0, -(skew.lx * i11 + l * i21), -(skew.lx * i12 + l * i22), 1.0);
            ([x, y, z], dhi * dji)
        }
    }

    /// Image of a torus point.
    #[inline]
    pub fn eval(&self, p: &TorusPoint) -> TorusPoint {
        TorusPoint::wrap(self.eval_lift(p.coords()))
    }

    /// Analytic derivative at `p`.
    pub fn jacobian(&self, p: &TorusPoint) -> Mat3 {
        self.step_lift(p.coords(), true).1
    }

    /// Image and derivative together.
    #[inline]
    pub fn step(&self, p: &TorusPoint) -> (TorusPoint, Mat3) {
        let (c, j) = self.step_lift(p.coords(), true);
        (TorusPoint::wrap(c), j)
    }

    /// `n`-fold composition; negative `n` applies the inverse.
    pub fn apply_n(&self, p: &TorusPoint, n: i64) -> TorusPoint {
        let m = if n >= 0 { *self } else { self.inverse() };
        (0..n.unsigned_abs()).fold(*p, |q, _| m.eval(&q))
    }

    /// `n`-fold composition on lifted coordinates.
    pub fn apply_n_lift(&self, c: [f64; 3], n: i64) -> [f64; 3] {
        let m = if n >= 0 { *self } else { self.inverse() };
        (0..n.unsigned_abs()).fold(c, |q, _| m.eval_lift(q))
    }

    /// Lifted image and derivative of the `n`-fold composition (`n >= 0`).
    pub fn step_n_lift(&self, c: [f64; 3], n: u32) -> ([f64; 3], Mat3) {
        let mut out = (c, Mat3::identity());
        for _ in 0..n {
            let (c2, j) = self.step_lift(out.0, true);
            out = (c2, j * out.1);
        }
        out
    }

    /// Stored orbit `p_0, ..., p_|n|`.
    pub fn iterate(&self, p: &TorusPoint, n: i64) -> Result<OrbitSegment> {
        self.iterate_capped(p, n, DEFAULT_MAX_ITERATES)
    }

    pub fn iterate_capped(&self, p: &TorusPoint, n: i64, max: u64) -> Result<OrbitSegment> {
        if n.unsigned_abs() > max {
            return Err(Error::Config(format!("|n| = {} exceeds the iterate cap {max}", n.unsigned_abs())));
        }
        let map = if n >= 0 { *self } else { self.inverse() };
        let mut points = Vec::with_capacity(n.unsigned_abs() as usize + 1);
        points.push(*p);
        let mut q = *p;
        for _ in 0..n.unsigned_abs() {
            q = map.eval(&q);
            points.push(q);
        }
        Ok(OrbitSegment { map, points })
    }

    /// Symmetry relation declared for the family, checked on random points.
    pub fn check_symmetry<R: Rng + ?Sized>(&self, rng: &mut R, n_points: usize) -> Result<SymmetryReport> {
        let (relation, lhs_rhs): (String, Box<SidesFn>) = match self.family {
            Family::ZqVariant { q } => {
                let t = 1.0 / q as f64;
                let m = *self;
                (
                    format!("F(x, y, z + 1/{q}) = F(x, y, z) + (0, 0, 1/{q})"),
                    Box::new(move |p: &TorusPoint| (m.eval(&p.shifted([0.0, 0.0, t])), m.eval(p).shifted([0.0, 0.0, t]))),
                )
            }
            Family::BonattiWilkinson => {
                let m = *self;
                (
                    "phi∘A = A∘phi, phi(x, y, z) = (x, y + 1/2, -z)".to_string(),
                    Box::new(move |p: &TorusPoint| (z2_phi(&m.eval(p)), m.eval(&z2_phi(p)))),
                )
            }
            _ => return Err(Error::Config(format!("{} has no declared symmetry", self.family.id()))),
        };
        let mut max_error: f64 = 0.0;
        for _ in 0..n_points {
            let p = TorusPoint::random(rng);
            let (l, r) = lhs_rhs(&p);
            max_error = max_error.max(torus_dist(&l, &r));
        }
        Ok(SymmetryReport { relation, n_points, max_error, pass: max_error < SYMMETRY_TOL })
    }

    /// Central differences with one Richardson step (`h` and `h/2`).
    pub fn jacobian_fd(&self, p: &TorusPoint, h: f64) -> Mat3 {
        let c = p.coords();
        let diff = |h: f64, k: usize| {
            let mut plus = c;
            let mut minus = c;
            plus[k] += h;
            minus[k] -= h;
            let (fp, fm) = (self.eval_lift(plus), self.eval_lift(minus));
            [0, 1, 2].map(|i| (fp[i] - fm[i]) / (2.0 * h))
        };
        let mut out = Mat3::zeros();
        for k in 0..3 {
            let (d1, d2) = (diff(h, k), diff(h / 2.0, k));
            for i in 0..3 {
                out[(i, k)] = (4.0 * d2[i] - d1[i]) / 3.0;
            }
        }
        out
    }
}

pub const SYMMETRY_TOL: f64 = 1e-12;

/// The involution `(x, y, z) ↦ (x, y + 1/2, -z)`.
pub fn z2_phi(p: &TorusPoint) -> TorusPoint {
    TorusPoint::wrap([p.x, p.y + 0.5, -p.z])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub relation: String,
    pub n_points: usize,
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct OrbitSegment {
    /// The map actually applied (inverse for negative lengths).
    pub map: MapFamily,
    pub points: Vec<TorusPoint>,
}

impl OrbitSegment {
    pub fn base(&self) -> TorusPoint {
        self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() == 1
    }

    pub fn last(&self) -> TorusPoint {
        *self.points.last().unwrap()
    }

    pub fn direction(&self) -> Direction {
        self.map.direction()
    }
}

/// `sin 2πy + sin 2π(x+y) + sin 2π(3x+2y) + sin 2π(8x+5y)`.
pub fn r4_terms(x: f64, y: f64) -> [f64; 4] {
    [sin_turns(y), sin_turns(x + y), sin_turns(3.0 * x + 2.0 * y), sin_turns(8.0 * x + 5.0 * y)]
}

pub fn r4(x: f64, y: f64) -> f64 {
    r4_terms(x, y).iter().sum()
}
