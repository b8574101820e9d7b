//! Nonnegative measures with exact ball-mass evaluation, their quadrature node
//! sets and weighted `L^s` norms.
//!
//! Three concrete families are supported:
//!
//! * `Atomic`: finitely many point masses. Wolff potentials are infinite at the
//!   atoms, so an atomic `sigma` never satisfies the finiteness criteria. It is
//!   still useful as `mu` and for closed-form checks.
//! * `Smeared`: each atom spread uniformly over a ball of fixed radius. Ball
//!   masses are exact in every dimension (ball-ball overlap via cap volumes).
//! * `Grid1d`: piecewise-constant density on a uniform partition of `[a, b]`.
//!
//! Balls are closed: `B(x, r) = {y : |x - y| <= r}`. This makes ball-mass
//! profiles right-continuous and gives `ball_mass(m, x, 0) = m({x})`.
//! Potentials are insensitive to the choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ball_overlap_fraction, dist, sphere_rule};
use crate::quad::GaussRule;

/// Exponent and dimension tuple shared by every potential and criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

impl Params {
    pub fn new(n: usize, p: f64, q: f64, alpha: f64) -> Result<Self> {
        let prm = Self { n, p, q, alpha };
        prm.validate()?;
        Ok(prm)
    }

    /// Sub-natural growth regime: `1 < p`, `0 < q < p - 1`, `alpha > 0`, `n >= 1`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("dimension n must be at least 1".into()));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidParams(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.q > 0.0 && self.q < self.p - 1.0) {
            return Err(Error::InvalidParams(format!(
                "q = {} must lie in (0, p - 1) = (0, {})",
                self.q,
                self.p - 1.0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!("alpha = {} must be positive", self.alpha)));
        }
        Ok(())
    }

    /// `alpha * p < n`, the range where Wolff potentials of nonzero measures can be finite.
    pub fn wolff_admissible(&self) -> bool {
        self.alpha * self.p < self.n as f64
    }

    /// Decay exponent `(n - alpha p) / (p - 1)` of a Wolff potential.
    pub fn wolff_beta(&self) -> f64 {
        (self.n as f64 - self.alpha * self.p) / (self.p - 1.0)
    }
}

/// Resolution of the per-atom quadrature used for smeared atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeResolution {
    pub radial: usize,
    pub angular: usize,
}

impl Default for NodeResolution {
    fn default() -> Self {
        Self { radial: 3, angular: 2 }
    }
}

/// A nonnegative, nontrivial measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub enum Measure {
    Atomic {
        dim: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Smeared {
        dim: usize,
        centers: Vec<Vec<f64>>,
        weights: Vec<f64>,
        radius: f64,
        resolution: NodeResolution,
    },
    Grid1d {
        a: f64,
        b: f64,
        densities: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
enum RawMeasure {
    Atomic {
        dimension: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
    },
    Smeared {
        dimension: usize,
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        smear_radius: f64,
        #[serde(default)]
        resolution: NodeResolution,
    },
    Grid1d {
        #[serde(default = "one")]
        dimension: usize,
        interval: [f64; 2],
        densities: Vec<f64>,
    },
}

fn one() -> usize {
    1
}

impl TryFrom<RawMeasure> for Measure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        let m = match raw {
            RawMeasure::Atomic { dimension, points, weights } => {
                Measure::Atomic { dim: dimension, points, weights }
            }
            RawMeasure::Smeared { dimension, points, weights, smear_radius, resolution } => {
                Measure::Smeared {
                    dim: dimension,
                    centers: points,
                    weights,
                    radius: smear_radius,
                    resolution,
                }
            }
            RawMeasure::Grid1d { dimension, interval, densities } => {
                if dimension != 1 {
                    return Err(Error::InvalidMeasure("grid1d measures live in dimension 1".into()));
                }
                Measure::Grid1d { a: interval[0], b: interval[1], densities }
            }
        };
        m.validate()?;
        Ok(m)
    }
}

impl From<Measure> for RawMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Atomic { dim, points, weights } => {
                RawMeasure::Atomic { dimension: dim, points, weights }
            }
            Measure::Smeared { dim, centers, weights, radius, resolution } => RawMeasure::Smeared {
                dimension: dim,
                points: centers,
                weights,
                smear_radius: radius,
                resolution,
            },
            Measure::Grid1d { a, b, densities } => {
                RawMeasure::Grid1d { dimension: 1, interval: [a, b], densities }
            }
        }
    }
}

impl Measure {
    pub fn atomic(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        let m = Measure::Atomic { dim, points, weights };
        m.validate()?;
        Ok(m)
    }

    pub fn smeared(centers: Vec<Vec<f64>>, weights: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = centers.first().map(Vec::len).unwrap_or(0);
        let m = Measure::Smeared {
            dim,
            centers,
            weights,
            radius,
            resolution: NodeResolution::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn grid1d(a: f64, b: f64, densities: Vec<f64>) -> Result<Self> {
        let m = Measure::Grid1d { a, b, densities };
        m.validate()?;
        Ok(m)
    }

    /// Grid measure whose cell densities are the exact cell averages of `antiderivative'`.
    pub fn grid1d_from_antiderivative<F: Fn(f64) -> f64>(
        a: f64,
        b: f64,
        cells: usize,
        antiderivative: F,
    ) -> Result<Self> {
        let h = (b - a) / cells as f64;
        let densities = (0..cells)
            .map(|i| {
                let lo = a + i as f64 * h;
                (antiderivative(lo + h) - antiderivative(lo)) / h
            })
            .collect();
        Self::grid1d(a, b, densities)
    }

    pub fn with_resolution(mut self, res: NodeResolution) -> Self {
        if let Measure::Smeared { resolution, .. } = &mut self {
            *resolution = res;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check_weights = |w: &[f64]| -> Result<()> {
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidMeasure("weights must be finite and nonnegative".into()));
            }
            Ok(())
        };
        match self {
            Measure::Atomic { dim, points, weights }
            | Measure::Smeared { dim, centers: points, weights, .. } => {
                if *dim == 0 {
                    return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
                }
                if points.len() != weights.len() || points.is_empty() {
                    return Err(Error::InvalidMeasure(
                        "points and weights must be nonempty and of equal length".into(),
                    ));
                }
                if let Some(p) = points.iter().find(|p| p.len() != *dim) {
                    return Err(Error::DimensionMismatch { expected: *dim, got: p.len() });
                }
                check_weights(weights)?;
                if let Measure::Smeared { radius, resolution, .. } = self {
                    if !(*radius > 0.0 && radius.is_finite()) {
                        return Err(Error::InvalidMeasure("smear radius must be positive".into()));
                    }
                    if resolution.radial == 0 || resolution.angular == 0 {
                        return Err(Error::InvalidMeasure("node resolution must be positive".into()));
                    }
                }
            }
            Measure::Grid1d { a, b, densities } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidMeasure("grid interval must satisfy a < b".into()));
                }
                if densities.is_empty() {
                    return Err(Error::InvalidMeasure("grid needs at least one cell".into()));
                }
                check_weights(densities)?;
            }
        }
        if !(self.total_mass() > 0.0) {
            return Err(Error::InvalidMeasure("total mass must be positive".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Atomic { dim, .. } | Measure::Smeared { dim, .. } => *dim,
            Measure::Grid1d { .. } => 1,
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Measure::Atomic { .. })
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Measure::Atomic { weights, .. } | Measure::Smeared { weights, .. } => weights.iter().sum(),
            Measure::Grid1d { a, b, densities } => {
                let h = (b - a) / densities.len() as f64;
                densities.iter().map(|d| d * h).sum()
            }
        }
    }

    /// Number of cells: atoms, smeared atoms or grid cells.
    pub fn num_cells(&self) -> usize {
        match self {
            Measure::Atomic { weights, .. } | Measure::Smeared { weights, .. } => weights.len(),
            Measure::Grid1d { densities, .. } => densities.len(),
        }
    }

    /// Mass carried by each cell.
    pub fn cell_masses(&self) -> Vec<f64> {
        match self {
            Measure::Atomic { weights, .. } | Measure::Smeared { weights, .. } => weights.clone(),
            Measure::Grid1d { a, b, densities } => {
                let h = (b - a) / densities.len() as f64;
                densities.iter().map(|d| d * h).collect()
            }
        }
    }

    /// Multiply each cell's mass by `factors[c]`. The result is not revalidated,
    /// so zero factors are allowed.
    pub fn reweighted(&self, factors: &[f64]) -> Measure {
        assert_eq!(factors.len(), self.num_cells(), "one factor per cell");
        let mut out = self.clone();
        match &mut out {
            Measure::Atomic { weights, .. } | Measure::Smeared { weights, .. } => {
                weights.iter_mut().zip(factors).for_each(|(w, f)| *w *= f)
            }
            Measure::Grid1d { densities, .. } => {
                densities.iter_mut().zip(factors).for_each(|(d, f)| *d *= f)
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> Measure {
        self.reweighted(&vec![c; self.num_cells()])
    }

    /// Push-forward under `y -> lambda * y` (mass preserved).
    pub fn dilated(&self, lambda: f64) -> Measure {
        let mut out = self.clone();
        match &mut out {
            Measure::Atomic { points, .. } => {
                points.iter_mut().flatten().for_each(|v| *v *= lambda)
            }
            Measure::Smeared { centers, radius, .. } => {
                centers.iter_mut().flatten().for_each(|v| *v *= lambda);
                *radius *= lambda;
            }
            Measure::Grid1d { a, b, densities } => {
                *a *= lambda;
                *b *= lambda;
                densities.iter_mut().for_each(|d| *d /= lambda);
            }
        }
        out
    }

    /// The restriction of the measure to cell `c`.
    pub fn cell(&self, c: usize) -> Measure {
        match self {
            Measure::Atomic { dim, points, weights } => Measure::Atomic {
                dim: *dim,
                points: vec![points[c].clone()],
                weights: vec![weights[c]],
            },
            Measure::Smeared { dim, centers, weights, radius, resolution } => Measure::Smeared {
                dim: *dim,
                centers: vec![centers[c].clone()],
                weights: vec![weights[c]],
                radius: *radius,
                resolution: *resolution,
            },
            Measure::Grid1d { a, b, densities } => {
                let h = (b - a) / densities.len() as f64;
                Measure::Grid1d {
                    a: a + c as f64 * h,
                    b: a + (c + 1) as f64 * h,
                    densities: vec![densities[c]],
                }
            }
        }
    }

    /// Grid refinement: every cell split into `factor` equal cells with the same density.
    pub fn refined(&self, factor: usize) -> Option<Measure> {
        match self {
            Measure::Grid1d { a, b, densities } => Some(Measure::Grid1d {
                a: *a,
                b: *b,
                densities: densities
                    .iter()
                    .flat_map(|d| std::iter::repeat_n(*d, factor))
                    .collect(),
            }),
            _ => None,
        }
    }

    /// Mass of `{x}`.
    pub fn point_mass(&self, x: &[f64]) -> f64 {
        match self {
            Measure::Atomic { points, weights, .. } => points
                .iter()
                .zip(weights)
                .filter(|(p, _)| p.as_slice() == x)
                .map(|(_, w)| w)
                .sum(),
            _ => 0.0,
        }
    }

    /// Quadrature node set representing `dm`.
    pub fn nodes(&self, tag: NodeTag) -> EvaluationSet {
        let mut set = EvaluationSet::default();
        match self {
            Measure::Atomic { points, weights, .. } => {
                for (c, (p, w)) in points.iter().zip(weights).enumerate() {
                    set.push(p.clone(), *w, tag, c);
                }
            }
            Measure::Smeared { dim, centers, weights, radius, resolution } => {
                let local = ball_rule(*dim, *radius, *resolution);
                for (c, (center, w)) in centers.iter().zip(weights).enumerate() {
                    for (offset, lw) in &local {
                        let pt = center.iter().zip(offset).map(|(a, b)| a + b).collect();
                        set.push(pt, w * lw, tag, c);
                    }
                }
            }
            Measure::Grid1d { a, b, densities } => {
                let h = (b - a) / densities.len() as f64;
                for (c, d) in densities.iter().enumerate() {
                    set.push(vec![a + (c as f64 + 0.5) * h], d * h, tag, c);
                }
            }
        }
        set
    }
}

/// Normalized quadrature on a ball of radius `rho` centred at the origin:
/// offsets and weights summing to one.
fn ball_rule(n: usize, rho: f64, res: NodeResolution) -> Vec<(Vec<f64>, f64)> {
    let radial = GaussRule::new(res.radial);
    let sphere = sphere_rule(n, res.angular);
    let mut out = Vec::with_capacity(res.radial * sphere.len());
    for (r, wr) in radial.on(0.0, rho) {
        let jac = r.powi(n as i32 - 1);
        for (dir, ws) in &sphere {
            out.push((dir.iter().map(|d| d * r).collect(), wr * jac * ws));
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    out.iter_mut().for_each(|(_, w)| *w /= total);
    out
}

/// Closed-ball mass `m(B(x, r))`.
pub fn ball_mass(m: &Measure, x: &[f64], r: f64) -> f64 {
    let r = r.max(0.0);
    match m {
        Measure::Atomic { points, weights, .. } => points
            .iter()
            .zip(weights)
            .filter(|(p, _)| dist(p, x) <= r)
            .map(|(_, w)| w)
            .sum(),
        Measure::Smeared { dim, centers, weights, radius, .. } => centers
            .iter()
            .zip(weights)
            .map(|(c, w)| w * ball_overlap_fraction(*dim, dist(c, x), r, *radius))
            .sum(),
        Measure::Grid1d { a, b, densities } => {
            grid_cumulative(*a, *b, densities, x[0] + r) - grid_cumulative(*a, *b, densities, x[0] - r)
        }
    }
}

/// Mass of `(-inf, t]` for a grid density.
fn grid_cumulative(a: f64, b: f64, densities: &[f64], t: f64) -> f64 {
    if t <= a {
        return 0.0;
    }
    let h = (b - a) / densities.len() as f64;
    let t = t.min(b);
    let s = (t - a) / h;
    let full = (s.floor() as usize).min(densities.len());
    let mut mass: f64 = densities[..full].iter().sum::<f64>() * h;
    if full < densities.len() {
        mass += densities[full] * (t - (a + full as f64 * h));
    }
    mass
}

/// Shape of `r -> m(B(x, r))` on one interval between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PieceShape {
    Constant(f64),
    /// `start + slope * (r - r_k)`
    Linear { start: f64, slope: f64 },
    /// Closed-form smeared-atom overlap, evaluated through the profile.
    Smooth,
}

#[derive(Debug, Clone)]
enum ProfileSource {
    Steps,
    Linear,
    Smeared { dim: usize, radius: f64, dists: Vec<f64>, weights: Vec<f64> },
}

/// The nondecreasing function `r -> m(B(x, r))` for a fixed base point.
#[derive(Debug, Clone)]
pub struct BallMassProfile {
    base: Vec<f64>,
    breakpoints: Vec<f64>,
    pieces: Vec<PieceShape>,
    total: f64,
    source: ProfileSource,
}

impl BallMassProfile {
    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// `0 = r_0 < r_1 < ... < r_K`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Piece `k` covers `[r_k, r_{k+1})`.
    pub fn pieces(&self) -> &[PieceShape] {
        &self.pieces
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn last_breakpoint(&self) -> f64 {
        *self.breakpoints.last().unwrap()
    }

    /// Mass at the base point, `m({x})`.
    pub fn mass_at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.last_breakpoint() {
            return self.total;
        }
        let k = self.breakpoints.partition_point(|&b| b <= r) - 1;
        self.eval_piece(k, r)
    }

    /// Value of piece `k` at `r` (no range check).
    pub fn eval_piece(&self, k: usize, r: f64) -> f64 {
        match self.pieces[k] {
            PieceShape::Constant(v) => v,
            PieceShape::Linear { start, slope } => start + slope * (r - self.breakpoints[k]),
            PieceShape::Smooth => match &self.source {
                ProfileSource::Smeared { dim, radius, dists, weights } => dists
                    .iter()
                    .zip(weights)
                    .map(|(d, w)| w * ball_overlap_fraction(*dim, *d, r, *radius))
                    .sum(),
                _ => unreachable!("smooth pieces only arise from smeared atoms"),
            },
        }
    }
}

fn sorted_breakpoints(mut radii: Vec<f64>) -> Vec<f64> {
    radii.retain(|r| *r > 0.0 && r.is_finite());
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    let mut out = Vec::with_capacity(radii.len() + 1);
    out.push(0.0);
    out.extend(radii);
    out
}

pub fn ball_mass_profile(m: &Measure, x: &[f64]) -> BallMassProfile {
    let total = m.total_mass();
    match m {
        Measure::Atomic { points, weights, .. } => {
            let mut pairs: Vec<(f64, f64)> =
                points.iter().zip(weights).map(|(p, w)| (dist(p, x), *w)).collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let breakpoints = sorted_breakpoints(pairs.iter().map(|p| p.0).collect());
            let mut pieces = Vec::with_capacity(breakpoints.len() - 1);
            let mut acc = 0.0;
            let mut idx = 0;
            for &r in &breakpoints[..breakpoints.len() - 1] {
                while idx < pairs.len() && pairs[idx].0 <= r {
                    acc += pairs[idx].1;
                    idx += 1;
                }
                pieces.push(PieceShape::Constant(acc));
            }
            BallMassProfile {
                base: x.to_vec(),
                breakpoints,
                pieces,
                total,
                source: ProfileSource::Steps,
            }
        }
        Measure::Smeared { dim, centers, weights, radius, .. } => {
            let dists: Vec<f64> = centers.iter().map(|c| dist(c, x)).collect();
            let breakpoints = sorted_breakpoints(
                dists.iter().flat_map(|d| [(d - radius).abs(), d + radius]).collect(),
            );
            let pieces = breakpoints
                .windows(2)
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    let partial = dists.iter().any(|d| d - radius < mid && mid < d + radius);
                    if partial {
                        PieceShape::Smooth
                    } else {
                        let full: f64 = dists
                            .iter()
                            .zip(weights)
                            .filter(|(d, _)| **d + radius <= mid)
                            .map(|(_, w)| w)
                            .sum();
                        PieceShape::Constant(full)
                    }
                })
                .collect();
            BallMassProfile {
                base: x.to_vec(),
                breakpoints,
                pieces,
                total,
                source: ProfileSource::Smeared {
                    dim: *dim,
                    radius: *radius,
                    dists,
                    weights: weights.clone(),
                },
            }
        }
        Measure::Grid1d { a, b, densities } => {
            let h = (b - a) / densities.len() as f64;
            let edges = (0..=densities.len()).map(|i| (a + i as f64 * h - x[0]).abs());
            let breakpoints = sorted_breakpoints(edges.collect());
            let pieces = breakpoints
                .windows(2)
                .map(|w| {
                    let s0 = ball_mass(m, x, w[0]);
                    let s1 = ball_mass(m, x, w[1]);
                    let slope = ((s1 - s0) / (w[1] - w[0])).max(0.0);
                    if slope == 0.0 {
                        PieceShape::Constant(s0)
                    } else {
                        PieceShape::Linear { start: s0, slope }
                    }
                })
                .collect();
            BallMassProfile {
                base: x.to_vec(),
                breakpoints,
                pieces,
                total,
                source: ProfileSource::Linear,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeTag {
    Sigma,
    Mu,
    Probe,
}

/// Finite node set with weights standing in for a measure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvaluationSet {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub tags: Vec<NodeTag>,
    /// Cell of the source measure each node belongs to.
    pub cells: Vec<usize>,
}

impl EvaluationSet {
    fn push(&mut self, point: Vec<f64>, weight: f64, tag: NodeTag, cell: usize) {
        self.points.push(point);
        self.weights.push(weight);
        self.tags.push(tag);
        self.cells.push(cell);
    }

    pub fn probes(points: Vec<Vec<f64>>) -> Self {
        let n = points.len();
        Self {
            points,
            weights: vec![0.0; n],
            tags: vec![NodeTag::Probe; n],
            cells: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted average of node values over each cell (cells with zero weight get 0).
    pub fn cell_averages(&self, values: &[f64], num_cells: usize) -> Vec<f64> {
        let mut num = vec![0.0; num_cells];
        let mut den = vec![0.0; num_cells];
        for ((v, w), c) in values.iter().zip(&self.weights).zip(&self.cells) {
            num[*c] += w * v;
            den[*c] += w;
        }
        num.iter().zip(&den).map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 }).collect()
    }
}

/// `sum_i f(x_i) w_i`.
pub fn integrate(f: &[f64], nodes: &EvaluationSet) -> Result<f64> {
    if f.len() != nodes.len() {
        return Err(Error::MismatchedNodes(format!(
            "{} values for {} nodes",
            f.len(),
            nodes.len()
        )));
    }
    Ok(f.iter()
        .zip(&nodes.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| v * w)
        .sum())
}

/// `(sum_i |f_i|^s w_i)^{1/s}`, or `+inf` when a node with positive weight carries `+inf`.
pub fn lp_norm(f: &[f64], s: f64, nodes: &EvaluationSet) -> Result<f64> {
    if f.len() != nodes.len() {
        return Err(Error::MismatchedNodes(format!(
            "{} values for {} nodes",
            f.len(),
            nodes.len()
        )));
    }
    if !(s >= 1.0) {
        return Err(Error::InvalidParams(format!("norm exponent {s} must be at least 1")));
    }
    let mut sum = 0.0;
    for (v, w) in f.iter().zip(&nodes.weights) {
        if *w <= 0.0 {
            continue;
        }
        if v.is_infinite() {
            return Ok(f64::INFINITY);
        }
        sum += v.abs().powf(s) * w;
    }
    Ok(sum.powf(1.0 / s))
}
