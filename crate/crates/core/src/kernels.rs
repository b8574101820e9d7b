//! Positive kernels `G(x, y)`, their potentials `G nu`, and sampled estimates of
//! the quasi-symmetry, weak maximum principle and quasimetric constants.
//!
//! All estimates are maxima over finite samples, so they are lower bounds for
//! the true constants.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, dist2, norm};
use crate::measure::Measure;
use crate::potentials::riesz;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    /// Positive matrix indexed by an explicit point list.
    FiniteMatrix { points: Vec<Vec<f64>>, matrix: Vec<Vec<f64>> },
    /// Green's function of `-d^2/dx^2` on `(0, 1)`: `min(x,y) (1 - max(x,y))`.
    IntervalGreen,
    /// `|x - y|^{2-n}`, `n >= 3`.
    NewtonianRn { n: usize },
    /// Dirichlet Green's function of the unit ball in `R^3`.
    UnitBallGreen,
    /// `|x - y|^{alpha - n}`, `0 < alpha < n`.
    Riesz { n: usize, alpha: f64 },
}

#[derive(Deserialize)]
struct MatrixFile {
    points: Vec<Vec<f64>>,
    matrix: Vec<Vec<f64>>,
}

impl Kernel {
    pub fn finite_matrix(points: Vec<Vec<f64>>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let k = Kernel::FiniteMatrix { points, matrix };
        k.validate()?;
        Ok(k)
    }

    /// Matrix kernel whose points are the integers `0..N` on the line.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let points = (0..matrix.len()).map(|i| vec![i as f64]).collect();
        Self::finite_matrix(points, matrix)
    }

    /// Reads `{"points": [...], "matrix": [[...]]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: MatrixFile = serde_json::from_str(text)?;
        Self::finite_matrix(f.points, f.matrix)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Kernel::FiniteMatrix { points, matrix } => {
                let n = points.len();
                if n == 0 || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidParams("matrix must be square with one row per point".into()));
                }
                if matrix.iter().flatten().any(|g| !(g.is_finite() && *g > 0.0)) {
                    return Err(Error::InvalidParams("matrix entries must be finite and positive".into()));
                }
                let dim = points[0].len();
                if points.iter().any(|p| p.len() != dim) {
                    return Err(Error::InvalidParams("points must share one dimension".into()));
                }
                for i in 0..n {
                    for j in 0..i {
                        if points[i] == points[j] {
                            return Err(Error::InvalidParams(format!("points {j} and {i} coincide")));
                        }
                    }
                }
                Ok(())
            }
            Kernel::NewtonianRn { n } if *n < 3 => {
                Err(Error::InvalidParams("Newtonian kernel needs n >= 3".into()))
            }
            Kernel::Riesz { n, alpha } if !(*alpha > 0.0 && *alpha < *n as f64) => {
                Err(Error::InvalidParams(format!("Riesz order {alpha} must lie in (0, {n})")))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Kernel::FiniteMatrix { points, .. } => points[0].len(),
            Kernel::IntervalGreen => 1,
            Kernel::NewtonianRn { n } | Kernel::Riesz { n, .. } => *n,
            Kernel::UnitBallGreen => 3,
        }
    }

    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        match self {
            Kernel::FiniteMatrix { points, .. } => points.iter().position(|p| p.as_slice() == x),
            _ => None,
        }
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let inside = match self {
            Kernel::FiniteMatrix { .. } => self.index_of(x).is_some(),
            Kernel::IntervalGreen => (0.0..=1.0).contains(&x[0]),
            Kernel::UnitBallGreen => norm(x) <= 1.0,
            _ => x.iter().all(|v| v.is_finite()),
        };
        if inside {
            Ok(())
        } else {
            Err(Error::OutsideDomain(x.to_vec()))
        }
    }

    /// `G(x, y)`; `+inf` on the diagonal of singular kernels.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_domain(x)?;
        self.check_domain(y)?;
        Ok(match self {
            Kernel::FiniteMatrix { matrix, .. } => {
                matrix[self.index_of(x).unwrap()][self.index_of(y).unwrap()]
            }
            Kernel::IntervalGreen => interval_green(x[0], y[0]),
            Kernel::NewtonianRn { n } => power_kernel(dist2(x, y), *n as f64 - 2.0),
            Kernel::Riesz { n, alpha } => power_kernel(dist2(x, y), *n as f64 - alpha),
            Kernel::UnitBallGreen => {
                let d2 = dist2(x, y);
                if d2 == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / d2.sqrt() - image_term(x, y)
                }
            }
        })
    }

    /// `d(x, y) = 1 / G(x, y)`.
    pub fn quasi_distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            // the power form avoids a reciprocal rounding step
            Kernel::NewtonianRn { n } => Ok(distance_power(dist2(x, y), *n as f64 - 2.0)),
            Kernel::Riesz { n, alpha } => Ok(distance_power(dist2(x, y), *n as f64 - alpha)),
            _ => Ok(1.0 / self.eval(x, y)?),
        }
    }
}

fn interval_green(x: f64, y: f64) -> f64 {
    x.min(y) * (1.0 - x.max(y))
}

/// `|x-y|^{-e}` from the squared distance.
fn power_kernel(d2: f64, e: f64) -> f64 {
    if d2 == 0.0 {
        f64::INFINITY
    } else {
        1.0 / distance_power(d2, e)
    }
}

/// `|x-y|^e` from the squared distance.
fn distance_power(d2: f64, e: f64) -> f64 {
    if e == 2.0 {
        d2
    } else if e == 1.0 {
        d2.sqrt()
    } else {
        d2.powf(0.5 * e)
    }
}

/// `1 / | |y| x - y/|y| |`, equal to 1 at `y = 0`.
fn image_term(x: &[f64], y: &[f64]) -> f64 {
    let ny = norm(y);
    if ny == 0.0 {
        return 1.0;
    }
    let v: Vec<f64> = x.iter().zip(y).map(|(a, b)| ny * a - b / ny).collect();
    1.0 / norm(&v)
}

/// `int_a^b G(x, y) dy` for the interval Green's function.
fn interval_green_cell(x: f64, a: f64, b: f64) -> f64 {
    let m = x.clamp(a, b);
    (1.0 - x) * (m * m - a * a) / 2.0 + x * ((b - m) - (b * b - m * m) / 2.0)
}

/// `G nu (x) = int G(x, y) dnu(y)`.
///
/// Atomic measures are summed exactly. Smeared atoms use the closed-form
/// potential of a uniform ball (Newtonian, unit-ball Green, interval Green)
/// and grid densities against the interval Green's function are integrated
/// exactly cell by cell.
pub fn g_potential(k: &Kernel, nu: &Measure, x: &[f64]) -> Result<f64> {
    k.check_domain(x)?;
    if nu.dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: nu.dim() });
    }
    match nu {
        Measure::Atomic { points, weights, .. } => {
            let mut sum = 0.0;
            for (y, w) in points.iter().zip(weights) {
                if *w == 0.0 {
                    k.check_domain(y)?;
                    continue;
                }
                sum += w * k.eval(x, y)?;
            }
            Ok(sum)
        }
        Measure::Smeared { centers, weights, radius, .. } => {
            let rho = *radius;
            let mut sum = 0.0;
            for (c, w) in centers.iter().zip(weights) {
                sum += match k {
                    Kernel::NewtonianRn { n } => {
                        let nf = *n as f64;
                        let r = dist(x, c);
                        if r >= rho {
                            w * r.powf(2.0 - nf)
                        } else {
                            w * (nf * rho * rho - (nf - 2.0) * r * r) / (2.0 * rho.powf(nf))
                        }
                    }
                    Kernel::UnitBallGreen => {
                        if norm(c) + rho > 1.0 {
                            return Err(Error::OutsideDomain(c.clone()));
                        }
                        let r = dist(x, c);
                        let newton = if r >= rho {
                            w / r
                        } else {
                            w * (3.0 * rho * rho - r * r) / (2.0 * rho.powi(3))
                        };
                        // the image part is harmonic in y, so a uniform ball averages to its centre value
                        newton - w * image_term(x, c)
                    }
                    Kernel::IntervalGreen => {
                        let (a, b) = (c[0] - rho, c[0] + rho);
                        if a < 0.0 || b > 1.0 {
                            return Err(Error::OutsideDomain(c.clone()));
                        }
                        w / (2.0 * rho) * interval_green_cell(x[0], a, b)
                    }
                    Kernel::Riesz { alpha, .. } => return riesz(nu, *alpha, x),
                    Kernel::FiniteMatrix { .. } => {
                        return Err(Error::Unsupported("smeared measure on a matrix kernel".into()))
                    }
                };
            }
            Ok(sum)
        }
        Measure::Grid1d { a, b, densities } => match k {
            Kernel::IntervalGreen => {
                if *a < 0.0 || *b > 1.0 {
                    return Err(Error::OutsideDomain(vec![*a, *b]));
                }
                let h = (b - a) / densities.len() as f64;
                Ok(densities
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| **d != 0.0)
                    .map(|(i, d)| {
                        let lo = a + i as f64 * h;
                        d * interval_green_cell(x[0], lo, lo + h)
                    })
                    .sum())
            }
            Kernel::Riesz { alpha, .. } => riesz(nu, *alpha, x),
            _ => Err(Error::Unsupported("grid densities need the interval or Riesz kernel".into())),
        },
    }
}

/// `A[i][c] = G(nu restricted to cell c)(x_i)`.
pub fn potential_matrix(k: &Kernel, nu: &Measure, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    points
        .iter()
        .map(|x| (0..nu.num_cells()).map(|c| g_potential(k, &nu.cell(c), x)).collect())
        .collect()
}

/// Sampled kernel constants, each a lower bound for the true one.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelDiagnostics {
    pub quasi_symmetry_a: Option<f64>,
    pub wmp_h_estimate: Option<f64>,
    pub quasimetric_kappa_estimate: Option<f64>,
    pub pairs: usize,
    pub wmp_trials: usize,
    pub wmp_discarded: usize,
    pub triples: usize,
    pub degenerate_triples: usize,
}

/// `max over pairs of max(G(x,y)/G(y,x), G(y,x)/G(x,y))`; pairs with an infinite
/// or zero entry are skipped.
pub fn check_quasi_symmetry(k: &Kernel, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<KernelDiagnostics> {
    let mut a: f64 = 1.0;
    let mut used = 0;
    for (x, y) in pairs {
        let gxy = k.eval(x, y)?;
        let gyx = k.eval(y, x)?;
        if !(gxy.is_finite() && gyx.is_finite() && gxy > 0.0 && gyx > 0.0) {
            continue;
        }
        used += 1;
        a = a.max(gxy / gyx).max(gyx / gxy);
    }
    Ok(KernelDiagnostics { quasi_symmetry_a: Some(a), pairs: used, ..Default::default() })
}

/// `max over triples of d(x,y) / (d(x,z) + d(z,y))` with `d = 1/G`.
/// Triples with coincident points are skipped and counted.
pub fn check_quasimetric(k: &Kernel, triples: &[[Vec<f64>; 3]]) -> Result<KernelDiagnostics> {
    let mut kappa: f64 = 0.0;
    let (mut used, mut degenerate) = (0, 0);
    for [x, y, z] in triples {
        if x == y || y == z || x == z {
            degenerate += 1;
            continue;
        }
        let dxy = k.quasi_distance(x, y)?;
        let den = k.quasi_distance(x, z)? + k.quasi_distance(z, y)?;
        if !(den > 0.0 && dxy.is_finite()) {
            degenerate += 1;
            continue;
        }
        used += 1;
        kappa = kappa.max(dxy / den);
    }
    Ok(KernelDiagnostics {
        quasimetric_kappa_estimate: Some(kappa),
        triples: used,
        degenerate_triples: degenerate,
        ..Default::default()
    })
}

/// `sup_probes G nu / sup_{supp nu} G nu` for one measure; `None` when `G nu` is
/// unbounded on the support.
///
/// The support supremum is exact for matrix kernels and for atomic measures on
/// the interval (where `G nu` is piecewise linear with kinks at the atoms). For
/// smeared measures it is estimated by ascent: every probe outside the support
/// whose value exceeds the current estimate is pushed uphill along the
/// gradient until it enters the support, followed by compass search inside
/// the support.
pub fn wmp_ratio(k: &Kernel, nu: &Measure, probes: &[Vec<f64>]) -> Result<Option<f64>> {
    let sup_probe = probes
        .iter()
        .map(|x| g_potential(k, nu, x))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let sup_support = match nu {
        Measure::Atomic { points, weights, .. } => {
            let mut best: f64 = 0.0;
            for (y, w) in points.iter().zip(weights) {
                if *w > 0.0 {
                    best = best.max(g_potential(k, nu, y)?);
                }
            }
            best
        }
        Measure::Smeared { centers, radius, .. } => {
            smeared_support_sup(k, nu, centers, *radius, probes)?
        }
        Measure::Grid1d { .. } => {
            return Err(Error::Unsupported("maximum principle check for grid densities".into()))
        }
    };
    if !sup_support.is_finite() {
        return Ok(None);
    }
    Ok(Some(sup_probe / sup_support))
}

fn smeared_support_sup(
    k: &Kernel,
    nu: &Measure,
    centers: &[Vec<f64>],
    rho: f64,
    probes: &[Vec<f64>],
) -> Result<f64> {
    let in_support = |y: &[f64]| centers.iter().any(|c| dist(y, c) <= rho);
    let gap = |y: &[f64]| centers.iter().map(|c| dist(y, c) - rho).fold(f64::INFINITY, f64::min);
    let value = |y: &[f64]| g_potential(k, nu, y);
    let mut starts: Vec<Vec<f64>> = centers.to_vec();
    starts.extend(probes.iter().filter(|p| in_support(p)).cloned());
    let mut best: f64 = 0.0;
    for s in &starts {
        best = best.max(compass_ascent(&value, &in_support, s.clone(), rho)?);
    }
    for p in probes {
        if in_support(p) || value(p)? <= best {
            continue;
        }
        // exterior ascent: G nu is harmonic off the support and tends to 0 at infinity
        let mut y = p.clone();
        let mut vy = value(&y)?;
        let mut entered = false;
        for _ in 0..10_000 {
            let g = fd_gradient(&value, &y, 1e-7 * rho)?;
            let gn = norm(&g);
            if gn == 0.0 {
                break;
            }
            let mut t = 2.0 * gap(&y).max(1e-12 * rho);
            let mut moved = false;
            while t > 1e-15 * rho {
                let cand: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a + t * b / gn).collect();
                let vc = value(&cand)?;
                if vc > vy {
                    y = cand;
                    vy = vc;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if in_support(&y) {
                entered = true;
                break;
            }
            if !moved {
                break;
            }
        }
        if entered {
            best = best.max(compass_ascent(&value, &in_support, y, rho)?);
        } else {
            // fall back to the nearest support point
            let c = centers
                .iter()
                .min_by(|a, b| dist(&y, a).total_cmp(&dist(&y, b)))
                .expect("nonempty support");
            let d = dist(&y, c);
            let proj: Vec<f64> = c.iter().zip(&y).map(|(ci, yi)| ci + rho * (yi - ci) / d).collect();
            best = best.max(compass_ascent(&value, &in_support, proj, rho)?);
        }
    }
    Ok(best)
}

fn fd_gradient<F: Fn(&[f64]) -> Result<f64>>(f: &F, y: &[f64], h: f64) -> Result<Vec<f64>> {
    let mut g = vec![0.0; y.len()];
    let mut z = y.to_vec();
    for i in 0..y.len() {
        z[i] = y[i] + h;
        let fp = f(&z)?;
        z[i] = y[i] - h;
        let fm = f(&z)?;
        z[i] = y[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Coordinate search for a maximum of `f` over the set `inside`, from `start`.
fn compass_ascent<F, S>(f: &F, inside: &S, start: Vec<f64>, scale: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
    S: Fn(&[f64]) -> bool,
{
    let mut x = start;
    let mut fx = f(&x)?;
    let mut step = 0.25 * scale;
    while step > 1e-10 * scale {
        let mut improved = false;
        for i in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] += sgn * step;
                if !inside(&cand) {
                    continue;
                }
                let fc = f(&cand)?;
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(fx)
}

/// Settings for the randomized kernel checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnosticsConfig {
    pub pairs: usize,
    pub wmp_trials: usize,
    pub domain_sample: usize,
    pub max_atoms: usize,
    pub triples: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { pairs: 200, wmp_trials: 1000, domain_sample: 64, max_atoms: 3, triples: 2000 }
    }
}

fn random_point<R: Rng>(k: &Kernel, rng: &mut R) -> Vec<f64> {
    match k {
        Kernel::FiniteMatrix { points, .. } => points[rng.gen_range(0..points.len())].clone(),
        Kernel::IntervalGreen => vec![rng.gen_range(0.0..1.0)],
        Kernel::UnitBallGreen => loop {
            let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if norm(&p) < 1.0 {
                break p;
            }
        },
        _ => (0..k.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect(),
    }
}

/// A random point on a dyadic lattice of spacing `2^-10` in `[-2, 2]^n`.
fn random_lattice_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1024i32..=1024) as f64 / 512.0).collect()
}

fn random_triples<R: Rng>(k: &Kernel, count: usize, rng: &mut R) -> Vec<[Vec<f64>; 3]> {
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = match k {
            Kernel::NewtonianRn { n } | Kernel::Riesz { n, .. } if i % 2 == 0 => {
                // collinear midpoint triple, exact on the lattice
                let x = random_lattice_point(*n, rng);
                let y = random_lattice_point(*n, rng);
                let y: Vec<f64> = y
                    .iter()
                    .zip(&x)
                    .map(|(yi, xi)| if ((yi - xi) * 512.0) as i64 % 2 == 0 { *yi } else { yi + 1.0 / 512.0 })
                    .collect();
                let z = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                [x, y, z]
            }
            _ => [random_point(k, rng), random_point(k, rng), random_point(k, rng)],
        };
        out.push(t);
    }
    out
}

/// One random measure for the maximum principle check, or `None` when the
/// kernel admits no test measures.
fn random_trial_measure<R: Rng>(k: &Kernel, max_atoms: usize, rng: &mut R) -> Result<Measure> {
    let atoms = rng.gen_range(1..=max_atoms.max(1));
    match k {
        Kernel::FiniteMatrix { points, .. } => {
            let size = rng.gen_range(1..=atoms.min(points.len()));
            let idx = sample(rng, points.len(), size);
            let pts = idx.iter().map(|i| points[i].clone()).collect();
            let w = (0..size).map(|_| rng.gen_range(0.1..2.0)).collect();
            Measure::atomic(pts, w)
        }
        Kernel::IntervalGreen => {
            let pts = (0..atoms).map(|_| vec![rng.gen_range(0.05..0.95)]).collect();
            let w = (0..atoms).map(|_| rng.gen_range(0.1..2.0)).collect();
            Measure::atomic(pts, w)
        }
        Kernel::UnitBallGreen => {
            let rho = rng.gen_range(0.05..0.2);
            let centers = (0..atoms)
                .map(|_| loop {
                    let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.75..0.75)).collect();
                    if norm(&p) + rho <= 0.95 {
                        break p;
                    }
                })
                .collect();
            let w = (0..atoms).map(|_| rng.gen_range(0.1..2.0)).collect();
            Measure::smeared(centers, w, rho)
        }
        _ => {
            let n = k.dim();
            let rho = rng.gen_range(0.1..0.5);
            let centers = (0..atoms).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let w = (0..atoms).map(|_| rng.gen_range(0.1..2.0)).collect();
            Measure::smeared(centers, w, rho)
        }
    }
}

/// Randomized maximum principle check: `trials` random measures against a
/// shared random domain sample (all points for matrix kernels).
pub fn check_wmp(k: &Kernel, cfg: &DiagnosticsConfig, seed: u64) -> Result<KernelDiagnostics> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes: Vec<Vec<f64>> = match k {
        Kernel::FiniteMatrix { points, .. } => points.clone(),
        _ => (0..cfg.domain_sample).map(|_| random_point(k, &mut rng)).collect(),
    };
    let mut h: f64 = 0.0;
    let (mut used, mut discarded) = (0, 0);
    for _ in 0..cfg.wmp_trials {
        let nu = random_trial_measure(k, cfg.max_atoms, &mut rng)?;
        match wmp_ratio(k, &nu, &probes)? {
            Some(r) => {
                used += 1;
                h = h.max(r);
            }
            None => discarded += 1,
        }
    }
    Ok(KernelDiagnostics {
        wmp_h_estimate: if used > 0 { Some(h) } else { None },
        wmp_trials: used,
        wmp_discarded: discarded,
        ..Default::default()
    })
}

/// All three checks with one seed.
pub fn diagnose(k: &Kernel, cfg: &DiagnosticsConfig, seed: u64) -> Result<KernelDiagnostics> {
    k.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> =
        (0..cfg.pairs).map(|_| (random_point(k, &mut rng), random_point(k, &mut rng))).collect();
    let mut pairs = pairs;
    if let Kernel::FiniteMatrix { points, .. } = k {
        // matrix kernels are small: use every pair
        pairs = (0..points.len())
            .flat_map(|i| (0..points.len()).map(move |j| (i, j)))
            .filter(|(i, j)| i < j)
            .map(|(i, j)| (points[i].clone(), points[j].clone()))
            .collect();
    }
    let sym = check_quasi_symmetry(k, &pairs)?;
    let triples = random_triples(k, cfg.triples, &mut rng);
    let qm = check_quasimetric(k, &triples)?;
    let wmp = check_wmp(k, cfg, rng.gen())?;
    Ok(KernelDiagnostics {
        quasi_symmetry_a: sym.quasi_symmetry_a,
        wmp_h_estimate: wmp.wmp_h_estimate,
        quasimetric_kappa_estimate: qm.quasimetric_kappa_estimate,
        pairs: sym.pairs,
        wmp_trials: wmp.wmp_trials,
        wmp_discarded: wmp.wmp_discarded,
        triples: qm.triples,
        degenerate_triples: qm.degenerate_triples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn potential_examples() {
        let nu = Measure::atomic(vec![vec![0.75]], vec![1.0]).unwrap();
        assert!(close(g_potential(&Kernel::IntervalGreen, &nu, &[0.25]).unwrap(), 0.0625, 1e-15));
        let m = Kernel::from_matrix(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let nu = Measure::atomic(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        assert!(close(g_potential(&m, &nu, &[0.0]).unwrap(), 1.5, 1e-15));
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let newton = Kernel::NewtonianRn { n: 3 };
        assert!(close(g_potential(&newton, &d0, &[2.0, 0.0, 0.0]).unwrap(), 0.5, 1e-15));
        assert!(g_potential(&Kernel::IntervalGreen, &nu, &[1.5]).is_err());
    }

    #[test]
    fn grid_cells_integrate_exactly() {
        // constant density 2 gives x(1-x)
        let m = Measure::grid1d(0.0, 1.0, vec![2.0; 7]).unwrap();
        for &x in &[0.0, 0.1, 0.5, 0.77, 1.0] {
            let g = g_potential(&Kernel::IntervalGreen, &m, &[x]).unwrap();
            assert!(close(g, x * (1.0 - x), 1e-14), "x={x}: {g}");
        }
        // diagonal cell: h G(x,x) - h^2/8
        let h = 0.1;
        let c = interval_green_cell(0.45, 0.4, 0.5);
        assert!(close(c, h * 0.45 * 0.55 - h * h / 8.0, 1e-15));
    }

    #[test]
    fn smeared_interval_potential_matches_grid() {
        let smeared = Measure::smeared(vec![vec![0.5]], vec![0.4], 0.1).unwrap();
        let grid = Measure::Grid1d { a: 0.4, b: 0.6, densities: vec![2.0] };
        for &x in &[0.1, 0.45, 0.5, 0.9] {
            let a = g_potential(&Kernel::IntervalGreen, &smeared, &[x]).unwrap();
            let b = g_potential(&Kernel::IntervalGreen, &grid, &[x]).unwrap();
            assert!(close(a, b, 1e-15));
        }
    }

    #[test]
    fn unit_ball_green_vanishes_on_boundary() {
        let k = Kernel::UnitBallGreen;
        let y = [0.3, -0.2, 0.1];
        for x in [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.6, 0.8, 0.0]] {
            assert!(k.eval(&x, &y).unwrap().abs() < 1e-14);
        }
        let x = [0.1, 0.5, -0.3];
        assert!(close(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap(), 1e-13));
        assert!(k.eval(&x, &y).unwrap() > 0.0);
    }

    #[test]
    fn unit_ball_smeared_matches_quadrature() {
        // compare with the node rule of the smeared measure far from the ball
        let nu = Measure::smeared(vec![vec![0.2, 0.1, 0.0]], vec![1.0], 0.15).unwrap();
        let x = [-0.5, 0.3, 0.2];
        let exact = g_potential(&Kernel::UnitBallGreen, &nu, &x).unwrap();
        let fine = nu.clone().with_resolution(crate::measure::NodeResolution { radial: 8, angular: 12 });
        let nodes = fine.nodes(crate::measure::NodeTag::Mu);
        let approx: f64 = nodes
            .points
            .iter()
            .zip(&nodes.weights)
            .map(|(y, w)| w * Kernel::UnitBallGreen.eval(&x, y).unwrap())
            .sum();
        assert!(close(exact, approx, 1e-8), "{exact} vs {approx}");
    }

    #[test]
    fn newtonian_ball_potential_matches_riesz_route() {
        let nu = Measure::smeared(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.5, 0.0]], vec![1.0, 2.0], 0.3)
            .unwrap();
        let k = Kernel::NewtonianRn { n: 3 };
        for x in [[0.1, 0.0, 0.0], [0.9, 0.6, 0.1], [3.0, -1.0, 2.0]] {
            let a = g_potential(&k, &nu, &x).unwrap();
            let b = riesz(&nu, 2.0, &x).unwrap();
            assert!(close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn quasi_symmetry_examples() {
        let sym = Kernel::from_matrix(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let pairs = vec![(vec![0.0], vec![1.0])];
        assert_eq!(check_quasi_symmetry(&sym, &pairs).unwrap().quasi_symmetry_a, Some(1.0));
        let skew = Kernel::from_matrix(vec![vec![1.0, 1.0], vec![0.5, 1.0]]).unwrap();
        assert_eq!(check_quasi_symmetry(&skew, &pairs).unwrap().quasi_symmetry_a, Some(2.0));
        let d = diagnose(&Kernel::IntervalGreen, &DiagnosticsConfig { wmp_trials: 10, ..Default::default() }, 3)
            .unwrap();
        assert_eq!(d.quasi_symmetry_a, Some(1.0));
    }

    #[test]
    fn wmp_matrix_examples() {
        let k = Kernel::from_matrix(vec![
            vec![1.0, 0.1, 0.1],
            vec![0.1, 1.0, 0.1],
            vec![0.1, 0.1, 1.0],
        ])
        .unwrap();
        let nu = Measure::atomic(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        let r = wmp_ratio(&k, &nu, &[vec![2.0]]).unwrap().unwrap();
        assert!(close(r, 0.2 / 1.1, 1e-15));
        let k = Kernel::from_matrix(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let nu = Measure::atomic(vec![vec![0.0]], vec![1.0]).unwrap();
        assert!(close(wmp_ratio(&k, &nu, &[vec![1.0]]).unwrap().unwrap(), 0.5, 1e-15));
        assert!(close(wmp_ratio(&k, &nu, &[vec![0.0], vec![1.0]]).unwrap().unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn wmp_newtonian_atomic_is_discarded() {
        let k = Kernel::NewtonianRn { n: 3 };
        let nu = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        assert_eq!(wmp_ratio(&k, &nu, &[vec![1.0, 0.0, 0.0]]).unwrap(), None);
    }

    #[test]
    fn wmp_probe_near_ball_is_dominated() {
        let k = Kernel::NewtonianRn { n: 3 };
        let nu = Measure::smeared(vec![vec![0.0; 3], vec![0.9, 0.0, 0.0]], vec![1.0, 1.0], 0.3).unwrap();
        let r = wmp_ratio(&k, &nu, &[vec![0.45, 0.3, 0.0], vec![0.45, 0.0, 0.0]]).unwrap().unwrap();
        assert!(r <= 1.0 + 1e-12, "{r}");
    }

    #[test]
    fn quasimetric_examples() {
        let newton = Kernel::NewtonianRn { n: 3 };
        let d = diagnose(&newton, &DiagnosticsConfig { wmp_trials: 5, ..Default::default() }, 7).unwrap();
        assert!(d.quasimetric_kappa_estimate.unwrap() <= 1.0);
        let riesz = Kernel::Riesz { n: 3, alpha: 1.0 };
        let tri = vec![[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]]];
        assert_eq!(check_quasimetric(&riesz, &tri).unwrap().quasimetric_kappa_estimate, Some(2.0));
        let degenerate = vec![[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]];
        let r = check_quasimetric(&riesz, &degenerate).unwrap();
        assert_eq!((r.triples, r.degenerate_triples), (0, 1));
    }

    #[test]
    fn json_matrix_loading() {
        let k = Kernel::from_json(r#"{"points": [[0.0], [1.0]], "matrix": [[1.0, 0.5], [0.5, 1.0]]}"#)
            .unwrap();
        assert_eq!(k.dim(), 1);
        assert!(Kernel::from_json(r#"{"points": [[0.0]], "matrix": [[-1.0]]}"#).is_err());
    }
}
