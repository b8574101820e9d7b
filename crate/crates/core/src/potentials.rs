//! Wolff, truncated Wolff and Riesz potentials, energies and the iterated Riesz
//! comparison bound.
//!
//! Every radial potential is an integral of the ball-mass profile
//! `S(r) = m(B(x, r))`:
//!
//! ```text
//! int_0^R [ S(r) r^{-k} ]^s dr / r
//! ```
//!
//! with `k = n - alpha p`, `s = 1/(p-1)` for `W_{alpha,p}` and `k = n - alpha`,
//! `s = 1` for the Riesz potential (times `n - alpha`). Constant pieces and
//! the tail beyond the last breakpoint are integrated in closed form; the
//! remaining pieces use adaptive Gauss-Kronrod.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, dist2, sphere_rule};
use crate::measure::{ball_mass_profile, integrate, BallMassProfile, Measure, NodeTag, Params, PieceShape};
use crate::quad::adaptive;

/// Relative tolerance for every non-closed-form piece.
pub const PIECE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Wolff { alpha: f64, p: f64 },
    TruncatedWolff { alpha: f64, p: f64, radius: f64 },
    Riesz { alpha: f64 },
}

impl PotentialKind {
    pub fn eval(&self, m: &Measure, x: &[f64]) -> Result<f64> {
        let n = m.dim();
        match *self {
            PotentialKind::Wolff { alpha, p } => {
                Ok(wolff_profile(&ball_mass_profile(m, x), n, alpha, p, f64::INFINITY))
            }
            PotentialKind::TruncatedWolff { alpha, p, radius } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidParams("truncation radius must be positive".into()));
                }
                Ok(wolff_profile(&ball_mass_profile(m, x), n, alpha, p, radius))
            }
            PotentialKind::Riesz { alpha } => riesz(m, alpha, x),
        }
    }
}

/// `int_0^upper [S(r) r^{-k}]^s dr/r` over a ball-mass profile in `R^n`.
pub fn radial_integral(profile: &BallMassProfile, n: usize, k: f64, s: f64, upper: f64) -> f64 {
    if profile.mass_at_zero() > 0.0 {
        return f64::INFINITY;
    }
    if upper.is_infinite() && k <= 0.0 {
        return f64::INFINITY;
    }
    let bps = profile.breakpoints();
    let mut total = 0.0;
    for (idx, piece) in profile.pieces().iter().enumerate() {
        let a = bps[idx];
        if a >= upper {
            break;
        }
        let b = bps[idx + 1].min(upper);
        total += match *piece {
            PieceShape::Constant(v) => constant_piece(v, k, s, a, b),
            _ if a == 0.0 => {
                // S(r) = r^n h(r) near zero; substitute r = b u^{1/gamma}
                let gamma = (n as f64 - k) * s;
                if gamma <= 0.0 {
                    return f64::INFINITY;
                }
                let scaled = adaptive(
                    |u| {
                        let r = b * u.powf(1.0 / gamma);
                        if r <= 0.0 {
                            return small_r_limit(profile, n, b).powf(s);
                        }
                        (profile.eval_piece(idx, r) / r.powi(n as i32)).powf(s)
                    },
                    0.0,
                    1.0,
                    PIECE_TOL,
                    0.0,
                );
                b.powf(gamma) / gamma * scaled.value
            }
            _ => {
                adaptive(
                    |r| (profile.eval_piece(idx, r) * r.powf(-k)).powf(s) / r,
                    a,
                    b,
                    PIECE_TOL,
                    0.0,
                )
                .value
            }
        };
    }
    let last = profile.last_breakpoint();
    if upper > last {
        total += constant_piece(profile.total(), k, s, last, upper);
    }
    total
}

/// Limit of `S(r)/r^n` at `r = 0`, estimated at a tiny radius.
fn small_r_limit(profile: &BallMassProfile, n: usize, scale: f64) -> f64 {
    let r = scale * 1e-8;
    profile.eval_piece(0, r) / r.powi(n as i32)
}

/// `S^s int_a^b r^{-ks-1} dr`.
fn constant_piece(v: f64, k: f64, s: f64, a: f64, b: f64) -> f64 {
    if v <= 0.0 || b <= a {
        return 0.0;
    }
    if a == 0.0 {
        return f64::INFINITY;
    }
    let beta = k * s;
    let vs = v.powf(s);
    if beta == 0.0 {
        return vs * (b / a).ln();
    }
    let tail_b = if b.is_infinite() { 0.0 } else { b.powf(-beta) };
    vs * (a.powf(-beta) - tail_b) / beta
}

fn wolff_profile(profile: &BallMassProfile, n: usize, alpha: f64, p: f64, upper: f64) -> f64 {
    let k = n as f64 - alpha * p;
    radial_integral(profile, n, k, 1.0 / (p - 1.0), upper)
}

/// `W_{alpha,p} sigma (x)`; `+inf` when `alpha p >= n` or `sigma({x}) > 0`.
pub fn wolff(sigma: &Measure, prm: &Params, x: &[f64]) -> f64 {
    if !prm.wolff_admissible() {
        return f64::INFINITY;
    }
    wolff_profile(&ball_mass_profile(sigma, x), prm.n, prm.alpha, prm.p, f64::INFINITY)
}

/// `W^R_{alpha,p} sigma (x)`: the Wolff integral cut at radius `R`.
pub fn truncated_wolff(sigma: &Measure, prm: &Params, radius: f64, x: &[f64]) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("truncation radius {radius} must be positive")));
    }
    Ok(wolff_profile(&ball_mass_profile(sigma, x), prm.n, prm.alpha, prm.p, radius))
}

/// `I_alpha sigma (x) = int |x-y|^{alpha-n} dsigma(y)`. Atomic measures are summed
/// directly; the rest use `(n-alpha) int_0^inf S(r) r^{alpha-n-1} dr`.
pub fn riesz(sigma: &Measure, alpha: f64, x: &[f64]) -> Result<f64> {
    let n = sigma.dim();
    check_riesz_order(alpha, n)?;
    match sigma {
        Measure::Atomic { points, weights, .. } => {
            let mut sum = 0.0;
            for (p, w) in points.iter().zip(weights) {
                if *w == 0.0 {
                    continue;
                }
                let d2 = dist2(p, x);
                if d2 == 0.0 {
                    return Ok(f64::INFINITY);
                }
                sum += w * d2.powf(0.5 * (alpha - n as f64));
            }
            Ok(sum)
        }
        _ => riesz_via_profile(sigma, alpha, x),
    }
}

/// Riesz potential through the ball-mass profile, for every measure type.
pub fn riesz_via_profile(sigma: &Measure, alpha: f64, x: &[f64]) -> Result<f64> {
    let n = sigma.dim();
    check_riesz_order(alpha, n)?;
    let prof = ball_mass_profile(sigma, x);
    let k = n as f64 - alpha;
    Ok(k * radial_integral(&prof, n, k, 1.0, f64::INFINITY))
}

fn check_riesz_order(alpha: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::InvalidParams(format!("Riesz order {alpha} must lie in (0, {n})")));
    }
    Ok(())
}

/// Wolff potential at many points, evaluated in parallel.
pub fn wolff_at(sigma: &Measure, prm: &Params, points: &[Vec<f64>]) -> Vec<f64> {
    points.par_iter().map(|x| wolff(sigma, prm, x)).collect()
}

pub fn riesz_at(sigma: &Measure, alpha: f64, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    points.par_iter().map(|x| riesz(sigma, alpha, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    /// `int W_{alpha,p} sigma dsigma`
    pub wolff_energy: f64,
    /// `int I_{2 alpha} sigma dsigma`, only for `p = 2`
    pub riesz_energy: Option<f64>,
    /// `|(n - 2 alpha) wolff_energy - riesz_energy| / riesz_energy`
    pub identity_gap: Option<f64>,
}

pub fn energy(sigma: &Measure, prm: &Params) -> Result<EnergyReport> {
    let nodes = sigma.nodes(NodeTag::Sigma);
    let w = wolff_at(sigma, prm, &nodes.points);
    let wolff_energy = integrate(&w, &nodes)?;
    let (riesz_energy, identity_gap) = if prm.p == 2.0 && 2.0 * prm.alpha < prm.n as f64 {
        let r = riesz_at(sigma, 2.0 * prm.alpha, &nodes.points)?;
        let e = integrate(&r, &nodes)?;
        let scaled = (prm.n as f64 - 2.0 * prm.alpha) * wolff_energy;
        let gap = if e.is_infinite() && scaled.is_infinite() {
            0.0
        } else {
            (scaled - e).abs() / e.abs().max(f64::MIN_POSITIVE)
        };
        (Some(e), Some(gap))
    } else {
        (None, None)
    };
    Ok(EnergyReport { wolff_energy, riesz_energy, identity_gap })
}

/// Quadrature settings for [`iterated_riesz_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuadrature {
    /// Angular resolution of the product rule on each sphere.
    pub angular: usize,
    /// Relative tolerance of the adaptive radial integration.
    pub radial_tol: f64,
}

impl Default for BoundQuadrature {
    fn default() -> Self {
        Self { angular: 16, radial_tol: 1e-7 }
    }
}

/// `I_1((I_1 mu)^{1/(p-1)})(x)` for an atomic `mu`.
///
/// The outer integral over `R^n` is split by a partition of unity
/// `psi_c = |y-c|^{-2m} / sum_j |y-c_j|^{-2m}` with one piece per singular
/// centre (the evaluation point and each atom). Each piece is integrated in
/// spherical coordinates about its centre: a product rule on the sphere and
/// adaptive Gauss-Kronrod in the radius, after power substitutions that
/// remove the radial singularity at the centre and the algebraic tail. All
/// length scales are taken from the point configuration, so the scheme is
/// covariant under dilations.
///
/// The integral is `+inf` when `p <= 2 - 1/n` (the inner potential is not
/// locally integrable near atoms), when `p >= n` (non-integrable tail) or
/// when `x` is an atom.
pub fn iterated_riesz_bound(mu: &Measure, prm: &Params, x: &[f64]) -> Result<f64> {
    iterated_riesz_bound_with(mu, prm, x, BoundQuadrature::default())
}

pub fn iterated_riesz_bound_with(
    mu: &Measure,
    prm: &Params,
    x: &[f64],
    quad: BoundQuadrature,
) -> Result<f64> {
    let Measure::Atomic { points, weights, .. } = mu else {
        return Err(Error::Unsupported("iterated Riesz bound needs an atomic measure".into()));
    };
    let n = prm.n;
    if n < 2 || mu.dim() != n {
        return Err(Error::Unsupported("iterated Riesz bound needs n >= 2 matching mu".into()));
    }
    let nf = n as f64;
    let s = 1.0 / (prm.p - 1.0);
    let b = (nf - 1.0) * s; // f ~ |y - y_i|^{-b} near atoms
    if b >= nf || b <= 1.0 {
        return Ok(f64::INFINITY);
    }
    let atoms: Vec<(&Vec<f64>, f64)> =
        points.iter().zip(weights.iter().copied()).filter(|(_, w)| *w > 0.0).collect();
    if atoms.iter().any(|(p, _)| p.as_slice() == x) {
        return Ok(f64::INFINITY);
    }
    let mut centers: Vec<&[f64]> = vec![x];
    centers.extend(atoms.iter().map(|(p, _)| p.as_slice()));
    let m_pow = ((b + 2.0) / 2.0).ceil() + 1.0;

    let integrand = |y: &[f64]| -> f64 {
        let mut inner = 0.0;
        for (p, w) in &atoms {
            inner += w * dist2(y, p).powf(0.5 * (1.0 - nf));
        }
        let kernel = dist2(y, x).powf(0.5 * (1.0 - nf));
        kernel * inner.powf(s)
    };
    let partition = |y: &[f64], c: usize| -> f64 {
        // psi_c = 1 / sum_j (|y-c|/|y-c_j|)^{2m}
        let dc = dist2(y, centers[c]);
        let mut denom = 0.0;
        for (j, cj) in centers.iter().enumerate() {
            if j == c {
                denom += 1.0;
            } else {
                denom += (dc / dist2(y, cj)).powf(m_pow);
            }
        }
        1.0 / denom
    };

    let sphere = sphere_rule(n, quad.angular);
    let mut total = 0.0;
    for (ci, c) in centers.iter().enumerate() {
        let scale = centers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != ci)
            .map(|(_, cj)| dist(c, cj))
            .fold(f64::INFINITY, f64::min);
        // radial profile: rho^{n-1} * spherical sum
        let shell = |rho: f64| -> f64 {
            let mut acc = 0.0;
            let mut y = vec![0.0; n];
            for (dir, w) in &sphere {
                for i in 0..n {
                    y[i] = c[i] + rho * dir[i];
                }
                let psi = partition(&y, ci);
                if psi > 0.0 {
                    acc += w * psi * integrand(&y);
                }
            }
            acc * rho.powi(n as i32 - 1)
        };
        // near-centre exponent of the radial integrand
        let e = if ci == 0 { 0.0 } else { nf - 1.0 - b };
        let inner = adaptive(
            |t| {
                let rho = scale * t.powf(1.0 / (e + 1.0));
                if rho <= 0.0 {
                    return 0.0;
                }
                shell(rho) / rho.powf(e)
            },
            0.0,
            1.0,
            quad.radial_tol,
            0.0,
        )
        .value
            * scale.powf(e + 1.0)
            / (e + 1.0);
        let outer = adaptive(
            |t| {
                if t <= 0.0 {
                    return 0.0;
                }
                let rho = scale * t.powf(-1.0 / (b - 1.0));
                shell(rho) * rho.powf(b)
            },
            0.0,
            1.0,
            quad.radial_tol,
            0.0,
        )
        .value
            * scale.powf(1.0 - b)
            / (b - 1.0);
        total += inner + outer;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn prm(n: usize, p: f64, alpha: f64) -> Params {
        Params::new(n, p, 0.5 * (p - 1.0), alpha).unwrap()
    }

    #[test]
    fn single_atom_examples() {
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let pr = prm(3, 2.0, 1.0);
        assert!(rel(wolff(&d0, &pr, &[2.0, 0.0, 0.0]), 0.5) < 1e-14);
        assert_eq!(wolff(&d0, &pr, &[0.0; 3]), f64::INFINITY);
        let two = Measure::atomic(vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], vec![1.0, 1.0])
            .unwrap();
        assert!(rel(wolff(&two, &pr, &[0.0; 3]), 2.0) < 1e-14);
    }

    #[test]
    fn inadmissible_order_is_infinite() {
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let pr = prm(3, 2.0, 1.5);
        assert_eq!(wolff(&d0, &pr, &[1.0, 0.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn truncated_examples() {
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let pr = prm(3, 2.0, 1.0);
        let x = [2.0, 0.0, 0.0];
        assert_eq!(truncated_wolff(&d0, &pr, 1.5, &x).unwrap(), 0.0);
        assert!(rel(truncated_wolff(&d0, &pr, 4.0, &x).unwrap(), 0.25) < 1e-14);
        assert!(rel(truncated_wolff(&d0, &pr, 1e15, &x).unwrap(), wolff(&d0, &pr, &x)) < 1e-10);
        assert!(truncated_wolff(&d0, &pr, 0.0, &x).is_err());
    }

    #[test]
    fn riesz_examples() {
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        assert!(rel(riesz(&d0, 2.0, &[2.0, 0.0, 0.0]).unwrap(), 0.5) < 1e-15);
        assert_eq!(riesz(&d0, 2.0, &[0.0; 3]).unwrap(), f64::INFINITY);
        let two = Measure::atomic(vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], vec![1.0, 1.0])
            .unwrap();
        assert!(rel(riesz(&two, 2.0, &[0.0; 3]).unwrap(), 2.0) < 1e-15);
        assert!(riesz(&two, 3.0, &[0.0; 3]).is_err());
    }

    #[test]
    fn riesz_paths_agree_on_atoms() {
        let m = Measure::atomic(
            vec![vec![0.1, 0.2, -0.3], vec![1.0, 0.5, 0.0], vec![-0.7, 0.0, 0.4]],
            vec![0.5, 1.5, 2.0],
        )
        .unwrap();
        for &alpha in &[0.5, 1.0, 2.0, 2.7] {
            let x = [0.3, -0.2, 0.9];
            let a = riesz(&m, alpha, &x).unwrap();
            let b = riesz_via_profile(&m, alpha, &x).unwrap();
            assert!(rel(a, b) < 1e-10, "alpha={alpha}: {a} vs {b}");
        }
    }

    #[test]
    fn smeared_newtonian_matches_ball_potential() {
        // Uniform ball of mass w and radius rho: w(3 rho^2 - r^2)/(2 rho^3) inside, w/r outside.
        let (w, rho) = (1.5, 0.4);
        let m = Measure::smeared(vec![vec![0.0; 3]], vec![w], rho).unwrap();
        for &r in &[0.0, 0.1, 0.3, 0.4, 0.7, 2.0] {
            let exact = if r < rho { w * (3.0 * rho * rho - r * r) / (2.0 * rho.powi(3)) } else { w / r };
            let got = riesz(&m, 2.0, &[r, 0.0, 0.0]).unwrap();
            assert!(rel(got, exact) < 1e-9, "r={r}: {got} vs {exact}");
        }
    }

    #[test]
    fn grid_riesz_matches_direct_integral() {
        // n = 1, alpha = 0.5: int |x-y|^{-1/2} dy over [0, 1] with density 1
        let m = Measure::grid1d(0.0, 1.0, vec![1.0; 4]).unwrap();
        for &x in &[0.3f64, 0.5, 1.7] {
            let exact: f64 = if x <= 1.0 {
                2.0 * (x.sqrt() + (1.0 - x).sqrt())
            } else {
                2.0 * (x.sqrt() - (x - 1.0).sqrt())
            };
            let got = riesz(&m, 0.5, &[x]).unwrap();
            assert!(rel(got, exact) < 1e-9, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn grid_wolff_is_finite_inside_support() {
        let m = Measure::grid1d(0.0, 1.0, vec![1.0; 8]).unwrap();
        let pr = Params::new(1, 1.5, 0.2, 0.5).unwrap();
        let w = wolff(&m, &pr, &[0.5]);
        assert!(w.is_finite() && w > 0.0);
        // exact: int_0^{0.5} (2r / r^{0.25})^2 dr/r + int_{0.5}^inf (1/r^{0.25})^2 dr/r
        let exact = 4.0 * 0.5f64.powf(1.5) / 1.5 + 0.5f64.powf(-0.5) / 0.5;
        assert!(rel(w, exact) < 1e-9, "{w} vs {exact}");
    }

    #[test]
    fn energy_identity_for_smeared_pair() {
        let m = Measure::smeared(vec![vec![-1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], vec![1.0, 1.0], 0.1)
            .unwrap();
        let pr = prm(3, 2.0, 1.0);
        let e = energy(&m, &pr).unwrap();
        assert!(e.identity_gap.unwrap() < 1e-8);
        // continuum value: two self-energies 6/(5 rho) plus cross terms 2 * 1/2
        let riesz_energy = e.riesz_energy.unwrap();
        assert!(rel(riesz_energy, 25.0) < 1e-2, "{riesz_energy}");
        let doubled = energy(&m.scaled(2.0), &pr).unwrap();
        assert!(rel(doubled.riesz_energy.unwrap(), 4.0 * riesz_energy) < 1e-12);
    }

    #[test]
    fn energy_of_atomic_measure_is_infinite() {
        let m = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let e = energy(&m, &prm(3, 2.0, 1.0)).unwrap();
        assert_eq!(e.wolff_energy, f64::INFINITY);
        assert_eq!(e.riesz_energy, Some(f64::INFINITY));
    }

    #[test]
    fn potential_kind_dispatch() {
        let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        let x = [2.0, 0.0, 0.0];
        let w = PotentialKind::Wolff { alpha: 1.0, p: 2.0 }.eval(&d0, &x).unwrap();
        let t = PotentialKind::TruncatedWolff { alpha: 1.0, p: 2.0, radius: 4.0 }.eval(&d0, &x).unwrap();
        let r = PotentialKind::Riesz { alpha: 2.0 }.eval(&d0, &x).unwrap();
        assert!(rel(w, 0.5) < 1e-14 && rel(t, 0.25) < 1e-14 && rel(r, 0.5) < 1e-14);
    }
}
