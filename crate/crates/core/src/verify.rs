//! Independent checks of solutions computed with the interval Green's function:
//! the finite-difference residual of `-u'' = sigma u^q + mu` and the energy
//! identity `int u'^2 dx = int u^{1+q} dsigma + int u dmu`.
//!
//! The solution is known at the cell midpoints and vanishes at both ends. The
//! gradient is reconstructed at every node by three-point differences
//! (one-sided at the ends) and its piecewise linear interpolant is squared and
//! integrated exactly; cell integrals on the right use the quadratic
//! interpolant through neighbouring nodes. Both sides are exact for quadratic
//! solutions.

use serde::{Deserialize, Serialize};

use crate::criteria::Backend;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::measure::{Measure, Params};
use crate::quad::GaussRule;
use crate::solver::{picard_solve, IterationConfig, SolveReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub cells: usize,
    pub h: f64,
    /// `max |-D^2 u - sigma u^q - mu|` over interior midpoints.
    pub ode_residual_sup: f64,
    pub energy_lhs: f64,
    pub energy_rhs: f64,
    pub relative_gap: f64,
}

/// Uniform grid on `[0, 1]` shared by sigma and mu.
fn grid_of<'a>(sigma: &'a Measure, mu: &'a Measure) -> Result<(&'a [f64], &'a [f64])> {
    match (sigma, mu) {
        (
            Measure::Grid1d { a: sa, b: sb, densities: sd },
            Measure::Grid1d { a: ma, b: mb, densities: md },
        ) => {
            if (*sa, *sb) != (0.0, 1.0) || (*ma, *mb) != (0.0, 1.0) || sd.len() != md.len() {
                return Err(Error::Unsupported(
                    "sigma and mu must share one uniform grid on [0, 1]".into(),
                ));
            }
            Ok((sd, md))
        }
        _ => Err(Error::Unsupported("verification needs grid densities".into())),
    }
}

/// Nodes `0, midpoints, 1` and the values there (zero at both ends).
fn with_boundary(u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = u.len();
    let h = 1.0 / m as f64;
    let mut x = Vec::with_capacity(m + 2);
    let mut v = Vec::with_capacity(m + 2);
    x.push(0.0);
    v.push(0.0);
    for (i, ui) in u.iter().enumerate() {
        x.push((i as f64 + 0.5) * h);
        v.push(*ui);
    }
    x.push(1.0);
    v.push(0.0);
    (x, v)
}

/// Quadratic through three nodes, evaluated at `t` (value and derivative).
fn quadratic(xs: [f64; 3], ys: [f64; 3], t: f64) -> (f64, f64) {
    let mut val = 0.0;
    let mut der = 0.0;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let den = (xs[i] - xs[j]) * (xs[i] - xs[k]);
        val += ys[i] * (t - xs[j]) * (t - xs[k]) / den;
        der += ys[i] * ((t - xs[j]) + (t - xs[k])) / den;
    }
    (val, der)
}

fn stencil(x: &[f64], v: &[f64], k: usize) -> ([f64; 3], [f64; 3]) {
    let c = k.clamp(1, x.len() - 2);
    ([x[c - 1], x[c], x[c + 1]], [v[c - 1], v[c], v[c + 1]])
}

/// `int_0^1 u'^2 dx` from midpoint values.
pub fn dirichlet_energy(u: &[f64]) -> f64 {
    let (x, v) = with_boundary(u);
    let g: Vec<f64> = (0..x.len())
        .map(|k| {
            let (xs, ys) = stencil(&x, &v, k);
            quadratic(xs, ys, x[k]).1
        })
        .collect();
    x.windows(2)
        .zip(g.windows(2))
        .map(|(xw, gw)| (xw[1] - xw[0]) * (gw[0] * gw[0] + gw[0] * gw[1] + gw[1] * gw[1]) / 3.0)
        .sum()
}

/// `sum_i d_i int_{cell i} f(u)` with `f(u)` interpolated quadratically.
fn weighted_cell_integral(u: &[f64], densities: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let (x, v) = with_boundary(u);
    let fv: Vec<f64> = v.iter().map(|t| f(*t)).collect();
    let h = 1.0 / u.len() as f64;
    let rule = GaussRule::new(3);
    densities
        .iter()
        .enumerate()
        .filter(|(_, d)| **d != 0.0)
        .map(|(i, d)| {
            let (xs, ys) = stencil(&x, &fv, i + 1);
            let lo = i as f64 * h;
            d * rule.integrate(lo, lo + h, |t| quadratic(xs, ys, t).0)
        })
        .sum()
}

/// `(lhs, rhs)` of the energy identity.
pub fn energy_sides(u: &[f64], sigma: &Measure, mu: &Measure, q: f64) -> Result<(f64, f64)> {
    let (sd, md) = grid_of(sigma, mu)?;
    if u.len() != sd.len() {
        return Err(Error::MismatchedNodes(format!("{} values for {} cells", u.len(), sd.len())));
    }
    let lhs = dirichlet_energy(u);
    let rhs = weighted_cell_integral(u, sd, |t| t.max(0.0).powf(1.0 + q))
        + weighted_cell_integral(u, md, |t| t);
    Ok((lhs, rhs))
}

/// `|lhs - rhs| / max(lhs, rhs)`.
pub fn energy_identity_gap(u: &[f64], sigma: &Measure, mu: &Measure, q: f64) -> Result<f64> {
    let (lhs, rhs) = energy_sides(u, sigma, mu, q)?;
    Ok(relative_gap(lhs, rhs))
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    let den = lhs.max(rhs);
    if den > 0.0 {
        (lhs - rhs).abs() / den
    } else {
        0.0
    }
}

pub fn verify_interval_solution(
    report: &SolveReport,
    sigma: &Measure,
    mu: &Measure,
    q: f64,
) -> Result<VerifyReport> {
    let (sd, md) = grid_of(sigma, mu)?;
    let m = sd.len();
    let u = &report.u;
    if u.len() != m {
        return Err(Error::MismatchedNodes(format!("{} values for {} cells", u.len(), m)));
    }
    let h = 1.0 / m as f64;
    let mut res: f64 = 0.0;
    for i in 1..m.saturating_sub(1) {
        let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        res = res.max((-d2 - sd[i] * u[i].max(0.0).powf(q) - md[i]).abs());
    }
    let (lhs, rhs) = energy_sides(u, sigma, mu, q)?;
    Ok(VerifyReport {
        cells: m,
        h,
        ode_residual_sup: res,
        energy_lhs: lhs,
        energy_rhs: rhs,
        relative_gap: relative_gap(lhs, rhs),
    })
}

/// Polynomial `sum c_k x^k`, used for smooth test densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn antiderivative(&self) -> Poly {
        let mut c = vec![0.0];
        c.extend(self.0.iter().enumerate().map(|(k, a)| a / (k as f64 + 1.0)));
        Poly(c)
    }

    /// Grid measure on `[0, 1]` with exact cell averages.
    pub fn grid(&self, cells: usize) -> Result<Measure> {
        let anti = self.antiderivative();
        Measure::grid1d_from_antiderivative(0.0, 1.0, cells, |x| anti.eval(x))
    }
}

/// Mesh-refinement study with polynomial densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudySpec {
    pub sigma: Poly,
    pub mu: Poly,
    pub meshes: Vec<usize>,
    pub energy_mesh: usize,
    pub tol: f64,
    pub residual_ratio_range: (f64, f64),
    pub max_energy_gap: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            // vanishes to second order at both ends
            sigma: Poly(vec![0.0, 0.0, 16.0, -32.0, 16.0]),
            mu: Poly(vec![1.0, 4.0, -4.0]),
            meshes: vec![64, 128, 256],
            energy_mesh: 512,
            tol: 1e-13,
            residual_ratio_range: (3.0, 5.0),
            max_energy_gap: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub levels: Vec<VerifyReport>,
    pub residual_ratios: Vec<f64>,
    pub energy_level: VerifyReport,
    pub ratios_ok: bool,
    pub energy_ok: bool,
}

impl StudyReport {
    pub fn passed(&self) -> bool {
        self.ratios_ok && self.energy_ok
    }
}

/// Solve on one mesh with the interval Green's function and verify.
pub fn solve_and_verify(sigma: &Measure, mu: &Measure, q: f64, tol: f64) -> Result<VerifyReport> {
    let prm = Params::new(1, 2.0, q, 0.5)?;
    let backend = Backend::Kernel { kernel: Kernel::IntervalGreen };
    let cfg = IterationConfig { tol, ..Default::default() };
    let report = picard_solve(sigma, mu, &prm, &backend, &cfg)?;
    verify_interval_solution(&report, sigma, mu, q)
}

pub fn refinement_study(spec: &StudySpec, q: f64) -> Result<StudyReport> {
    let levels = spec
        .meshes
        .iter()
        .map(|&m| solve_and_verify(&spec.sigma.grid(m)?, &spec.mu.grid(m)?, q, spec.tol))
        .collect::<Result<Vec<_>>>()?;
    let residual_ratios: Vec<f64> =
        levels.windows(2).map(|w| w[0].ode_residual_sup / w[1].ode_residual_sup).collect();
    let (lo, hi) = spec.residual_ratio_range;
    let ratios_ok = residual_ratios.iter().all(|r| (lo..=hi).contains(r));
    let e = spec.energy_mesh;
    let energy_level = solve_and_verify(&spec.sigma.grid(e)?, &spec.mu.grid(e)?, q, spec.tol)?;
    let energy_ok = energy_level.relative_gap <= spec.max_energy_gap;
    Ok(StudyReport { levels, residual_ratios, energy_level, ratios_ok, energy_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_energy_is_exact() {
        for m in [4, 17, 64] {
            let h = 1.0 / m as f64;
            let u: Vec<f64> = (0..m).map(|i| {
                let x = (i as f64 + 0.5) * h;
                x * (1.0 - x)
            }).collect();
            assert!((dirichlet_energy(&u) - 1.0 / 3.0).abs() < 1e-13);
            let sigma = Measure::Grid1d { a: 0.0, b: 1.0, densities: vec![0.0; m] };
            let mu = Measure::grid1d(0.0, 1.0, vec![2.0; m]).unwrap();
            let (l, r) = energy_sides(&u, &sigma, &mu, 0.5).unwrap();
            assert!((l - r).abs() < 1e-13 && (r - 1.0 / 3.0).abs() < 1e-13);
            let doubled: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
            assert!(energy_identity_gap(&doubled, &sigma, &mu, 0.5).unwrap() > 0.4);
        }
    }

    #[test]
    fn manufactured_solution() {
        let m = 32;
        let sigma = Measure::grid1d(0.0, 1.0, vec![1e-12; m]).unwrap();
        let mu = Measure::grid1d(0.0, 1.0, vec![2.0; m]).unwrap();
        let r = solve_and_verify(&sigma, &mu, 0.5, 1e-14).unwrap();
        assert!((r.energy_lhs - 1.0 / 3.0).abs() < 1e-10);
        assert!((r.energy_rhs - 1.0 / 3.0).abs() < 1e-10);
        assert!(r.ode_residual_sup < 1e-8, "{}", r.ode_residual_sup);
        let fine = solve_and_verify(&sigma.refined(2).unwrap(), &mu.refined(2).unwrap(), 0.5, 1e-14).unwrap();
        assert!(fine.ode_residual_sup < 1e-7);
    }

    #[test]
    fn tiny_mu_residual_is_second_order() {
        let sigma = Poly(vec![0.0, 0.0, 16.0, -32.0, 16.0]);
        let mu = Poly(vec![1e-3]);
        let a = solve_and_verify(&sigma.grid(32).unwrap(), &mu.grid(32).unwrap(), 0.5, 1e-13).unwrap();
        let b = solve_and_verify(&sigma.grid(64).unwrap(), &mu.grid(64).unwrap(), 0.5, 1e-13).unwrap();
        assert!(a.ode_residual_sup.is_finite() && b.ode_residual_sup < a.ode_residual_sup);
    }

    #[test]
    fn rejects_mismatched_grids() {
        let s = Measure::grid1d(0.0, 1.0, vec![1.0; 4]).unwrap();
        let m = Measure::grid1d(0.0, 1.0, vec![1.0; 8]).unwrap();
        assert!(energy_identity_gap(&[0.1; 4], &s, &m, 0.5).is_err());
        let shifted = Measure::grid1d(0.0, 2.0, vec![1.0; 4]).unwrap();
        assert!(energy_identity_gap(&[0.1; 4], &s, &shifted, 0.5).is_err());
    }

    #[test]
    fn poly_helpers() {
        let p = Poly(vec![1.0, 4.0, -4.0]);
        assert_eq!(p.eval(0.5), 2.0);
        let a = p.antiderivative();
        assert!((a.eval(1.0) - (1.0 + 2.0 - 4.0 / 3.0)).abs() < 1e-15);
        let g = p.grid(2).unwrap();
        assert!((g.total_mass() - a.eval(1.0)).abs() < 1e-15);
    }
}
