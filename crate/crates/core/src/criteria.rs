//! Existence criteria reported as norms: a criterion holds when its norm is finite.
//!
//! Three backends share one interface. `Wolff` uses `W_{alpha,p}`, `Riesz` uses
//! `I_{2 alpha}` (with `p = 2`) and `Kernel` uses a Green potential `G` (with
//! `p = 2`).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{g_potential, Kernel};
use crate::measure::{integrate, lp_norm, Measure, NodeTag, Params};
use crate::potentials::{riesz, wolff};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Wolff,
    Riesz,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Backend {
    Wolff,
    Riesz,
    Kernel { kernel: Kernel },
}

impl Backend {
    pub fn mode(&self) -> Mode {
        match self {
            Backend::Wolff => Mode::Wolff,
            Backend::Riesz => Mode::Riesz,
            Backend::Kernel { .. } => Mode::Kernel,
        }
    }

    /// Checks that the backend applies to `prm` and the measure dimension.
    pub fn validate(&self, prm: &Params, dim: usize) -> Result<()> {
        prm.validate()?;
        if dim != prm.n {
            return Err(Error::DimensionMismatch { expected: prm.n, got: dim });
        }
        match self {
            Backend::Wolff => Ok(()),
            Backend::Riesz => {
                if prm.p != 2.0 {
                    return Err(Error::Unsupported("Riesz backend requires p = 2".into()));
                }
                if !(2.0 * prm.alpha < prm.n as f64) {
                    return Err(Error::InvalidParams("Riesz backend requires 2 alpha < n".into()));
                }
                Ok(())
            }
            Backend::Kernel { kernel } => {
                if prm.p != 2.0 {
                    return Err(Error::Unsupported("kernel backend requires p = 2".into()));
                }
                kernel.validate()?;
                if kernel.dim() != dim {
                    return Err(Error::DimensionMismatch { expected: kernel.dim(), got: dim });
                }
                Ok(())
            }
        }
    }

    /// Potential of `m` at each point, evaluated in parallel.
    pub fn potential(&self, m: &Measure, prm: &Params, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|x| self.potential_at(m, prm, x)).collect()
    }

    pub fn potential_at(&self, m: &Measure, prm: &Params, x: &[f64]) -> Result<f64> {
        match self {
            Backend::Wolff => Ok(wolff(m, prm, x)),
            Backend::Riesz => riesz(m, 2.0 * prm.alpha, x),
            Backend::Kernel { kernel } => g_potential(kernel, m, x),
        }
    }

    /// Homogeneity `P(c m) = c^theta P(m)`: `1/(p-1)` for Wolff, 1 otherwise.
    pub fn homogeneity(&self, prm: &Params) -> f64 {
        match self {
            Backend::Wolff => 1.0 / (prm.p - 1.0),
            _ => 1.0,
        }
    }

    /// Exponent of the sigma criterion: `(1+q)(p-1)/(p-1-q)`, which is `(1+q)/(1-q)` at `p = 2`.
    pub fn sigma_exponent(&self, prm: &Params) -> f64 {
        let (p, q) = (self.effective_p(prm), prm.q);
        (1.0 + q) * (p - 1.0) / (p - 1.0 - q)
    }

    /// Exponent in the lower bound `u >= c (P sigma)^e`: `(p-1)/(p-1-q)`.
    pub fn lower_bound_exponent(&self, prm: &Params) -> f64 {
        let (p, q) = (self.effective_p(prm), prm.q);
        (p - 1.0) / (p - 1.0 - q)
    }

    pub fn effective_p(&self, prm: &Params) -> f64 {
        match self {
            Backend::Wolff => prm.p,
            _ => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub mode: Mode,
    /// `||P sigma||` in `L^s(dsigma)` with `s` the sigma exponent.
    #[serde(with = "crate::infser")]
    pub sigma_norm: f64,
    /// `int P mu dmu`.
    #[serde(with = "crate::infser")]
    pub mu_energy: f64,
    /// `||P mu||` in `L^{1+q}(dsigma)`.
    #[serde(with = "crate::infser")]
    pub cross_norm: f64,
}

impl CriteriaReport {
    pub fn all_finite(&self) -> bool {
        self.sigma_norm.is_finite() && self.mu_energy.is_finite() && self.cross_norm.is_finite()
    }
}

pub fn check_sigma(sigma: &Measure, prm: &Params, backend: &Backend) -> Result<f64> {
    backend.validate(prm, sigma.dim())?;
    let nodes = sigma.nodes(NodeTag::Sigma);
    let v = backend.potential(sigma, prm, &nodes.points)?;
    lp_norm(&v, backend.sigma_exponent(prm), &nodes)
}

pub fn check_mu_energy(mu: &Measure, prm: &Params, backend: &Backend) -> Result<f64> {
    backend.validate(prm, mu.dim())?;
    let nodes = mu.nodes(NodeTag::Mu);
    let v = backend.potential(mu, prm, &nodes.points)?;
    integrate(&v, &nodes)
}

pub fn check_cross(sigma: &Measure, mu: &Measure, prm: &Params, backend: &Backend) -> Result<f64> {
    backend.validate(prm, sigma.dim())?;
    backend.validate(prm, mu.dim())?;
    let nodes = sigma.nodes(NodeTag::Sigma);
    let v = backend.potential(mu, prm, &nodes.points)?;
    lp_norm(&v, 1.0 + prm.q, &nodes)
}

pub fn criteria(sigma: &Measure, mu: &Measure, prm: &Params, backend: &Backend) -> Result<CriteriaReport> {
    Ok(CriteriaReport {
        mode: backend.mode(),
        sigma_norm: check_sigma(sigma, prm, backend)?,
        mu_energy: check_mu_energy(mu, prm, backend)?,
        cross_norm: check_cross(sigma, mu, prm, backend)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub criteria: CriteriaReport,
    /// Finite sigma norm and mu energy together with an infinite cross norm.
    pub violation: bool,
}

/// The two one-weight conditions imply the cross condition; a violation flags a bug.
pub fn implication_audit(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
) -> Result<AuditReport> {
    let c = criteria(sigma, mu, prm, backend)?;
    let violation = c.sigma_norm.is_finite() && c.mu_energy.is_finite() && c.cross_norm.is_infinite();
    Ok(AuditReport { criteria: c, violation })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub cells: usize,
    pub report: CriteriaReport,
}

/// Criteria at `M`, `2M`, `4M`, ... cells for grid measures (others are left
/// unrefined), so a divergent continuum quantity shows up as growth.
pub fn refinement_trend(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    levels: usize,
) -> Result<Vec<RefinementLevel>> {
    let mut out = Vec::with_capacity(levels);
    for l in 0..levels {
        let factor = 1usize << l;
        let s = sigma.refined(factor).unwrap_or_else(|| sigma.clone());
        let m = mu.refined(factor).unwrap_or_else(|| mu.clone());
        out.push(RefinementLevel { cells: s.num_cells(), report: criteria(&s, &m, prm, backend)? });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> (Measure, Measure, Params, Backend) {
        let k = Kernel::from_matrix(vec![vec![1.0]]).unwrap();
        let s = Measure::atomic(vec![vec![0.0]], vec![0.5]).unwrap();
        let m = Measure::atomic(vec![vec![0.0]], vec![0.5]).unwrap();
        (s, m, Params::new(1, 2.0, 0.5, 0.25).unwrap(), Backend::Kernel { kernel: k })
    }

    #[test]
    fn scalar_kernel_examples() {
        let (s, m, prm, b) = scalar();
        let expect = 0.0625f64.powf(1.0 / 3.0);
        assert!((check_sigma(&s, &prm, &b).unwrap() - expect).abs() < 1e-15);
        let cross = check_cross(&s, &m, &prm, &b).unwrap();
        // (0.5^{3/2} * 0.5)^{2/3} = 0.5^{5/3}
        assert!((cross - 0.5f64.powf(5.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn matrix_mu_energy_is_entry_sum() {
        let k = Kernel::from_matrix(vec![vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let mu = Measure::atomic(vec![vec![0.0], vec![1.0]], vec![1.0, 1.0]).unwrap();
        let prm = Params::new(1, 2.0, 0.5, 0.25).unwrap();
        let e = check_mu_energy(&mu, &prm, &Backend::Kernel { kernel: k }).unwrap();
        assert!((e - 3.0).abs() < 1e-15);
    }

    #[test]
    fn atomic_measures_in_wolff_mode() {
        let prm = Params::new(3, 2.0, 0.5, 1.0).unwrap();
        let s = Measure::atomic(vec![vec![0.0; 3], vec![1.0, 0.0, 0.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(check_sigma(&s, &prm, &Backend::Wolff).unwrap(), f64::INFINITY);
        assert_eq!(check_mu_energy(&s, &prm, &Backend::Wolff).unwrap(), f64::INFINITY);
        let diffuse = Measure::smeared(vec![vec![0.0, 3.0, 0.0]], vec![1.0], 0.2).unwrap();
        let away = check_cross(&diffuse, &s, &prm, &Backend::Wolff).unwrap();
        assert!(away.is_finite());
        let on = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
        assert_eq!(check_cross(&on, &s, &prm, &Backend::Wolff).unwrap(), f64::INFINITY);
        let audit = implication_audit(&s, &s, &prm, &Backend::Wolff).unwrap();
        assert!(!audit.violation);
    }

    #[test]
    fn interval_green_grid_regression() {
        let sigma = Measure::grid1d(0.0, 1.0, vec![1.0; 32]).unwrap();
        let mu = Measure::grid1d(0.0, 1.0, vec![2.0; 32]).unwrap();
        let prm = Params::new(1, 2.0, 0.5, 0.25).unwrap();
        let b = Backend::Kernel { kernel: Kernel::IntervalGreen };
        // G sigma = x(1-x)/2 exactly at midpoints; sigma norm is the midpoint rule of
        // (x(1-x)/2)^3 with exponent 1/3
        let h = 1.0 / 32.0;
        let mid: f64 = (0..32)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                (x * (1.0 - x) / 2.0).powi(3) * h
            })
            .sum::<f64>();
        let got = check_sigma(&sigma, &prm, &b).unwrap();
        assert!((got - mid.powf(1.0 / 3.0)).abs() < 1e-14, "{got}");
        // continuum value (1/140 / 8)^{1/3}
        assert!((got - (1.0f64 / 1120.0).powf(1.0 / 3.0)).abs() < 1e-3);
        let audit = implication_audit(&sigma, &mu, &prm, &b).unwrap();
        assert!(!audit.violation && audit.criteria.all_finite());
    }

    #[test]
    fn wolff_scaling_law() {
        let prm = Params::new(1, 1.5, 0.3, 0.5).unwrap();
        let sigma = Measure::grid1d(-1.0, 1.0, vec![0.5, 1.0, 2.0, 1.0, 0.5, 0.25]).unwrap();
        let base = check_sigma(&sigma, &prm, &Backend::Wolff).unwrap();
        let (p, q) = (prm.p, prm.q);
        let e = 1.0 / (p - 1.0) + (p - 1.0 - q) / ((1.0 + q) * (p - 1.0));
        for c in [0.1, 3.0, 40.0] {
            let got = check_sigma(&sigma.scaled(c), &prm, &Backend::Wolff).unwrap();
            assert!((got / (c.powf(e) * base) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_trend_levels() {
        let sigma = Measure::grid1d(0.0, 1.0, vec![1.0; 8]).unwrap();
        let mu = Measure::grid1d(0.0, 1.0, vec![1.0; 8]).unwrap();
        let prm = Params::new(1, 2.0, 0.5, 0.25).unwrap();
        let t = refinement_trend(&sigma, &mu, &prm, &Backend::Kernel { kernel: Kernel::IntervalGreen }, 3)
            .unwrap();
        assert_eq!(t.iter().map(|l| l.cells).collect::<Vec<_>>(), vec![8, 16, 32]);
    }

    #[test]
    fn backend_validation() {
        let prm = Params::new(3, 1.5, 0.25, 1.0).unwrap();
        assert!(Backend::Riesz.validate(&prm, 3).is_err());
        assert!(Backend::Wolff.validate(&prm, 2).is_err());
        let prm2 = Params::new(3, 2.0, 0.5, 1.0).unwrap();
        assert!(Backend::Riesz.validate(&prm2, 3).is_ok());
    }

    #[test]
    fn report_serializes_infinity() {
        let r = CriteriaReport { mode: Mode::Wolff, sigma_norm: f64::INFINITY, mu_energy: 1.0, cross_norm: 2.0 };
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains(r#""sigma_norm":"+inf""#));
        assert_eq!(serde_json::from_str::<CriteriaReport>(&s).unwrap(), r);
    }
}
