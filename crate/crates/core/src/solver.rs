//! Monotone Picard iteration `u_{j+1} = P(u_j^q dsigma) + P mu` on the sigma-nodes,
//! with an audit of monotonicity, the a priori norm bound and the fixed-point
//! residual, plus minimality and uniqueness probes.
//!
//! The measure `u^q dsigma` is formed cell by cell: each cell of sigma (atom,
//! smeared atom or grid cell) is reweighted by the weighted mean of `u^q` over
//! its nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::Backend;
use crate::error::{Error, Result};
use crate::measure::{lp_norm, EvaluationSet, Measure, NodeTag, Params};
use crate::potentials::riesz;
use crate::kernels::g_potential;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedMode {
    /// `u_0 = P mu`, the seed whose limit is the minimal solution.
    #[serde(rename = "paper", alias = "potential")]
    Potential,
    Zero,
    Custom { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IterationConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: SeedMode,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000, seed: SeedMode::Potential }
    }
}

impl IterationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParams("need tol > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
    /// A custom seed that is neither a sub- nor a supersolution.
    Unchecked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub index: usize,
    /// `||u_j||` in `L^{1+q}(dsigma)`
    pub norm: f64,
    /// `sup |u_j - u_{j-1}|` (0 for the seed)
    pub sup_change: f64,
    /// `sup |u_j - T(u_j) - P mu|`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeValue {
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub points: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub probes: Vec<ProbeValue>,
    pub iterations: usize,
    pub rows: Vec<IterationRow>,
    pub direction: Direction,
    pub monotonicity_violations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Empirical constant of `||T(u)|| <= c ||u||^{q/(p-1)}` over the iterates.
    pub c_star: f64,
    /// `||P mu||` in `L^{1+q}(dsigma)`
    pub pmu_norm: f64,
    /// `c*^{(p-1)/(p-1-q)} + (p-1)/(p-1-q) ||P mu||`
    pub apriori_bound: f64,
    /// Whether every iterate norm stays below the bound; `None` for seeds the
    /// bound does not cover.
    pub apriori_bound_ok: Option<bool>,
}

impl SolveReport {
    pub fn sup_norm(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// CSV trace: header row then one row per iterate.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,norm,sup_change,residual\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:e},{:e},{:e}\n", r.index, r.norm, r.sup_change, r.residual));
        }
        s
    }
}

/// The map `u -> P(u^q dsigma)` on the sigma-nodes.
pub struct FixedPointMap<'a> {
    sigma: &'a Measure,
    prm: Params,
    backend: &'a Backend,
    nodes: EvaluationSet,
    /// `cells[c][i]`: potential of the unit-scaled cell `c` at node `i`, for
    /// backends that are linear in the measure.
    linear: Option<Vec<Vec<f64>>>,
    pmu: Vec<f64>,
}

impl<'a> FixedPointMap<'a> {
    pub fn new(sigma: &'a Measure, mu: &Measure, prm: &Params, backend: &'a Backend) -> Result<Self> {
        backend.validate(prm, sigma.dim())?;
        backend.validate(prm, mu.dim())?;
        let nodes = sigma.nodes(NodeTag::Sigma);
        let pmu = backend.potential(mu, prm, &nodes.points)?;
        let linear = match backend {
            Backend::Wolff => None,
            _ => Some(
                (0..sigma.num_cells())
                    .into_par_iter()
                    .map(|c| {
                        let cell = sigma.cell(c);
                        nodes
                            .points
                            .iter()
                            .map(|x| linear_potential(backend, &cell, prm, x))
                            .collect::<Result<Vec<f64>>>()
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        Ok(Self { sigma, prm: *prm, backend, nodes, linear, pmu })
    }

    pub fn nodes(&self) -> &EvaluationSet {
        &self.nodes
    }

    pub fn pmu(&self) -> &[f64] {
        &self.pmu
    }

    /// Cell factors `mean(u^q)` over each sigma cell.
    fn factors(&self, u: &[f64]) -> Vec<f64> {
        let uq: Vec<f64> = u.iter().map(|v| v.max(0.0).powf(self.prm.q)).collect();
        self.nodes.cell_averages(&uq, self.sigma.num_cells())
    }

    /// `T(u) = P(u^q dsigma)` at the sigma-nodes.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let f = self.factors(u);
        match &self.linear {
            Some(cells) => {
                let mut out = vec![0.0; self.nodes.len()];
                for (fc, col) in f.iter().zip(cells) {
                    if *fc == 0.0 {
                        continue;
                    }
                    for (o, a) in out.iter_mut().zip(col) {
                        *o += fc * a;
                    }
                }
                Ok(out)
            }
            None => self.backend.potential(&self.sigma.reweighted(&f), &self.prm, &self.nodes.points),
        }
    }

    /// `T(u) + P mu` at arbitrary points.
    pub fn extend(&self, u: &[f64], mu: &Measure, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let weighted = self.sigma.reweighted(&self.factors(u));
        let a = self.backend.potential(&weighted, &self.prm, points)?;
        let b = self.backend.potential(mu, &self.prm, points)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }
}

fn linear_potential(backend: &Backend, cell: &Measure, prm: &Params, x: &[f64]) -> Result<f64> {
    match backend {
        Backend::Riesz => riesz(cell, 2.0 * prm.alpha, x),
        Backend::Kernel { kernel } => g_potential(kernel, cell, x),
        Backend::Wolff => unreachable!("Wolff potentials are not linear in the measure"),
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs the iteration until `sup |u_{j+1} - u_j| <= tol (1 + sup |u_j|)`.
pub fn picard_solve(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
) -> Result<SolveReport> {
    picard_solve_with_probes(sigma, mu, prm, backend, cfg, &[])
}

pub fn picard_solve_with_probes(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
    probes: &[Vec<f64>],
) -> Result<SolveReport> {
    cfg.validate()?;
    let map = FixedPointMap::new(sigma, mu, prm, backend)?;
    solve_map(&map, mu, prm, backend, cfg, probes)
}

pub fn solve_map(
    map: &FixedPointMap,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
    probes: &[Vec<f64>],
) -> Result<SolveReport> {
    let nodes = map.nodes();
    if let Some(i) = map.pmu().iter().position(|v| !v.is_finite()) {
        return Err(Error::InfiniteSeed { node: i });
    }
    let mut u = match &cfg.seed {
        SeedMode::Potential => map.pmu().to_vec(),
        SeedMode::Zero => vec![0.0; nodes.len()],
        SeedMode::Custom { values } => {
            if values.len() != nodes.len() {
                return Err(Error::MismatchedNodes(format!(
                    "custom seed has {} values for {} sigma-nodes",
                    values.len(),
                    nodes.len()
                )));
            }
            if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InfiniteSeed { node: i });
            }
            values.clone()
        }
    };
    let norm = |v: &[f64]| lp_norm(v, 1.0 + prm.q, nodes);
    let p_eff = backend.effective_p(prm);
    let theta = prm.q / (p_eff - 1.0);

    let mut rows = Vec::new();
    let mut direction = None;
    let mut violations = 0;
    let mut c_star: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut residual;
    let mut iterations = 0;
    loop {
        let tu = map.apply(&u)?;
        if let Some(i) = tu.iter().position(|v| !v.is_finite()) {
            return Err(Error::InfiniteSeed { node: i });
        }
        let next: Vec<f64> = tu.iter().zip(map.pmu()).map(|(a, b)| a + b).collect();
        let dir = *direction.get_or_insert_with(|| match cfg.seed {
            SeedMode::Potential | SeedMode::Zero => Direction::Nondecreasing,
            SeedMode::Custom { .. } => {
                if next.iter().zip(&u).all(|(n, o)| n >= o) {
                    Direction::Nondecreasing
                } else if next.iter().zip(&u).all(|(n, o)| n <= o) {
                    Direction::Nonincreasing
                } else {
                    Direction::Unchecked
                }
            }
        });
        residual = sup_diff(&next, &u);
        let nu = norm(&u)?;
        if nu > 0.0 {
            c_star = c_star.max(norm(&tu)? / nu.powf(theta));
        }
        rows.push(IterationRow {
            index: iterations,
            norm: nu,
            sup_change: prev.as_ref().map_or(0.0, |p| sup_diff(&u, p)),
            residual,
        });
        let scale = 1.0 + sup(&u);
        if residual <= cfg.tol * scale {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        let slack = cfg.tol * scale;
        violations += match dir {
            Direction::Nondecreasing => next.iter().zip(&u).filter(|(n, o)| **n < **o - slack).count(),
            Direction::Nonincreasing => next.iter().zip(&u).filter(|(n, o)| **n > **o + slack).count(),
            Direction::Unchecked => 0,
        };
        prev = Some(std::mem::replace(&mut u, next));
        iterations += 1;
    }

    let pmu_norm = norm(map.pmu())?;
    let r = (p_eff - 1.0) / (p_eff - 1.0 - prm.q);
    let apriori_bound = c_star.powf(r) + r * pmu_norm;
    let apriori_bound_ok = match cfg.seed {
        SeedMode::Potential | SeedMode::Zero => {
            Some(rows.iter().all(|row| row.norm <= apriori_bound * (1.0 + 1e-12)))
        }
        SeedMode::Custom { .. } => None,
    };
    let probe_values = if probes.is_empty() {
        Vec::new()
    } else {
        let v = map.extend(&u, mu, probes)?;
        probes.iter().cloned().zip(v).map(|(point, value)| ProbeValue { point, value }).collect()
    };
    let report = SolveReport {
        points: nodes.points.clone(),
        u,
        probes: probe_values,
        iterations,
        rows,
        direction: direction.unwrap_or(Direction::Nondecreasing),
        monotonicity_violations: violations,
        residual,
        converged,
        c_star,
        pmu_norm,
        apriori_bound,
        apriori_bound_ok,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::NotConverged(Box::new(report)))
    }
}

/// `min over sigma-nodes of u / (P sigma)^e`, skipping nodes where `P sigma`
/// vanishes or is infinite; `e = (p-1)/(p-1-q)`.
pub fn lower_bound_ratio(report: &SolveReport, sigma: &Measure, prm: &Params, backend: &Backend) -> Result<f64> {
    let nodes = sigma.nodes(NodeTag::Sigma);
    if nodes.len() != report.u.len() {
        return Err(Error::MismatchedNodes("report does not belong to this sigma".into()));
    }
    let ps = backend.potential(sigma, prm, &nodes.points)?;
    let e = backend.lower_bound_exponent(prm);
    Ok(report
        .u
        .iter()
        .zip(&ps)
        .zip(&nodes.weights)
        .filter(|((_, p), w)| **p > 0.0 && p.is_finite() && **w > 0.0)
        .map(|((u, p), _)| u / p.powf(e))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// `max_i (u_min - u_seed)_i`; nonpositive up to tolerance when the potential-seed
    /// limit lies below this limit.
    pub max_excess: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalityReport {
    pub seeds: Vec<SeedOutcome>,
    pub minimal: bool,
}

fn run_from(
    map: &FixedPointMap,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
    seed: Vec<f64>,
) -> Result<(bool, SolveReport)> {
    let c = IterationConfig { seed: SeedMode::Custom { values: seed }, ..cfg.clone() };
    match solve_map(map, mu, prm, backend, &c, &[]) {
        Ok(r) => Ok((true, r)),
        Err(Error::NotConverged(r)) => Ok((false, *r)),
        Err(e) => Err(e),
    }
}

/// Iterates from each alternative seed and checks that the potential-seed limit lies
/// node-wise below every limit reached (within `tol` times the solution scale).
pub fn minimality_probe(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
    alt_seeds: &[Vec<f64>],
) -> Result<MinimalityReport> {
    let map = FixedPointMap::new(sigma, mu, prm, backend)?;
    let base_cfg = IterationConfig { seed: SeedMode::Potential, ..cfg.clone() };
    let base = solve_map(&map, mu, prm, backend, &base_cfg, &[])?;
    let slack = 10.0 * cfg.tol * (1.0 + base.sup_norm());
    let mut seeds = Vec::with_capacity(alt_seeds.len());
    let mut minimal = true;
    for s in alt_seeds {
        let (ok, r) = run_from(&map, mu, prm, backend, cfg, s.clone())?;
        let max_excess = base.u.iter().zip(&r.u).fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
        if ok && max_excess > slack {
            minimal = false;
        }
        seeds.push(SeedOutcome {
            converged: ok,
            iterations: r.iterations,
            max_excess,
            sup_distance: sup_diff(&base.u, &r.u),
        });
    }
    Ok(MinimalityReport { seeds, minimal })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub seeds: usize,
    pub non_converged: usize,
    /// Largest sup-distance between any two converged limits (the potential-seed
    /// limit included).
    pub max_pairwise_distance: f64,
}

/// Iterates from `n_seeds` random positive seeds, alternately below and above
/// the potential-seed solution, and compares all limits.
pub fn uniqueness_probe(
    sigma: &Measure,
    mu: &Measure,
    prm: &Params,
    backend: &Backend,
    cfg: &IterationConfig,
    n_seeds: usize,
    seed: u64,
) -> Result<UniquenessReport> {
    let map = FixedPointMap::new(sigma, mu, prm, backend)?;
    let base_cfg = IterationConfig { seed: SeedMode::Potential, ..cfg.clone() };
    let base = solve_map(&map, mu, prm, backend, &base_cfg, &[])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut limits = vec![base.u.clone()];
    let mut non_converged = 0;
    for k in 0..n_seeds {
        let s: Vec<f64> = base
            .u
            .iter()
            .map(|v| if k % 2 == 0 { v * rng.gen_range(0.01..1.0) } else { v * rng.gen_range(1.0..100.0) })
            .collect();
        let (ok, r) = run_from(&map, mu, prm, backend, cfg, s)?;
        if ok {
            limits.push(r.u);
        } else {
            non_converged += 1;
        }
    }
    let mut max_d: f64 = 0.0;
    for i in 0..limits.len() {
        for j in 0..i {
            max_d = max_d.max(sup_diff(&limits[i], &limits[j]));
        }
    }
    Ok(UniquenessReport { seeds: n_seeds, non_converged, max_pairwise_distance: max_d })
}
