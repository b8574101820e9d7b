//! Command line front end driven by a JSON experiment config.
//!
//! Exit codes: 0 success, 1 failed verification contract, 2 infinite
//! criterion, 3 no convergence, 64 configuration error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::criteria::{implication_audit, refinement_trend, AuditReport, Backend, RefinementLevel};
use crate::error::{Error, Result};
use crate::kernels::{diagnose, DiagnosticsConfig, Kernel};
use crate::measure::{Measure, Params};
use crate::solver::{
    lower_bound_ratio, picard_solve_with_probes, uniqueness_probe, IterationConfig, SolveReport,
    UniquenessReport,
};
use crate::verify::{refinement_study, solve_and_verify, StudyReport, StudySpec, VerifyReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INFINITE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_CONFIG: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "nlpot", version, about = "Potentials, existence criteria and monotone iteration for sublinear equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// RNG seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Evaluate the existence criteria and write criteria.json.
    Check,
    /// Run the monotone iteration and write solve.json and iterations.csv.
    Solve,
    /// Estimate kernel constants and write kernel.json.
    KernelTest,
    /// Run the 1D verification study and write verify.json.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Wolff,
    Riesz,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    pub mode: ModeSpec,
    #[serde(default)]
    pub kernel: Option<Kernel>,
    /// Matrix kernel file `{"points": ..., "matrix": ...}`, relative to the config.
    #[serde(default)]
    pub kernel_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    File { file: PathBuf },
    Inline(Measure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub params: Option<ParamSpec>,
    #[serde(default)]
    pub backend: Option<BackendSpec>,
    #[serde(default)]
    pub sigma: Option<MeasureSpec>,
    #[serde(default)]
    pub mu: Option<MeasureSpec>,
    #[serde(default)]
    pub iteration: IterationConfig,
    /// Extra points where the solution is reported.
    #[serde(default)]
    pub probes: Vec<Vec<f64>>,
    /// Random seeds for the uniqueness probe after `solve` (0 skips it).
    #[serde(default)]
    pub uniqueness_seeds: usize,
    /// Number of grid refinement levels reported by `check`.
    #[serde(default = "default_levels")]
    pub refinement_levels: usize,
    #[serde(default)]
    pub kernel_test: DiagnosticsConfig,
    #[serde(default)]
    pub verify: StudySpec,
    /// Also run the near-linear manufactured case in `verify`.
    #[serde(default = "default_true")]
    pub manufactured: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_levels() -> usize {
    3
}

fn default_true() -> bool {
    true
}

/// A config with everything resolved.
pub struct Loaded {
    pub cfg: ExperimentConfig,
    base: PathBuf,
}

impl Loaded {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_text(&text, base)
    }

    pub fn from_text(text: &str, base: PathBuf) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(Self { cfg, base })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn params(&self) -> Result<Params> {
        let p = self.cfg.params.ok_or_else(|| Error::Config("missing params".into()))?;
        Params::new(p.n, p.p, p.q, p.alpha).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kernel(&self) -> Result<Kernel> {
        let b = self.cfg.backend.as_ref().ok_or_else(|| Error::Config("missing backend".into()))?;
        let k = match (&b.kernel, &b.kernel_file) {
            (Some(k), None) => k.clone(),
            (None, Some(f)) => {
                let path = self.resolve(f);
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                Kernel::from_json(&text).map_err(|e| Error::Config(e.to_string()))?
            }
            _ => return Err(Error::Config("give exactly one of kernel and kernel_file".into())),
        };
        k.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(k)
    }

    pub fn backend(&self) -> Result<Backend> {
        let b = self.cfg.backend.as_ref().ok_or_else(|| Error::Config("missing backend".into()))?;
        Ok(match b.mode {
            ModeSpec::Wolff => Backend::Wolff,
            ModeSpec::Riesz => Backend::Riesz,
            ModeSpec::Kernel => Backend::Kernel { kernel: self.kernel()? },
        })
    }

    fn measure(&self, spec: &Option<MeasureSpec>, name: &str) -> Result<Measure> {
        match spec {
            None => Err(Error::Config(format!("missing {name}"))),
            Some(MeasureSpec::Inline(m)) => Ok(m.clone()),
            Some(MeasureSpec::File { file }) => {
                let path = self.resolve(file);
                let text = fs::read_to_string(&path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{name}: {e}")))
            }
        }
    }

    pub fn sigma(&self) -> Result<Measure> {
        self.measure(&self.cfg.sigma, "sigma")
    }

    pub fn mu(&self) -> Result<Measure> {
        self.measure(&self.cfg.mu, "mu")
    }

    /// Validates the data needed by `cmd`, turning every problem into a config error.
    pub fn check_for(&self, cmd: Command) -> Result<()> {
        let as_config = |e: Error| Error::Config(e.to_string());
        match cmd {
            Command::Check | Command::Solve => {
                let prm = self.params()?;
                let b = self.backend()?;
                b.validate(&prm, self.sigma()?.dim()).map_err(as_config)?;
                b.validate(&prm, self.mu()?.dim()).map_err(as_config)?;
                if cmd == Command::Solve {
                    self.cfg.iteration.validate().map_err(as_config)?;
                }
                Ok(())
            }
            Command::KernelTest => self.kernel().map(|_| ()),
            Command::Verify => {
                let prm = self.params()?;
                if prm.n != 1 || prm.p != 2.0 {
                    return Err(Error::Config("verify needs n = 1 and p = 2".into()));
                }
                let v = &self.cfg.verify;
                if v.meshes.iter().any(|m| *m < 3) || v.energy_mesh < 3 {
                    return Err(Error::Config("verify meshes need at least 3 cells".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub audit: AuditReport,
    pub refinement: Vec<RefinementLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    pub report: SolveReport,
    #[serde(with = "crate::infser::opt")]
    pub lower_bound_ratio: Option<f64>,
    pub uniqueness: Option<UniquenessReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub study: StudyReport,
    pub manufactured: Option<VerifyReport>,
    pub manufactured_ok: Option<bool>,
    pub passed: bool,
}

fn write(dir: &Path, name: &str, content: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), content)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_check(l: &Loaded, out: &Path) -> Result<i32> {
    let (prm, b, sigma, mu) = (l.params()?, l.backend()?, l.sigma()?, l.mu()?);
    let audit = implication_audit(&sigma, &mu, &prm, &b)?;
    let refinement = if matches!(sigma, Measure::Grid1d { .. }) || matches!(mu, Measure::Grid1d { .. }) {
        refinement_trend(&sigma, &mu, &prm, &b, l.cfg.refinement_levels)?
    } else {
        Vec::new()
    };
    let finite = audit.criteria.all_finite();
    println!("{}", criteria_table(&audit));
    write(out, "criteria.json", &to_json(&CheckOutput { audit, refinement })?)?;
    Ok(if finite { EXIT_OK } else { EXIT_INFINITE })
}

fn criteria_table(a: &AuditReport) -> String {
    let c = &a.criteria;
    let fmt = |v: f64| if v.is_finite() { format!("{v:.6e}") } else { "+inf".to_string() };
    format!(
        "mode        {:?}\nsigma_norm  {}\nmu_energy   {}\ncross_norm  {}\nviolation   {}",
        c.mode,
        fmt(c.sigma_norm),
        fmt(c.mu_energy),
        fmt(c.cross_norm),
        a.violation
    )
}

pub fn cmd_solve(l: &Loaded, out: &Path, seed: u64) -> Result<i32> {
    let (prm, b, sigma, mu) = (l.params()?, l.backend()?, l.sigma()?, l.mu()?);
    let (report, code) =
        match picard_solve_with_probes(&sigma, &mu, &prm, &b, &l.cfg.iteration, &l.cfg.probes) {
            Ok(r) => (r, EXIT_OK),
            Err(Error::NotConverged(r)) => (*r, EXIT_NOT_CONVERGED),
            Err(e) => return Err(e),
        };
    let (lower, uniqueness) = if code == EXIT_OK {
        let lower = lower_bound_ratio(&report, &sigma, &prm, &b)?;
        let uniq = if l.cfg.uniqueness_seeds > 0 {
            Some(uniqueness_probe(&sigma, &mu, &prm, &b, &l.cfg.iteration, l.cfg.uniqueness_seeds, seed)?)
        } else {
            None
        };
        (Some(lower), uniq)
    } else {
        (None, None)
    };
    write(out, "iterations.csv", &report.to_csv())?;
    write(out, "solve.json", &to_json(&SolveOutput { report, lower_bound_ratio: lower, uniqueness })?)?;
    Ok(code)
}

pub fn cmd_kernel_test(l: &Loaded, out: &Path, seed: u64) -> Result<i32> {
    let k = l.kernel()?;
    let d = diagnose(&k, &l.cfg.kernel_test, seed)?;
    write(out, "kernel.json", &to_json(&d)?)?;
    Ok(EXIT_OK)
}

pub fn cmd_verify(l: &Loaded, out: &Path) -> Result<i32> {
    let prm = l.params()?;
    let study = refinement_study(&l.cfg.verify, prm.q)?;
    let (manufactured, manufactured_ok) = if l.cfg.manufactured {
        let m = 32;
        let sigma = Measure::grid1d(0.0, 1.0, vec![1e-12; m])?;
        let mu = Measure::grid1d(0.0, 1.0, vec![2.0; m])?;
        let r = solve_and_verify(&sigma, &mu, prm.q, 1e-14)?;
        let ok = (r.energy_lhs - 1.0 / 3.0).abs() <= 1e-10 && (r.energy_rhs - 1.0 / 3.0).abs() <= 1e-10;
        (Some(r), Some(ok))
    } else {
        (None, None)
    };
    let passed = study.passed() && manufactured_ok.unwrap_or(true);
    write(out, "verify.json", &to_json(&VerifyOutput { study, manufactured, manufactured_ok, passed })?)?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILED })
}

/// Runs one command and maps the outcome to an exit code.
pub fn run(args: &Cli) -> i32 {
    let Some(path) = &args.config else {
        eprintln!("error: --config is required");
        return EXIT_CONFIG;
    };
    let loaded = match Loaded::from_path(path).and_then(|l| l.check_for(args.command).map(|_| l)) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.unwrap_or(loaded.cfg.seed);
    let result = match args.command {
        Command::Check => cmd_check(&loaded, &args.out),
        Command::Solve => cmd_solve(&loaded, &args.out, seed),
        Command::KernelTest => cmd_kernel_test(&loaded, &args.out, seed),
        Command::Verify => cmd_verify(&loaded, &args.out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NotConverged(_) => EXIT_NOT_CONVERGED,
                Error::Config(_) | Error::InvalidParams(_) | Error::InvalidMeasure(_) => EXIT_CONFIG,
                _ => EXIT_FAILED,
            }
        }
    }
}
