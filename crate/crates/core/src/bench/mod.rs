//! Benchmark harness: solver configurations, suite runs, summary tables and
//! performance profiles.

mod stats;

pub use stats::{profile, summarize, ProfileCurve, SummaryRow};

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bnb::{solve_lifted, solve_oa, BnbError, LiftedOptions, Limits, OaOptions, SolveResult};
use crate::model::{max_cone_violation, MicqpInstance, SolveStatus};
use crate::reform::{Reform, ReformError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown configuration `{0}`")]
    UnknownConfig(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Solve(#[from] BnbError),
    #[error(transparent)]
    Reform(#[from] ReformError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// Search algorithms, applicable to any (reformulated) instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Outer approximation with fixed-integer repair.
    Oa,
    /// Static `L^d_eps`, NLP-driven branching.
    LiftedBranch,
    /// Static `L^d_eps` plus separable cuts from an empty pool.
    LiftedCut,
    /// Separable cuts from `{-1, 1}` only.
    Cut,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Oa, Algorithm::LiftedBranch, Algorithm::LiftedCut, Algorithm::Cut];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Oa => "oa",
            Algorithm::LiftedBranch => "lifted-branch",
            Algorithm::LiftedCut => "lifted-cut",
            Algorithm::Cut => "cut",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| BenchError::UnknownAlgorithm(s.to_string()))
    }
}

/// Solver configurations, named after the algorithms they reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Config {
    /// Outer approximation on the original model.
    Oa,
    /// Static `L^d_eps` with branch-based refinement.
    LiftedBranch,
    /// Static `L^d_eps` plus separable cuts.
    LiftedCut,
    /// Cut-based search on the separable reformulation.
    SepLp,
    /// Cut-based search on the tower reformulation.
    TowerLp,
    /// Cut-based search on the tower reformulation with separable gadgets.
    TowerSepLp,
}

impl Config {
    pub const ALL: [Config; 6] = [
        Config::Oa,
        Config::LiftedBranch,
        Config::LiftedCut,
        Config::SepLp,
        Config::TowerLp,
        Config::TowerSepLp,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Config::Oa => "OA",
            Config::LiftedBranch => "LiftedLP-branch",
            Config::LiftedCut => "LiftedLP-cut",
            Config::SepLp => "SepLP",
            Config::TowerLp => "TowerLP",
            Config::TowerSepLp => "TowerSepLP",
        }
    }

    pub fn parts(&self) -> (Algorithm, Reform) {
        match self {
            Config::Oa => (Algorithm::Oa, Reform::None),
            Config::LiftedBranch => (Algorithm::LiftedBranch, Reform::None),
            Config::LiftedCut => (Algorithm::LiftedCut, Reform::None),
            Config::SepLp => (Algorithm::Cut, Reform::Sep),
            Config::TowerLp => (Algorithm::Cut, Reform::Tower),
            Config::TowerSepLp => (Algorithm::Cut, Reform::TowerSep),
        }
    }
}

impl std::str::FromStr for Config {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Config::ALL
            .iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .copied()
            .ok_or_else(|| BenchError::UnknownConfig(s.to_string()))
    }
}

/// One solve of one instance by one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub config: String,
    pub status: String,
    pub time_s: f64,
    pub nodes: usize,
    pub cuts: usize,
    pub lp_solves: usize,
    pub conic_solves: usize,
    /// Incumbent value in the instance's own sense; empty without incumbent.
    pub objective: Option<f64>,
    /// Appendix-B violation of the incumbent on the original model.
    pub max_violation: Option<f64>,
}

impl RunRecord {
    /// Optimality or infeasibility was proven.
    pub fn solved(&self) -> bool {
        self.status == SolveStatus::Optimal.as_str() || self.status == SolveStatus::Infeasible.as_str()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub time_limit: Option<Duration>,
    /// Quality of the static relaxation in the lifted configurations.
    pub eps: f64,
    pub trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            time_limit: Some(Duration::from_secs(60)),
            eps: 0.01,
            trace: false,
        }
    }
}

/// Applies `reform`, runs `algorithm` and maps the result back: `x` holds the
/// original variables and objective and violation are measured on `inst`.
/// Reformulation time counts toward the reported time.
pub fn run_algorithm(
    inst: &MicqpInstance,
    algorithm: Algorithm,
    reform: Reform,
    opts: &RunOptions,
) -> Result<SolveResult, BenchError> {
    let limits = Limits {
        time_limit: opts.time_limit,
        trace: opts.trace,
        ..Limits::default()
    };
    let start = Instant::now();
    let r = reform.apply(inst)?;
    let mut res = match algorithm {
        Algorithm::Oa => solve_oa(&r.inst, &OaOptions { initial: None, repair: true }, &limits)?,
        Algorithm::LiftedBranch => solve_lifted(&r.inst, &LiftedOptions::lifted_branch(opts.eps), &limits)?,
        Algorithm::LiftedCut => solve_lifted(&r.inst, &LiftedOptions::lifted_cut(opts.eps), &limits)?,
        Algorithm::Cut => solve_lifted(&r.inst, &LiftedOptions::cut_only(), &limits)?,
    };
    if reform != Reform::None {
        if let Some(x) = res.x.take() {
            let x = r.back_map(&x);
            res.objective = inst.objective_value(&x);
            res.max_violation = max_cone_violation(inst, &x);
            res.x = Some(x);
        }
    }
    res.stats.time_s = start.elapsed().as_secs_f64();
    Ok(res)
}

pub fn run_config(inst: &MicqpInstance, config: Config, opts: &RunOptions) -> Result<SolveResult, BenchError> {
    let (algorithm, reform) = config.parts();
    run_algorithm(inst, algorithm, reform, opts)
}

pub fn record(instance: &str, config: Config, inst: &MicqpInstance, res: &SolveResult) -> RunRecord {
    RunRecord {
        instance: instance.to_string(),
        config: config.id().to_string(),
        status: res.status.as_str().to_string(),
        time_s: res.stats.time_s,
        nodes: res.stats.nodes,
        cuts: res.stats.cuts,
        lp_solves: res.stats.lp_solves,
        conic_solves: res.stats.conic_solves,
        objective: res.x.as_ref().map(|_| inst.reported_objective(res.objective)),
        max_violation: res.x.as_ref().map(|_| res.max_violation),
    }
}

fn run_one(name: &str, inst: &MicqpInstance, config: Config, opts: &RunOptions) -> RunRecord {
    let start = Instant::now();
    match catch_unwind(AssertUnwindSafe(|| run_config(inst, config, opts))) {
        Ok(Ok(res)) => record(name, config, inst, &res),
        _ => RunRecord {
            instance: name.to_string(),
            config: config.id().to_string(),
            status: "Error".to_string(),
            time_s: start.elapsed().as_secs_f64(),
            nodes: 0,
            cuts: 0,
            lp_solves: 0,
            conic_solves: 0,
            objective: None,
            max_violation: None,
        },
    }
}

/// One record per `(instance, config)` pair, ordered by instance then config.
/// With `threads > 1` records are solved concurrently, each solve single-threaded.
pub fn run_suite(
    instances: &[(String, MicqpInstance)],
    configs: &[Config],
    opts: &RunOptions,
    threads: usize,
) -> Result<Vec<RunRecord>, BenchError> {
    let jobs: Vec<(usize, Config)> = (0..instances.len())
        .flat_map(|i| configs.iter().map(move |&c| (i, c)))
        .collect();
    let solve = |&(i, c): &(usize, Config)| run_one(&instances[i].0, &instances[i].1, c, opts);
    if threads <= 1 {
        return Ok(jobs.iter().map(solve).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(solve).collect()))
}

pub fn write_records(path: impl AsRef<Path>, records: &[RunRecord]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<Vec<RunRecord>, _>>()?)
}

pub fn write_summary(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ProfilePoint {
    config: String,
    tau: f64,
    rho: f64,
}

pub fn write_profile(path: impl AsRef<Path>, curves: &[ProfileCurve]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for c in curves {
        for &(tau, rho) in &c.points {
            w.serialize(ProfilePoint {
                config: c.config.clone(),
                tau,
                rho,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<Vec<ProfileCurve>, BenchError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut curves: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in r.deserialize::<ProfilePoint>() {
        let p = p?;
        curves.entry(p.config).or_default().push((p.tau, p.rho));
    }
    Ok(curves.into_iter().map(|(config, points)| ProfileCurve { config, points }).collect())
}

/// Per-status record counts for each configuration.
pub fn status_counts(records: &[RunRecord]) -> BTreeMap<String, BTreeMap<String, usize>> {
    let mut out: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    for r in records {
        *out.entry(r.config.clone()).or_default().entry(r.status.clone()).or_default() += 1;
    }
    out
}
