//! Seeded instance generators: cardinality-constrained portfolio models
//! (classical, shortfall, robust), the integer-free ball `F^n`, and small
//! random bounded MICQPs for oracle testing.

mod normal;
mod random;

pub use normal::{erfc, inverse_phi, phi, phi_density};
pub use random::gen_random_micqp;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConeBlock, MicqpInstance};

#[derive(Debug, Error, PartialEq)]
pub enum PortfolioError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Classical,
    Shortfall,
    Robust,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Classical => "classical",
            Family::Shortfall => "shortfall",
            Family::Robust => "robust",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = PortfolioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classical" => Ok(Family::Classical),
            "shortfall" => Ok(Family::Shortfall),
            "robust" => Ok(Family::Robust),
            other => Err(PortfolioError::Invalid(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortfallParams {
    pub eta: [f64; 2],
    pub w_low: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustParams {
    pub alpha: f64,
    /// Square-root factor of the return uncertainty set, `n x n`.
    pub rhalf: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioParams {
    pub n: usize,
    pub k_card: usize,
    pub sigma: f64,
    pub abar: Vec<f64>,
    /// Square-root factor of the covariance, `n x n`.
    pub qhalf: Vec<Vec<f64>>,
    pub family: Family,
    pub shortfall: ShortfallParams,
    pub robust: RobustParams,
    pub seed: u64,
}

impl PortfolioParams {
    pub fn validate(&self) -> Result<(), PortfolioError> {
        let n = self.n;
        let bad = |m: &str| Err(PortfolioError::Invalid(m.to_string()));
        if n == 0 {
            return bad("n must be positive");
        }
        if self.k_card == 0 || self.k_card >= n {
            return bad("cardinality cap must satisfy 1 <= K < n");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if self.abar.len() != n {
            return bad("abar must have n entries");
        }
        let square = |m: &[Vec<f64>]| m.len() == n && m.iter().all(|r| r.len() == n);
        if !square(&self.qhalf) {
            return bad("qhalf must be n x n");
        }
        if self.family == Family::Shortfall && self.shortfall.eta.iter().any(|&e| !(e > 0.5 && e < 1.0)) {
            return bad("eta must lie in (0.5, 1)");
        }
        if self.family == Family::Robust && (!square(&self.robust.rhalf) || !(self.robust.alpha >= 0.0)) {
            return bad("robust parameters need alpha >= 0 and an n x n factor");
        }
        Ok(())
    }

    /// Identity covariance factor with equal returns `abar`.
    pub fn identity(n: usize, k_card: usize, sigma: f64, abar: Vec<f64>) -> Self {
        let eye = identity_matrix(n);
        Self {
            n,
            k_card,
            sigma,
            abar,
            qhalf: eye.clone(),
            family: Family::Classical,
            shortfall: ShortfallParams {
                eta: [0.95, 0.97],
                w_low: [0.0, 0.0],
            },
            robust: RobustParams { alpha: 1.0, rhalf: eye },
            seed: 0,
        }
    }
}

fn identity_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect()
}

/// Pads each row of `m` with zeros to `width` columns, placing it at `offset`.
fn embed(m: &[Vec<f64>], scale: f64, offset: usize, width: usize) -> Vec<Vec<f64>> {
    m.iter()
        .map(|r| {
            let mut row = vec![0.0; width];
            for (j, v) in r.iter().enumerate() {
                row[offset + j] = scale * v;
            }
            row
        })
        .collect()
}

/// Variables `x_0..x_{n-1}`, then binaries `z_0..z_{n-1}`, then `extra` free columns.
/// Adds the budget, linking and cardinality rows.
fn skeleton(p: &PortfolioParams, extra: usize) -> MicqpInstance {
    let n = p.n;
    let width = 2 * n + extra;
    let mut inst = MicqpInstance::new(width);
    for j in 0..n {
        inst.lb[j] = 0.0;
        inst.ub[j] = 1.0;
        inst.lb[n + j] = 0.0;
        inst.ub[n + j] = 1.0;
        inst.int_vars.push(n + j);
    }
    let mut budget = vec![0.0; width];
    budget[..n].fill(1.0);
    inst.add_equality(budget, 1.0);
    for j in 0..n {
        let mut row = vec![0.0; width];
        row[j] = 1.0;
        row[n + j] = -1.0;
        inst.add_row(row, 0.0);
    }
    let mut card = vec![0.0; width];
    card[n..2 * n].fill(1.0);
    inst.add_row(card, p.k_card as f64);
    inst
}

fn variance_cone(p: &PortfolioParams, width: usize) -> ConeBlock {
    ConeBlock::new(embed(&p.qhalf, 1.0, 0, width), vec![0.0; p.n], vec![0.0; width], p.sigma)
}

/// `max abar.x` s.t. `||Q^{1/2} x|| <= sigma`, `sum x = 1`, `x_j <= z_j`, `sum z <= K`.
pub fn gen_classical(p: &PortfolioParams) -> Result<MicqpInstance, PortfolioError> {
    p.validate()?;
    let mut inst = skeleton(p, 0);
    inst.objective[..p.n].copy_from_slice(&p.abar);
    inst.cones.push(variance_cone(p, 2 * p.n));
    Ok(inst)
}

/// Classical model with the variance cone replaced by the two shortfall cones
/// `Phi^{-1}(eta_i) ||Q^{1/2} x|| <= abar.x - W_i`.
pub fn gen_shortfall(p: &PortfolioParams) -> Result<MicqpInstance, PortfolioError> {
    p.validate()?;
    for &e in &p.shortfall.eta {
        if !(e > 0.5 && e < 1.0) {
            return Err(PortfolioError::Invalid("eta must lie in (0.5, 1)".into()));
        }
    }
    let n = p.n;
    let mut inst = skeleton(p, 0);
    inst.objective[..n].copy_from_slice(&p.abar);
    for i in 0..2 {
        let mut radius = vec![0.0; 2 * n];
        radius[..n].copy_from_slice(&p.abar);
        inst.cones.push(ConeBlock::new(
            embed(&p.qhalf, inverse_phi(p.shortfall.eta[i]), 0, 2 * n),
            vec![0.0; n],
            radius,
            -p.shortfall.w_low[i],
        ));
    }
    Ok(inst)
}

/// Classical model with objective `max t` and `alpha ||R^{1/2} x|| <= abar.x - t`.
pub fn gen_robust(p: &PortfolioParams) -> Result<MicqpInstance, PortfolioError> {
    p.validate()?;
    if !square_ok(&p.robust.rhalf, p.n) || !(p.robust.alpha >= 0.0) {
        return Err(PortfolioError::Invalid("robust parameters need alpha >= 0 and an n x n factor".into()));
    }
    let n = p.n;
    let width = 2 * n + 1;
    let t = 2 * n;
    let mut inst = skeleton(p, 1);
    inst.objective[t] = 1.0;
    inst.cones.push(variance_cone(p, width));
    let mut radius = vec![0.0; width];
    radius[..n].copy_from_slice(&p.abar);
    radius[t] = -1.0;
    inst.cones.push(ConeBlock::new(
        embed(&p.robust.rhalf, p.robust.alpha, 0, width),
        vec![0.0; n],
        radius,
        0.0,
    ));
    Ok(inst)
}

fn square_ok(m: &[Vec<f64>], n: usize) -> bool {
    m.len() == n && m.iter().all(|r| r.len() == n)
}

pub fn generate(p: &PortfolioParams) -> Result<MicqpInstance, PortfolioError> {
    match p.family {
        Family::Classical => gen_classical(p),
        Family::Shortfall => gen_shortfall(p),
        Family::Robust => gen_robust(p),
    }
}

/// `F^n = { x in Z^n : sum_j (x_j - 1/2)^2 <= (n - 1)/4 }` as a feasibility problem.
pub fn gen_fball(n: usize) -> Result<MicqpInstance, PortfolioError> {
    if n < 2 {
        return Err(PortfolioError::Invalid("the ball needs n >= 2".into()));
    }
    let mut inst = MicqpInstance::new(n);
    inst.int_vars = (0..n).collect();
    inst.cones.push(ConeBlock::new(
        identity_matrix(n),
        vec![-0.5; n],
        vec![0.0; n],
        ((n as f64 - 1.0) / 4.0).sqrt(),
    ));
    Ok(inst)
}

/// Distribution parameters of the random portfolio suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub abar_range: (f64, f64),
    /// Target mean of the per-asset volatilities `||Q^{1/2} e_j||`.
    pub mean_vol: f64,
    pub sigma: f64,
    pub max_card: usize,
    pub eta: [f64; 2],
    /// `W_i = w_frac_i * min_j abar_j`.
    pub w_frac: [f64; 2],
    pub alpha: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            abar_range: (0.9, 1.3),
            mean_vol: 0.2,
            sigma: 0.2,
            max_card: 10,
            eta: [0.95, 0.97],
            w_frac: [0.9, 0.7],
            alpha: 1.0,
        }
    }
}

/// Parameters of instance `index` of a seeded suite. The draw does not depend
/// on the family, so the three families share data at equal `(n, index, seed)`.
pub fn random_params(family: Family, n: usize, index: u64, seed: u64, opts: &SuiteOptions) -> PortfolioParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let abar: Vec<f64> = (0..n).map(|_| rng.gen_range(opts.abar_range.0..=opts.abar_range.1)).collect();
    let f: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let mut qhalf: Vec<Vec<f64>> = f
        .iter()
        .map(|r| r.iter().zip(&diag).map(|(v, d)| 0.1 * v * d).collect())
        .collect();
    let mean_vol = (0..n)
        .map(|j| qhalf.iter().map(|r| r[j] * r[j]).sum::<f64>().sqrt())
        .sum::<f64>()
        / n as f64;
    if mean_vol > 0.0 {
        let s = opts.mean_vol / mean_vol;
        for r in qhalf.iter_mut() {
            for v in r.iter_mut() {
                *v *= s;
            }
        }
    }
    let amin = abar.iter().copied().fold(f64::INFINITY, f64::min);
    PortfolioParams {
        n,
        k_card: opts.max_card.min(n.saturating_sub(1)).max(1),
        sigma: opts.sigma,
        shortfall: ShortfallParams {
            eta: opts.eta,
            w_low: [opts.w_frac[0] * amin, opts.w_frac[1] * amin],
        },
        robust: RobustParams {
            alpha: opts.alpha,
            rhalf: qhalf.clone(),
        },
        abar,
        qhalf,
        family,
        seed,
    }
}

pub fn gen_random_suite(family: Family, n: usize, count: usize, seed: u64) -> Result<Vec<MicqpInstance>, PortfolioError> {
    gen_random_suite_with(family, n, count, seed, &SuiteOptions::default())
}

pub fn gen_random_suite_with(
    family: Family,
    n: usize,
    count: usize,
    seed: u64,
    opts: &SuiteOptions,
) -> Result<Vec<MicqpInstance>, PortfolioError> {
    (0..count as u64)
        .map(|i| generate(&random_params(family, n, i, seed, opts)))
        .collect()
}
