use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ConeVarMap, RelaxError};
use crate::lp::{LpModel, LpStatus, Sense};

/// Number of equally spaced angles always probed when `d = 2`.
const PLANE_GRID: usize = 1024;

/// Sampled quality `max_u (max u.y s.t. relaxation, y0 = 1) - 1`.
///
/// The direction set holds `+-e_j`, `num_dirs` seeded Gaussian directions
/// and, for `d = 2`, a grid of 1024 angles that contains every multiple of
/// `pi / 2^9`. The result is a lower bound on the true quality and is
/// infinite if some direction is unbounded. Bounds and objective of `lp` are
/// restored before returning.
pub fn measure_quality(lp: &mut LpModel, map: &ConeVarMap, num_dirs: usize, seed: u64) -> Result<f64, RelaxError> {
    let d = map.dim();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for j in 0..d {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[j] = s;
            dirs.push(u);
        }
    }
    if d == 2 {
        for k in 0..PLANE_GRID {
            let t = 2.0 * std::f64::consts::PI * k as f64 / PLANE_GRID as f64;
            dirs.push(vec![t.cos(), t.sin()]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..num_dirs {
        let u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            dirs.push(u.iter().map(|v| v / norm).collect());
        }
    }

    let saved_obj = lp.objective().to_vec();
    let saved_bounds = lp.var_bounds(map.y0_col);
    let sign = match lp.sense() {
        Sense::Maximize => 1.0,
        Sense::Minimize => -1.0,
    };
    let outcome = (|| -> Result<f64, RelaxError> {
        for j in 0..lp.num_vars() {
            lp.set_objective(j, 0.0)?;
        }
        lp.set_var_bounds(map.y0_col, 1.0, 1.0)?;
        let mut best = f64::NEG_INFINITY;
        for u in &dirs {
            for (&c, &v) in map.y_cols.iter().zip(u) {
                lp.set_objective(c, sign * v)?;
            }
            let r = lp.solve()?;
            match r.status {
                LpStatus::Optimal => best = best.max(sign * r.obj),
                LpStatus::Unbounded => return Ok(f64::INFINITY),
                LpStatus::PrimalInfeasible => {
                    return Err(RelaxError::Domain("relaxation section at y0 = 1 is empty".into()));
                }
            }
        }
        Ok(best - 1.0)
    })();
    for (j, &v) in saved_obj.iter().enumerate() {
        lp.set_objective(j, v)?;
    }
    lp.set_var_bounds(map.y0_col, saved_bounds.0, saved_bounds.1)?;
    outcome
}
