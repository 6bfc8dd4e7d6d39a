//! Separable relaxation `H^d(Gamma)`: `y` is split into per-coordinate
//! perspective terms `w_j >= y_j^2 / y0` with `sum_j w_j <= y0`, and each
//! term is outer-approximated by tangents at the breakpoints in `Gamma_j`.

use super::{ConeVarMap, GammaPool, RelaxError};
use crate::lp::{LpModel, Relation};

/// Breakpoint used at the apex `y0 = 0`, where any positive value cuts.
const APEX_GAMMA: f64 = 1.0;

/// Coefficients of the tangent `2 gamma y_j - gamma^2 y0 - w_j <= 0`.
pub fn tangent_row(y0_col: usize, yj_col: usize, wj_col: usize, gamma: f64) -> Vec<(usize, f64)> {
    vec![(yj_col, 2.0 * gamma), (y0_col, -gamma * gamma), (wj_col, -1.0)]
}

/// Breakpoints `(j, gamma)` whose tangents cut `(y0, y, w)`.
///
/// Coordinate `j` is violated when `y_j^2 / y0 - w_j > tol`. At the apex
/// `|y0| <= tol` every coordinate receives `+-1` as soon as any `y_j` is
/// nonzero or the budget `sum w <= y0` fails.
pub fn separate_sep(y0: f64, y: &[f64], w: &[f64], tol: f64) -> Vec<(usize, f64)> {
    if y0 > tol {
        return y
            .iter()
            .zip(w)
            .enumerate()
            .filter(|(_, (&yj, &wj))| yj * yj / y0 - wj > tol)
            .map(|(j, (&yj, _))| (j, yj / y0))
            .collect();
    }
    if y0 < -tol {
        return Vec::new();
    }
    let budget = w.iter().sum::<f64>() - y0;
    if y.iter().any(|v| v.abs() > tol) || budget > tol {
        (0..y.len()).flat_map(|j| [(j, -APEX_GAMMA), (j, APEX_GAMMA)]).collect()
    } else {
        Vec::new()
    }
}

/// `H^d(Gamma)` attached to a host LP.
#[derive(Debug, Clone)]
pub struct SepBlock {
    pub map: ConeVarMap,
    pub w_cols: Vec<usize>,
    pub pool: GammaPool,
    pub budget_row: usize,
    pub sign_row: usize,
    pub cut_rows: Vec<usize>,
}

/// Adds `d` free columns `w`, the budget row, the sign row and one tangent
/// per breakpoint: `2 + sum_j |Gamma_j|` rows in total.
pub fn attach_sep(lp: &mut LpModel, map: &ConeVarMap, pool: GammaPool) -> Result<SepBlock, RelaxError> {
    let d = map.dim();
    if d == 0 {
        return Err(RelaxError::Dimension("separable relaxation needs d >= 1".into()));
    }
    if pool.dim() != d {
        return Err(RelaxError::Dimension(format!("breakpoint pool of dimension {} for cone of dimension {d}", pool.dim())));
    }
    let w_cols = lp.add_cols(d, f64::NEG_INFINITY, f64::INFINITY);
    let mut budget: Vec<(usize, f64)> = w_cols.iter().map(|&c| (c, 1.0)).collect();
    budget.push((map.y0_col, -1.0));
    let budget_row = lp.add_row(&budget, Relation::Le, 0.0)?;
    let sign_row = lp.add_row(&[(map.y0_col, 1.0)], Relation::Ge, 0.0)?;
    let mut cut_rows = Vec::with_capacity(pool.total());
    for j in 0..d {
        for &g in pool.get(j) {
            cut_rows.push(lp.add_row(&tangent_row(map.y0_col, map.y_cols[j], w_cols[j], g), Relation::Le, 0.0)?);
        }
    }
    let mut map = map.clone();
    map.aux_cols = w_cols.clone();
    Ok(SepBlock {
        map,
        w_cols,
        pool,
        budget_row,
        sign_row,
        cut_rows,
    })
}

impl SepBlock {
    pub fn num_rows(&self) -> usize {
        2 + self.cut_rows.len()
    }

    pub fn w_values(&self, x: &[f64]) -> Vec<f64> {
        self.w_cols.iter().map(|&c| x[c]).collect()
    }

    pub fn refine(&mut self, lp: &mut LpModel, x: &[f64], tol: f64) -> Result<usize, RelaxError> {
        let (y0, y) = self.map.values(x);
        let w = self.w_values(x);
        let mut added = 0;
        for (j, g) in separate_sep(y0, &y, &w, tol) {
            if self.pool.insert(j, g) {
                let row = tangent_row(self.map.y0_col, self.map.y_cols[j], self.w_cols[j], g);
                self.cut_rows.push(lp.add_row(&row, Relation::Le, 0.0)?);
                added += 1;
            }
        }
        Ok(added)
    }

    /// `w_j = y_j^2 / y0`, and `w = 0` at the apex.
    pub fn lift(&self, y0: f64, y: &[f64], values: &mut [f64]) {
        values[self.map.y0_col] = y0;
        for ((&c, &wc), &v) in self.map.y_cols.iter().zip(&self.w_cols).zip(y) {
            values[c] = v;
            values[wc] = if y0 > 0.0 { v * v / y0 } else { 0.0 };
        }
    }
}

/// A univariate convex function with derivative.
pub trait ConvexFn {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// `f(x) = x^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Square;

impl ConvexFn for Square {
    fn value(&self, x: f64) -> f64 {
        x * x
    }

    fn derivative(&self, x: f64) -> f64 {
        2.0 * x
    }
}

/// `f(x) = |x|^p` for `p >= 1`.
#[derive(Debug, Clone, Copy)]
pub struct Power(pub f64);

impl ConvexFn for Power {
    fn value(&self, x: f64) -> f64 {
        x.abs().powf(self.0)
    }

    fn derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        self.0 * x.signum() * x.abs().powf(self.0 - 1.0)
    }
}

/// `y0_coef * y0 + yj_coef * y_j <= w_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveRow {
    pub y0: f64,
    pub yj: f64,
}

impl PerspectiveRow {
    /// Coefficients of `y0_coef * y0 + yj_coef * y_j - w_j <= 0`.
    pub fn coeffs(&self, y0_col: usize, yj_col: usize, wj_col: usize) -> Vec<(usize, f64)> {
        vec![(y0_col, self.y0), (yj_col, self.yj), (wj_col, -1.0)]
    }
}

/// The perspective cut `(f(g) - g f'(g)) y0 + f'(g) y_j <= w_j`.
pub fn perspective_cut<F: ConvexFn + ?Sized>(f: &F, gamma: f64) -> Result<PerspectiveRow, RelaxError> {
    let v = f.value(gamma);
    let dv = f.derivative(gamma);
    if !v.is_finite() || !dv.is_finite() {
        return Err(RelaxError::Eval(format!("f or f' not finite at {gamma}")));
    }
    Ok(PerspectiveRow {
        y0: v - gamma * dv,
        yj: dv,
    })
}
