//! The lifted relaxation `N^2_s` of the three-dimensional Lorentz cone built
//! from `s` successive plane rotations with absolute-value folding.

use std::f64::consts::PI;
use std::ops::Range;

use super::RelaxError;
use crate::lp::{LpModel, Relation};

/// Rows and columns of one attached `N^2_s` system.
#[derive(Debug, Clone, PartialEq)]
pub struct NTwo {
    pub s: u32,
    pub v_cols: Vec<usize>,
    pub eq_rows: Vec<usize>,
    pub ineq_rows: Vec<usize>,
}

/// `(cos, sin)` of `pi / 2^i`, exact for `i = 0, 1`.
fn rotation(i: u32) -> (f64, f64) {
    match i {
        0 => (-1.0, 0.0),
        1 => (0.0, 1.0),
        _ => {
            let t = PI / f64::from(1u32 << i.min(30));
            (t.cos(), t.sin())
        }
    }
}

/// Quality `1 / cos(pi / 2^s) - 1` of `N^2_s`.
pub fn ntwo_quality(s: u32) -> f64 {
    1.0 / rotation(s).0 - 1.0
}

/// Attaches `N^2_s` on the columns `(y0, y1, y2)`: `2s` auxiliary columns,
/// `s + 1` equality rows and `2s` inequality rows.
pub fn attach_ntwo(lp: &mut LpModel, y0: usize, y1: usize, y2: usize, s: u32) -> Result<NTwo, RelaxError> {
    if s == 0 {
        return Err(RelaxError::Domain("N^2_s needs s >= 1".into()));
    }
    let v = lp.add_cols(2 * s as usize, f64::NEG_INFINITY, f64::INFINITY);
    let mut eq_rows = Vec::with_capacity(s as usize + 1);
    let mut ineq_rows = Vec::with_capacity(2 * s as usize);
    // v1 = y1 cos(pi) + y2 sin(pi); v2 >= |y2 cos(pi) - y1 sin(pi)|
    let mut push_step = |lp: &mut LpModel, a: usize, b: usize, out_a: usize, out_b: usize, i: u32| -> Result<(), RelaxError> {
        let (c, sn) = rotation(i);
        eq_rows.push(lp.add_row(&[(out_a, 1.0), (a, -c), (b, -sn)], Relation::Eq, 0.0)?);
        // out_b >= +-(c b - sn a)
        ineq_rows.push(lp.add_row(&[(out_b, 1.0), (b, -c), (a, sn)], Relation::Ge, 0.0)?);
        ineq_rows.push(lp.add_row(&[(out_b, 1.0), (b, c), (a, -sn)], Relation::Ge, 0.0)?);
        Ok(())
    };
    push_step(lp, y1, y2, v[0], v[1], 0)?;
    for i in 1..s {
        let k = (i - 1) as usize;
        push_step(lp, v[2 * k], v[2 * k + 1], v[2 * k + 2], v[2 * k + 3], i)?;
    }
    let (c, sn) = rotation(s);
    let last = 2 * s as usize;
    eq_rows.push(lp.add_row(&[(y0, 1.0), (v[last - 2], -c), (v[last - 1], -sn)], Relation::Eq, 0.0)?);
    Ok(NTwo {
        s,
        v_cols: v,
        eq_rows,
        ineq_rows,
    })
}

impl NTwo {
    pub fn rows(&self) -> Range<usize> {
        let lo = self.eq_rows.iter().chain(&self.ineq_rows).min().copied().unwrap_or(0);
        lo..lo + self.eq_rows.len() + self.ineq_rows.len()
    }
}

/// The values of `v` that lift a point `(y0, y1, y2)` of the cone into `N^2_s`.
pub fn lift_ntwo(y0: f64, y1: f64, y2: f64, s: u32) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * s as usize);
    let (mut a, mut b) = (y1, y2);
    for i in 0..s {
        let (c, sn) = rotation(i);
        let na = c * a + sn * b;
        let nb = (c * b - sn * a).abs();
        v.push(na);
        v.push(nb);
        a = na;
        b = nb;
    }
    let (c, sn) = rotation(s);
    let last = v.len() - 1;
    v[last] = (y0 - c * v[last - 1]) / sn;
    v
}
