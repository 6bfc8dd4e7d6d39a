#![allow(dead_code)]

use micqp::conic::{solve_conic, ConicStatus};
use micqp::model::MicqpInstance;

/// Best objective over every integer assignment, each completed by the conic solver.
pub fn oracle(inst: &MicqpInstance) -> Option<f64> {
    let ranges: Vec<(i64, i64)> = inst
        .int_vars
        .iter()
        .map(|&j| (inst.lb[j].ceil() as i64, inst.ub[j].floor() as i64))
        .collect();
    let mut best: Option<f64> = None;
    let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return None;
    }
    loop {
        let mut l = inst.lb.clone();
        let mut u = inst.ub.clone();
        for (k, &j) in inst.int_vars.iter().enumerate() {
            l[j] = point[k] as f64;
            u[j] = point[k] as f64;
        }
        let r = solve_conic(inst, &l, &u).unwrap();
        assert_ne!(r.status, ConicStatus::IterLimit);
        if r.status == ConicStatus::Optimal {
            best = Some(best.map_or(r.obj, |b: f64| b.max(r.obj)));
        }
        let mut k = 0;
        loop {
            if k == point.len() {
                return best;
            }
            if point[k] < ranges[k].1 {
                point[k] += 1;
                break;
            }
            point[k] = ranges[k].0;
            k += 1;
        }
    }
}
