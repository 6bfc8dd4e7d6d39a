//! Polyhedral relaxations of the Lorentz cone and their measured quality.

use micqp::lp::{LpModel, Sense};
use micqp::relax::{
    attach_flat_oa, attach_ntwo, attach_sep, attach_tower, measure_quality, ntwo_depth_schedule, ntwo_quality,
    ConeVarMap, GammaPool, OmegaPool, TowerLeaf,
};

fn main() {
    println!("rotation gadget on L^2");
    for s in 1..=6 {
        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, 2);
        attach_ntwo(&mut lp, map.y0_col, map.y_cols[0], map.y_cols[1], s).unwrap();
        let q = measure_quality(&mut lp, &map, 0, 0).unwrap();
        println!("  s = {s}: {:>2} rows, quality {q:.6} (formula {:.6})", lp.num_rows(), ntwo_quality(s));
    }

    let d = 16;
    println!("d = {d}");
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, d);
    attach_flat_oa(&mut lp, &map, &OmegaPool::axes(d)).unwrap();
    let q = measure_quality(&mut lp, &map, 64, 1).unwrap();
    println!("  flat, +-e_j:           {:>4} rows, quality {q:.4}", lp.num_rows());

    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, d);
    let b = attach_tower(&mut lp, &map, TowerLeaf::Dynamic(OmegaPool::diagonals())).unwrap();
    let q = measure_quality(&mut lp, &map, 64, 1).unwrap();
    println!("  tower, diamond leaves: {:>4} rows, {} aux columns, quality {q:.4}", lp.num_rows(), b.t_cols.len());

    for eps in [0.1, 0.01, 0.001] {
        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        let s = ntwo_depth_schedule(d, eps).unwrap();
        attach_tower(&mut lp, &map, TowerLeaf::Schedule(s.clone())).unwrap();
        let q = measure_quality(&mut lp, &map, 64, 1).unwrap();
        println!("  static eps = {eps}: s = {s:?}, {:>4} rows, quality {q:.5}", lp.num_rows());
    }

    let grid: Vec<f64> = (-4..=4).map(|k| k as f64 / 4.0).collect();
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, d);
    attach_sep(&mut lp, &map, GammaPool::uniform(d, &grid)).unwrap();
    let q = measure_quality(&mut lp, &map, 64, 1).unwrap();
    println!("  separable, 9 tangents per coordinate: {:>4} rows, quality {q:.4}", lp.num_rows());
}
