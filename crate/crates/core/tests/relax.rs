use micqp::lp::{LpModel, LpStatus, Relation, Sense};
use micqp::relax::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cone_point(rng: &mut ChaCha8Rng, d: usize) -> (f64, Vec<f64>) {
    // uniform in the unit ball by rejection-free radial scaling
    let g: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    let r = rng.gen::<f64>().powf(1.0 / d as f64);
    let y: Vec<f64> = g.iter().map(|v| v / n * r).collect();
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm * (1.0 + rng.gen::<f64>()), y)
}

fn check_containment(d: usize, build: impl Fn(&mut LpModel, &ConeVarMap) -> RelaxationBlock) {
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, d);
    let block = build(&mut lp, &map);
    let mut rng = ChaCha8Rng::seed_from_u64(d as u64 + 17);
    let mut x = vec![0.0; lp.num_vars()];
    for k in 0..1000 {
        let (y0, y) = if k == 0 { (0.0, vec![0.0; d]) } else { random_cone_point(&mut rng, d) };
        block.lift(y0, &y, &mut x);
        let res = lp.max_residual(&x);
        assert!(res <= 1e-9, "d={d} point {k}: residual {res}");
    }
}

#[test]
fn every_relaxation_contains_the_cone() {
    for d in [2usize, 3, 5, 8, 13] {
        check_containment(d, |lp, map| {
            RelaxationBlock::Flat(FlatBlock::attach(lp, map.clone(), OmegaPool::axes(d)).unwrap())
        });
        check_containment(d, |lp, map| RelaxationBlock::Tower(attach_tower(lp, map, TowerLeaf::Exact(3)).unwrap()));
        check_containment(d, |lp, map| {
            let s = micqp::relax::ntwo_depth_schedule(d, 0.01).unwrap();
            RelaxationBlock::Tower(attach_tower(lp, map, TowerLeaf::Schedule(s)).unwrap())
        });
        check_containment(d, |lp, map| {
            RelaxationBlock::Tower(attach_tower(lp, map, TowerLeaf::Dynamic(OmegaPool::diagonals())).unwrap())
        });
        check_containment(d, |lp, map| {
            let pool = GammaPool::uniform(2, &[-1.0, -0.3, 0.5, 2.0]);
            RelaxationBlock::Tower(attach_tower(lp, map, TowerLeaf::SepH2(pool)).unwrap())
        });
        check_containment(d, |lp, map| {
            let pool = GammaPool::uniform(d, &[-1.0, -0.25, 0.0, 0.7]);
            RelaxationBlock::Sep(attach_sep(lp, map, pool).unwrap())
        });
    }
}

fn row_violation(lp: &LpModel, i: usize, x: &[f64]) -> f64 {
    let row = lp.row(i);
    let act: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
    match row.relation {
        Relation::Le => act - row.rhs,
        Relation::Ge => row.rhs - act,
        Relation::Eq => (act - row.rhs).abs(),
    }
}

#[test]
fn separation_cuts_the_point() {
    let tol = SEP_TOL;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let d = rng.gen_range(2..7);
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let y0 = norm * rng.gen_range(0.0..0.95);

        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        let mut flat = FlatBlock::attach(&mut lp, map.clone(), OmegaPool::new(d)).unwrap();
        let mut x = vec![0.0; lp.num_vars()];
        x[map.y0_col] = y0;
        for (&c, &v) in map.y_cols.iter().zip(&y) {
            x[c] = v;
        }
        assert_eq!(flat.refine(&mut lp, &x, tol).unwrap(), 1);
        let v = row_violation(&lp, lp.num_rows() - 1, &x);
        assert!((v - (norm - y0)).abs() < 1e-9);
        assert_eq!(flat.refine(&mut lp, &x, tol).unwrap(), 0);

        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        let mut sep = attach_sep(&mut lp, &map, GammaPool::new(d)).unwrap();
        let mut x = vec![0.0; lp.num_vars()];
        sep.lift(y0.max(1e-3), &y, &mut x);
        // shrink w so that the point violates some perspective term
        for &c in &sep.w_cols {
            x[c] *= 0.5;
        }
        let before = lp.num_rows();
        let added = sep.refine(&mut lp, &x, tol).unwrap();
        assert!(added >= 1);
        let worst = (before..lp.num_rows()).map(|i| row_violation(&lp, i, &x)).fold(f64::MIN, f64::max);
        assert!(worst > tol / 2.0);
        assert_eq!(sep.refine(&mut lp, &x, tol).unwrap(), 0);
    }
}

#[test]
fn exact_gadget_quality_matches_formula() {
    for s in 1..=5u32 {
        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, 2);
        attach_tower(&mut lp, &map, TowerLeaf::Exact(s)).unwrap();
        let q = measure_quality(&mut lp, &map, 720, 3).unwrap();
        let exact = ntwo_quality(s);
        assert!(q <= exact + 1e-9 && q >= exact - 1e-6, "s={s}: {q} vs {exact}");
    }
    assert!((ntwo_quality(3) - 0.082392).abs() < 1e-6);
}

#[test]
fn diamond_sections_agree() {
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, 2);
    attach_flat_oa(&mut lp, &map, &OmegaPool::diagonals()).unwrap();
    let q = measure_quality(&mut lp, &map, 16, 9).unwrap();
    assert!((q - (2f64.sqrt() - 1.0)).abs() < 1e-9);

    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, 2);
    let nt = attach_ntwo(&mut lp, map.y0_col, map.y_cols[0], map.y_cols[1], 2).unwrap();
    assert_eq!(nt.v_cols.len(), 4);
    let q2 = measure_quality(&mut lp, &map, 16, 9).unwrap();
    assert!((q - q2).abs() < 1e-9);
}

#[test]
fn separable_quality_improves_with_grid() {
    let mut prev = f64::INFINITY;
    for h in [1.0, 0.5, 0.25] {
        let grid: Vec<f64> = (-(1.0 / h) as i32..=(1.0 / h) as i32).map(|k| k as f64 * h).collect();
        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, 2);
        attach_sep(&mut lp, &map, GammaPool::uniform(2, &grid)).unwrap();
        let q = measure_quality(&mut lp, &map, 64, 11).unwrap();
        assert!(q < prev, "h={h}: {q} !< {prev}");
        assert!(q >= -1e-9);
        prev = q;
    }
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, 2);
    let b = attach_sep(&mut lp, &map, GammaPool::new(2)).unwrap();
    assert_eq!(b.num_rows(), 2);
    assert_eq!(measure_quality(&mut lp, &map, 4, 1).unwrap(), f64::INFINITY);
}

fn min_y0_at(lp: &mut LpModel, map: &ConeVarMap, y: &[f64]) -> f64 {
    for (&c, &v) in map.y_cols.iter().zip(y) {
        lp.set_var_bounds(c, v, v).unwrap();
    }
    lp.set_objective(map.y0_col, -1.0).unwrap();
    let r = lp.solve().unwrap();
    assert_eq!(r.status, LpStatus::Optimal);
    -r.obj
}

#[test]
fn tower_gluing_follows_product_formula() {
    for d in [2usize, 3, 4, 7, 8, 16] {
        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        let s = 3;
        let b = attach_tower(&mut lp, &map, TowerLeaf::Exact(s)).unwrap();
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        let y0 = min_y0_at(&mut lp, &map, &e1);
        let total = (1.0 + ntwo_quality(s)).powi(b.shape.k as i32) - 1.0;
        assert!(y0 <= 1.0 + 1e-9 && y0 >= 1.0 / (1.0 + total) - 1e-9, "d={d}: {y0}");
        assert!(y0 >= 1.0 - total - 1e-9);
    }
}

#[test]
fn half_integral_points_need_sqrt_quarter_d() {
    for d in [2usize, 4, 8, 16, 32] {
        let half = vec![0.5; d];
        let expect = (d as f64 / 4.0).sqrt();

        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        attach_tower(&mut lp, &map, TowerLeaf::Exact(2)).unwrap();
        assert!((min_y0_at(&mut lp, &map, &half) - expect).abs() < 1e-9);

        let mut lp = LpModel::new(Sense::Maximize);
        let map = ConeVarMap::standalone(&mut lp, d);
        let b = attach_tower(&mut lp, &map, TowerLeaf::Dynamic(OmegaPool::diagonals())).unwrap();
        assert_eq!(b.num_rows(), 4 * d - 4);
        assert_eq!(b.t_cols.len(), d - 2);
        assert!((min_y0_at(&mut lp, &map, &half) - expect).abs() < 1e-9);
    }
}

#[test]
fn planar_tower_with_flat_leaf_is_flat_oa() {
    let pool = OmegaPool::diagonals();
    let mut a = LpModel::new(Sense::Maximize);
    let ma = ConeVarMap::standalone(&mut a, 2);
    attach_tower(&mut a, &ma, TowerLeaf::Dynamic(pool.clone())).unwrap();
    let mut b = LpModel::new(Sense::Maximize);
    let mb = ConeVarMap::standalone(&mut b, 2);
    attach_flat_oa(&mut b, &mb, &pool).unwrap();
    assert_eq!(a.num_rows(), b.num_rows());
    assert_eq!(a.num_vars(), b.num_vars());
    for i in 0..a.num_rows() {
        assert_eq!(a.row(i).coeffs, b.row(i).coeffs);
        assert_eq!(a.row(i).relation, b.row(i).relation);
    }
}

#[test]
fn square_perspective_is_the_tangent() {
    for k in -40..=40 {
        let g = k as f64 * 0.137;
        let r = perspective_cut(&Square, g).unwrap();
        let t = tangent_row(0, 1, 2, g);
        assert_eq!(r.coeffs(0, 1, 2).iter().map(|p| p.1).collect::<Vec<_>>(), vec![t[1].1, t[0].1, t[2].1]);
    }
    let r = perspective_cut(&Square, 0.0).unwrap();
    assert_eq!((r.y0, r.yj), (0.0, 0.0));
}

#[test]
fn tangent_at_half_is_tight_at_the_lift() {
    let row = tangent_row(0, 1, 2, 0.5);
    let (y0, y1) = (2.0, 1.0);
    let w1 = y1 * y1 / y0;
    let act: f64 = row.iter().map(|&(c, v)| v * [y0, y1, w1][c]).sum();
    assert!(act.abs() < 1e-15);
    assert_eq!(row, vec![(1, 1.0), (0, -0.25), (2, -1.0)]);
}

#[test]
fn half_breakpoints_exclude_every_integer_point() {
    // y_j = x_j - 1/2, y0 fixed to (n-1)/4 in the squared form, Gamma_j = {-1/2, 1/2}
    let n = 5;
    let build = |fix: Option<&[f64]>| {
        let mut lp = LpModel::new(Sense::Maximize);
        let x = lp.add_cols(n, -3.0, 3.0);
        let map = ConeVarMap::standalone(&mut lp, n);
        lp.set_var_bounds(map.y0_col, (n as f64 - 1.0) / 4.0, (n as f64 - 1.0) / 4.0).unwrap();
        for j in 0..n {
            lp.add_row(&[(x[j], 1.0), (map.y_cols[j], -1.0)], Relation::Eq, 0.5).unwrap();
        }
        attach_sep(&mut lp, &map, GammaPool::uniform(n, &[-0.5, 0.5])).unwrap();
        if let Some(v) = fix {
            for j in 0..n {
                lp.set_var_bounds(x[j], v[j], v[j]).unwrap();
            }
        }
        lp.solve().unwrap().status
    };
    assert_eq!(build(None), LpStatus::Optimal);
    assert_eq!(build(Some(&[0.5; 5])), LpStatus::Optimal);
    for mask in 0..(1u32 << n) {
        let v: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64 - if j == 2 { 1.0 } else { 0.0 }).collect();
        assert_eq!(build(Some(&v)), LpStatus::PrimalInfeasible, "{v:?}");
    }
}

#[test]
fn static_size_grows_with_accuracy() {
    for d in [4usize, 10, 31] {
        let mut prev = 0;
        for eps in [0.4, 0.1, 0.01, 0.001, 1e-4] {
            let mut lp = LpModel::new(Sense::Maximize);
            let map = ConeVarMap::standalone(&mut lp, d);
            let s = ntwo_depth_schedule(d, eps).unwrap();
            attach_tower(&mut lp, &map, TowerLeaf::Schedule(s)).unwrap();
            let rows = lp.num_rows();
            assert!(rows >= prev);
            let bound = 12.0 * d as f64 * (1.0 / eps).ln().max(1.0) + 12.0 * d as f64 * (d as f64).log2();
            assert!((rows as f64) <= bound, "d={d} eps={eps}: {rows} rows");
            prev = rows;
        }
    }
}

#[test]
fn schedule_quality_follows_product_formula() {
    for d in [2usize, 4, 7, 16] {
        for eps in [0.1, 0.01] {
            let mut lp = LpModel::new(Sense::Maximize);
            let map = ConeVarMap::standalone(&mut lp, d);
            let s = ntwo_depth_schedule(d, eps).unwrap();
            let bound = s.iter().map(|&sk| 1.0 + ntwo_quality(sk)).product::<f64>() - 1.0;
            attach_tower(&mut lp, &map, TowerLeaf::Schedule(s)).unwrap();
            let q = measure_quality(&mut lp, &map, 64, 2).unwrap();
            assert!(q <= bound + 1e-9, "d={d} eps={eps}: {q} > {bound}");
        }
    }
}

#[test]
fn schedule_can_miss_its_target() {
    // s = (3, 3) for d = 4, eps = 0.1 gives (1/cos(pi/8))^2 - 1 ~ 0.1716
    let s = ntwo_depth_schedule(4, 0.1).unwrap();
    assert_eq!(s, vec![3, 3]);
    let mut lp = LpModel::new(Sense::Maximize);
    let map = ConeVarMap::standalone(&mut lp, 4);
    attach_tower(&mut lp, &map, TowerLeaf::Schedule(s)).unwrap();
    let q = measure_quality(&mut lp, &map, 64, 2).unwrap();
    assert!((q - ((1.0 + ntwo_quality(3)).powi(2) - 1.0)).abs() < 1e-6, "{q}");
}
