use micqp::conic::{solve_conic, ConicSolver, ConicStatus, CONIC_TOL};
use micqp::model::{ConeBlock, MicqpInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bounded instance with a known strictly interior point.
fn random_instance(seed: u64) -> (MicqpInstance, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let mut inst = MicqpInstance::new(n);
    let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for j in 0..n {
        inst.lb[j] = center[j] - rng.gen_range(0.5..3.0);
        inst.ub[j] = center[j] + rng.gen_range(0.5..3.0);
    }
    inst.objective = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for _ in 0..rng.gen_range(0..=2) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let act: f64 = row.iter().zip(&center).map(|(a, b)| a * b).sum();
        inst.add_row(row, act + rng.gen_range(0.1..1.0));
    }
    for _ in 0..rng.gen_range(1..=2) {
        let d = rng.gen_range(1..=4);
        let matrix: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let radius: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let y: Vec<f64> = matrix
            .iter()
            .zip(&offset)
            .map(|(r, b)| r.iter().zip(&center).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect();
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lin: f64 = radius.iter().zip(&center).map(|(a, x)| a * x).sum();
        let b0 = norm * rng.gen_range(1.1..1.6) + 0.05 - lin;
        inst.cones.push(ConeBlock::new(matrix, offset, radius, b0));
    }
    (inst, center)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Barrier terms as (value, gradient, hessian) contributions; `None` outside the domain.
fn barrier(inst: &MicqpInstance, x: &[f64]) -> Option<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let n = x.len();
    let mut f = 0.0;
    let mut g = vec![0.0; n];
    let mut h = vec![vec![0.0; n]; n];
    let linear = |e: &[f64], s: f64, f: &mut f64, g: &mut Vec<f64>, h: &mut Vec<Vec<f64>>| -> bool {
        if !(s > 0.0) {
            return false;
        }
        *f -= s.ln();
        for i in 0..n {
            g[i] += e[i] / s;
            for j in 0..n {
                h[i][j] += e[i] * e[j] / (s * s);
            }
        }
        true
    };
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if !linear(&e, inst.ub[j] - x[j], &mut f, &mut g, &mut h) {
            return None;
        }
        e[j] = -1.0;
        if !linear(&e, x[j] - inst.lb[j], &mut f, &mut g, &mut h) {
            return None;
        }
    }
    for (row, &rhs) in inst.rows.iter().zip(&inst.rhs) {
        let act: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        if !linear(row, rhs - act, &mut f, &mut g, &mut h) {
            return None;
        }
    }
    for cone in &inst.cones {
        let y0 = cone.head(x);
        let y = cone.tail(x);
        let q = y0 * y0 - y.iter().map(|v| v * v).sum::<f64>();
        if !(y0 > 0.0 && q > 0.0) {
            return None;
        }
        f -= q.ln();
        let mut dq = vec![0.0; n];
        for i in 0..n {
            dq[i] = 2.0 * y0 * cone.radius[i] - 2.0 * cone.matrix.iter().zip(&y).map(|(r, v)| r[i] * v).sum::<f64>();
        }
        for i in 0..n {
            g[i] -= dq[i] / q;
            for j in 0..n {
                let ata: f64 = cone.matrix.iter().map(|r| r[i] * r[j]).sum();
                let d2q = 2.0 * cone.radius[i] * cone.radius[j] - 2.0 * ata;
                h[i][j] += dq[i] * dq[j] / (q * q) - d2q / q;
            }
        }
    }
    Some((f, g, h))
}

/// Interior-point reference for `max c.x` started at a strictly feasible point.
fn barrier_reference(inst: &MicqpInstance, start: &[f64]) -> f64 {
    let n = start.len();
    let m = 2 * n + inst.rows.len() + 2 * inst.cones.len();
    let mut x = start.to_vec();
    let mut t = 1.0;
    while (m as f64) / t > 1e-11 {
        for _ in 0..200 {
            let (f0, g, h) = barrier(inst, &x).unwrap();
            let grad: Vec<f64> = (0..n).map(|i| -t * inst.objective[i] + g[i]).collect();
            let step = solve_dense(h, grad.iter().map(|v| -v).collect());
            let dec: f64 = -grad.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
            if dec / 2.0 < 1e-12 {
                break;
            }
            let obj = |z: &[f64]| -t * inst.objective.iter().zip(z).map(|(a, b)| a * b).sum::<f64>();
            let phi0 = obj(&x) + f0;
            let mut s = 1.0;
            loop {
                let z: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + s * b).collect();
                if let Some((fz, _, _)) = barrier(inst, &z) {
                    if obj(&z) + fz <= phi0 - 0.25 * s * dec {
                        x = z;
                        break;
                    }
                }
                s *= 0.5;
                if s < 1e-14 {
                    break;
                }
            }
        }
        t *= 8.0;
    }
    inst.objective.iter().zip(&x).map(|(a, b)| a * b).sum()
}

#[test]
fn agrees_with_barrier_reference() {
    for seed in 0..50 {
        let (inst, center) = random_instance(seed);
        let r = solve_conic(&inst, &inst.lb, &inst.ub).unwrap();
        assert_eq!(r.status, ConicStatus::Optimal, "seed {seed}");
        assert!(r.max_violation <= CONIC_TOL);
        let reference = barrier_reference(&inst, &center);
        assert!((r.obj - reference).abs() <= 1e-5, "seed {seed}: {} vs {}", r.obj, reference);
        assert!(r.obj >= reference - 1e-7, "seed {seed}: bound {} below feasible {}", r.obj, reference);
        for w in r.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: objective rose {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn bound_dominates_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 100..130 {
        let (inst, center) = random_instance(seed);
        let r = solve_conic(&inst, &inst.lb, &inst.ub).unwrap();
        for _ in 0..50 {
            let p: Vec<f64> = center
                .iter()
                .enumerate()
                .map(|(j, &c)| c + rng.gen_range(-1.0..1.0) * (inst.ub[j] - inst.lb[j]) * 0.3)
                .collect();
            let in_box = p.iter().enumerate().all(|(j, &v)| v >= inst.lb[j] && v <= inst.ub[j]);
            if in_box && inst.linear_violation(&p) <= 0.0 && inst.cones_satisfied(&p, 0.0) {
                assert!(r.obj >= inst.objective_value(&p) - 1e-7);
            }
        }
    }
}

#[test]
fn continuous_ball_linear_max() {
    // sum_j (x_j - 1/2)^2 <= (n - 1)/4, maximize sum x_j
    let n = 4;
    let mut inst = MicqpInstance::new(n);
    inst.objective = vec![1.0; n];
    let matrix = (0..n)
        .map(|i| {
            let mut r = vec![0.0; n];
            r[i] = 1.0;
            r
        })
        .collect();
    inst.cones
        .push(ConeBlock::new(matrix, vec![-0.5; n], vec![0.0; n], ((n as f64 - 1.0) / 4.0).sqrt()));
    let r = solve_conic(&inst, &inst.lb, &inst.ub).unwrap();
    assert_eq!(r.status, ConicStatus::Optimal);
    assert!((r.obj - (2.0 + 3f64.sqrt())).abs() < 1e-6, "{}", r.obj);
}

#[test]
fn reused_solver_matches_fresh_solves() {
    for seed in 200..215 {
        let (inst, center) = random_instance(seed);
        let mut solver = ConicSolver::new(&inst).unwrap();
        for k in 0..inst.num_vars {
            let mut l = inst.lb.clone();
            let mut u = inst.ub.clone();
            l[k] = center[k].floor().max(inst.lb[k]);
            u[k] = (center[k].floor() + 1.0).min(inst.ub[k]);
            let warm = solver.solve(&l, &u).unwrap();
            let cold = solve_conic(&inst, &l, &u).unwrap();
            assert_eq!(warm.status, cold.status);
            if warm.status == ConicStatus::Optimal {
                assert!((warm.obj - cold.obj).abs() < 1e-6, "seed {seed} k {k}: {} vs {}", warm.obj, cold.obj);
            }
        }
    }
}
