use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ConeBlock, MicqpInstance};

/// Small bounded random MICQP: `n <= 6`, at most two cones of dimension
/// `<= 4`, at most four integer variables with ranges of at most four values.
///
/// Cones and rows are built around a random point with integral integer
/// coordinates; cone radii are drawn around the point's norm, so some
/// instances exclude it and a few are infeasible.
pub fn gen_random_micqp(seed: u64) -> MicqpInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let mut inst = MicqpInstance::new(n);
    let mut cols: Vec<usize> = (0..n).collect();
    cols.shuffle(&mut rng);
    let mut ints: Vec<usize> = cols[..rng.gen_range(1..=n.min(4))].to_vec();
    ints.sort_unstable();
    let mut center = vec![0.0; n];
    for j in 0..n {
        if ints.contains(&j) {
            let lo = rng.gen_range(-2..=0) as f64;
            inst.lb[j] = lo;
            inst.ub[j] = lo + rng.gen_range(1..=3) as f64;
            center[j] = rng.gen_range(inst.lb[j] as i64..=inst.ub[j] as i64) as f64;
        } else {
            inst.lb[j] = -3.0;
            inst.ub[j] = 3.0;
            center[j] = rng.gen_range(-2.0..2.0);
        }
    }
    inst.int_vars = ints;
    inst.objective = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for _ in 0..rng.gen_range(0..=2) {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let act: f64 = row.iter().zip(&center).map(|(a, b)| a * b).sum();
        inst.add_row(row, act + rng.gen_range(0.0..1.0));
    }
    for _ in 0..rng.gen_range(1..=2) {
        let d = rng.gen_range(1..=4);
        let matrix: Vec<Vec<f64>> = (0..d).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let radius: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let norm = matrix
            .iter()
            .zip(&offset)
            .map(|(r, b)| {
                let y = r.iter().zip(&center).map(|(a, x)| a * x).sum::<f64>() + b;
                y * y
            })
            .sum::<f64>()
            .sqrt();
        let lin: f64 = radius.iter().zip(&center).map(|(a, x)| a * x).sum();
        let b0 = norm * rng.gen_range(0.8..1.5) + rng.gen_range(0.0..0.5) - lin;
        inst.cones.push(ConeBlock::new(matrix, offset, radius, b0));
    }
    inst
}
