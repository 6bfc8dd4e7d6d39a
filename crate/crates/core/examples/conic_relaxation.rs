//! Continuous relaxation of a portfolio instance by the conic cutting-plane solver.

use micqp::conic::{solve_conic, ConicSolver};
use micqp::model::max_cone_violation;
use micqp::portfolio::{gen_random_suite, Family};

fn main() {
    let inst = &gen_random_suite(Family::Shortfall, 20, 1, 7).unwrap()[0];
    let r = solve_conic(inst, &inst.lb, &inst.ub).unwrap();
    println!("{:?} bound {:.6}, cone violation {:.2e}", r.status, r.obj, max_cone_violation(inst, &r.x));

    // fix the first asset out and the second in
    let mut solver = ConicSolver::new(inst).unwrap();
    let (mut l, mut u) = (inst.lb.clone(), inst.ub.clone());
    let n = 20;
    u[n] = 0.0;
    l[n + 1] = 1.0;
    let r = solver.solve(&l, &u).unwrap();
    println!("z_0 = 0, z_1 = 1: {:?} bound {:.6} after {} cuts", r.status, r.obj, solver.num_cuts());
}
