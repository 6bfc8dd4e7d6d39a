//! Bounded-variable simplex: solve, tighten a bound, re-solve from the old basis.

use micqp::lp::{LpModel, Relation, Sense};

fn main() {
    // max 3x + 2y + 4z  s.t.  x + y + 2z <= 4,  2x + z <= 5,  x + 3y >= 1,  0 <= x, y, z <= 3
    let mut lp = LpModel::new(Sense::Maximize);
    let x = lp.add_col(0.0, 3.0, 3.0);
    let y = lp.add_col(0.0, 3.0, 2.0);
    let z = lp.add_col(0.0, 3.0, 4.0);
    lp.add_row(&[(x, 1.0), (y, 1.0), (z, 2.0)], Relation::Le, 4.0).unwrap();
    lp.add_row(&[(x, 2.0), (z, 1.0)], Relation::Le, 5.0).unwrap();
    lp.add_row(&[(x, 1.0), (y, 3.0)], Relation::Ge, 1.0).unwrap();

    let r = lp.solve().unwrap();
    println!("{:?} obj {:.4} x {:?} ({} pivots)", r.status, r.obj, r.x, r.iterations);

    lp.set_var_bounds(x, 0.0, 1.0).unwrap();
    let r = lp.solve().unwrap();
    println!("x <= 1: {:?} obj {:.4} x {:?} ({} pivots, warm)", r.status, r.obj, r.x, r.iterations);

    lp.add_row(&[(z, 1.0)], Relation::Le, 0.5).unwrap();
    let r = lp.solve().unwrap();
    println!("z <= 1/2: {:?} obj {:.4} x {:?} ({} pivots, warm)", r.status, r.obj, r.x, r.iterations);
}
