//! Extended reformulations of a classical portfolio model and their continuous bounds.

use micqp::conic::solve_conic;
use micqp::portfolio::{gen_classical, PortfolioParams};
use micqp::reform::{reform_sep, reform_tower, reform_towersep, strengthen_perspective};

fn main() {
    let abar = vec![1.05, 1.2, 0.95, 1.1, 1.25, 1.0];
    let sigma: f64 = std::env::args().nth(1).map_or(0.71, |s| s.parse().unwrap());
    let inst = gen_classical(&PortfolioParams::identity(6, 2, sigma, abar)).unwrap();
    let perspective = strengthen_perspective(&inst).unwrap();
    let forms = [
        ("original", inst.clone()),
        ("separable", reform_sep(&inst).inst),
        ("tower", reform_tower(&inst).inst),
        ("tower + separable", reform_towersep(&inst).inst),
        ("perspective", perspective.inst),
    ];
    for (name, m) in &forms {
        let r = solve_conic(m, &m.lb, &m.ub).unwrap();
        println!(
            "{name:<18} {:>3} columns {:>3} rows {:>3} cones, root bound {:.6} ({:?})",
            m.num_vars,
            m.rows.len(),
            m.cones.len(),
            r.obj,
            r.status
        );
    }
}
