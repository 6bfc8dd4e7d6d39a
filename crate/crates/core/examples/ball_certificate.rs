//! The integer-free ball: flat outer approximation stalls, the separable
//! reformulation proves emptiness by branching.

use micqp::bnb::{solve_lifted, solve_oa, LiftedOptions, Limits, OaOptions};
use micqp::portfolio::gen_fball;
use micqp::reform::reform_sep;

fn main() {
    for n in [4, 8, 12] {
        let inst = gen_fball(n).unwrap();
        let oa = solve_oa(&inst, &OaOptions::default(), &Limits { max_cuts: Some(2000), ..Limits::with_time(20.0) }).unwrap();
        let sep = solve_lifted(&reform_sep(&inst).inst, &LiftedOptions::cut_only(), &Limits::with_time(20.0)).unwrap();
        println!(
            "n = {n:>2}: OA {:?} after {} cuts | separable {:?} with {} nodes in {:.2} s",
            oa.status, oa.stats.cuts, sep.status, sep.stats.nodes, sep.stats.time_s
        );
    }
}
