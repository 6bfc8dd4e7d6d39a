//! One cardinality-constrained portfolio instance under all six configurations.

use std::time::Duration;

use micqp::bench::{run_config, Config, RunOptions};
use micqp::portfolio::{gen_random_suite, Family};

fn main() {
    let family = std::env::args().nth(1).map_or(Ok(Family::Classical), |s| s.parse()).unwrap();
    let inst = &gen_random_suite(family, 20, 1, 2024).unwrap()[0];
    let opts = RunOptions {
        time_limit: Some(Duration::from_secs(30)),
        ..RunOptions::default()
    };
    for config in Config::ALL {
        let r = run_config(inst, config, &opts).unwrap();
        let picked: Vec<usize> = r.x.as_ref().map_or(vec![], |x| (0..20).filter(|&j| x[j] > 1e-6).collect());
        println!(
            "{:<16} {:?} obj {:.6} in {:.2} s, {} nodes, {} cuts, assets {picked:?}",
            config.id(),
            r.status,
            inst.reported_objective(r.objective),
            r.stats.time_s,
            r.stats.nodes,
            r.stats.cuts
        );
    }
}
