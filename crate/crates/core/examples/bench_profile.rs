//! A small benchmark: records, summary table and performance profile.

use std::time::Duration;

use micqp::bench::{profile, run_suite, summarize, Config, RunOptions};
use micqp::portfolio::{gen_random_suite, Family};

fn main() {
    let mut suite = Vec::new();
    for family in [Family::Classical, Family::Shortfall, Family::Robust] {
        for (i, inst) in gen_random_suite(family, 10, 3, 1).unwrap().into_iter().enumerate() {
            suite.push((format!("{}_{i}", family.as_str()), inst));
        }
    }
    let opts = RunOptions {
        time_limit: Some(Duration::from_secs(10)),
        ..RunOptions::default()
    };
    let records = run_suite(&suite, &Config::ALL, &opts, 1).unwrap();
    for row in summarize(&records) {
        println!(
            "{:<16} solved {}/{} avg {:.3} s wins {} within 10% {}",
            row.config, row.solved, row.records, row.avg, row.wins, row.win10
        );
    }
    println!("fraction solved within tau times the best:");
    let taus = [1.0, 2.0, 5.0, 10.0, 100.0];
    println!("{:<16} {}", "tau", taus.map(|t| format!("{t:>6}")).join(""));
    for curve in profile(&records) {
        let at = |tau: f64| curve.points.iter().filter(|p| p.0 <= tau).map(|p| p.1).fold(0.0, f64::max);
        println!("{:<16} {}", curve.config, taus.map(|t| format!("{:>6.2}", at(t))).join(""));
    }
}
