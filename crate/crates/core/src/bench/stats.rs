use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::RunRecord;

/// Timing floor that keeps ratios finite for instantaneous solves.
const MIN_TIME: f64 = 1e-9;

/// Appendix-style timing statistics of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub config: String,
    pub records: usize,
    pub solved: usize,
    pub min: f64,
    pub avg: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
    /// Instances where this configuration is fastest among the solved records.
    pub wins: usize,
    /// Solved within 1.01 times the fastest solved time.
    pub win1: usize,
    /// Solved within 1.10 times the fastest solved time.
    pub win10: usize,
    /// Largest `max(0, violation)` over incumbents.
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub config: String,
    /// `(tau, rho(tau))` at every finite ratio attained by any configuration.
    pub points: Vec<(f64, f64)>,
}

/// Keyed `(instance, config) -> (solved, time)`; duplicates keep the fastest solved run.
fn table(records: &[RunRecord]) -> BTreeMap<(&str, &str), (bool, f64)> {
    let mut t: BTreeMap<(&str, &str), (bool, f64)> = BTreeMap::new();
    for r in records {
        let entry = (r.solved(), r.time_s.max(MIN_TIME));
        t.entry((r.instance.as_str(), r.config.as_str()))
            .and_modify(|e| {
                if (entry.0, -entry.1) > (e.0, -e.1) {
                    *e = entry;
                }
            })
            .or_insert(entry);
    }
    t
}

/// Fastest solved time per instance.
fn best_times<'a>(t: &BTreeMap<(&'a str, &'a str), (bool, f64)>) -> BTreeMap<&'a str, f64> {
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    for (&(inst, _), &(solved, time)) in t {
        if solved {
            let b = best.entry(inst).or_insert(f64::INFINITY);
            *b = b.min(time);
        }
    }
    best
}

/// One row per configuration, sorted by configuration id. A win on an
/// instance goes to the fastest solved record; ties go to the configuration
/// whose id sorts first.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let t = table(records);
    let best = best_times(&t);
    let configs: BTreeSet<&str> = t.keys().map(|k| k.1).collect();
    let mut winner: BTreeMap<&str, &str> = BTreeMap::new();
    for (&(inst, config), &(solved, time)) in &t {
        if solved && time == best[inst] {
            winner.entry(inst).or_insert(config);
        }
    }
    configs
        .into_iter()
        .map(|config| {
            let mut times: Vec<f64> = records.iter().filter(|r| r.config == config).map(|r| r.time_s).collect();
            times.sort_by(f64::total_cmp);
            let count = times.len();
            let avg = times.iter().sum::<f64>() / count as f64;
            let var = times.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / count as f64;
            let within = |factor: f64| {
                t.iter()
                    .filter(|(k, (solved, time))| k.1 == config && *solved && *time <= factor * best[k.0])
                    .count()
            };
            let max_violation = records
                .iter()
                .filter(|r| r.config == config)
                .filter_map(|r| r.max_violation)
                .fold(0.0f64, |a, v| a.max(v.max(0.0)));
            SummaryRow {
                config: config.to_string(),
                records: count,
                solved: t.iter().filter(|(k, v)| k.1 == config && v.0).count(),
                min: times[0],
                avg,
                max: times[count - 1],
                std: var.sqrt(),
                wins: winner.values().filter(|&&w| w == config).count(),
                win1: within(1.01),
                win10: within(1.10),
                max_violation,
            }
        })
        .collect()
}

/// Ratio-to-best performance profiles on solve time. Unsolved or missing
/// records have ratio infinity; curves are sampled at every finite ratio.
pub fn profile(records: &[RunRecord]) -> Vec<ProfileCurve> {
    let t = table(records);
    let best = best_times(&t);
    let instances: BTreeSet<&str> = t.keys().map(|k| k.0).collect();
    let configs: BTreeSet<&str> = t.keys().map(|k| k.1).collect();
    let ratio = |inst: &str, config: &str| match t.get(&(inst, config)) {
        Some(&(true, time)) => time / best[inst],
        _ => f64::INFINITY,
    };
    let mut taus: Vec<f64> = Vec::new();
    for &i in &instances {
        for &c in &configs {
            let r = ratio(i, c);
            if r.is_finite() {
                taus.push(r);
            }
        }
    }
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    let total = instances.len() as f64;
    configs
        .into_iter()
        .map(|c| {
            let mut ratios: Vec<f64> = instances.iter().map(|i| ratio(i, c)).collect();
            ratios.sort_by(f64::total_cmp);
            let points = taus
                .iter()
                .map(|&tau| (tau, ratios.partition_point(|&r| r <= tau) as f64 / total))
                .collect();
            ProfileCurve {
                config: c.to_string(),
                points,
            }
        })
        .collect()
}
