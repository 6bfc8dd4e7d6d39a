use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use micqp::bench::{
    profile, read_records, run_algorithm, run_suite, status_counts, summarize, write_profile, write_records,
    write_summary, Algorithm, Config, RunOptions, SummaryRow,
};
use micqp::conic::CONIC_TOL;
use micqp::model::{read_instance, write_instance, MicqpInstance};
use micqp::portfolio::{gen_fball, generate, random_params, Family, SuiteOptions};
use micqp::reform::Reform;

type Res<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "micqp", version, about = "Mixed-integer conic-quadratic solver and benchmark driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenFamily {
    Classical,
    Shortfall,
    Robust,
    Fball,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded instances and their generation metadata to a directory.
    Gen(GenArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Run configurations over every instance in a directory.
    Bench(BenchArgs),
    /// Performance profiles and summary table from a results CSV.
    Profile(ProfileArgs),
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: GenFamily,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.9)]
    abar_min: f64,
    #[arg(long, default_value_t = 1.3)]
    abar_max: f64,
    /// Mean asset volatility after rescaling the covariance factor.
    #[arg(long, default_value_t = 0.2)]
    mean_vol: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    /// Cardinality cap, clipped to n - 1.
    #[arg(long, default_value_t = 10)]
    max_card: usize,
    #[arg(long, num_args = 2, default_values_t = [0.95, 0.97])]
    eta: Vec<f64>,
    /// Shortfall thresholds as fractions of the smallest expected return.
    #[arg(long, num_args = 2, default_values_t = [0.9, 0.7])]
    w_frac: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// oa, lifted-branch, lifted-cut or cut; a configuration id (e.g. SepLP) sets the reformulation too.
    #[arg(long, default_value = "lifted-cut")]
    algorithm: String,
    /// none, sep, tower, towersep or persp.
    #[arg(long)]
    reform: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 60.0)]
    timelimit: f64,
    /// Recorded in the output; the solver itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit one JSON line per node before the result line.
    #[arg(long)]
    trace: bool,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Comma-separated configuration ids; all six by default.
    #[arg(long, value_delimiter = ',')]
    configs: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 60.0)]
    timelimit: f64,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write the per-configuration summary table.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ProfileArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Profile(a) => prof(a),
    };
    if let Err(e) = r {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn gen(a: GenArgs) -> Res<()> {
    fs::create_dir_all(&a.out)?;
    if let GenFamily::Fball = a.family {
        let inst = gen_fball(a.n)?;
        let stem = format!("fball_n{}", a.n);
        write_instance(&inst, a.out.join(format!("{stem}.json")))?;
        let meta = json!({ "family": "fball", "n": a.n, "instance": stem });
        fs::write(a.out.join(format!("{stem}.meta.json")), serde_json::to_string_pretty(&meta)?)?;
        println!("{}", a.out.join(format!("{stem}.json")).display());
        return Ok(());
    }
    let family = match a.family {
        GenFamily::Classical => Family::Classical,
        GenFamily::Shortfall => Family::Shortfall,
        _ => Family::Robust,
    };
    let opts = SuiteOptions {
        abar_range: (a.abar_min, a.abar_max),
        mean_vol: a.mean_vol,
        sigma: a.sigma,
        max_card: a.max_card,
        eta: [a.eta[0], a.eta[1]],
        w_frac: [a.w_frac[0], a.w_frac[1]],
        alpha: a.alpha,
    };
    for i in 0..a.count {
        let params = random_params(family, a.n, i as u64, a.seed, &opts);
        let inst = generate(&params)?;
        let stem = format!("{}_n{}_s{}_{:03}", family.as_str(), a.n, a.seed, i);
        let path = a.out.join(format!("{stem}.json"));
        write_instance(&inst, &path)?;
        let meta = json!({
            "family": family.as_str(),
            "n": a.n,
            "index": i,
            "seed": a.seed,
            "instance": stem,
            "distributions": "generator decisions; not the data of any published study",
            "options": opts,
            "params": params,
        });
        fs::write(a.out.join(format!("{stem}.meta.json")), serde_json::to_string_pretty(&meta)?)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Res<()> {
    let inst = read_instance(&a.input)?;
    let (algorithm, default_reform) = match a.algorithm.parse::<Config>() {
        Ok(c) => c.parts(),
        Err(_) => (a.algorithm.parse::<Algorithm>()?, Reform::None),
    };
    let reform = match &a.reform {
        Some(r) => r.parse::<Reform>()?,
        None => default_reform,
    };
    let opts = RunOptions {
        time_limit: Some(Duration::from_secs_f64(a.timelimit)),
        eps: a.eps,
        trace: a.trace,
    };
    let res = run_algorithm(&inst, algorithm, reform, &opts)?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    for ev in &res.trace {
        writeln!(out, "{}", serde_json::to_string(&json!({ "event": "node", "data": ev }))?)?;
    }
    let result = json!({
        "event": "result",
        "instance": a.input.display().to_string(),
        "algorithm": algorithm.as_str(),
        "reform": reform.as_str(),
        "eps": a.eps,
        "seed": a.seed,
        "conic_tol": CONIC_TOL,
        "status": res.status.as_str(),
        "objective": res.x.as_ref().map(|_| inst.reported_objective(res.objective)),
        "bound": finite(inst.reported_objective(res.bound)),
        "max_violation": finite(res.max_violation),
        "stats": res.stats,
        "x": res.x,
    });
    writeln!(out, "{}", serde_json::to_string(&result)?)?;
    Ok(())
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Instance files of a suite directory, sorted by name; metadata files are skipped.
fn load_suite(dir: &Path) -> Res<Vec<(String, MicqpInstance)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.ends_with(".json") && !name.ends_with(".meta.json")
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok((name, read_instance(&p)?))
        })
        .collect()
}

fn bench(a: BenchArgs) -> Res<()> {
    let instances = load_suite(&a.suite)?;
    let configs: Vec<Config> = if a.configs.is_empty() {
        Config::ALL.to_vec()
    } else {
        a.configs.iter().map(|c| c.parse()).collect::<Result<_, _>>()?
    };
    let opts = RunOptions {
        time_limit: Some(Duration::from_secs_f64(a.timelimit)),
        eps: a.eps,
        trace: false,
    };
    let records = run_suite(&instances, &configs, &opts, a.threads)?;
    write_records(&a.out, &records)?;
    let rows = summarize(&records);
    if let Some(p) = &a.summary {
        write_summary(p, &rows)?;
    }
    print_summary(&rows);
    for (config, counts) in status_counts(&records) {
        println!("{config}: {counts:?}");
    }
    Ok(())
}

fn prof(a: ProfileArgs) -> Res<()> {
    let records = read_records(&a.input)?;
    write_profile(&a.out, &profile(&records))?;
    let rows = summarize(&records);
    if let Some(p) = &a.summary {
        write_summary(p, &rows)?;
    }
    print_summary(&rows);
    Ok(())
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<16} {:>7} {:>6} {:>9} {:>9} {:>9} {:>9} {:>5} {:>6} {:>7} {:>10}",
        "config", "records", "solved", "min", "avg", "max", "std", "wins", "1%win", "10%win", "max_viol"
    );
    for r in rows {
        println!(
            "{:<16} {:>7} {:>6} {:>9.3} {:>9.3} {:>9.3} {:>9.3} {:>5} {:>6} {:>7} {:>10.2e}",
            r.config, r.records, r.solved, r.min, r.avg, r.max, r.std, r.wins, r.win1, r.win10, r.max_violation
        );
    }
}
