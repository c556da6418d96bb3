use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use cranpool_core::metrics::{export_records, export_summary, relative_gain, DelayStats};
use cranpool_core::pipeline::{run_bench, BenchConfig, BenchRun};
use cranpool_core::scheduler::{Direction, IdleStrategy, ParallelismMode, PoolConfig};
use cranpool_core::workload::{ChannelModel, TbsDistribution, TickMode, TrafficProfile};
use log::warn;

use crate::usage;

pub const OUT_DIR_ENV: &str = "CRAN_OUT_DIR";

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Channel-coding worker threads.
    #[arg(long, default_value_t = 6)]
    workers: usize,
    /// Parallelism modes to run, comma separated: none, tb, cb.
    #[arg(long, default_value = "none,tb,cb")]
    mode: String,
    #[arg(long, default_value_t = 3)]
    ues: u32,
    /// TB size in bits, or a comma-separated set to draw from uniformly.
    #[arg(long, default_value = "24496")]
    tbs: TbsDistribution,
    #[arg(long, default_value_t = 200)]
    subframes: u64,
    /// Symbol SNR of the BPSK/AWGN channel.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    max_iterations: u32,
    /// Always run every decoder iteration.
    #[arg(long)]
    no_early_stop: bool,
    /// `lockstep` (next subframe after the previous one is decoded), `batch`
    /// (all at once) or a period such as `1ms`.
    #[arg(long, default_value = "lockstep")]
    tick: TickMode,
    /// Pin workers to cores, when the OS allows it.
    #[arg(long)]
    pin: bool,
    /// Run workers with real-time priority, when the OS allows it.
    #[arg(long)]
    realtime: bool,
    /// Dispatcher idle strategy: block, spin or spin:<polls>.
    #[arg(long, default_value = "block")]
    idle: IdleStrategy,
    /// Output directory [default: $CRAN_OUT_DIR, else ./cranpool-out].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Also stream records as CSV lines to this path (a named pipe, say).
    #[arg(long, value_name = "PATH")]
    stream: Option<PathBuf>,
    /// Give up waiting on a subframe after this many milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
}

fn parse_modes(raw: &str) -> Result<Vec<ParallelismMode>> {
    let mut modes = Vec::new();
    for part in raw.split(',') {
        let m: ParallelismMode = part.parse().map_err(usage)?;
        if !modes.contains(&m) {
            modes.push(m);
        }
    }
    Ok(modes)
}

fn out_dir(args: &Args) -> PathBuf {
    args.out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cranpool-out"))
}

fn tick_name(t: TickMode) -> String {
    match t {
        TickMode::Batch => "batch".into(),
        TickMode::Lockstep => "lockstep".into(),
        TickMode::Periodic(p) => format!("{}us", p.as_micros()),
    }
}

fn us(ns: f64) -> String {
    format!("{:.1}", ns / 1e3)
}

pub fn run(args: Args) -> Result<()> {
    let modes = parse_modes(&args.mode)?;
    let config = BenchConfig {
        pool: PoolConfig {
            num_workers: args.workers,
            pinning: args.pin,
            realtime: args.realtime,
            max_iterations: args.max_iterations,
            early_stop: !args.no_early_stop,
            idle: args.idle,
            ..Default::default()
        },
        profile: TrafficProfile {
            n_ues: args.ues,
            tbs: args.tbs.clone(),
            n_subframes: args.subframes,
            tick: args.tick,
            seed: args.seed,
        },
        channel: ChannelModel::new(args.snr_db),
        await_timeout: args.timeout_ms.map(Duration::from_millis),
        ..Default::default()
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if args.workers > cores {
        warn!(
            "{} workers requested on a host with {cores} logical cores",
            args.workers
        );
    }

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let dir = out_dir(&args);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut runs: Vec<BenchRun> = Vec::with_capacity(modes.len());
    for (i, &mode) in modes.iter().enumerate() {
        let mut c = config.clone();
        c.pool.mode = mode;
        let stream = match &args.stream {
            Some(p) => Some(
                open_stream(p, i == 0)
                    .with_context(|| format!("opening stream {}", p.display()))?,
            ),
            None => None,
        };
        let run = run_bench(&c, stream)?;
        let meta = vec![
            ("mode".to_string(), mode.to_string()),
            ("workers".into(), args.workers.to_string()),
            ("ues".into(), args.ues.to_string()),
            ("tbs".into(), tbs_name(&args.tbs)),
            ("subframes".into(), args.subframes.to_string()),
            ("snr_db".into(), args.snr_db.to_string()),
            ("seed".into(), args.seed.to_string()),
            ("max_iterations".into(), args.max_iterations.to_string()),
            ("early_stop".into(), (!args.no_early_stop).to_string()),
            ("tick".into(), tick_name(args.tick)),
            ("host_cores".into(), cores.to_string()),
            ("started_unix_s".into(), started.to_string()),
            ("records_dropped".into(), run.counts.dropped.to_string()),
        ];
        export_records(
            &run.records,
            &dir.join(format!("records_{mode}.csv")),
            &meta,
        )?;
        export_summary(
            &run.summary,
            &dir.join(format!("summary_{mode}.csv")),
            &meta,
        )?;
        if run.incomplete > 0 {
            warn!("mode {mode}: {} subframes timed out", run.incomplete);
        }
        runs.push(run);
    }

    print_report(&runs);
    println!("\nrecords and summaries written to {}", dir.display());
    Ok(())
}

fn tbs_name(t: &TbsDistribution) -> String {
    match t {
        TbsDistribution::Fixed(n) => n.to_string(),
        TbsDistribution::Uniform(v) => v
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(" "),
    }
}

fn open_stream(path: &PathBuf, first: bool) -> std::io::Result<Box<dyn Write + Send>> {
    let file = if first {
        File::create(path)?
    } else {
        OpenOptions::new().append(true).create(true).open(path)?
    };
    Ok(Box::new(file))
}

fn print_report(runs: &[BenchRun]) {
    println!(
        "{:<5} {:>7} {:>5}  {:>10} {:>10} {:>10} {:>10} {:>8}  {:>10} {:>10}  {:>9} {:>8}",
        "mode",
        "workers",
        "dir",
        "mean_us",
        "p50_us",
        "p99_us",
        "max_us",
        "p99/p50",
        "coding_us",
        "iter",
        "loss",
        "gain"
    );
    let baseline = runs
        .iter()
        .find(|r| r.mode == ParallelismMode::None)
        .and_then(|r| r.summary.latency(Direction::Decode))
        .map(|s| s.mean);
    for r in runs {
        for dir in [Direction::Encode, Direction::Decode] {
            let lat = r.summary.latency(dir).copied().unwrap_or_default();
            let groups: Vec<_> = r
                .summary
                .groups
                .iter()
                .filter(|g| g.direction == dir)
                .collect();
            let ccdus: usize = groups.iter().map(|g| g.coding.count).sum();
            let coding = if ccdus == 0 {
                0.0
            } else {
                groups
                    .iter()
                    .map(|g| g.coding.mean * g.coding.count as f64)
                    .sum::<f64>()
                    / ccdus as f64
            };
            let iter = if ccdus == 0 {
                0.0
            } else {
                groups
                    .iter()
                    .map(|g| g.mean_iterations * g.coding.count as f64)
                    .sum::<f64>()
                    / ccdus as f64
            };
            let (loss, gain) = match dir {
                Direction::Encode => ("-".to_string(), "-".to_string()),
                Direction::Decode => (
                    format!("{:.4}", r.summary.loss_rate),
                    baseline.map_or("-".into(), |b| {
                        format!("{:+.1}%", 100.0 * relative_gain(b, lat.mean))
                    }),
                ),
            };
            println!(
                "{:<5} {:>7} {:>5}  {:>10} {:>10} {:>10} {:>10} {:>8}  {:>10} {:>10}  {:>9} {:>8}",
                r.mode.to_string(),
                r.num_workers,
                &dir.as_str()[..3],
                us(lat.mean),
                us(lat.p50 as f64),
                us(lat.p99 as f64),
                us(lat.max as f64),
                dispersion(&lat),
                us(coding),
                if dir == Direction::Decode {
                    format!("{iter:.2}")
                } else {
                    "-".into()
                },
                loss,
                gain
            );
        }
    }
    println!("\nlatency columns are per subframe (first enqueue to last completion); coding_us is per CCDU");
}

fn dispersion(s: &DelayStats) -> String {
    if s.p50 == 0 {
        "-".into()
    } else {
        format!("{:.2}", s.p99 as f64 / s.p50 as f64)
    }
}
