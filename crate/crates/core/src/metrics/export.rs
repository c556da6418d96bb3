//! CSV export of KPI records and summaries.
//!
//! Record files carry one CCDU per line in [`RECORD_COLUMNS`] order, all
//! times as integer nanoseconds. Lines starting with `#` are metadata
//! (`# key=value`) and are skipped by the reader. Empty `ue`, `cb_index` or
//! `worker` fields mean "not applicable".

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::summary::DelayStats;
use super::{KpiRecord, KpiSummary, Outcome};

pub const RECORD_COLUMNS: [&str; 19] = [
    "ccdu_id",
    "subframe",
    "ue",
    "cb_index",
    "granularity",
    "direction",
    "worker",
    "outcome",
    "t_enqueue_ns",
    "t_start_ns",
    "t_code_start_ns",
    "t_code_end_ns",
    "t_end_ns",
    "queue_wait_ns",
    "conditioning_ns",
    "iterations",
    "code_blocks",
    "tb_total",
    "tb_failed",
];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

pub(crate) fn write_header<W: Write>(w: &mut csv::Writer<W>) -> Result<(), csv::Error> {
    w.write_record(RECORD_COLUMNS)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub(crate) fn write_row<W: Write>(w: &mut csv::Writer<W>, r: &KpiRecord) -> Result<(), csv::Error> {
    w.write_record([
        r.ccdu_id.to_string(),
        r.subframe.to_string(),
        opt(r.ue),
        opt(r.cb_index),
        r.granularity.to_string(),
        r.direction.to_string(),
        opt(r.worker),
        r.outcome.to_string(),
        r.t_enqueue.to_string(),
        r.t_start.to_string(),
        r.t_code_start.to_string(),
        r.t_code_end.to_string(),
        r.t_end.to_string(),
        r.queue_wait().to_string(),
        r.conditioning().to_string(),
        r.iterations.to_string(),
        r.code_blocks.to_string(),
        r.tb_total.to_string(),
        r.tb_failed.to_string(),
    ])
}

fn write_meta<W: Write>(w: &mut W, meta: &[(String, String)]) -> std::io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Writes metadata lines, the header and one line per record.
pub fn write_records<W: Write>(
    out: W,
    records: &[KpiRecord],
    meta: &[(String, String)],
) -> Result<(), csv::Error> {
    let mut out = out;
    write_meta(&mut out, meta)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    write_header(&mut w)?;
    for r in records {
        write_row(&mut w, r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_records(
    records: &[KpiRecord],
    path: &Path,
    meta: &[(String, String)],
) -> Result<(), ExportError> {
    let file = File::create(path).map_err(|source| ExportError::Io {
        path: path.into(),
        source,
    })?;
    write_records(BufWriter::new(file), records, meta).map_err(|source| ExportError::Csv {
        path: path.into(),
        source,
    })
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    let raw = row
        .get(i)
        .ok_or_else(|| format!("missing column {}", RECORD_COLUMNS[i]))?;
    raw.parse()
        .map_err(|e| format!("{}: {e} ({raw:?})", RECORD_COLUMNS[i]))
}

fn opt_field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    match row.get(i) {
        Some("") => Ok(None),
        _ => field(row, i).map(Some),
    }
}

fn parse_row(row: &csv::StringRecord) -> Result<KpiRecord, String> {
    let r = KpiRecord {
        ccdu_id: field(row, 0)?,
        subframe: field(row, 1)?,
        ue: opt_field(row, 2)?,
        cb_index: opt_field(row, 3)?,
        granularity: field(row, 4)?,
        direction: field(row, 5)?,
        worker: opt_field(row, 6)?,
        outcome: field::<Outcome>(row, 7)?,
        t_enqueue: field(row, 8)?,
        t_start: field(row, 9)?,
        t_code_start: field(row, 10)?,
        t_code_end: field(row, 11)?,
        t_end: field(row, 12)?,
        iterations: field(row, 15)?,
        code_blocks: field(row, 16)?,
        tb_total: field(row, 17)?,
        tb_failed: field(row, 18)?,
    };
    if !r.timestamps_monotone() {
        return Err("timestamps not monotone".into());
    }
    if field::<u64>(row, 13)? != r.queue_wait() || field::<u64>(row, 14)? != r.conditioning() {
        return Err("derived columns disagree with timestamps".into());
    }
    Ok(r)
}

/// Parses records written by [`write_records`]. `path` is only used in errors.
pub fn parse_records<R: Read>(input: R, path: &Path) -> Result<Vec<KpiRecord>, ExportError> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(input);
    let header = rd
        .headers()
        .map_err(|source| ExportError::Csv {
            path: path.into(),
            source,
        })?
        .clone();
    if header.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(ExportError::Parse {
            path: path.into(),
            line: 1,
            message: "unexpected header".into(),
        });
    }
    rd.records()
        .map(|row| {
            let row = row.map_err(|source| ExportError::Csv {
                path: path.into(),
                source,
            })?;
            let line = row.position().map_or(0, |p| p.line());
            parse_row(&row).map_err(|message| ExportError::Parse {
                path: path.into(),
                line,
                message,
            })
        })
        .collect()
}

pub fn read_records(path: &Path) -> Result<Vec<KpiRecord>, ExportError> {
    let file = File::open(path).map_err(|source| ExportError::Io {
        path: path.into(),
        source,
    })?;
    parse_records(file, path)
}

/// One line per delay statistic, then loss and per-worker job counts.
///
/// Columns: `scope,direction,granularity,metric,count,mean_ns,p50_ns,p95_ns,p99_ns,max_ns`.
/// Loss rows put lost TBs in `count` and the rate in `mean_ns`; worker rows
/// put the job count in `count`.
pub fn export_summary(
    summary: &KpiSummary,
    path: &Path,
    meta: &[(String, String)],
) -> Result<(), ExportError> {
    let io = |source| ExportError::Io {
        path: path.into(),
        source,
    };
    let csv_err = |source| ExportError::Csv {
        path: path.into(),
        source,
    };
    let mut file = BufWriter::new(File::create(path).map_err(io)?);
    write_meta(&mut file, meta).map_err(io)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record([
        "scope",
        "direction",
        "granularity",
        "metric",
        "count",
        "mean_ns",
        "p50_ns",
        "p95_ns",
        "p99_ns",
        "max_ns",
    ])
    .map_err(csv_err)?;
    let stats_row = |scope: &str, dir: String, gran: String, metric: &str, s: &DelayStats| {
        vec![
            scope.to_string(),
            dir,
            gran,
            metric.to_string(),
            s.count.to_string(),
            format!("{:.1}", s.mean),
            s.p50.to_string(),
            s.p95.to_string(),
            s.p99.to_string(),
            s.max.to_string(),
        ]
    };
    for g in &summary.groups {
        for (metric, s) in g.delays() {
            w.write_record(stats_row(
                "ccdu",
                g.direction.to_string(),
                g.granularity.to_string(),
                metric,
                s,
            ))
            .map_err(csv_err)?;
        }
    }
    for (dir, s) in &summary.subframe_latency {
        w.write_record(stats_row(
            "subframe",
            dir.to_string(),
            String::new(),
            "latency",
            s,
        ))
        .map_err(csv_err)?;
    }
    w.write_record([
        "loss".to_string(),
        "decode".to_string(),
        String::new(),
        "loss_rate".to_string(),
        summary.tbs_lost.to_string(),
        format!("{:.6}", summary.loss_rate),
        String::new(),
        String::new(),
        String::new(),
        summary.tbs_total.to_string(),
    ])
    .map_err(csv_err)?;
    for (worker, jobs) in &summary.worker_jobs {
        w.write_record([
            "worker".to_string(),
            String::new(),
            String::new(),
            format!("worker_{worker}"),
            jobs.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
