use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use cranpool_core::fronthaul::{
    capacity_table, compare_with_published, Bandwidth, CellConfig, CheckVerdict, FunctionalSplit,
    RbTable,
};
use cranpool_core::scalar::Scalar;
use num_rational::Rational64;

use crate::ratio::Ratio;
use crate::usage;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Bandwidths in MHz, comma separated, or `all` (1.4,3,5,10,15,20).
    #[arg(long, default_value = "all")]
    bw: String,
    /// Functional splits (fs1..fs7, FS-I..FS-VII or 1..7), or `all`.
    #[arg(long, visible_alias = "splits", default_value = "all")]
    split: String,
    /// Compare against the embedded published table and report deltas.
    #[arg(long)]
    check_paper: bool,
    /// Also write the table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// RB count per bandwidth: `reference` (12 RBs at 3 MHz) or `lte` (15).
    #[arg(long, default_value = "reference")]
    rb_table: RbTable,
    /// Evaluate with exact rational arithmetic and print fractions.
    #[arg(long)]
    exact: bool,
    /// Bits per I or Q sample.
    #[arg(long)]
    bits_per_sample: Option<u32>,
    #[arg(long)]
    antennas: Option<u32>,
    /// Bits per modulation symbol.
    #[arg(long)]
    modulation_bits: Option<u32>,
    /// Mean RB utilization, e.g. 7/10 or 0.7.
    #[arg(long)]
    rb_utilization: Option<Ratio>,
    #[arg(long)]
    code_rate: Option<Ratio>,
    /// Line coding overhead, e.g. 10/8.
    #[arg(long)]
    coding_factor: Option<Ratio>,
    /// Control word overhead, e.g. 16/15.
    #[arg(long)]
    control_factor: Option<Ratio>,
}

fn parse_list<T>(raw: &str, all: &[T], parse: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>>
where
    T: Copy,
{
    if raw.trim().eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    raw.split(',').map(|p| parse(p).map_err(usage)).collect()
}

impl Args {
    fn cell<T: Scalar>(&self, bw: Bandwidth) -> CellConfig<T> {
        let mut c = CellConfig::<T>::reference(bw, self.rb_table);
        if let Some(v) = self.bits_per_sample {
            c.bits_per_sample = v;
        }
        if let Some(v) = self.antennas {
            c.antennas = v;
        }
        if let Some(v) = self.modulation_bits {
            c.modulation_order = v;
        }
        if let Some(v) = self.rb_utilization {
            c.rb_utilization = v.to();
        }
        if let Some(v) = self.code_rate {
            c.code_rate = v.to();
        }
        if let Some(v) = self.coding_factor {
            c.coding_factor = v.to();
        }
        if let Some(v) = self.control_factor {
            c.control_factor = v.to();
        }
        c
    }
}

pub fn run(args: Args) -> Result<()> {
    let bws = parse_list(&args.bw, &Bandwidth::ALL, |s| {
        s.parse().map_err(|e| format!("{e}"))
    })?;
    let splits = parse_list(&args.split, &FunctionalSplit::ALL, |s| {
        s.parse().map_err(|e| format!("{e}"))
    })?;

    // Exact values are always computed; floats come from them so --exact only
    // changes presentation.
    let cells: Vec<CellConfig<Rational64>> = bws.iter().map(|&bw| args.cell(bw)).collect();
    let per_cell = capacity_table(&cells, &splits).map_err(|e| usage(e.to_string()))?;
    // rows by split, columns by bandwidth
    let exact: Vec<Vec<Rational64>> = (0..splits.len())
        .map(|i| per_cell.iter().map(|row| row[i]).collect())
        .collect();
    let table: Vec<Vec<f64>> = exact
        .iter()
        .map(|row| row.iter().map(Scalar::to_f64).collect())
        .collect();

    let fmt = |i: usize, j: usize| {
        if args.exact {
            exact[i][j].to_string()
        } else {
            format!("{:.1}", table[i][j])
        }
    };
    let width = (0..splits.len())
        .flat_map(|i| (0..bws.len()).map(move |j| (i, j)))
        .map(|(i, j)| fmt(i, j).len())
        .max()
        .unwrap_or(0)
        .max(9);
    print!("{:<8}", "Mbps");
    for bw in &bws {
        print!(" {:>width$}", format!("{bw} MHz"));
    }
    println!();
    for (i, sp) in splits.iter().enumerate() {
        print!("{:<8}", sp.to_string());
        for j in 0..bws.len() {
            print!(" {:>width$}", fmt(i, j));
        }
        println!();
    }

    if let Some(path) = &args.csv {
        write_csv(path, &splits, &bws, &exact)
            .with_context(|| format!("writing {}", path.display()))?;
    }

    if args.check_paper {
        println!();
        println!(
            "{:<8} {:>6} {:>10} {:>10} {:>8}  verdict",
            "split", "MHz", "computed", "published", "delta"
        );
        let (mut matched, mut known, mut mismatched) = (0, 0, 0);
        for (i, &sp) in splits.iter().enumerate() {
            for (j, &bw) in bws.iter().enumerate() {
                let c = compare_with_published(sp, bw, table[i][j]);
                let verdict = match c.verdict {
                    CheckVerdict::Match => {
                        matched += 1;
                        "match"
                    }
                    CheckVerdict::KnownDiscrepancy => {
                        known += 1;
                        "known misprint in published table"
                    }
                    CheckVerdict::Mismatch => {
                        mismatched += 1;
                        "MISMATCH"
                    }
                };
                println!(
                    "{:<8} {:>6} {:>10.1} {:>10.1} {:>+8.2}  {verdict}",
                    sp.to_string(),
                    bw.to_string(),
                    c.computed,
                    c.published,
                    c.delta
                );
            }
        }
        println!("{matched} match, {known} known discrepancy, {mismatched} mismatch");
    }
    Ok(())
}

fn write_csv(
    path: &PathBuf,
    splits: &[FunctionalSplit],
    bws: &[Bandwidth],
    exact: &[Vec<Rational64>],
) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "split,bandwidth_mhz,capacity_mbps,exact")?;
    for (i, sp) in splits.iter().enumerate() {
        for (j, bw) in bws.iter().enumerate() {
            writeln!(
                w,
                "{sp},{bw},{:.6},{}",
                Scalar::to_f64(&exact[i][j]),
                exact[i][j]
            )?;
        }
    }
    w.flush()
}
