use anyhow::Result;
use cranpool_core::fronthaul::{LinkBudget, LinkDirection};
use num_rational::Rational64;

use crate::ratio::{show, Ratio};
use crate::usage;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Fronthaul length in km.
    #[arg(long, default_value = "0")]
    km: Ratio,
    /// Switching hops on the path.
    #[arg(long, default_value_t = 0)]
    hops: u32,
    #[arg(long, default_value = "50")]
    us_per_hop: Ratio,
    /// Propagation delay per km [default: 7].
    #[arg(long, conflicts_with = "fiber_speed")]
    us_per_km: Option<Ratio>,
    /// Signal speed in m/s, instead of --us-per-km.
    #[arg(long)]
    fiber_speed: Option<Ratio>,
    /// `dl` (1000 µs deadline) or `ul` (2000 µs).
    #[arg(long, default_value = "dl")]
    direction: LinkDirection,
    /// Overrides the direction's deadline.
    #[arg(long)]
    deadline_us: Option<Ratio>,
}

pub fn run(args: Args) -> Result<()> {
    let mut link =
        LinkBudget::<Rational64>::new(args.km.0, args.hops).with_direction(args.direction);
    link.per_hop_latency_us = args.us_per_hop.0;
    if let Some(v) = args.us_per_km {
        link.per_km_latency_us = v.0;
    }
    if let Some(speed) = args.fiber_speed {
        if speed.0 <= Rational64::from_integer(0) {
            return Err(usage("--fiber-speed must be positive"));
        }
        link.per_km_latency_us = Rational64::from_integer(1_000_000_000) / speed.0;
    }
    if let Some(v) = args.deadline_us {
        link.ran_deadline_us = v.0;
    }
    let b = link
        .remaining_processing_budget()
        .map_err(|e| usage(e.to_string()))?;

    println!("{:<14} {} km", "distance", show(link.distance_km));
    println!(
        "{:<14} {} x {} µs",
        "hops",
        link.hops,
        show(link.per_hop_latency_us)
    );
    println!(
        "{:<14} {} µs/km",
        "propagation",
        show(link.per_km_latency_us)
    );
    println!("{:<14} {} µs", "transmission", show(b.transmission_us));
    println!("{:<14} {} µs", "deadline", show(link.ran_deadline_us));
    println!("{:<14} {} µs", "remaining", show(b.remaining_us));
    println!(
        "{:<14} {}",
        "verdict",
        if b.feasible { "feasible" } else { "infeasible" }
    );
    Ok(())
}
