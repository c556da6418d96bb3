use crate::scalar::Scalar;

use super::{CellConfig, FronthaulError, FunctionalSplit, SLOT_US};

/// Useful OFDM symbol duration `1 / subcarrier spacing`, in µs.
pub fn symbol_duration_us<T: Scalar>(subcarrier_khz: &T) -> T {
    T::from_count(1000) / subcarrier_khz.clone()
}

/// Average cyclic-prefix duration in µs: the slot time left after
/// `symbols_per_slot` useful symbols, spread evenly over those symbols.
pub fn cyclic_prefix_us<T: Scalar>(subcarrier_khz: &T, symbols_per_slot: u32) -> T {
    let n = T::from_count(symbols_per_slot);
    (T::from_ratio(SLOT_US, 1) - symbol_duration_us(subcarrier_khz) * n.clone()) / n
}

/// Required fronthaul bit rate in Mbps for one radio element.
pub fn capacity<T: Scalar>(
    split: FunctionalSplit,
    cfg: &CellConfig<T>,
) -> Result<T, FronthaulError> {
    cfg.validate()?;

    let two = T::from_count(2);
    let m = T::from_count(cfg.bits_per_sample);
    let ant = T::from_count(cfg.antennas);
    let overhead = cfg.coding_factor.clone() * cfg.control_factor.clone();
    let iq = two * m * overhead;

    // Frequency-domain I/Q rate, shared by FS3..FS5.
    let freq_domain =
        || iq.clone() * T::from_count(cfg.n_sc) * cfg.subcarrier_khz.clone() / T::from_count(1000);
    // Modulation symbols carried per subframe, in Mbps.
    let symbol_bits = || {
        T::from_count(cfg.n_sc)
            * T::from_count(cfg.symbols_per_subframe)
            * T::from_count(cfg.modulation_order)
            / T::from_count(1000)
    };

    let rate = match split {
        FunctionalSplit::Fs1 => iq.clone() * cfg.sampling_mhz.clone() * ant,
        FunctionalSplit::Fs2 => {
            let ts = symbol_duration_us(&cfg.subcarrier_khz);
            let tcp = cyclic_prefix_us(&cfg.subcarrier_khz, cfg.symbols_per_subframe / 2);
            iq.clone() * T::from_count(cfg.n_fft) / (ts + tcp) * ant
        }
        FunctionalSplit::Fs3 => freq_domain() * ant,
        FunctionalSplit::Fs4 => freq_domain() * ant * cfg.rb_utilization.clone(),
        FunctionalSplit::Fs5 => freq_domain() * cfg.rb_utilization.clone(),
        FunctionalSplit::Fs6 => symbol_bits(),
        FunctionalSplit::Fs7 => symbol_bits() * cfg.code_rate.clone(),
    };
    Ok(rate)
}

/// Capacity matrix with one row per cell and one column per split.
pub fn capacity_table<T: Scalar>(
    cfgs: &[CellConfig<T>],
    splits: &[FunctionalSplit],
) -> Result<Vec<Vec<T>>, FronthaulError> {
    if cfgs.is_empty() {
        return Err(FronthaulError::EmptyInput("cell"));
    }
    if splits.is_empty() {
        return Err(FronthaulError::EmptyInput("split"));
    }
    cfgs.iter()
        .enumerate()
        .map(|(index, cfg)| {
            splits
                .iter()
                .map(|&sp| capacity(sp, cfg))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| FronthaulError::Cell {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}
