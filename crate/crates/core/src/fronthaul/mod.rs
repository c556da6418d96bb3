//! Fronthaul dimensioning for the intra-PHY functional splits.
//!
//! Rates are in Mbps, times in µs. All functions are pure and generic over
//! [`Scalar`], so the same formulas run in `f64` for presentation and in
//! [`num_rational::Rational64`] when exact ratios are wanted.

mod budget;
mod capacity;
mod published;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;

pub use budget::{per_km_latency_from_speed, LinkBudget, LinkDirection, ProcessingBudget};
pub use capacity::{capacity, capacity_table, cyclic_prefix_us, symbol_duration_us};
pub use published::{
    compare_with_published, published_capacity, CellCheck, CheckVerdict, PUBLISHED_TOLERANCE_MBPS,
};

/// Subcarriers per resource block.
pub const SUBCARRIERS_PER_RB: u32 = 12;
/// Slot duration with normal cyclic prefix.
pub const SLOT_US: i64 = 500;
/// Nominal chip rate in MHz. Documentation only; no rate formula uses it.
pub const NOMINAL_CHIP_RATE_MHZ: f64 = 3.84;
/// Typical oversampling factor `N_FFT / N_sc`. Documentation only.
pub const TYPICAL_OVERSAMPLING: f64 = 1.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FronthaulError {
    #[error("invalid cell configuration: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid link budget: {field} {reason}")]
    InvalidBudget { field: &'static str, reason: String },
    #[error("empty {0} list")]
    EmptyInput(&'static str),
    #[error("cell #{index}: {source}")]
    Cell {
        index: usize,
        #[source]
        source: Box<FronthaulError>,
    },
    #[error("unsupported cell bandwidth {0} MHz (expected one of 1.4, 3, 5, 10, 15, 20)")]
    UnsupportedBandwidth(String),
    #[error("unknown functional split {0:?} (expected fs1..fs7)")]
    UnknownSplit(String),
}

/// LTE channel bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bandwidth {
    Mhz1_4,
    Mhz3,
    Mhz5,
    Mhz10,
    Mhz15,
    Mhz20,
}

impl Bandwidth {
    pub const ALL: [Bandwidth; 6] = [
        Bandwidth::Mhz1_4,
        Bandwidth::Mhz3,
        Bandwidth::Mhz5,
        Bandwidth::Mhz10,
        Bandwidth::Mhz15,
        Bandwidth::Mhz20,
    ];

    pub fn mhz(self) -> f64 {
        match self {
            Bandwidth::Mhz1_4 => 1.4,
            Bandwidth::Mhz3 => 3.0,
            Bandwidth::Mhz5 => 5.0,
            Bandwidth::Mhz10 => 10.0,
            Bandwidth::Mhz15 => 15.0,
            Bandwidth::Mhz20 => 20.0,
        }
    }

    pub fn fft_size(self) -> u32 {
        match self {
            Bandwidth::Mhz1_4 => 128,
            Bandwidth::Mhz3 => 256,
            Bandwidth::Mhz5 => 512,
            Bandwidth::Mhz10 => 1024,
            Bandwidth::Mhz15 => 1536,
            Bandwidth::Mhz20 => 2048,
        }
    }

    /// Resource blocks for this bandwidth under the given mapping.
    pub fn resource_blocks(self, table: RbTable) -> u32 {
        match (self, table) {
            (Bandwidth::Mhz1_4, _) => 6,
            (Bandwidth::Mhz3, RbTable::Reference) => 12,
            (Bandwidth::Mhz3, RbTable::Lte) => 15,
            (Bandwidth::Mhz5, _) => 25,
            (Bandwidth::Mhz10, _) => 50,
            (Bandwidth::Mhz15, _) => 75,
            (Bandwidth::Mhz20, _) => 100,
        }
    }

    pub(crate) fn column(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Mhz1_4 => f.write_str("1.4"),
            other => write!(f, "{}", other.mhz() as u32),
        }
    }
}

impl FromStr for Bandwidth {
    type Err = FronthaulError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s
            .trim()
            .trim_end_matches("MHz")
            .trim_end_matches("mhz")
            .trim();
        Ok(match t {
            "1.4" => Bandwidth::Mhz1_4,
            "3" | "3.0" => Bandwidth::Mhz3,
            "5" | "5.0" => Bandwidth::Mhz5,
            "10" | "10.0" => Bandwidth::Mhz10,
            "15" | "15.0" => Bandwidth::Mhz15,
            "20" | "20.0" => Bandwidth::Mhz20,
            _ => return Err(FronthaulError::UnsupportedBandwidth(s.to_string())),
        })
    }
}

/// Bandwidth to resource-block mapping.
///
/// `Reference` reproduces the published capacity table, whose 3 MHz column
/// corresponds to 12 RBs (144 subcarriers). `Lte` uses the 15 RBs of the
/// 3GPP 3 MHz carrier. The two agree at every other bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RbTable {
    #[default]
    Reference,
    Lte,
}

impl FromStr for RbTable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reference" | "published" => Ok(RbTable::Reference),
            "lte" | "3gpp" => Ok(RbTable::Lte),
            other => Err(format!(
                "unknown RB table {other:?} (expected reference|lte)"
            )),
        }
    }
}

/// The seven intra-PHY functional splits, FS1 (CPRI-like I/Q) to FS7
/// (decoded bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionalSplit {
    Fs1,
    Fs2,
    Fs3,
    Fs4,
    Fs5,
    Fs6,
    Fs7,
}

impl FunctionalSplit {
    pub const ALL: [FunctionalSplit; 7] = [
        FunctionalSplit::Fs1,
        FunctionalSplit::Fs2,
        FunctionalSplit::Fs3,
        FunctionalSplit::Fs4,
        FunctionalSplit::Fs5,
        FunctionalSplit::Fs6,
        FunctionalSplit::Fs7,
    ];

    /// 1-based split number.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn roman(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI", "VII"][self as usize]
    }

    pub(crate) fn row(self) -> usize {
        self as usize
    }
}

impl fmt::Display for FunctionalSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FS-{}", self.roman())
    }
}

impl FromStr for FunctionalSplit {
    type Err = FronthaulError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let tail = lower
            .strip_prefix("fs-")
            .or_else(|| lower.strip_prefix("fs"))
            .unwrap_or(&lower);
        let by_number = tail.parse::<u8>().ok().filter(|n| (1..=7).contains(n));
        let by_roman = FunctionalSplit::ALL
            .iter()
            .position(|sp| sp.roman().eq_ignore_ascii_case(tail))
            .map(|i| i as u8 + 1);
        by_number
            .or(by_roman)
            .map(|n| FunctionalSplit::ALL[usize::from(n - 1)])
            .ok_or_else(|| FronthaulError::UnknownSplit(s.to_string()))
    }
}

/// Radio parameters entering the split rate formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct CellConfig<T> {
    pub bandwidth: Bandwidth,
    /// FFT samples per OFDM symbol.
    pub n_fft: u32,
    pub n_rb: u32,
    /// Occupied subcarriers, `12 * n_rb`.
    pub n_sc: u32,
    /// Subcarrier spacing in kHz.
    pub subcarrier_khz: T,
    /// Bits per I or Q sample.
    pub bits_per_sample: u32,
    /// Line coding overhead, 10/8 or 66/64.
    pub coding_factor: T,
    /// Control word overhead, 16/15 for CPRI.
    pub control_factor: T,
    pub antennas: u32,
    /// Mean RB utilization in `[0, 1]`.
    pub rb_utilization: T,
    /// Bits per modulation symbol.
    pub modulation_order: u32,
    /// Channel code rate in `(0, 1]`.
    pub code_rate: T,
    pub symbols_per_subframe: u32,
    /// Sampling frequency in MHz, `n_fft * subcarrier_khz / 1000`.
    pub sampling_mhz: T,
}

impl<T: Scalar> CellConfig<T> {
    /// Reference cell for a bandwidth: 15 bits/sample, 10/8 line coding,
    /// 16/15 control, 2 antennas, 70% load, 64QAM, code rate 11/12,
    /// 14 symbols per subframe at 15 kHz.
    pub fn reference(bandwidth: Bandwidth, table: RbTable) -> Self {
        let n_fft = bandwidth.fft_size();
        let n_rb = bandwidth.resource_blocks(table);
        Self {
            bandwidth,
            n_fft,
            n_rb,
            n_sc: SUBCARRIERS_PER_RB * n_rb,
            subcarrier_khz: T::from_count(15),
            bits_per_sample: 15,
            coding_factor: T::from_ratio(10, 8),
            control_factor: T::from_ratio(16, 15),
            antennas: 2,
            rb_utilization: T::from_ratio(7, 10),
            modulation_order: 6,
            code_rate: T::from_ratio(11, 12),
            symbols_per_subframe: 14,
            sampling_mhz: T::from_ratio(i64::from(n_fft) * 15, 1000),
        }
    }

    /// Sets the RB count and keeps `n_sc` consistent.
    pub fn with_resource_blocks(mut self, n_rb: u32) -> Self {
        self.n_rb = n_rb;
        self.n_sc = SUBCARRIERS_PER_RB * n_rb;
        self
    }

    pub fn validate(&self) -> Result<(), FronthaulError> {
        let bad = |field, reason: String| Err(FronthaulError::InvalidConfig { field, reason });
        let zero = T::zero();
        let one = T::one();
        if self.n_sc != SUBCARRIERS_PER_RB * self.n_rb {
            return bad(
                "n_sc",
                format!(
                    "must equal 12 * n_rb = {}, got {}",
                    SUBCARRIERS_PER_RB * self.n_rb,
                    self.n_sc
                ),
            );
        }
        if self.n_rb == 0 {
            return bad("n_rb", "must be positive".into());
        }
        if self.n_fft == 0 {
            return bad("n_fft", "must be positive".into());
        }
        if self.subcarrier_khz <= zero {
            return bad(
                "subcarrier_khz",
                format!("must be positive, got {}", self.subcarrier_khz),
            );
        }
        let expected_fs =
            T::from_count(self.n_fft) * self.subcarrier_khz.clone() / T::from_count(1000);
        if !self.sampling_mhz.approx_eq(&expected_fs) {
            return bad(
                "sampling_mhz",
                format!(
                    "must equal n_fft * subcarrier spacing = {expected_fs}, got {}",
                    self.sampling_mhz
                ),
            );
        }
        if self.bits_per_sample == 0 {
            return bad("bits_per_sample", "must be positive".into());
        }
        if self.coding_factor <= zero {
            return bad(
                "coding_factor",
                format!("must be positive, got {}", self.coding_factor),
            );
        }
        if self.control_factor <= zero {
            return bad(
                "control_factor",
                format!("must be positive, got {}", self.control_factor),
            );
        }
        if self.antennas == 0 {
            return bad("antennas", "must be at least 1".into());
        }
        if self.rb_utilization < zero || self.rb_utilization > one {
            return bad(
                "rb_utilization",
                format!("must lie in [0, 1], got {}", self.rb_utilization),
            );
        }
        if ![2, 4, 6, 8].contains(&self.modulation_order) {
            return bad(
                "modulation_order",
                format!("must be one of 2, 4, 6, 8, got {}", self.modulation_order),
            );
        }
        if self.code_rate <= zero || self.code_rate > one {
            return bad(
                "code_rate",
                format!("must lie in (0, 1], got {}", self.code_rate),
            );
        }
        if self.symbols_per_subframe == 0 || self.symbols_per_subframe % 2 != 0 {
            return bad(
                "symbols_per_subframe",
                format!(
                    "must be a positive even count, got {}",
                    self.symbols_per_subframe
                ),
            );
        }
        let per_slot = T::from_count(self.symbols_per_subframe / 2);
        let ts = symbol_duration_us(&self.subcarrier_khz);
        if per_slot * ts > T::from_ratio(SLOT_US, 1) {
            return bad(
                "symbols_per_subframe",
                "useful symbol time exceeds the 500 µs slot".into(),
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_parsing_accepts_common_spellings() {
        for (s, want) in [
            ("fs1", FunctionalSplit::Fs1),
            ("FS6", FunctionalSplit::Fs6),
            ("FS-VII", FunctionalSplit::Fs7),
            ("3", FunctionalSplit::Fs3),
            ("fs-iv", FunctionalSplit::Fs4),
        ] {
            assert_eq!(s.parse::<FunctionalSplit>().unwrap(), want);
        }
        assert!("fs8".parse::<FunctionalSplit>().is_err());
        assert!("fs0".parse::<FunctionalSplit>().is_err());
    }

    #[test]
    fn bandwidth_parsing() {
        assert_eq!("1.4".parse::<Bandwidth>().unwrap(), Bandwidth::Mhz1_4);
        assert_eq!("20MHz".parse::<Bandwidth>().unwrap(), Bandwidth::Mhz20);
        assert!(matches!(
            "7".parse::<Bandwidth>(),
            Err(FronthaulError::UnsupportedBandwidth(_))
        ));
        assert_eq!(Bandwidth::Mhz1_4.to_string(), "1.4");
        assert_eq!(Bandwidth::Mhz15.to_string(), "15");
    }

    #[test]
    fn reference_cells_validate() {
        for bw in Bandwidth::ALL {
            for table in [RbTable::Reference, RbTable::Lte] {
                CellConfig::<f64>::reference(bw, table).validate().unwrap();
            }
        }
    }

    #[test]
    fn twenty_mhz_matches_symbol_table() {
        let c = CellConfig::<f64>::reference(Bandwidth::Mhz20, RbTable::Reference);
        assert_eq!(c.n_fft, 2048);
        assert_eq!(c.n_rb, 100);
        assert_eq!(c.n_sc, 1200);
        assert!((c.sampling_mhz - 30.72).abs() < 1e-12);
    }

    #[test]
    fn invariant_violations_are_rejected() {
        let base = CellConfig::<f64>::reference(Bandwidth::Mhz10, RbTable::Reference);

        let mut c = base.clone();
        c.n_sc = 601;
        assert!(matches!(
            c.validate(),
            Err(FronthaulError::InvalidConfig { field: "n_sc", .. })
        ));

        let mut c = base.clone();
        c.rb_utilization = 1.2;
        assert!(matches!(
            c.validate(),
            Err(FronthaulError::InvalidConfig {
                field: "rb_utilization",
                ..
            })
        ));

        let mut c = base.clone();
        c.modulation_order = 3;
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.antennas = 0;
        assert!(c.validate().is_err());

        let mut c = base.clone();
        c.sampling_mhz = 30.72;
        assert!(matches!(
            c.validate(),
            Err(FronthaulError::InvalidConfig {
                field: "sampling_mhz",
                ..
            })
        ));

        let mut c = base;
        c.code_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn lte_table_differs_only_at_three_mhz() {
        for bw in Bandwidth::ALL {
            let same = bw.resource_blocks(RbTable::Reference) == bw.resource_blocks(RbTable::Lte);
            assert_eq!(same, bw != Bandwidth::Mhz3, "{bw}");
        }
    }
}
