use super::{Bandwidth, FunctionalSplit};

/// Published values are printed with one decimal.
pub const PUBLISHED_TOLERANCE_MBPS: f64 = 0.1;

// Published fronthaul capacity in Mbps, rows FS-I..FS-VII, columns
// 1.4/3/5/10/15/20 MHz, transcribed as printed. The FS-III 20 MHz cell is
// printed as 1140.0; the rate formula gives 1440.0 (the 15 MHz cell, 1080.0,
// agrees with the formula), so that cell is a known misprint.
const PUBLISHED: [[f64; 6]; 7] = [
    [153.6, 307.2, 614.4, 1228.8, 1843.2, 2457.6],
    [143.4, 286.7, 573.4, 1146.9, 1720.3, 2293.8],
    [86.4, 172.8, 360.0, 720.0, 1080.0, 1140.0],
    [60.5, 121.0, 252.0, 504.0, 756.0, 1008.0],
    [30.2, 60.5, 126.0, 252.0, 378.0, 504.0],
    [6.0, 12.1, 25.2, 50.4, 75.6, 100.8],
    [5.5, 11.1, 23.1, 46.2, 69.3, 92.4],
];

const KNOWN_MISPRINTS: [(FunctionalSplit, Bandwidth); 1] =
    [(FunctionalSplit::Fs3, Bandwidth::Mhz20)];

pub fn published_capacity(split: FunctionalSplit, bw: Bandwidth) -> f64 {
    PUBLISHED[split.row()][bw.column()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckVerdict {
    Match,
    /// Disagrees with a cell documented as misprinted.
    KnownDiscrepancy,
    Mismatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellCheck {
    pub split: FunctionalSplit,
    pub bandwidth: Bandwidth,
    pub computed: f64,
    pub published: f64,
    pub delta: f64,
    pub verdict: CheckVerdict,
}

/// Compares one computed rate against the published table. Never alters
/// `computed`.
pub fn compare_with_published(split: FunctionalSplit, bw: Bandwidth, computed: f64) -> CellCheck {
    let published = published_capacity(split, bw);
    let delta = computed - published;
    let verdict = if delta.abs() <= PUBLISHED_TOLERANCE_MBPS {
        CheckVerdict::Match
    } else if KNOWN_MISPRINTS.contains(&(split, bw)) {
        CheckVerdict::KnownDiscrepancy
    } else {
        CheckVerdict::Mismatch
    };
    CellCheck {
        split,
        bandwidth: bw,
        computed,
        published,
        delta,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fronthaul::{capacity, CellConfig, RbTable};

    #[test]
    fn reference_profiles_reproduce_the_table() {
        for bw in Bandwidth::ALL {
            let cell = CellConfig::<f64>::reference(bw, RbTable::Reference);
            for sp in FunctionalSplit::ALL {
                let c = compare_with_published(sp, bw, capacity(sp, &cell).unwrap());
                let expected = if (sp, bw) == (FunctionalSplit::Fs3, Bandwidth::Mhz20) {
                    CheckVerdict::KnownDiscrepancy
                } else {
                    CheckVerdict::Match
                };
                assert_eq!(c.verdict, expected, "{sp} @ {bw} MHz: {c:?}");
            }
        }
    }

    #[test]
    fn lte_three_mhz_departs_from_the_table() {
        let cell = CellConfig::<f64>::reference(Bandwidth::Mhz3, RbTable::Lte);
        let c = compare_with_published(
            FunctionalSplit::Fs6,
            Bandwidth::Mhz3,
            capacity(FunctionalSplit::Fs6, &cell).unwrap(),
        );
        assert_eq!(c.verdict, CheckVerdict::Mismatch);
        assert!((c.computed - 15.12).abs() < 1e-9);
    }
}
