use std::str::FromStr;

use crate::scalar::Scalar;

use super::FronthaulError;

/// Transport direction, which fixes the RAN processing deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkDirection {
    #[default]
    Downlink,
    Uplink,
}

impl LinkDirection {
    pub fn deadline_us(self) -> i64 {
        match self {
            LinkDirection::Downlink => 1000,
            LinkDirection::Uplink => 2000,
        }
    }
}

impl FromStr for LinkDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dl" | "downlink" => Ok(LinkDirection::Downlink),
            "ul" | "uplink" => Ok(LinkDirection::Uplink),
            other => Err(format!("unknown direction {other:?} (expected dl|ul)")),
        }
    }
}

/// Per-km propagation delay in µs for a signal speed in m/s.
pub fn per_km_latency_from_speed(speed_m_per_s: f64) -> f64 {
    1e9 / speed_m_per_s
}

/// Fronthaul path between a radio site and the BBU pool.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget<T> {
    pub distance_km: T,
    pub hops: u32,
    pub per_hop_latency_us: T,
    pub per_km_latency_us: T,
    pub ran_deadline_us: T,
}

/// Outcome of subtracting transport time from the RAN deadline.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessingBudget<T> {
    pub transmission_us: T,
    /// Negative when transport alone exceeds the deadline.
    pub remaining_us: T,
    pub feasible: bool,
}

impl<T: Scalar> LinkBudget<T> {
    /// 50 µs per hop, 7 µs per km, downlink deadline.
    pub fn new(distance_km: T, hops: u32) -> Self {
        Self {
            distance_km,
            hops,
            per_hop_latency_us: T::from_count(50),
            per_km_latency_us: T::from_count(7),
            ran_deadline_us: T::from_ratio(LinkDirection::Downlink.deadline_us(), 1),
        }
    }

    pub fn with_direction(mut self, dir: LinkDirection) -> Self {
        self.ran_deadline_us = T::from_ratio(dir.deadline_us(), 1);
        self
    }

    pub fn validate(&self) -> Result<(), FronthaulError> {
        let zero = T::zero();
        let check = |field, v: &T| {
            if *v < zero {
                Err(FronthaulError::InvalidBudget {
                    field,
                    reason: format!("must be non-negative, got {v}"),
                })
            } else {
                Ok(())
            }
        };
        check("distance_km", &self.distance_km)?;
        check("per_hop_latency_us", &self.per_hop_latency_us)?;
        check("per_km_latency_us", &self.per_km_latency_us)?;
        if self.ran_deadline_us <= zero {
            return Err(FronthaulError::InvalidBudget {
                field: "ran_deadline_us",
                reason: format!("must be positive, got {}", self.ran_deadline_us),
            });
        }
        Ok(())
    }

    /// Propagation plus switching delay, in µs.
    pub fn transmission_time(&self) -> Result<T, FronthaulError> {
        self.validate()?;
        Ok(self.distance_km.clone() * self.per_km_latency_us.clone()
            + T::from_count(self.hops) * self.per_hop_latency_us.clone())
    }

    /// Time left for BBU processing once transport is paid for.
    pub fn remaining_processing_budget(&self) -> Result<ProcessingBudget<T>, FronthaulError> {
        let transmission_us = self.transmission_time()?;
        let remaining_us = self.ran_deadline_us.clone() - transmission_us.clone();
        let feasible = remaining_us >= T::zero();
        Ok(ProcessingBudget {
            transmission_us,
            remaining_us,
            feasible,
        })
    }
}

#[cfg(test)]
mod tests {
    use num_rational::Rational64;
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn forty_km_eight_hops() {
        let b = LinkBudget::<f64>::new(40.0, 8);
        assert_eq!(b.transmission_time().unwrap(), 680.0);
        let r = b.remaining_processing_budget().unwrap();
        assert_eq!(r.remaining_us, 320.0);
        assert!(r.feasible);
    }

    #[test]
    fn zero_path_keeps_the_whole_deadline() {
        let b = LinkBudget::<f64>::new(0.0, 0);
        assert_eq!(b.transmission_time().unwrap(), 0.0);
        assert_eq!(
            b.remaining_processing_budget().unwrap().remaining_us,
            1000.0
        );
        let ul = b.with_direction(LinkDirection::Uplink);
        assert_eq!(
            ul.remaining_processing_budget().unwrap().remaining_us,
            2000.0
        );
    }

    #[test]
    fn ten_km_two_hops() {
        assert_eq!(
            LinkBudget::<f64>::new(10.0, 2).transmission_time().unwrap(),
            170.0
        );
    }

    #[test]
    fn overlong_link_is_infeasible_not_clamped() {
        let r = LinkBudget::<f64>::new(200.0, 8)
            .remaining_processing_budget()
            .unwrap();
        assert_eq!(r.transmission_us, 1800.0);
        assert_eq!(r.remaining_us, -800.0);
        assert!(!r.feasible);
    }

    #[test]
    fn fiber_speed_variant() {
        let per_km = per_km_latency_from_speed(2.1e8);
        assert!((per_km - 4.7619).abs() < 1e-4);
        let mut b = LinkBudget::<f64>::new(40.0, 8);
        b.per_km_latency_us = per_km;
        let t = b.transmission_time().unwrap();
        assert!((t - 590.476).abs() < 1e-3);
    }

    #[test]
    fn negative_fields_rejected() {
        let mut b = LinkBudget::<f64>::new(-1.0, 0);
        assert!(b.transmission_time().is_err());
        b.distance_km = 1.0;
        b.ran_deadline_us = 0.0;
        assert!(b.remaining_processing_budget().is_err());
    }

    proptest! {
        #[test]
        fn additive_in_hops_linear_in_distance(
            km in 0i64..500, extra_km in 0i64..500, hops in 0u32..50, extra in 0u32..50,
        ) {
            let t = |d: i64, h: u32| {
                LinkBudget::new(Rational64::from_integer(d), h).transmission_time().unwrap()
            };
            prop_assert_eq!(t(km + extra_km, hops + extra), t(km, hops) + t(extra_km, extra));
            prop_assert_eq!(t(2 * km, 0), t(km, 0) * Rational64::from_integer(2));
        }
    }
}
