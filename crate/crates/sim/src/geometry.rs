//! Temporal layout of a symbol: slot positions, jitter, filter window.

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Time-bin geometry of one symbol.
///
/// Slots sit at multiples of `bin_separation_s` from the symbol epoch;
/// the Z alphabet uses `z_slots` slots, the interferometric X readout
/// spreads over `x_slots`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimebinGeometry {
    pub d: u32,
    /// Symbol period in seconds (one clock cycle).
    pub clock_period_s: f64,
    /// Separation between adjacent time bins in seconds.
    pub bin_separation_s: f64,
    pub z_slots: u32,
    pub x_slots: u32,
    /// RMS detection timing jitter in seconds.
    pub jitter_sigma_s: f64,
    /// Arrival-time acceptance window around each bin center.
    pub filter_window_s: f64,
}

impl TimebinGeometry {
    /// Default layout for a dimension at a given symbol rate: 400 ps
    /// bins for 2D, 200 ps for 4D (halving with the alphabet), 28.9 ps
    /// jitter, 100 ps filter window.
    pub fn for_dimension(d: u32, symbol_rate_hz: f64) -> Self {
        let (z_slots, x_slots) = match d {
            2 => (2, 3),
            4 => (5, 6),
            _ => (d + 1, d + 2),
        };
        TimebinGeometry {
            d,
            clock_period_s: 1.0 / symbol_rate_hz,
            bin_separation_s: 400e-12 * 2.0 / d as f64,
            z_slots,
            x_slots,
            jitter_sigma_s: 28.9e-12,
            filter_window_s: 100e-12,
        }
    }

    pub fn max_slots(&self) -> u32 {
        self.z_slots.max(self.x_slots)
    }

    pub fn slot_time(&self, slot: u32) -> f64 {
        slot as f64 * self.bin_separation_s
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.bin_separation_s > self.filter_window_s && self.filter_window_s > 0.0) {
            return Err(SimError::invalid("need bin_separation > filter_window > 0"));
        }
        if self.max_slots() as f64 * self.bin_separation_s > self.clock_period_s {
            return Err(SimError::invalid("slot packet exceeds the clock period"));
        }
        if self.jitter_sigma_s < 0.0 {
            return Err(SimError::invalid("jitter_sigma_s must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fit_in_clock_period() {
        for (d, rate) in [(2u32, 500e6), (4, 250e6), (4, 500e6)] {
            let g = TimebinGeometry::for_dimension(d, rate);
            g.validate().unwrap();
        }
    }

    #[test]
    fn bin_separation_scales_with_dimension() {
        let g2 = TimebinGeometry::for_dimension(2, 500e6);
        let g4 = TimebinGeometry::for_dimension(4, 250e6);
        assert_eq!(g2.bin_separation_s, 400e-12);
        assert_eq!(g4.bin_separation_s, 200e-12);
        assert_eq!((g2.z_slots, g2.x_slots), (2, 3));
        assert_eq!((g4.z_slots, g4.x_slots), (5, 6));
    }
}
