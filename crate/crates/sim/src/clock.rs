//! Receiver clock error model: static offset, fractional frequency
//! offset with linear drift, random-walk frequency noise, and white
//! phase noise per tag.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    /// Static timing offset in seconds.
    pub offset_s: f64,
    /// Initial fractional frequency offset Δf/f.
    pub fractional_offset: f64,
    /// Linear drift of the fractional frequency, 1/s.
    pub drift_rate: f64,
    /// Random-walk phase noise intensity: Var[x(t)-x(s)] = psd·|t-s| (s²/s).
    pub random_walk_psd: f64,
    /// White phase noise per tag, seconds RMS.
    pub white_pm_sigma: f64,
}

impl ClockModel {
    pub fn ideal() -> Self {
        ClockModel {
            offset_s: 0.0,
            fractional_offset: 0.0,
            drift_rate: 0.0,
            random_walk_psd: 0.0,
            white_pm_sigma: 0.0,
        }
    }

    /// Free-running quartz against a rubidium reference: 1e-9 fractional
    /// offset, slow drift, a little random walk, tens of ps white noise.
    pub fn quartz() -> Self {
        ClockModel {
            offset_s: 0.0,
            fractional_offset: 1e-9,
            drift_rate: 1e-12,
            random_walk_psd: 1e-24,
            white_pm_sigma: 30e-12,
        }
    }

    pub fn is_ideal(&self) -> bool {
        *self == Self::ideal()
    }

    /// Deterministic part of the time error at true time `t`.
    pub fn systematic_error(&self, t: f64) -> f64 {
        self.offset_s + self.fractional_offset * t + 0.5 * self.drift_rate * t * t
    }
}

/// Applies a [`ClockModel`] to a monotone stream of true event times.
pub struct ClockTransform<'a, R: Rng> {
    model: ClockModel,
    rng: &'a mut R,
    last_t: f64,
    random_walk: f64,
    unit_normal: Normal<f64>,
}

impl<'a, R: Rng> ClockTransform<'a, R> {
    pub fn new(model: ClockModel, rng: &'a mut R) -> Self {
        ClockTransform {
            model,
            rng,
            last_t: 0.0,
            random_walk: 0.0,
            unit_normal: Normal::new(0.0, 1.0).expect("unit normal"),
        }
    }

    /// Receiver timestamp for a true arrival time. Times must arrive in
    /// non-decreasing order so the random walk accumulates correctly.
    pub fn observe(&mut self, t: f64) -> f64 {
        let dt = (t - self.last_t).max(0.0);
        self.last_t = t;
        if self.model.random_walk_psd > 0.0 && dt > 0.0 {
            let step = (self.model.random_walk_psd * dt).sqrt();
            self.random_walk += step * self.unit_normal.sample(self.rng);
        }
        let white = if self.model.white_pm_sigma > 0.0 {
            self.model.white_pm_sigma * self.unit_normal.sample(self.rng)
        } else {
            0.0
        };
        t + self.model.systematic_error(t) + self.random_walk + white
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ideal_clock_is_identity() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let mut tr = ClockTransform::new(ClockModel::ideal(), &mut rng);
        for t in [0.0, 1e-3, 2.5e-3] {
            assert_eq!(tr.observe(t), t);
        }
    }

    #[test]
    fn offset_and_frequency_accumulate() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let model = ClockModel { offset_s: 1e-6, fractional_offset: 1e-9, ..ClockModel::ideal() };
        let mut tr = ClockTransform::new(model, &mut rng);
        let t = 10.0;
        assert!((tr.observe(t) - (t + 1e-6 + 1e-9 * t)).abs() < 1e-15);
    }
}
