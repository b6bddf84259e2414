//! Monte Carlo simulation of the emission–channel–detection chain.
//!
//! Two generators share one physical model:
//!
//! * [`simulate_session`] draws individual time tags (slot times,
//!   jitter, receiver clock error, dead time) carrying ground truth.
//!   Symbols between detection candidates are skipped geometrically,
//!   so the cost scales with the detection count, not the symbol count.
//! * [`simulate_counts`] draws only per-class counts (basis ×
//!   intensity × source photon number), exactly equivalent in
//!   distribution for counting purposes and fast enough for 10^4-block
//!   coverage studies.
//!
//! Per symbol the model is: Poisson photon number at the chosen
//! intensity, Bernoulli survival at the basis transmittance (channel
//! loss plus post-selection), an intrinsic error flip uniform over the
//! d-1 wrong outcomes, one aggregate dark-count draw per symbol in the
//! active basis arm, Gaussian arrival jitter, and a non-paralyzable
//! dead time over the merged detector stream (per-detector optional).

use hdqkd_core::params::{Basis, ChannelParams, Intensity, ProtocolParams};
use hdqkd_core::security::ObservedBlock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::clock::{ClockModel, ClockTransform};
use crate::error::SimError;
use crate::geometry::TimebinGeometry;
use crate::sequence::SymbolSequence;

/// Source-side truth attached to a tag for oracle checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagTruth {
    /// Absolute emission index of the symbol slot the event occupies.
    pub symbol_index: u64,
    /// Photon number of the originating pulse at the source.
    pub photons: u32,
    pub basis: Basis,
    /// Prepared state index.
    pub state: u8,
    /// Detection caused by a dark count rather than a signal photon.
    pub is_dark: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TagRecord {
    /// Receiver timestamp in seconds.
    pub arrival_time_s: f64,
    /// Detector channel.
    pub channel: u8,
    /// Ground truth; stripped in blind mode.
    pub truth: Option<TagTruth>,
}

/// Detector a measurement outcome lands on. 2D uses three logical
/// channels (one time arm, two interferometer outputs), 4D and up use
/// two per basis; outcomes map uniformly by parity.
pub fn detector_channel(d: u32, basis: Basis, outcome: u8) -> u8 {
    match (d, basis) {
        (2, Basis::Z) => 0,
        (2, Basis::X) => 1 + (outcome & 1),
        (_, Basis::Z) => outcome & 1,
        (_, Basis::X) => 2 + (outcome & 1),
    }
}

/// Receiver-side basis of a channel (the arm it belongs to).
pub fn channel_basis(d: u32, channel: u8) -> Basis {
    match (d, channel) {
        (2, 0) => Basis::Z,
        (2, _) => Basis::X,
        (_, 0 | 1) => Basis::Z,
        _ => Basis::X,
    }
}

pub fn detector_count(d: u32) -> u8 {
    if d == 2 {
        3
    } else {
        4
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionConfig {
    pub params: ProtocolParams,
    pub channel: ChannelParams,
    pub geometry: TimebinGeometry,
    pub clock: ClockModel,
    pub duration_s: f64,
    pub seed: u64,
    /// Strip ground truth from the emitted tags.
    pub blind: bool,
    /// Apply the dead time per detector instead of receiver-wide.
    pub per_detector_dead_time: bool,
    /// Drive the channel loss from a (time, loss_db) series instead of
    /// the static `channel.loss_db`.
    pub attenuation_series: Option<Vec<(f64, f64)>>,
}

impl SessionConfig {
    pub fn new(params: ProtocolParams, channel: ChannelParams, seed: u64) -> Self {
        let geometry = TimebinGeometry::for_dimension(params.d, params.symbol_rate_hz());
        SessionConfig {
            params,
            channel,
            geometry,
            clock: ClockModel::ideal(),
            duration_s: 0.1,
            seed,
            blind: false,
            per_detector_dead_time: false,
            attenuation_series: None,
        }
    }
}

/// Per-(basis, intensity) click statistics of the physical model.
#[derive(Debug, Clone)]
struct ComboModel {
    p_click: f64,
    eta: f64,
    mu: f64,
    /// Inverse-CDF table of the source photon number given a click.
    photons_given_click: Vec<f64>,
}

const PHOTON_CLASSES: usize = 16;

impl ComboModel {
    fn new(mu: f64, eta: f64) -> Self {
        let p_click = 1.0 - (-mu * eta).exp();
        // P(k | click) ∝ Pois(k; mu)·(1 - (1-eta)^k)
        let mut cdf = Vec::with_capacity(PHOTON_CLASSES);
        let mut acc = 0.0;
        let mut pois = (-mu).exp();
        for k in 0..PHOTON_CLASSES {
            if k > 0 {
                pois *= mu / k as f64;
                acc += pois * (1.0 - (1.0 - eta).powi(k as i32));
            }
            cdf.push(if p_click > 0.0 { acc / p_click } else { 1.0 });
        }
        ComboModel { p_click, eta, mu, photons_given_click: cdf }
    }

    fn sample_photons_given_click<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.gen();
        for (k, &c) in self.photons_given_click.iter().enumerate() {
            if u <= c {
                return k as u32;
            }
        }
        PHOTON_CLASSES as u32
    }

    /// Photon number of a pulse given that no photon survived:
    /// thinned Poisson with mean mu·(1-eta).
    fn sample_photons_given_no_click<R: Rng>(&self, rng: &mut R) -> u32 {
        let lambda = self.mu * (1.0 - self.eta);
        if lambda <= 0.0 {
            return 0;
        }
        Poisson::new(lambda).expect("positive lambda").sample(rng) as u32
    }
}

struct SymbolModel {
    combos: [[ComboModel; 2]; 2],
    p_dc: f64,
    p_err: f64,
    p_any_max: f64,
}

fn combo_index(b: Basis) -> usize {
    match b {
        Basis::Z => 0,
        Basis::X => 1,
    }
}

fn intensity_index(i: Intensity) -> usize {
    match i {
        Intensity::Signal => 0,
        Intensity::Decoy => 1,
    }
}

impl SymbolModel {
    fn new(params: &ProtocolParams, channel: &ChannelParams, loss_db: f64) -> Self {
        let ch = ChannelParams { loss_db, ..channel.clone() };
        let build = |b: Basis, i: Intensity| {
            ComboModel::new(params.mu(i), ch.transmittance(params.d, b))
        };
        let combos = [
            [build(Basis::Z, Intensity::Signal), build(Basis::Z, Intensity::Decoy)],
            [build(Basis::X, Intensity::Signal), build(Basis::X, Intensity::Decoy)],
        ];
        let p_dc = channel.p_dc;
        let p_any_max = combos
            .iter()
            .flatten()
            .map(|c| 1.0 - (1.0 - c.p_click) * (1.0 - p_dc))
            .fold(0.0f64, f64::max);
        SymbolModel { combos, p_dc, p_err: channel.p_err, p_any_max }
    }

    fn combo(&self, b: Basis, i: Intensity) -> &ComboModel {
        &self.combos[combo_index(b)][intensity_index(i)]
    }
}

/// Draw the measured outcome: the prepared state, flipped with
/// probability p_err uniformly over the wrong outcomes.
fn measured_outcome<R: Rng>(rng: &mut R, d: u32, state: u8, p_err: f64) -> u8 {
    if p_err > 0.0 && rng.gen::<f64>() < p_err {
        let wrong = rng.gen_range(0..d - 1) as u8;
        if wrong >= state {
            wrong + 1
        } else {
            wrong
        }
    } else {
        state
    }
}

/// Simulate a session and return the receiver's tag stream, ordered by
/// arrival time.
pub fn simulate_session(
    seq: &SymbolSequence,
    cfg: &SessionConfig,
) -> Result<Vec<TagRecord>, SimError> {
    cfg.geometry.validate()?;
    cfg.params
        .validate()
        .and_then(|_| cfg.channel.validate())
        .map_err(|e| SimError::invalid(e.to_string()))?;
    if seq.is_empty() {
        return Err(SimError::invalid("empty symbol sequence"));
    }
    if seq.d != cfg.params.d {
        return Err(SimError::invalid("sequence dimension does not match parameters"));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let rate = cfg.params.symbol_rate_hz();
    let period = 1.0 / rate;
    let n_symbols = (cfg.duration_s * rate).floor() as u64;
    let jitter = Normal::new(0.0, cfg.geometry.jitter_sigma_s.max(f64::MIN_POSITIVE))
        .expect("jitter normal");
    let d = cfg.params.d;

    // Piecewise-constant loss segments: (first symbol, model).
    let segments: Vec<(u64, SymbolModel)> = match &cfg.attenuation_series {
        None => vec![(0, SymbolModel::new(&cfg.params, &cfg.channel, cfg.channel.loss_db))],
        Some(series) => {
            if series.is_empty() {
                return Err(SimError::invalid("empty attenuation series"));
            }
            series
                .iter()
                .map(|&(t, loss)| {
                    ((t * rate).floor().max(0.0) as u64,
                     SymbolModel::new(&cfg.params, &cfg.channel, loss))
                })
                .collect()
        }
    };

    let mut raw: Vec<(f64, u8, TagTruth)> = Vec::new();
    for (si, (start, model)) in segments.iter().enumerate() {
        let end = segments.get(si + 1).map_or(n_symbols, |s| s.0.min(n_symbols));
        let mut idx = *start;
        if model.p_any_max <= 0.0 {
            continue;
        }
        let log_keep = (1.0 - model.p_any_max).ln();
        while idx < end {
            // Geometric skip to the next candidate symbol.
            if model.p_any_max < 1.0 {
                let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
                let skip = (u.ln() / log_keep).floor() as u64;
                idx = idx.saturating_add(skip);
                if idx >= end {
                    break;
                }
            }
            let sym = seq.at(idx);
            let combo = model.combo(sym.basis, sym.intensity);
            let p_click = combo.p_click;
            let p_any = 1.0 - (1.0 - p_click) * (1.0 - model.p_dc);
            // Thin the majorizing candidate down to this symbol's rate,
            // then split the accepted event into click/dark/both.
            let u = rng.gen::<f64>() * model.p_any_max;
            if u < p_any {
                let v = rng.gen::<f64>() * p_any;
                let click_only = p_click * (1.0 - model.p_dc);
                let dark_only = (1.0 - p_click) * model.p_dc;
                let (click, dark) = if v < click_only {
                    (true, false)
                } else if v < click_only + dark_only {
                    (false, true)
                } else {
                    (true, true)
                };
                let epoch = idx as f64 * period;
                let photons = if click {
                    combo.sample_photons_given_click(&mut rng)
                } else {
                    combo.sample_photons_given_no_click(&mut rng)
                };
                if click {
                    let outcome = measured_outcome(&mut rng, d, sym.state, model.p_err);
                    let t = epoch
                        + cfg.geometry.slot_time(outcome as u32)
                        + jitter.sample(&mut rng);
                    raw.push((
                        t,
                        detector_channel(d, sym.basis, outcome),
                        TagTruth {
                            symbol_index: idx,
                            photons,
                            basis: sym.basis,
                            state: sym.state,
                            is_dark: false,
                        },
                    ));
                }
                if dark {
                    // Aggregate dark draw lands in the active arm on a
                    // uniform outcome slot.
                    let outcome = rng.gen_range(0..d) as u8;
                    let t = epoch
                        + cfg.geometry.slot_time(outcome as u32)
                        + jitter.sample(&mut rng);
                    raw.push((
                        t,
                        detector_channel(d, sym.basis, outcome),
                        TagTruth {
                            symbol_index: idx,
                            photons,
                            basis: sym.basis,
                            state: sym.state,
                            is_dark: true,
                        },
                    ));
                }
            }
            idx += 1;
        }
    }

    raw.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Non-paralyzable dead time on physical arrival times.
    let t_dt = cfg.channel.dead_time_s;
    let mut kept: Vec<(f64, u8, TagTruth)> = Vec::with_capacity(raw.len());
    if t_dt > 0.0 {
        if cfg.per_detector_dead_time {
            let mut last = [f64::NEG_INFINITY; 4];
            for tag in raw {
                let ch = tag.1 as usize;
                if tag.0 - last[ch] >= t_dt {
                    last[ch] = tag.0;
                    kept.push(tag);
                }
            }
        } else {
            let mut last = f64::NEG_INFINITY;
            for tag in raw {
                if tag.0 - last >= t_dt {
                    last = tag.0;
                    kept.push(tag);
                }
            }
        }
    } else {
        kept = raw;
    }

    // Receiver timestamps.
    let mut transform = ClockTransform::new(cfg.clock, &mut rng);
    let tags = kept
        .into_iter()
        .map(|(t, channel, truth)| TagRecord {
            arrival_time_s: transform.observe(t),
            channel,
            truth: if cfg.blind { None } else { Some(truth) },
        })
        .collect();
    Ok(tags)
}

/// Count summary of one basis/intensity cell, photon-class truth
/// included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub detections: u64,
    pub errors: u64,
    /// Tags whose originating pulse carried 0 photons.
    pub vacuum_detections: u64,
    /// Tags whose originating pulse carried exactly 1 photon.
    pub single_detections: u64,
}

/// Counts-only session: same generative model as [`simulate_session`]
/// restricted to counting, without timing effects. Dead time, when
/// present, is applied as an unbiased binomial thinning at the
/// renewal-exact rate.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsBlock {
    pub n_sent: u64,
    /// Indexed by [basis][intensity] as [Z,X] x [signal, decoy].
    pub cells: [[CellCounts; 2]; 2],
}

impl CountsBlock {
    pub fn cell(&self, b: Basis, i: Intensity) -> &CellCounts {
        &self.cells[combo_index(b)][intensity_index(i)]
    }

    pub fn observed_block(&self) -> ObservedBlock {
        let g = |b: Basis, i: Intensity| self.cell(b, i).detections as f64;
        let e = |b: Basis, i: Intensity| self.cell(b, i).errors as f64;
        ObservedBlock {
            n_z_mu1: g(Basis::Z, Intensity::Signal),
            n_z_mu2: g(Basis::Z, Intensity::Decoy),
            m_z_mu1: e(Basis::Z, Intensity::Signal),
            m_z_mu2: e(Basis::Z, Intensity::Decoy),
            n_x_mu1: g(Basis::X, Intensity::Signal),
            n_x_mu2: g(Basis::X, Intensity::Decoy),
            m_x_mu1: e(Basis::X, Intensity::Signal),
            m_x_mu2: e(Basis::X, Intensity::Decoy),
            n_sent: self.n_sent as f64,
        }
    }

    /// True Z-basis vacuum and single-photon event counts.
    pub fn z_truth(&self) -> (u64, u64) {
        let s0 = self.cells[0][0].vacuum_detections + self.cells[0][1].vacuum_detections;
        let s1 = self.cells[0][0].single_detections + self.cells[0][1].single_detections;
        (s0, s1)
    }
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

pub fn simulate_counts(
    params: &ProtocolParams,
    channel: &ChannelParams,
    n_symbols: u64,
    seed: u64,
) -> Result<CountsBlock, SimError> {
    params
        .validate()
        .and_then(|_| channel.validate())
        .map_err(|e| SimError::invalid(e.to_string()))?;

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let d = params.d;
    let mut block = CountsBlock { n_sent: n_symbols, ..Default::default() };

    // Multinomial split of symbols over (basis, intensity).
    let joint = [
        (Basis::Z, Intensity::Signal, params.p_z * params.p_mu1),
        (Basis::Z, Intensity::Decoy, params.p_z * params.p_mu2()),
        (Basis::X, Intensity::Signal, params.p_x() * params.p_mu1),
        (Basis::X, Intensity::Decoy, params.p_x() * params.p_mu2()),
    ];
    let mut remaining = n_symbols;
    let mut rest_prob = 1.0;

    // Dead-time thinning factor at the renewal-exact rate, shared by
    // every class (the dead window does not select on photon number).
    let c_dt = {
        let model = hdqkd_core::LinkModel::new(params, channel)
            .map_err(|e| SimError::invalid(e.to_string()))?;
        model.c_dt
    };

    for (b, i, p_joint) in joint {
        let n_bi = if rest_prob > 0.0 {
            binomial(&mut rng, remaining, (p_joint / rest_prob).min(1.0))
        } else {
            0
        };
        remaining -= n_bi;
        rest_prob -= p_joint;

        let mu = params.mu(i);
        let eta = channel.transmittance(d, b);
        let cell = &mut block.cells[combo_index(b)][intensity_index(i)];

        // Photon-number classes: sequential multinomial over the
        // Poisson pmf, tail lumped into the last class.
        let mut n_left = n_bi;
        let mut tail = 1.0;
        let mut pois = (-mu).exp();
        for k in 0..=PHOTON_CLASSES {
            if k > 0 {
                pois *= mu / k as f64;
            }
            let pk = if k == PHOTON_CLASSES { tail } else { pois };
            let n_k = if k == PHOTON_CLASSES {
                n_left
            } else if tail > 0.0 {
                binomial(&mut rng, n_left, (pk / tail).min(1.0))
            } else {
                0
            };
            n_left -= n_k;
            tail -= pois;

            let p_click = (1.0 - (1.0 - eta).powi(k as i32)) * c_dt;
            let clicks = binomial(&mut rng, n_k, p_click);
            let darks = binomial(&mut rng, n_k, channel.p_dc * c_dt);
            let click_errors = binomial(&mut rng, clicks, channel.p_err);
            let dark_errors = binomial(&mut rng, darks, 1.0 - 1.0 / d as f64);

            cell.detections += clicks + darks;
            cell.errors += click_errors + dark_errors;
            if k == 0 {
                cell.vacuum_detections += darks; // clicks are impossible
            } else if k == 1 {
                cell.single_detections += clicks + darks;
            }
            if n_left == 0 {
                break;
            }
        }
    }
    Ok(block)
}

/// Generate an attenuation-binned telemetry stream: one sample per
/// integration window, loss driven by `series` (piecewise constant).
pub fn simulate_attenuation_stream(
    params: &ProtocolParams,
    channel: &ChannelParams,
    series: &[(f64, f64)],
    window_s: f64,
    seed: u64,
) -> Result<Vec<hdqkd_core::AttenuationSample>, SimError> {
    if series.is_empty() {
        return Err(SimError::invalid("empty attenuation series"));
    }
    if window_s <= 0.0 {
        return Err(SimError::invalid("window must be positive"));
    }
    let rate = params.symbol_rate_hz();
    let symbols_per_window = (window_s * rate).round() as u64;
    let mut out = Vec::with_capacity(series.len());
    for (k, &(t, loss_db)) in series.iter().enumerate() {
        let ch = ChannelParams { loss_db, ..channel.clone() };
        let block = simulate_counts(params, &ch, symbols_per_window, seed ^ (k as u64) << 17)?;
        let ob = block.observed_block();
        out.push(hdqkd_core::AttenuationSample {
            timestamp_s: t,
            duration_s: window_s,
            loss_db,
            n_z_mu1: ob.n_z_mu1,
            n_z_mu2: ob.n_z_mu2,
            m_z_mu1: ob.m_z_mu1,
            m_z_mu2: ob.m_z_mu2,
            n_x_mu1: ob.n_x_mu1,
            n_x_mu2: ob.n_x_mu2,
            m_x_mu1: ob.m_x_mu1,
            m_x_mu2: ob.m_x_mu2,
        });
    }
    Ok(out)
}
