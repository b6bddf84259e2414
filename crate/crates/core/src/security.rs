//! 1-decoy finite-key security calculus.
//!
//! Maps a block of sifted detection and error counts to the secret key
//! length
//!
//! ```text
//! l <= log2(d)·s_Z0^l + s_Z1^l·[c - H_d(phi_Z)] - Delta_EC
//!      - 6·log2(19/eps_sec) - log2(2/eps_cor)
//! ```
//!
//! with Hoeffding-bounded vacuum and single-photon event counts, the
//! phase error rate inferred from the X basis, and every lower bound
//! clamped at zero. Counts are held as floats so analytic expected
//! blocks and integer Monte Carlo blocks share one code path.

use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::params::ProtocolParams;

/// Decoy-state parameters of the 1-decoy protocol: the key-length
/// penalty is `a·log2(b/eps_sec)`.
pub const DECOY_A: f64 = 6.0;
pub const DECOY_B: f64 = 19.0;

/// Per-intensity detection and error counts for one finite-key block.
///
/// `n_sent` is the number of emitted symbols behind the block: the
/// analytic model sets it to n_Z / P_Z,det,tot, a simulator records the
/// actual emission count.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservedBlock {
    pub n_z_mu1: f64,
    pub n_z_mu2: f64,
    pub m_z_mu1: f64,
    pub m_z_mu2: f64,
    pub n_x_mu1: f64,
    pub n_x_mu2: f64,
    pub m_x_mu1: f64,
    pub m_x_mu2: f64,
    pub n_sent: f64,
}

impl ObservedBlock {
    pub fn n_z(&self) -> f64 {
        self.n_z_mu1 + self.n_z_mu2
    }

    pub fn m_z(&self) -> f64 {
        self.m_z_mu1 + self.m_z_mu2
    }

    pub fn n_x(&self) -> f64 {
        self.n_x_mu1 + self.n_x_mu2
    }

    pub fn m_x(&self) -> f64 {
        self.m_x_mu1 + self.m_x_mu2
    }

    /// QBER of the sifted Z bits; 0 on an empty block.
    pub fn qber_z(&self) -> f64 {
        if self.n_z() > 0.0 {
            self.m_z() / self.n_z()
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let pairs = [
            ("Z/mu1", self.n_z_mu1, self.m_z_mu1),
            ("Z/mu2", self.n_z_mu2, self.m_z_mu2),
            ("X/mu1", self.n_x_mu1, self.m_x_mu1),
            ("X/mu2", self.n_x_mu2, self.m_x_mu2),
        ];
        for (name, n, m) in pairs {
            if n < 0.0 || m < 0.0 {
                return Err(CoreError::invalid(format!("negative count in {name}")));
            }
            if m > n {
                return Err(CoreError::invalid(format!("errors exceed detections in {name}")));
            }
        }
        if self.n_sent < 0.0 {
            return Err(CoreError::invalid("n_sent must be >= 0"));
        }
        Ok(())
    }

    fn basis(&self, which: BasisSide) -> BasisCounts {
        match which {
            BasisSide::Z => BasisCounts {
                n1: self.n_z_mu1,
                n2: self.n_z_mu2,
                m1: self.m_z_mu1,
                m2: self.m_z_mu2,
            },
            BasisSide::X => BasisCounts {
                n1: self.n_x_mu1,
                n2: self.n_x_mu2,
                m1: self.m_x_mu1,
                m2: self.m_x_mu2,
            },
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum BasisSide {
    Z,
    X,
}

#[derive(Debug, Clone, Copy)]
struct BasisCounts {
    n1: f64,
    n2: f64,
    m1: f64,
    m2: f64,
}

impl BasisCounts {
    fn n(&self) -> f64 {
        self.n1 + self.n2
    }

    fn m(&self) -> f64 {
        self.m1 + self.m2
    }
}

/// Everything the key-length evaluation produces, intermediates included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityResult {
    /// Probability of emitting a 0-photon state.
    pub tau0: f64,
    /// Probability of emitting a 1-photon state.
    pub tau1: f64,
    /// Lower bound on Z-basis vacuum events.
    pub s_z0_lower: f64,
    /// Upper bound on Z-basis vacuum events.
    pub s_z0_upper: f64,
    /// Lower bound on Z-basis single-photon events.
    pub s_z1_lower: f64,
    /// Lower bound on X-basis single-photon events.
    pub s_x1_lower: f64,
    /// Upper bound on X-basis single-photon errors.
    pub v_x1_upper: f64,
    /// Phase error rate (clamped to the entropy-table bound for d).
    pub phi_z: f64,
    /// Error-correction leakage in bits.
    pub delta_ec_bits: f64,
    /// QBER of the block's Z bits.
    pub qber_z: f64,
    /// Secret key length in bits (>= 0).
    pub key_length_bits: f64,
    /// Secret key rate in bit/s.
    pub skr_bits_per_s: f64,
    /// Set when the X-basis single-photon bound collapsed to zero and
    /// the key length was therefore forced to zero.
    pub insufficient_statistics: bool,
}

/// Shannon entropy for a d-dimensional alphabet,
/// `H_d(x) = -x·log2(x/(d-1)) - (1-x)·log2(1-x)`, with `H(0) = 0` and
/// the output pinned to log2(d) for inputs at or above the per-dimension
/// bound (0.5, 0.75, 0.87, 0.95) for d = (2, 4, 8, 16).
pub fn shannon_entropy_d(x: f64, d: u32) -> Result<f64, CoreError> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(CoreError::domain(format!("entropy input {x} outside [0,1]")));
    }
    let cap = entropy_clamp_input(d)?;
    if x >= cap {
        return Ok((d as f64).log2());
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(-x * (x / (d as f64 - 1.0)).log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Input threshold above which `shannon_entropy_d` saturates at log2(d).
pub fn entropy_clamp_input(d: u32) -> Result<f64, CoreError> {
    match d {
        2 => Ok(0.5),
        4 => Ok(0.75),
        8 => Ok(0.87),
        16 => Ok(0.95),
        _ => Err(CoreError::invalid(format!("unsupported dimension {d}"))),
    }
}

/// Probability of emitting an n-photon state from the two-intensity
/// Poisson mixture: `tau_n = sum_i p_i e^{-mu_i} mu_i^n / n!`.
pub fn tau_n(params: &ProtocolParams, n: u32) -> f64 {
    let mut total = 0.0;
    for (p, mu) in [(params.p_mu1, params.mu1), (params.p_mu2(), params.mu2)] {
        let mut term = p * (-mu).exp();
        for k in 1..=n {
            term *= mu / k as f64;
        }
        total += term;
    }
    total
}

/// Hoeffding-corrected count interval,
/// `n^± = (e^{mu_i}/p_i)·(count ± sqrt((total/2)·log(1/eps)))`,
/// lower bound clamped at zero. `total` is the basis-wide count that
/// sets the fluctuation scale.
pub fn hoeffding_count_bounds(
    count: f64,
    total: f64,
    p_i: f64,
    mu_i: f64,
    eps: f64,
    log_base: f64,
) -> Result<(f64, f64), CoreError> {
    if p_i <= 0.0 {
        return Err(CoreError::invalid("intensity probability must be positive"));
    }
    if count < 0.0 || total < count {
        return Err(CoreError::invalid("need 0 <= count <= total"));
    }
    if !(0.0 < eps && eps <= 1.0) {
        return Err(CoreError::invalid("eps must lie in (0, 1]"));
    }
    let delta = (total / 2.0 * (1.0 / eps).log(log_base)).sqrt();
    let scale = mu_i.exp() / p_i;
    Ok((f64::max(scale * (count - delta), 0.0), scale * (count + delta)))
}

/// Statistical-fluctuation term bridging Z- and X-basis single-photon
/// sets: `gamma(a,b,c) = sqrt(((b+c)/(b c))·((1+c)/c)·log(1/a))`.
pub fn gamma(a: f64, b: f64, c: f64, log_base: f64) -> Result<f64, CoreError> {
    if b <= 0.0 || c <= 0.0 {
        return Err(CoreError::invalid("gamma requires b > 0 and c > 0"));
    }
    if !(0.0 < a && a <= 1.0) {
        return Err(CoreError::invalid("gamma requires a in (0, 1]"));
    }
    Ok(((b + c) / (b * c) * ((1.0 + c) / c) * (1.0 / a).log(log_base)).sqrt())
}

/// Error-correction leakage bound `Delta_EC = f_e·n_Z·H_d(rate)`.
pub fn delta_ec(n_z: f64, error_rate: f64, d: u32, f_e: f64) -> Result<f64, CoreError> {
    Ok(f_e * n_z * shannon_entropy_d(error_rate, d)?)
}

/// Per-basis decoy bounds: vacuum lower/upper, single-photon lower, and
/// the single-photon error upper bound.
#[derive(Debug, Clone, Copy)]
struct DecoyBounds {
    s0_lower: f64,
    s0_upper: f64,
    s1_lower: f64,
    v1_upper: f64,
}

fn decoy_bounds(counts: BasisCounts, params: &ProtocolParams) -> Result<DecoyBounds, CoreError> {
    let (mu1, mu2) = (params.mu1, params.mu2);
    let (p1, p2) = (params.p_mu1, params.p_mu2());
    let base = params.hoeffding_log_base;
    let tau0 = tau_n(params, 0);
    let tau1 = tau_n(params, 1);

    let (_, n1_plus) = hoeffding_count_bounds(counts.n1, counts.n(), p1, mu1, params.eps1(), base)?;
    let (n2_minus, _) = hoeffding_count_bounds(counts.n2, counts.n(), p2, mu2, params.eps1(), base)?;
    let (_, m1_plus) = hoeffding_count_bounds(counts.m1, counts.m(), p1, mu1, params.eps2(), base)?;
    let (m2_minus, _) = hoeffding_count_bounds(counts.m2, counts.m(), p2, mu2, params.eps2(), base)?;

    let s0_lower = f64::max(tau0 / (mu1 - mu2) * (mu1 * n2_minus - mu2 * n1_plus), 0.0);

    let delta_m = (counts.m() / 2.0 * (1.0 / params.eps2()).log(base)).sqrt();
    let delta_n = (counts.n() / 2.0 * (1.0 / params.eps1()).log(base)).sqrt();
    let d = params.d as f64;
    let s0_upper =
        1.0 / (1.0 - 1.0 / d) * tau0 * (mu2.exp() / p2) * (counts.m2 + delta_m + delta_n);

    // The vacuum term enters the single-photon bound with a negative
    // sign; evaluate with both vacuum bounds and keep the smaller
    // (valid) single-photon bound.
    let s1_of = |s0: f64| {
        let bracket = n2_minus
            - (mu2 * mu2) / (mu1 * mu1) * n1_plus
            - (mu1 * mu1 - mu2 * mu2) / (mu1 * mu1) * s0 / tau0;
        f64::max(tau1 * mu1 / (mu2 * (mu1 - mu2)) * bracket, 0.0)
    };
    let s1_lower = f64::min(s1_of(s0_lower), s1_of(s0_upper));

    let v1_upper = tau1 / (mu1 - mu2) * (m1_plus - m2_minus);

    Ok(DecoyBounds { s0_lower, s0_upper, s1_lower, v1_upper })
}

/// Lower bound on Z-basis vacuum events.
pub fn s_z0_lower(block: &ObservedBlock, params: &ProtocolParams) -> Result<f64, CoreError> {
    Ok(decoy_bounds(block.basis(BasisSide::Z), params)?.s0_lower)
}

/// Upper bound on Z-basis vacuum events.
pub fn s_z0_upper(block: &ObservedBlock, params: &ProtocolParams) -> Result<f64, CoreError> {
    Ok(decoy_bounds(block.basis(BasisSide::Z), params)?.s0_upper)
}

/// Lower bound on Z-basis single-photon events.
pub fn s_z1_lower(block: &ObservedBlock, params: &ProtocolParams) -> Result<f64, CoreError> {
    Ok(decoy_bounds(block.basis(BasisSide::Z), params)?.s1_lower)
}

/// Upper bound on the phase error rate of the Z-basis single-photon
/// events, inferred from the X basis:
/// `phi_Z <= v_X1^u / s_X1^l + gamma(sqrt(eps1), s_Z1^l, s_X1^l)`,
/// clamped into [0, entropy-table bound].
///
/// Fails with [`CoreError::InsufficientStatistics`] when `s_X1^l` is 0.
pub fn phase_error_upper(
    block: &ObservedBlock,
    params: &ProtocolParams,
    s_z1_lower: f64,
) -> Result<f64, CoreError> {
    let x = decoy_bounds(block.basis(BasisSide::X), params)?;
    phase_error_from_bounds(params, s_z1_lower, x.s1_lower, x.v1_upper)
}

fn phase_error_from_bounds(
    params: &ProtocolParams,
    s_z1: f64,
    s_x1: f64,
    v_x1: f64,
) -> Result<f64, CoreError> {
    if s_x1 <= 0.0 {
        return Err(CoreError::InsufficientStatistics);
    }
    if s_z1 <= 0.0 {
        // No single-photon credit to privacy-amplify; report the
        // saturating rate so the bracket clamps.
        return Ok(entropy_clamp_input(params.d)?);
    }
    let ratio = f64::max(v_x1, 0.0) / s_x1;
    let g = gamma(params.eps1().sqrt(), s_z1, s_x1, params.hoeffding_log_base)?;
    let cap = entropy_clamp_input(params.d)?;
    Ok((ratio + g).clamp(0.0, cap))
}

/// Evaluate the full finite-key chain on a block.
///
/// The SKR normalizes the key length by the wall-clock time behind the
/// block, `n_sent / symbol_rate`. Blocks with too little X-basis
/// statistics yield `l = 0` with `insufficient_statistics` set rather
/// than an error.
pub fn secret_key_length(
    block: &ObservedBlock,
    params: &ProtocolParams,
) -> Result<SecurityResult, CoreError> {
    params.validate()?;
    block.validate()?;

    let tau0 = tau_n(params, 0);
    let tau1 = tau_n(params, 1);
    let z = decoy_bounds(block.basis(BasisSide::Z), params)?;
    let x = decoy_bounds(block.basis(BasisSide::X), params)?;
    let qber = block.qber_z();
    let delta_ec_bits = delta_ec(block.n_z(), qber, params.d, params.f_e)?;

    let phi = phase_error_from_bounds(params, z.s1_lower, x.s1_lower, x.v1_upper);
    let (phi_z, insufficient) = match phi {
        Ok(p) => (p, false),
        Err(CoreError::InsufficientStatistics) => (entropy_clamp_input(params.d)?, true),
        Err(e) => return Err(e),
    };

    let d = params.d as f64;
    let key_length_bits = if insufficient {
        0.0
    } else {
        let bracket = f64::max(params.c_overlap - shannon_entropy_d(phi_z, params.d)?, 0.0);
        let l = d.log2() * z.s0_lower + z.s1_lower * bracket
            - delta_ec_bits
            - DECOY_A * (DECOY_B / params.eps_sec).log2()
            - (2.0 / params.eps_cor).log2();
        f64::max(l, 0.0)
    };

    let elapsed_s = block.n_sent / params.symbol_rate_hz();
    let skr_bits_per_s = if elapsed_s > 0.0 { key_length_bits / elapsed_s } else { 0.0 };

    Ok(SecurityResult {
        tau0,
        tau1,
        s_z0_lower: z.s0_lower,
        s_z0_upper: z.s0_upper,
        s_z1_lower: z.s1_lower,
        s_x1_lower: x.s1_lower,
        v_x1_upper: x.v1_upper,
        phi_z,
        delta_ec_bits,
        qber_z: qber,
        key_length_bits,
        skr_bits_per_s,
        insufficient_statistics: insufficient,
    })
}
