//! The looped symbol pattern the transmitter emits.

use hdqkd_core::params::{Basis, Intensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Symbol {
    pub basis: Basis,
    /// State index in 0..d.
    pub state: u8,
    pub intensity: Intensity,
}

/// A fixed pattern of symbols, looped cyclically for the whole session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSequence {
    pub d: u32,
    pub symbols: Vec<Symbol>,
}

impl SymbolSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Symbol at an absolute emission index (wraps around the pattern).
    pub fn at(&self, index: u64) -> Symbol {
        self.symbols[(index % self.symbols.len() as u64) as usize]
    }
}

/// Draw a reproducible pattern: basis ~ p_z, intensity ~ p_mu1, state
/// uniform over the alphabet.
pub fn generate_sequence(
    length: usize,
    d: u32,
    p_z: f64,
    p_mu1: f64,
    seed: u64,
) -> Result<SymbolSequence, SimError> {
    if length == 0 {
        return Err(SimError::invalid("sequence length must be >= 1"));
    }
    if ![2, 4, 8, 16].contains(&d) {
        return Err(SimError::invalid("d must be in {2,4,8,16}"));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let symbols = (0..length)
        .map(|_| Symbol {
            basis: if rng.gen::<f64>() < p_z { Basis::Z } else { Basis::X },
            state: rng.gen_range(0..d) as u8,
            intensity: if rng.gen::<f64>() < p_mu1 {
                Intensity::Signal
            } else {
                Intensity::Decoy
            },
        })
        .collect();
    Ok(SymbolSequence { d, symbols })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let a = generate_sequence(1000, 4, 0.9, 0.76, 7).unwrap();
        let b = generate_sequence(1000, 4, 0.9, 0.76, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_sequence(1000, 4, 0.9, 0.76, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_frequencies_match_parameters() {
        let n = 1_000_000;
        let seq = generate_sequence(n, 4, 0.9, 0.76, 42).unwrap();
        let z = seq.symbols.iter().filter(|s| s.basis == Basis::Z).count() as f64;
        let sig = seq
            .symbols
            .iter()
            .filter(|s| s.intensity == Intensity::Signal)
            .count() as f64;
        let nf = n as f64;
        // 3 binomial sigmas.
        assert!((z - 0.9 * nf).abs() < 3.0 * (nf * 0.9 * 0.1).sqrt());
        assert!((sig - 0.76 * nf).abs() < 3.0 * (nf * 0.76 * 0.24).sqrt());
    }

    #[test]
    fn rejects_empty() {
        assert!(generate_sequence(0, 4, 0.9, 0.76, 1).is_err());
    }
}
