//! Property tests for clamping and model invariants.

use hdqkd_core::params::presets;
use hdqkd_core::security::{secret_key_length, shannon_entropy_d, ObservedBlock};
use hdqkd_core::{dead_time_coefficient, ChannelParams, LinkModel};
use proptest::prelude::*;

fn arb_block() -> impl Strategy<Value = ObservedBlock> {
    // Detections up to 1e8 per class, error fractions in [0, 1].
    (
        (0.0..1e8f64, 0.0..1e8f64, 0.0..1e7f64, 0.0..1e7f64),
        (0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0.0..=1.0f64),
        1e3..1e12f64,
    )
        .prop_map(|((nz1, nz2, nx1, nx2), (f1, f2, f3, f4), n_sent)| ObservedBlock {
            n_z_mu1: nz1,
            n_z_mu2: nz2,
            m_z_mu1: nz1 * f1,
            m_z_mu2: nz2 * f2,
            n_x_mu1: nx1,
            n_x_mu2: nx2,
            m_x_mu1: nx1 * f3,
            m_x_mu2: nx2 * f4,
            n_sent,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn bounds_and_key_never_negative(block in arb_block()) {
        // Clamping holds unconditionally, even on blocks no physical
        // channel would produce.
        let p = presets::fig4();
        let r = secret_key_length(&block, &p).unwrap();
        prop_assert!(r.s_z0_lower >= 0.0);
        prop_assert!(r.s_z1_lower >= 0.0);
        prop_assert!(r.s_x1_lower >= 0.0);
        prop_assert!(r.key_length_bits >= 0.0);
        prop_assert!(r.skr_bits_per_s >= 0.0);
        let cap = 0.75; // entropy clamp input for d = 4
        prop_assert!((0.0..=cap).contains(&r.phi_z));
    }

    #[test]
    fn vacuum_bounds_ordered_on_model_consistent_blocks(
        loss in 0.0..45.0f64,
        p_dc in 1e-8..1e-4f64,
        p_err in 1e-4..0.05f64,
        n_z in 1e4..1e9f64,
        jitter in -3.0..3.0f64,
    ) {
        // The lower/upper vacuum bounds hold jointly only for blocks a
        // physical channel can emit; build one and perturb the counts
        // within statistical range.
        let p = presets::fig4();
        let mut ch = ChannelParams::default();
        ch.loss_db = loss;
        ch.p_dc = p_dc;
        ch.p_err = p_err;
        let m = LinkModel::new(&p, &ch).unwrap();
        let mut block = m.expected_block(n_z).unwrap();
        let bump = |v: f64| (v + jitter * v.sqrt()).max(0.0);
        block.n_z_mu1 = bump(block.n_z_mu1).max(block.m_z_mu1);
        block.n_z_mu2 = bump(block.n_z_mu2).max(block.m_z_mu2);
        let r = secret_key_length(&block, &p).unwrap();
        prop_assert!(r.s_z0_lower <= r.s_z0_upper + 1e-9 * r.s_z0_upper.abs().max(1.0));
    }

    #[test]
    fn entropy_bounded_by_log2_d(x in 0.0..=1.0f64) {
        for d in [2u32, 4, 8, 16] {
            let h = shannon_entropy_d(x, d).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(h <= (d as f64).log2() + 1e-12);
        }
    }

    #[test]
    fn dead_time_coefficient_in_unit_interval_and_monotone(
        r in 1e6..1e9f64,
        p in 0.0..0.2f64,
        t in 0.0..1e-6f64,
    ) {
        let c = dead_time_coefficient(r, p, t);
        prop_assert!(c > 0.0 && c <= 1.0);
        prop_assert!(dead_time_coefficient(r * 1.5, p, t) <= c);
        prop_assert!(dead_time_coefficient(r, p + 0.01, t) <= c);
        prop_assert!(dead_time_coefficient(r, p, t + 1e-8) <= c);
    }

    #[test]
    fn db_transmittance_roundtrip(loss in 0.0..80.0f64) {
        let eta = hdqkd_core::db_to_transmittance(loss);
        let back = hdqkd_core::transmittance_to_db(eta);
        prop_assert!((back - loss).abs() < 1e-12 * loss.max(1.0));
    }

    #[test]
    fn error_prob_never_exceeds_detection_prob(
        loss in 0.0..60.0f64,
        p_dc in 0.0..1e-4f64,
        p_err in 0.0..0.2f64,
    ) {
        let mut ch = ChannelParams::default();
        ch.loss_db = loss;
        ch.p_dc = p_dc;
        ch.p_err = p_err;
        let m = LinkModel::new(&presets::fig4(), &ch).unwrap();
        use hdqkd_core::params::{Basis, Intensity};
        for b in [Basis::Z, Basis::X] {
            for i in [Intensity::Signal, Intensity::Decoy] {
                prop_assert!(m.error(b, i) <= m.detection(b, i) + 1e-18);
            }
        }
    }
}
