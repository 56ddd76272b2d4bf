use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use srpm::analysis::{
    aber_union_bound, dcmc_capacity, mgf_uncorrelated, q_exp_bound, q_function, PairLimits, QBoundSpec,
};
use srpm::channels::{ChannelSet, ChannelSpec, CorrelationModel, CorrelationSpec, StaticChannels};
use srpm::detection::{ml_detect, sd_layered_detect, SdParams, DEFAULT_ML_CAP};
use srpm::modulation::{Alphabet, Scheme, SystemConfig};
use srpm::precoding::random_precoder;

fn config_strategy() -> impl Strategy<Value = SystemConfig> {
    (1usize..=3, 0usize..=2, prop::sample::select(vec![2usize, 4, 8]), 1usize..=2, 2usize..=5).prop_map(
        |(l_exp, k, m, n_s, n_r)| {
            let l = 1 << (l_exp - 1);
            SystemConfig { n: 8 * l, n_t: 4, n_r, l, n_s, m, k, ..SystemConfig::default() }
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn labels_roundtrip(cfg in config_strategy()) {
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        for label in 0..(1u64 << a.rate_bits()) {
            let pair = a.pair_from_label(label);
            prop_assert_eq!(a.label(&pair), label);
            let bits = a.bits_of(&pair);
            prop_assert_eq!(a.map_bits_to_symbols(&bits).unwrap(), pair);
        }
    }

    #[test]
    fn error_bits_are_a_metric(cfg in config_strategy(), seed in any::<u64>()) {
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = a.rate_bits() as u32;
        for _ in 0..50 {
            let (i, j) = (rng.random_range(0..a.size()), rng.random_range(0..a.size()));
            prop_assert_eq!(a.error_bits(i, j), a.error_bits(j, i));
            prop_assert!(a.error_bits(i, j) <= r);
            prop_assert_eq!(a.error_bits(i, i), 0);
        }
    }

    #[test]
    fn default_sphere_decoder_is_exact(seed in any::<u64>(), snr in -8.0f64..12.0) {
        let cfg = SystemConfig { n: 32, n_t: 4, ..SystemConfig::default() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let statics = Arc::new(StaticChannels::draw(&cfg, &ChannelSpec::default(), &mut rng).unwrap());
        let w = random_precoder::<f64, _>(4, 1, &mut rng);
        let p = 10f64.powf(snr / 10.0);
        for _ in 0..50 {
            let ch = ChannelSet::draw(&statics, &mut rng);
            let pair = a.pair_at(rng.random_range(0..a.size()));
            let y = a.synthesize_received(&pair, &ch, &w, p, 1.0, &mut rng).unwrap();
            let h = a.assemble_equivalent_channel(&ch, &w);
            let ml = ml_detect(&y, &h, &a, p, DEFAULT_ML_CAP).unwrap();
            let sd = sd_layered_detect(&y, &h, &a, p, 1.0, &SdParams::default()).unwrap();
            prop_assert_eq!(ml.index, sd.index);
            prop_assert!(sd.visited_nodes <= a.size() as u64 * 2);
        }
    }

    #[test]
    fn capacity_monotone_and_bounded(seed in any::<u64>(), rho in 0.0f64..0.9) {
        let cfg = SystemConfig { n: 16, n_t: 4, ..SystemConfig::default() };
        let spec = ChannelSpec { correlation: CorrelationSpec::uniform(CorrelationModel::Exponential(rho)), ..ChannelSpec::default() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let statics = StaticChannels::draw(&cfg, &spec, &mut rng).unwrap();
        let w = random_precoder::<f64, _>(4, 1, &mut rng);
        let limits = PairLimits::default();
        let mut prev_cap = 0.0;
        let mut prev_ub = f64::INFINITY;
        for snr in [-20.0f64, -10.0, 0.0, 10.0, 20.0] {
            let p = 10f64.powf(snr / 10.0);
            let cap = dcmc_capacity(&a, &statics, &w, p, 1.0, &limits).unwrap();
            prop_assert!(cap >= prev_cap - 1e-12 && cap <= (a.size() as f64).log2() + 1e-12);
            let ub = aber_union_bound(&a, &statics, &w, p, 1.0, &QBoundSpec::default(), &limits).unwrap().value;
            prop_assert!(ub <= prev_ub);
            prev_cap = cap;
            prev_ub = ub;
        }
        prop_assert_eq!(dcmc_capacity(&a, &statics, &w, 0.0, 1.0, &limits).unwrap(), 0.0);
    }

    #[test]
    fn exp_bound_tightens_under_refinement(x in 0.0f64..6.0, q in 1usize..6) {
        let coarse = q_exp_bound(x, &QBoundSpec::uniform(q));
        let fine = q_exp_bound(x, &QBoundSpec::uniform(2 * q));
        prop_assert!(fine <= coarse + 1e-15);
        prop_assert!(fine >= q_function(x) - 1e-15);
    }

    #[test]
    fn mgf_is_a_probability_kernel(s in 0.0f64..10.0, n_r in 1usize..8, t in -10.0f64..0.0) {
        let m = mgf_uncorrelated(s, n_r, t).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0);
    }
}

#[test]
fn single_precision_pipeline_detects_noiselessly() {
    let cfg = SystemConfig { n: 32, n_t: 4, ..SystemConfig::default() };
    let a = Alphabet::<f32>::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let statics = Arc::new(StaticChannels::<f32>::draw(&cfg, &ChannelSpec::default(), &mut rng).unwrap());
    let w = random_precoder::<f32, _>(4, 1, &mut rng);
    for idx in 0..a.size() {
        let ch = ChannelSet::draw(&statics, &mut rng);
        let pair = a.pair_at(idx);
        let y = a.noiseless_signal(&pair, &ch, &w);
        let h = a.assemble_equivalent_channel(&ch, &w);
        assert_eq!(ml_detect(&y, &h, &a, 1.0f32, DEFAULT_ML_CAP).unwrap().index, idx);
        assert_eq!(sd_layered_detect(&y, &h, &a, 1.0f32, 1.0, &SdParams::default()).unwrap().index, idx);
    }
}

#[test]
fn baseline_schemes_reach_their_rate_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (scheme, limit) in [(Scheme::Pbf, 1.0), (Scheme::Pbit, 3.0), (Scheme::Srpm, 18f64.log2())] {
        let cfg = SystemConfig { n: 16, n_t: 4, scheme, ..SystemConfig::default() };
        let a = Alphabet::<f64>::new(&cfg).unwrap();
        let statics = StaticChannels::draw(&cfg, &ChannelSpec::default(), &mut rng).unwrap();
        let w = random_precoder::<f64, _>(4, 1, &mut rng);
        let cap = dcmc_capacity(&a, &statics, &w, 1e5, 1.0, &PairLimits::default()).unwrap();
        assert!((cap - limit).abs() < 1e-3, "{scheme:?}: {cap}");
    }
}
