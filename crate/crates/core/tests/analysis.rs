use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ris_eem::analysis::{
    prop2_derivative, prop3_condition, prop3_g, rises_then_falls, Prop3Params,
};
use ris_eem::channel::ChannelSet;
use ris_eem::config::SystemConfig;
use ris_eem::eem::{init_random_phase, run_eem};
use ris_eem::validate::{random_model_config, richardson};

fn reference_norms() -> Vec<f64> {
    let cfg = SystemConfig::default();
    let ch = ChannelSet::generate(&cfg, 0);
    let rep = run_eem(&cfg, &ch, &init_random_phase(&cfg, 0)).unwrap();
    let v = &rep.beam_state.v_d;
    (0..v.ncols()).map(|k| v.column(k).norm_squared()).collect()
}

#[test]
fn count_derivative_negative_for_large_surfaces() {
    let norms = reference_norms();
    for l in [256, 512] {
        let cfg = SystemConfig { n_bs: 1, n_ris: 9, elements_per_ris: l, ..SystemConfig::default() };
        for m in 4..=9 {
            assert!(m * l >= 1000);
            let d = prop2_derivative(m as f64, &cfg, &norms);
            assert!(d < 0.0, "M={m} L={l}: {d}");
        }
    }
}

#[test]
fn size_numerator_sign_matches_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 100 {
        let cfg = random_model_config(&mut rng);
        if !prop3_condition(&cfg) {
            continue;
        }
        let a: Vec<f64> = (0..cfg.n_users).map(|_| (rng.random::<f64>() * 12.0).exp()).collect();
        let params = Prop3Params::new(&cfg, cfg.n_bs as f64 * cfg.pt_w, &a);
        let l = (rng.random::<f64>() * 4096f64.ln()).exp();
        let (g, cond) = prop3_g(l, &params, &cfg);
        assert!(cond);
        let fd = richardson(|x| params.eta(x), l);
        if fd.abs() > 1e-9 * params.eta(l).abs() / l {
            assert_eq!(g > 0.0, fd > 0.0, "L={l} g={g} fd={fd}");
        }
        checked += 1;
    }
}

fn table_two_size_model(a: f64) -> (SystemConfig, Prop3Params) {
    let cfg = SystemConfig::default();
    let params = Prop3Params::new(&cfg, cfg.n_bs as f64 * cfg.pt_w, &vec![a; cfg.n_users]);
    (cfg, params)
}

#[test]
fn size_model_vanishes_for_huge_surfaces() {
    let (cfg, params) = table_two_size_model(1e3);
    assert!(prop3_condition(&cfg));
    let peak = (1..=4096).map(|l| params.eta(l as f64)).fold(f64::NEG_INFINITY, f64::max);
    assert!(params.eta(1e6) < 0.01 * peak);
}

#[test]
fn size_model_rises_then_falls_under_the_condition() {
    for a in [1e2, 1e3, 1e4] {
        let (cfg, params) = table_two_size_model(a);
        assert!(prop3_condition(&cfg));
        let curve: Vec<f64> = (1..=4096).map(|l| params.eta(l as f64)).collect();
        assert!(rises_then_falls(&curve), "a = {a}");
    }
}
