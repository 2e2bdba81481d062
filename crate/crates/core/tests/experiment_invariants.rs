use varhardy::experiments::{
    doob_strong_sweep, exp_jn_curve, jn_equivalence, block_average_sweep, nakai_sadasue, perturb_probabilities,
    violation_33_search, weak_type_sweep, ConstantReport, ExpJnOptions, ExponentLaw, ExponentSpec, SpaceSpec,
    TrialConfig,
};
use varhardy::io::{from_json_str, to_json_string};
use varhardy::space::Exponent;

fn iid(depth: usize) -> TrialConfig {
    TrialConfig::new(SpaceSpec::Dyadic { depth }, ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 })
        .with_seed(21)
        .with_trials(15)
}

fn check_report(r: &ConstantReport) {
    assert!(r.quantiles.iter().all(|q| q.value <= r.max));
    let w = r.witness.as_ref().expect("witness");
    let replay = w.replay().unwrap();
    assert!((replay - w.ratio).abs() <= 1e-9 * w.ratio.abs().max(1.0), "{replay} vs {}", w.ratio);
    assert_eq!(r.ratios[w.index], w.ratio);
    let back: ConstantReport = from_json_str(&to_json_string(r).unwrap()).unwrap();
    assert_eq!(&back, r);
}

#[test]
fn every_report_replays_and_round_trips() {
    let c = iid(3);
    let s = c.space.build().unwrap();
    let f = varhardy::experiments::generate_trial(&c, &s, 0).unwrap();
    let p = varhardy::experiments::config_exponent(&s, &c).unwrap();
    for r in [
        weak_type_sweep(&c).unwrap(),
        doob_strong_sweep(&c).unwrap(),
        block_average_sweep(&c).unwrap(),
        jn_equivalence(&c, &p).unwrap(),
        exp_jn_curve(&f, &p, None, ExpJnOptions::default()).unwrap(),
        nakai_sadasue(15).unwrap(),
        violation_33_search(&c).unwrap(),
    ] {
        check_report(&r);
    }
}

#[test]
fn general_filtrations_are_reported() {
    // irregular trees: the strong-type estimator runs and reports an envelope
    let c = TrialConfig::new(
        SpaceSpec::Regular { arity: 5, depth: 2 },
        ExponentSpec { law: ExponentLaw::BlockStructured, p_min: 1.2, p_max: 4.0 },
    )
    .with_trials(20);
    let r = doob_strong_sweep(&c).unwrap();
    assert!(r.max.is_finite() && r.max >= 1.0);
}

#[test]
fn jn_envelope_is_perturbation_stable() {
    let c = iid(2).with_trials(40);
    let s = c.space.build().unwrap();
    let p = varhardy::experiments::config_exponent(&s, &c).unwrap();
    let base = jn_equivalence(&c, &p).unwrap();
    let moved = TrialConfig { space: SpaceSpec::Explicit { space: perturb_probabilities(&s, 1e-6, 3).unwrap() }, ..c };
    let other = jn_equivalence(&moved, &p).unwrap();
    let (a, b) = (base.params["envelope"], other.params["envelope"]);
    assert!((a / b - 1.0).abs() < 0.1);
}

#[test]
fn jn_rejects_small_exponents() {
    let c = iid(2);
    let p = Exponent::new(vec![0.5, 1.0, 2.0, 2.0]).unwrap();
    assert!(matches!(jn_equivalence(&c, &p), Err(varhardy::Error::Domain(_))));
}

#[test]
fn exhaustive_jn_is_resource_limited() {
    let c = TrialConfig::new(SpaceSpec::Dyadic { depth: 5 }, ExponentSpec::constant(2.0)).with_trials(1);
    let p = Exponent::constant(32, 2.0).unwrap();
    assert!(matches!(jn_equivalence(&c, &p), Err(varhardy::Error::Resource(_))));
}
