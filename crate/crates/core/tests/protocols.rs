use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use q2mpc_core::engine::{evaluate_plain, random_circuit, run_mpc, run_on, Inputs, RunOptions};
use q2mpc_core::field::{FieldElement, FieldSpec};
use q2mpc_core::msp::Msp;
use q2mpc_core::mult::{mult, vss_cp, ProductClaim};
use q2mpc_core::simnet::{AdversaryScript, Event, Network, Recording, Strategy};
use q2mpc_core::structures::PlayerSet;
use q2mpc_core::vss::{vss_deal, vss_linear, vss_open};
use q2mpc_core::wss::{wss_commit, wss_open, Audience, Params, WssOpenOutcome};

fn params(q: u64, n: usize, t: usize, k: usize) -> Params {
    let kf = FieldSpec::computation(q).unwrap();
    Params::new(Msp::threshold(n, t, &kf).unwrap(), k).unwrap()
}

fn script(corrupt: usize, strategy: Strategy) -> AdversaryScript {
    AdversaryScript::new(PlayerSet::singleton(corrupt), strategy)
}

#[test]
fn weak_sharing_opens_to_at_most_one_value() {
    let p = params(7, 3, 1, 3);
    let kf = *p.computation_field();
    for seed in 0..500 {
        let strategy = if seed % 2 == 0 {
            Strategy::InconsistentWssDealer
        } else {
            Strategy::Honest
        };
        let mut net = Network::new(3, seed, script(0, strategy));
        let c = wss_commit(&mut net, &p, 0, kf.elem(seed % 7)).unwrap();
        let mut values = BTreeSet::new();
        for opener in [Strategy::Honest, Strategy::LyingOpener] {
            let mut fork = net.clone();
            fork.set_adversary(script(0, opener));
            if let WssOpenOutcome::Value(v) = wss_open(&mut fork, &p, &c, Audience::Public) {
                values.insert(v);
            }
        }
        assert!(values.len() <= 1, "seed {seed}: {values:?}");
    }
}

#[test]
fn honest_weak_sharing_always_opens() {
    let p = params(7, 3, 1, 2);
    let kf = *p.computation_field();
    for seed in 0..200 {
        let mut net = Network::honest(3, seed);
        let c = wss_commit(&mut net, &p, (seed % 3) as usize, kf.elem(seed % 7)).unwrap();
        for audience in [
            Audience::Public,
            Audience::Player(0),
            Audience::Player(1),
            Audience::Player(2),
        ] {
            assert_eq!(
                wss_open(&mut net, &p, &c, audience),
                WssOpenOutcome::Value(kf.elem(seed % 7))
            );
        }
    }
}

#[test]
fn verifiable_sharing_opens_to_one_value_under_any_opening_script() {
    let p = params(7, 3, 1, 1);
    let kf = *p.computation_field();
    let scripts = [
        script(1, Strategy::LyingOpener),
        script(2, Strategy::LyingOpener),
        script(0, Strategy::Honest),
    ];
    for seed in 0..300 {
        let a = kf.elem(seed % 7);
        let mut net = Network::honest(3, seed);
        let c = vss_deal(&mut net, &p, 0, a).unwrap();
        for (i, adv) in scripts.iter().enumerate() {
            let mut fork = net.clone();
            fork.set_adversary(adv.clone());
            if i == 2 {
                fork.silence(PlayerSet::singleton(0));
            }
            assert_eq!(vss_open(&mut fork, &p, &c), Ok(a), "seed {seed} script {i}");
        }
    }
}

#[test]
fn removed_holder_does_not_change_the_value() {
    let p = params(7, 3, 1, 1);
    let kf = *p.computation_field();
    for seed in 0..30 {
        let mut net = Network::new(3, seed, script(1, Strategy::LyingOpener));
        let c = vss_deal(&mut net, &p, 0, kf.elem(6)).unwrap();
        assert_eq!(c.removed, PlayerSet::singleton(1));
        let mut honest = Network::honest(3, seed);
        let reference = vss_deal(&mut honest, &p, 0, kf.elem(6)).unwrap();
        assert_eq!(
            vss_open(&mut net, &p, &c),
            vss_open(&mut honest, &p, &reference)
        );
    }
}

/// One-sided 3σ bound on the binomial count of `trials` events of probability `p`.
fn binomial_bound(trials: usize, p: f64) -> f64 {
    let mean = trials as f64 * p;
    mean + 3.0 * (mean * (1.0 - p)).sqrt()
}

#[test]
fn accepted_products_open_to_the_product() {
    let p = params(7, 3, 1, 1);
    let kf = *p.computation_field();
    let scripts = [
        AdversaryScript::honest(),
        script(2, Strategy::WrongProductDealer),
        script(1, Strategy::LyingOpener),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut escapes = 0;
    for trial in 0..500u64 {
        let (u, v) = (kf.elem(rng.gen_range(0..7)), kf.elem(rng.gen_range(0..7)));
        let adv = &scripts[trial as usize % 3];
        let mut net = Network::new(3, trial, adv.clone());
        let uc = vss_deal(&mut net, &p, 0, u).unwrap();
        let vc = vss_deal(&mut net, &p, 0, v).unwrap();
        let w = mult(&mut net, &p, &uc, &vc).unwrap();
        let opened_u = vss_open(&mut net, &p, &uc).unwrap();
        let opened_v = vss_open(&mut net, &p, &vc).unwrap();
        let excluded = net
            .annotations()
            .iter()
            .any(|a| matches!(a.event, Event::Excluded { .. }));
        let product = vss_open(&mut net, &p, &w);
        if adv.strategy == Strategy::WrongProductDealer && !excluded {
            escapes += 1;
            assert_ne!(product, Ok(opened_u * opened_v), "trial {trial}");
        } else {
            assert_eq!(product, Ok(opened_u * opened_v), "trial {trial}");
        }
    }
    let cheating = (0..500).filter(|t| t % 3 == 1).count();
    assert!(
        (escapes as f64) <= binomial_bound(cheating, 0.5),
        "{escapes} of {cheating}"
    );
}

/// Opened values of one honest product proof, in order.
fn proof_openings(seed: u64, p: &Params) -> Vec<FieldElement> {
    let kf = *p.computation_field();
    let mut net = Network::honest(3, seed);
    let a = vss_deal(&mut net, p, 0, kf.elem(3)).unwrap();
    let b = vss_deal(&mut net, p, 0, kf.elem(seed % 5)).unwrap();
    let c = vss_deal(&mut net, p, 0, kf.elem(3 * (seed % 5))).unwrap();
    let before = net.annotations().len();
    assert!(vss_cp(
        &mut net,
        p,
        ProductClaim {
            dealer: 0,
            a: &a,
            b: &b,
            c: &c
        }
    ));
    net.annotations()[before..]
        .iter()
        .filter_map(|a| match a.event {
            Event::Opened { value } => Some(value),
            _ => None,
        })
        .collect()
}

#[test]
fn product_proof_openings_are_blinded() {
    let p = params(5, 3, 1, 1);
    let mut counts = [0u64; 5];
    let mut rounds = 0;
    let mut seed = 0;
    while rounds < 5000 {
        let opened = proof_openings(seed, &p);
        assert_eq!(opened.len(), 6, "two openings per round");
        for pair in opened.chunks(2) {
            assert!(pair[1].is_zero());
            counts[pair[0].value() as usize] += 1;
            rounds += 1;
        }
        seed += 1;
    }
    let expected = rounds as f64 / 5.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 4 degrees of freedom: P(chi2 > 18.467) = 0.001.
    assert!(chi2 < 18.467, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn linear_combinations_of_different_dealers() {
    let p = params(7, 3, 1, 1);
    let kf = *p.computation_field();
    let mut net = Network::honest(3, 1);
    let a = vss_deal(&mut net, &p, 0, kf.elem(3)).unwrap();
    let b = vss_deal(&mut net, &p, 2, kf.elem(2)).unwrap();
    let c = vss_linear(&mut net, &p, &[(kf.elem(2), &a), (kf.one(), &b)]).unwrap();
    assert_eq!(vss_open(&mut net, &p, &c), Ok(kf.one()));
}

fn random_inputs(rng: &mut ChaCha8Rng, circuit: &q2mpc_core::engine::Circuit) -> Inputs {
    let q = circuit.field().modulus();
    circuit
        .inputs()
        .map(|(w, _)| (w.clone(), circuit.field().elem(rng.gen_range(0..q))))
        .collect()
}

#[test]
fn honest_runs_match_plain_evaluation() {
    let p = params(7, 3, 1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..100 {
        let circuit = random_circuit(&mut rng, *p.computation_field(), 3, 12, 4);
        let inputs = random_inputs(&mut rng, &circuit);
        let want = evaluate_plain(&circuit, &inputs).unwrap();
        for seed in 0..3 {
            let out = run_mpc(
                &circuit,
                &inputs,
                &p,
                &AdversaryScript::honest(),
                seed,
                &RunOptions::default(),
            )
            .unwrap();
            assert_eq!(out.outputs, want, "circuit {i} seed {seed}:\n{circuit}");
            assert_eq!(out.restarts, 0);
        }
    }
}

#[test]
fn every_script_keeps_outputs_correct() {
    let k = 2;
    let p = params(7, 3, 1, k);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut wrong = 0;
    let mut cheating = 0;
    for strategy in Strategy::ALL {
        // These two can escape detection by guessing coins.
        let bounded = matches!(
            strategy,
            Strategy::InconsistentVssDealer | Strategy::WrongProductDealer
        );
        for trial in 0..6u64 {
            let circuit = random_circuit(&mut rng, *p.computation_field(), 3, 8, 2);
            let inputs = random_inputs(&mut rng, &circuit);
            let adv = script((trial % 3) as usize, strategy);
            let out = run_mpc(&circuit, &inputs, &p, &adv, trial, &RunOptions::default()).unwrap();
            assert!(out.restarts <= 3);
            assert!(out.disqualified.is_subset(&adv.corrupt));
            let mut effective = inputs.clone();
            effective.extend(out.public_inputs.clone());
            if strategy != Strategy::InconsistentVssDealer {
                for (w, v) in &out.public_inputs {
                    assert_eq!(inputs[w], *v, "{strategy:?} changed input {w}");
                }
            }
            let want = evaluate_plain(&circuit, &effective).unwrap();
            if bounded {
                cheating += 1;
                wrong += usize::from(out.outputs != want);
            } else {
                assert_eq!(out.outputs, want, "{strategy:?} trial {trial}:\n{circuit}");
            }
        }
    }
    let p_fail = 0.5f64.powi(k as i32);
    assert!(
        (wrong as f64) <= binomial_bound(cheating, p_fail),
        "{wrong} of {cheating}"
    );
}

#[test]
fn runs_are_deterministic() {
    let p = params(7, 3, 1, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let circuit = random_circuit(&mut rng, *p.computation_field(), 3, 10, 2);
    let inputs = random_inputs(&mut rng, &circuit);
    let adv = script(2, Strategy::RefuseConversion);
    let transcript = |seed| {
        let mut net = Network::new(3, seed, adv.clone());
        net.set_recording(Recording::Full);
        run_on(&mut net, &circuit, &inputs, &p).unwrap();
        net.transcript().render()
    };
    assert_eq!(transcript(5), transcript(5));
    assert_ne!(transcript(5), transcript(6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_combinations_open_correctly(
        xs in prop::collection::vec((0u64..7, 0u64..7, 0usize..3), 1..4),
        seed in 0u64..1000,
    ) {
        let p = params(7, 3, 1, 1);
        let kf = *p.computation_field();
        let mut net = Network::honest(3, seed);
        let commits: Vec<_> = xs
            .iter()
            .map(|&(x, _, dealer)| vss_deal(&mut net, &p, dealer, kf.elem(x)).unwrap())
            .collect();
        let terms: Vec<_> = xs.iter().zip(&commits).map(|(&(_, l, _), c)| (kf.elem(l), c)).collect();
        let combo = vss_linear(&mut net, &p, &terms).unwrap();
        let want = xs.iter().fold(kf.zero(), |acc, &(x, l, _)| acc + kf.elem(x) * kf.elem(l));
        prop_assert_eq!(vss_open(&mut net, &p, &combo), Ok(want));
        let shifted = combo.const_add(&p, kf.elem(seed % 7));
        prop_assert_eq!(vss_open(&mut net, &p, &shifted), Ok(want + kf.elem(seed % 7)));
    }

    #[test]
    fn sharing_consistency_is_verified(seed in 0u64..10_000, a in 0u64..7) {
        let p = params(7, 3, 1, 1);
        let kf = *p.computation_field();
        let mut net = Network::honest(3, seed);
        let c = vss_deal(&mut net, &p, (seed % 3) as usize, kf.elem(a)).unwrap();
        prop_assert!(c.is_consistent(&p));
        prop_assert!(c.removed.is_empty());
    }
}
