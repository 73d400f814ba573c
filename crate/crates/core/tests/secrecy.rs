//! View-distribution checks for a corrupted coalition.
//!
//! Small protocols are enumerated exhaustively over every random choice.
//! For the sharing protocols the coalition's view is affine in the secret
//! and the computation-field randomness once coins and the
//! authentication-field draws are fixed, so equal distributions reduce to a
//! linear-algebra question: the secret's direction must lie in the span of
//! the randomness directions.

use std::collections::BTreeMap;

use q2mpc_core::engine::{run_on, Circuit, Gate, Inputs};
use q2mpc_core::field::{decode_shares, FieldElement, FieldSpec};
use q2mpc_core::ic::{gic_generate, AuthParams, GicOutcome, GicRequest};
use q2mpc_core::msp::{solve_linear, Msp};
use q2mpc_core::simnet::{
    view_of, AdversaryScript, DrawClass, Enumerator, Network, Payload, Recording, Strategy, Tape,
    Transcript,
};
use q2mpc_core::structures::PlayerSet;
use q2mpc_core::vss::vss_deal;
use q2mpc_core::wss::{share, wss_commit, Params};

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exact distribution of `view(secret)` over all random choices, as view
/// key to probability numerator over a common denominator.
fn exhaustive<F>(secrets: &[u64], mut run: F) -> Vec<BTreeMap<String, u128>>
where
    F: FnMut(&mut Network, u64) -> Option<String>,
{
    let mut raw: Vec<Vec<(String, u128)>> = Vec::new();
    for &s in secrets {
        let source = Enumerator::shared();
        let mut leaves = Vec::new();
        while source.borrow_mut().advance() {
            let mut net = Network::with_source(3, source.clone(), AdversaryScript::honest());
            net.set_recording(Recording::Full);
            let key = run(&mut net, s);
            let w = source.borrow().leaf_weight();
            leaves.push((key.unwrap_or_else(|| "<excluded>".into()), w));
        }
        raw.push(leaves);
    }
    let lcm = raw
        .iter()
        .flatten()
        .fold(1u128, |acc, (_, w)| acc / gcd(acc, *w) * w);
    raw.into_iter()
        .map(|leaves| {
            let mut dist = BTreeMap::new();
            for (k, w) in leaves {
                *dist.entry(k).or_insert(0) += lcm / w;
            }
            dist
        })
        .collect()
}

fn view_key(t: &Transcript, b: PlayerSet) -> String {
    let v = view_of(t, b);
    format!("{:?}|{:?}|{:?}", v.messages, v.draws, v.inputs)
}

#[test]
fn share_hides_the_secret_from_any_single_player() {
    let k = FieldSpec::computation(5).unwrap();
    let params = Params::new(Msp::threshold(3, 1, &k).unwrap(), 1).unwrap();
    for corrupt in 1..3 {
        let dists = exhaustive(&[0, 1, 2, 3, 4], |net, s| {
            share(net, &params, 0, k.elem(s));
            Some(view_key(&net.transcript(), PlayerSet::singleton(corrupt)))
        });
        assert_eq!(dists[0].len(), 5, "one view per share value");
        for d in &dists[1..] {
            assert_eq!(d, &dists[0]);
        }
    }
    let pair = exhaustive(&[0, 1], |net, s| {
        share(net, &params, 0, k.elem(s));
        Some(view_key(&net.transcript(), PlayerSet::from_bits(0b110)))
    });
    assert_ne!(pair[0], pair[1]);
}

#[test]
fn information_checking_hides_the_value_from_the_receiver() {
    let f = FieldSpec::authentication(11).unwrap();
    let auth = AuthParams { field: f, k: 1 };
    let dists = exhaustive(&[0, 1], |net, s| {
        let inst = gic_generate(net, &auth, GicRequest::honest(0, 1, 2, f.elem(s)));
        (inst.outcome == GicOutcome::Established)
            .then(|| view_key(&net.transcript(), PlayerSet::singleton(2)))
    });
    assert!(dists[0].len() > 1);
    assert_eq!(dists[0], dists[1]);
}

/// The coalition's view split into its discrete skeleton and the vector
/// of computation-field values it contains.
#[derive(Debug, PartialEq, Eq)]
struct AffineView {
    skeleton: Vec<String>,
    values: Vec<FieldElement>,
}

fn affine_view(t: &Transcript, b: PlayerSet, params: &Params) -> AffineView {
    let k = params.computation_field();
    let f = params.auth_field();
    let v = view_of(t, b);
    let mut skeleton = Vec::new();
    let mut values = Vec::new();
    for m in &v.messages {
        let head = format!(
            "r{} P{} {:?} {}",
            m.round,
            m.sender,
            m.channel,
            m.payload.kind()
        );
        match &m.payload {
            Payload::Shares {
                session,
                values: xs,
            }
            | Payload::OpenSecret {
                session,
                a_star: xs,
            }
            | Payload::BStar {
                session,
                b_star: xs,
            } => {
                skeleton.push(format!("{head} s{session} {}", xs.len()));
                values.extend(xs);
            }
            Payload::Disclose {
                session,
                player,
                rows,
            } => {
                let shape: Vec<(u32, usize)> = rows.iter().map(|(l, xs)| (*l, xs.len())).collect();
                skeleton.push(format!("{head} s{session} P{player} {shape:?}"));
                values.extend(rows.iter().flat_map(|(_, xs)| xs.iter().copied()));
            }
            // The intermediary's value encodes its shares; keys are F material.
            Payload::GicAuth {
                session, claimed, ..
            } => {
                let rows = params.msp.rows_of(m.sender).len();
                let shares = decode_shares(*claimed, rows, k, f).expect("unscaled encoding");
                skeleton.push(format!("{head} s{session}"));
                values.extend(shares);
            }
            Payload::GicKeys { session, .. }
            | Payload::GicChecks { session, .. }
            | Payload::GicFreshCheck { session, .. }
            | Payload::GicFreshKey { session, .. }
            | Payload::GicPublish { session, .. } => skeleton.push(format!("{head} s{session}")),
            Payload::GicReveal { session, checks } => {
                let idx: Vec<u32> = checks.iter().map(|(i, _)| *i).collect();
                skeleton.push(format!("{head} s{session} {idx:?}"));
            }
            other => skeleton.push(format!("{head} {other:?}")),
        }
    }
    for (p, draws) in &v.draws {
        for (class, x) in draws {
            match class {
                DrawClass::Computation => values.push(k.elem(*x)),
                DrawClass::Authentication => skeleton.push(format!("draw P{p} F")),
                other => skeleton.push(format!("draw P{p} {other:?} {x}")),
            }
        }
    }
    AffineView { skeleton, values }
}

/// For every coin assignment, checks that each direction in `dirs` moves
/// the view only within the span of the randomness directions. Returns the
/// number of coins, or the first leaking direction.
fn affine_secrecy<F>(
    params: &Params,
    corrupt: PlayerSet,
    dirs: &[Vec<i64>],
    run: F,
) -> Result<usize, String>
where
    F: Fn(&mut Network, &[FieldElement]),
{
    let k = *params.computation_field();
    let n = params.n();
    let adversary = AdversaryScript::new(corrupt, Strategy::Honest);
    let r = dirs[0].len();
    let exec = |tape: Vec<u64>, coins: Vec<u64>, x: &[FieldElement]| {
        let source = Tape::shared(tape, coins, 99);
        let mut net = Network::with_source(n, source.clone(), adversary.clone());
        net.set_recording(Recording::Full);
        run(&mut net, x);
        let counts = (
            source.borrow().computation_draws(),
            source.borrow().coin_draws(),
        );
        (affine_view(&net.transcript(), corrupt, params), counts)
    };
    let zero_x = vec![k.zero(); r];
    let (_, (m, c)) = exec(Vec::new(), Vec::new(), &zero_x);
    assert!(c <= 12, "too many coins to enumerate: {c}");

    for mask in 0..(1u64 << c) {
        let coins: Vec<u64> = (0..c).map(|i| (mask >> i) & 1).collect();
        let (base, counts) = exec(vec![0; m], coins.clone(), &zero_x);
        assert_eq!(counts, (m, c));
        let diff = |v: &AffineView| -> Vec<FieldElement> {
            assert_eq!(
                v.skeleton, base.skeleton,
                "discrete part depends on the probe"
            );
            v.values
                .iter()
                .zip(&base.values)
                .map(|(a, b)| *a - *b)
                .collect()
        };
        let columns: Vec<Vec<FieldElement>> = (0..m)
            .map(|i| {
                let mut tape = vec![0; m];
                tape[i] = 1;
                diff(&exec(tape, coins.clone(), &zero_x).0)
            })
            .collect();
        let rows = base.values.len();
        let matrix: Vec<Vec<FieldElement>> = (0..rows)
            .map(|row| columns.iter().map(|col| col[row]).collect())
            .collect();

        // The model holds: a random probe is predicted by the linear part.
        let probe: Vec<u64> = (0..m as u64)
            .map(|i| (i * 7 + mask + 3) % k.modulus())
            .collect();
        let x_probe: Vec<FieldElement> = (0..r as u64).map(|i| k.elem(i + 2)).collect();
        let secret_cols: Vec<Vec<FieldElement>> = (0..r)
            .map(|i| {
                let mut x = zero_x.clone();
                x[i] = k.one();
                diff(&exec(vec![0; m], coins.clone(), &x).0)
            })
            .collect();
        let observed = diff(&exec(probe.clone(), coins.clone(), &x_probe).0);
        for (row, got) in observed.iter().enumerate() {
            let mut want = k.zero();
            for (i, t) in probe.iter().enumerate() {
                want += columns[i][row] * k.elem(*t);
            }
            for (i, x) in x_probe.iter().enumerate() {
                want += secret_cols[i][row] * *x;
            }
            assert_eq!(*got, want, "view entry {row} is not affine");
        }

        for dir in dirs {
            let w: Vec<FieldElement> = (0..rows)
                .map(|row| {
                    (0..r).fold(k.zero(), |acc, i| {
                        acc + secret_cols[i][row] * k.elem_i64(dir[i])
                    })
                })
                .collect();
            let solvable = if m == 0 {
                w.iter().all(|x| x.is_zero())
            } else {
                solve_linear(&matrix, &w).unwrap().is_some()
            };
            if !solvable {
                return Err(format!("direction {dir:?} leaks under coins {coins:?}"));
            }
        }
    }
    Ok(c)
}

fn gf5_params() -> Params {
    let k = FieldSpec::computation(5).unwrap();
    Params::new(Msp::threshold(3, 1, &k).unwrap(), 1).unwrap()
}

#[test]
fn weak_sharing_hides_the_secret() {
    let params = gf5_params();
    for corrupt in 1..3 {
        let r = affine_secrecy(
            &params,
            PlayerSet::singleton(corrupt),
            &[vec![1]],
            |net, x| {
                wss_commit(net, &params, 0, x[0]).unwrap();
            },
        );
        assert!(r.is_ok(), "{r:?}");
    }
    // A qualified coalition sees the secret.
    let r = affine_secrecy(
        &params,
        PlayerSet::from_bits(0b110),
        &[vec![1]],
        |net, x| {
            wss_commit(net, &params, 0, x[0]).unwrap();
        },
    );
    assert!(r.is_err());
}

#[test]
fn verifiable_sharing_hides_the_secret() {
    let params = gf5_params();
    for corrupt in 1..3 {
        let coins = affine_secrecy(
            &params,
            PlayerSet::singleton(corrupt),
            &[vec![1]],
            |net, x| {
                vss_deal(net, &params, 0, x[0]).unwrap();
            },
        );
        assert_eq!(coins, Ok(3));
    }
}

#[test]
fn evaluation_reveals_only_the_output() {
    let params = gf5_params();
    let k = *params.computation_field();
    let circuit = Circuit::new(
        k,
        vec![
            Gate::Input {
                wire: "x".into(),
                owner: 0,
            },
            Gate::Input {
                wire: "y".into(),
                owner: 1,
            },
            Gate::Add {
                out: "s".into(),
                a: "x".into(),
                b: "y".into(),
            },
            Gate::Output { wire: "s".into() },
        ],
    )
    .unwrap();
    let run = |net: &mut Network, x: &[FieldElement]| {
        let inputs: Inputs = [("x".to_string(), x[0]), ("y".to_string(), x[1])].into();
        run_on(net, &circuit, &inputs, &params).unwrap();
    };
    let same_sum = affine_secrecy(&params, PlayerSet::singleton(2), &[vec![1, -1]], run);
    assert!(same_sum.is_ok(), "{same_sum:?}");
    // Changing one input changes the output, which is public.
    assert!(affine_secrecy(&params, PlayerSet::singleton(2), &[vec![1, 0]], run).is_err());
}
