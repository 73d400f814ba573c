//! Guaranteed information checking.
//!
//! A dealer `D` lets an intermediary `INT` later convince a receiver `R` that
//! a value `s` in the authentication field came from `D`. `D` hands `INT`
//! keys `y_i` and `R` check vectors `(b_i, c_i = s + b_i y_i)`; half of them
//! are opened in a cut-and-choose so `INT` knows `R` will accept.

use thiserror::Error;

use crate::field::{FieldElement, FieldSpec};
use crate::simnet::{Event, Network, PartyId, Payload, SessionId, Strategy};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IcError {
    #[error("scaling by zero")]
    ZeroScalar,
    #[error("instance has no private keys (outcome {0:?})")]
    NotEstablished(GicOutcome),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CheckVector {
    pub b: FieldElement,
    pub c: FieldElement,
}

impl CheckVector {
    pub fn verifies(&self, s: FieldElement, y: FieldElement) -> bool {
        self.c == s + self.b * y
    }
}

/// Which check data survived generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GicPath {
    /// The `k` unopened vectors of the cut-and-choose.
    List,
    /// A single fresh vector broadcast by the dealer after a dispute.
    Single,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GicIntState {
    pub s: FieldElement,
    pub keys: Vec<FieldElement>,
    pub path: GicPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GicRecvState {
    pub checks: Vec<CheckVector>,
    pub path: GicPath,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GicOutcome {
    Established,
    /// `INT` doubted acceptance and `D` made the value public.
    Published(FieldElement),
    /// `D` refused to publish when asked.
    DealerDisqualified,
}

/// Security setting shared by all sub-protocols: the authentication field and `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuthParams {
    pub field: FieldSpec,
    pub k: usize,
}

/// Deviations of a dishonest dealer during generation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DealerConduct {
    /// Indices of check vectors sent to `R` with `c` off by one.
    pub bad_checks: Vec<usize>,
    /// Disapprove even if `R` revealed the right vectors.
    pub force_fresh: bool,
    /// The fresh check vector does not verify.
    pub bad_fresh: bool,
    /// Ignore a demand to publish.
    pub silent_on_demand: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GicRequest {
    pub dealer: PartyId,
    pub int: PartyId,
    pub recv: PartyId,
    /// Value the dealer authenticates.
    pub dealer_value: FieldElement,
    /// Value the intermediary holds; differs only for a cheating dealer.
    pub int_value: FieldElement,
    pub conduct: DealerConduct,
    /// `R` misreports the first opened check vector.
    pub receiver_lies: bool,
}

impl GicRequest {
    pub fn honest(dealer: PartyId, int: PartyId, recv: PartyId, s: FieldElement) -> Self {
        GicRequest {
            dealer,
            int,
            recv,
            dealer_value: s,
            int_value: s,
            conduct: DealerConduct::default(),
            receiver_lies: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GicInstance {
    pub session: SessionId,
    pub dealer: PartyId,
    pub int: PartyId,
    pub recv: PartyId,
    pub outcome: GicOutcome,
    pub int_state: GicIntState,
    pub recv_state: GicRecvState,
    /// `INT`'s prediction of step 5.
    pub int_expects_acceptance: bool,
}

impl GicInstance {
    pub fn scaled(&self, lambda: FieldElement) -> Result<GicInstance, IcError> {
        let (int_state, recv_state) = gic_scale(&self.int_state, &self.recv_state, lambda)?;
        let outcome = match self.outcome {
            GicOutcome::Published(s) => GicOutcome::Published(s * lambda),
            o => o,
        };
        Ok(GicInstance {
            outcome,
            int_state,
            recv_state,
            ..self.clone()
        })
    }
}

/// `R`'s acceptance test.
pub fn gic_authenticate(
    int_state: &GicIntState,
    recv_state: &GicRecvState,
    claimed: FieldElement,
) -> bool {
    check_claim(recv_state, claimed, &int_state.keys)
}

fn check_claim(recv_state: &GicRecvState, claimed: FieldElement, keys: &[FieldElement]) -> bool {
    keys.len() == recv_state.checks.len()
        && recv_state
            .checks
            .iter()
            .zip(keys)
            .any(|(cv, y)| cv.verifies(claimed, *y))
}

/// Multiplies the authenticated value by `lambda`; keys stay, check vectors scale.
pub fn gic_scale(
    int_state: &GicIntState,
    recv_state: &GicRecvState,
    lambda: FieldElement,
) -> Result<(GicIntState, GicRecvState), IcError> {
    if lambda.is_zero() {
        return Err(IcError::ZeroScalar);
    }
    let int = GicIntState {
        s: int_state.s * lambda,
        keys: int_state.keys.clone(),
        path: int_state.path,
    };
    let recv = GicRecvState {
        checks: recv_state
            .checks
            .iter()
            .map(|cv| CheckVector {
                b: cv.b * lambda,
                c: cv.c * lambda,
            })
            .collect(),
        path: recv_state.path,
    };
    Ok((int, recv))
}

/// Runs generation for many instances in the same six rounds.
pub fn gic_generate_batch(
    net: &mut Network,
    params: &AuthParams,
    requests: &[GicRequest],
) -> Vec<GicInstance> {
    if requests.is_empty() {
        return Vec::new();
    }
    let f = params.field;
    let k = params.k;
    let sessions: Vec<SessionId> = requests.iter().map(|_| net.new_session()).collect();

    // Step 1: keys to INT, check vectors to R.
    let mut keys: Vec<Vec<FieldElement>> = Vec::with_capacity(requests.len());
    let mut received: Vec<Vec<CheckVector>> = Vec::with_capacity(requests.len());
    for (req, &session) in requests.iter().zip(&sessions) {
        net.count_bounded_event();
        let rng = net.rng(req.dealer);
        let mut ys = Vec::with_capacity(2 * k);
        let mut to_r = Vec::with_capacity(2 * k);
        for _ in 0..2 * k {
            let y = rng.uniform(&f);
            let b = rng.nonzero(&f);
            ys.push(y);
            to_r.push(CheckVector {
                b,
                c: req.dealer_value + b * y,
            });
        }
        for &i in &req.conduct.bad_checks {
            if let Some(cv) = to_r.get_mut(i) {
                cv.c += f.one();
            }
        }
        let ys = deliver(
            net,
            req.dealer,
            req.int,
            Payload::GicKeys { session, keys: ys },
            |p| match p {
                Payload::GicKeys { keys, .. } => keys,
                _ => unreachable!(),
            },
        );
        let to_r = deliver(
            net,
            req.dealer,
            req.recv,
            Payload::GicChecks {
                session,
                checks: to_r,
            },
            |p| match p {
                Payload::GicChecks { checks, .. } => checks,
                _ => unreachable!(),
            },
        );
        keys.push(ys);
        received.push(to_r);
    }
    net.advance();

    // Step 2: INT opens a random half.
    let mut challenges: Vec<Vec<usize>> = Vec::with_capacity(requests.len());
    for (req, &session) in requests.iter().zip(&sessions) {
        let idx = net.rng(req.int).subset(2 * k, k);
        let indices = idx.iter().map(|&i| i as u32).collect();
        net.broadcast(req.int, Payload::GicChallenge { session, indices });
        challenges.push(idx);
    }
    net.advance();

    // Step 3: R reveals the chosen vectors.
    let mut revealed: Vec<Vec<(u32, CheckVector)>> = Vec::with_capacity(requests.len());
    for (i, (req, &session)) in requests.iter().zip(&sessions).enumerate() {
        let mut checks: Vec<(u32, CheckVector)> = challenges[i]
            .iter()
            .map(|&j| (j as u32, received[i][j]))
            .collect();
        if req.receiver_lies {
            if let Some(first) = checks.first_mut() {
                first.1.c += f.one();
            }
        }
        net.broadcast(
            req.recv,
            Payload::GicReveal {
                session,
                checks: checks.clone(),
            },
        );
        revealed.push(checks);
    }
    net.advance();

    // Step 4: D approves or issues one fresh vector.
    let mut fresh: Vec<Option<(FieldElement, CheckVector)>> = Vec::with_capacity(requests.len());
    for (i, (req, &session)) in requests.iter().zip(&sessions).enumerate() {
        let honest_reveal = revealed[i]
            .iter()
            .all(|(j, cv)| received[i][*j as usize] == *cv);
        if honest_reveal && !req.conduct.force_fresh {
            net.broadcast(req.dealer, Payload::GicApprove { session });
            fresh.push(None);
        } else {
            let rng = net.rng(req.dealer);
            let y = rng.uniform(&f);
            let b = rng.nonzero(&f);
            let mut c = req.dealer_value + b * y;
            if req.conduct.bad_fresh {
                c += f.one();
            }
            let check = CheckVector { b, c };
            net.broadcast(req.dealer, Payload::GicFreshCheck { session, check });
            let y = deliver(
                net,
                req.dealer,
                req.int,
                Payload::GicFreshKey { session, key: y },
                |p| match p {
                    Payload::GicFreshKey { key, .. } => key,
                    _ => unreachable!(),
                },
            );
            fresh.push(Some((y, check)));
        }
    }
    net.advance();

    // Step 5: INT predicts acceptance.
    let mut verdicts = Vec::with_capacity(requests.len());
    for (i, (req, &session)) in requests.iter().zip(&sessions).enumerate() {
        let accept = match &fresh[i] {
            None => revealed[i]
                .iter()
                .all(|(j, cv)| cv.verifies(req.int_value, keys[i][*j as usize])),
            Some((y, cv)) => cv.verifies(req.int_value, *y),
        };
        net.broadcast(req.int, Payload::GicVerdict { session, accept });
        verdicts.push(accept);
    }
    net.advance();

    // Step 6: publication on demand.
    let mut outcomes = vec![GicOutcome::Established; requests.len()];
    if verdicts.iter().any(|v| !v) {
        for (i, (req, &session)) in requests.iter().zip(&sessions).enumerate() {
            if verdicts[i] {
                continue;
            }
            if req.conduct.silent_on_demand {
                net.note(Event::Disqualified {
                    session,
                    player: req.dealer,
                    reason: "withheld GIC value",
                });
                outcomes[i] = GicOutcome::DealerDisqualified;
            } else {
                net.broadcast(
                    req.dealer,
                    Payload::GicPublish {
                        session,
                        value: req.dealer_value,
                    },
                );
                outcomes[i] = GicOutcome::Published(req.dealer_value);
            }
        }
        net.advance();
    }

    requests
        .iter()
        .enumerate()
        .map(|(i, req)| {
            let (int_state, recv_state) = match fresh[i] {
                None => {
                    let opened: Vec<usize> = challenges[i].clone();
                    let kept: Vec<usize> = (0..2 * k).filter(|j| !opened.contains(j)).collect();
                    (
                        GicIntState {
                            s: req.int_value,
                            keys: kept.iter().map(|&j| keys[i][j]).collect(),
                            path: GicPath::List,
                        },
                        GicRecvState {
                            checks: kept.iter().map(|&j| received[i][j]).collect(),
                            path: GicPath::List,
                        },
                    )
                }
                Some((y, cv)) => (
                    GicIntState {
                        s: req.int_value,
                        keys: vec![y],
                        path: GicPath::Single,
                    },
                    GicRecvState {
                        checks: vec![cv],
                        path: GicPath::Single,
                    },
                ),
            };
            GicInstance {
                session: sessions[i],
                dealer: req.dealer,
                int: req.int,
                recv: req.recv,
                outcome: outcomes[i],
                int_state,
                recv_state,
                int_expects_acceptance: verdicts[i],
            }
        })
        .collect()
}

pub fn gic_generate(net: &mut Network, params: &AuthParams, request: GicRequest) -> GicInstance {
    gic_generate_batch(net, params, &[request])
        .pop()
        .expect("one instance")
}

/// Sends unless sender and receiver coincide, and hands back the payload's content.
fn deliver<T>(
    net: &mut Network,
    from: PartyId,
    to: PartyId,
    payload: Payload,
    take: impl FnOnce(Payload) -> T,
) -> T {
    if from == to {
        take(payload)
    } else {
        take(net.send(from, to, payload))
    }
}

/// Result of one authentication, from `R`'s side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Authenticated {
    Accepted(FieldElement),
    Rejected,
}

/// `INT` sends its value and keys to `R`, who checks them. Public values need
/// no message. A corrupted `INT` running the forging strategy claims `s + 1`,
/// optionally adjusting one key per check vector for a guessed `b`.
/// Does not advance the round, so callers can batch.
pub fn gic_transmit(net: &mut Network, params: &AuthParams, inst: &GicInstance) -> Authenticated {
    match inst.outcome {
        GicOutcome::Published(s) => return Authenticated::Accepted(s),
        GicOutcome::DealerDisqualified => return Authenticated::Rejected,
        GicOutcome::Established => {}
    }
    let f = params.field;
    let mut claimed = inst.int_state.s;
    let mut keys = inst.int_state.keys.clone();
    if net.acts(inst.int, Strategy::ForgingIntermediary) {
        claimed += f.one();
        if net.adversary().forges_by_guessing() {
            // Accepted iff some guess equals the hidden b_i.
            for y in keys.iter_mut() {
                let guess = net.rng(inst.int).nonzero(&f);
                *y -= guess.inverse().expect("nonzero");
            }
        }
    }
    let session = inst.session;
    let (claimed, keys) = deliver(
        net,
        inst.int,
        inst.recv,
        Payload::GicAuth {
            session,
            claimed,
            keys,
        },
        |p| match p {
            Payload::GicAuth { claimed, keys, .. } => (claimed, keys),
            _ => unreachable!(),
        },
    );
    if check_claim(&inst.recv_state, claimed, &keys) {
        Authenticated::Accepted(claimed)
    } else {
        Authenticated::Rejected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::{AdversaryScript, Recording};
    use crate::structures::PlayerSet;

    fn params(q: u64, k: usize) -> AuthParams {
        AuthParams {
            field: FieldSpec::authentication(q).unwrap(),
            k,
        }
    }

    #[test]
    fn authenticate_examples() {
        let f = FieldSpec::authentication(101).unwrap();
        let int = GicIntState {
            s: f.elem(40),
            keys: vec![f.elem(7)],
            path: GicPath::Single,
        };
        let recv = GicRecvState {
            checks: vec![CheckVector {
                b: f.elem(5),
                c: f.elem(75),
            }],
            path: GicPath::Single,
        };
        assert!(gic_authenticate(&int, &recv, f.elem(40)));
        assert!(!gic_authenticate(&int, &recv, f.elem(41)));
    }

    #[test]
    fn scale_examples() {
        let f = FieldSpec::authentication(101).unwrap();
        let int = GicIntState {
            s: f.elem(40),
            keys: vec![f.elem(7)],
            path: GicPath::Single,
        };
        let recv = GicRecvState {
            checks: vec![CheckVector {
                b: f.elem(5),
                c: f.elem(75),
            }],
            path: GicPath::Single,
        };
        let (i2, r2) = gic_scale(&int, &recv, f.elem(2)).unwrap();
        assert_eq!(i2.s, f.elem(80));
        assert_eq!(
            r2.checks[0],
            CheckVector {
                b: f.elem(10),
                c: f.elem(49)
            }
        );
        assert!(gic_authenticate(&i2, &r2, f.elem(80)));
        assert_eq!(
            gic_scale(&int, &recv, f.one()).unwrap(),
            (int.clone(), recv.clone())
        );
        assert_eq!(gic_scale(&int, &recv, f.zero()), Err(IcError::ZeroScalar));
    }

    #[test]
    fn honest_generation_is_established_and_complete() {
        let p = params(101, 4);
        let s = p.field.elem(40);
        for seed in 0..200 {
            let mut net = Network::honest(3, seed);
            let inst = gic_generate(&mut net, &p, GicRequest::honest(0, 1, 2, s));
            assert_eq!(inst.outcome, GicOutcome::Established);
            assert_eq!(inst.int_state.path, GicPath::List);
            assert_eq!(inst.int_state.keys.len(), 4);
            for (cv, y) in inst.recv_state.checks.iter().zip(&inst.int_state.keys) {
                assert!(cv.verifies(s, *y));
            }
            assert_eq!(
                gic_transmit(&mut net, &p, &inst),
                Authenticated::Accepted(s)
            );
        }
    }

    #[test]
    fn lying_receiver_triggers_fresh_vector() {
        let p = params(101, 3);
        let mut req = GicRequest::honest(0, 1, 2, p.field.elem(9));
        req.receiver_lies = true;
        let mut net = Network::honest(3, 4);
        let inst = gic_generate(&mut net, &p, req);
        assert_eq!(inst.int_state.path, GicPath::Single);
        assert_eq!(inst.outcome, GicOutcome::Established);
        assert!(gic_authenticate(
            &inst.int_state,
            &inst.recv_state,
            p.field.elem(9)
        ));
    }

    #[test]
    fn dealer_disputes_resolve_publicly() {
        let p = params(101, 3);
        let s = p.field.elem(17);
        let mut req = GicRequest::honest(0, 1, 2, s);
        req.conduct.bad_checks = vec![0, 1, 2, 3, 4, 5];
        let inst = gic_generate(&mut Network::honest(3, 1), &p, req.clone());
        // The opened vectors fail INT's keys, so INT asks for publication.
        assert_eq!(inst.outcome, GicOutcome::Published(s));
        assert!(!inst.int_expects_acceptance);

        req.conduct = DealerConduct {
            bad_fresh: true,
            force_fresh: true,
            ..Default::default()
        };
        let inst = gic_generate(&mut Network::honest(3, 1), &p, req.clone());
        assert_eq!(inst.outcome, GicOutcome::Published(s));

        req.conduct.silent_on_demand = true;
        let mut net = Network::honest(3, 1);
        let inst = gic_generate(&mut net, &p, req);
        assert_eq!(inst.outcome, GicOutcome::DealerDisqualified);
        assert!(matches!(
            net.annotations()[0].event,
            Event::Disqualified { player: 0, .. }
        ));
    }

    #[test]
    fn forged_values_are_rejected() {
        let p = params(101, 4);
        let adv = AdversaryScript::new(PlayerSet::singleton(1), Strategy::ForgingIntermediary);
        for seed in 0..100 {
            let mut net = Network::new(3, seed, adv.clone());
            let inst = gic_generate(&mut net, &p, GicRequest::honest(0, 1, 2, p.field.elem(3)));
            assert_eq!(gic_transmit(&mut net, &p, &inst), Authenticated::Rejected);
        }
    }

    #[test]
    fn scaled_instances_still_authenticate() {
        let p = params(1009, 2);
        let mut net = Network::honest(3, 2);
        net.set_recording(Recording::Full);
        let inst = gic_generate(&mut net, &p, GicRequest::honest(0, 1, 2, p.field.elem(500)));
        let scaled = inst.scaled(p.field.elem(3)).unwrap();
        assert_eq!(
            gic_transmit(&mut net, &p, &scaled),
            Authenticated::Accepted(p.field.elem(491))
        );
    }
}
