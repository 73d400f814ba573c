//! Verifiable secret sharing. The dealer shares a value, every holder weakly
//! commits to its shares, and `kn` coin-selected challenges check that the
//! committed shares are consistent. Opening does not need the dealer.

use thiserror::Error;

use crate::field::FieldElement;
use crate::msp::{ExtendedSecret, ShareVector};
use crate::simnet::{Event, Network, PartyId, Payload, SessionId, Strategy};
use crate::structures::PlayerSet;
use crate::wss::{
    flip_coin, send_rows, wss_commit_batch, wss_linear_batch, wss_open_batch, Audience, Params,
    WssCommitment, WssError, WssRequest,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum VssError {
    #[error("dealer {0} is corrupt")]
    DealerCorrupt(PartyId),
    #[error("dealer {0} refused to convert its weak sharing")]
    DealerRefused(PartyId),
    #[error("no qualified set of players opened their shares")]
    ReconstructionImpossible,
    #[error("commitment has {got} rows, span program has {expected}")]
    MspMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Wss(#[from] WssError),
}

/// One top-level share: weakly committed by its holder, or public.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowShare {
    /// The share is the committed value plus a public offset.
    Committed {
        wss: WssCommitment,
        offset: FieldElement,
    },
    Public(FieldElement),
}

/// `[a]^V_D`, or `[a]^V` when `owner` is absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VssCommitment {
    pub owner: Option<PartyId>,
    pub rows: Vec<RowShare>,
    /// Players whose shares were made public during dealing.
    pub removed: PlayerSet,
    /// Extended secret as known to the owner; public for constants.
    pub a_star: Option<ExtendedSecret>,
}

impl VssCommitment {
    /// A public constant: every share is known.
    pub fn public(params: &Params, value: FieldElement) -> Self {
        let msp = &params.msp;
        let mut a_star = ExtendedSecret::zero(params.computation_field(), msp.cols());
        a_star.0[0] = value;
        VssCommitment {
            owner: None,
            rows: msp
                .shares_of(&a_star)
                .into_iter()
                .map(RowShare::Public)
                .collect(),
            removed: PlayerSet::EMPTY,
            a_star: Some(a_star),
        }
    }

    pub fn is_public(&self) -> bool {
        self.rows.iter().all(|r| matches!(r, RowShare::Public(_)))
    }

    /// The secret as the owner knows it.
    pub fn known_secret(&self) -> Option<FieldElement> {
        self.a_star.as_ref().map(ExtendedSecret::secret)
    }

    /// Rows whose share is public, with their values.
    pub fn public_shares(&self) -> impl Iterator<Item = (usize, FieldElement)> + '_ {
        self.rows.iter().enumerate().filter_map(|(l, r)| match r {
            RowShare::Public(v) => Some((l, *v)),
            RowShare::Committed { .. } => None,
        })
    }

    /// Each top-level share as its holder knows it.
    pub fn top_shares(&self) -> Vec<FieldElement> {
        self.rows
            .iter()
            .map(|r| match r {
                RowShare::Committed { wss, offset } => wss.a_star.secret() + *offset,
                RowShare::Public(v) => *v,
            })
            .collect()
    }

    /// Whether all top-level shares lie in the image of the span program.
    pub fn is_consistent(&self, params: &Params) -> bool {
        crate::msp::solve_linear(params.msp.matrix(), &self.top_shares())
            .map(|s| s.is_some())
            .unwrap_or(false)
    }

    /// Adds a public constant without communication.
    pub fn const_add(&self, params: &Params, lambda: FieldElement) -> VssCommitment {
        let msp = &params.msp;
        let mut out = self.clone();
        for (l, row) in out.rows.iter_mut().enumerate() {
            let delta = msp.row(l)[0] * lambda;
            match row {
                RowShare::Committed { offset, .. } => *offset += delta,
                RowShare::Public(v) => *v += delta,
            }
        }
        if let Some(a) = &mut out.a_star {
            a.0[0] += lambda;
        }
        out
    }
}

/// Public data about one removed row: its share, then its blinding shares.
type Disclosed = Vec<FieldElement>;

struct Challenge {
    heads: bool,
    b_star: ExtendedSecret,
}

/// Public state of one verifiable sharing while it is being dealt.
struct Dealing<'a> {
    params: &'a Params,
    session: SessionId,
    dealer: PartyId,
    dealt: Vec<FieldElement>,
    gamma: Vec<Vec<FieldElement>>,
    public: Vec<Option<Disclosed>>,
    removed: PlayerSet,
    rounds: Vec<Challenge>,
}

impl Dealing<'_> {
    fn live_rows(&self) -> Vec<usize> {
        let msp = &self.params.msp;
        (0..msp.rows())
            .filter(|&l| !self.removed.contains(msp.owner(l)))
            .collect()
    }

    /// The dealer broadcasts everything it gave `player`.
    fn disclose(&mut self, net: &mut Network, player: PartyId) {
        let rows = self
            .params
            .msp
            .rows_of(player)
            .iter()
            .map(|&l| {
                let mut v = vec![self.dealt[l]];
                v.extend(self.gamma.iter().map(|g| g[l]));
                (l as u32, v)
            })
            .collect();
        let payload = Payload::Disclose {
            session: self.session,
            player,
            rows,
        };
        if let Payload::Disclose { rows, .. } = net.broadcast(self.dealer, payload) {
            for (l, values) in rows {
                self.public[l as usize] = Some(values);
            }
        }
    }

    fn remove(&mut self, net: &mut Network, player: PartyId) -> Result<(), VssError> {
        self.removed.insert(player);
        net.note(Event::Removed {
            session: self.session,
            player,
        });
        self.disclose(net, player);
        self.check_public()
    }

    fn remove_all(&mut self, net: &mut Network, players: PlayerSet) -> Result<(), VssError> {
        let mut outcome = Ok(());
        for p in players.difference(&self.removed).iter() {
            outcome = outcome.and(self.remove(net, p));
        }
        if !players.is_empty() {
            net.advance();
        }
        outcome
    }

    /// Every public row must agree with every challenge answered so far.
    fn check_public(&self) -> Result<(), VssError> {
        let msp = &self.params.msp;
        for (l, values) in self.public.iter().enumerate() {
            let Some(values) = values else { continue };
            if values.len() != self.gamma.len() + 1 {
                return Err(VssError::DealerCorrupt(self.dealer));
            }
            for (j, ch) in self.rounds.iter().enumerate() {
                let beta = if ch.heads {
                    values[j + 1]
                } else {
                    values[0] + values[j + 1]
                };
                if !msp.check_row(&ch.b_star, l, beta) {
                    return Err(VssError::DealerCorrupt(self.dealer));
                }
            }
        }
        Ok(())
    }

    fn fail(&self, net: &mut Network, e: VssError, reason: &'static str) -> VssError {
        net.note(Event::Disqualified {
            session: self.session,
            player: self.dealer,
            reason,
        });
        e
    }
}

/// Steps 2 to 5 of the verifiable sharing: the holders of `held` commit to
/// their shares and the dealer answers `kn` challenges about them.
///
/// `dealt` is what the dealer gave out and what it discloses on demand.
fn verify_sharing(
    net: &mut Network,
    params: &Params,
    dealer: PartyId,
    a_star: ExtendedSecret,
    dealt: Vec<FieldElement>,
    held: Vec<FieldElement>,
    cheating: bool,
) -> Result<VssCommitment, VssError> {
    let msp = params.msp.clone();
    let kf = *params.computation_field();
    let (n, d) = (params.n(), msp.rows());
    let kn = params.k() * n;
    let target = params.target_row(net, dealer);
    net.count_bounded_event();
    let mut st = Dealing {
        params,
        session: net.new_session(),
        dealer,
        dealt,
        gamma: Vec::with_capacity(kn),
        public: vec![None; d],
        removed: net.silenced(),
        rounds: Vec::with_capacity(kn),
    };
    let session = st.session;

    // Step 2: every holder commits to its share.
    let rows = st.live_rows();
    let requests: Vec<WssRequest> = rows
        .iter()
        .map(|&l| WssRequest::new(msp.owner(l), held[l]))
        .collect();
    let mut alpha_w: Vec<Option<WssCommitment>> = vec![None; d];
    let mut failed = PlayerSet::EMPTY;
    for (&l, r) in rows.iter().zip(wss_commit_batch(net, params, &requests)) {
        match r {
            Ok(c) => alpha_w[l] = Some(c),
            Err(_) => failed.insert(msp.owner(l)),
        }
    }

    // Step 3: blinding sharings c^(j), their commitments and the sums.
    let mut c_stars = Vec::with_capacity(kn);
    let mut guesses = Vec::with_capacity(kn);
    for _ in 0..kn {
        let c = net.rng(dealer).uniform(&kf);
        let rho = net.rng(dealer).uniform_vec(&kf, msp.cols() - 1);
        let c_star = msp.extend_secret(c, &rho);
        let mut gamma = msp.shares_of(&c_star);
        if cheating {
            let heads = net.rng(dealer).coin();
            if !heads {
                gamma[target] -= kf.one();
            }
            guesses.push(Some(heads));
        } else {
            guesses.push(None);
        }
        c_stars.push(c_star);
        st.gamma.push(gamma);
    }
    let mut gamma_held = st.gamma.clone();
    for p in (0..n).filter(|&p| p != dealer && !st.removed.contains(p)) {
        let prows = msp.rows_of(p);
        let values = st
            .gamma
            .iter()
            .flat_map(|g| prows.iter().map(|&l| g[l]))
            .collect();
        if let Payload::Shares { values, .. } =
            net.send(dealer, p, Payload::Shares { session, values })
        {
            for (j, chunk) in values.chunks(prows.len()).enumerate() {
                for (&l, v) in prows.iter().zip(chunk) {
                    gamma_held[j][l] = *v;
                }
            }
        }
    }
    let initially_removed = st.removed;
    for p in initially_removed.iter() {
        st.disclose(net, p);
    }
    net.advance();
    st.remove_all(net, failed)
        .map_err(|e| st.fail(net, e, "inconsistent broadcast"))?;

    let rows = st.live_rows();
    let keys: Vec<(usize, usize)> = (0..kn)
        .flat_map(|j| rows.iter().map(move |&l| (j, l)))
        .collect();
    let requests: Vec<WssRequest> = keys
        .iter()
        .map(|&(j, l)| WssRequest::new(msp.owner(l), gamma_held[j][l]))
        .collect();
    let mut gamma_w: Vec<Vec<Option<WssCommitment>>> = vec![vec![None; d]; kn];
    let mut failed = PlayerSet::EMPTY;
    for (&(j, l), r) in keys.iter().zip(wss_commit_batch(net, params, &requests)) {
        match r {
            Ok(c) => gamma_w[j][l] = Some(c),
            Err(_) => failed.insert(msp.owner(l)),
        }
    }
    let one = kf.one();
    let summable: Vec<(usize, usize)> = keys
        .iter()
        .copied()
        .filter(|&(j, l)| gamma_w[j][l].is_some() && alpha_w[l].is_some())
        .collect();
    let combos: Vec<Vec<(FieldElement, &WssCommitment)>> = summable
        .iter()
        .map(|&(j, l)| {
            vec![
                (one, gamma_w[j][l].as_ref().expect("present")),
                (one, alpha_w[l].as_ref().expect("present")),
            ]
        })
        .collect();
    let mut sum_w: Vec<Vec<Option<WssCommitment>>> = vec![vec![None; d]; kn];
    for (&(j, l), r) in summable.iter().zip(wss_linear_batch(net, params, &combos)) {
        match r {
            Ok(c) => sum_w[j][l] = Some(c),
            Err(_) => failed.insert(msp.owner(l)),
        }
    }
    st.remove_all(net, failed)
        .map_err(|e| st.fail(net, e, "inconsistent broadcast"))?;

    // Step 4: challenges.
    for j in 0..kn {
        let heads = flip_coin(net, session, j % n, guesses[j]);
        net.advance();
        let b_star = if heads {
            c_stars[j].clone()
        } else {
            a_star.add(&c_stars[j])
        };
        let b_star = match net.broadcast(
            dealer,
            Payload::BStar {
                session,
                b_star: b_star.0,
            },
        ) {
            Payload::BStar { b_star, .. } => ExtendedSecret(b_star),
            _ => unreachable!("broadcast returns its payload"),
        };
        net.advance();
        let expected = msp.shares_of(&b_star);
        st.rounds.push(Challenge { heads, b_star });
        st.check_public()
            .map_err(|e| st.fail(net, e, "inconsistent broadcast"))?;

        let beta = |l: usize| {
            if heads {
                gamma_held[j][l]
            } else {
                held[l] + gamma_held[j][l]
            }
        };
        let colluding =
            |p: PartyId| net.is_corrupt(p) && net.acts(dealer, Strategy::InconsistentVssDealer);
        let accusers: PlayerSet = net
            .active()
            .iter()
            .filter(|&p| p != dealer && !st.removed.contains(p) && !colluding(p))
            .filter(|&p| msp.rows_of(p).iter().any(|&l| beta(l) != expected[l]))
            .collect();
        for p in accusers.iter() {
            net.broadcast(p, Payload::Accuse { session, dealer });
            net.note(Event::Accusation {
                session,
                accuser: p,
                accused: dealer,
            });
        }
        if !accusers.is_empty() {
            net.advance();
        }
        st.remove_all(net, accusers)
            .map_err(|e| st.fail(net, e, "inconsistent broadcast"))?;

        let rows = st.live_rows();
        let opened: Vec<&WssCommitment> = rows
            .iter()
            .map(|&l| if heads { &gamma_w[j][l] } else { &sum_w[j][l] })
            .map(|c| c.as_ref().expect("live rows are committed"))
            .collect();
        let mut bad = PlayerSet::EMPTY;
        for (&l, r) in rows
            .iter()
            .zip(wss_open_batch(net, params, &opened, Audience::Public))
        {
            if r.value() != Some(expected[l]) {
                bad.insert(msp.owner(l));
            }
        }
        st.remove_all(net, bad)
            .map_err(|e| st.fail(net, e, "inconsistent broadcast"))?;
    }

    // Step 5.
    if msp.qualified(st.removed).expect("in range") {
        return Err(st.fail(net, VssError::DealerCorrupt(dealer), "qualified removals"));
    }
    let rows = (0..d)
        .map(|l| match (&st.public[l], alpha_w[l].take()) {
            (Some(p), _) => RowShare::Public(p[0]),
            (None, Some(w)) => RowShare::Committed {
                wss: w,
                offset: kf.zero(),
            },
            (None, None) => unreachable!("row {l} neither public nor committed"),
        })
        .collect();
    Ok(VssCommitment {
        owner: Some(dealer),
        rows,
        removed: st.removed,
        a_star: Some(a_star),
    })
}

/// `[a]^V_D`: the dealer shares `a` and proves the sharing consistent.
pub fn vss_deal(
    net: &mut Network,
    params: &Params,
    dealer: PartyId,
    a: FieldElement,
) -> Result<VssCommitment, VssError> {
    if net.silenced().contains(dealer) {
        return Err(VssError::DealerCorrupt(dealer));
    }
    let msp = params.msp.clone();
    let kf = *params.computation_field();
    let session = net.new_session();
    let rho = net.rng(dealer).uniform_vec(&kf, msp.cols() - 1);
    let a_star = msp.extend_secret(a, &rho);
    let mut dealt = msp.shares_of(&a_star);
    let cheating = net.acts(dealer, Strategy::InconsistentVssDealer);
    if cheating {
        dealt[params.target_row(net, dealer)] += kf.one();
    }
    let held = send_rows(net, &msp, session, dealer, &dealt);
    net.advance();
    verify_sharing(net, params, dealer, a_star, dealt, held, cheating)
}

/// Turns `[a]^W_D` into `[a]^V_D` by running the verifiable sharing from its
/// second step on the weak sharing's shares. Needs the dealer.
pub fn wss_to_vss(
    net: &mut Network,
    params: &Params,
    w: &WssCommitment,
) -> Result<VssCommitment, VssError> {
    let dealer = w.dealer;
    if net.silenced().contains(dealer) {
        return Err(VssError::DealerRefused(dealer));
    }
    if net.acts(dealer, Strategy::RefuseConversion) {
        let session = net.new_session();
        net.broadcast(dealer, Payload::Refuse { session });
        net.advance();
        return Err(VssError::DealerRefused(dealer));
    }
    if w.is_trivial() {
        let mut c = VssCommitment::public(params, params.computation_field().zero());
        c.owner = Some(dealer);
        return Ok(c);
    }
    verify_sharing(
        net,
        params,
        dealer,
        w.a_star.clone(),
        w.shares.clone(),
        w.shares.clone(),
        false,
    )
}

/// Opens many commitments at once. Every holder weakly opens its rows; the
/// value is reconstructed from the smallest qualified set of players whose
/// rows all opened or are public.
pub fn vss_open_batch(
    net: &mut Network,
    params: &Params,
    commits: &[&VssCommitment],
) -> Vec<Result<FieldElement, VssError>> {
    let msp = params.msp.clone();
    let silenced = net.silenced();
    let mut refs = Vec::new();
    let mut keys = Vec::new();
    for (c, commit) in commits.iter().enumerate() {
        for (l, row) in commit.rows.iter().enumerate() {
            if let RowShare::Committed { wss, .. } = row {
                if !silenced.contains(msp.owner(l)) {
                    refs.push(wss);
                    keys.push((c, l));
                }
            }
        }
    }
    let opened = if refs.is_empty() {
        Vec::new()
    } else {
        wss_open_batch(net, params, &refs, Audience::Public)
    };
    let mut values: Vec<Vec<Option<FieldElement>>> = commits
        .iter()
        .map(|c| {
            c.rows
                .iter()
                .map(|r| match r {
                    RowShare::Public(v) => Some(*v),
                    RowShare::Committed { .. } => None,
                })
                .collect()
        })
        .collect();
    for ((c, l), o) in keys.into_iter().zip(opened) {
        if let (Some(v), RowShare::Committed { offset, .. }) = (o.value(), &commits[c].rows[l]) {
            values[c][l] = Some(v + *offset);
        }
    }
    let results: Vec<Result<FieldElement, VssError>> = values
        .into_iter()
        .map(|entries| {
            let available: PlayerSet = (0..params.n())
                .filter(|&p| msp.rows_of(p).iter().all(|&l| entries[l].is_some()))
                .collect();
            let set = msp
                .smallest_qualified_subset(available)
                .ok_or(VssError::ReconstructionImpossible)?;
            msp.reconstruct(&ShareVector { entries }, set)
                .map_err(|_| VssError::ReconstructionImpossible)
        })
        .collect();
    for value in results.iter().flatten() {
        net.note(Event::Opened { value: *value });
    }
    results
}

pub fn vss_open(
    net: &mut Network,
    params: &Params,
    c: &VssCommitment,
) -> Result<FieldElement, VssError> {
    vss_open_batch(net, params, &[c]).pop().expect("one result")
}

/// Linear combinations, computed row by row on the weak sharings; public
/// rows and offsets are combined in the clear.
pub fn vss_linear_batch(
    net: &mut Network,
    params: &Params,
    combos: &[Vec<(FieldElement, &VssCommitment)>],
) -> Result<Vec<VssCommitment>, VssError> {
    let msp = params.msp.clone();
    let kf = *params.computation_field();
    let d = msp.rows();
    for (_, c) in combos.iter().flatten() {
        if c.rows.len() != d {
            return Err(VssError::MspMismatch {
                expected: d,
                got: c.rows.len(),
            });
        }
    }
    let mut wss_combos = Vec::new();
    let mut wss_keys = Vec::new();
    let mut out = Vec::with_capacity(combos.len());
    for (idx, terms) in combos.iter().enumerate() {
        let owners: Vec<PartyId> = terms.iter().filter_map(|(_, c)| c.owner).collect();
        let owner = owners
            .first()
            .copied()
            .filter(|o| owners.iter().all(|x| x == o));
        let consistent_owner = owners.is_empty() || owner.is_some();
        let a_star = terms
            .iter()
            .try_fold(ExtendedSecret::zero(&kf, msp.cols()), |acc, (lambda, c)| {
                c.a_star.as_ref().map(|a| acc.add(&a.scale(*lambda)))
            });
        let mut rows = Vec::with_capacity(d);
        for l in 0..d {
            let mut public = kf.zero();
            let mut committed = Vec::new();
            for (lambda, c) in terms {
                match &c.rows[l] {
                    RowShare::Public(v) => public += *v * *lambda,
                    RowShare::Committed { wss, offset } => {
                        public += *offset * *lambda;
                        if !lambda.is_zero() {
                            committed.push((*lambda, wss));
                        }
                    }
                }
            }
            if committed.is_empty() {
                rows.push(RowShare::Public(public));
            } else {
                rows.push(RowShare::Committed {
                    wss: WssCommitment::zero(params, msp.owner(l)),
                    offset: public,
                });
                wss_combos.push(committed);
                wss_keys.push((idx, l));
            }
        }
        out.push(VssCommitment {
            owner: if consistent_owner { owner } else { None },
            rows,
            removed: terms
                .iter()
                .fold(PlayerSet::EMPTY, |acc, (_, c)| acc.union(&c.removed)),
            a_star: if consistent_owner { a_star } else { None },
        });
    }
    let results = wss_linear_batch(net, params, &wss_combos);
    for ((idx, l), r) in wss_keys.into_iter().zip(results) {
        if let RowShare::Committed { wss, .. } = &mut out[idx].rows[l] {
            *wss = r?;
        }
    }
    Ok(out)
}

pub fn vss_linear(
    net: &mut Network,
    params: &Params,
    terms: &[(FieldElement, &VssCommitment)],
) -> Result<VssCommitment, VssError> {
    Ok(vss_linear_batch(net, params, &[terms.to_vec()])?
        .pop()
        .expect("one result"))
}
