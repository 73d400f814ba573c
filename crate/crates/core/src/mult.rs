//! Product proofs and multiplication of verifiably shared values.

use thiserror::Error;

use crate::field::FieldElement;
use crate::simnet::{Event, Network, PartyId, ProductBlinding, Strategy};
use crate::structures::PlayerSet;
use crate::vss::{
    vss_deal, vss_linear, vss_linear_batch, vss_open, vss_open_batch, wss_to_vss, RowShare,
    VssCommitment, VssError,
};
use crate::wss::{flip_coin, Params};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MultError {
    #[error("players {0} refused to take part; restart from the inputs")]
    RestartRequired(PlayerSet),
    #[error("span program has no multiplication")]
    NoMultiplication,
    #[error(transparent)]
    Vss(#[from] VssError),
}

/// The claim `ab = c` about three values shared by `dealer`.
#[derive(Debug, Clone, Copy)]
pub struct ProductClaim<'a> {
    pub dealer: PartyId,
    pub a: &'a VssCommitment,
    pub b: &'a VssCommitment,
    pub c: &'a VssCommitment,
}

/// Proves `ab = c` in `kn` rounds. Each round the dealer shares a fresh `b'`
/// and `c' = ab'`; a coin decides whether the players check `ab' - c' = 0`
/// or `a(b + b') - (c + c') = 0`.
pub fn vss_cp(net: &mut Network, params: &Params, claim: ProductClaim<'_>) -> bool {
    let dealer = claim.dealer;
    let kf = *params.computation_field();
    let n = params.n();
    if net.silenced().contains(dealer) {
        return false;
    }
    let (Some(a), Some(b), Some(c)) = (
        claim.a.known_secret(),
        claim.b.known_secret(),
        claim.c.known_secret(),
    ) else {
        return false;
    };
    let delta = c - a * b;
    let blinding = if net.acts(dealer, Strategy::WrongProductDealer) {
        net.adversary().product_blinding()
    } else {
        ProductBlinding::Honest
    };
    let session = net.new_session();
    net.count_bounded_event();
    let one = kf.one();

    for j in 0..params.k() * n {
        let b1 = net.rng(dealer).uniform(&kf);
        let guess = match blinding {
            ProductBlinding::Guess => Some(net.rng(dealer).coin()),
            _ => None,
        };
        let shift = match (blinding, guess) {
            (ProductBlinding::Shift, _) | (ProductBlinding::Guess, Some(false)) => delta,
            _ => kf.zero(),
        };
        let c1 = a * b1 - shift;
        let Ok(b1_v) = vss_deal(net, params, dealer, b1) else {
            return false;
        };
        let Ok(c1_v) = vss_deal(net, params, dealer, c1) else {
            return false;
        };
        let heads = flip_coin(net, session, j % n, guess);
        net.advance();

        let opened = if heads {
            vss_open(net, params, &b1_v)
        } else {
            vss_linear(net, params, &[(one, claim.b), (one, &b1_v)])
                .and_then(|s| vss_open(net, params, &s))
        };
        let Ok(x) = opened else { return false };
        let mut terms = vec![(x, claim.a), (-one, &c1_v)];
        if !heads {
            terms.push((-one, claim.c));
        }
        match vss_linear(net, params, &terms).and_then(|z| vss_open(net, params, &z)) {
            Ok(z) if z.is_zero() => {}
            _ => return false,
        }
    }
    true
}

/// Verifiable sharing of one top-level share, converted from its holder's
/// weak sharing.
fn row_to_vss(
    net: &mut Network,
    params: &Params,
    row: &RowShare,
) -> Result<VssCommitment, VssError> {
    match row {
        RowShare::Public(x) => Ok(VssCommitment::public(params, *x)),
        RowShare::Committed { wss, offset } => {
            Ok(wss_to_vss(net, params, wss)?.const_add(params, *offset))
        }
    }
}

/// `[uv]^V` from `[u]^V` and `[v]^V`.
///
/// Every holder converts its shares to verifiable ones, shares the product
/// of its two shares and proves it. A failed conversion asks for a restart;
/// a failed proof puts that row's product in public.
pub fn mult(
    net: &mut Network,
    params: &Params,
    u: &VssCommitment,
    v: &VssCommitment,
) -> Result<VssCommitment, MultError> {
    let msp = params.msp.clone();
    let r = msp
        .recombination_vector()
        .ok_or(MultError::NoMultiplication)?;
    let d = msp.rows();

    // Step 1.
    let mut cheaters = PlayerSet::EMPTY;
    let mut mu = Vec::with_capacity(d);
    let mut nu = Vec::with_capacity(d);
    for l in 0..d {
        for (src, dst) in [(u, &mut mu), (v, &mut nu)] {
            match row_to_vss(net, params, &src.rows[l]) {
                Ok(c) => dst.push(c),
                Err(VssError::DealerRefused(p) | VssError::DealerCorrupt(p)) => {
                    cheaters.insert(p);
                    dst.push(VssCommitment::public(
                        params,
                        params.computation_field().zero(),
                    ));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    if !cheaters.is_empty() {
        return Err(MultError::RestartRequired(cheaters));
    }

    // Step 2.
    let mut omega = Vec::with_capacity(d);
    for l in 0..d {
        if mu[l].is_public() && nu[l].is_public() {
            let (x, y) = (mu[l].known_secret(), nu[l].known_secret());
            omega.push(VssCommitment::public(
                params,
                x.zip(y).map(|(x, y)| x * y).expect("public"),
            ));
            continue;
        }
        let p = msp.owner(l);
        let proven = match (mu[l].known_secret(), nu[l].known_secret()) {
            (Some(x), Some(y)) if !net.silenced().contains(p) => {
                let mut w = x * y;
                if net.acts(p, Strategy::WrongProductDealer) {
                    w += params.computation_field().one();
                }
                vss_deal(net, params, p, w).ok().filter(|wv| {
                    vss_cp(
                        net,
                        params,
                        ProductClaim {
                            dealer: p,
                            a: &mu[l],
                            b: &nu[l],
                            c: wv,
                        },
                    )
                })
            }
            _ => None,
        };
        match proven {
            Some(wv) => omega.push(wv),
            None => {
                net.note(Event::Excluded { player: p });
                let opened = vss_open_batch(net, params, &[&mu[l], &nu[l]]);
                let x = opened[0].clone()?;
                let y = opened[1].clone()?;
                omega.push(VssCommitment::public(params, x * y));
            }
        }
    }

    // Step 3.
    let terms: Vec<(FieldElement, &VssCommitment)> = r.iter().copied().zip(&omega).collect();
    let mut out = vss_linear_batch(net, params, &[terms])?;
    let mut product = out.pop().expect("one result");
    product.owner = None;
    product.a_star = None;
    Ok(product)
}
