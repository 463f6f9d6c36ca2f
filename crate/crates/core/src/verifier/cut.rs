//! The seven-buyer tree on which revised GIDM rewards withholding the
//! auction information.
//!
//! Only the topology and the prices of the story are known; valuations are
//! chosen so that both traces of the story replay exactly under
//! [`gidm_revised`]. Every step of the story is checked mechanically.

use std::collections::BTreeSet;

use num_traits::Zero;

use super::VerifierError;
use crate::mechanisms::{gidm_revised, GidmEvent, GidmTreeState};
use crate::model::{AuctionInstance, BuyerId, BuyerType, Outcome};
use crate::value::Value;

pub const CUT_LABELS: [&str; 7] = ["a", "b", "c", "d", "e", "f", "g"];

/// Valuations of a..g.
pub const CUT_VALUES: [i64; 7] = [1, 2, 4, 7, 5, 3, 6];

const K: usize = 4;
const CAP: i64 = 10;
const A: BuyerId = BuyerId(1);
const B: BuyerId = BuyerId(2);
const C: BuyerId = BuyerId(3);
const D: BuyerId = BuyerId(4);
const E: BuyerId = BuyerId(5);
const F: BuyerId = BuyerId(6);
const G: BuyerId = BuyerId(7);

fn edges(id: BuyerId) -> Vec<BuyerId> {
    match id {
        A => vec![B],
        B => vec![C, G],
        C => vec![D],
        D => vec![E],
        _ => vec![],
    }
}

/// The tree `s → {a, f}, a → b, b → {c, g}, c → d, d → e` with the given
/// valuations for a..g, declared truthfully.
pub fn cut_instance(values: [i64; 7]) -> Result<AuctionInstance, VerifierError> {
    let buyers: Vec<BuyerType> =
        (1..=7u32).map(BuyerId).map(|id| BuyerType::unit(Value::from_integer(values[id.index()]), edges(id))).collect();
    let labels = CUT_LABELS.iter().map(|l| Some(l.to_string())).collect();
    Ok(AuctionInstance::new(K, [A, F], buyers.clone())?
        .with_value_cap(Value::from_integer(CAP))?
        .with_truth(buyers)?
        .with_labels(labels))
}

/// The facts the story asserts, as observed on an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutNarrative {
    pub truthful: GidmTreeState,
    pub cut: GidmTreeState,
    pub truthful_price_c: Value,
    pub cut_price_c: Value,
    pub d_truthful_utility: Value,
    pub d_cut_payment: Value,
    pub d_cut_utility: Value,
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<(), VerifierError> {
    if ok {
        Ok(())
    } else {
        Err(VerifierError::Narrative(what()))
    }
}

fn set(ids: &[BuyerId]) -> BTreeSet<BuyerId> {
    ids.iter().copied().collect()
}

fn has(state: &GidmTreeState, event: &GidmEvent) -> bool {
    state.trace.contains(event)
}

fn d_utility(inst: &AuctionInstance, out: &Outcome) -> Value {
    inst.true_type(D).value_of(out.items(D)) - out.payment(D)
}

/// Replays both traces and checks every step of the story. Fails with the
/// first step that does not hold.
pub fn check_cut_narrative(inst: &AuctionInstance) -> Result<CutNarrative, VerifierError> {
    let run = |i: &AuctionInstance| gidm_revised(i).map_err(|e| VerifierError::Narrative(e.to_string()));
    let name = |id: BuyerId| inst.display_name(id);

    let (out, truthful) = run(inst)?;
    require(truthful.planned == set(&[C, D, E, G]), || {
        format!("truthful top-4 should be c, d, e, g; got {:?}", truthful.planned)
    })?;
    require(truthful.items_sent(None, A) == 4 && truthful.items_sent(None, F) == 0, || {
        "truthful run should send all four items to a".into()
    })?;
    require(truthful.took_from(A) == Some(C), || {
        format!("a should take from c, took from {:?}", truthful.took_from(A))
    })?;
    require(truthful.items_sent(Some(A), B) == 3, || "b should receive the remaining 3 items".into())?;
    require(truthful.took_from(B) == Some(E), || {
        format!("b should take from e, took from {:?}", truthful.took_from(B).map(name))
    })?;
    require(truthful.items_sent(Some(B), C) == 1 && truthful.items_sent(Some(B), G) == 1, || {
        "b should send one item each to c and g".into()
    })?;
    require(truthful.took_from(C) == Some(D), || "c should take from d".into())?;
    let truthful_price_c = truthful.quoted_price(C).unwrap_or_else(Value::zero);
    require(truthful_price_c == Value::from_integer(3), || {
        format!("c's truthful price should be 3, got {truthful_price_c}")
    })?;
    let d_truthful_utility = d_utility(inst, &out);
    require(out.items(D) == 0 && d_truthful_utility.is_zero(), || "d should end with nothing and utility 0".into())?;

    let mut cut_report = inst.declared(D).clone();
    cut_report.neighbors.clear();
    let cut_inst = inst.with_report(D, cut_report)?;
    let (cut_out, cut) = run(&cut_inst)?;
    require(cut.planned == set(&[C, D, F, G]), || format!("cut top-4 should be c, d, f, g; got {:?}", cut.planned))?;
    require(cut.items_sent(None, A) == 3 && cut.items_sent(None, F) == 1, || {
        "cut run should send 3 items to a and 1 to f".into()
    })?;
    require(cut.took_from(A) == Some(C), || "a should again take from c".into())?;
    require(has(&cut, &GidmEvent::Keep { buyer: F, price: cut.quoted_price(F).unwrap_or_else(Value::zero) }), || {
        "f should keep its item".into()
    })?;
    require(cut.items_sent(Some(A), B) == 2, || "b should receive the remaining 2 items".into())?;
    require(cut.took_from(B) == Some(G), || {
        format!("b should take from g, took from {:?}", cut.took_from(B).map(name))
    })?;
    require(cut.items_sent(Some(B), C) == 1, || "b should send one item to c".into())?;
    let cut_price_c = cut.quoted_price(C).unwrap_or_else(Value::zero);
    require(has(&cut, &GidmEvent::Decline { buyer: C, price: cut_price_c }), || "c should decline".into())?;
    require(cut_price_c == Value::from_integer(6), || format!("c's cut price should be 6, got {cut_price_c}"))?;
    require(cut.items_sent(Some(C), D) == 1 && cut_out.items(D) == 1, || "d should receive and keep an item".into())?;
    let d_cut_payment = cut_out.payment(D);
    require(d_cut_payment == Value::from_integer(6), || format!("d should pay 6, pays {d_cut_payment}"))?;
    let d_cut_utility = d_utility(inst, &cut_out);
    require(d_cut_utility > Value::zero(), || "d should gain by cutting".into())?;

    Ok(CutNarrative { truthful, cut, truthful_price_c, cut_price_c, d_truthful_utility, d_cut_payment, d_cut_utility })
}

/// The counterexample instance, verified against the story before it is
/// returned.
pub fn reconstruct_gidm_counterexample() -> Result<AuctionInstance, VerifierError> {
    let inst = cut_instance(CUT_VALUES)?;
    check_cut_narrative(&inst)?;
    Ok(inst)
}

fn top4(values: &[i64; 7], pool: &[BuyerId]) -> BTreeSet<BuyerId> {
    let mut ranked = pool.to_vec();
    ranked.sort_by(|x, y| values[y.index()].cmp(&values[x.index()]).then(x.cmp(y)));
    ranked.into_iter().take(K).collect()
}

/// Every integer valuation vector on `0..=max_value` for which the whole
/// story replays, in lexicographic order of (a, ..., g).
pub fn search_gidm_counterexamples(max_value: i64) -> Vec<[i64; 7]> {
    let everyone = [A, B, C, D, E, F, G];
    let without_e = [A, B, C, D, F, G];
    let truthful_top = set(&[C, D, E, G]);
    let cut_top = set(&[C, D, F, G]);
    let mut found = Vec::new();
    let mut v = [0i64; 7];
    loop {
        if top4(&v, &everyone) == truthful_top && top4(&v, &without_e) == cut_top {
            if let Ok(inst) = cut_instance(v) {
                if check_cut_narrative(&inst).is_ok() {
                    found.push(v);
                }
            }
        }
        // Odometer over the last coordinate first.
        let mut pos = 7;
        loop {
            if pos == 0 {
                return found;
            }
            pos -= 1;
            if v[pos] < max_value {
                v[pos] += 1;
                break;
            }
            v[pos] = 0;
        }
    }
}
