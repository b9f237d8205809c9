//! JSON views of the core results. Rationals and big integers are strings.

use hcpack_core::game::{
    AnarchyInstance, Coalition, CoalitionTarget, FeasibilityMode, MoveProposal, NashCertificate,
    Prop2Report, StrongNashCertificate,
};
use hcpack_core::geometry::BinReport;
use hcpack_core::online::{AdversaryPlan, RatioReport};
use hcpack_core::packing::{Construction, LemmaReport, TypedPacking};
use hcpack_core::Rat;
use serde_json::{json, Map, Value};

fn r(x: &Rat) -> Value {
    Value::String(x.to_string())
}

fn opt_r(x: Option<&Rat>) -> Value {
    x.map(r).unwrap_or(Value::Null)
}

fn big(x: &num_bigint::BigUint) -> Value {
    Value::String(x.to_string())
}

/// JSON numbers cannot hold infinities or NaN.
fn float(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

pub fn bin_report(rep: &BinReport) -> Value {
    json!({
        "ok": rep.is_ok(),
        "containment_ok": rep.containment_ok,
        "disjoint_ok": rep.disjoint_ok,
        "first_uncontained": rep.first_uncontained,
        "offending_pair": rep.offending_pair,
    })
}

pub fn packing(u: &TypedPacking) -> Value {
    let nu: Map<String, Value> = u.nu().iter().map(|(k, n)| (k.to_string(), json!(n))).collect();
    json!({
        "d": u.d(),
        "epsilon": r(u.epsilon()),
        "cubes": u.len(),
        "classes": u.classes(),
        "nu": nu,
        "weight": r(u.weight()),
        "weight_by_cubes": r(&u.weight_by_cubes()),
    })
}

pub fn lemma(rep: &LemmaReport) -> Value {
    let construction = match &rep.construction {
        Construction::Randomized => json!({"kind": "randomized"}),
        Construction::WarmupFallback { reason } => json!({"kind": "warmup-fallback", "reason": reason}),
    };
    let classes: Vec<Value> = rep
        .class_stats
        .iter()
        .map(|c| {
            json!({
                "k": c.k,
                "f_size": c.f_size,
                "core_count": c.core_count.as_ref().map(big),
                "language_size": language_size(rep, c.k),
                "class_weight": opt_r(c.class_weight.as_ref()),
                "class_weight_f64": float(c.class_weight_f64),
                "bad_fraction": float(c.bad_fraction),
                "materialized": c.materialized,
            })
        })
        .collect();
    json!({
        "d": rep.d,
        "family": rep.kind.name(),
        "construction": construction,
        "log_base": rep.log_base.name(),
        "s": rep.s,
        "epsilon": r(&rep.epsilon),
        "classes": rep.classes,
        "fset_attempts": rep.fset_attempts,
        "max_intersection": rep.max_intersection,
        "threshold": opt_r(rep.threshold.as_ref()),
        "class_stats": classes,
        "full_weight": opt_r(rep.full_weight.as_ref()),
        "full_weight_check": opt_r(rep.full_weight_check.as_ref()),
        "full_weight_f64": float(rep.full_weight_f64),
        "target": float(rep.target),
        "guarantee": r(&rep.guarantee),
        "target_met": rep.target_met,
        "guarantee_met": rep.guarantee_met,
        "bad_fraction_ok": rep.bad_fraction_ok,
        "harmonic_bound_ok": rep.harmonic_bound_ok,
        "d0": if rep.d0 == usize::MAX { Value::Null } else { json!(rep.d0) },
        "asserted": rep.asserted(),
        "passed": rep.passed(),
        "packing": packing(&rep.packing),
    })
}

/// `|L_k|` as a decimal string.
pub fn language_size(rep: &LemmaReport, k: u32) -> Value {
    rep.family
        .language(k)
        .map(|l| big(&l.len()))
        .unwrap_or(Value::Null)
}

pub fn plan(p: &AdversaryPlan) -> Value {
    let nu: Map<String, Value> = p.nu.iter().map(|(k, n)| (k.to_string(), json!(n))).collect();
    let segments: Vec<Value> = p
        .segments
        .iter()
        .map(|(k, n)| json!({"k": k, "count": big(n)}))
        .collect();
    json!({
        "d": p.d,
        "epsilon": r(&p.epsilon),
        "m": p.m,
        "n": big(&p.n),
        "c": big(&p.c),
        "nu": nu,
        "weight": r(&p.weight),
        "segments": segments,
        "items": big(&p.total_items()),
        "certified_lower_bound": big(&p.certificate),
        "segment_bound": big(&p.segment_bound),
        "offline_bins": big(&p.offline_bins),
        "certified_ratio": r(&p.certified_ratio()),
    })
}

pub fn ratio(rep: &RatioReport) -> Value {
    let segments: Vec<Value> = rep
        .segments
        .iter()
        .map(|s| json!({"k": s.k, "items": s.items, "new_bins": s.new_bins}))
        .collect();
    json!({
        "algorithm": rep.algorithm,
        "m": rep.m,
        "bins_used": rep.bins_used,
        "segments": segments,
        "opt_upper_bound": rep.opt_upper_bound.as_ref().map(big),
        "certified_lower_bound": rep.certified_lower_bound.as_ref().map(big),
        "ratio": opt_r(rep.ratio.as_ref()),
        "bound_holds": rep.bound_holds(),
    })
}

pub fn mode(m: &FeasibilityMode) -> Value {
    match m {
        FeasibilityMode::Insertion => json!({"kind": "insertion"}),
        FeasibilityMode::Repack { cap, node_budget } => {
            json!({"kind": "repack", "cap": cap, "node_budget": node_budget})
        }
    }
}

pub fn move_proposal(m: &MoveProposal) -> Value {
    json!({
        "item": m.item,
        "from": m.from,
        "to": m.to,
        "mode": m.mode.name(),
        "cost_before": r(&m.cost_before),
        "cost_after": r(&m.cost_after),
        "layout": m.layout.iter().map(|(i, base)| {
            json!({"item": i, "base": base.iter().map(r).collect::<Vec<_>>()})
        }).collect::<Vec<_>>(),
    })
}

pub fn nash(c: &NashCertificate) -> Value {
    json!({
        "is_nash": c.is_nash,
        "mode": mode(&c.mode),
        "checked": c.checked,
        "improving_move": c.improving.as_ref().map(move_proposal),
        "note": c.note,
    })
}

fn coalition(c: &Coalition) -> Value {
    let members: Vec<Value> = c
        .members
        .iter()
        .map(|(i, t)| match t {
            CoalitionTarget::Existing(b) => json!({"item": i, "to": b}),
            CoalitionTarget::New(n) => json!({"item": i, "to_new": n}),
        })
        .collect();
    Value::Array(members)
}

pub fn strong(c: &StrongNashCertificate) -> Value {
    json!({
        "strong": c.strong,
        "coalition_cap": c.max_size,
        "mode": mode(&c.mode),
        "coalitions_checked": c.coalitions_checked,
        "assignments_checked": c.assignments_checked,
        "witness": c.witness.as_ref().map(coalition),
    })
}

pub fn anarchy(inst: &AnarchyInstance) -> Value {
    json!({
        "n": inst.n,
        "minimal_n": inst.minimal_n,
        "items": inst.p.len(),
        "p_bins": inst.p.bins().len(),
        "p_prime_bins": inst.p_prime.bins().len(),
        "ratio": r(&inst.ratio),
        "weight": r(&inst.weight),
        "ratio_equals_weight": inst.ratio == inst.weight,
    })
}

pub fn prop2(rep: &Prop2Report) -> Value {
    json!({
        "d": rep.d,
        "bins": rep.bins,
        "sparse_bins": rep.sparse_bins,
        "total_volume": r(&rep.total_volume),
        "bin_bound": r(&rep.bin_bound),
        "nash_certified": rep.nash_certified,
        "holds": rep.holds(),
    })
}
