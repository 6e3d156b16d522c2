//! Text and JSON renderings of fiber elements, using state names.

use cobisim_core::{FiberElement, FiberKind};
use serde_json::{json, Value};

use crate::file::System;

pub fn fiber_name(k: FiberKind) -> &'static str {
    match k {
        FiberKind::BoolPred => "bool_pred",
        FiberKind::EqRel => "eq_rel",
        FiberKind::PMet1 => "pmet1",
    }
}

pub fn names(sys: &System, members: &[usize]) -> String {
    let list: Vec<String> = members.iter().map(|&s| sys.name(s)).collect();
    format!("{{{}}}", list.join(", "))
}

pub fn number(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// One line for predicates and relations; a header plus one row per state
/// for pseudometrics.
pub fn element(sys: &System, e: &FiberElement) -> Vec<String> {
    match e {
        FiberElement::BoolPred(p) => {
            let members: Vec<usize> = (0..p.len()).filter(|&s| p[s]).collect();
            vec![format!("holds at {}", names(sys, &members))]
        }
        FiberElement::EqRel(r) => vec![r.blocks().iter().map(|b| names(sys, b)).collect::<Vec<_>>().join(" ")],
        FiberElement::PMet1(d) => {
            let n = d.size();
            let cells: Vec<Vec<String>> = (0..n).map(|s| (0..n).map(|t| number(d.get(s, t))).collect()).collect();
            let labels = sys.names();
            let width = cells
                .iter()
                .flatten()
                .chain(labels.iter())
                .map(|c| c.chars().count())
                .max()
                .unwrap_or(1);
            let pad = |c: &str| format!("{c:>width$}");
            let mut lines = vec![format!("{} {}", pad(""), labels.iter().map(|l| pad(l)).collect::<Vec<_>>().join(" "))];
            for (s, row) in cells.iter().enumerate() {
                lines.push(format!("{} {}", pad(&labels[s]), row.iter().map(|c| pad(c)).collect::<Vec<_>>().join(" ")));
            }
            lines
        }
    }
}

pub fn element_json(sys: &System, e: &FiberElement) -> Value {
    match e {
        FiberElement::BoolPred(p) => json!({
            "holds": (0..p.len()).filter(|&s| p[s]).map(|s| sys.name(s)).collect::<Vec<_>>()
        }),
        FiberElement::EqRel(r) => json!({
            "blocks": r.blocks().iter().map(|b| b.iter().map(|&s| sys.name(s)).collect::<Vec<_>>()).collect::<Vec<_>>()
        }),
        FiberElement::PMet1(d) => json!({ "metric": d.rows() }),
    }
}
