//! One application of the codensity lifting composed with the coalgebra
//! pullback, `R ↦ x*(B̄R)`, for each fiber.

use std::collections::BTreeMap;

use crate::behavior::{eval_modality, map_behavior, BehaviorValue, Coalgebra, Leaf, ModalityDef, OmegaValue, TruthObject};
use crate::error::{Error, Result};
use crate::fibers::{FiberElement, FiberKind, Partition, PseudoMetric};
use crate::logic::SituationConfig;
use crate::rational::{self, Rational};

/// Largest block count for which legitimate observations are enumerated.
pub const MAX_BLOCKS: usize = 20;

pub mod simplex {
    //! Dense tableau simplex for `max c·x s.t. Ax ≤ b, x ≥ 0` with `b ≥ 0`.

    use crate::error::{Error, Result};

    const EPS: f64 = 1e-12;
    pub const MAX_PIVOTS: usize = 50_000;

    #[derive(Debug, Clone, PartialEq)]
    pub struct Solution {
        pub value: f64,
        pub x: Vec<f64>,
    }

    /// Solves the program from the slack basis, which is feasible because
    /// `b ≥ 0`. Pivoting follows Bland's rule.
    pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<Solution> {
        let n = c.len();
        let m = b.len();
        if a.len() != m || a.iter().any(|row| row.len() != n) {
            return Err(Error::Unsupported("malformed linear program".into()));
        }
        if b.iter().any(|v| *v < 0.0) {
            return Err(Error::Unsupported("right-hand side must be nonnegative".into()));
        }
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            t[i * width..i * width + n].copy_from_slice(&a[i]);
            t[i * width + n + i] = 1.0;
            t[i * width + width - 1] = b[i];
        }
        for j in 0..n {
            t[m * width + j] = -c[j];
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        for _ in 0..MAX_PIVOTS {
            let obj = &t[m * width..(m + 1) * width];
            let Some(enter) = (0..n + m).find(|&j| obj[j] < -EPS) else {
                let mut x = vec![0.0; n];
                for (i, &v) in basis.iter().enumerate() {
                    if v < n {
                        x[v] = t[i * width + width - 1];
                    }
                }
                return Ok(Solution {
                    value: t[m * width + width - 1],
                    x,
                });
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let coef = t[i * width + enter];
                if coef > EPS {
                    let ratio = t[i * width + width - 1] / coef;
                    leave = match leave {
                        Some((l, best)) if ratio > best + EPS => Some((l, best)),
                        Some((l, best)) if (ratio - best).abs() <= EPS && basis[l] < basis[i] => Some((l, best)),
                        _ => Some((i, ratio)),
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(Error::Unsupported("linear program is unbounded".into()));
            };
            let pivot = t[row * width + enter];
            for j in 0..width {
                t[row * width + j] /= pivot;
            }
            for i in 0..=m {
                if i == row {
                    continue;
                }
                let factor = t[i * width + enter];
                if factor != 0.0 {
                    for j in 0..width {
                        t[i * width + j] -= factor * t[row * width + j];
                    }
                }
            }
            basis[row] = enter;
        }
        Err(Error::LpIterationLimit(MAX_PIVOTS))
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn textbook_program() {
            // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18
            let s = maximize(
                &[3.0, 5.0],
                &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
                &[4.0, 12.0, 18.0],
            )
            .unwrap();
            assert!((s.value - 36.0).abs() < 1e-9);
            assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        }

        #[test]
        fn degenerate_program_terminates() {
            let s = maximize(
                &[1.0, 1.0, 1.0],
                &[vec![1.0, -1.0, 0.0], vec![-1.0, 1.0, 0.0], vec![0.0, 1.0, -1.0], vec![1.0, 1.0, 1.0]],
                &[0.0, 0.0, 0.0, 3.0],
            )
            .unwrap();
            assert!((s.value - 3.0).abs() < 1e-9);
        }
    }
}

/// The Kantorovich lifting of `d` to subdistributions: the largest
/// `|Σ f ξ − Σ f ξ'|` over `f: X → [0,1]` nonexpansive w.r.t. `d`.
///
/// Only the support union enters the program; every nonexpansive map on it
/// extends to the whole carrier without leaving `[0,1]`.
pub fn kantorovich(d: &PseudoMetric, xi: &[(usize, Rational)], xi2: &[(usize, Rational)]) -> Result<f64> {
    let mut diff: BTreeMap<usize, Rational> = BTreeMap::new();
    for (x, w) in xi {
        if *x >= d.size() {
            return Err(Error::MapOutOfRange { state: 0, target: *x, size: d.size() });
        }
        *diff.entry(*x).or_default() += w;
    }
    for (x, w) in xi2 {
        if *x >= d.size() {
            return Err(Error::MapOutOfRange { state: 0, target: *x, size: d.size() });
        }
        *diff.entry(*x).or_default() -= w;
    }
    if diff.values().all(|w| *w == Rational::default()) {
        return Ok(0.0);
    }
    let support: Vec<usize> = diff.keys().copied().collect();
    let coef: Vec<f64> = diff.values().map(rational::to_f64).collect();
    let m = support.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..m {
        let mut row = vec![0.0; m];
        row[i] = 1.0;
        rows.push(row);
        rhs.push(1.0);
    }
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let mut row = vec![0.0; m];
                row[i] = 1.0;
                row[j] = -1.0;
                rows.push(row);
                rhs.push(d.get(support[i], support[j]).max(0.0));
            }
        }
    }
    let up = simplex::maximize(&coef, &rows, &rhs)?.value;
    let neg: Vec<f64> = coef.iter().map(|c| -c).collect();
    let down = simplex::maximize(&neg, &rows, &rhs)?.value;
    Ok(up.max(down).clamp(0.0, 1.0))
}

/// Hausdorff distance with `H(∅,∅) = 0` and `H(∅,U) = 1` for `U ≠ ∅`.
pub fn hausdorff(d: &PseudoMetric, u: &[usize], v: &[usize]) -> f64 {
    match (u.is_empty(), v.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let directed = |a: &[usize], b: &[usize]| {
        a.iter()
            .map(|&x| b.iter().map(|&y| d.get(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(u, v).max(directed(v, u)).clamp(0.0, 1.0)
}

/// All maps into `{0,1}` constant on the blocks of `r`.
fn block_indicators(r: &Partition) -> Result<Vec<Vec<f64>>> {
    let b = r.num_blocks();
    if b > MAX_BLOCKS {
        return Err(Error::SizeBound {
            what: "blocks of the relation",
            actual: b,
            bound: MAX_BLOCKS,
        });
    }
    Ok((0u64..(1u64 << b))
        .map(|mask| (0..r.size()).map(|s| (mask >> r.block_of(s) & 1) as f64).collect())
        .collect())
}

/// `x*(B̄R)` for relations and two-valued observations: `s` and `t` are
/// related iff every modality agrees on them under every union of
/// `R`-blocks.
pub fn lift_step_eqrel(cfg: &SituationConfig, c: &Coalgebra, r: &Partition) -> Result<Partition> {
    if cfg.fiber != FiberKind::EqRel || cfg.omega != TruthObject::Two {
        return Err(Error::InvalidSituation("exact relation lifting needs two-valued observations".into()));
    }
    check_size(c, r.size())?;
    let bank = cfg.bank(c)?;
    let mut out = Partition::total(c.size());
    for h in block_indicators(r)? {
        for image in bank.eval_all(&h)? {
            out = out.refine_by(image.iter().map(|v| *v == 1.0));
        }
        if out.num_blocks() == c.size() {
            break;
        }
    }
    Ok(out)
}

fn check_size(c: &Coalgebra, n: usize) -> Result<()> {
    if c.size() != n {
        return Err(Error::CarrierMismatch { left: c.size(), right: n });
    }
    Ok(())
}

fn invalid_leaf(m: &ModalityDef, message: &str) -> Error {
    Error::InvalidModality {
        name: m.name.clone(),
        message: message.into(),
    }
}

fn dist_entries(m: &ModalityDef, b: &BehaviorValue<usize>) -> Result<Vec<(usize, Rational)>> {
    match b {
        BehaviorValue::Dist(entries) => entries
            .iter()
            .map(|(v, w)| match v {
                BehaviorValue::Id(t) => Ok((*t, *w)),
                _ => Err(invalid_leaf(m, "expected D≤1(Id)")),
            })
            .collect(),
        _ => Err(invalid_leaf(m, "expected a distribution")),
    }
}

fn set_entries(m: &ModalityDef, b: &BehaviorValue<usize>) -> Result<Vec<usize>> {
    match b {
        BehaviorValue::Set(items) => items
            .iter()
            .map(|v| match v {
                BehaviorValue::Id(t) => Ok(*t),
                _ => Err(invalid_leaf(m, "expected P(Id)")),
            })
            .collect(),
        _ => Err(invalid_leaf(m, "expected a set")),
    }
}

/// Per-leaf signature of a behavior w.r.t. a partition, for real-valued
/// observations constant on blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Signature {
    Masses(Vec<Rational>),
    HitBlocks(Vec<usize>),
    Value(OmegaValue),
    Block(usize),
}

fn kernel_signature(m: &ModalityDef, b: &BehaviorValue<usize>, r: &Partition) -> Result<Signature> {
    let leaf = m.select(b)?;
    Ok(match &m.leaf {
        Leaf::ExpectedValue => {
            let mut masses = vec![Rational::default(); r.num_blocks()];
            for (t, w) in dist_entries(m, leaf)? {
                masses[r.block_of(t)] += w;
            }
            Signature::Masses(masses)
        }
        Leaf::Sup | Leaf::Inf => {
            let mut hit: Vec<usize> = set_entries(m, leaf)?.into_iter().map(|t| r.block_of(t)).collect();
            hit.sort_unstable();
            hit.dedup();
            Signature::HitBlocks(hit)
        }
        Leaf::ConstTable(table) => match leaf {
            BehaviorValue::Const(i) => Signature::Value(OmegaValue::new(table[*i])),
            _ => return Err(invalid_leaf(m, "expected a constant")),
        },
        Leaf::Identity => match leaf {
            BehaviorValue::Id(t) => Signature::Block(r.block_of(*t)),
            _ => return Err(invalid_leaf(m, "expected a state")),
        },
        _ => return Err(Error::UnregisteredLeaf(m.name.clone())),
    })
}

/// `x*(B̄R)` for relations and real-valued observations constant on the
/// blocks of `R`, computed from per-leaf signatures: block masses for
/// expected values, hit blocks for sup and inf.
pub fn lift_step_kernel(cfg: &SituationConfig, c: &Coalgebra, r: &Partition) -> Result<Partition> {
    if cfg.fiber != FiberKind::EqRel || cfg.omega != TruthObject::Reals {
        return Err(Error::InvalidSituation("signature lifting needs real-valued observations".into()));
    }
    check_size(c, r.size())?;
    cfg.bank(c)?;
    let keys = (0..c.size())
        .map(|s| {
            cfg.modalities
                .iter()
                .map(|m| kernel_signature(m, c.next(s), r))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition::from_keys(keys))
}

/// `x*(B̄P)` for predicates with `Ω̄ = {1}`: `s` is kept iff every modality
/// yields 1 under every observation `h ⊇ P`.
pub fn lift_step_pred(cfg: &SituationConfig, c: &Coalgebra, p: &[bool]) -> Result<Vec<bool>> {
    if cfg.fiber != FiberKind::BoolPred {
        return Err(Error::InvalidSituation("predicate lifting needs the predicate fiber".into()));
    }
    check_size(c, p.len())?;
    let free: Vec<usize> = (0..p.len()).filter(|&s| !p[s]).collect();
    if free.len() > MAX_BLOCKS {
        return Err(Error::SizeBound {
            what: "states outside the predicate",
            actual: free.len(),
            bound: MAX_BLOCKS,
        });
    }
    let bank = cfg.bank(c)?;
    let mut out = vec![true; p.len()];
    for mask in 0u64..(1u64 << free.len()) {
        let mut h: Vec<f64> = p.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        for (i, &s) in free.iter().enumerate() {
            if mask >> i & 1 == 1 {
                h[s] = 1.0;
            }
        }
        for image in bank.eval_all(&h)? {
            for (o, v) in out.iter_mut().zip(&image) {
                *o &= *v == 1.0;
            }
        }
    }
    Ok(out)
}

/// The exact value of one modality's lifted distance between two states.
pub fn exact_modal_distance(m: &ModalityDef, c: &Coalgebra, d: &PseudoMetric, s: usize, t: usize) -> Result<f64> {
    let (a, b) = (m.select(c.next(s))?, m.select(c.next(t))?);
    match &m.leaf {
        Leaf::ExpectedValue => kantorovich(d, &dist_entries(m, a)?, &dist_entries(m, b)?),
        Leaf::Sup | Leaf::Inf => Ok(hausdorff(d, &set_entries(m, a)?, &set_entries(m, b)?)),
        Leaf::ConstTable(table) => match (a, b) {
            (BehaviorValue::Const(i), BehaviorValue::Const(j)) => Ok((table[*i] - table[*j]).abs()),
            _ => Err(invalid_leaf(m, "expected constants")),
        },
        Leaf::Identity => match (a, b) {
            (BehaviorValue::Id(x), BehaviorValue::Id(y)) => Ok(d.get(*x, *y)),
            _ => Err(invalid_leaf(m, "expected states")),
        },
        _ => Err(Error::UnregisteredLeaf(m.name.clone())),
    }
}

/// `x*(B̄d)` for pseudometrics: the maximum over modalities of the exact
/// lifted distance, clamped, symmetrized, and closed under the triangle
/// inequality to absorb solver noise.
pub fn lift_step_pmet(cfg: &SituationConfig, c: &Coalgebra, d: &PseudoMetric) -> Result<PseudoMetric> {
    if cfg.fiber != FiberKind::PMet1 {
        return Err(Error::InvalidSituation("metric lifting needs the pseudometric fiber".into()));
    }
    check_size(c, d.size())?;
    let n = c.size();
    let mut out = vec![0.0; n * n];
    for s in 0..n {
        for t in s + 1..n {
            let mut best: f64 = 0.0;
            for m in &cfg.modalities {
                best = best.max(exact_modal_distance(m, c, d, s, t)?);
            }
            out[s * n + t] = best;
            out[t * n + s] = best;
        }
    }
    let mut result = PseudoMetric::from_fn_unchecked(n, |s, t| out[s * n + t]);
    result.triangle_closure();
    Ok(result)
}

/// One lifting step in whichever fiber the situation uses.
pub fn lift_step(cfg: &SituationConfig, c: &Coalgebra, p: &FiberElement) -> Result<FiberElement> {
    if p.kind() != cfg.fiber {
        return Err(Error::KindMismatch {
            left: p.kind(),
            right: cfg.fiber,
        });
    }
    Ok(match p {
        FiberElement::BoolPred(q) => FiberElement::BoolPred(lift_step_pred(cfg, c, q)?),
        FiberElement::EqRel(r) if cfg.omega == TruthObject::Two => FiberElement::EqRel(lift_step_eqrel(cfg, c, r)?),
        FiberElement::EqRel(r) => FiberElement::EqRel(lift_step_kernel(cfg, c, r)?),
        FiberElement::PMet1(d) => FiberElement::PMet1(lift_step_pmet(cfg, c, d)?),
    })
}

/// Largest carrier the grid oracle accepts.
pub const ORACLE_MAX_STATES: usize = 6;

/// Brute-force lifted distance: the maximum over all `h: X → {0, δ, …, 1}`
/// nonexpansive w.r.t. `d` of `|τ_λ(Bh(x(s))) − τ_λ(Bh(x(t)))|`.
pub fn grid_oracle_lift(c: &Coalgebra, d: &PseudoMetric, m: &ModalityDef, s: usize, t: usize, delta: f64) -> Result<f64> {
    let n = c.size();
    if n > ORACLE_MAX_STATES {
        return Err(Error::SizeBound {
            what: "grid oracle carrier",
            actual: n,
            bound: ORACLE_MAX_STATES,
        });
    }
    check_size(c, d.size())?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Unsupported("grid step must lie in (0,1]".into()));
    }
    let steps = (1.0 / delta).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let functor = c.functor();
    let mut h = vec![0.0; n];
    let mut best: f64 = 0.0;
    let mut err = None;
    let mut visit = |h: &[f64]| {
        let obs = |x: &usize| OmegaValue::new(h[*x]);
        let value = map_behavior(functor, c.next(s), &obs)
            .and_then(|a| eval_modality(m, &a))
            .and_then(|va| Ok((va - eval_modality(m, &map_behavior(functor, c.next(t), &obs)?)?).abs()));
        match value {
            Ok(v) => best = best.max(v),
            Err(e) => err = Some(e),
        }
    };
    fn rec(i: usize, h: &mut Vec<f64>, grid: &[f64], d: &PseudoMetric, visit: &mut dyn FnMut(&[f64])) {
        if i == h.len() {
            visit(h);
            return;
        }
        for &g in grid {
            if (0..i).all(|j| (g - h[j]).abs() <= d.get(i, j) + 1e-12) {
                h[i] = g;
                rec(i + 1, h, grid, d, visit);
            }
        }
    }
    rec(0, &mut h, &grid, d, &mut visit);
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}
