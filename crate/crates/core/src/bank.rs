//! Modalities compiled against a fixed coalgebra, for evaluating
//! `s ↦ τ_λ(Bk(x(s)))` on many observations `k`.

use std::collections::HashMap;

use crate::behavior::{eval_modality, map_behavior, BehaviorValue, Coalgebra, FunctorSpec, Leaf, ModalityDef, OmegaValue, Selector};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone)]
enum Op {
    Expected(Vec<Vec<(usize, f64)>>),
    /// Index into the threshold groups, and the threshold `r`.
    Threshold(usize, Rational),
    Sup(Vec<Vec<usize>>),
    Inf(Vec<Vec<usize>>),
    Diamond(Vec<Vec<usize>>),
    Box(Vec<Vec<usize>>),
    Const(Vec<f64>),
    Identity(Vec<usize>),
    Generic {
        def: ModalityDef,
        leaf_functor: FunctorSpec,
        leaves: Vec<BehaviorValue<usize>>,
    },
}

/// Threshold modalities sharing a selector path share one mass computation.
#[derive(Debug, Clone)]
struct ThresholdGroup {
    /// Per state: (target, weight numerator over the bank denominator).
    rows: Vec<Vec<(usize, i64)>>,
}

#[derive(Debug, Clone)]
pub struct ModalBank {
    size: usize,
    names: Vec<String>,
    ops: Vec<Op>,
    groups: Vec<ThresholdGroup>,
    denominator: i64,
}

fn dist_rows(leaves: &[BehaviorValue<usize>]) -> Result<Vec<Vec<(usize, Rational)>>> {
    leaves
        .iter()
        .map(|b| match b {
            BehaviorValue::Dist(entries) => entries
                .iter()
                .map(|(v, w)| match v {
                    BehaviorValue::Id(t) => Ok((*t, *w)),
                    _ => Err(Error::shape("modality leaf", "expected D≤1(Id)")),
                })
                .collect(),
            _ => Err(Error::shape("modality leaf", "expected a distribution")),
        })
        .collect()
}

fn set_rows(leaves: &[BehaviorValue<usize>]) -> Result<Vec<Vec<usize>>> {
    leaves
        .iter()
        .map(|b| match b {
            BehaviorValue::Set(items) => items
                .iter()
                .map(|v| match v {
                    BehaviorValue::Id(t) => Ok(*t),
                    _ => Err(Error::shape("modality leaf", "expected P(Id)")),
                })
                .collect(),
            _ => Err(Error::shape("modality leaf", "expected a set")),
        })
        .collect()
}

impl ModalBank {
    pub fn new(c: &Coalgebra, modalities: &[ModalityDef]) -> Result<Self> {
        let size = c.size();
        let mut ops = Vec::with_capacity(modalities.len());
        let mut group_rows: Vec<Vec<Vec<(usize, Rational)>>> = Vec::new();
        let mut group_of_path: HashMap<Vec<Selector>, usize> = HashMap::new();
        for m in modalities {
            let leaf_functor = m.leaf_functor(c.functor())?.clone();
            let leaves = c
                .behaviors()
                .iter()
                .map(|b| m.select(b).cloned())
                .collect::<Result<Vec<_>>>()?;
            let op = match &m.leaf {
                Leaf::ExpectedValue => Op::Expected(
                    dist_rows(&leaves)?
                        .into_iter()
                        .map(|row| row.into_iter().map(|(t, w)| (t, rational::to_f64(&w))).collect())
                        .collect(),
                ),
                Leaf::Threshold(r) => {
                    let next = group_rows.len();
                    let g = *group_of_path.entry(m.path.clone()).or_insert(next);
                    if g == next {
                        group_rows.push(dist_rows(&leaves)?);
                    }
                    Op::Threshold(g, *r)
                }
                Leaf::Sup => Op::Sup(set_rows(&leaves)?),
                Leaf::Inf => Op::Inf(set_rows(&leaves)?),
                Leaf::Diamond => Op::Diamond(set_rows(&leaves)?),
                Leaf::Box => Op::Box(set_rows(&leaves)?),
                Leaf::ConstTable(table) => Op::Const(
                    leaves
                        .iter()
                        .map(|b| match b {
                            BehaviorValue::Const(i) => table
                                .get(*i)
                                .copied()
                                .ok_or_else(|| Error::shape("modality leaf", "constant out of range")),
                            _ => Err(Error::shape("modality leaf", "expected a constant")),
                        })
                        .collect::<Result<_>>()?,
                ),
                Leaf::Identity => Op::Identity(
                    leaves
                        .iter()
                        .map(|b| match b {
                            BehaviorValue::Id(t) => Ok(*t),
                            _ => Err(Error::shape("modality leaf", "expected a state")),
                        })
                        .collect::<Result<_>>()?,
                ),
                Leaf::CustomTable(_) => Op::Generic {
                    def: ModalityDef::new(m.name.clone(), Vec::new(), m.leaf.clone()),
                    leaf_functor,
                    leaves,
                },
            };
            ops.push(op);
        }
        let denominator = rational::common_denominator(group_rows.iter().flatten().flatten().map(|(_, w)| w))
            .ok_or(Error::SizeBound {
                what: "common weight denominator",
                actual: usize::MAX,
                bound: rational::MAX_DENOMINATOR as usize,
            })?;
        let groups = group_rows
            .into_iter()
            .map(|rows| ThresholdGroup {
                rows: rows
                    .into_iter()
                    .map(|row| {
                        row.into_iter()
                            .map(|(t, w)| (t, *w.numer() * (denominator / *w.denom())))
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        Ok(ModalBank {
            size,
            names: modalities.iter().map(|m| m.name.clone()).collect(),
            ops,
            groups,
            denominator,
        })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn group_masses(&self, g: usize, k: &[f64]) -> Vec<i64> {
        self.groups[g]
            .rows
            .iter()
            .map(|row| row.iter().filter(|(t, _)| k[*t] == 1.0).map(|(_, w)| *w).sum())
            .collect()
    }

    fn eval_op(&self, op: &Op, k: &[f64], masses: &mut HashMap<usize, Vec<i64>>) -> Result<Vec<f64>> {
        Ok(match op {
            Op::Expected(rows) => rows
                .iter()
                .map(|row| row.iter().map(|(t, w)| k[*t] * w).sum())
                .collect(),
            Op::Threshold(g, r) => {
                let m = masses.entry(*g).or_insert_with(|| self.group_masses(*g, k));
                let rhs = *r.numer() as i128 * self.denominator as i128;
                m.iter()
                    .map(|&num| if num as i128 * *r.denom() as i128 > rhs { 1.0 } else { 0.0 })
                    .collect()
            }
            Op::Sup(rows) => rows
                .iter()
                .map(|row| row.iter().map(|t| k[*t]).reduce(f64::max).unwrap_or(0.0))
                .collect(),
            Op::Inf(rows) => rows
                .iter()
                .map(|row| row.iter().map(|t| k[*t]).reduce(f64::min).unwrap_or(1.0))
                .collect(),
            Op::Diamond(rows) => rows
                .iter()
                .map(|row| if row.iter().any(|t| k[*t] == 1.0) { 1.0 } else { 0.0 })
                .collect(),
            Op::Box(rows) => rows
                .iter()
                .map(|row| if row.iter().all(|t| k[*t] == 1.0) { 1.0 } else { 0.0 })
                .collect(),
            Op::Const(values) => values.clone(),
            Op::Identity(targets) => targets.iter().map(|t| k[*t]).collect(),
            Op::Generic {
                def,
                leaf_functor,
                leaves,
            } => leaves
                .iter()
                .map(|b| {
                    let image = map_behavior(leaf_functor, b, &|x: &usize| OmegaValue::new(k[*x]))?;
                    eval_modality(def, &image)
                })
                .collect::<Result<_>>()?,
        })
    }

    /// `s ↦ τ_λ(Bk(x(s)))` for the `i`-th modality.
    pub fn eval(&self, i: usize, k: &[f64]) -> Result<Vec<f64>> {
        self.check_len(k)?;
        self.eval_op(&self.ops[i], k, &mut HashMap::new())
    }

    /// The images of `k` under every modality, in modality order.
    pub fn eval_all(&self, k: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(k)?;
        let mut masses = HashMap::new();
        self.ops.iter().map(|op| self.eval_op(op, k, &mut masses)).collect()
    }

    fn check_len(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.size {
            return Err(Error::CarrierMismatch {
                left: k.len(),
                right: self.size,
            });
        }
        Ok(())
    }
}
