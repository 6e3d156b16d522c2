//! The three concrete fibers over a finite carrier: Boolean predicates,
//! equivalence relations and 1-bounded pseudometrics.
//!
//! Each fiber is a complete lattice under `⊑`. For predicates and relations
//! `⊑` is inclusion; for pseudometrics it is the *reversed* pointwise order
//! (`d ⊑ d'` iff `d ≥ d'`), so the top element is the zero pseudometric and
//! smaller elements discriminate more.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Absolute tolerance for all pseudometric comparisons.
pub const METRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Carrier {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Carrier {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidCarrier("a carrier needs at least one state".into()));
        }
        Ok(Carrier { size, labels: None })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidCarrier("a carrier needs at least one state".into()));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if let Some(j) = seen.insert(l.as_str(), i) {
                return Err(Error::InvalidCarrier(format!(
                    "state name `{l}` used for both {j} and {i}"
                )));
            }
        }
        Ok(Carrier {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display name of a state: its label if present, else its index.
    pub fn name(&self, s: usize) -> String {
        match &self.labels {
            Some(l) => l[s].clone(),
            None => s.to_string(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|x| x == name),
            None => name.parse().ok().filter(|&i| i < self.size),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiberKind {
    BoolPred,
    EqRel,
    PMet1,
}

/// An equivalence relation stored as a canonical block map.
///
/// Block ids are assigned in order of the smallest state of each block, so
/// two partitions are equal iff their block maps are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Kernel of an arbitrary keyed map: `s ~ t` iff `key(s) == key(t)`.
    pub fn from_keys<K: Eq + Hash>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut ids: HashMap<K, usize> = HashMap::new();
        let block_of: Vec<usize> = keys
            .into_iter()
            .map(|k| {
                let next = ids.len();
                *ids.entry(k).or_insert(next)
            })
            .collect();
        Partition {
            blocks: ids.len(),
            block_of,
        }
    }

    pub fn from_block_map(block_of: &[usize]) -> Self {
        Self::from_keys(block_of.iter().copied())
    }

    pub fn from_blocks(size: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut block_of = vec![usize::MAX; size];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidElement("empty block".into()));
            }
            for &s in block {
                if s >= size {
                    return Err(Error::InvalidElement(format!(
                        "state {s} outside a carrier of size {size}"
                    )));
                }
                if block_of[s] != usize::MAX {
                    return Err(Error::InvalidElement(format!("state {s} appears twice")));
                }
                block_of[s] = b;
            }
        }
        if let Some(s) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidElement(format!("state {s} is in no block")));
        }
        Ok(Self::from_block_map(&block_of))
    }

    pub fn total(size: usize) -> Self {
        Partition {
            block_of: vec![0; size],
            blocks: usize::from(size > 0),
        }
    }

    pub fn discrete(size: usize) -> Self {
        Partition {
            block_of: (0..size).collect(),
            blocks: size,
        }
    }

    pub fn size(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self, s: usize) -> usize {
        self.block_of[s]
    }

    pub fn block_map(&self) -> &[usize] {
        &self.block_of
    }

    pub fn related(&self, s: usize, t: usize) -> bool {
        self.block_of[s] == self.block_of[t]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (s, &b) in self.block_of.iter().enumerate() {
            out[b].push(s);
        }
        out
    }

    /// `self ⊑ other`: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> bool {
        let mut image = vec![usize::MAX; self.blocks];
        for (s, &b) in self.block_of.iter().enumerate() {
            let target = other.block_of[s];
            if image[b] == usize::MAX {
                image[b] = target;
            } else if image[b] != target {
                return false;
            }
        }
        true
    }

    /// Common refinement.
    pub fn intersect(&self, other: &Partition) -> Partition {
        Partition::from_keys(
            self.block_of
                .iter()
                .zip(&other.block_of)
                .map(|(&a, &b)| (a, b)),
        )
    }

    /// Splits every block by an extra key per state.
    pub fn refine_by<K: Eq + Hash>(&self, keys: impl IntoIterator<Item = K>) -> Partition {
        Partition::from_keys(self.block_of.iter().copied().zip(keys))
    }

    /// A pair `(s, t)` related in `self` but not in `other`, if any.
    pub fn violating_pair(&self, other: &Partition) -> Option<(usize, usize)> {
        let n = self.size();
        for s in 0..n {
            for t in (s + 1)..n {
                if self.related(s, t) && !other.related(s, t) {
                    return Some((s, t));
                }
            }
        }
        None
    }

    /// All partitions of a carrier, as restricted-growth strings.
    pub fn enumerate_all(size: usize) -> Vec<Partition> {
        fn go(prefix: &mut Vec<usize>, max: usize, size: usize, out: &mut Vec<Partition>) {
            if prefix.len() == size {
                out.push(Partition::from_block_map(prefix));
                return;
            }
            let bound = if prefix.is_empty() { 0 } else { max + 1 };
            for b in 0..=bound {
                prefix.push(b);
                go(prefix, max.max(b), size, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        go(&mut Vec::with_capacity(size), 0, size, &mut out);
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in self.blocks() {
            write!(f, "{{")?;
            for (i, s) in block.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// A 1-bounded pseudometric stored as a dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoMetric {
    n: usize,
    d: Vec<f64>,
}

impl PseudoMetric {
    pub fn zero(n: usize) -> Self {
        PseudoMetric {
            n,
            d: vec![0.0; n * n],
        }
    }

    /// The discrete metric, which is the ⊑-least element.
    pub fn discrete(n: usize) -> Self {
        let mut m = Self::zero(n);
        for s in 0..n {
            for t in 0..n {
                if s != t {
                    m.d[s * n + t] = 1.0;
                }
            }
        }
        m
    }

    /// Builds from a full row-major matrix, checking every invariant.
    pub fn from_matrix(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return Err(Error::InvalidElement(format!(
                "expected {} entries, got {}",
                n * n,
                d.len()
            )));
        }
        let m = PseudoMetric { n, d };
        m.validate()?;
        Ok(m)
    }

    /// Builds from a pair function evaluated on `s < t`, clamping into
    /// `[0, 1]`. The result is not checked for the triangle inequality.
    pub fn from_fn_unchecked(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zero(n);
        for s in 0..n {
            for t in (s + 1)..n {
                let v = f(s, t).clamp(0.0, 1.0);
                m.d[s * n + t] = v;
                m.d[t * n + s] = v;
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::InvalidElement("matrix is not square".into()));
            }
            d.extend_from_slice(row);
        }
        Self::from_matrix(n, d)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for s in 0..n {
            if self.get(s, s).abs() > METRIC_TOL {
                return Err(Error::InvalidElement(format!("nonzero diagonal at {s}")));
            }
            for t in 0..n {
                let v = self.get(s, t);
                if !v.is_finite() || v < -METRIC_TOL || v > 1.0 + METRIC_TOL {
                    return Err(Error::InvalidElement(format!("d({s},{t}) = {v} outside [0,1]")));
                }
                if (v - self.get(t, s)).abs() > METRIC_TOL {
                    return Err(Error::InvalidElement(format!("asymmetric at ({s},{t})")));
                }
            }
        }
        if let Some((s, t, u)) = self.triangle_violation(METRIC_TOL) {
            return Err(Error::InvalidElement(format!(
                "triangle inequality fails: d({s},{u}) > d({s},{t}) + d({t},{u})"
            )));
        }
        Ok(())
    }

    pub fn triangle_violation(&self, tol: f64) -> Option<(usize, usize, usize)> {
        let n = self.n;
        for s in 0..n {
            for t in 0..n {
                for u in 0..n {
                    if self.get(s, u) > self.get(s, t) + self.get(t, u) + tol {
                        return Some((s, t, u));
                    }
                }
            }
        }
        None
    }

    /// Shortest-path closure; only lowers entries that violate the triangle
    /// inequality.
    pub fn triangle_closure(&mut self) {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = self.d[i * n + k] + self.d[k * n + j];
                    if via < self.d[i * n + j] {
                        self.d[i * n + j] = via;
                    }
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.d[s * self.n + t]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    /// Largest `|self(s,t) - other(s,t)|`.
    pub fn sup_distance(&self, other: &PseudoMetric) -> f64 {
        self.d
            .iter()
            .zip(&other.d)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &PseudoMetric, tol: f64) -> bool {
        self.n == other.n && self.sup_distance(other) <= tol
    }

    /// Zero-distance classes; exact only up to [`METRIC_TOL`].
    pub fn kernel(&self) -> Partition {
        let n = self.n;
        let mut rep = vec![usize::MAX; n];
        for s in 0..n {
            if rep[s] != usize::MAX {
                continue;
            }
            rep[s] = s;
            for t in (s + 1)..n {
                if rep[t] == usize::MAX && self.get(s, t) <= METRIC_TOL {
                    rep[t] = s;
                }
            }
        }
        Partition::from_block_map(&rep)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiberElement {
    BoolPred(Vec<bool>),
    EqRel(Partition),
    PMet1(PseudoMetric),
}

/// Renders as `set {0,2}`, `blocks {0,2}{1}` or `metric [[0, 0.5], [0.5, 0]]`.
impl fmt::Display for FiberElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FiberElement::BoolPred(p) => {
                let members: Vec<String> = p.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i.to_string()).collect();
                write!(f, "set {{{}}}", members.join(","))
            }
            FiberElement::EqRel(p) => write!(f, "blocks {p}"),
            FiberElement::PMet1(d) => {
                let rows: Vec<String> = d
                    .rows()
                    .iter()
                    .map(|r| format!("[{}]", r.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", ")))
                    .collect();
                write!(f, "metric [{}]", rows.join(", "))
            }
        }
    }
}

impl FiberElement {
    pub fn kind(&self) -> FiberKind {
        match self {
            FiberElement::BoolPred(_) => FiberKind::BoolPred,
            FiberElement::EqRel(_) => FiberKind::EqRel,
            FiberElement::PMet1(_) => FiberKind::PMet1,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            FiberElement::BoolPred(p) => p.len(),
            FiberElement::EqRel(r) => r.size(),
            FiberElement::PMet1(d) => d.size(),
        }
    }

    pub fn as_partition(&self) -> Option<&Partition> {
        match self {
            FiberElement::EqRel(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_metric(&self) -> Option<&PseudoMetric> {
        match self {
            FiberElement::PMet1(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_predicate(&self) -> Option<&[bool]> {
        match self {
            FiberElement::BoolPred(p) => Some(p),
            _ => None,
        }
    }

    /// Equality, exact except for pseudometrics (within [`METRIC_TOL`]).
    pub fn same_as(&self, other: &FiberElement) -> bool {
        match (self, other) {
            (FiberElement::PMet1(a), FiberElement::PMet1(b)) => a.approx_eq(b, METRIC_TOL),
            _ => self == other,
        }
    }

    pub fn check_compatible(&self, other: &FiberElement) -> Result<()> {
        if self.kind() != other.kind() {
            return Err(Error::KindMismatch {
                left: self.kind(),
                right: other.kind(),
            });
        }
        if self.size() != other.size() {
            return Err(Error::CarrierMismatch {
                left: self.size(),
                right: other.size(),
            });
        }
        Ok(())
    }
}

/// The ⊑-greatest element of a fiber.
pub fn top(kind: FiberKind, size: usize) -> FiberElement {
    match kind {
        FiberKind::BoolPred => FiberElement::BoolPred(vec![true; size]),
        FiberKind::EqRel => FiberElement::EqRel(Partition::total(size)),
        FiberKind::PMet1 => FiberElement::PMet1(PseudoMetric::zero(size)),
    }
}

/// The ⊑-least element of a fiber.
pub fn bottom(kind: FiberKind, size: usize) -> FiberElement {
    match kind {
        FiberKind::BoolPred => FiberElement::BoolPred(vec![false; size]),
        FiberKind::EqRel => FiberElement::EqRel(Partition::discrete(size)),
        FiberKind::PMet1 => FiberElement::PMet1(PseudoMetric::discrete(size)),
    }
}

pub fn leq(p: &FiberElement, q: &FiberElement) -> Result<bool> {
    p.check_compatible(q)?;
    Ok(match (p, q) {
        (FiberElement::BoolPred(a), FiberElement::BoolPred(b)) => {
            a.iter().zip(b).all(|(&x, &y)| !x || y)
        }
        (FiberElement::EqRel(a), FiberElement::EqRel(b)) => a.refines(b),
        (FiberElement::PMet1(a), FiberElement::PMet1(b)) => {
            a.d.iter().zip(&b.d).all(|(x, y)| *x >= *y - METRIC_TOL)
        }
        _ => unreachable!("compatibility checked"),
    })
}

pub fn meet(family: &[FiberElement]) -> Result<FiberElement> {
    let (first, rest) = family.split_first().ok_or(Error::EmptyFamily)?;
    for other in rest {
        first.check_compatible(other)?;
    }
    let mut acc = first.clone();
    for other in rest {
        acc = match (acc, other) {
            (FiberElement::BoolPred(a), FiberElement::BoolPred(b)) => {
                FiberElement::BoolPred(a.iter().zip(b).map(|(&x, &y)| x && y).collect())
            }
            (FiberElement::EqRel(a), FiberElement::EqRel(b)) => FiberElement::EqRel(a.intersect(b)),
            (FiberElement::PMet1(mut a), FiberElement::PMet1(b)) => {
                for (x, y) in a.d.iter_mut().zip(&b.d) {
                    *x = x.max(*y);
                }
                FiberElement::PMet1(a)
            }
            _ => unreachable!("compatibility checked"),
        };
    }
    Ok(acc)
}

/// Reindexing along `f: X → Y`, where `f[s]` is the image of state `s`.
pub fn pullback(f: &[usize], q: &FiberElement) -> Result<FiberElement> {
    let size = q.size();
    if let Some((state, &target)) = f.iter().enumerate().find(|(_, &t)| t >= size) {
        return Err(Error::MapOutOfRange {
            state,
            target,
            size,
        });
    }
    Ok(match q {
        FiberElement::BoolPred(p) => FiberElement::BoolPred(f.iter().map(|&y| p[y]).collect()),
        FiberElement::EqRel(r) => {
            FiberElement::EqRel(Partition::from_keys(f.iter().map(|&y| r.block_of(y))))
        }
        FiberElement::PMet1(d) => {
            let n = f.len();
            let mut out = PseudoMetric::zero(n);
            for s in 0..n {
                for t in 0..n {
                    out.d[s * n + t] = d.get(f[s], f[t]);
                }
            }
            FiberElement::PMet1(out)
        }
    })
}
