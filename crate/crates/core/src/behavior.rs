//! Behavior functors, behavior values, the functorial action `B k`, and the
//! modality library `τ_λ: BΩ → Ω`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fibers::Carrier;
use crate::rational::{self, Rational};

/// Grammar of behavior functors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FunctorSpec {
    Id,
    Const(Vec<String>),
    Product(Box<FunctorSpec>, Box<FunctorSpec>),
    Exponent(Box<FunctorSpec>, Vec<String>),
    Pow(Box<FunctorSpec>),
    Dist(Box<FunctorSpec>),
}

impl FunctorSpec {
    pub fn product(a: FunctorSpec, b: FunctorSpec) -> Self {
        FunctorSpec::Product(Box::new(a), Box::new(b))
    }

    pub fn exponent(body: FunctorSpec, labels: &[&str]) -> Self {
        FunctorSpec::Exponent(Box::new(body), labels.iter().map(|s| s.to_string()).collect())
    }

    pub fn pow(body: FunctorSpec) -> Self {
        FunctorSpec::Pow(Box::new(body))
    }

    pub fn dist(body: FunctorSpec) -> Self {
        FunctorSpec::Dist(Box::new(body))
    }

    /// `(G≤1 −)^A`, the functor of labelled Markov processes.
    pub fn lmp(labels: &[&str]) -> Self {
        Self::exponent(Self::dist(FunctorSpec::Id), labels)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FunctorSpec::Id => Ok(()),
            FunctorSpec::Const(c) if c.is_empty() => {
                Err(Error::shape("functor", "constant value set must be nonempty"))
            }
            FunctorSpec::Const(_) => Ok(()),
            FunctorSpec::Product(a, b) => {
                a.validate()?;
                b.validate()
            }
            FunctorSpec::Exponent(_, labels) if labels.is_empty() => {
                Err(Error::shape("functor", "label set must be nonempty"))
            }
            FunctorSpec::Exponent(body, labels) => {
                let mut sorted = labels.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != labels.len() {
                    return Err(Error::shape("functor", "duplicate label"));
                }
                body.validate()
            }
            FunctorSpec::Pow(body) | FunctorSpec::Dist(body) => body.validate(),
        }
    }
}

impl fmt::Display for FunctorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctorSpec::Id => write!(f, "Id"),
            FunctorSpec::Const(c) => write!(f, "{{{}}}", c.join(",")),
            FunctorSpec::Product(a, b) => write!(f, "({a} × {b})"),
            FunctorSpec::Exponent(body, labels) => write!(f, "({body})^{{{}}}", labels.join(",")),
            FunctorSpec::Pow(body) => write!(f, "P({body})"),
            FunctorSpec::Dist(body) => write!(f, "D≤1({body})"),
        }
    }
}

/// A truth value with total equality and ordering, so that it can be used
/// as a set element or distribution support point.
#[derive(Debug, Clone, Copy)]
pub struct OmegaValue(f64);

impl OmegaValue {
    pub fn new(v: f64) -> Self {
        // -0.0 and 0.0 are the same truth value
        OmegaValue(if v == 0.0 { 0.0 } else { v })
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for OmegaValue {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}
impl Eq for OmegaValue {}
impl PartialOrd for OmegaValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OmegaValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl Hash for OmegaValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// An element of `B V`, mirroring the shape of a [`FunctorSpec`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BehaviorValue<T> {
    Id(T),
    /// Index into the constant value set.
    Const(usize),
    Pair(Box<BehaviorValue<T>>, Box<BehaviorValue<T>>),
    /// One component per label, in label order.
    Labeled(Vec<BehaviorValue<T>>),
    /// Sorted, duplicate-free.
    Set(Vec<BehaviorValue<T>>),
    /// Sorted by support point, merged, positive weights only.
    Dist(Vec<(BehaviorValue<T>, Rational)>),
}

impl<T: Ord + Clone> BehaviorValue<T> {
    pub fn pair(a: Self, b: Self) -> Self {
        BehaviorValue::Pair(Box::new(a), Box::new(b))
    }

    pub fn set(mut items: Vec<Self>) -> Self {
        items.sort();
        items.dedup();
        BehaviorValue::Set(items)
    }

    /// Canonical subdistribution: merges equal support points and drops
    /// zero weights. Does not check the total mass.
    pub fn dist(entries: Vec<(Self, Rational)>) -> Self {
        let mut merged: BTreeMap<Self, Rational> = BTreeMap::new();
        for (v, w) in entries {
            *merged.entry(v).or_insert_with(Rational::zero) += w;
        }
        BehaviorValue::Dist(merged.into_iter().filter(|(_, w)| !w.is_zero()).collect())
    }

    /// Total mass of a distribution node.
    pub fn mass(&self) -> Option<Rational> {
        match self {
            BehaviorValue::Dist(entries) => Some(rational::sum(entries.iter().map(|(_, w)| w))),
            _ => None,
        }
    }
}

/// The functorial action `B k`: applies `k` at every `Id` leaf, re-canonicalizing sets
/// and distributions. Fails if `b` does not have shape `functor`.
pub fn map_behavior<T, U, K>(functor: &FunctorSpec, b: &BehaviorValue<T>, k: &K) -> Result<BehaviorValue<U>>
where
    U: Ord + Clone,
    K: Fn(&T) -> U,
{
    map_at(functor, b, k, &mut String::from("$"))
}

fn map_at<T, U, K>(
    functor: &FunctorSpec,
    b: &BehaviorValue<T>,
    k: &K,
    path: &mut String,
) -> Result<BehaviorValue<U>>
where
    U: Ord + Clone,
    K: Fn(&T) -> U,
{
    use BehaviorValue as V;
    Ok(match (functor, b) {
        (FunctorSpec::Id, V::Id(x)) => V::Id(k(x)),
        (FunctorSpec::Const(c), V::Const(i)) => {
            if *i >= c.len() {
                return Err(Error::shape(path.clone(), format!("constant index {i} out of range")));
            }
            V::Const(*i)
        }
        (FunctorSpec::Product(fa, fb), V::Pair(a, bb)) => {
            let len = path.len();
            path.push_str(".0");
            let a = map_at(fa, a, k, path)?;
            path.truncate(len);
            path.push_str(".1");
            let bb = map_at(fb, bb, k, path)?;
            path.truncate(len);
            V::pair(a, bb)
        }
        (FunctorSpec::Exponent(body, labels), V::Labeled(parts)) => {
            if parts.len() != labels.len() {
                return Err(Error::shape(
                    path.clone(),
                    format!("expected {} labelled components, got {}", labels.len(), parts.len()),
                ));
            }
            let mut out = Vec::with_capacity(parts.len());
            for (label, part) in labels.iter().zip(parts) {
                let len = path.len();
                path.push('.');
                path.push_str(label);
                out.push(map_at(body, part, k, path)?);
                path.truncate(len);
            }
            V::Labeled(out)
        }
        (FunctorSpec::Pow(body), V::Set(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(map_at(body, item, k, path)?);
            }
            V::set(out)
        }
        (FunctorSpec::Dist(body), V::Dist(entries)) => {
            let mut out = Vec::with_capacity(entries.len());
            for (v, w) in entries {
                out.push((map_at(body, v, k, path)?, *w));
            }
            V::dist(out)
        }
        _ => return Err(Error::shape(path.clone(), format!("value does not have shape {functor}"))),
    })
}

/// Checks shape, leaf range, and subdistribution masses of a behavior over a
/// carrier of `size` states.
pub fn validate_behavior(functor: &FunctorSpec, b: &BehaviorValue<usize>, size: usize, path: &str) -> Result<()> {
    use BehaviorValue as V;
    match (functor, b) {
        (FunctorSpec::Id, V::Id(x)) if *x < size => Ok(()),
        (FunctorSpec::Id, V::Id(x)) => Err(Error::shape(path, format!("state {x} out of range"))),
        (FunctorSpec::Const(c), V::Const(i)) if *i < c.len() => Ok(()),
        (FunctorSpec::Const(_), V::Const(i)) => Err(Error::shape(path, format!("constant index {i} out of range"))),
        (FunctorSpec::Product(fa, fb), V::Pair(a, bb)) => {
            validate_behavior(fa, a, size, &format!("{path}.0"))?;
            validate_behavior(fb, bb, size, &format!("{path}.1"))
        }
        (FunctorSpec::Exponent(body, labels), V::Labeled(parts)) => {
            if parts.len() != labels.len() {
                return Err(Error::shape(path, "wrong number of labelled components"));
            }
            for (label, part) in labels.iter().zip(parts) {
                validate_behavior(body, part, size, &format!("{path}.{label}"))?;
            }
            Ok(())
        }
        (FunctorSpec::Pow(body), V::Set(items)) => {
            for (i, item) in items.iter().enumerate() {
                validate_behavior(body, item, size, &format!("{path}[{i}]"))?;
            }
            if items.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::shape(path, "set is not canonical"));
            }
            Ok(())
        }
        (FunctorSpec::Dist(body), V::Dist(entries)) => {
            let mut total = Rational::zero();
            for (i, (v, w)) in entries.iter().enumerate() {
                validate_behavior(body, v, size, &format!("{path}[{i}]"))?;
                if w.is_negative() {
                    return Err(Error::shape(format!("{path}[{i}]"), "negative weight"));
                }
                total += w;
            }
            if total > Rational::one() {
                return Err(Error::shape(
                    path,
                    format!("weights sum to {} > 1", rational::format_rational(&total)),
                ));
            }
            if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(Error::shape(path, "distribution is not canonical"));
            }
            Ok(())
        }
        _ => Err(Error::shape(path, format!("value does not have shape {functor}"))),
    }
}

/// A finite coalgebra `x: X → BX`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coalgebra {
    carrier: Carrier,
    functor: FunctorSpec,
    next: Vec<BehaviorValue<usize>>,
}

impl Coalgebra {
    pub fn new(carrier: Carrier, functor: FunctorSpec, next: Vec<BehaviorValue<usize>>) -> Result<Self> {
        functor.validate()?;
        if next.len() != carrier.size() {
            return Err(Error::shape(
                "next",
                format!("{} behaviors for {} states", next.len(), carrier.size()),
            ));
        }
        for (s, b) in next.iter().enumerate() {
            validate_behavior(&functor, b, carrier.size(), &format!("next[{}]", carrier.name(s)))?;
        }
        let c = Coalgebra { carrier, functor, next };
        let mut weights = Vec::new();
        for b in &c.next {
            collect_weights(b, &mut weights);
        }
        if rational::common_denominator(&weights).is_none() {
            return Err(Error::shape(
                "next",
                format!("common denominator of all weights exceeds {}", rational::MAX_DENOMINATOR),
            ));
        }
        Ok(c)
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn size(&self) -> usize {
        self.carrier.size()
    }

    pub fn functor(&self) -> &FunctorSpec {
        &self.functor
    }

    pub fn next(&self, s: usize) -> &BehaviorValue<usize> {
        &self.next[s]
    }

    pub fn behaviors(&self) -> &[BehaviorValue<usize>] {
        &self.next
    }

    /// `B k (x(s))` for an observation vector `k`.
    pub fn observe(&self, s: usize, k: &[f64]) -> Result<BehaviorValue<OmegaValue>> {
        map_behavior(&self.functor, &self.next[s], &|x: &usize| OmegaValue::new(k[*x]))
    }
}

fn collect_weights(b: &BehaviorValue<usize>, out: &mut Vec<Rational>) {
    match b {
        BehaviorValue::Id(_) | BehaviorValue::Const(_) => {}
        BehaviorValue::Pair(a, c) => {
            collect_weights(a, out);
            collect_weights(c, out);
        }
        BehaviorValue::Labeled(items) | BehaviorValue::Set(items) => {
            for i in items {
                collect_weights(i, out);
            }
        }
        BehaviorValue::Dist(entries) => {
            for (v, w) in entries {
                out.push(*w);
                collect_weights(v, out);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TruthObject {
    Two,
    UnitInterval,
    Reals,
}

impl TruthObject {
    pub fn is_numeric(self) -> bool {
        !matches!(self, TruthObject::Two)
    }

    pub fn contains(self, v: f64) -> bool {
        match self {
            TruthObject::Two => v == 0.0 || v == 1.0,
            TruthObject::UnitInterval => (0.0..=1.0).contains(&v),
            TruthObject::Reals => v.is_finite(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    /// First product component.
    Left,
    /// Second product component.
    Right,
    /// Component of an exponent, by label index.
    Label(usize),
}

/// A tabulated modality on a finite part of `BΩ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomTable {
    /// Truth values the table is defined over; the table must be total on
    /// `B(domain)` at its leaf functor.
    pub domain: Vec<f64>,
    pub entries: BTreeMap<BehaviorValue<OmegaValue>, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Leaf {
    /// `Σ ω · ξ(ω)` on `D≤1(Id)` with numeric Ω.
    ExpectedValue,
    /// `1` iff the mass at truth value `1` strictly exceeds `r`.
    Threshold(Rational),
    /// Maximum over a set; `sup ∅ = 0`.
    Sup,
    /// Minimum over a set; `inf ∅ = 1`.
    Inf,
    /// `1` iff `1` is in the set.
    Diamond,
    /// `1` iff the set lies inside `{1}`.
    Box,
    /// One truth value per constant.
    ConstTable(Vec<f64>),
    /// The identity at an `Id` leaf.
    Identity,
    CustomTable(CustomTable),
}

impl Leaf {
    pub fn describe(&self) -> String {
        match self {
            Leaf::ExpectedValue => "expected value".into(),
            Leaf::Threshold(r) => format!("threshold {}", rational::format_rational(r)),
            Leaf::Sup => "sup".into(),
            Leaf::Inf => "inf".into(),
            Leaf::Diamond => "diamond".into(),
            Leaf::Box => "box".into(),
            Leaf::ConstTable(_) => "constant table".into(),
            Leaf::Identity => "identity".into(),
            Leaf::CustomTable(_) => "custom table".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalityDef {
    pub name: String,
    pub path: Vec<Selector>,
    pub leaf: Leaf,
}

impl ModalityDef {
    pub fn new(name: impl Into<String>, path: Vec<Selector>, leaf: Leaf) -> Self {
        ModalityDef {
            name: name.into(),
            path,
            leaf,
        }
    }

    fn invalid(&self, message: impl Into<String>) -> Error {
        Error::InvalidModality {
            name: self.name.clone(),
            message: message.into(),
        }
    }

    /// The sub-functor reached by following the selector path.
    pub fn leaf_functor<'a>(&self, functor: &'a FunctorSpec) -> Result<&'a FunctorSpec> {
        let mut f = functor;
        for sel in &self.path {
            f = match (sel, f) {
                (Selector::Left, FunctorSpec::Product(a, _)) => a,
                (Selector::Right, FunctorSpec::Product(_, b)) => b,
                (Selector::Label(i), FunctorSpec::Exponent(body, labels)) if *i < labels.len() => body,
                _ => return Err(self.invalid(format!("selector {sel:?} does not apply to {f}"))),
            };
        }
        Ok(f)
    }

    pub fn validate(&self, functor: &FunctorSpec, omega: TruthObject) -> Result<()> {
        let leaf_f = self.leaf_functor(functor)?;
        let is_dist_id = matches!(leaf_f, FunctorSpec::Dist(b) if **b == FunctorSpec::Id);
        let is_pow_id = matches!(leaf_f, FunctorSpec::Pow(b) if **b == FunctorSpec::Id);
        match &self.leaf {
            Leaf::ExpectedValue => {
                if !is_dist_id {
                    return Err(self.invalid(format!("expected value needs D≤1(Id), found {leaf_f}")));
                }
                if !omega.is_numeric() {
                    return Err(self.invalid("expected value needs a numeric truth object"));
                }
            }
            Leaf::Threshold(r) => {
                if !is_dist_id {
                    return Err(self.invalid(format!("threshold needs D≤1(Id), found {leaf_f}")));
                }
                if omega != TruthObject::Two {
                    return Err(self.invalid("threshold modalities are two-valued"));
                }
                if r.is_negative() || *r > Rational::one() {
                    return Err(self.invalid("threshold must lie in [0,1]"));
                }
            }
            Leaf::Sup | Leaf::Inf => {
                if !is_pow_id {
                    return Err(self.invalid(format!("sup/inf need P(Id), found {leaf_f}")));
                }
                if !omega.is_numeric() {
                    return Err(self.invalid("sup/inf need a numeric truth object; use diamond/box"));
                }
            }
            Leaf::Diamond | Leaf::Box => {
                if !is_pow_id {
                    return Err(self.invalid(format!("diamond/box need P(Id), found {leaf_f}")));
                }
                if omega != TruthObject::Two {
                    return Err(self.invalid("diamond/box are two-valued"));
                }
            }
            Leaf::ConstTable(table) => match leaf_f {
                FunctorSpec::Const(c) if c.len() == table.len() => {
                    if let Some(v) = table.iter().find(|v| !omega.contains(**v)) {
                        return Err(self.invalid(format!("table value {v} outside Ω")));
                    }
                }
                _ => return Err(self.invalid(format!("constant table does not fit {leaf_f}"))),
            },
            Leaf::Identity => {
                if *leaf_f != FunctorSpec::Id {
                    return Err(self.invalid(format!("identity needs Id, found {leaf_f}")));
                }
            }
            Leaf::CustomTable(table) => {
                if let Some(v) = table.domain.iter().find(|v| !omega.contains(**v)) {
                    return Err(self.invalid(format!("table domain value {v} outside Ω")));
                }
                if let Some(v) = table.entries.values().find(|v| !omega.contains(**v)) {
                    return Err(self.invalid(format!("table value {v} outside Ω")));
                }
                if omega == TruthObject::Two {
                    let mut d = table.domain.clone();
                    d.sort_by(f64::total_cmp);
                    if d != [0.0, 1.0] {
                        return Err(self.invalid("a two-valued table must be defined over {0,1}"));
                    }
                }
                let leaves: Vec<OmegaValue> = table.domain.iter().map(|v| OmegaValue::new(*v)).collect();
                let all = enumerate_values(leaf_f, &leaves, 100_000)
                    .map_err(|e| self.invalid(format!("table domain is not finite: {e}")))?;
                if let Some(missing) = all.iter().find(|b| !table.entries.contains_key(b)) {
                    return Err(self.invalid(format!("table is not total; missing {missing:?}")));
                }
            }
        }
        Ok(())
    }

    /// Follows the selector path inside a behavior value.
    pub fn select<'a, T>(&self, b: &'a BehaviorValue<T>) -> Result<&'a BehaviorValue<T>> {
        let mut v = b;
        for sel in &self.path {
            v = match (sel, v) {
                (Selector::Left, BehaviorValue::Pair(a, _)) => a,
                (Selector::Right, BehaviorValue::Pair(_, c)) => c,
                (Selector::Label(i), BehaviorValue::Labeled(parts)) if *i < parts.len() => &parts[*i],
                _ => return Err(Error::shape(format!("modality {}", self.name), "selector path does not fit value")),
            };
        }
        Ok(v)
    }
}

/// Evaluates `τ_λ` on an element of `BΩ`.
pub fn eval_modality(m: &ModalityDef, b: &BehaviorValue<OmegaValue>) -> Result<f64> {
    let v = m.select(b)?;
    let mismatch = || Error::shape(format!("modality {}", m.name), format!("{} does not fit value", m.leaf.describe()));
    let id_leaf = |x: &BehaviorValue<OmegaValue>| match x {
        BehaviorValue::Id(o) => Ok(o.get()),
        _ => Err(mismatch()),
    };
    match (&m.leaf, v) {
        (Leaf::ExpectedValue, BehaviorValue::Dist(entries)) => {
            let mut acc = 0.0;
            for (x, w) in entries {
                acc += id_leaf(x)? * rational::to_f64(w);
            }
            Ok(acc)
        }
        (Leaf::Threshold(r), BehaviorValue::Dist(entries)) => {
            let mut mass = Rational::zero();
            for (x, w) in entries {
                if id_leaf(x)? == 1.0 {
                    mass += w;
                }
            }
            Ok(if mass > *r { 1.0 } else { 0.0 })
        }
        (Leaf::Sup, BehaviorValue::Set(items)) => {
            let mut acc: Option<f64> = None;
            for x in items {
                let y = id_leaf(x)?;
                acc = Some(acc.map_or(y, |a| a.max(y)));
            }
            Ok(acc.unwrap_or(0.0))
        }
        (Leaf::Inf, BehaviorValue::Set(items)) => {
            let mut acc: Option<f64> = None;
            for x in items {
                let y = id_leaf(x)?;
                acc = Some(acc.map_or(y, |a| a.min(y)));
            }
            Ok(acc.unwrap_or(1.0))
        }
        (Leaf::Diamond, BehaviorValue::Set(items)) => {
            for x in items {
                if id_leaf(x)? == 1.0 {
                    return Ok(1.0);
                }
            }
            Ok(0.0)
        }
        (Leaf::Box, BehaviorValue::Set(items)) => {
            for x in items {
                if id_leaf(x)? != 1.0 {
                    return Ok(0.0);
                }
            }
            Ok(1.0)
        }
        (Leaf::ConstTable(table), BehaviorValue::Const(i)) => table.get(*i).copied().ok_or_else(mismatch),
        (Leaf::Identity, BehaviorValue::Id(o)) => Ok(o.get()),
        (Leaf::CustomTable(table), v) => table
            .entries
            .get(v)
            .copied()
            .ok_or_else(|| Error::shape(format!("modality {}", m.name), format!("no table entry for {v:?}"))),
        _ => Err(mismatch()),
    }
}

/// All elements of `B V` for a finite leaf set `V`. Fails on `Dist` (which
/// is infinite) or when more than `limit` values would be produced.
pub fn enumerate_values<T: Ord + Clone>(functor: &FunctorSpec, leaves: &[T], limit: usize) -> Result<Vec<BehaviorValue<T>>> {
    let too_many = |n: usize| Error::SizeBound {
        what: "behavior enumeration",
        actual: n,
        bound: limit,
    };
    let out = match functor {
        FunctorSpec::Id => leaves.iter().cloned().map(BehaviorValue::Id).collect(),
        FunctorSpec::Const(c) => (0..c.len()).map(BehaviorValue::Const).collect(),
        FunctorSpec::Product(a, b) => {
            let xs = enumerate_values(a, leaves, limit)?;
            let ys = enumerate_values(b, leaves, limit)?;
            if xs.len().saturating_mul(ys.len()) > limit {
                return Err(too_many(xs.len().saturating_mul(ys.len())));
            }
            let mut out = Vec::new();
            for x in &xs {
                for y in &ys {
                    out.push(BehaviorValue::pair(x.clone(), y.clone()));
                }
            }
            out
        }
        FunctorSpec::Exponent(body, labels) => {
            let xs = enumerate_values(body, leaves, limit)?;
            let mut acc: Vec<Vec<BehaviorValue<T>>> = vec![Vec::new()];
            for _ in labels {
                if acc.len().saturating_mul(xs.len()) > limit {
                    return Err(too_many(acc.len().saturating_mul(xs.len())));
                }
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        xs.iter().map(move |x| {
                            let mut p = prefix.clone();
                            p.push(x.clone());
                            p
                        })
                    })
                    .collect();
            }
            acc.into_iter().map(BehaviorValue::Labeled).collect()
        }
        FunctorSpec::Pow(body) => {
            let xs = enumerate_values(body, leaves, limit)?;
            if xs.len() >= usize::BITS as usize || (1usize << xs.len()) > limit {
                return Err(too_many(usize::MAX));
            }
            (0..(1usize << xs.len()))
                .map(|mask| {
                    BehaviorValue::set(
                        xs.iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, x)| x.clone())
                            .collect(),
                    )
                })
                .collect()
        }
        FunctorSpec::Dist(_) => {
            return Err(Error::Unsupported("distributions over a finite set are not finitely many".into()))
        }
    };
    Ok(out)
}

/// Outcome of checking that a modality lifts observations nonexpansively.
#[derive(Debug, Clone, PartialEq)]
pub enum NonexpansiveVerdict {
    /// Holds for every behavior by a closed-form argument.
    VerifiedAnalytically,
    /// No violation among the sampled observation pairs.
    PassedSampling { samples: usize },
    Failed(NonexpansiveWitness),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexpansiveWitness {
    pub behavior: BehaviorValue<usize>,
    pub k: Vec<f64>,
    pub k_prime: Vec<f64>,
    /// `|τ(Bk b) − τ(Bk' b)|`
    pub lifted_gap: f64,
    /// `‖k − k'‖∞`
    pub input_gap: f64,
}

/// Checks `|τ(Bk b) − τ(Bk' b)| ≤ ‖k − k'‖∞`.
///
/// Built-in numeric leaves are nonexpansive in closed form: for expected
/// values `|E_μ k − E_μ k'| ≤ ‖k − k'‖∞ · mass(μ) ≤ ‖k − k'‖∞`; for sup and
/// inf on a nonempty set the same bound holds pointwise and the empty set
/// gives a constant; constant tables and identity are trivially fine.
/// Custom tables are checked by exhaustive enumeration on a two-state
/// carrier over pairs of observations at most `delta` apart, visiting at most
/// `samples` pairs.
pub fn check_nonexpansive_modality(
    m: &ModalityDef,
    functor: &FunctorSpec,
    delta: f64,
    samples: usize,
) -> Result<NonexpansiveVerdict> {
    let leaf_f = m.leaf_functor(functor)?;
    let table = match &m.leaf {
        Leaf::ExpectedValue | Leaf::Sup | Leaf::Inf | Leaf::ConstTable(_) | Leaf::Identity => {
            return Ok(NonexpansiveVerdict::VerifiedAnalytically)
        }
        Leaf::Threshold(_) | Leaf::Diamond | Leaf::Box => {
            return Err(Error::InvalidModality {
                name: m.name.clone(),
                message: "nonexpansiveness is only meaningful for numeric truth objects".into(),
            })
        }
        Leaf::CustomTable(t) => t,
    };
    const STATES: usize = 2;
    let states: Vec<usize> = (0..STATES).collect();
    let behaviors = enumerate_values(leaf_f, &states, 10_000)?;
    let mut domain = table.domain.clone();
    domain.sort_by(f64::total_cmp);
    domain.dedup();
    // all observations X → domain
    let mut observations: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..STATES {
        observations = observations
            .into_iter()
            .flat_map(|p| {
                domain.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    let mut visited = 0;
    for b in &behaviors {
        for k in &observations {
            for k2 in &observations {
                let input_gap = k.iter().zip(k2).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
                if input_gap > delta + 1e-12 || input_gap == 0.0 {
                    continue;
                }
                if visited >= samples {
                    return Ok(NonexpansiveVerdict::PassedSampling { samples: visited });
                }
                visited += 1;
                let lk = map_behavior(leaf_f, b, &|x: &usize| OmegaValue::new(k[*x]))?;
                let lk2 = map_behavior(leaf_f, b, &|x: &usize| OmegaValue::new(k2[*x]))?;
                let leaf_only = ModalityDef::new(m.name.clone(), Vec::new(), m.leaf.clone());
                let gap = (eval_modality(&leaf_only, &lk)? - eval_modality(&leaf_only, &lk2)?).abs();
                if gap > input_gap + 1e-12 {
                    return Ok(NonexpansiveVerdict::Failed(NonexpansiveWitness {
                        behavior: b.clone(),
                        k: k.clone(),
                        k_prime: k2.clone(),
                        lifted_gap: gap,
                        input_gap,
                    }));
                }
            }
        }
    }
    Ok(NonexpansiveVerdict::PassedSampling { samples: visited })
}
