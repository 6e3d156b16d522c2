//! Formulas, their semantics over a coalgebra, and closure-based generation
//! of the semantics vectors realized up to a modal depth.

use std::collections::{HashMap, HashSet};
use std::fmt;

use num_traits::{One, Signed};

use crate::bank::ModalBank;
use crate::behavior::{Coalgebra, FunctorSpec, Leaf, ModalityDef, TruthObject};
use crate::error::{Error, Result};
use crate::fibers::{FiberElement, FiberKind, Partition, PseudoMetric};
use crate::rational::{self, Rational};

/// A carrier-indexed vector of truth values, `⟦φ⟧: X → Ω`.
pub type SemanticsVector = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Connective {
    /// `⊤`, constantly 1.
    Top,
    /// The constant 1 of the real-valued logic.
    One,
    Min,
    /// `1 − x`
    Neg,
    /// `max(x − q, 0)`
    Minus(Rational),
    /// Conjunction on `{0,1}`.
    And,
    /// `r + x`
    Add(Rational),
    /// `r · x`
    Scale(Rational),
}

impl Connective {
    pub fn arity(self) -> usize {
        match self {
            Connective::Top | Connective::One => 0,
            Connective::Neg | Connective::Minus(_) | Connective::Add(_) | Connective::Scale(_) => 1,
            Connective::Min | Connective::And => 2,
        }
    }

    pub fn apply(self, args: &[f64]) -> f64 {
        match self {
            Connective::Top | Connective::One => 1.0,
            Connective::Min | Connective::And => args[0].min(args[1]),
            Connective::Neg => 1.0 - args[0],
            Connective::Minus(q) => (args[0] - rational::to_f64(&q)).max(0.0),
            Connective::Add(r) => rational::to_f64(&r) + args[0],
            Connective::Scale(r) => rational::to_f64(&r) * args[0],
        }
    }

    /// The formula syntax of this connective applied to already rendered arguments.
    pub fn syntax(self, args: &[&str]) -> String {
        let fr = rational::format_rational;
        match self {
            Connective::Top => "T".into(),
            Connective::One => "one".into(),
            Connective::Min => format!("min({},{})", args[0], args[1]),
            Connective::And => format!("and({},{})", args[0], args[1]),
            Connective::Neg => format!("neg({})", args[0]),
            Connective::Minus(q) => format!("minus({},{})", fr(&q), args[0]),
            Connective::Add(r) => format!("add({},{})", fr(&r), args[0]),
            Connective::Scale(r) => format!("scale({},{})", fr(&r), args[0]),
        }
    }

    fn apply_vec(self, args: &[&[f64]], n: usize) -> Vec<f64> {
        match self.arity() {
            0 => vec![self.apply(&[]); n],
            1 => args[0].iter().map(|&x| self.apply(&[x])).collect(),
            _ => args[0].iter().zip(args[1]).map(|(&x, &y)| self.apply(&[x, y])).collect(),
        }
    }

    fn fits(self, omega: TruthObject) -> bool {
        match self {
            Connective::Top | Connective::One | Connective::Min => true,
            Connective::Neg | Connective::Minus(_) => omega == TruthObject::UnitInterval,
            Connective::And => omega == TruthObject::Two,
            Connective::Add(_) | Connective::Scale(_) => omega == TruthObject::Reals,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Conn(Connective, Vec<Formula>),
    /// A modality, referenced by its configured name.
    Modal(String, Box<Formula>),
}

impl Formula {
    pub fn top() -> Self {
        Formula::Conn(Connective::Top, Vec::new())
    }

    pub fn modal(name: impl Into<String>, body: Formula) -> Self {
        Formula::Modal(name.into(), Box::new(body))
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::Conn(_, args) => args.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Modal(_, body) => body.depth() + 1,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Conn(_, args) => 1 + args.iter().map(Formula::size).sum::<usize>(),
            Formula::Modal(_, body) => 1 + body.size(),
        }
    }

    pub fn parse(text: &str) -> Result<Formula> {
        let mut p = Parser { src: text, pos: 0 };
        let f = p.formula()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(p.err("trailing input"));
        }
        Ok(f)
    }
}

pub fn depth(phi: &Formula) -> usize {
    phi.depth()
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Conn(c, args) => {
                let rendered: Vec<String> = args.iter().map(|a| a.to_string()).collect();
                let refs: Vec<&str> = rendered.iter().map(String::as_str).collect();
                write!(f, "{}", c.syntax(&refs))
            }
            Formula::Modal(name, body) => write!(f, "dia[{name}]({body})"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::FormulaParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> &str {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if !(c.is_alphanumeric() || c == '_') {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn rational(&mut self) -> Result<Rational> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c == ',' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        let text = self.src[start..self.pos].trim();
        let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        rational::parse_rational(&stripped).ok_or_else(|| Error::FormulaParse {
            offset: start,
            message: format!("`{text}` is not a rational"),
        })
    }

    fn formula(&mut self) -> Result<Formula> {
        let start = self.pos;
        let head = self.ident().to_string();
        let f = match head.as_str() {
            "T" => Formula::top(),
            "one" => Formula::Conn(Connective::One, Vec::new()),
            "min" | "and" => {
                self.expect('(')?;
                let a = self.formula()?;
                self.expect(',')?;
                let b = self.formula()?;
                self.expect(')')?;
                let c = if head == "min" { Connective::Min } else { Connective::And };
                Formula::Conn(c, vec![a, b])
            }
            "neg" => {
                self.expect('(')?;
                let a = self.formula()?;
                self.expect(')')?;
                Formula::Conn(Connective::Neg, vec![a])
            }
            "minus" | "add" | "scale" => {
                self.expect('(')?;
                let r = self.rational()?;
                self.expect(',')?;
                let a = self.formula()?;
                self.expect(')')?;
                let c = match head.as_str() {
                    "minus" => Connective::Minus(r),
                    "add" => Connective::Add(r),
                    _ => Connective::Scale(r),
                };
                Formula::Conn(c, vec![a])
            }
            "dia" => {
                self.expect('[')?;
                self.skip_ws();
                let close = self.src[self.pos..]
                    .find(']')
                    .ok_or_else(|| self.err("unterminated modality name"))?;
                let name = self.src[self.pos..self.pos + close].trim().to_string();
                if name.is_empty() {
                    return Err(self.err("empty modality name"));
                }
                self.pos += close + 1;
                self.expect('(')?;
                let a = self.formula()?;
                self.expect(')')?;
                Formula::modal(name, a)
            }
            "" => return Err(self.err("expected a formula")),
            other => {
                return Err(Error::FormulaParse {
                    offset: start,
                    message: format!("unknown connective `{other}`"),
                })
            }
        };
        Ok(f)
    }
}

/// A complete expressivity situation: fiber, functor, truth values,
/// connectives and modalities.
#[derive(Debug, Clone, PartialEq)]
pub struct SituationConfig {
    pub fiber: FiberKind,
    pub functor: FunctorSpec,
    pub omega: TruthObject,
    pub connectives: Vec<Connective>,
    pub modalities: Vec<ModalityDef>,
    /// Generated vectors with an entry of absolute value above this bound
    /// are discarded.
    pub value_bound: Option<f64>,
}

/// Default denominator of the `⊖q` grid.
pub const DEFAULT_Q_DENOMINATOR: i64 = 8;
/// Default bound on real-valued observations in the uniformity situation.
pub const DEFAULT_VALUE_BOUND: f64 = 4.0;

pub fn default_r_grid() -> Vec<Rational> {
    [(-2, 1), (-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1), (2, 1)]
        .iter()
        .map(|&(n, d)| Rational::new(n, d))
        .collect()
}

impl SituationConfig {
    /// Pseudometrics with `⊤, min, ¬, ⊖q` for `q ∈ {0, 1/D, …, 1}`.
    pub fn kmm(functor: FunctorSpec, modalities: Vec<ModalityDef>, q_denominator: i64) -> Result<Self> {
        if q_denominator < 1 {
            return Err(Error::InvalidSituation("q-grid denominator must be positive".into()));
        }
        let mut connectives = vec![Connective::Top, Connective::Min, Connective::Neg];
        connectives.extend((0..=q_denominator).map(|i| Connective::Minus(Rational::new(i, q_denominator))));
        let cfg = SituationConfig {
            fiber: FiberKind::PMet1,
            functor,
            omega: TruthObject::UnitInterval,
            connectives,
            modalities,
            value_bound: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Equivalence relations with `⊤, ∧` and one threshold modality per
    /// label and threshold.
    pub fn cfkp(labels: &[String], thresholds: &[Rational]) -> Result<Self> {
        let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let functor = FunctorSpec::lmp(&label_refs);
        let mut modalities = Vec::new();
        for (i, a) in labels.iter().enumerate() {
            for r in thresholds {
                modalities.push(ModalityDef::new(
                    format!("{a},{}", rational::format_rational(r)),
                    vec![crate::behavior::Selector::Label(i)],
                    Leaf::Threshold(*r),
                ));
            }
        }
        let cfg = SituationConfig {
            fiber: FiberKind::EqRel,
            functor,
            omega: TruthObject::Two,
            connectives: vec![Connective::Top, Connective::And],
            modalities,
            value_bound: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Equivalence relations over real-valued observations with
    /// `1, min, r+, r×` for `r` in the grid.
    pub fn bu(functor: FunctorSpec, modalities: Vec<ModalityDef>, r_grid: &[Rational]) -> Result<Self> {
        let mut connectives = vec![Connective::One, Connective::Min];
        connectives.extend(r_grid.iter().map(|r| Connective::Add(*r)));
        connectives.extend(r_grid.iter().map(|r| Connective::Scale(*r)));
        let cfg = SituationConfig {
            fiber: FiberKind::EqRel,
            functor,
            omega: TruthObject::Reals,
            connectives,
            modalities,
            value_bound: Some(DEFAULT_VALUE_BOUND),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.functor.validate()?;
        let fits = matches!(
            (self.fiber, self.omega),
            (FiberKind::EqRel, TruthObject::Two)
                | (FiberKind::EqRel, TruthObject::Reals)
                | (FiberKind::PMet1, TruthObject::UnitInterval)
                | (FiberKind::BoolPred, TruthObject::Two)
        );
        if !fits {
            return Err(Error::InvalidSituation(format!(
                "no observation predicate for {:?} over {:?}",
                self.fiber, self.omega
            )));
        }
        for c in &self.connectives {
            if !c.fits(self.omega) {
                return Err(Error::InvalidSituation(format!("connective {c:?} does not fit {:?}", self.omega)));
            }
            if let Connective::Minus(q) = c {
                if q.is_negative() || *q > Rational::one() {
                    return Err(Error::InvalidSituation("⊖q needs q in [0,1]".into()));
                }
            }
        }
        let mut names: Vec<&str> = self.modalities.iter().map(|m| m.name.as_str()).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSituation("duplicate modality name".into()));
        }
        for m in &self.modalities {
            m.validate(&self.functor, self.omega)?;
            if self.omega == TruthObject::Reals && !matches!(
                m.leaf,
                Leaf::ExpectedValue | Leaf::Sup | Leaf::Inf | Leaf::ConstTable(_) | Leaf::Identity
            ) {
                return Err(Error::InvalidModality {
                    name: m.name.clone(),
                    message: "real-valued situations need a bounded built-in leaf".into(),
                });
            }
        }
        if let Some(b) = self.value_bound {
            if !(b.is_finite() && b >= 1.0) {
                return Err(Error::InvalidSituation("value bound must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn modality_index(&self, name: &str) -> Option<usize> {
        self.modalities.iter().position(|m| m.name == name)
    }

    fn check_coalgebra(&self, c: &Coalgebra) -> Result<()> {
        if *c.functor() != self.functor {
            return Err(Error::InvalidSituation(format!(
                "coalgebra functor {} differs from the situation's {}",
                c.functor(),
                self.functor
            )));
        }
        Ok(())
    }

    pub(crate) fn bank(&self, c: &Coalgebra) -> Result<ModalBank> {
        self.check_coalgebra(c)?;
        ModalBank::new(c, &self.modalities)
    }

    /// The pullback of `Ω̄` along one observation.
    pub fn observation_predicate(&self, k: &[f64]) -> FiberElement {
        match self.fiber {
            FiberKind::BoolPred => FiberElement::BoolPred(k.iter().map(|v| *v == 1.0).collect()),
            FiberKind::EqRel => FiberElement::EqRel(kernel_of_vector(k, self.kernel_tol())),
            FiberKind::PMet1 => FiberElement::PMet1(PseudoMetric::from_fn_unchecked(k.len(), |s, t| {
                (k[s] - k[t]).abs()
            })),
        }
    }

    pub(crate) fn kernel_tol(&self) -> f64 {
        match self.omega {
            TruthObject::Two => 0.0,
            _ => 1e-9,
        }
    }
}

/// Groups states whose values are chained within `tol` of each other.
pub(crate) fn kernel_of_vector(k: &[f64], tol: f64) -> Partition {
    let mut order: Vec<usize> = (0..k.len()).collect();
    order.sort_by(|&a, &b| k[a].total_cmp(&k[b]).then(a.cmp(&b)));
    let mut group = vec![0usize; k.len()];
    let mut g = 0;
    for w in 0..order.len() {
        if w > 0 && k[order[w]] - k[order[w - 1]] > tol {
            g += 1;
        }
        group[order[w]] = g;
    }
    Partition::from_keys(group)
}

/// `⟦φ⟧_x`
pub fn eval_formula(phi: &Formula, c: &Coalgebra, cfg: &SituationConfig) -> Result<SemanticsVector> {
    let bank = cfg.bank(c)?;
    eval_with(phi, c.size(), cfg, &bank)
}

fn eval_with(phi: &Formula, n: usize, cfg: &SituationConfig, bank: &ModalBank) -> Result<SemanticsVector> {
    match phi {
        Formula::Conn(conn, args) => {
            if !cfg.connectives.iter().any(|c| c == conn) {
                return Err(Error::IllFormedFormula(format!("connective {conn:?} is not configured")));
            }
            if args.len() != conn.arity() {
                return Err(Error::IllFormedFormula(format!(
                    "{conn:?} takes {} arguments, got {}",
                    conn.arity(),
                    args.len()
                )));
            }
            let vals = args
                .iter()
                .map(|a| eval_with(a, n, cfg, bank))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&[f64]> = vals.iter().map(Vec::as_slice).collect();
            Ok(conn.apply_vec(&refs, n))
        }
        Formula::Modal(name, body) => {
            let i = bank
                .index_of(name)
                .ok_or_else(|| Error::IllFormedFormula(format!("unknown modality `{name}`")))?;
            let inner = eval_with(body, n, cfg, bank)?;
            bank.eval(i, &inner)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationCaps {
    /// New vectors admitted per level.
    pub per_level: usize,
    /// Connective-application rounds per level.
    pub rounds: usize,
}

impl Default for GenerationCaps {
    fn default() -> Self {
        GenerationCaps {
            per_level: 5000,
            rounds: 50,
        }
    }
}

#[derive(Debug, Clone)]
enum Origin {
    Conn(Connective, Vec<usize>),
    Modal(usize, usize),
}

#[derive(Debug, Clone)]
pub struct GeneratedEntry {
    pub vector: SemanticsVector,
    /// The level at which the vector first appeared.
    pub level: usize,
    pub depth: usize,
    pub size: usize,
    origin: Origin,
}

/// The semantics vectors realized by formulas up to a depth bound, each with
/// one witnessing formula.
#[derive(Debug, Clone)]
pub struct Generated {
    entries: Vec<GeneratedEntry>,
    truncated_at: Vec<bool>,
    modality_names: Vec<String>,
    fiber: FiberKind,
    kernel_tol: f64,
    size: usize,
}

struct Generator<'a> {
    cfg: &'a SituationConfig,
    caps: GenerationCaps,
    entries: Vec<GeneratedEntry>,
    index: HashMap<Vec<i64>, usize>,
    keys: Vec<Vec<i64>>,
    patterns: HashSet<Vec<u8>>,
    level_count: usize,
    level_plain: usize,
    dropped: bool,
}

fn dedup_key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e9).round() as i64).collect()
}

/// Dense rank of each state's value together with its sign.
fn order_pattern(key: &[i64]) -> Vec<u8> {
    let mut sorted = key.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    key.iter()
        .flat_map(|x| {
            let rank = sorted.binary_search(x).unwrap_or(0) as u8;
            [rank, x.signum().wrapping_add(1) as u8]
        })
        .collect()
}

impl Generator<'_> {
    /// Returns `false` once the level cap is reached.
    fn insert(&mut self, v: SemanticsVector, level: usize, origin: Origin) -> bool {
        if let Some(b) = self.cfg.value_bound {
            if v.iter().any(|x| x.abs() > b + 1e-12) {
                return true;
            }
        }
        let key = dedup_key(&v);
        if self.index.contains_key(&key) {
            return true;
        }
        self.admit(v, key, level, origin)
    }

    /// Like `insert` for the binary minimum of two entries, allocating only
    /// when the result is new.
    fn insert_min(&mut self, conn: Connective, a: usize, b: usize, level: usize, scratch: &mut Vec<i64>) -> bool {
        scratch.clear();
        scratch.extend(self.keys[a].iter().zip(&self.keys[b]).map(|(x, y)| *x.min(y)));
        if self.index.contains_key(scratch.as_slice()) {
            return true;
        }
        let v = conn.apply_vec(&[&self.entries[a].vector, &self.entries[b].vector], 0);
        self.admit(v, scratch.clone(), level, Origin::Conn(conn, vec![a, b]))
    }

    /// With a value bound the closure is infinite, so vectors whose order
    /// pattern was seen before get a small budget of their own and are
    /// dropped beyond it; only the others count against the level cap.
    fn admit(&mut self, v: SemanticsVector, key: Vec<i64>, level: usize, origin: Origin) -> bool {
        let pattern = self.cfg.value_bound.map(|_| order_pattern(&key));
        match pattern {
            Some(p) if self.patterns.contains(&p) => {
                if self.level_plain >= self.caps.per_level / 10 {
                    self.dropped = true;
                    return true;
                }
                self.level_plain += 1;
            }
            _ => {
                if self.level_count >= self.caps.per_level {
                    return false;
                }
                if let Some(p) = pattern {
                    self.patterns.insert(p);
                }
                self.level_count += 1;
            }
        }
        let (depth, size) = match &origin {
            Origin::Conn(_, args) => (
                args.iter().map(|&a| self.entries[a].depth).max().unwrap_or(0),
                1 + args.iter().map(|&a| self.entries[a].size).fold(0usize, usize::saturating_add),
            ),
            Origin::Modal(_, a) => (self.entries[*a].depth + 1, self.entries[*a].size.saturating_add(1)),
        };
        self.index.insert(key.clone(), self.entries.len());
        self.keys.push(key);
        self.entries.push(GeneratedEntry {
            vector: v,
            level,
            depth,
            size,
            origin,
        });
        true
    }

    /// Semi-naive connective closure of everything admitted so far, where
    /// `start..` are the entries new at this level. Returns `false` if a cap
    /// cut the closure short.
    fn close(&mut self, start: usize, level: usize) -> bool {
        let unary: Vec<Connective> = self.cfg.connectives.iter().copied().filter(|c| c.arity() == 1).collect();
        let binary: Vec<Connective> = self.cfg.connectives.iter().copied().filter(|c| c.arity() == 2).collect();
        let mut frontier = start..self.entries.len();
        let mut rounds = 0;
        while !frontier.is_empty() {
            if rounds == self.caps.rounds {
                return false;
            }
            rounds += 1;
            let end = self.entries.len();
            for &u in &unary {
                for a in frontier.clone() {
                    let v = u.apply_vec(&[&self.entries[a].vector], 0);
                    if !self.insert(v, level, Origin::Conn(u, vec![a])) {
                        return false;
                    }
                }
            }
            let mut scratch = Vec::new();
            for &b in &binary {
                for a in frontier.clone() {
                    for other in 0..end {
                        if frontier.contains(&other) && other > a {
                            continue;
                        }
                        if !self.insert_min(b, a, other, level, &mut scratch) {
                            return false;
                        }
                    }
                }
            }
            frontier = end..self.entries.len();
        }
        true
    }
}

/// Generates the semantics vectors of all formulas of depth at most
/// `depth_bound`, up to the caps.
pub fn generate_semantics(
    cfg: &SituationConfig,
    c: &Coalgebra,
    depth_bound: usize,
    caps: GenerationCaps,
) -> Result<Generated> {
    let bank = cfg.bank(c)?;
    let n = c.size();
    let mut g = Generator {
        cfg,
        caps,
        entries: Vec::new(),
        index: HashMap::new(),
        keys: Vec::new(),
        patterns: HashSet::new(),
        level_count: 0,
        level_plain: 0,
        dropped: false,
    };
    let mut truncated_at = Vec::with_capacity(depth_bound + 1);
    let mut complete = true;
    for &conn in cfg.connectives.iter().filter(|c| c.arity() == 0) {
        complete &= g.insert(conn.apply_vec(&[], n), 0, Origin::Conn(conn, Vec::new()));
    }
    complete &= g.close(0, 0);
    truncated_at.push(!complete || g.dropped);
    let mut prev = 0..g.entries.len();
    for level in 1..=depth_bound {
        g.level_count = 0;
        g.level_plain = 0;
        g.dropped = false;
        let start = g.entries.len();
        let mut complete = true;
        'images: for a in prev.clone() {
            let images = bank.eval_all(&g.entries[a].vector)?;
            for (lambda, v) in images.into_iter().enumerate() {
                if !g.insert(v, level, Origin::Modal(lambda, a)) {
                    complete = false;
                    break 'images;
                }
            }
        }
        if complete {
            complete = g.close(start, level);
        }
        truncated_at.push(!complete || g.dropped);
        prev = start..g.entries.len();
    }
    Ok(Generated {
        entries: g.entries,
        truncated_at,
        modality_names: cfg.modalities.iter().map(|m| m.name.clone()).collect(),
        fiber: cfg.fiber,
        kernel_tol: cfg.kernel_tol(),
        size: n,
    })
}

/// A logically defined fiber element, flagged when it may be less
/// discriminating than the full logic.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalPredicate {
    pub element: FiberElement,
    pub depth: usize,
    pub truncated: bool,
}

impl Generated {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depth_bound(&self) -> usize {
        self.truncated_at.len() - 1
    }

    pub fn entries(&self) -> &[GeneratedEntry] {
        &self.entries
    }

    /// Entries of level at most `n`.
    pub fn up_to(&self, n: usize) -> impl Iterator<Item = (usize, &GeneratedEntry)> {
        self.entries.iter().enumerate().filter(move |(_, e)| e.level <= n)
    }

    pub fn truncated_up_to(&self, n: usize) -> bool {
        self.truncated_at.iter().take(n + 1).any(|t| *t)
    }

    pub fn truncated(&self) -> bool {
        self.truncated_at.iter().any(|t| *t)
    }

    /// The witnessing formula of entry `id`.
    pub fn formula(&self, id: usize) -> Formula {
        match &self.entries[id].origin {
            Origin::Conn(c, args) => Formula::Conn(*c, args.iter().map(|&a| self.formula(a)).collect()),
            Origin::Modal(lambda, a) => Formula::modal(self.modality_names[*lambda].clone(), self.formula(*a)),
        }
    }

    /// Meet over entries of level at most `n` of the pullback of `Ω̄`.
    pub fn predicate(&self, n: usize) -> LogicalPredicate {
        let size = self.size;
        let element = match self.fiber {
            FiberKind::BoolPred => {
                let mut p = vec![true; size];
                for (_, e) in self.up_to(n) {
                    for (s, v) in e.vector.iter().enumerate() {
                        p[s] &= *v == 1.0;
                    }
                }
                FiberElement::BoolPred(p)
            }
            FiberKind::EqRel => {
                let mut r = Partition::total(size);
                for (_, e) in self.up_to(n) {
                    if r.num_blocks() == size {
                        break;
                    }
                    r = r.intersect(&kernel_of_vector(&e.vector, self.kernel_tol));
                }
                FiberElement::EqRel(r)
            }
            FiberKind::PMet1 => {
                let mut d = vec![0.0; size * size];
                for (_, e) in self.up_to(n) {
                    for s in 0..size {
                        for t in s + 1..size {
                            let gap = (e.vector[s] - e.vector[t]).abs();
                            if gap > d[s * size + t] {
                                d[s * size + t] = gap;
                                d[t * size + s] = gap;
                            }
                        }
                    }
                }
                FiberElement::PMet1(PseudoMetric::from_fn_unchecked(size, |s, t| d[s * size + t]))
            }
        };
        LogicalPredicate {
            element,
            depth: n,
            truncated: self.truncated_up_to(n),
        }
    }

    /// The entry of level at most `n` separating `s` and `t` the most; ties go
    /// to smaller depth, then smaller formula, then earlier generation.
    pub fn witness(&self, s: usize, t: usize, n: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (id, e) in self.up_to(n) {
            let sep = (e.vector[s] - e.vector[t]).abs();
            let better = match best {
                None => true,
                Some((b, bs)) => {
                    let be = &self.entries[b];
                    sep > bs + 1e-12
                        || ((sep - bs).abs() <= 1e-12 && (e.depth, e.size) < (be.depth, be.size))
                }
            };
            if better {
                best = Some((id, sep));
            }
        }
        best
    }
}

pub fn logical_predicate(
    cfg: &SituationConfig,
    c: &Coalgebra,
    n: usize,
    caps: GenerationCaps,
) -> Result<LogicalPredicate> {
    Ok(generate_semantics(cfg, c, n, caps)?.predicate(n))
}

pub fn witness_formula(
    cfg: &SituationConfig,
    c: &Coalgebra,
    s: usize,
    t: usize,
    n: usize,
    caps: GenerationCaps,
) -> Result<(Formula, f64)> {
    if s == t {
        return Err(Error::InvalidSituation("a witness needs two distinct states".into()));
    }
    if s >= c.size() || t >= c.size() {
        return Err(Error::InvalidSituation("state out of range".into()));
    }
    let g = generate_semantics(cfg, c, n, caps)?;
    match g.witness(s, t, n) {
        Some((id, sep)) => Ok((g.formula(id), sep)),
        None => Err(Error::InvalidSituation("the situation has no nullary connective".into())),
    }
}
