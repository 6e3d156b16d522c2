//! The JSON system file: states, functor, behaviors and situation in one
//! document, converted to and from the core types.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use cobisim_core::behavior::Leaf;
use cobisim_core::instances::{cfkp_thresholds, Lmp};
use cobisim_core::logic::{default_r_grid, DEFAULT_Q_DENOMINATOR};
use cobisim_core::rational::{format_rational, parse_rational};
use cobisim_core::{
    BehaviorValue, Carrier, Coalgebra, Connective, FiberKind, FunctorSpec, ModalityDef, Rational, Selector,
    SituationConfig, TruthObject,
};
use serde::{Deserialize, Serialize};

/// A problem with an input file, with the location it was found at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invalid {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid input at {}: {}", self.path, self.message)
    }
}

impl std::error::Error for Invalid {}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> Invalid {
    Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctorJson {
    Id,
    Const(Vec<String>),
    Product(Box<FunctorJson>, Box<FunctorJson>),
    Exponent { labels: Vec<String>, body: Box<FunctorJson> },
    Pow(Box<FunctorJson>),
    Dist(Box<FunctorJson>),
    /// Shorthand for `exponent` over `dist(id)`.
    Lmp(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorJson {
    Id(String),
    Const(String),
    Pair(Box<BehaviorJson>, Box<BehaviorJson>),
    Labeled(BTreeMap<String, BehaviorJson>),
    Set(Vec<BehaviorJson>),
    Dist(Vec<WeightedJson>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedJson {
    pub to: BehaviorJson,
    /// A rational such as `"1/3"`.
    pub p: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberJson {
    BoolPred,
    EqRel,
    Pmet1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaJson {
    Two,
    UnitInterval,
    Reals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetJson {
    Kmm,
    Cfkp,
    Bu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectiveJson {
    Top,
    One,
    Min,
    Neg,
    And,
    Minus(String),
    Add(String),
    Scale(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorJson {
    Left,
    Right,
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafJson {
    ExpectedValue,
    Threshold(String),
    Sup,
    Inf,
    Diamond,
    Box,
    ConstTable(Vec<f64>),
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityJson {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub path: Vec<SelectorJson>,
    pub leaf: LeafJson,
}

/// Either a preset with its grid, or an explicit fiber, truth object and
/// connective list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SituationJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<OmegaJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connectives: Option<Vec<ConnectiveJson>>,
    /// Denominator of the `⊖q` grid (preset `kmm`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_grid: Option<i64>,
    /// The `r` grid (preset `bu`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_grid: Option<Vec<String>>,
    /// Thresholds (preset `cfkp`); derived from the weights when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modalities: Option<Vec<ModalityJson>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub states: Vec<String>,
    pub functor: FunctorJson,
    /// One behavior per state, in state order.
    pub next: Vec<BehaviorJson>,
    pub situation: SituationJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A loaded system.
#[derive(Debug, Clone, PartialEq)]
pub struct System {
    pub coalgebra: Coalgebra,
    pub situation: SituationConfig,
    pub seed: u64,
}

impl System {
    pub fn name(&self, s: usize) -> String {
        self.coalgebra.carrier().name(s)
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.coalgebra.size()).map(|s| self.name(s)).collect()
    }
}

fn rational(path: &str, text: &str) -> Result<Rational, Invalid> {
    parse_rational(text).ok_or_else(|| invalid(path, format!("`{text}` is not a rational")))
}

fn functor(j: &FunctorJson) -> FunctorSpec {
    match j {
        FunctorJson::Id => FunctorSpec::Id,
        FunctorJson::Const(values) => FunctorSpec::Const(values.clone()),
        FunctorJson::Product(a, b) => FunctorSpec::product(functor(a), functor(b)),
        FunctorJson::Exponent { labels, body } => FunctorSpec::Exponent(Box::new(functor(body)), labels.clone()),
        FunctorJson::Pow(body) => FunctorSpec::pow(functor(body)),
        FunctorJson::Dist(body) => FunctorSpec::dist(functor(body)),
        FunctorJson::Lmp(labels) => FunctorSpec::Exponent(Box::new(FunctorSpec::dist(FunctorSpec::Id)), labels.clone()),
    }
}

fn functor_json(f: &FunctorSpec) -> FunctorJson {
    match f {
        FunctorSpec::Id => FunctorJson::Id,
        FunctorSpec::Const(values) => FunctorJson::Const(values.clone()),
        FunctorSpec::Product(a, b) => FunctorJson::Product(Box::new(functor_json(a)), Box::new(functor_json(b))),
        FunctorSpec::Exponent(body, labels) => FunctorJson::Exponent {
            labels: labels.clone(),
            body: Box::new(functor_json(body)),
        },
        FunctorSpec::Pow(body) => FunctorJson::Pow(Box::new(functor_json(body))),
        FunctorSpec::Dist(body) => FunctorJson::Dist(Box::new(functor_json(body))),
    }
}

fn behavior(f: &FunctorSpec, j: &BehaviorJson, carrier: &Carrier, path: &str) -> Result<BehaviorValue<usize>, Invalid> {
    let mismatch = || invalid(path, format!("expected a value of shape {f}"));
    Ok(match (f, j) {
        (FunctorSpec::Id, BehaviorJson::Id(name)) => BehaviorValue::Id(
            carrier
                .index_of(name)
                .ok_or_else(|| invalid(path, format!("unknown state `{name}`")))?,
        ),
        (FunctorSpec::Const(values), BehaviorJson::Const(v)) => BehaviorValue::Const(
            values
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| invalid(path, format!("`{v}` is not one of the constants")))?,
        ),
        (FunctorSpec::Product(fa, fb), BehaviorJson::Pair(a, b)) => BehaviorValue::pair(
            behavior(fa, a, carrier, &format!("{path}.0"))?,
            behavior(fb, b, carrier, &format!("{path}.1"))?,
        ),
        (FunctorSpec::Exponent(body, labels), BehaviorJson::Labeled(parts)) => {
            if let Some(extra) = parts.keys().find(|k| !labels.contains(k)) {
                return Err(invalid(path, format!("unknown label `{extra}`")));
            }
            let mut out = Vec::with_capacity(labels.len());
            for label in labels {
                let part = parts
                    .get(label)
                    .ok_or_else(|| invalid(path, format!("missing label `{label}`")))?;
                out.push(behavior(body, part, carrier, &format!("{path}.{label}"))?);
            }
            BehaviorValue::Labeled(out)
        }
        (FunctorSpec::Pow(body), BehaviorJson::Set(items)) => BehaviorValue::set(
            items
                .iter()
                .enumerate()
                .map(|(i, b)| behavior(body, b, carrier, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        ),
        (FunctorSpec::Dist(body), BehaviorJson::Dist(entries)) => {
            let mut out = Vec::with_capacity(entries.len());
            for (i, e) in entries.iter().enumerate() {
                let at = format!("{path}[{i}]");
                let w = rational(&format!("{at}.p"), &e.p)?;
                if w < Rational::from_integer(0) {
                    return Err(invalid(at, "negative weight"));
                }
                out.push((behavior(body, &e.to, carrier, &format!("{at}.to"))?, w));
            }
            BehaviorValue::dist(out)
        }
        _ => return Err(mismatch()),
    })
}

fn behavior_json(f: &FunctorSpec, b: &BehaviorValue<usize>, carrier: &Carrier) -> BehaviorJson {
    match (f, b) {
        (FunctorSpec::Const(values), BehaviorValue::Const(i)) => BehaviorJson::Const(values[*i].clone()),
        (FunctorSpec::Product(fa, fb), BehaviorValue::Pair(a, c)) => {
            BehaviorJson::Pair(Box::new(behavior_json(fa, a, carrier)), Box::new(behavior_json(fb, c, carrier)))
        }
        (FunctorSpec::Exponent(body, labels), BehaviorValue::Labeled(parts)) => BehaviorJson::Labeled(
            labels
                .iter()
                .zip(parts)
                .map(|(l, p)| (l.clone(), behavior_json(body, p, carrier)))
                .collect(),
        ),
        (FunctorSpec::Pow(body), BehaviorValue::Set(items)) => {
            BehaviorJson::Set(items.iter().map(|i| behavior_json(body, i, carrier)).collect())
        }
        (FunctorSpec::Dist(body), BehaviorValue::Dist(entries)) => BehaviorJson::Dist(
            entries
                .iter()
                .map(|(v, w)| WeightedJson {
                    to: behavior_json(body, v, carrier),
                    p: format_rational(w),
                })
                .collect(),
        ),
        (_, BehaviorValue::Id(s)) => BehaviorJson::Id(carrier.name(*s)),
        // shapes are validated on construction
        _ => BehaviorJson::Set(Vec::new()),
    }
}

/// Resolves a selector path against the functor, returning core selectors.
fn selectors(f: &FunctorSpec, path: &[SelectorJson], at: &str) -> Result<Vec<Selector>, Invalid> {
    let mut out = Vec::new();
    let mut cur = f;
    for (i, sel) in path.iter().enumerate() {
        let here = format!("{at}.path[{i}]");
        match (cur, sel) {
            (FunctorSpec::Product(a, _), SelectorJson::Left) => {
                out.push(Selector::Left);
                cur = a;
            }
            (FunctorSpec::Product(_, b), SelectorJson::Right) => {
                out.push(Selector::Right);
                cur = b;
            }
            (FunctorSpec::Exponent(body, labels), SelectorJson::Label(l)) => {
                let idx = labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| invalid(&here, format!("unknown label `{l}`")))?;
                out.push(Selector::Label(idx));
                cur = body;
            }
            _ => return Err(invalid(here, format!("selector does not apply to {cur}"))),
        }
    }
    Ok(out)
}

fn selectors_json(f: &FunctorSpec, path: &[Selector]) -> Vec<SelectorJson> {
    let mut out = Vec::new();
    let mut cur = f;
    for sel in path {
        match (cur, sel) {
            (FunctorSpec::Product(a, _), Selector::Left) => {
                out.push(SelectorJson::Left);
                cur = a;
            }
            (FunctorSpec::Product(_, b), Selector::Right) => {
                out.push(SelectorJson::Right);
                cur = b;
            }
            (FunctorSpec::Exponent(body, labels), Selector::Label(i)) => {
                out.push(SelectorJson::Label(labels[*i].clone()));
                cur = body;
            }
            _ => break,
        }
    }
    out
}

fn modality(f: &FunctorSpec, j: &ModalityJson, at: &str) -> Result<ModalityDef, Invalid> {
    let leaf = match &j.leaf {
        LeafJson::ExpectedValue => Leaf::ExpectedValue,
        LeafJson::Threshold(r) => Leaf::Threshold(rational(&format!("{at}.leaf"), r)?),
        LeafJson::Sup => Leaf::Sup,
        LeafJson::Inf => Leaf::Inf,
        LeafJson::Diamond => Leaf::Diamond,
        LeafJson::Box => Leaf::Box,
        LeafJson::ConstTable(values) => Leaf::ConstTable(values.clone()),
        LeafJson::Identity => Leaf::Identity,
    };
    Ok(ModalityDef::new(j.name.clone(), selectors(f, &j.path, at)?, leaf))
}

fn modality_json(f: &FunctorSpec, m: &ModalityDef) -> Result<ModalityJson, Invalid> {
    let leaf = match &m.leaf {
        Leaf::ExpectedValue => LeafJson::ExpectedValue,
        Leaf::Threshold(r) => LeafJson::Threshold(format_rational(r)),
        Leaf::Sup => LeafJson::Sup,
        Leaf::Inf => LeafJson::Inf,
        Leaf::Diamond => LeafJson::Diamond,
        Leaf::Box => LeafJson::Box,
        Leaf::ConstTable(values) => LeafJson::ConstTable(values.clone()),
        Leaf::Identity => LeafJson::Identity,
        Leaf::CustomTable(_) => {
            return Err(invalid(
                format!("modality `{}`", m.name),
                "custom tables have no file representation",
            ))
        }
    };
    Ok(ModalityJson {
        name: m.name.clone(),
        path: selectors_json(f, &m.path),
        leaf,
    })
}

fn connective(j: &ConnectiveJson, at: &str) -> Result<Connective, Invalid> {
    Ok(match j {
        ConnectiveJson::Top => Connective::Top,
        ConnectiveJson::One => Connective::One,
        ConnectiveJson::Min => Connective::Min,
        ConnectiveJson::Neg => Connective::Neg,
        ConnectiveJson::And => Connective::And,
        ConnectiveJson::Minus(q) => Connective::Minus(rational(at, q)?),
        ConnectiveJson::Add(r) => Connective::Add(rational(at, r)?),
        ConnectiveJson::Scale(r) => Connective::Scale(rational(at, r)?),
    })
}

fn connective_json(c: &Connective) -> ConnectiveJson {
    match c {
        Connective::Top => ConnectiveJson::Top,
        Connective::One => ConnectiveJson::One,
        Connective::Min => ConnectiveJson::Min,
        Connective::Neg => ConnectiveJson::Neg,
        Connective::And => ConnectiveJson::And,
        Connective::Minus(q) => ConnectiveJson::Minus(format_rational(q)),
        Connective::Add(r) => ConnectiveJson::Add(format_rational(r)),
        Connective::Scale(r) => ConnectiveJson::Scale(format_rational(r)),
    }
}

fn core_error(path: &str, e: cobisim_core::Error) -> Invalid {
    match e {
        cobisim_core::Error::ShapeMismatch { path, message } => invalid(path, message),
        other => invalid(path, other.to_string()),
    }
}

fn modalities(f: &FunctorSpec, s: &SituationJson) -> Result<Vec<ModalityDef>, Invalid> {
    let list = s
        .modalities
        .as_ref()
        .ok_or_else(|| invalid("situation.modalities", "required for this situation"))?;
    list.iter()
        .enumerate()
        .map(|(i, m)| modality(f, m, &format!("situation.modalities[{i}]")))
        .collect()
}

fn forbid(present: bool, field: &str, why: &str) -> Result<(), Invalid> {
    if present {
        Err(invalid(format!("situation.{field}"), why.to_string()))
    } else {
        Ok(())
    }
}

fn situation(s: &SituationJson, c: &Coalgebra) -> Result<SituationConfig, Invalid> {
    let f = c.functor().clone();
    let at = |field: &str| format!("situation.{field}");
    let explicit = s.fiber.is_some() || s.omega.is_some() || s.connectives.is_some();
    match s.preset {
        Some(preset) => {
            forbid(explicit, "preset", "a preset fixes fiber, omega and connectives")?;
            forbid(s.value_bound.is_some() && preset != PresetJson::Bu, "value_bound", "only the bu preset has a value bound")?;
            forbid(s.q_grid.is_some() && preset != PresetJson::Kmm, "q_grid", "only the kmm preset has a q grid")?;
            forbid(s.r_grid.is_some() && preset != PresetJson::Bu, "r_grid", "only the bu preset has an r grid")?;
            forbid(s.thresholds.is_some() && preset != PresetJson::Cfkp, "thresholds", "only the cfkp preset has thresholds")?;
            match preset {
                PresetJson::Kmm => SituationConfig::kmm(f.clone(), modalities(&f, s)?, s.q_grid.unwrap_or(DEFAULT_Q_DENOMINATOR))
                    .map_err(|e| core_error(&at("preset"), e)),
                PresetJson::Bu => {
                    let grid = match &s.r_grid {
                        Some(g) => g.iter().map(|r| rational(&at("r_grid"), r)).collect::<Result<Vec<_>, _>>()?,
                        None => default_r_grid(),
                    };
                    let mut cfg = SituationConfig::bu(f.clone(), modalities(&f, s)?, &grid).map_err(|e| core_error(&at("preset"), e))?;
                    if let Some(b) = s.value_bound {
                        cfg.value_bound = Some(b);
                        cfg.validate().map_err(|e| core_error(&at("value_bound"), e))?;
                    }
                    Ok(cfg)
                }
                PresetJson::Cfkp => {
                    forbid(s.modalities.is_some(), "modalities", "the cfkp preset derives its modalities")?;
                    let lmp = Lmp::new(c.clone()).map_err(|e| core_error(&at("preset"), e))?;
                    let thresholds = match &s.thresholds {
                        Some(t) => t.iter().map(|r| rational(&at("thresholds"), r)).collect::<Result<Vec<_>, _>>()?,
                        None => cfkp_thresholds(&lmp),
                    };
                    SituationConfig::cfkp(lmp.labels(), &thresholds).map_err(|e| core_error(&at("preset"), e))
                }
            }
        }
        None => {
            forbid(s.q_grid.is_some() || s.r_grid.is_some() || s.thresholds.is_some(), "preset", "grids need a preset")?;
            let fiber = match s.fiber.ok_or_else(|| invalid(at("fiber"), "required without a preset"))? {
                FiberJson::BoolPred => FiberKind::BoolPred,
                FiberJson::EqRel => FiberKind::EqRel,
                FiberJson::Pmet1 => FiberKind::PMet1,
            };
            let omega = match s.omega.ok_or_else(|| invalid(at("omega"), "required without a preset"))? {
                OmegaJson::Two => TruthObject::Two,
                OmegaJson::UnitInterval => TruthObject::UnitInterval,
                OmegaJson::Reals => TruthObject::Reals,
            };
            let connectives = s
                .connectives
                .as_ref()
                .ok_or_else(|| invalid(at("connectives"), "required without a preset"))?
                .iter()
                .enumerate()
                .map(|(i, j)| connective(j, &format!("situation.connectives[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let cfg = SituationConfig {
                fiber,
                functor: f.clone(),
                omega,
                connectives,
                modalities: modalities(&f, s)?,
                value_bound: s.value_bound,
            };
            cfg.validate().map_err(|e| core_error("situation", e))?;
            Ok(cfg)
        }
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile, Invalid> {
        serde_json::from_str(text).map_err(|e| invalid(format!("line {} column {}", e.line(), e.column()), e.to_string()))
    }

    pub fn read(path: &Path) -> anyhow::Result<SystemFile> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(path.display().to_string(), e.to_string()))?;
        Ok(SystemFile::parse(&text)?)
    }

    pub fn to_system(&self) -> Result<System, Invalid> {
        let carrier = Carrier::with_labels(self.states.clone()).map_err(|e| core_error("states", e))?;
        let f = functor(&self.functor);
        f.validate().map_err(|e| core_error("functor", e))?;
        if self.next.len() != self.states.len() {
            return Err(invalid(
                "next",
                format!("{} behaviors for {} states", self.next.len(), self.states.len()),
            ));
        }
        let next = self
            .next
            .iter()
            .enumerate()
            .map(|(s, b)| behavior(&f, b, &carrier, &format!("next[{}]", self.states[s])))
            .collect::<Result<Vec<_>, _>>()?;
        let coalgebra = Coalgebra::new(carrier, f, next).map_err(|e| core_error("next", e))?;
        let situation = situation(&self.situation, &coalgebra)?;
        Ok(System {
            coalgebra,
            situation,
            seed: self.seed.unwrap_or(0),
        })
    }

    /// The canonical file of a system: explicit situation, expanded functor.
    pub fn from_system(sys: &System) -> Result<SystemFile, Invalid> {
        let c = &sys.coalgebra;
        let cfg = &sys.situation;
        let f = c.functor();
        let fiber = match cfg.fiber {
            FiberKind::BoolPred => FiberJson::BoolPred,
            FiberKind::EqRel => FiberJson::EqRel,
            FiberKind::PMet1 => FiberJson::Pmet1,
        };
        let omega = match cfg.omega {
            TruthObject::Two => OmegaJson::Two,
            TruthObject::UnitInterval => OmegaJson::UnitInterval,
            TruthObject::Reals => OmegaJson::Reals,
        };
        Ok(SystemFile {
            states: sys.names(),
            functor: functor_json(f),
            next: c.behaviors().iter().map(|b| behavior_json(f, b, c.carrier())).collect(),
            situation: SituationJson {
                fiber: Some(fiber),
                omega: Some(omega),
                connectives: Some(cfg.connectives.iter().map(connective_json).collect()),
                value_bound: cfg.value_bound,
                modalities: Some(cfg.modalities.iter().map(|m| modality_json(f, m)).collect::<Result<_, _>>()?),
                ..SituationJson::default()
            },
            seed: Some(sys.seed),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files serialize")
    }
}

/// Reads, parses and validates a system file.
pub fn load(path: &Path) -> anyhow::Result<System> {
    Ok(SystemFile::read(path)?.to_system()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LMP: &str = r#"{
        "states": ["u", "v", "w"],
        "functor": {"lmp": ["a"]},
        "next": [
            {"labeled": {"a": {"dist": [{"to": {"id": "v"}, "p": "1/2"}, {"to": {"id": "w"}, "p": "1/2"}]}}},
            {"labeled": {"a": {"dist": []}}},
            {"labeled": {"a": {"dist": []}}}
        ],
        "situation": {"preset": "cfkp"}
    }"#;

    #[test]
    fn loads_a_preset_file() {
        let sys = SystemFile::parse(LMP).unwrap().to_system().unwrap();
        assert_eq!(sys.coalgebra.size(), 3);
        assert_eq!(sys.situation.fiber, FiberKind::EqRel);
        assert_eq!(sys.name(1), "v");
    }

    #[test]
    fn canonical_files_round_trip() {
        let sys = SystemFile::parse(LMP).unwrap().to_system().unwrap();
        let canon = SystemFile::from_system(&sys).unwrap();
        let again = SystemFile::parse(&canon.to_json()).unwrap();
        assert_eq!(again, canon);
        assert_eq!(again.to_system().unwrap(), sys);
    }

    #[test]
    fn overweight_distribution_names_the_state() {
        let text = LMP.replace(r#""p": "1/2"}, {"to": {"id": "w"}, "p": "1/2"}"#, r#""p": "3/4"}, {"to": {"id": "w"}, "p": "1/2"}"#);
        let err = SystemFile::parse(&text).unwrap().to_system().unwrap_err();
        assert_eq!(err.path, "next[u].a");
        assert!(err.message.contains("5/4"), "{err}");
    }

    #[test]
    fn positioned_errors() {
        let err = SystemFile::parse("{\"states\": [1]}").unwrap_err();
        assert!(err.path.starts_with("line 1"), "{err}");
        let text = LMP.replace(r#"{"id": "v"}"#, r#"{"id": "x"}"#);
        let err = SystemFile::parse(&text).unwrap().to_system().unwrap_err();
        assert_eq!(err.path, "next[u].a[0].to");
        let text = LMP.replace(r#""preset": "cfkp""#, r#""preset": "cfkp", "q_grid": 4"#);
        let err = SystemFile::parse(&text).unwrap().to_system().unwrap_err();
        assert_eq!(err.path, "situation.q_grid");
    }
}
