//! The codensity bisimilarity game: move legality, optimal play read off the
//! Kleene chain, a brute-force safety-game solver, and a line-based REPL.

use std::io::{BufRead, Write};

use crate::bank::ModalBank;
use crate::behavior::{Coalgebra, TruthObject};
use crate::error::{Error, Result};
use crate::fibers::{top, FiberElement, FiberKind, Partition, PseudoMetric};
use crate::fixpoint::{kleene_gfp, KleeneOptions};
use crate::logic::{generate_semantics, GenerationCaps, SemanticsVector, SituationConfig};
use crate::rational::{parse_rational, to_f64};

/// Largest carrier for which Spoiler's two-valued moves are enumerated.
pub const FULL_ENUMERATION_MAX_STATES: usize = 12;
/// Largest carrier for which Duplicator's partition responses are enumerated.
pub const PARTITION_ENUMERATION_MAX_STATES: usize = 8;
pub const BRUTE_MAX_STATES: usize = 5;
pub const DEFAULT_CUTOFF: usize = 50;
pub const RESTRICTED_CAVEAT: &str = "caveat: Spoiler's moves are restricted to generated observations and entered vectors; \
Duplicator wins are sound only if that set is approximating";

/// Slack on metric comparisons, above the Kleene tolerance.
const METRIC_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum GamePosition {
    /// Duplicator has just moved; Spoiler is to play.
    Predicate(FiberElement),
    /// Spoiler has just moved; Duplicator is to play.
    Observation(SemanticsVector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Spoiler,
    Duplicator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Move {
    Spoiler(SemanticsVector),
    Duplicator(FiberElement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    SpoilerStuck,
    DuplicatorStuck,
    /// Scored for Duplicator.
    CutoffReachedInfinite,
    /// The human left before the play ended.
    Abandoned,
}

impl Outcome {
    pub fn winner(self) -> Option<Player> {
        match self {
            Outcome::SpoilerStuck | Outcome::CutoffReachedInfinite => Some(Player::Duplicator),
            Outcome::DuplicatorStuck => Some(Player::Spoiler),
            Outcome::Abandoned => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayRecord {
    pub start: FiberElement,
    /// Alternating, Spoiler first.
    pub moves: Vec<Move>,
    pub outcome: Outcome,
    /// Completed Spoiler–Duplicator exchanges.
    pub rounds: usize,
}

/// A modality and a pair of states witnessing `P ⋢ x*(τ_λ ∘ Bk)*Ω̄`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Separation {
    pub modality: String,
    pub s: usize,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionSolution {
    pub winner: Player,
    /// The engine's move for the player to move, if that player can move.
    pub optimal_move: Option<Move>,
    /// Set for metric fibers, restricted move sets, or an unconverged chain.
    pub approximate: bool,
    pub explanation: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameOptions {
    pub kleene: KleeneOptions,
    pub caps: GenerationCaps,
    /// Depth of the generated observations offered to Spoiler when moves
    /// cannot be enumerated.
    pub observation_depth: usize,
}

impl Default for GameOptions {
    fn default() -> Self {
        GameOptions {
            kleene: KleeneOptions::default(),
            caps: GenerationCaps {
                per_level: 2000,
                rounds: 50,
            },
            observation_depth: 3,
        }
    }
}

/// `Some(pair)` witnessing `p ⋢ q`; for predicates the pair is `(x, x)`.
fn not_below(p: &FiberElement, q: &FiberElement, margin: f64) -> Option<(usize, usize)> {
    match (p, q) {
        (FiberElement::BoolPred(a), FiberElement::BoolPred(b)) => a.iter().zip(b).position(|(x, y)| *x && !*y).map(|x| (x, x)),
        (FiberElement::EqRel(a), FiberElement::EqRel(b)) => a.violating_pair(b),
        (FiberElement::PMet1(a), FiberElement::PMet1(b)) => {
            let n = a.size();
            (0..n)
                .flat_map(|s| (s + 1..n).map(move |t| (s, t)))
                .find(|&(s, t)| a.get(s, t) < b.get(s, t) - margin)
        }
        _ => None,
    }
}

fn all_two_valued(n: usize) -> Vec<SemanticsVector> {
    (0u32..(1 << n)).map(|m| (0..n).map(|x| (m >> x & 1) as f64).collect()).collect()
}

fn all_predicates(kind: FiberKind, n: usize) -> Vec<FiberElement> {
    match kind {
        FiberKind::BoolPred => (0u32..(1 << n))
            .map(|m| FiberElement::BoolPred((0..n).map(|x| m >> x & 1 == 1).collect()))
            .collect(),
        _ => Partition::enumerate_all(n).into_iter().map(FiberElement::EqRel).collect(),
    }
}

fn format_vector(k: &[f64]) -> String {
    format!("[{}]", k.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(", "))
}

pub struct Game {
    cfg: SituationConfig,
    c: Coalgebra,
    bank: ModalBank,
    chain: Vec<FiberElement>,
    nu: FiberElement,
    converged: bool,
    margin: f64,
    full: bool,
    observations: Vec<SemanticsVector>,
}

impl Game {
    /// Computes `ν` and, when Spoiler's moves cannot be enumerated, the
    /// generated observations that stand in for them.
    pub fn new(cfg: &SituationConfig, c: &Coalgebra, opts: GameOptions) -> Result<Game> {
        let bank = cfg.bank(c)?;
        let (nu, report) = kleene_gfp(cfg, c, opts.kleene)?;
        let full = cfg.omega == TruthObject::Two;
        let observations = if full {
            Vec::new()
        } else {
            let g = generate_semantics(cfg, c, opts.observation_depth, opts.caps)?;
            g.entries().iter().map(|e| e.vector.clone()).collect()
        };
        Ok(Game {
            cfg: cfg.clone(),
            c: c.clone(),
            bank,
            chain: report.iterates,
            nu,
            converged: report.converged,
            margin: if cfg.fiber == FiberKind::PMet1 { METRIC_MARGIN } else { 0.0 },
            full,
            observations,
        })
    }

    pub fn config(&self) -> &SituationConfig {
        &self.cfg
    }

    pub fn coalgebra(&self) -> &Coalgebra {
        &self.c
    }

    pub fn nu(&self) -> &FiberElement {
        &self.nu
    }

    /// `⊤, Φ(⊤), …, ν`
    pub fn chain(&self) -> &[FiberElement] {
        &self.chain
    }

    /// Spoiler ranges over a finite stand-in set rather than all of `Ω^X`.
    pub fn is_restricted(&self) -> bool {
        !self.full
    }

    pub fn approximate(&self) -> bool {
        self.is_restricted() || self.cfg.fiber == FiberKind::PMet1 || !self.converged
    }

    pub fn observations(&self) -> &[SemanticsVector] {
        &self.observations
    }

    /// Adds a vector to the restricted move set; a no-op when moves are
    /// enumerated in full.
    pub fn add_observation(&mut self, k: SemanticsVector) -> Result<()> {
        self.validate_observation(&k)?;
        if !self.full && !self.observations.contains(&k) {
            self.observations.push(k);
        }
        Ok(())
    }

    pub fn validate_observation(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.c.size() {
            return Err(Error::CarrierMismatch {
                left: k.len(),
                right: self.c.size(),
            });
        }
        match k.iter().find(|v| !self.cfg.omega.contains(**v)) {
            Some(v) => Err(Error::InvalidElement(format!("{v} is not a truth value of {:?}", self.cfg.omega))),
            None => Ok(()),
        }
    }

    pub fn validate_predicate(&self, p: &FiberElement) -> Result<()> {
        p.check_compatible(&self.nu)
    }

    /// `k*Ω̄`
    pub fn observation_predicate(&self, k: &[f64]) -> FiberElement {
        self.cfg.observation_predicate(k)
    }

    /// A witness that `k` is a legal Spoiler move at `p`, or `None`.
    pub fn spoiler_witness(&self, p: &FiberElement, k: &[f64]) -> Result<Option<Separation>> {
        self.validate_predicate(p)?;
        self.validate_observation(k)?;
        for (lambda, image) in self.bank.eval_all(k)?.into_iter().enumerate() {
            if let Some((s, t)) = not_below(p, &self.observation_predicate(&image), self.margin) {
                return Ok(Some(Separation {
                    modality: self.bank.name(lambda).to_string(),
                    s,
                    t,
                }));
            }
        }
        Ok(None)
    }

    /// A pair witnessing `p ⋢ k*Ω̄`, making `p` a legal answer to `k`.
    pub fn duplicator_witness(&self, k: &[f64], p: &FiberElement) -> Result<Option<(usize, usize)>> {
        self.validate_predicate(p)?;
        self.validate_observation(k)?;
        Ok(not_below(p, &self.observation_predicate(k), self.margin))
    }

    /// Duplicator has an answer to `k` at all.
    pub fn duplicator_can_move(&self, k: &[f64]) -> Result<bool> {
        Ok(self.duplicator_witness(k, &top(self.cfg.fiber, self.c.size()))?.is_some())
    }

    fn candidates(&self) -> Result<Vec<SemanticsVector>> {
        if !self.full {
            return Ok(self.observations.clone());
        }
        let n = self.c.size();
        if n > FULL_ENUMERATION_MAX_STATES {
            return Err(Error::SizeBound {
                what: "carrier for enumerating Spoiler moves",
                actual: n,
                bound: FULL_ENUMERATION_MAX_STATES,
            });
        }
        Ok(all_two_valued(n))
    }

    /// Every legal Spoiler move at `p`: all of `2^X` when `Ω` is two-valued,
    /// otherwise the restricted set.
    pub fn spoiler_moves(&self, p: &FiberElement) -> Result<Vec<SemanticsVector>> {
        let mut out = Vec::new();
        for k in self.candidates()? {
            if self.spoiler_witness(p, &k)?.is_some() {
                out.push(k);
            }
        }
        Ok(out)
    }

    /// Every legal Duplicator answer to `k`, for the enumerable fibers.
    pub fn duplicator_moves(&self, k: &[f64]) -> Result<Vec<FiberElement>> {
        let n = self.c.size();
        let bound = match self.cfg.fiber {
            FiberKind::PMet1 => {
                return Err(Error::Unsupported(
                    "pseudometric answers are not enumerable; the engine answers ν".into(),
                ))
            }
            FiberKind::BoolPred => FULL_ENUMERATION_MAX_STATES,
            FiberKind::EqRel => PARTITION_ENUMERATION_MAX_STATES,
        };
        if n > bound {
            return Err(Error::SizeBound {
                what: "carrier for enumerating Duplicator moves",
                actual: n,
                bound,
            });
        }
        let mut out = Vec::new();
        for p in all_predicates(self.cfg.fiber, n) {
            if self.duplicator_witness(k, &p)?.is_some() {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Least `i` with `p ⋢ Φ^i(⊤)`; `None` when `p ⊑ ν`.
    fn rank(&self, p: &FiberElement) -> Option<usize> {
        self.chain.iter().position(|q| not_below(p, q, self.margin).is_some())
    }

    fn respects(&self, q: &FiberElement, k: &[f64]) -> bool {
        not_below(q, &self.observation_predicate(k), self.margin).is_none()
    }

    /// The engine's Spoiler move at `p` and why. From `p ⋢ Φ^i(⊤)` it picks
    /// `k` respecting `Φ^{i−1}(⊤)`, so any answer drops the rank; otherwise
    /// it falls back to any legal move.
    pub fn engine_spoiler(&self, p: &FiberElement) -> Result<Option<(SemanticsVector, String)>> {
        self.validate_predicate(p)?;
        let candidates = self.candidates()?;
        let rank = self.rank(p);
        let mut fallback = None;
        let mut second = None;
        for k in candidates {
            let Some(sep) = self.spoiler_witness(p, &k)? else {
                continue;
            };
            let detail = format!("modality {} separates states {} and {}", sep.modality, sep.s, sep.t);
            if let Some(i) = rank {
                if i > 0 && self.respects(&self.chain[i - 1], &k) {
                    return Ok(Some((
                        k,
                        format!("P is not below iterate {i} of the chain; k respects iterate {}; {detail}", i - 1),
                    )));
                }
                if second.is_none() && self.respects(&self.nu, &k) {
                    second = Some((k.clone(), format!("k respects ν, so every answer loses; {detail}")));
                }
            }
            if fallback.is_none() {
                let why = if rank.is_some() {
                    format!("no better move in the available set; {detail}")
                } else {
                    format!("P is below ν, so Spoiler cannot win; {detail}")
                };
                fallback = Some((k, why));
            }
        }
        Ok(second.or(fallback))
    }

    /// The engine's answer to `k`: `ν` when legal, else `⊤` when any answer
    /// exists (a losing move), else `None`.
    pub fn engine_duplicator(&self, k: &[f64]) -> Result<Option<(FiberElement, String)>> {
        if let Some((s, t)) = self.duplicator_witness(k, &self.nu)? {
            return Ok(Some((self.nu.clone(), format!("ν is not below k*Ω̄ at states {s} and {t}"))));
        }
        let t = top(self.cfg.fiber, self.c.size());
        Ok(self
            .duplicator_witness(k, &t)?
            .map(|(s, u)| (t, format!("k respects ν, so this position is lost; ⊤ still separates states {s} and {u}"))))
    }

    /// Winner by comparison with `ν`, and the engine's move.
    pub fn solve_position(&self, pos: &GamePosition) -> Result<PositionSolution> {
        match pos {
            GamePosition::Predicate(p) => {
                let duplicator = self.rank(p).is_none();
                let mv = self.engine_spoiler(p)?;
                Ok(PositionSolution {
                    winner: if duplicator { Player::Duplicator } else { Player::Spoiler },
                    explanation: match (&mv, duplicator) {
                        (_, true) => "P ⊑ ν: Duplicator wins by answering ν".to_string(),
                        (Some((_, why)), false) => format!("P ⋢ ν: {why}"),
                        (None, false) => "P ⋢ ν but no move in the available set separates it".to_string(),
                    },
                    optimal_move: mv.map(|(k, _)| Move::Spoiler(k)),
                    approximate: self.approximate(),
                })
            }
            GamePosition::Observation(k) => {
                let mv = self.engine_duplicator(k)?;
                let duplicator = self.duplicator_witness(k, &self.nu)?.is_some();
                Ok(PositionSolution {
                    winner: if duplicator { Player::Duplicator } else { Player::Spoiler },
                    explanation: match &mv {
                        Some((_, why)) => why.clone(),
                        None => "k*Ω̄ is ⊤: Duplicator has no answer".to_string(),
                    },
                    optimal_move: mv.map(|(p, _)| Move::Duplicator(p)),
                    approximate: self.approximate(),
                })
            }
        }
    }
}

/// Duplicator's winning region over every position of the explicit game graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteSolution {
    pub predicates: Vec<FiberElement>,
    pub predicate_wins: Vec<bool>,
    pub observations: Vec<SemanticsVector>,
    pub observation_wins: Vec<bool>,
}

impl BruteSolution {
    pub fn duplicator_predicates(&self) -> Vec<&FiberElement> {
        self.predicates.iter().zip(&self.predicate_wins).filter(|(_, w)| **w).map(|(p, _)| p).collect()
    }
}

/// Solves the safety game by a greatest-fixed-point computation; makes no use
/// of bisimilarity.
pub fn brute_solve(cfg: &SituationConfig, c: &Coalgebra, bound: usize) -> Result<BruteSolution> {
    if cfg.omega != TruthObject::Two || cfg.fiber == FiberKind::PMet1 {
        return Err(Error::InvalidSituation("the brute solver needs a two-valued relation or predicate situation".into()));
    }
    let n = c.size();
    if n > bound {
        return Err(Error::SizeBound {
            what: "carrier for the brute solver",
            actual: n,
            bound,
        });
    }
    let bank = cfg.bank(c)?;
    let predicates = all_predicates(cfg.fiber, n);
    let observations = all_two_valued(n);
    let mut image_preds = Vec::with_capacity(observations.len());
    for k in &observations {
        image_preds.push(bank.eval_all(k)?.iter().map(|m| cfg.observation_predicate(m)).collect::<Vec<_>>());
    }
    let obs_preds: Vec<FiberElement> = observations.iter().map(|k| cfg.observation_predicate(k)).collect();
    let spoiler_edges: Vec<Vec<usize>> = predicates
        .iter()
        .map(|p| {
            (0..observations.len())
                .filter(|&j| image_preds[j].iter().any(|q| not_below(p, q, 0.0).is_some()))
                .collect()
        })
        .collect();
    let duplicator_edges: Vec<Vec<usize>> = obs_preds
        .iter()
        .map(|q| (0..predicates.len()).filter(|&i| not_below(&predicates[i], q, 0.0).is_some()).collect())
        .collect();
    let mut pw = vec![true; predicates.len()];
    let mut ow = vec![true; observations.len()];
    loop {
        let mut changed = false;
        for (j, edges) in duplicator_edges.iter().enumerate() {
            if ow[j] && !edges.iter().any(|&i| pw[i]) {
                ow[j] = false;
                changed = true;
            }
        }
        for (i, edges) in spoiler_edges.iter().enumerate() {
            if pw[i] && !edges.iter().all(|&j| ow[j]) {
                pw[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(BruteSolution {
        predicates,
        predicate_wins: pw,
        observations,
        observation_wins: ow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Spoiler,
    Duplicator,
    /// Engine against engine.
    Watch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplOptions {
    pub cutoff: usize,
    /// Defaults to `⊤`.
    pub start: Option<FiberElement>,
}

impl Default for ReplOptions {
    fn default() -> Self {
        ReplOptions {
            cutoff: DEFAULT_CUTOFF,
            start: None,
        }
    }
}

/// A parsed REPL line.
#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Observation(SemanticsVector),
    Predicate(FiberElement),
    Hint,
    Quit,
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .or_else(|| parse_rational(s).map(|r| to_f64(&r)))
        .ok_or_else(|| format!("`{s}` is not a number"))
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected `[v0, v1, ...]`, found `{}`", s.trim()))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner.split(',').map(parse_number).collect()
}

fn parse_index_groups(s: &str, n: usize) -> std::result::Result<Vec<Vec<usize>>, String> {
    let mut groups = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('{').ok_or_else(|| format!("expected `{{` at `{rest}`"))?;
        let close = body.find('}').ok_or("unclosed `{`")?;
        let members = body[..close]
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| {
                let x: usize = t.trim().parse().map_err(|_| format!("`{}` is not a state index", t.trim()))?;
                if x >= n {
                    return Err(format!("state {x} is outside 0..{n}"));
                }
                Ok(x)
            })
            .collect::<std::result::Result<Vec<_>, String>>()?;
        groups.push(members);
        rest = body[close + 1..].trim_start();
    }
    Ok(groups)
}

/// Parses `k = [..]`, `P = blocks {..}{..}`, `P = set {..}`, `P = metric [[..], ..]`,
/// `hint` and `quit`.
pub fn parse_command(line: &str, n: usize) -> std::result::Result<Command, String> {
    let line = line.trim();
    match line {
        "hint" => return Ok(Command::Hint),
        "quit" | "exit" => return Ok(Command::Quit),
        _ => {}
    }
    let (lhs, rhs) = line.split_once('=').ok_or("expected `k = [...]`, `P = ...`, `hint` or `quit`")?;
    match lhs.trim() {
        "k" => parse_list(rhs).map(Command::Observation),
        "P" => {
            let rhs = rhs.trim();
            if let Some(b) = rhs.strip_prefix("blocks") {
                let p = Partition::from_blocks(n, &parse_index_groups(b, n)?).map_err(|e| e.to_string())?;
                Ok(Command::Predicate(FiberElement::EqRel(p)))
            } else if let Some(b) = rhs.strip_prefix("set") {
                let groups = parse_index_groups(b, n)?;
                if groups.len() != 1 {
                    return Err("a predicate is one set `{..}`".into());
                }
                let mut p = vec![false; n];
                for x in &groups[0] {
                    p[*x] = true;
                }
                Ok(Command::Predicate(FiberElement::BoolPred(p)))
            } else if let Some(b) = rhs.strip_prefix("metric") {
                let b = b.trim();
                let inner = b
                    .strip_prefix('[')
                    .and_then(|r| r.strip_suffix(']'))
                    .ok_or("expected `metric [[..], ..]`")?;
                let mut rows = Vec::new();
                let mut rest = inner.trim();
                while !rest.is_empty() {
                    let close = rest.find(']').ok_or("unclosed row")?;
                    rows.push(parse_list(&rest[..=close])?);
                    rest = rest[close + 1..].trim_start().trim_start_matches(',').trim_start();
                }
                let d = PseudoMetric::from_rows(&rows).map_err(|e| e.to_string())?;
                Ok(Command::Predicate(FiberElement::PMet1(d)))
            } else {
                Err("expected `blocks`, `set` or `metric` after `P =`".into())
            }
        }
        other => Err(format!("unknown left-hand side `{other}`")),
    }
}

enum Turn<T> {
    Play(T),
    Stuck,
    Quit,
}

fn read_command<R: BufRead, W: Write>(input: &mut R, out: &mut W, prompt: &str, n: usize) -> Result<Option<Command>> {
    loop {
        write!(out, "{prompt}> ")?;
        out.flush()?;
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(None);
        }
        if line.trim().is_empty() {
            continue;
        }
        writeln!(out, "{}", line.trim_end())?;
        match parse_command(&line, n) {
            Ok(cmd) => return Ok(Some(cmd)),
            Err(msg) => writeln!(out, "malformed input: {msg}")?,
        }
    }
}

fn describe_order(kind: FiberKind) -> &'static str {
    match kind {
        FiberKind::BoolPred => "every state of P has k-value 1",
        FiberKind::EqRel => "every pair related by P has equal k-values",
        FiberKind::PMet1 => "P(x,y) ≥ |k(x) − k(y)| for every pair",
    }
}

fn human_spoiler<R: BufRead, W: Write>(game: &mut Game, p: &FiberElement, input: &mut R, out: &mut W) -> Result<Turn<SemanticsVector>> {
    if game.full && game.spoiler_moves(p)?.is_empty() {
        writeln!(out, "Spoiler has no legal move")?;
        return Ok(Turn::Stuck);
    }
    loop {
        let Some(cmd) = read_command(input, out, "spoiler", game.c.size())? else {
            return Ok(Turn::Quit);
        };
        match cmd {
            Command::Quit => return Ok(Turn::Quit),
            Command::Hint => match game.engine_spoiler(p)? {
                Some((k, why)) => writeln!(out, "hint: k = {} ({why})", format_vector(&k))?,
                None => writeln!(out, "hint: no move in the available set")?,
            },
            Command::Predicate(_) => writeln!(out, "rejected: Spoiler plays an observation `k = [...]`")?,
            Command::Observation(k) => {
                if let Err(e) = game.validate_observation(&k) {
                    writeln!(out, "rejected: {e}")?;
                    continue;
                }
                match game.spoiler_witness(p, &k)? {
                    Some(sep) => {
                        game.add_observation(k.clone())?;
                        writeln!(out, "accepted: modality {} separates states {} and {}", sep.modality, sep.s, sep.t)?;
                        return Ok(Turn::Play(k));
                    }
                    None => {
                        let names: Vec<&str> = (0..game.bank.len()).map(|i| game.bank.name(i)).collect();
                        writeln!(
                            out,
                            "rejected: not a Spoiler move; P lies below the pullback of the modal image of k for every modality ({})",
                            names.join(", ")
                        )?;
                    }
                }
            }
        }
    }
}

fn human_duplicator<R: BufRead, W: Write>(game: &Game, k: &[f64], input: &mut R, out: &mut W) -> Result<Turn<FiberElement>> {
    if !game.duplicator_can_move(k)? {
        writeln!(out, "Duplicator has no legal move: k*Ω̄ is ⊤")?;
        return Ok(Turn::Stuck);
    }
    loop {
        let Some(cmd) = read_command(input, out, "duplicator", game.c.size())? else {
            return Ok(Turn::Quit);
        };
        match cmd {
            Command::Quit => return Ok(Turn::Quit),
            Command::Hint => match game.engine_duplicator(k)? {
                Some((p, why)) => writeln!(out, "hint: P = {p} ({why})")?,
                None => writeln!(out, "hint: no answer exists")?,
            },
            Command::Observation(_) => writeln!(out, "rejected: Duplicator plays a predicate `P = ...`")?,
            Command::Predicate(p) => {
                if let Err(e) = game.validate_predicate(&p) {
                    writeln!(out, "rejected: {e}")?;
                    continue;
                }
                match game.duplicator_witness(k, &p)? {
                    Some((s, t)) => {
                        writeln!(out, "accepted: k separates states {s} and {t}, which P does not")?;
                        return Ok(Turn::Play(p));
                    }
                    None => writeln!(out, "rejected: not a Duplicator move; P lies below k*Ω̄ ({})", describe_order(game.cfg.fiber))?,
                }
            }
        }
    }
}

fn engine_spoiler_turn<W: Write>(game: &Game, p: &FiberElement, out: &mut W) -> Result<Turn<SemanticsVector>> {
    match game.engine_spoiler(p)? {
        Some((k, why)) => {
            if game.spoiler_witness(p, &k)?.is_none() {
                return Err(Error::InvalidSituation("engine produced an illegal Spoiler move".into()));
            }
            writeln!(out, "spoiler plays k = {} ({why})", format_vector(&k))?;
            Ok(Turn::Play(k))
        }
        None => {
            writeln!(out, "Spoiler has no legal move")?;
            Ok(Turn::Stuck)
        }
    }
}

fn engine_duplicator_turn<W: Write>(game: &Game, k: &[f64], out: &mut W) -> Result<Turn<FiberElement>> {
    match game.engine_duplicator(k)? {
        Some((p, why)) => {
            if game.duplicator_witness(k, &p)?.is_none() {
                return Err(Error::InvalidSituation("engine produced an illegal Duplicator move".into()));
            }
            writeln!(out, "duplicator plays P = {p} ({why})")?;
            Ok(Turn::Play(p))
        }
        None => {
            writeln!(out, "Duplicator has no legal move: k*Ω̄ is ⊤")?;
            Ok(Turn::Stuck)
        }
    }
}

/// Plays one game from `opts.start`, reading the human's moves from `input`.
pub fn repl<R: BufRead, W: Write>(game: &mut Game, role: Role, opts: &ReplOptions, mut input: R, mut out: W) -> Result<PlayRecord> {
    let start = opts.start.clone().unwrap_or_else(|| top(game.cfg.fiber, game.c.size()));
    game.validate_predicate(&start)?;
    writeln!(out, "states: {}; bisimilarity: {}", game.c.size(), game.nu)?;
    if game.is_restricted() {
        writeln!(out, "{RESTRICTED_CAVEAT}")?;
    }
    let mut record = PlayRecord {
        start: start.clone(),
        moves: Vec::new(),
        outcome: Outcome::CutoffReachedInfinite,
        rounds: 0,
    };
    let mut p = start;
    let finish = |mut record: PlayRecord, outcome: Outcome, out: &mut W| -> Result<PlayRecord> {
        record.outcome = outcome;
        let text = match outcome {
            Outcome::SpoilerStuck => "Spoiler is stuck: Duplicator wins".to_string(),
            Outcome::DuplicatorStuck => "Duplicator is stuck: Spoiler wins".to_string(),
            Outcome::CutoffReachedInfinite => format!("infinite play: Duplicator wins (cutoff of {} rounds reached)", record.rounds),
            Outcome::Abandoned => "play abandoned".to_string(),
        };
        writeln!(out, "outcome: {text}")?;
        Ok(record)
    };
    while record.rounds < opts.cutoff {
        writeln!(out, "round {}: P = {p}", record.rounds + 1)?;
        let k = match if role == Role::Spoiler {
            human_spoiler(game, &p, &mut input, &mut out)?
        } else {
            engine_spoiler_turn(game, &p, &mut out)?
        } {
            Turn::Play(k) => k,
            Turn::Stuck => return finish(record, Outcome::SpoilerStuck, &mut out),
            Turn::Quit => return finish(record, Outcome::Abandoned, &mut out),
        };
        record.moves.push(Move::Spoiler(k.clone()));
        let next = match if role == Role::Duplicator {
            human_duplicator(game, &k, &mut input, &mut out)?
        } else {
            engine_duplicator_turn(game, &k, &mut out)?
        } {
            Turn::Play(q) => q,
            Turn::Stuck => return finish(record, Outcome::DuplicatorStuck, &mut out),
            Turn::Quit => return finish(record, Outcome::Abandoned, &mut out),
        };
        record.moves.push(Move::Duplicator(next.clone()));
        record.rounds += 1;
        p = next;
    }
    finish(record, Outcome::CutoffReachedInfinite, &mut out)
}
