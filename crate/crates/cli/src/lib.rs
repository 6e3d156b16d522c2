//! Command-line front end: loads a system file and runs one analysis.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cobisim_core::expressivity::{
    check_adequacy, check_expressivity, closure_conditions_check, is_approximating_eqrel, is_approximating_pmet_sampled,
    ApproxCounterexample, CheckMode, Route,
};
use cobisim_core::fixpoint::kleene_gfp;
use cobisim_core::game::{parse_command, repl, Command as ReplCommand, GameOptions, ReplOptions, Role as ReplRole};
use cobisim_core::logic::generate_semantics;
use cobisim_core::{
    CheckOptions, FiberElement, FiberKind, Game, GenerationCaps, KleeneOptions, Move, ObservationSet, Outcome, Player,
    TruthObject,
};
use serde::Deserialize;
use serde_json::{json, Value};

pub mod file;
pub mod render;

use file::{load, Invalid, System};
use render::{element, element_json, fiber_name, names, number};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_REFUSED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cobisim", version, about = "Codensity bisimilarity, modal logics and games for finite coalgebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System file (JSON).
    pub file: PathBuf,
    /// Also write the report as JSON to this path.
    #[arg(long, value_name = "PATH")]
    pub json_out: Option<PathBuf>,
    /// Suppress the text report.
    #[arg(long)]
    pub quiet: bool,
    /// Kleene iteration budget.
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Sup-norm residual at which a pseudometric chain counts as stable.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// New formula semantics admitted per depth level.
    #[arg(long, default_value_t = 5000)]
    pub per_level: usize,
}

impl Common {
    fn kleene(&self) -> KleeneOptions {
        KleeneOptions {
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    fn caps(&self) -> GenerationCaps {
        GenerationCaps {
            per_level: self.per_level,
            ..GenerationCaps::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Adequacy,
    Expressivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Role {
    Spoiler,
    Duplicator,
    Watch,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greatest fixed point of the codensity lifting.
    Bisim {
        #[command(flatten)]
        common: Common,
    },
    /// Logical equivalence or distance, with witness formulas.
    Logic {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Adequacy or expressivity of the logic.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Adequacy)]
        mode: Mode,
        /// Allowed gap for pseudometric expressivity.
        #[arg(long)]
        eps: Option<f64>,
        /// Depth for adequacy.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Largest depth tried for expressivity.
        #[arg(long, default_value_t = 8)]
        depth_max: usize,
    },
    /// Plays the bisimilarity game.
    Game {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Role::Watch)]
        role: Role,
        /// File of moves, one per line; standard input when absent.
        #[arg(long, value_name = "PATH")]
        script: Option<PathBuf>,
        /// Rounds after which the play counts as infinite.
        #[arg(long, default_value_t = cobisim_core::game::DEFAULT_CUTOFF)]
        cutoff: usize,
        /// Starting predicate, e.g. `blocks {0,1}{2}`; defaults to the top element.
        #[arg(long)]
        start: Option<String>,
    },
    /// Whether an observation set is an approximating family.
    Approx {
        #[command(flatten)]
        common: Common,
        /// `generated`, or `@PATH` for a JSON list of `{"label", "values"}`.
        #[arg(long, default_value = "generated")]
        set: String,
        /// Depth of the generated set.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Denominator of the sampling grid for pseudometrics.
        #[arg(long, default_value_t = 8)]
        grid: u32,
        /// Sampled observations for pseudometrics.
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
}

/// Exit code for an error: 2 for invalid input, 4 for size refusals, 1
/// otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<Invalid>().is_some() {
            return EXIT_INVALID;
        }
        if let Some(e) = cause.downcast_ref::<cobisim_core::Error>() {
            return match e {
                e if e.is_refusal() => EXIT_REFUSED,
                cobisim_core::Error::Io(_) | cobisim_core::Error::LpIterationLimit(_) => EXIT_FAILED,
                _ => EXIT_INVALID,
            };
        }
    }
    EXIT_FAILED
}

/// A finished command: its text lines, its JSON report and its exit code.
struct Report {
    lines: Vec<String>,
    json: Value,
    code: i32,
}

/// Runs a parsed command. `input` feeds the game when no script is given.
pub fn run(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> anyhow::Result<i32> {
    let (common, report) = match &cli.command {
        Command::Bisim { common } => (common, bisim(&load(&common.file)?, common)?),
        Command::Logic { common, depth } => (common, logic(&load(&common.file)?, common, *depth)?),
        Command::Check {
            common,
            mode,
            eps,
            depth,
            depth_max,
        } => (common, check(&load(&common.file)?, common, *mode, *eps, *depth, *depth_max)?),
        Command::Game {
            common,
            role,
            script,
            cutoff,
            start,
        } => {
            let sys = load(&common.file)?;
            let mut sink = std::io::sink();
            let out: &mut dyn Write = if common.quiet { &mut sink } else { out };
            let play = |input: &mut dyn BufRead, out: &mut dyn Write| {
                game(&sys, common, *role, *cutoff, start.as_deref(), input, out)
            };
            let report = match script {
                Some(path) => {
                    let f = std::fs::File::open(path).map_err(|e| Invalid {
                        path: path.display().to_string(),
                        message: e.to_string(),
                    })?;
                    play(&mut std::io::BufReader::new(f), out)?
                }
                None => play(input, out)?,
            };
            (common, report)
        }
        Command::Approx {
            common,
            set,
            depth,
            grid,
            samples,
        } => (common, approx(&load(&common.file)?, common, set, *depth, *grid, *samples)?),
    };
    if !common.quiet {
        for line in &report.lines {
            writeln!(out, "{line}")?;
        }
    }
    if let Some(path) = &common.json_out {
        write_json(path, &report.json)?;
    }
    Ok(report.code)
}

fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn bisim(sys: &System, common: &Common) -> anyhow::Result<Report> {
    let (nu, chain) = kleene_gfp(&sys.situation, &sys.coalgebra, common.kleene())?;
    let status = if chain.converged { "converged" } else { "not converged" };
    let mut lines = vec![
        format!("fiber: {} over {} states", fiber_name(sys.situation.fiber), sys.coalgebra.size()),
        format!(
            "iterations: {} ({status}, residual {})",
            chain.iterations,
            number(chain.residual)
        ),
        "bisimilarity:".to_string(),
    ];
    lines.extend(element(sys, &nu).into_iter().map(|l| format!("  {l}")));
    let json = json!({
        "command": "bisim",
        "fiber": fiber_name(sys.situation.fiber),
        "states": sys.names(),
        "converged": chain.converged,
        "iterations": chain.iterations,
        "chain_length": chain.iterates.len(),
        "residual": chain.residual,
        "result": element_json(sys, &nu),
    });
    Ok(Report {
        lines,
        json,
        code: if chain.converged { EXIT_OK } else { EXIT_NOT_CONVERGED },
    })
}

fn logic(sys: &System, common: &Common, depth: usize) -> anyhow::Result<Report> {
    let cfg = &sys.situation;
    let c = &sys.coalgebra;
    let g = generate_semantics(cfg, c, depth, common.caps())?;
    let p = g.predicate(depth);
    let n = c.size();
    let mut lines = vec![
        format!(
            "depth {depth}: {} formula semantics{}",
            g.up_to(depth).count(),
            if p.truncated { " (truncated by the caps)" } else { "" }
        ),
        match cfg.fiber {
            FiberKind::PMet1 => "logical distance:".to_string(),
            FiberKind::EqRel => "logical equivalence:".to_string(),
            FiberKind::BoolPred => "logical predicate:".to_string(),
        },
    ];
    lines.extend(element(sys, &p.element).into_iter().map(|l| format!("  {l}")));
    let mut witnesses = Vec::new();
    match &p.element {
        FiberElement::BoolPred(holds) => {
            for s in (0..n).filter(|&s| !holds[s]) {
                let best = g
                    .up_to(depth)
                    .filter(|(_, e)| e.vector[s] != 1.0)
                    .min_by_key(|(_, e)| (e.depth, e.size))
                    .map(|(id, _)| id);
                if let Some(id) = best {
                    witnesses.push((vec![s], g.formula(id).to_string(), 1.0));
                }
            }
        }
        FiberElement::EqRel(r) => {
            for s in 0..n {
                for t in s + 1..n {
                    if !r.related(s, t) {
                        if let Some((id, sep)) = g.witness(s, t, depth) {
                            witnesses.push((vec![s, t], g.formula(id).to_string(), sep));
                        }
                    }
                }
            }
        }
        FiberElement::PMet1(d) => {
            for s in 0..n {
                for t in s + 1..n {
                    if d.get(s, t) > cobisim_core::fibers::METRIC_TOL {
                        if let Some((id, sep)) = g.witness(s, t, depth) {
                            witnesses.push((vec![s, t], g.formula(id).to_string(), sep));
                        }
                    }
                }
            }
        }
    }
    if !witnesses.is_empty() {
        lines.push("witnesses:".to_string());
        for (states, phi, sep) in &witnesses {
            let who: Vec<String> = states.iter().map(|&s| sys.name(s)).collect();
            lines.push(format!("  {}: {phi} (separation {})", who.join(" / "), number(*sep)));
        }
    }
    let json = json!({
        "command": "logic",
        "fiber": fiber_name(cfg.fiber),
        "states": sys.names(),
        "depth": depth,
        "formulas": g.up_to(depth).count(),
        "truncated": p.truncated,
        "result": element_json(sys, &p.element),
        "witnesses": witnesses.iter().map(|(states, phi, sep)| json!({
            "states": states.iter().map(|&s| sys.name(s)).collect::<Vec<_>>(),
            "formula": phi,
            "separation": sep,
        })).collect::<Vec<_>>(),
    });
    Ok(Report {
        lines,
        json,
        code: EXIT_OK,
    })
}

fn check_options(sys: &System, common: &Common) -> CheckOptions {
    CheckOptions {
        caps: common.caps(),
        kleene: common.kleene(),
        seed: sys.seed,
        ..CheckOptions::default()
    }
}

fn check(
    sys: &System,
    common: &Common,
    mode: Mode,
    eps: Option<f64>,
    depth: usize,
    depth_max: usize,
) -> anyhow::Result<Report> {
    let cfg = &sys.situation;
    let c = &sys.coalgebra;
    let opts = check_options(sys, common);
    let rep = match mode {
        Mode::Adequacy => check_adequacy(cfg, c, depth, opts)?,
        Mode::Expressivity => {
            let eps = match (cfg.fiber, eps) {
                (FiberKind::PMet1, None) => bail!(Invalid {
                    path: "--eps".into(),
                    message: "pseudometric expressivity needs a positive tolerance".into(),
                }),
                (_, e) => e.unwrap_or(0.0),
            };
            check_expressivity(cfg, c, eps, depth_max, opts)?
        }
    };
    let mode_name = match rep.mode {
        CheckMode::Adequacy => "adequacy",
        CheckMode::Expressivity => "expressivity",
    };
    let pair = |p: Option<(usize, usize)>| p.map(|(s, t)| names(sys, &[s, t]));
    let mut lines = vec![
        format!("mode: {mode_name}"),
        format!("fiber: {}", fiber_name(rep.fiber)),
        format!(
            "verdict: {} ({})",
            if rep.verdict { "pass" } else { "fail" },
            if rep.exact { "exact" } else { "numeric" }
        ),
        format!("depth used: {}", rep.depth_used),
        match pair(rep.gap_pair) {
            Some(p) => format!("gap: {} at {p}", number(rep.gap)),
            None => format!("gap: {}", number(rep.gap)),
        },
    ];
    if let Some(e) = rep.epsilon {
        lines.push(format!("epsilon: {}", number(e)));
    }
    if let Some((phi, sep)) = &rep.witness {
        lines.push(format!("witness: {phi} (separation {})", number(*sep)));
    }
    if !rep.gaps_by_depth.is_empty() {
        lines.push(format!(
            "gaps by depth: {}",
            rep.gaps_by_depth.iter().map(|g| number(*g)).collect::<Vec<_>>().join(", ")
        ));
    }
    lines.push(format!("generation truncated: {}", yes_no(rep.truncated)));
    lines.push(format!("fixed point converged: {}", yes_no(rep.gfp_converged)));
    for r in &rep.routes {
        let name = match r.route {
            Route::KnasterTarski => "Knaster-Tarski",
            Route::Kleene => "Kleene",
        };
        lines.push(format!(
            "route {name}: {} ({})",
            if r.succeeded { "succeeded" } else { "failed" },
            r.detail
        ));
    }
    if !rep.note.is_empty() {
        lines.push(format!("note: {}", rep.note));
    }
    let json = json!({
        "command": "check",
        "mode": mode_name,
        "fiber": fiber_name(rep.fiber),
        "verdict": rep.verdict,
        "exact": rep.exact,
        "epsilon": rep.epsilon,
        "depth_used": rep.depth_used,
        "gap": rep.gap,
        "gap_pair": rep.gap_pair.map(|(s, t)| [sys.name(s), sys.name(t)]),
        "witness": rep.witness.as_ref().map(|(phi, sep)| json!({"formula": phi, "separation": sep})),
        "gaps_by_depth": rep.gaps_by_depth,
        "truncated": rep.truncated,
        "gfp_converged": rep.gfp_converged,
        "routes": rep.routes.iter().map(|r| json!({
            "route": match r.route { Route::KnasterTarski => "knaster_tarski", Route::Kleene => "kleene" },
            "succeeded": r.succeeded,
            "detail": r.detail,
        })).collect::<Vec<_>>(),
        "note": rep.note,
    });
    let code = if !rep.gfp_converged {
        EXIT_NOT_CONVERGED
    } else if rep.verdict {
        EXIT_OK
    } else {
        EXIT_FAILED
    };
    Ok(Report { lines, json, code })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn vector_json(k: &[f64]) -> Value {
    json!(k)
}

fn game(
    sys: &System,
    common: &Common,
    role: Role,
    cutoff: usize,
    start: Option<&str>,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> anyhow::Result<Report> {
    let n = sys.coalgebra.size();
    let opts = GameOptions {
        kleene: common.kleene(),
        caps: GenerationCaps {
            per_level: common.per_level.min(GameOptions::default().caps.per_level),
            ..GameOptions::default().caps
        },
        ..GameOptions::default()
    };
    let mut g = Game::new(&sys.situation, &sys.coalgebra, opts)?;
    let start = match start {
        None => None,
        Some(text) => match parse_command(&format!("P = {text}"), n) {
            Ok(ReplCommand::Predicate(p)) => Some(p),
            Ok(_) => bail!(Invalid {
                path: "--start".into(),
                message: "expected a predicate".into(),
            }),
            Err(message) => bail!(Invalid {
                path: "--start".into(),
                message,
            }),
        },
    };
    let role = match role {
        Role::Spoiler => ReplRole::Spoiler,
        Role::Duplicator => ReplRole::Duplicator,
        Role::Watch => ReplRole::Watch,
    };
    let record = repl(&mut g, role, &ReplOptions { cutoff, start }, input, out)?;
    let outcome = match record.outcome {
        Outcome::SpoilerStuck => "spoiler_stuck",
        Outcome::DuplicatorStuck => "duplicator_stuck",
        Outcome::CutoffReachedInfinite => "cutoff_reached_infinite",
        Outcome::Abandoned => "abandoned",
    };
    let winner = record.outcome.winner().map(|w| match w {
        Player::Spoiler => "spoiler",
        Player::Duplicator => "duplicator",
    });
    let moves: Vec<Value> = record
        .moves
        .iter()
        .map(|m| match m {
            Move::Spoiler(k) => json!({"spoiler": vector_json(k)}),
            Move::Duplicator(p) => json!({"duplicator": element_json(sys, p)}),
        })
        .collect();
    let json = json!({
        "command": "game",
        "states": sys.names(),
        "start": element_json(sys, &record.start),
        "moves": moves,
        "rounds": record.rounds,
        "outcome": outcome,
        "winner": winner,
        "restricted": g.is_restricted(),
    });
    Ok(Report {
        lines: Vec::new(),
        json,
        code: EXIT_OK,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Member {
    label: String,
    values: Vec<f64>,
}

fn read_set(path: &Path, n: usize) -> anyhow::Result<ObservationSet> {
    let bad = |message: String| Invalid {
        path: path.display().to_string(),
        message,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let members: Vec<Member> = serde_json::from_str(&text)
        .map_err(|e| bad(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let mut set = ObservationSet::new();
    for (i, m) in members.into_iter().enumerate() {
        if m.values.len() != n {
            bail!(bad(format!("member {i} has {} values for {n} states", m.values.len())));
        }
        set.push(m.label, m.values);
    }
    Ok(set)
}

fn counterexample_lines(sys: &System, ce: &ApproxCounterexample) -> Vec<String> {
    vec![
        format!("counterexample: h = [{}]", ce.h.iter().map(|v| number(*v)).collect::<Vec<_>>().join(", ")),
        format!(
            "  under {} at {}: separation {} exceeds {}",
            ce.modality,
            names(sys, &[ce.s, ce.t]),
            number(ce.separation),
            number(ce.allowed)
        ),
    ]
}

fn counterexample_json(sys: &System, ce: &ApproxCounterexample) -> Value {
    json!({
        "h": ce.h,
        "modality": ce.modality,
        "states": [sys.name(ce.s), sys.name(ce.t)],
        "separation": ce.separation,
        "allowed": ce.allowed,
    })
}

fn approx(sys: &System, common: &Common, set: &str, depth: usize, grid: u32, samples: usize) -> anyhow::Result<Report> {
    let cfg = &sys.situation;
    let c = &sys.coalgebra;
    let n = c.size();
    let s = match set {
        "generated" => ObservationSet::from_generated(&generate_semantics(cfg, c, depth, common.caps())?, depth),
        other => match other.strip_prefix('@') {
            Some(path) => read_set(Path::new(path), n)?,
            None => bail!(Invalid {
                path: "--set".into(),
                message: format!("expected `generated` or `@PATH`, found `{other}`"),
            }),
        },
    };
    if grid == 0 {
        bail!(Invalid {
            path: "--grid".into(),
            message: "the grid denominator must be positive".into(),
        });
    }
    let closure = closure_conditions_check(&s, cfg);
    let mut lines = vec![format!("observations: {}", s.len())];
    let mut json = json!({
        "command": "approx",
        "fiber": fiber_name(cfg.fiber),
        "states": sys.names(),
        "observations": s.len(),
        "closed_under_connectives": closure.closed_under_connectives,
        "totally_bounded": closure.totally_bounded,
    });
    let pass = match (cfg.fiber, cfg.omega) {
        (FiberKind::EqRel, TruthObject::Two) => {
            let r = is_approximating_eqrel(&s, cfg, c)?;
            lines.push(format!("kernel: {}", element(sys, &FiberElement::EqRel(r.kernel.clone()))[0]));
            lines.push(format!("modal kernel: {}", element(sys, &FiberElement::EqRel(r.left.clone()))[0]));
            lines.push(format!("approximating: {}", yes_no(r.holds)));
            if let Some(ce) = &r.counterexample {
                lines.extend(counterexample_lines(sys, ce));
            }
            json["kind"] = json!("exact");
            json["approximating"] = json!(r.holds);
            json["kernel"] = element_json(sys, &FiberElement::EqRel(r.kernel));
            json["modal_kernel"] = element_json(sys, &FiberElement::EqRel(r.left));
            json["counterexample"] = r.counterexample.as_ref().map(|ce| counterexample_json(sys, ce)).into();
            r.holds
        }
        (FiberKind::PMet1, _) => {
            let r = is_approximating_pmet_sampled(&s, cfg, c, 1.0 / f64::from(grid), samples, sys.seed)?;
            lines.push(format!("approximating: {} ({}, {} samples)", yes_no(r.pass), r.note, r.samples));
            if let Some(ce) = &r.counterexample {
                lines.extend(counterexample_lines(sys, ce));
            }
            json["kind"] = json!(r.note);
            json["approximating"] = json!(r.pass);
            json["samples"] = json!(r.samples);
            json["counterexample"] = r.counterexample.as_ref().map(|ce| counterexample_json(sys, ce)).into();
            r.pass
        }
        _ => bail!(cobisim_core::Error::Unsupported(
            "approximating families are checked for two-valued relations and pseudometrics".into()
        )),
    };
    lines.push(format!(
        "closed under connectives: {}{}",
        yes_no(closure.closed_under_connectives),
        closure.missing.map(|m| format!(" (missing {m})")).unwrap_or_default()
    ));
    Ok(Report {
        lines,
        json,
        code: if pass { EXIT_OK } else { EXIT_FAILED },
    })
}
