//! Approximating families of observations, closure conditions, and the
//! adequacy and expressivity verdicts.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bank::ModalBank;
use crate::behavior::{Coalgebra, TruthObject};
use crate::codensity::MAX_BLOCKS;
use crate::error::{Error, Result};
use crate::fibers::{leq, FiberElement, FiberKind, Partition, PseudoMetric};
use crate::fixpoint::{kleene_gfp, stepwise_sequence, KleeneOptions};
use crate::logic::{generate_semantics, kernel_of_vector, Connective, Generated, GenerationCaps, SemanticsVector, SituationConfig};

/// A finite set of observations `X → Ω`, each with a provenance label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationSet {
    pub members: Vec<(String, SemanticsVector)>,
}

impl ObservationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, v: SemanticsVector) {
        self.members.push((label.into(), v));
    }

    /// The generated vectors of level at most `n`, labelled by their
    /// witnessing formulas.
    pub fn from_generated(g: &Generated, n: usize) -> Self {
        ObservationSet {
            members: g.up_to(n).map(|(id, e)| (g.formula(id).to_string(), e.vector.clone())).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn check(&self, n: usize) -> Result<()> {
        match self.members.iter().find(|(_, v)| v.len() != n) {
            Some((label, v)) => Err(Error::InvalidElement(format!(
                "observation `{label}` has {} entries for {n} states",
                v.len()
            ))),
            None => Ok(()),
        }
    }

    /// The joint kernel of all members.
    pub fn kernel(&self, n: usize, tol: f64) -> Partition {
        self.members
            .iter()
            .fold(Partition::total(n), |acc, (_, v)| acc.intersect(&kernel_of_vector(v, tol)))
    }

    /// `d_S(x, y) = max_k |k(x) − k(y)|`
    pub fn metric(&self, n: usize) -> PseudoMetric {
        PseudoMetric::from_fn_unchecked(n, |s, t| {
            self.members.iter().map(|(_, v)| (v[s] - v[t]).abs()).fold(0.0, f64::max)
        })
    }
}

/// A legitimate observation `h` and a modality under which a pair related by
/// the left side of the approximation inequality is separated.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxCounterexample {
    pub h: SemanticsVector,
    pub modality: String,
    pub s: usize,
    pub t: usize,
    /// `|τ(Bh(x(s))) − τ(Bh(x(t)))|`
    pub separation: f64,
    /// The left-hand side at `(s, t)`: 0 for relations, a distance for metrics.
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxEqRel {
    pub holds: bool,
    /// Kernel of `S`; legitimate observations are its block unions.
    pub kernel: Partition,
    /// Meet of the pullbacks along all modal images of members of `S`.
    pub left: Partition,
    pub counterexample: Option<ApproxCounterexample>,
}

fn modal_image_kernel(bank: &ModalBank, s: &ObservationSet, n: usize, tol: f64) -> Result<Partition> {
    let mut left = Partition::total(n);
    for (_, k) in &s.members {
        for image in bank.eval_all(k)? {
            left = left.intersect(&kernel_of_vector(&image, tol));
        }
    }
    Ok(left)
}

/// Checks the approximation inequality exactly for two-valued observations.
pub fn is_approximating_eqrel(s: &ObservationSet, cfg: &SituationConfig, c: &Coalgebra) -> Result<ApproxEqRel> {
    if cfg.fiber != FiberKind::EqRel || cfg.omega != TruthObject::Two {
        return Err(Error::InvalidSituation("the exact check needs two-valued relation situations".into()));
    }
    let n = c.size();
    s.check(n)?;
    let bank = cfg.bank(c)?;
    let kernel = s.kernel(n, 0.0);
    let b = kernel.num_blocks();
    if b > MAX_BLOCKS {
        return Err(Error::SizeBound {
            what: "blocks of the observation kernel",
            actual: b,
            bound: MAX_BLOCKS,
        });
    }
    let left = modal_image_kernel(&bank, s, n, 0.0)?;
    for mask in 0u64..(1u64 << b) {
        let h: Vec<f64> = (0..n).map(|x| (mask >> kernel.block_of(x) & 1) as f64).collect();
        for (lambda, image) in bank.eval_all(&h)?.into_iter().enumerate() {
            for x in 0..n {
                for y in x + 1..n {
                    if left.related(x, y) && image[x] != image[y] {
                        return Ok(ApproxEqRel {
                            holds: false,
                            kernel,
                            left,
                            counterexample: Some(ApproxCounterexample {
                                h,
                                modality: bank.name(lambda).to_string(),
                                s: x,
                                t: y,
                                separation: (image[x] - image[y]).abs(),
                                allowed: 0.0,
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(ApproxEqRel {
        holds: true,
        kernel,
        left,
        counterexample: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxSampled {
    pub pass: bool,
    /// Legitimate observations tried.
    pub samples: usize,
    pub note: &'static str,
    pub counterexample: Option<ApproxCounterexample>,
}

pub const SAMPLED_NOTE: &str = "sampled necessary condition";

/// Samples legitimate observations (δ-grid maps nonexpansive w.r.t. `d_S`,
/// plus the members of `S`) and checks the approximation inequality with
/// `2δ` slack.
pub fn is_approximating_pmet_sampled(
    s: &ObservationSet,
    cfg: &SituationConfig,
    c: &Coalgebra,
    delta: f64,
    budget: usize,
    seed: u64,
) -> Result<ApproxSampled> {
    if cfg.fiber != FiberKind::PMet1 {
        return Err(Error::InvalidSituation("the sampled check needs the pseudometric fiber".into()));
    }
    let n = c.size();
    if n > crate::codensity::ORACLE_MAX_STATES {
        return Err(Error::SizeBound {
            what: "sampled approximation carrier",
            actual: n,
            bound: crate::codensity::ORACLE_MAX_STATES,
        });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Unsupported("grid step must lie in (0,1]".into()));
    }
    s.check(n)?;
    let bank = cfg.bank(c)?;
    let ds = s.metric(n);
    let mut allowed = vec![0.0f64; n * n];
    for (_, k) in &s.members {
        for image in bank.eval_all(k)? {
            for x in 0..n {
                for y in 0..n {
                    allowed[x * n + y] = allowed[x * n + y].max((image[x] - image[y]).abs());
                }
            }
        }
    }
    let steps = (1.0 / delta).round() as i64;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vec<f64>> = s.members.iter().map(|(_, v)| v.clone()).collect();
    candidates.extend(grid.iter().map(|g| vec![*g; n]));
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..budget {
        order.shuffle(&mut rng);
        let mut h = vec![f64::NAN; n];
        let mut ok = true;
        for (i, &x) in order.iter().enumerate() {
            let feasible: Vec<f64> = grid
                .iter()
                .copied()
                .filter(|g| order[..i].iter().all(|&y| (g - h[y]).abs() <= ds.get(x, y) + 1e-12))
                .collect();
            match feasible.choose(&mut rng) {
                Some(v) => h[x] = *v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            candidates.push(h);
        }
    }
    let samples = candidates.len();
    for h in candidates {
        for (lambda, image) in bank.eval_all(&h)?.into_iter().enumerate() {
            for x in 0..n {
                for y in x + 1..n {
                    let sep = (image[x] - image[y]).abs();
                    if sep > allowed[x * n + y] + 2.0 * delta + 1e-12 {
                        return Ok(ApproxSampled {
                            pass: false,
                            samples,
                            note: SAMPLED_NOTE,
                            counterexample: Some(ApproxCounterexample {
                                h,
                                modality: bank.name(lambda).to_string(),
                                s: x,
                                t: y,
                                separation: sep,
                                allowed: allowed[x * n + y],
                            }),
                        });
                    }
                }
            }
        }
    }
    Ok(ApproxSampled {
        pass: true,
        samples,
        note: SAMPLED_NOTE,
        counterexample: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureReport {
    pub closed_under_connectives: bool,
    /// The first missing result, as `connective(labels…)`.
    pub missing: Option<String>,
    /// Every finite pseudometric space is totally bounded.
    pub totally_bounded: bool,
}

/// Checks that applying each configured connective to members of `S` stays
/// in `S` up to `1e-9`. Results beyond the situation's value bound are not
/// required.
pub fn closure_conditions_check(s: &ObservationSet, cfg: &SituationConfig) -> ClosureReport {
    let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x * 1e9).round() as i64).collect() };
    let present: HashSet<Vec<i64>> = s.members.iter().map(|(_, v)| key(v)).collect();
    let n = s.members.first().map_or(0, |(_, v)| v.len());
    let in_bound = |v: &[f64]| cfg.value_bound.map_or(true, |b| v.iter().all(|x| x.abs() <= b + 1e-12));
    let missing = |v: &[f64]| in_bound(v) && !present.contains(&key(v));
    let mut report = ClosureReport {
        closed_under_connectives: true,
        missing: None,
        totally_bounded: true,
    };
    let mut fail = |label: String| {
        report.closed_under_connectives = false;
        report.missing = Some(label);
    };
    'outer: for conn in &cfg.connectives {
        match conn.arity() {
            0 => {
                if n > 0 {
                    let v = vec![conn.apply(&[]); n];
                    if missing(&v) {
                        fail(conn.syntax(&[]));
                        break 'outer;
                    }
                }
            }
            1 => {
                for (label, k) in &s.members {
                    let v: Vec<f64> = k.iter().map(|x| conn.apply(&[*x])).collect();
                    if missing(&v) {
                        fail(conn.syntax(&[label]));
                        break 'outer;
                    }
                }
            }
            _ => {
                for (la, a) in &s.members {
                    for (lb, b) in &s.members {
                        let v: Vec<f64> = a.iter().zip(b).map(|(x, y)| conn.apply(&[*x, *y])).collect();
                        if missing(&v) {
                            fail(conn.syntax(&[la, lb]));
                            break 'outer;
                        }
                    }
                }
            }
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Adequacy,
    Expressivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// One approximating family at full depth, whose kernel is then an invariant.
    KnasterTarski,
    /// Per-depth comparison against the Kleene chain.
    Kleene,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteOutcome {
    pub route: Route,
    pub succeeded: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpressivityReport {
    pub mode: CheckMode,
    pub fiber: FiberKind,
    pub verdict: bool,
    /// Relations are compared exactly; pseudometrics numerically.
    pub exact: bool,
    pub epsilon: Option<f64>,
    pub depth_used: usize,
    /// Adequacy: largest excess of the logic over bisimilarity. Expressivity:
    /// largest excess of bisimilarity over the logic. For relations, 1 if
    /// some pair violates the containment and 0 otherwise.
    pub gap: f64,
    pub gap_pair: Option<(usize, usize)>,
    /// Best separating formula at the gap pair, with its separation.
    pub witness: Option<(String, f64)>,
    pub gaps_by_depth: Vec<f64>,
    pub truncated: bool,
    pub gfp_converged: bool,
    pub routes: Vec<RouteOutcome>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub caps: GenerationCaps,
    pub kleene: KleeneOptions,
    /// Allowed excess of logical distance over bisimilarity distance.
    pub adequacy_slack: f64,
    pub approx_delta: f64,
    pub approx_samples: usize,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            caps: GenerationCaps::default(),
            kleene: KleeneOptions::default(),
            adequacy_slack: 1e-6,
            approx_delta: 1.0 / 8.0,
            approx_samples: 2000,
            seed: 0,
        }
    }
}

/// Largest `a(s,t) − b(s,t)` over pairs, read off two fiber elements of the
/// same kind; relations contribute 1 where `a` separates and `b` does not.
fn excess(a: &FiberElement, b: &FiberElement) -> (f64, Option<(usize, usize)>) {
    let n = a.size();
    let mut best = (0.0, None);
    for s in 0..n {
        for t in s + 1..n {
            let v = match (a, b) {
                (FiberElement::PMet1(x), FiberElement::PMet1(y)) => x.get(s, t) - y.get(s, t),
                (FiberElement::EqRel(x), FiberElement::EqRel(y)) => {
                    if !x.related(s, t) && y.related(s, t) {
                        1.0
                    } else {
                        0.0
                    }
                }
                (FiberElement::BoolPred(x), FiberElement::BoolPred(y)) => {
                    if (!x[s] && y[s]) || (!x[t] && y[t]) {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => 0.0,
            };
            if v > best.0 {
                best = (v, Some((s, t)));
            }
        }
    }
    if n == 1 {
        if let (FiberElement::BoolPred(x), FiberElement::BoolPred(y)) = (a, b) {
            if !x[0] && y[0] {
                best = (1.0, Some((0, 0)));
            }
        }
    }
    best
}

fn witness_at(g: &Generated, pair: Option<(usize, usize)>, n: usize) -> Option<(String, f64)> {
    let (s, t) = pair?;
    if s == t {
        return None;
    }
    g.witness(s, t, n).map(|(id, sep)| (g.formula(id).to_string(), sep))
}

/// `ν̂ ⊑ logical_predicate(n)`: the logic separates nothing bisimilarity
/// identifies. Pseudometric comparisons allow `opts.adequacy_slack`.
pub fn check_adequacy(cfg: &SituationConfig, c: &Coalgebra, n: usize, opts: CheckOptions) -> Result<ExpressivityReport> {
    let (nu, chain) = kleene_gfp(cfg, c, opts.kleene)?;
    let g = generate_semantics(cfg, c, n, opts.caps)?;
    let lp = g.predicate(n);
    let (gap, gap_pair) = excess(&lp.element, &nu);
    let verdict = match cfg.fiber {
        FiberKind::PMet1 => gap <= opts.adequacy_slack,
        _ => leq(&nu, &lp.element)?,
    };
    Ok(ExpressivityReport {
        mode: CheckMode::Adequacy,
        fiber: cfg.fiber,
        verdict,
        exact: cfg.fiber != FiberKind::PMet1,
        epsilon: None,
        depth_used: n,
        gap,
        gap_pair,
        witness: witness_at(&g, gap_pair, n),
        gaps_by_depth: vec![gap],
        truncated: lp.truncated,
        gfp_converged: chain.converged,
        routes: Vec::new(),
        note: if lp.truncated {
            "formula generation hit a cap; the check covers the generated formulas only".into()
        } else {
            "the logic at finite depth may discriminate less than the full logic".into()
        },
    })
}

/// `ν̂ ⊒ logical_predicate(n)` for some `n ≤ n_max`: exactly for relations,
/// within `eps` for pseudometrics.
pub fn check_expressivity(
    cfg: &SituationConfig,
    c: &Coalgebra,
    eps: f64,
    n_max: usize,
    opts: CheckOptions,
) -> Result<ExpressivityReport> {
    if cfg.fiber == FiberKind::PMet1 && !(eps > 0.0) {
        return Err(Error::InvalidSituation("expressivity within ε needs ε > 0".into()));
    }
    let (nu, chain) = kleene_gfp(cfg, c, opts.kleene)?;
    let g = generate_semantics(cfg, c, n_max, opts.caps)?;
    let mut gaps = Vec::with_capacity(n_max + 1);
    let mut found = None;
    for n in 0..=n_max {
        let lp = g.predicate(n);
        let (gap, pair) = excess(&nu, &lp.element);
        gaps.push(gap);
        let ok = match cfg.fiber {
            FiberKind::PMet1 => gap <= eps,
            _ => lp.element == nu,
        };
        if ok {
            found = Some((n, gap, pair));
            break;
        }
    }
    let (depth_used, gap, gap_pair) = match found {
        Some(f) => f,
        None => {
            let lp = g.predicate(n_max);
            let (gap, pair) = excess(&nu, &lp.element);
            (n_max, gap, pair)
        }
    };
    let verdict = found.is_some();
    let mut routes = Vec::new();
    routes.push(knaster_tarski_route(cfg, c, &g, n_max, opts));
    routes.push(kleene_route(cfg, c, &g, depth_used, verdict, chain.converged)?);
    Ok(ExpressivityReport {
        mode: CheckMode::Expressivity,
        fiber: cfg.fiber,
        verdict,
        exact: cfg.fiber != FiberKind::PMet1,
        epsilon: (cfg.fiber == FiberKind::PMet1).then_some(eps),
        depth_used,
        gap,
        gap_pair,
        witness: witness_at(&g, gap_pair, depth_used),
        gaps_by_depth: gaps,
        truncated: g.truncated_up_to(depth_used),
        gfp_converged: chain.converged,
        routes,
        note: match cfg.fiber {
            FiberKind::PMet1 => format!("certified only up to ε = {eps} and depth {n_max}"),
            _ => "partitions compared exactly".into(),
        },
    })
}

fn knaster_tarski_route(cfg: &SituationConfig, c: &Coalgebra, g: &Generated, n: usize, opts: CheckOptions) -> RouteOutcome {
    let s = ObservationSet::from_generated(g, n);
    let outcome = |succeeded: bool, detail: String| RouteOutcome {
        route: Route::KnasterTarski,
        succeeded,
        detail,
    };
    match (cfg.fiber, cfg.omega) {
        (FiberKind::EqRel, TruthObject::Two) => match is_approximating_eqrel(&s, cfg, c) {
            Ok(r) if r.holds && r.kernel.refines(&r.left) => {
                outcome(true, format!("{} generated observations form an approximating family with an invariant kernel", s.len()))
            }
            Ok(r) if r.holds => outcome(false, "approximating, but modal images still refine the kernel".into()),
            Ok(r) => {
                let ce = r.counterexample.expect("violations carry a counterexample");
                outcome(
                    false,
                    format!("not approximating: modality {} separates {} and {} under h = {:?}", ce.modality, ce.s, ce.t, ce.h),
                )
            }
            Err(e) => outcome(false, format!("check refused: {e}")),
        },
        (FiberKind::PMet1, _) => {
            match is_approximating_pmet_sampled(&s, cfg, c, opts.approx_delta, opts.approx_samples, opts.seed) {
                Ok(r) if r.pass => outcome(true, format!("{} on {} observations", r.note, r.samples)),
                Ok(r) => {
                    let ce = r.counterexample.expect("failures carry a counterexample");
                    outcome(
                        false,
                        format!("{}: modality {} separates {} and {} by {:.6} > {:.6}", r.note, ce.modality, ce.s, ce.t, ce.separation, ce.allowed),
                    )
                }
                Err(e) => outcome(false, format!("check refused: {e}")),
            }
        }
        _ => outcome(false, "no approximating-family checker for this situation".into()),
    }
}

fn kleene_route(
    cfg: &SituationConfig,
    c: &Coalgebra,
    g: &Generated,
    depth: usize,
    verdict: bool,
    converged: bool,
) -> Result<RouteOutcome> {
    let iterates = stepwise_sequence(cfg, c, depth)?;
    let mut stepwise = true;
    for (i, it) in iterates.iter().enumerate() {
        let lp = g.predicate(i);
        let ok = match cfg.fiber {
            FiberKind::PMet1 => excess(&lp.element, it).0 <= 1e-6,
            _ => leq(it, &lp.element)?,
        };
        stepwise &= ok;
    }
    let succeeded = stepwise && converged && verdict;
    Ok(RouteOutcome {
        route: Route::Kleene,
        succeeded,
        detail: format!(
            "iterates below logical predicates at every depth ≤ {depth}: {stepwise}; chain converged: {converged}"
        ),
    })
}

/// Is `c` a connective whose closure the checker can test finitely?
pub fn closure_is_finite(cfg: &SituationConfig) -> bool {
    !cfg.connectives.iter().any(|c| matches!(c, Connective::Add(_) | Connective::Scale(_)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{BehaviorValue, FunctorSpec, Leaf, ModalityDef};
    use crate::fibers::Carrier;
    use crate::instances::{cfkp_situation, Lmp};
    use crate::rational::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn lmp(rows: &[&[(usize, Rational)]]) -> Lmp {
        let next = rows
            .iter()
            .map(|row| {
                BehaviorValue::Labeled(vec![BehaviorValue::dist(
                    row.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect(),
                )])
            })
            .collect();
        Lmp::new(Coalgebra::new(Carrier::new(rows.len()).unwrap(), FunctorSpec::lmp(&["a"]), next).unwrap()).unwrap()
    }

    fn markov(rows: &[&[(usize, Rational)]]) -> Coalgebra {
        let next = rows
            .iter()
            .map(|row| BehaviorValue::dist(row.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect()))
            .collect();
        Coalgebra::new(Carrier::new(rows.len()).unwrap(), FunctorSpec::dist(FunctorSpec::Id), next).unwrap()
    }

    fn kmm() -> SituationConfig {
        SituationConfig::kmm(
            FunctorSpec::dist(FunctorSpec::Id),
            vec![ModalityDef::new("E", vec![], Leaf::ExpectedValue)],
            8,
        )
        .unwrap()
    }

    #[test]
    fn all_two_valued_vectors_approximate() {
        let l = lmp(&[&[(1, r(1, 3))], &[(0, r(2, 3))], &[(2, r(1, 3)), (0, r(1, 3))]]);
        let cfg = cfkp_situation(&l).unwrap();
        let mut s = ObservationSet::new();
        for mask in 0..8u32 {
            s.push(format!("{mask}"), (0..3).map(|x| (mask >> x & 1) as f64).collect());
        }
        assert!(is_approximating_eqrel(&s, &cfg, l.coalgebra()).unwrap().holds);

        let g = generate_semantics(&cfg, l.coalgebra(), 4, GenerationCaps::default()).unwrap();
        let s = ObservationSet::from_generated(&g, 4);
        assert!(is_approximating_eqrel(&s, &cfg, l.coalgebra()).unwrap().holds);
    }

    #[test]
    fn missing_union_yields_a_genuine_counterexample() {
        // [1,0,0] is in S but its complement is not
        let l = lmp(&[&[(0, r(1, 1))], &[(0, r(1, 2)), (1, r(1, 2))], &[(0, r(1, 1))]]);
        let cfg = SituationConfig::cfkp(l.labels(), &[r(0, 1)]).unwrap();
        let mut s = ObservationSet::new();
        s.push("T", vec![1.0; 3]);
        s.push("k", vec![1.0, 0.0, 0.0]);
        let res = is_approximating_eqrel(&s, &cfg, l.coalgebra()).unwrap();
        assert!(!res.holds);
        let ce = res.counterexample.unwrap();
        // re-evaluate both sides at the returned pair
        let bank = cfg.bank(l.coalgebra()).unwrap();
        assert!(res.left.related(ce.s, ce.t));
        let lambda = bank.index_of(&ce.modality).unwrap();
        let image = bank.eval(lambda, &ce.h).unwrap();
        assert_ne!(image[ce.s], image[ce.t]);
        // h respects the kernel of S
        assert!(res.kernel.refines(&kernel_of_vector(&ce.h, 0.0)));
    }

    #[test]
    fn sampled_checks() {
        let c = markov(&[&[(0, r(1, 1))], &[(1, r(1, 2))], &[(0, r(1, 4)), (2, r(1, 2))]]);
        let cfg = kmm();
        let g = generate_semantics(&cfg, &c, 3, GenerationCaps { per_level: 2000, rounds: 50 }).unwrap();
        let s = ObservationSet::from_generated(&g, 3);
        let res = is_approximating_pmet_sampled(&s, &cfg, &c, 1.0 / 8.0, 500, 3).unwrap();
        assert!(res.pass, "{:?}", res.counterexample);
        assert_eq!(res.note, SAMPLED_NOTE);

        let res = is_approximating_pmet_sampled(&ObservationSet::new(), &cfg, &c, 1.0 / 8.0, 100, 3).unwrap();
        assert!(!res.pass);

        let mut one = ObservationSet::new();
        one.push("sep", vec![1.0, 0.0, 0.0]);
        let two = markov(&[&[(0, r(1, 1))], &[(1, r(1, 1))]]);
        let mut single = ObservationSet::new();
        single.push("sep", vec![1.0, 0.0]);
        let g = generate_semantics(&cfg, &two, 1, GenerationCaps::default()).unwrap();
        for (id, e) in g.up_to(0) {
            single.push(g.formula(id).to_string(), e.vector.clone());
        }
        for u in [Connective::Neg] {
            let extra: Vec<(String, Vec<f64>)> = single
                .members
                .iter()
                .map(|(l, v)| (format!("neg({l})"), v.iter().map(|x| u.apply(&[*x])).collect()))
                .collect();
            single.members.extend(extra);
        }
        let res = is_approximating_pmet_sampled(&single, &cfg, &two, 1.0 / 8.0, 200, 5).unwrap();
        assert!(res.pass, "{:?}", res.counterexample);
    }

    #[test]
    fn closure_examples() {
        let c = markov(&[&[(0, r(1, 1))], &[(1, r(1, 2))], &[(2, r(1, 4))]]);
        let cfg = kmm();
        let g = generate_semantics(&cfg, &c, 1, GenerationCaps::default()).unwrap();
        assert!(!g.truncated());
        let s = ObservationSet::from_generated(&g, 1);
        let rep = closure_conditions_check(&s, &cfg);
        assert!(rep.closed_under_connectives, "{:?}", rep.missing);
        let mut lone = ObservationSet::new();
        lone.push("k", vec![0.25, 0.5, 1.0]);
        let rep = closure_conditions_check(&lone, &cfg);
        assert!(!rep.closed_under_connectives);
        assert!(rep.totally_bounded);
    }

    #[test]
    fn adequacy_and_expressivity_on_small_systems() {
        let l = lmp(&[&[(1, r(1, 3))], &[(0, r(2, 3))], &[(0, r(2, 3))]]);
        let cfg = cfkp_situation(&l).unwrap();
        let rep = check_adequacy(&cfg, l.coalgebra(), 3, CheckOptions::default()).unwrap();
        assert!(rep.verdict && rep.exact);
        let rep = check_expressivity(&cfg, l.coalgebra(), 0.0, 4, CheckOptions::default()).unwrap();
        assert!(rep.verdict);
        assert!(rep.routes.iter().all(|r| r.succeeded), "{:?}", rep.routes);

        let c = markov(&[&[(0, r(1, 1))], &[(1, r(1, 2))]]);
        let rep = check_adequacy(&kmm(), &c, 3, CheckOptions::default()).unwrap();
        assert!(rep.verdict, "gap {}", rep.gap);
        let rep = check_expressivity(&kmm(), &c, 0.05, 12, CheckOptions::default()).unwrap();
        assert!(rep.verdict, "gaps {:?}", rep.gaps_by_depth);
        assert!(rep.gaps_by_depth.windows(2).all(|w| w[1] <= w[0] + 1e-9));

        let single = markov(&[&[(0, r(1, 2))]]);
        let rep = check_expressivity(&kmm(), &single, 0.05, 2, CheckOptions::default()).unwrap();
        assert!(rep.verdict);
        assert_eq!(rep.depth_used, 0);
    }
}
