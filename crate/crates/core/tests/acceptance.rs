//! Acceptance suite: one line per criterion. Pass criterion numbers as
//! arguments to run a subset.

use std::time::{Duration, Instant};

use cobisim_core::behavior::{BehaviorValue, Coalgebra, FunctorSpec, Leaf, ModalityDef, TruthObject};
use cobisim_core::codensity::{exact_modal_distance, grid_oracle_lift, kantorovich, lift_step, lift_step_eqrel};
use cobisim_core::expressivity::{check_adequacy, check_expressivity, is_approximating_eqrel, CheckOptions, ObservationSet};
use cobisim_core::fibers::{leq, Carrier, FiberElement, FiberKind, Partition, PseudoMetric};
use cobisim_core::fixpoint::{kleene_gfp, stepwise_sequence, KleeneOptions};
use cobisim_core::fuzz::{self, Preset, PRESETS};
use cobisim_core::game::{brute_solve, Game, GameOptions, GamePosition, Player, BRUTE_MAX_STATES};
use cobisim_core::instances::{cfkp_situation, cfkp_thresholds, prob_bisim, uniformity_bisim_kernel, uniformity_logical_kernel, Lmp};
use cobisim_core::logic::{generate_semantics, Connective, GenerationCaps, SituationConfig, DEFAULT_Q_DENOMINATOR};
use cobisim_core::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = (bool, String);

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let e = start.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn kripke_box(c: &Coalgebra) -> SituationConfig {
    SituationConfig {
        fiber: FiberKind::BoolPred,
        functor: c.functor().clone(),
        omega: TruthObject::Two,
        connectives: vec![Connective::Top, Connective::And],
        modalities: vec![ModalityDef::new("box", vec![], Leaf::Box)],
        value_bound: None,
    }
}

fn kripke_diamond(c: &Coalgebra) -> SituationConfig {
    SituationConfig {
        fiber: FiberKind::EqRel,
        functor: c.functor().clone(),
        omega: TruthObject::Two,
        connectives: vec![Connective::Top, Connective::And, Connective::Neg],
        modalities: vec![ModalityDef::new("dia", vec![], Leaf::Diamond)],
        value_bound: None,
    }
}

fn c1_adequacy() -> Verdict {
    let start = Instant::now();
    let mut r = rng(101);
    let opts = CheckOptions::default();
    let mut failures = Vec::new();
    let mut counts = [0usize; 3];
    for i in 0..201 {
        let preset = PRESETS[i % 3];
        counts[i % 3] += 1;
        let (cfg, c) = fuzz::system(&mut r, preset, 8, 3);
        match check_adequacy(&cfg, &c, 3, opts) {
            Ok(rep) if rep.verdict => {}
            Ok(rep) => failures.push(format!("#{i} {preset:?} gap {:.3e}", rep.gap)),
            Err(e) => failures.push(format!("#{i} {preset:?} error {e}")),
        }
    }
    let (in_time, t) = within(Duration::from_secs(60), start);
    (
        failures.is_empty() && in_time,
        format!("{} systems (KMM {}, CFKP {}, BU {}), failures {:?}, {t}", counts.iter().sum::<usize>(), counts[0], counts[1], counts[2], failures),
    )
}

fn c2_cfkp_expressivity() -> Verdict {
    let start = Instant::now();
    let mut r = rng(202);
    let mut failures = Vec::new();
    let mut truncated = 0;
    for i in 0..100 {
        let n = r.gen_range(1..=10);
        let labels = r.gen_range(1..=3);
        let denom = [2i64, 3, 4, 6][r.gen_range(0..4)];
        let l = fuzz::lmp(&mut r, n, labels, denom);
        let cfg = cfkp_situation(&l).expect("valid situation");
        let g = generate_semantics(&cfg, l.coalgebra(), n, GenerationCaps::default()).expect("generation");
        let lp = g.predicate(n);
        truncated += lp.truncated as usize;
        if lp.element.as_partition() != Some(&prob_bisim(&l)) {
            failures.push(i);
        }
    }
    let (in_time, t) = within(Duration::from_secs(60), start);
    (
        failures.is_empty() && in_time,
        format!("100 LMPs, mismatches {failures:?}, truncated {truncated}, {t}"),
    )
}

fn c3_block_mass_step() -> Verdict {
    let mut r = rng(303);
    let mut mismatches = 0;
    let mut cases = 0;
    for _ in 0..120 {
        let n = r.gen_range(1..=8);
        let (labels, denom) = (r.gen_range(1..=3), [2i64, 3, 4, 6][r.gen_range(0..4)]);
        let l = fuzz::lmp(&mut r, n, labels, denom);
        let cfg = cfkp_situation(&l).expect("valid situation");
        for _ in 0..3 {
            let blocks = r.gen_range(1..=n);
            let p = Partition::from_keys((0..n).map(|_| r.gen_range(0..blocks)));
            cases += 1;
            if lift_step_eqrel(&cfg, l.coalgebra(), &p).expect("lift") != l.block_mass_step(&p) {
                mismatches += 1;
            }
        }
    }
    (mismatches == 0, format!("{cases} (LMP, partition) instances, mismatches {mismatches}"))
}

fn c4_kmm_expressivity() -> Verdict {
    let start = Instant::now();
    let mut r = rng(404);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut depths = Vec::new();
    let opts = CheckOptions::default();
    for i in 0..30 {
        let n = r.gen_range(2..=6);
        let c = fuzz::markov_chain(&mut r, n, 8, (1, 5));
        let cfg = SituationConfig::kmm(c.functor().clone(), fuzz::expected_value(), DEFAULT_Q_DENOMINATOR).expect("valid");
        match check_expressivity(&cfg, &c, 0.05, 12, opts) {
            Ok(rep) => {
                let monotone = rep.gaps_by_depth.windows(2).all(|w| w[1] <= w[0] + 1e-9);
                worst = worst.max(rep.gap);
                depths.push(rep.depth_used);
                if !rep.verdict || !monotone {
                    failures.push(format!("#{i} gaps {:?}", rep.gaps_by_depth));
                }
            }
            Err(e) => failures.push(format!("#{i} error {e}")),
        }
    }
    let (in_time, t) = within(Duration::from_secs(300), start);
    (
        failures.is_empty() && in_time,
        format!("30 chains, depths used {depths:?}, worst final gap {worst:.4}, failures {failures:?}, {t}"),
    )
}

fn random_metric(r: &mut ChaCha8Rng, n: usize) -> PseudoMetric {
    let mut rows = vec![vec![0.0; n]; n];
    for s in 0..n {
        for t in s + 1..n {
            let v = r.gen_range(0..=16) as f64 / 16.0;
            rows[s][t] = v;
            rows[t][s] = v;
        }
    }
    let mut d = PseudoMetric::from_fn_unchecked(n, |s, t| rows[s][t]);
    d.triangle_closure();
    d
}

fn c5_kantorovich() -> Verdict {
    let mut r = rng(505);
    let delta = 1.0 / 16.0;
    let e = ModalityDef::new("E", vec![], Leaf::ExpectedValue);
    let mut oracle_fail = 0;
    let mut perm_fail = 0;
    let mut worst_gap: f64 = 0.0;
    for _ in 0..50 {
        let n = r.gen_range(1..=4);
        let d = random_metric(&mut r, n);
        let rows: Vec<BehaviorValue<usize>> = (0..n).map(|_| fuzz::random_dist(&mut r, n, 8, (1, 8), n)).collect();
        let c = Coalgebra::new(Carrier::new(n).unwrap(), FunctorSpec::dist(FunctorSpec::Id), rows.clone()).unwrap();
        let (s, t) = (0, n - 1);
        let exact = exact_modal_distance(&e, &c, &d, s, t).expect("lp");
        let grid = grid_oracle_lift(&c, &d, &e, s, t, delta).expect("oracle");
        worst_gap = worst_gap.max((exact - grid).abs());
        if (exact - grid).abs() > 2.0 * delta + 1e-12 {
            oracle_fail += 1;
        }
        // relabel by a reversal and a rotation
        for perm in [(0..n).rev().collect::<Vec<_>>(), (0..n).map(|i| (i + 1) % n).collect()] {
            let dp = PseudoMetric::from_fn_unchecked(n, |a, b| d.get(perm[a], perm[b]));
            let inv: Vec<usize> = (0..n).map(|i| perm.iter().position(|&p| p == i).unwrap()).collect();
            let support = |b: &BehaviorValue<usize>, map: &[usize]| -> Vec<(usize, Rational)> {
                match b {
                    BehaviorValue::Dist(es) => es
                        .iter()
                        .map(|(v, w)| match v {
                            BehaviorValue::Id(x) => (map[*x], *w),
                            _ => unreachable!(),
                        })
                        .collect(),
                    _ => unreachable!(),
                }
            };
            let ident: Vec<usize> = (0..n).collect();
            let base = kantorovich(&d, &support(&rows[s], &ident), &support(&rows[t], &ident)).expect("lp");
            let permuted = kantorovich(&dp, &support(&rows[s], &inv), &support(&rows[t], &inv)).expect("lp");
            if (base - permuted).abs() > 1e-9 {
                perm_fail += 1;
            }
        }
    }
    (
        oracle_fail == 0 && perm_fail == 0,
        format!("50 cases, oracle disagreements {oracle_fail} (worst |LP − grid| {worst_gap:.4}), permutation disagreements {perm_fail}"),
    )
}

/// The 20 game systems: Kripke frames under the diamond and small LMPs.
fn game_corpus() -> Vec<(SituationConfig, Coalgebra)> {
    let mut r = rng(606);
    (0..20)
        .map(|i| {
            let n = r.gen_range(1..=BRUTE_MAX_STATES);
            if i % 2 == 0 {
                let c = fuzz::kripke(&mut r, n, 0.35);
                (kripke_diamond(&c), c)
            } else {
                let (labels, denom) = (r.gen_range(1..=2), [2i64, 3][r.gen_range(0..2)]);
                let l = fuzz::lmp(&mut r, n, labels, denom);
                (cfkp_situation(&l).expect("valid"), l.coalgebra().clone())
            }
        })
        .collect()
}

fn c6_game_oracle() -> Verdict {
    let mut bad = Vec::new();
    let mut positions = 0;
    for (i, (cfg, c)) in game_corpus().into_iter().enumerate() {
        let g = Game::new(&cfg, &c, GameOptions::default()).expect("game");
        let sol = brute_solve(&cfg, &c, BRUTE_MAX_STATES).expect("brute");
        for (p, win) in sol.predicates.iter().zip(&sol.predicate_wins) {
            positions += 1;
            if *win != leq(p, g.nu()).unwrap() {
                bad.push(format!("#{i} P {p}"));
            }
        }
        for (k, win) in sol.observations.iter().zip(&sol.observation_wins) {
            positions += 1;
            let s = g.solve_position(&GamePosition::Observation(k.clone())).unwrap();
            if *win != (s.winner == Player::Duplicator) {
                bad.push(format!("#{i} k {k:?}"));
            }
        }
    }
    (bad.is_empty(), format!("20 systems, {positions} positions, disagreements {bad:?}"))
}

fn c7_stepwise() -> Verdict {
    let mut r = rng(707);
    let caps = GenerationCaps {
        per_level: 800,
        rounds: 50,
    };
    let mut failures = Vec::new();
    let mut per_fiber = [0usize; 3];
    for i in 0..120 {
        let (cfg, c) = match i % 4 {
            0 => fuzz::system(&mut r, Preset::Kmm, 6, 3),
            1 => fuzz::system(&mut r, Preset::Cfkp, 6, 3),
            2 => fuzz::system(&mut r, Preset::Bu, 6, 3),
            _ => {
                let n = r.gen_range(1..=6);
                let c = fuzz::kripke(&mut r, n, 0.35);
                (kripke_box(&c), c)
            }
        };
        per_fiber[match cfg.fiber {
            FiberKind::BoolPred => 0,
            FiberKind::EqRel => 1,
            FiberKind::PMet1 => 2,
        }] += 1;
        let iterates = stepwise_sequence(&cfg, &c, 6).expect("iterates");
        let g = generate_semantics(&cfg, &c, 6, caps).expect("generation");
        for (n, it) in iterates.iter().enumerate() {
            if !leq(it, &g.predicate(n).element).unwrap() {
                failures.push(format!("#{i} n={n}"));
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "120 systems (predicates {}, relations {}, metrics {}), n = 0..6, failures {failures:?}",
            per_fiber[0], per_fiber[1], per_fiber[2]
        ),
    )
}

/// Labels masses into the deadlock state 2 below against above 1/4, while
/// every set built without negation sees masses 1/2 and 3/4, which the
/// thresholds {0, 1/4} cannot tell apart.
fn withheld_threshold_lmp() -> Lmp {
    let q = Rational::new;
    let dist = |es: &[(usize, Rational)]| {
        BehaviorValue::Labeled(vec![BehaviorValue::dist(es.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect())])
    };
    let next = vec![
        dist(&[(2, q(1, 2)), (3, q(1, 2))]),
        dist(&[(2, q(1, 4)), (3, q(3, 4))]),
        dist(&[]),
        dist(&[(3, q(1, 1))]),
    ];
    Lmp::new(Coalgebra::new(Carrier::new(4).unwrap(), FunctorSpec::lmp(&["a"]), next).unwrap()).unwrap()
}

fn c8_approximating() -> Verdict {
    let mut r = rng(808);
    let mut failures = Vec::new();
    for i in 0..60 {
        let n = r.gen_range(1..=7);
        let (labels, denom) = (r.gen_range(1..=3), [2i64, 3, 4][r.gen_range(0..3)]);
        let l = fuzz::lmp(&mut r, n, labels, denom);
        let cfg = cfkp_situation(&l).expect("valid");
        let g = generate_semantics(&cfg, l.coalgebra(), n + 1, GenerationCaps::default()).expect("generation");
        let s = ObservationSet::from_generated(&g, n + 1);
        match is_approximating_eqrel(&s, &cfg, l.coalgebra()) {
            Ok(res) if res.holds => {}
            Ok(_) => failures.push(format!("#{i}")),
            Err(e) => failures.push(format!("#{i} {e}")),
        }
    }
    let l = withheld_threshold_lmp();
    let cfg = SituationConfig::cfkp(l.labels(), &[Rational::new(0, 1), Rational::new(1, 4)]).expect("valid");
    assert!(cfkp_thresholds(&l).len() > 2, "thresholds are withheld");
    let g = generate_semantics(&cfg, l.coalgebra(), 6, GenerationCaps::default()).expect("generation");
    let s = ObservationSet::from_generated(&g, 6);
    let res = is_approximating_eqrel(&s, &cfg, l.coalgebra()).expect("check");
    let genuine = match &res.counterexample {
        Some(ce) if !res.holds => {
            // re-evaluate both sides of the inequality at the returned pair
            let left_related = s
                .members
                .iter()
                .all(|(_, k)| cfg.modalities.iter().all(|m| eval_image(&l, m, k, ce.s) == eval_image(&l, m, k, ce.t)));
            let m = &cfg.modalities[cfg.modality_index(&ce.modality).unwrap()];
            let respects = res.kernel.refines(&Partition::from_keys(ce.h.iter().map(|v| *v as i64)));
            left_related && respects && eval_image(&l, m, &ce.h, ce.s) != eval_image(&l, m, &ce.h, ce.t)
        }
        _ => false,
    };
    (
        failures.is_empty() && genuine,
        format!(
            "60 corpus LMPs, failures {failures:?}; withheld-threshold counterexample {}",
            res.counterexample
                .as_ref()
                .map(|ce| format!("h = {:?} under {} at ({}, {}), verified {genuine}", ce.h, ce.modality, ce.s, ce.t))
                .unwrap_or_else(|| "missing".into())
        ),
    )
}

fn eval_image(l: &Lmp, m: &ModalityDef, k: &[f64], s: usize) -> f64 {
    let b = l.coalgebra().observe(s, k).expect("observation");
    cobisim_core::behavior::eval_modality(m, &b).expect("modality")
}

fn c9_uniformity() -> Verdict {
    let mut r = rng(909);
    let mut failures = Vec::new();
    let mut truncated = 0;
    for i in 0..50 {
        let (cfg, c) = fuzz::system(&mut r, Preset::Bu, 8, 3);
        let bisim = uniformity_bisim_kernel(&cfg, &c).expect("kernel");
        let (logic, t) = uniformity_logical_kernel(&cfg, &c, c.size() + 1, GenerationCaps::default()).expect("logic");
        truncated += t as usize;
        if logic != bisim {
            failures.push(format!("#{i} ({} states): logic {} vs bisim {}", c.size(), logic.0, bisim.0));
        }
    }
    (failures.is_empty(), format!("50 systems, truncated {truncated}, mismatches {failures:?}"))
}

fn c10_fixpoints() -> Verdict {
    let mut r = rng(1010);
    let opts = KleeneOptions::default();
    let mut slow = Vec::new();
    let mut residual_fail = Vec::new();
    let mut unconverged = 0;
    let (mut rel, mut met) = (0, 0);
    for i in 0..150 {
        let (cfg, c) = fuzz::system(&mut r, PRESETS[i % 3], 8, 3);
        let (nu, rep) = kleene_gfp(&cfg, &c, opts).expect("chain");
        match nu {
            FiberElement::EqRel(_) => {
                rel += 1;
                if !rep.converged || rep.iterations > c.size() {
                    slow.push(format!("#{i}: {} steps on {} states", rep.iterations, c.size()));
                }
            }
            FiberElement::PMet1(ref d) => {
                met += 1;
                if !rep.converged {
                    unconverged += 1;
                    continue;
                }
                let next = lift_step(&cfg, &c, &nu).expect("lift");
                let res = next.as_metric().unwrap().sup_distance(d);
                if res > 2.0 * opts.tol {
                    residual_fail.push(format!("#{i}: {res:.2e}"));
                }
            }
            FiberElement::BoolPred(_) => {}
        }
    }
    (
        slow.is_empty() && residual_fail.is_empty(),
        format!(
            "{rel} relation chains, slow {slow:?}; {met} metric chains ({unconverged} unconverged), residual failures {residual_fail:?}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("adequacy", c1_adequacy),
        ("probabilistic bisimilarity equals the threshold logic", c2_cfkp_expressivity),
        ("threshold lifting equals block-mass refinement", c3_block_mass_step),
        ("expected-value logic approximates the Kantorovich distance", c4_kmm_expressivity),
        ("Kantorovich LP against grid oracle and relabeling", c5_kantorovich),
        ("game solver against bisimilarity", c6_game_oracle),
        ("stepwise adequacy", c7_stepwise),
        ("approximating-family checker", c8_approximating),
        ("uniformity kernels", c9_uniformity),
        ("fixed-point sanity", c10_fixpoints),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
