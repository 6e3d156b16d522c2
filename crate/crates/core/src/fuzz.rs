//! Seeded generators of small systems for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::behavior::{BehaviorValue, Coalgebra, FunctorSpec, Leaf, ModalityDef, Selector};
use crate::fibers::Carrier;
use crate::instances::{cfkp_situation, Lmp};
use crate::logic::{default_r_grid, SituationConfig, DEFAULT_Q_DENOMINATOR};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Kmm,
    Cfkp,
    Bu,
}

pub const PRESETS: [Preset; 3] = [Preset::Kmm, Preset::Cfkp, Preset::Bu];

/// A subdistribution over `0..n` whose weights are multiples of `1/denom`
/// and whose mass numerator lies in `mass`.
pub fn random_dist<R: Rng>(rng: &mut R, n: usize, denom: i64, mass: (i64, i64), max_support: usize) -> BehaviorValue<usize> {
    let total = rng.gen_range(mass.0..=mass.1);
    let support = rng.gen_range(1..=max_support.min(n).max(1));
    let mut targets: Vec<usize> = (0..n).collect();
    targets.shuffle(rng);
    targets.truncate(support);
    let mut cuts: Vec<i64> = (0..support - 1).map(|_| rng.gen_range(0..=total)).collect();
    cuts.push(0);
    cuts.push(total);
    cuts.sort_unstable();
    let entries = targets
        .iter()
        .zip(cuts.windows(2))
        .map(|(t, w)| (BehaviorValue::Id(*t), Rational::new(w[1] - w[0], denom)))
        .collect();
    BehaviorValue::dist(entries)
}

/// Replaces some behaviors by copies of others, so that bisimilar pairs occur.
fn copy_some<R: Rng>(rng: &mut R, rows: &mut [BehaviorValue<usize>]) {
    let n = rows.len();
    if n < 2 {
        return;
    }
    for s in 0..n {
        if rng.gen_bool(0.2) {
            let t = rng.gen_range(0..n);
            rows[s] = rows[t].clone();
        }
    }
}

pub fn markov_chain<R: Rng>(rng: &mut R, n: usize, denom: i64, mass: (i64, i64)) -> Coalgebra {
    let mut rows: Vec<_> = (0..n).map(|_| random_dist(rng, n, denom, mass, 3)).collect();
    copy_some(rng, &mut rows);
    Coalgebra::new(Carrier::new(n).expect("n ≥ 1"), FunctorSpec::dist(FunctorSpec::Id), rows)
        .expect("generated chain is valid")
}

pub fn lmp<R: Rng>(rng: &mut R, n: usize, labels: usize, denom: i64) -> Lmp {
    let names: Vec<String> = (0..labels).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut rows: Vec<_> = (0..n)
        .map(|_| {
            BehaviorValue::Labeled(
                (0..labels)
                    .map(|_| {
                        if rng.gen_bool(0.15) {
                            BehaviorValue::Dist(Vec::new())
                        } else {
                            random_dist(rng, n, denom, (1, denom), 3)
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    copy_some(rng, &mut rows);
    let c = Coalgebra::new(Carrier::new(n).expect("n ≥ 1"), FunctorSpec::lmp(&name_refs), rows)
        .expect("generated process is valid");
    Lmp::new(c).expect("functor is an LMP functor")
}

pub fn kripke<R: Rng>(rng: &mut R, n: usize, density: f64) -> Coalgebra {
    let mut rows: Vec<_> = (0..n)
        .map(|_| BehaviorValue::set((0..n).filter(|_| rng.gen_bool(density)).map(BehaviorValue::Id).collect()))
        .collect();
    copy_some(rng, &mut rows);
    Coalgebra::new(Carrier::new(n).expect("n ≥ 1"), FunctorSpec::pow(FunctorSpec::Id), rows)
        .expect("generated frame is valid")
}

pub fn expected_value() -> Vec<ModalityDef> {
    vec![ModalityDef::new("E", vec![], Leaf::ExpectedValue)]
}

/// One expected-value modality per label.
pub fn per_label_expected(labels: &[String]) -> Vec<ModalityDef> {
    labels
        .iter()
        .enumerate()
        .map(|(i, a)| ModalityDef::new(a.clone(), vec![Selector::Label(i)], Leaf::ExpectedValue))
        .collect()
}

/// A random system of the given preset with at most `max_states` states and
/// at most `max_labels` labels.
pub fn system<R: Rng>(rng: &mut R, preset: Preset, max_states: usize, max_labels: usize) -> (SituationConfig, Coalgebra) {
    let n = rng.gen_range(1..=max_states);
    match preset {
        Preset::Kmm => {
            let c = markov_chain(rng, n, 8, (1, 8));
            let cfg = SituationConfig::kmm(c.functor().clone(), expected_value(), DEFAULT_Q_DENOMINATOR)
                .expect("valid preset");
            (cfg, c)
        }
        Preset::Cfkp => {
            let labels = rng.gen_range(1..=max_labels);
            let denom = *[2i64, 3, 4, 6].choose(rng).expect("nonempty");
            let l = lmp(rng, n, labels, denom);
            let cfg = cfkp_situation(&l).expect("valid preset");
            (cfg, l.coalgebra().clone())
        }
        Preset::Bu => match rng.gen_range(0..3) {
            0 => {
                let c = markov_chain(rng, n, 4, (1, 4));
                let cfg = SituationConfig::bu(c.functor().clone(), expected_value(), &default_r_grid()).expect("valid preset");
                (cfg, c)
            }
            1 => {
                let c = kripke(rng, n, 0.35);
                let cfg = SituationConfig::bu(
                    c.functor().clone(),
                    vec![ModalityDef::new("sup", vec![], Leaf::Sup)],
                    &default_r_grid(),
                )
                .expect("valid preset");
                (cfg, c)
            }
            _ => {
                let labels = rng.gen_range(1..=max_labels);
                let l = lmp(rng, n, labels, 4);
                let cfg = SituationConfig::bu(
                    l.coalgebra().functor().clone(),
                    per_label_expected(l.labels()),
                    &default_r_grid(),
                )
                .expect("valid preset");
                (cfg, l.coalgebra().clone())
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_seeded() {
        for preset in PRESETS {
            let a = system(&mut ChaCha8Rng::seed_from_u64(7), preset, 6, 3);
            let b = system(&mut ChaCha8Rng::seed_from_u64(7), preset, 6, 3);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn masses_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let b = random_dist(&mut rng, 5, 8, (2, 5), 3);
            let m = b.mass().unwrap();
            assert!(m >= Rational::new(2, 8) && m <= Rational::new(5, 8));
        }
    }
}
