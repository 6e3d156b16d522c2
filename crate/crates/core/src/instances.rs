//! The three shipped situations end to end: bisimulation metrics for Markov
//! chains, probabilistic bisimilarity of labelled Markov processes, and
//! bisimulation uniformities, all at finite scale.

use std::collections::BTreeSet;

use crate::behavior::{BehaviorValue, Coalgebra, FunctorSpec};
use crate::codensity::lift_step_kernel;
use crate::error::{Error, Result};
use crate::fibers::Partition;
use crate::logic::{generate_semantics, GenerationCaps, SituationConfig};
use crate::rational::Rational;

/// A coalgebra of `(D≤1 −)^A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmp {
    coalgebra: Coalgebra,
    labels: Vec<String>,
    /// `rows[s][a]`: (target, weight) pairs.
    rows: Vec<Vec<Vec<(usize, Rational)>>>,
}

impl Lmp {
    pub fn new(coalgebra: Coalgebra) -> Result<Self> {
        let labels = match coalgebra.functor() {
            FunctorSpec::Exponent(body, labels) if **body == FunctorSpec::dist(FunctorSpec::Id) => labels.clone(),
            other => {
                return Err(Error::shape(
                    "functor",
                    format!("a labelled Markov process needs (D≤1(Id))^A, found {other}"),
                ))
            }
        };
        let rows = coalgebra
            .behaviors()
            .iter()
            .map(|b| match b {
                BehaviorValue::Labeled(parts) => parts
                    .iter()
                    .map(|p| match p {
                        BehaviorValue::Dist(entries) => entries
                            .iter()
                            .map(|(v, w)| match v {
                                BehaviorValue::Id(t) => (*t, *w),
                                _ => unreachable!("validated by the coalgebra"),
                            })
                            .collect(),
                        _ => unreachable!("validated by the coalgebra"),
                    })
                    .collect(),
                _ => unreachable!("validated by the coalgebra"),
            })
            .collect();
        Ok(Lmp {
            coalgebra,
            labels,
            rows,
        })
    }

    pub fn coalgebra(&self) -> &Coalgebra {
        &self.coalgebra
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn size(&self) -> usize {
        self.coalgebra.size()
    }

    /// `μ^s_a(S)` for a set given by its indicator.
    pub fn mass(&self, s: usize, a: usize, set: impl Fn(usize) -> bool) -> Rational {
        self.rows[s][a]
            .iter()
            .filter(|(t, _)| set(*t))
            .map(|(_, w)| *w)
            .sum()
    }

    /// States split by `(a, B) ↦ μ^s_a(B)` over the blocks of `r`.
    pub fn block_mass_step(&self, r: &Partition) -> Partition {
        Partition::from_keys((0..self.size()).map(|s| {
            let mut sig = vec![Rational::default(); self.labels.len() * r.num_blocks()];
            for (a, row) in self.rows[s].iter().enumerate() {
                for (t, w) in row {
                    sig[a * r.num_blocks() + r.block_of(*t)] += w;
                }
            }
            sig
        }))
    }
}

/// Probabilistic bisimilarity by partition refinement on exact block masses.
pub fn prob_bisim(lmp: &Lmp) -> Partition {
    let mut r = Partition::total(lmp.size());
    loop {
        let next = r.intersect(&lmp.block_mass_step(&r));
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Thresholds sufficient for the strict threshold modalities to separate
/// everything the full rational range separates on this process.
///
/// Every achievable value `μ^s_a(U)` is a subset sum of one row; for each
/// achievable `m` the largest achievable value below it is a threshold,
/// since `thr_r` then splits `m` from everything at most `r`.
pub fn cfkp_thresholds(lmp: &Lmp) -> Vec<Rational> {
    let mut achievable = BTreeSet::from([Rational::default()]);
    for rows in &lmp.rows {
        for row in rows {
            let mut sums = BTreeSet::from([Rational::default()]);
            for (_, w) in row {
                let shifted: Vec<Rational> = sums.iter().map(|s| s + w).collect();
                sums.extend(shifted);
            }
            achievable.extend(sums);
        }
    }
    let values: Vec<Rational> = achievable.into_iter().collect();
    values[..values.len() - 1].to_vec()
}

/// The CFKP situation for this process with [`cfkp_thresholds`].
pub fn cfkp_situation(lmp: &Lmp) -> Result<SituationConfig> {
    SituationConfig::cfkp(lmp.labels(), &cfkp_thresholds(lmp))
}

/// The kernel equivalence of a finite uniformity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformityKernel(pub Partition);

fn check_bu(cfg: &SituationConfig) -> Result<()> {
    if cfg.omega != crate::behavior::TruthObject::Reals || cfg.fiber != crate::fibers::FiberKind::EqRel {
        return Err(Error::InvalidSituation("uniformity kernels need the real-valued relation situation".into()));
    }
    Ok(())
}

/// The kernel of the bisimulation uniformity: the greatest fixed point of
/// the signature lifting.
pub fn uniformity_bisim_kernel(cfg: &SituationConfig, c: &Coalgebra) -> Result<UniformityKernel> {
    check_bu(cfg)?;
    let mut r = Partition::total(c.size());
    loop {
        let next = lift_step_kernel(cfg, c, &r)?;
        if next == r {
            return Ok(UniformityKernel(r));
        }
        r = next;
    }
}

/// The joint kernel of all generated formula semantics up to depth `n`,
/// with the truncation flag of the generation.
pub fn uniformity_logical_kernel(
    cfg: &SituationConfig,
    c: &Coalgebra,
    n: usize,
    caps: GenerationCaps,
) -> Result<(UniformityKernel, bool)> {
    check_bu(cfg)?;
    let g = generate_semantics(cfg, c, n, caps)?;
    let p = g.predicate(n);
    let part = p.element.as_partition().cloned().expect("relation fiber");
    Ok((UniformityKernel(part), p.truncated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{Leaf, ModalityDef};
    use crate::codensity::lift_step_eqrel;
    use crate::fibers::{Carrier, FiberElement};
    use crate::fixpoint::{kleene_gfp, KleeneOptions};
    use crate::logic::{default_r_grid, logical_predicate};

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

    #[test]
    fn prob_bisim_examples() {
        let same = lmp(&[&[(2, r(1, 2))], &[(2, r(1, 2))], &[]]);
        assert!(prob_bisim(&same).related(0, 1));

        // s, t both send full mass into {u, v}; u and v differ, so s and t split
        let chain = lmp(&[
            &[(2, r(1, 2)), (3, r(1, 2))],
            &[(2, r(1, 3)), (3, r(2, 3))],
            &[(2, r(1, 1))],
            &[],
        ]);
        let p = prob_bisim(&chain);
        assert!(!p.related(0, 1));
        let cfg = cfkp_situation(&chain).unwrap();
        let (nu, _) = kleene_gfp(&cfg, chain.coalgebra(), KleeneOptions::default()).unwrap();
        assert_eq!(nu, FiberElement::EqRel(p.clone()));

        // with u, v equal the first split never happens
        let merged = lmp(&[&[(2, r(1, 2)), (3, r(1, 2))], &[(2, r(1, 3)), (3, r(2, 3))], &[], &[]]);
        let p = prob_bisim(&merged);
        assert!(p.related(0, 1) && p.related(2, 3));
    }

    #[test]
    fn thresholds_examples() {
        let l = lmp(&[&[(1, r(1, 3))], &[(1, r(2, 3))]]);
        let th = cfkp_thresholds(&l);
        assert!(th.contains(&r(1, 3)));
        assert_eq!(th, vec![r(0, 1), r(1, 3)]);

        let flat = lmp(&[&[(1, r(1, 2))], &[(0, r(1, 2))]]);
        let cfg = cfkp_situation(&flat).unwrap();
        let p = logical_predicate(&cfg, flat.coalgebra(), 3, GenerationCaps::default()).unwrap();
        assert_eq!(p.element, FiberElement::EqRel(Partition::total(2)));
    }

    #[test]
    fn thresholds_match_dense_grid() {
        let l = lmp(&[
            &[(1, r(1, 4)), (2, r(1, 2))],
            &[(0, r(3, 4))],
            &[(2, r(1, 4)), (1, r(1, 2))],
            &[(3, r(3, 4))],
        ]);
        let sparse = cfkp_situation(&l).unwrap();
        let dense: Vec<Rational> = (0..64).map(|i| r(i, 64)).collect();
        let dense = SituationConfig::cfkp(l.labels(), &dense).unwrap();
        let caps = GenerationCaps::default();
        let a = logical_predicate(&sparse, l.coalgebra(), 4, caps).unwrap();
        let b = logical_predicate(&dense, l.coalgebra(), 4, caps).unwrap();
        assert_eq!(a.element, b.element);
        assert_eq!(a.element, FiberElement::EqRel(prob_bisim(&l)));
    }

    #[test]
    fn block_mass_step_is_the_relation_lifting() {
        let l = lmp(&[&[(1, r(1, 4)), (2, r(1, 2))], &[(0, r(3, 4))], &[(2, r(1, 4)), (1, r(1, 2))]]);
        let cfg = cfkp_situation(&l).unwrap();
        for part in Partition::enumerate_all(3) {
            assert_eq!(lift_step_eqrel(&cfg, l.coalgebra(), &part).unwrap(), l.block_mass_step(&part));
        }
    }

    fn bu_markov(rows: &[&[(usize, Rational)]]) -> (SituationConfig, Coalgebra) {
        let next = rows
            .iter()
            .map(|row| BehaviorValue::dist(row.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect()))
            .collect();
        let c = Coalgebra::new(Carrier::new(rows.len()).unwrap(), FunctorSpec::dist(FunctorSpec::Id), next).unwrap();
        let cfg = SituationConfig::bu(
            FunctorSpec::dist(FunctorSpec::Id),
            vec![ModalityDef::new("E", vec![], Leaf::ExpectedValue)],
            &default_r_grid(),
        )
        .unwrap();
        (cfg, c)
    }

    #[test]
    fn uniformity_kernels() {
        let (cfg, c) = bu_markov(&[&[(0, r(1, 1))]]);
        assert_eq!(uniformity_bisim_kernel(&cfg, &c).unwrap().0, Partition::total(1));

        let (cfg, c) = bu_markov(&[&[(1, r(1, 2))], &[(2, r(1, 2))], &[(2, r(1, 4))]]);
        let k = uniformity_bisim_kernel(&cfg, &c).unwrap();
        assert_eq!(k.0, Partition::discrete(3));
        let (total, _) = uniformity_logical_kernel(&cfg, &c, 0, GenerationCaps::default()).unwrap();
        assert_eq!(total.0, Partition::total(3));
        let (logical, _) = uniformity_logical_kernel(&cfg, &c, 3, GenerationCaps::default()).unwrap();
        assert_eq!(logical, k);
    }

    #[test]
    fn uniformity_kernel_on_lmp_is_prob_bisim() {
        let l = lmp(&[&[(1, r(1, 4)), (2, r(1, 2))], &[(0, r(3, 4))], &[(2, r(1, 4)), (1, r(1, 2))], &[(0, r(3, 4))]]);
        let cfg = SituationConfig::bu(
            FunctorSpec::lmp(&["a"]),
            vec![ModalityDef::new("a", vec![crate::behavior::Selector::Label(0)], Leaf::ExpectedValue)],
            &default_r_grid(),
        )
        .unwrap();
        assert_eq!(uniformity_bisim_kernel(&cfg, l.coalgebra()).unwrap().0, prob_bisim(&l));
    }

    #[test]
    fn withheld_modality_is_detected() {
        // the two labels behave alike except under `b`
        let f = FunctorSpec::lmp(&["a", "b"]);
        let d = |pairs: &[(usize, Rational)]| {
            BehaviorValue::dist(pairs.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect())
        };
        let next = vec![
            BehaviorValue::Labeled(vec![d(&[(0, r(1, 2))]), d(&[(0, r(1, 2))])]),
            BehaviorValue::Labeled(vec![d(&[(1, r(1, 2))]), d(&[])]),
        ];
        let c = Coalgebra::new(Carrier::new(2).unwrap(), f.clone(), next).unwrap();
        let both = vec![
            ModalityDef::new("a", vec![crate::behavior::Selector::Label(0)], Leaf::ExpectedValue),
            ModalityDef::new("b", vec![crate::behavior::Selector::Label(1)], Leaf::ExpectedValue),
        ];
        let full = SituationConfig::bu(f.clone(), both.clone(), &default_r_grid()).unwrap();
        let partial = SituationConfig::bu(f, both[..1].to_vec(), &default_r_grid()).unwrap();
        let bisim = uniformity_bisim_kernel(&full, &c).unwrap();
        let (weak, _) = uniformity_logical_kernel(&partial, &c, 3, GenerationCaps::default()).unwrap();
        assert_eq!(bisim.0, Partition::discrete(2));
        assert_ne!(weak, bisim);
    }
}
