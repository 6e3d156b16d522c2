//! Kleene iteration of `x* ∘ B̄` from `⊤` and post-fixed-point certificates.

use crate::behavior::Coalgebra;
use crate::codensity::lift_step;
use crate::error::{Error, Result};
use crate::fibers::{leq, top, FiberElement};
use crate::logic::SituationConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KleeneOptions {
    pub max_iter: usize,
    /// Sup-norm residual below which a pseudometric chain counts as stable.
    pub tol: f64,
}

impl Default for KleeneOptions {
    fn default() -> Self {
        KleeneOptions {
            max_iter: 200,
            tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    /// `⊤, Φ(⊤), Φ²(⊤), …`
    pub iterates: Vec<FiberElement>,
    pub converged: bool,
    /// Number of lifting steps performed.
    pub iterations: usize,
    pub residual: f64,
}

fn residual(a: &FiberElement, b: &FiberElement) -> f64 {
    match (a, b) {
        (FiberElement::PMet1(x), FiberElement::PMet1(y)) => x.sup_distance(y),
        _ => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
    }
}

/// Iterates from `⊤` until exact stabilization (relations, predicates) or a
/// residual under `opts.tol` (pseudometrics). An exhausted budget returns the
/// last iterate flagged unconverged.
pub fn kleene_gfp(cfg: &SituationConfig, c: &Coalgebra, opts: KleeneOptions) -> Result<(FiberElement, ChainReport)> {
    let mut iterates = vec![top(cfg.fiber, c.size())];
    let mut converged = false;
    let mut res = 0.0;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let last = iterates.last().expect("chain starts at top");
        let next = lift_step(cfg, c, last)?;
        iterations += 1;
        res = residual(last, &next);
        let stable = match next {
            FiberElement::PMet1(_) => res < opts.tol,
            _ => res == 0.0,
        };
        iterates.push(next);
        if stable {
            converged = true;
            break;
        }
    }
    let result = iterates.last().cloned().expect("chain is nonempty");
    Ok((
        result,
        ChainReport {
            iterates,
            converged,
            iterations,
            residual: res,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostfixCertificate {
    /// `P ⊑ x*(B̄P)`
    pub is_postfixed: bool,
    /// Every post-fixed point lies below the greatest fixed point.
    pub implies_below_gfp: bool,
    /// `P ⊑ ν̂` against a supplied fixed-point estimate.
    pub below_computed_gfp: Option<bool>,
}

pub fn certify_postfixpoint(
    cfg: &SituationConfig,
    c: &Coalgebra,
    p: &FiberElement,
    gfp: Option<&FiberElement>,
) -> Result<PostfixCertificate> {
    if p.kind() != cfg.fiber {
        return Err(Error::KindMismatch {
            left: p.kind(),
            right: cfg.fiber,
        });
    }
    let is_postfixed = leq(p, &lift_step(cfg, c, p)?)?;
    let below_computed_gfp = match gfp {
        Some(nu) if is_postfixed => Some(leq(p, nu)?),
        _ => None,
    };
    Ok(PostfixCertificate {
        is_postfixed,
        implies_below_gfp: is_postfixed,
        below_computed_gfp,
    })
}

/// The first `n + 1` Kleene iterates.
pub fn stepwise_sequence(cfg: &SituationConfig, c: &Coalgebra, n: usize) -> Result<Vec<FiberElement>> {
    let mut out = vec![top(cfg.fiber, c.size())];
    for _ in 0..n {
        let next = lift_step(cfg, c, out.last().expect("nonempty"))?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{BehaviorValue, FunctorSpec, Leaf, ModalityDef, TruthObject};
    use crate::fibers::{bottom, Carrier, FiberKind, Partition};
    use crate::logic::Connective;
    use crate::rational::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn markov(rows: &[&[(usize, Rational)]]) -> Coalgebra {
        let next = rows
            .iter()
            .map(|row| BehaviorValue::dist(row.iter().map(|(t, w)| (BehaviorValue::Id(*t), *w)).collect()))
            .collect();
        Coalgebra::new(Carrier::new(rows.len()).unwrap(), FunctorSpec::dist(FunctorSpec::Id), next).unwrap()
    }

    fn kripke(succ: &[&[usize]]) -> Coalgebra {
        let next = succ
            .iter()
            .map(|ts| BehaviorValue::set(ts.iter().map(|t| BehaviorValue::Id(*t)).collect()))
            .collect();
        Coalgebra::new(Carrier::new(succ.len()).unwrap(), FunctorSpec::pow(FunctorSpec::Id), next).unwrap()
    }

    fn diamond() -> SituationConfig {
        SituationConfig {
            fiber: FiberKind::EqRel,
            functor: FunctorSpec::pow(FunctorSpec::Id),
            omega: TruthObject::Two,
            connectives: vec![Connective::Top, Connective::And],
            modalities: vec![ModalityDef::new("dia", vec![], Leaf::Diamond)],
            value_bound: None,
        }
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
    fn identical_rows_give_total_relation_at_once() {
        let c = kripke(&[&[0, 1], &[0, 1]]);
        let (nu, rep) = kleene_gfp(&diamond(), &c, KleeneOptions::default()).unwrap();
        assert_eq!(nu, top(FiberKind::EqRel, 2));
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn metric_chain_matches_longer_run() {
        // self-loop masses 1 and 1/2
        let c = markov(&[&[(0, r(1, 1))], &[(1, r(1, 2))]]);
        let (nu, rep) = kleene_gfp(&kmm(), &c, KleeneOptions::default()).unwrap();
        assert!(rep.converged);
        let long = stepwise_sequence(&kmm(), &c, 2 * rep.iterations).unwrap();
        let last = long.last().unwrap().as_metric().unwrap();
        assert!(nu.as_metric().unwrap().sup_distance(last) < 2e-7);
        // mass gap 1/2 at every step: d = 1/2 + d/2 · ... converges to 1
        assert!((last.get(0, 1) - 1.0).abs() < 1e-6, "{}", last.get(0, 1));
    }

    #[test]
    fn postfixpoint_examples() {
        let c = kripke(&[&[1], &[1], &[]]);
        let (nu, _) = kleene_gfp(&diamond(), &c, KleeneOptions::default()).unwrap();
        let cert = certify_postfixpoint(&diamond(), &c, &nu, Some(&nu)).unwrap();
        assert!(cert.is_postfixed && cert.implies_below_gfp);
        assert_eq!(cert.below_computed_gfp, Some(true));

        let discrete = bottom(FiberKind::EqRel, 3);
        assert!(certify_postfixpoint(&diamond(), &c, &discrete, None).unwrap().is_postfixed);

        let merged = FiberElement::EqRel(Partition::from_blocks(3, &[vec![0, 2], vec![1]]).unwrap());
        let cert = certify_postfixpoint(&diamond(), &c, &merged, Some(&nu)).unwrap();
        assert!(!cert.is_postfixed);
        assert_eq!(cert.below_computed_gfp, None);
    }

    #[test]
    fn stepwise_starts_at_top_and_decreases() {
        let c = kripke(&[&[1], &[2], &[]]);
        assert_eq!(stepwise_sequence(&diamond(), &c, 0).unwrap(), vec![top(FiberKind::EqRel, 3)]);
        let seq = stepwise_sequence(&diamond(), &c, 4).unwrap();
        for w in seq.windows(2) {
            assert!(leq(&w[1], &w[0]).unwrap());
        }
        assert_eq!(seq[3], bottom(FiberKind::EqRel, 3));
    }
}
