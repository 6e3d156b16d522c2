//! Codensity bisimilarity for finite coalgebras: fibers of predicates,
//! relations and pseudometrics, behavior functors and modalities,
//! quantitative modal logics, lifting and fixed-point computation,
//! expressivity checks, and the bisimilarity game.

pub mod bank;
pub mod behavior;
pub mod codensity;
pub mod error;
pub mod expressivity;
pub mod fibers;
pub mod fixpoint;
pub mod fuzz;
pub mod game;
pub mod instances;
pub mod logic;
pub mod rational;

pub use behavior::{BehaviorValue, Coalgebra, FunctorSpec, Leaf, ModalityDef, OmegaValue, Selector, TruthObject};
pub use error::{Error, Result};
pub use fibers::{Carrier, FiberElement, FiberKind, Partition, PseudoMetric};
pub use logic::{Connective, Formula, GenerationCaps, SemanticsVector, SituationConfig};
pub use rational::Rational;
pub use expressivity::{CheckOptions, ExpressivityReport, ObservationSet};
pub use fixpoint::{ChainReport, KleeneOptions};
pub use game::{Game, GamePosition, Move, Outcome, PlayRecord, Player};
