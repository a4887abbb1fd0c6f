//! Explicit sequences: the triangular T-sequence, integer sequences given by
//! simple residue rules, and the approximate circle interleaving demo.

mod rules;
mod tb;
pub mod triangular;

use thiserror::Error;

use crate::group::GroupError;
use crate::tseq::SeqError;

pub use rules::{circle_membership, CircleReport, CircleVerdict, IntegerRuleSeq, ResidueSeqRule};
pub use tb::{tb_interleave_demo, DensityFlag, Target, TbReport};
pub use triangular::{Case, HSpec, Hypothesis, TableReport, TriangularParams};

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no cycle detected: {0}")]
    NoCycleDetected(String),
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Group(#[from] GroupError),
}
