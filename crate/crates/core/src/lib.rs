//! Exact computations on countable abelian groups presented as direct sums of
//! cyclic blocks: T-sequence construction and bounded verification, von Neumann
//! radicals via character duality, and the structural decompositions used to
//! put a group into block form.

pub mod constructions;
pub mod decompose;
pub mod duality;
pub mod group;
pub mod radical;
pub mod tseq;
pub mod zlattice;

pub use group::{
    Block, BlockGroup, Card, Coeff, Coord, CyclicOrder, Element, Extent, GroupError, Leading,
    Order, TailRule,
};
pub use zlattice::{IntMatrix, IntScalar, Matrix, SmallMatrix};
