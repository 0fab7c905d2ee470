//! Dense simulation of the CHRS, CHRS− and Swap state-oracle models.
//!
//! The crate covers the exact linear algebra (`hilbert`), the oracle models
//! (`oracles`), the translations between them (`constructions`), type-vector
//! states (`typestates`), the game and LOCC harness (`games`) and the OWSG
//! and barrier experiments (`attacks`). Everything runs at desk-scale
//! dimensions so identities can be checked exactly.

#![forbid(unsafe_code)]

pub mod attacks;
pub mod constructions;
pub mod error;
pub mod games;
pub mod hilbert;
pub mod oracles;
pub mod stats;
pub mod typestates;

pub use error::{Error, Result};
pub use hilbert::{
    BinomialSample, CMat, CVec, DensityOperator, PureState, RegisterLayout, SparseOperator,
    SparseVec, StateVector, C64,
};
pub use oracles::{EmbeddedState, OracleKind, OracleModel, StateDistribution};
