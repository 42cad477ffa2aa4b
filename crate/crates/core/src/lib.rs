//! Bipartite process matrices: operator algebra, validity, causal separability,
//! causal inequalities and uniform sampling.

pub mod basis;
pub mod causality;
pub mod conic;
pub mod error;
pub mod io;
pub mod linalg;
pub mod operator;
pub mod process;
pub mod sampler;
pub mod seesaw;

pub use error::{Error, Result};
pub use operator::{cj_from_kraus, max_entangled, HermitianOp, Pauli, PauliString, Subsystem};
