//! Region-based diffusion on hypergraphs of variables.

pub mod check;
pub mod complex;
pub mod diffusion;
pub mod energy;
pub mod error;
pub mod fixtures;
pub mod hypergraph;
pub mod interaction;
pub mod model;
pub mod oracle;
pub mod tensor;
pub mod transforms;

pub use complex::{Complex, DensityField, Field};
pub use error::{Error, Result};
pub use hypergraph::{Chain, Hypergraph, Region};
pub use tensor::{Belief, Domain, Observable, Shape, Tensor};
