//! Six-vertex, Ashkin-Teller and generalized random-cluster models on small
//! square-lattice domains.

pub mod ashkinteller;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod events;
pub mod grcm;
pub mod io;
pub mod lattice;
pub mod loops;
pub mod monotone;
pub mod oracle;
pub mod regression;
pub mod sampler;
pub mod sixvertex;

pub use error::{Error, Result};
