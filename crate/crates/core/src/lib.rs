//! Fuglede–Kadison determinants of integral group-ring elements over
//! amenable groups, computed by Følner truncation, lattice indices, trace
//! series and torus quadrature, together with finite-group entropy and
//! expansiveness certificates.

pub mod config;
pub mod determinant;
pub mod error;
pub mod expansive;
pub mod experiment;
pub mod finite_entropy;
pub mod group;
pub mod group_ring;
pub mod linalg;
pub mod mahler;
pub mod snf;
pub mod truncation;

pub use error::{Error, Result};
pub use group::{FoelnerSequence, FoelnerSet, GeneratingSet, GroupElement, GroupSpec};
pub use group_ring::{Coefficient, FloatElement, GroupRingElement, IntElement, RationalElement};
