//! Exact-arithmetic engine for equivariant homology of unramified affine
//! Springer fibers.
//!
//! The crate builds finite presentations of the torus-equivariant homology of
//! affine Springer fibers in the affine Grassmannian and the affine flag
//! manifold, computes Tor against finite-order characters of the translation
//! lattice, applies the homological transfer factor of endoscopy, and checks
//! the resulting localized isomorphisms and orbital-integral trace identities
//! at small rank.  All arithmetic is exact, over cyclotomic extensions of the
//! rationals.

pub mod endoscopy;
pub mod exactfield;
pub mod laurent;
mod linalg;
pub mod momentgraph;
pub mod orbital;
pub mod polyalg;
pub mod presentation;
pub mod report;
pub mod rootdata;

pub use exactfield::{Cyclotomic, Rational};
pub use report::{CheckOutcome, VerificationReport};
