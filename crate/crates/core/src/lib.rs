//! Numerical laboratory for smoothness of operators under the conjugation
//! action of the Heisenberg group.
//!
//! The Hilbert space L²(ℝⁿ) is replaced by lattice functions on a torus; the
//! group acts by FFT translations, modulations and central phases. On top of
//! that sit Schatten norms and commutators ([`operator`]), orbit-map
//! regularity ([`orbit`]), commutator growth studies ([`criterion`]), group
//! averaging ([`garding`]) and a discrete Weyl calculus ([`weyl`]).

pub mod context;
pub mod criterion;
pub mod error;
pub mod fit;
pub mod garding;
pub mod grid;
pub mod heisenberg;
pub mod io;
pub mod operator;
pub mod orbit;
pub mod suite;
pub mod verdict;
pub mod weyl;
pub mod window;

pub use error::{LabError, Result};
pub use grid::{GridSpec, LengthRule};
pub use heisenberg::{
    build_generators, build_momentum, build_position, conj_action, heisenberg_inv, heisenberg_mul,
    rho_unitary, GeneratorKind, GeneratorSet, HeisenbergElement, Schrodinger,
};
pub use operator::{
    commutator, duality_pairing, iterated_commutator, schatten_norm, CommutatorWord, Operator,
    SchattenIndex,
};
pub use num_complex::Complex64 as C64;
