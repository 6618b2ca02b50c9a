//! Canonical-metric invariants of Fano horospherical manifolds.
//!
//! A problem is a root datum with a parabolic plus a moment polytope
//! ([`problem::HorosphericalProblem`]). From it the crate computes the
//! Duistermaat–Heckman volume and barycenter, the Kähler–Einstein test, the
//! soliton vector, the greatest Ricci lower bound and, in rank one, the
//! continuity path of the reduced Monge–Ampère equation. The guide in
//! `book/` walks through the conventions.
//!
//! ```
//! use horofano::polytope::Polytope;
//! use horofano::problem::HorosphericalProblem;
//! use horofano::rational::{frac, qvec};
//! use horofano::ricci_bound::greatest_ricci_lower_bound;
//!
//! let hp = HorosphericalProblem::toric(Polytope::from_vertices(vec![qvec(&[-1]), qvec(&[4])]).unwrap()).unwrap();
//! assert_eq!(greatest_ricci_lower_bound(&hp).unwrap().t_infinity, frac(2, 5));
//! ```

pub mod dh_integral;
pub mod error;
pub mod frame;
pub mod io;
pub mod ma_continuity;
pub mod polytope;
pub mod problem;
pub mod quadrature;
pub mod rational;
pub mod ricci_bound;
pub mod root_system;
pub mod soliton;

pub use error::{Error, Result};

/// The guide's code blocks, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/root_data.md")]
    mod root_data {}
    #[doc = include_str!("../../../book/src/polytopes.md")]
    mod polytopes {}
    #[doc = include_str!("../../../book/src/integrals.md")]
    mod integrals {}
    #[doc = include_str!("../../../book/src/soliton.md")]
    mod soliton {}
    #[doc = include_str!("../../../book/src/ricci_bound.md")]
    mod ricci_bound {}
    #[doc = include_str!("../../../book/src/continuity.md")]
    mod continuity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
