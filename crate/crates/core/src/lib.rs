pub mod bump;
pub mod dataset;
pub mod dual;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hexfloat;
pub mod interpolant;
pub mod model;
pub mod quadrature;
pub mod risk;
pub mod rkhs;
pub mod rng;
pub mod stats;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod book_geometry {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/bumps.md")]
pub mod book_bumps {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/interpolants.md")]
pub mod book_interpolants {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/model.md")]
pub mod book_model {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/kernels.md")]
pub mod book_kernels {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/risk.md")]
pub mod book_risk {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod book_experiments {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/acceptance.md")]
pub mod book_acceptance {}
