//! Equilibrium solvers for ride-sourcing markets in which several platforms
//! compete, with and without a third-party integrator that pools their idle
//! vehicles.

// `!(a > b)` is deliberate throughout: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod demand;
pub mod error;
mod fixed_fare;
pub mod fragmented;
pub mod integrated;
pub mod market;
pub mod matching;
pub mod mixed;
mod numeric;
pub mod oracle;
pub mod sweep;

pub use error::{Error, Result};
pub use market::{Flag, Market, MarketMetrics, RootPolicy};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/demand.md")]
    mod demand {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/fragmented.md")]
    mod fragmented {}
    #[doc = include_str!("../../../book/src/integrated.md")]
    mod integrated {}
    #[doc = include_str!("../../../book/src/mixed.md")]
    mod mixed {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
