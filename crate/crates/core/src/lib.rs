//! Saddlepoint expansions for conditional expectations of sample means,
//! with applications to VaR/CVaR contributions, delta-gamma sensitivities
//! and option vegas, plus a seeded Monte Carlo oracle.

// `!(x < y)` is used on purpose so that NaN fails validation; small fixed-size
// tensor loops read better with indices; quadrature tables keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod cgf;
pub mod classical;
pub mod condexp;
pub mod error;
pub mod greeks;
pub mod oracle;
pub mod risk;
pub mod saddle;
pub mod special;

pub use error::{Error, Result};
