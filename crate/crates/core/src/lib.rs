//! Loop-series and polymer-expansion corrections to the Bethe free energy of
//! regular LDPC codes used over a binary symmetric channel.
//!
//! The crate is organised bottom-up:
//!
//! - [`tanner`]: biregular Tanner graphs, GF(2) algebra, expansion checks, alist I/O.
//! - [`channel`]: BSC realizations and half-log-likelihood fields.
//! - [`bp`]: belief-propagation fixed points.
//! - [`bethe`]: the Bethe free energy of a message set.
//! - [`exact`]: brute-force partition functions and conditional entropies.
//! - [`loops`]: generalized loops, their activities and the loop series.
//! - [`polymer`]: polymer decomposition, activity bounds, Mayer expansion.
//! - [`harness`]: ensemble experiments and result emission behind the CLI.
//!
//! All logarithms are natural logarithms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bethe;
pub mod bp;
pub mod channel;
pub mod error;
pub mod exact;
pub mod harness;
pub mod loops;
pub mod polymer;
pub mod tanner;

pub use error::{Error, Result};
pub use tanner::TannerGraph;
