//! Density evolution and finite-length simulation for belief-propagation
//! decoding of LDPC codes with saturated (magnitude-clipped) messages.
//!
//! The crate is organized around a small set of building blocks:
//!
//! - [`density`]: quantized L-densities, the variable- and check-node
//!   convolutions, functionals (Bhattacharyya, entropy, error probability),
//!   the |D|-domain, Wasserstein distance and the degradation order.
//! - [`channel`]: BEC / BSC / biAWGN channel families ordered by degradation,
//!   parameterized by their natural scalar or by entropy.
//! - [`ensemble`]: degree distributions and their action on densities.
//! - [`saturation`]: hard, symmetric and two-tier saturation operators plus
//!   the mixture decomposition they induce.
//! - [`de`]: the density-evolution recursions for plain and saturated
//!   decoding, threshold search, and the perturbation bounds relating them.
//! - [`stability`]: the machinery classifying convergence near the perfect
//!   decoding fixed point: support recursions, near-stability windows,
//!   mixture bound recursions, the three-message erasure decoder and the
//!   check-node Bhattacharyya inequalities.
//! - [`graph`]: finite-length Tanner-graph decoding and Monte Carlo
//!   simulation to cross-validate the asymptotic predictions.
//! - [`cli`]: the `satde` command-line surface binding everything together.
//!
//! See the `examples/` directory for a runnable tour of each capability.

pub mod channel;
pub mod cli;
pub mod de;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod grid;
pub mod saturation;
pub mod stability;

pub use channel::{Channel, ChannelKind};
pub use de::{CheckRule, DeMode, DeTrace, DeVariant, StopRule};
pub use density::{AbsDCdf, Density, Functionals};
pub use ensemble::DegreeDistribution;
pub use error::{Error, Result};
pub use graph::{DecoderConfig, TannerGraph};
pub use grid::Grid;
pub use saturation::{Mixture, SaturationConfig};
