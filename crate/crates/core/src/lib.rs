//! Diffusion auctions on social networks.
//!
//! A seller reaches only its direct neighbors; everyone else learns of the
//! sale when some buyer forwards it. Buyers report a valuation vector and
//! the set of neighbors they forwarded to, and the mechanisms here must
//! make both reports truthful.
//!
//! - [`graph`] builds the aligned path graph that orders informed buyers.
//! - [`mechanisms`] holds alpha-APG, GAPG, its unit-demand top-k variant
//!   and revised GIDM on trees.
//! - [`analysis`] measures welfare, revenue and budget balance.
//! - [`verifier`] audits incentives by brute force over finite deviation
//!   grids and generates instance corpora.

pub mod analysis;
pub mod graph;
pub mod mechanisms;
pub mod model;
pub mod value;
pub mod verifier;

pub use graph::{build_apg, close_far_split, diffusion_distances, informed_set, AlignedPath, GraphError};
pub use mechanisms::{Demand, Mechanism, MechanismError};
pub use model::{AuctionInstance, BuyerId, BuyerType, ModelError, Outcome};
pub use value::{format_value, parse_value, Value};
