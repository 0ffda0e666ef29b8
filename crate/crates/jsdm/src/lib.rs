//! Joint spatial division and multiplexing (JSDM) for large-array multiuser
//! MIMO downlink.
//!
//! The crate covers the full chain from channel statistics to spectral
//! efficiency:
//!
//! * [`geometry`]: array layouts, one-ring covariances, channel draws.
//! * [`spectrum`]: Toeplitz spectral densities, circulant approximation and
//!   DFT index selection for uniform linear arrays.
//! * [`prebeam`]: eigen, approximate block-diagonalization and DFT
//!   pre-beamforming.
//! * [`precoding`]: RZF/ZF second-stage precoders and exact SINR evaluation.
//! * [`training`]: downlink pilots, MMSE estimation and net rates.
//! * [`deteq`]: fixed-point deterministic equivalents of the SINR.
//! * [`capacity`]: the determinant identity behind per-group processing.
//! * [`layout3d`]: annular-region layouts for rectangular arrays with
//!   vertical beamforming and fairness scheduling.

pub mod error;
pub mod linalg;
pub mod quad;
pub mod geometry;
pub mod spectrum;
pub mod prebeam;
pub mod precoding;
pub mod training;
pub mod deteq;
pub mod capacity;
pub mod layout3d;

pub use error::{JsdmError, Result};
