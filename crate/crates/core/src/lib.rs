//! Wide-band spectrum sensing and narrow-band modulation classification.
//!
//! The processing chain is: synthesise a sparse wide-band scene
//! ([`scene`]), pre-filter and compress it ([`frontend`]), recover the
//! spectrum by ℓ1 minimisation ([`recovery`]), segment the recovered PSD into
//! per-emitter features ([`features`]) and classify each emitter's modulation
//! ([`classify`]). [`bench`] runs the whole chain as Monte Carlo sweeps.

pub mod bench;
pub mod classify;
pub mod error;
pub mod features;
pub mod frontend;
pub mod io;
pub mod recovery;
pub mod scene;
pub mod seed;

pub use error::{Error, Result};
