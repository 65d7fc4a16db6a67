//! Rauzy-Veech-Zorich induction on interval exchange transformations.
//!
//! The crate is organized bottom-up:
//!
//! - [`combinatorics`]: permutations, the Rauzy operations and Rauzy classes;
//! - [`cocycle`]: renormalization matrices over big integers;
//! - [`induction`]: the Rauzy-Veech step, the Zorich acceleration and the
//!   Hilbert metric, with exact-rational and floating-point backends;
//! - [`symbolic`]: letters, admissible words, coding prefixes and cylinders;
//! - [`zippered`]: Veech's zippered rectangles and the Teichmüller flow;
//! - [`experiments`]: Monte-Carlo estimators for correlation decay, return
//!   time tails and the cocycle growth comparisons.

pub mod cocycle;
pub mod combinatorics;
pub mod error;
pub mod experiments;
pub mod induction;
pub mod symbolic;
pub mod zippered;

pub use cocycle::RenormMatrix;
pub use combinatorics::{rauzy_class, Op, Permutation, RauzyClass};
pub use error::{Error, Result};
pub use induction::{
    Backend, ExactPoint, FloatPoint, IetPoint, Length, Orbit, Side, StepRecord, DEFAULT_CAP,
};
pub use experiments::{CorrelationSeries, ObservableSpec, ReturnRecord};
pub use symbolic::{Letter, Word};
pub use zippered::ZipperedRectangle;
