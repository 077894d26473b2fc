//! Numerical engine for consistent histories on finite-dimensional Hilbert
//! spaces.
//!
//! A history family pairs a time grid and unitary dynamics with one
//! resolution of the identity per time slot and a density state. From it
//! the crate builds chain operators, history probabilities, predictive and
//! retrodictive conditionals, and the decoherence functional, and checks
//! whether the family's probabilities are additive under coarse-graining.
//! A sequential-measurement simulator ([`oracle`]) recomputes the same
//! probabilities along an independent path.
//!
//! Everything is generic over the component type of the complex entries
//! (see [`Real`]); the aliases below fix it to `f64`.
//!
//! ```
//! use histories::{DensityState, DynamicsSchedule, DynamicsSpec, HistoryFamily, Resolution, TimeGrid};
//!
//! let grid = TimeGrid::new(vec![0.0, 1.0], 1).unwrap();
//! let schedule = DynamicsSchedule::new(grid, &DynamicsSpec::trivial(2), 0, 1e-10).unwrap();
//! let z = Resolution::computational(2);
//! let family = HistoryFamily::new(schedule, vec![z.clone(), z], DensityState::maximally_mixed(2)).unwrap();
//! let total: f64 = family
//!     .all_fine_histories(16)
//!     .unwrap()
//!     .iter()
//!     .map(|h| family.history_probability(h).unwrap())
//!     .sum();
//! assert!((total - 1.0).abs() < 1e-12);
//! ```

pub mod consistency;
pub mod dynamics;
pub mod error;
pub mod history;
pub mod operator;
pub mod oracle;
pub mod random;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use history::{History, HistoryUnion};
pub use scalar::Real;
pub use spectral::{Intersection, Outcome, Partition, SpectralLabel};

/// Complex number with `f64` components.
pub type Complex64 = nalgebra::Complex<f64>;

pub type ComplexMatrix = operator::ComplexMatrix<f64>;
pub type DensityState = operator::DensityState<f64>;
pub type Projector = operator::Projector<f64>;
pub type Resolution = spectral::Resolution<f64>;
pub type TimeGrid = dynamics::TimeGrid<f64>;
pub type DynamicsSpec = dynamics::DynamicsSpec<f64>;
pub type DynamicsSchedule = dynamics::DynamicsSchedule<f64>;
pub type HistoryFamily = history::HistoryFamily<f64>;
pub type DecoherenceFunctional = history::DecoherenceFunctional<f64>;
pub type ConsistencyReport = consistency::ConsistencyReport<f64>;
pub type MeasurementTrace = oracle::MeasurementTrace<f64>;
