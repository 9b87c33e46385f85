//! Transition path time distributions and time-averaged weak values for a
//! Gaussian coherent state scattering off a 1D square barrier.
//!
//! * [`model`]: units, coherent state, square-barrier amplitudes.
//! * [`propagator`]: `⟨x|Ψ_t⟩`, `⟨x|Ĥ|Ψ_t⟩`, `∂ₓ⟨x|Ψ_t⟩` by momentum quadrature.
//! * [`tptd`]: `P(t;x)`, its moments and the arrival-time momentum.
//! * [`weak`]: weak momentum and energy series, time averages, uncertainty relations.
//! * [`steepest`]: steepest-descent closed forms used as overlays.
//! * [`harness`]: JSON experiment configs, CSV/JSON artifacts and the CLI commands.

pub mod controls;
pub mod error;
pub mod harness;
pub mod model;
pub mod propagator;
pub mod quadrature;
pub mod steepest;
pub mod tptd;
pub mod weak;

pub use controls::GridControls;
pub use error::{Error, Result};
pub use model::{Amplitude, CoherentState, PhysicalParams, SquareBarrier, System};
pub use propagator::{MomentumGrid, PostSelection, Propagator};
pub use steepest::SdConfig;
pub use tptd::{ArrivalMomentum, TimeGrid, TptDistribution};
pub use weak::{Analysis, MomentSummary, WeakValueSeries};
