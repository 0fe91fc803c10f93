//! Elementary upper and lower bounds for Chebyshev's ψ(x) by Sylvester's
//! iteration over Möbius surrogates.
//!
//! The pipeline is [`Scheme`] → [`EProfile`] → [`TermSelection`] on each side
//! → [`AffineRecurrence`] → fixed point. [`sweep`] scans the selection
//! threshold and [`verify`] checks everything against sieved ψ.

pub mod error;
pub mod iteration;
pub mod kernel;
pub mod profile;
pub mod rational;
pub mod registry;
pub mod scheme;
pub mod selection;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use iteration::{
    build_recurrence, convergence, fixed_point, hybrid_recurrence, iterate, AffineRecurrence, Convergence,
    IterationResult, TraceRow,
};
pub use kernel::{build_sieve, SieveTables};
pub use profile::{base_bounds, e_profile, BaseBounds, EProfile, ProfileMetrics};
pub use rational::Rational;
pub use registry::{builtin, builtins, resolve};
pub use scheme::{parse_scheme, Scheme};
pub use selection::{
    select_terms, selection_coefficients, selection_step_function, Matching, Pair, SelectOptions, Side, TermSelection,
};
pub use sweep::{optimize_rho, sweep_rho, RhoOptimum, SweepRow};
pub use verify::VerificationReport;
