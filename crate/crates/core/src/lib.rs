//! Entropy and divergence computations on spin factors.
//!
//! The state space of the spin factor `JSpin_d` is a Hilbert ball. This crate
//! provides the algebra itself ([`spin`]), a matrix embedding used as an
//! independent oracle ([`oracle`]), affine channels on the ball
//! ([`channels`]), trace-form Bregman divergences ([`divergence`]),
//! monotonicity analysis ([`monotonicity`]) and minimax-regret capacity
//! solvers ([`capacity`]).

pub mod capacity;
pub mod channels;
pub mod divergence;
pub mod error;
pub mod monotonicity;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod spin;
pub mod verify;

pub use channels::{Channel, RecoveryMap};
pub use divergence::Generator;
pub use error::{Error, Result};
pub use spin::{SpinElement, State};
