//! Spreading speeds of the three-species competition-diffusion system
//!
//! ```text
//! u1_t = d1 u1_xx + r1 u1 (1 - u1 - a12 u2 - a13 u3)
//! u2_t =    u2_xx +    u2 (1 - a21 u1 - u2 - a23 u3)
//! u3_t = d3 u3_xx + r3 u3 (1 - a31 u1 - a32 u2 - u3)
//! ```
//!
//! computed three ways: explicit formulas ([`closed_form`], [`model`]),
//! solutions of an obstacle Hamilton-Jacobi variational inequality in speed
//! space ([`hj_speed`]), and direct simulation with front tracking
//! ([`pde_sim`], [`front_metrics`]).

pub mod closed_form;
pub mod error;
pub mod front_metrics;
pub mod hj_speed;
pub mod model;
pub mod pde_sim;

pub use error::{Error, Result};
