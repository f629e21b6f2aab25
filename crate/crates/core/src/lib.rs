//! Heteroclinic travelling waves `(U, c)` of gradient diffusion systems
//! `u_t = u_zz - ∇W(u)`.
//!
//! A wave solves `U'' + c U' = ∇W(U)` with `U(-∞) = a⁻`, `U(+∞) = a⁺`, where
//! `W(a⁻) < 0 = W(a⁺)`. The crate finds it variationally: for each trial
//! speed `c` it minimizes the weighted action
//!
//! ```text
//! E_c(U) = ∫ { ½|U_x|² + W(U) } e^{cx} dx
//! ```
//!
//! over profiles confined to cylinders `|U - a∓| ≤ r0` beyond `∓L`, and
//! bisects on the sign of the minimum. The speed is the supremum of the
//! speeds with negative constrained minimum, and the wave at that speed has
//! zero action.
//!
//! Module map:
//!
//! * [`potential`]: potentials, transforms and geometric probes.
//! * [`grid`], [`action`]: truncated grid, profiles and the discrete action.
//! * [`constrained`]: projected descent over the cylinder constraint set.
//! * [`speed`]: speed bracket, bisection and uniqueness identity.
//! * [`diagnostics`]: energy identities and structure checks on a wave.
//! * [`semiflow`]: parabolic evolution and front-speed measurement.
//! * [`run`]: configuration, orchestration, reports and plots.

pub mod action;
pub mod constrained;
pub mod diagnostics;
mod error;
pub mod grid;
pub mod potential;
pub mod run;
pub mod semiflow;
pub mod speed;

pub use error::{Error, Result};
