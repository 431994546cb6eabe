//! Simulation and control toolkit for a six-coordinate knuckle boom crane.
//!
//! * [`model`]: parameters, kinematics, energies.
//! * [`dynamics`]: `M`, `C`, `g`, `F`, forward dynamics and an independent
//!   Euler–Lagrange oracle.
//! * [`control`]: energy-based anti-sway controller, Lyapunov function, and
//!   an LQR baseline from numerical linearization.
//! * [`sim`]: fixed-step integration, trajectories and metrics.
//! * [`validation`]: structural property checks of a [`dynamics::CraneModel`].
//! * [`cli`]: configuration files, commands and CSV output.

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod model;
pub mod sim;
pub mod validation;
