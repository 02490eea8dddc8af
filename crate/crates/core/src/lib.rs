//! Amplitude-modulated extended pi pulses for dynamical decoupling of an
//! NV electron spin coupled to nuclear spins.

pub mod cli;
pub mod dynamics;
pub mod energy;
pub mod interp;
pub mod pulse_shape;
pub mod quadrature;
pub mod sequence;
pub mod spin_model;
