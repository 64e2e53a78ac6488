//! Poisson cellular networks with step-pattern beams: path-loss models,
//! fading, antenna scaling, drops and the SINR kernel, and the dense-network
//! limit of the mean SINR.

pub mod asymptotics;
pub mod antenna;
pub mod fading;
pub mod geometry;
pub mod pathloss;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod stats;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pathloss.md")]
    mod pathloss {}
    #[doc = include_str!("../../../book/src/antennas.md")]
    mod antennas {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/limit.md")]
    mod limit {}
    #[doc = include_str!("../../../book/src/streams.md")]
    mod streams {}
}
