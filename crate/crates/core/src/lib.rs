pub mod density;
pub mod error;
pub mod kernel;
pub mod numerics;
pub mod rng;
pub mod sample;
pub mod band;
pub mod deconv;
pub mod regression;
pub mod modes;
pub mod modal;
pub mod markov;
pub mod simulate;
pub mod io;
pub mod cli;
