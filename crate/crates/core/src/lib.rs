//! Detection core for suspected fake-star campaigns in repository event
//! streams: the low-activity and lockstep signatures, campaign
//! postprocessing, synthetic evaluation traffic and the downstream
//! measurement and panel-regression analyses.
//!
//! The crate is `no_std` (with `alloc`); reading archives, file formats and
//! the command line live in the `fakestar` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod campaigns;
pub mod econo;
pub mod enrich;
pub mod error;
pub mod events;
pub mod lockstep;
pub mod lowactivity;
pub mod measure;
pub mod pipeline;
pub mod synth;
pub mod time;

pub use error::{Error, Result, TimeError};
