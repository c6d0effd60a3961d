//! Day-ahead planning and real-time control of a PV plant firmed by a
//! battery under an engagement-based tariff, with the sizing study built
//! on top of them.

pub mod domain;
mod error;
pub mod io;
pub mod optim;
pub mod controller;
pub mod planner;
pub mod pvusa;
pub mod scenarios;
pub mod sim;
pub mod sizing;

pub use error::{Error, Result};
