//! Desk-scale O-RAN closed control loop.
//!
//! The pieces fit together the way a small O-RAN deployment does: one or more
//! simulated sliced base stations ([`ransim`]) speak a framed control protocol
//! ([`e2lite`]) to a near-RT RIC ([`ric`]), which hosts xApps ([`xapp`]) whose
//! decision logic lives in [`agent`]. The [`harness`] wires everything onto a
//! deterministic simulated clock (or TCP) and runs the experiment catalog.

pub mod agent;
pub mod e2lite;
pub mod harness;
pub mod ransim;
pub mod ric;
pub mod xapp;
