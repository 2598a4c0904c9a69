//! Shot boundary detection toolkit.
//!
//! The pipeline reads frames ([`frameio`]), computes frame-difference
//! features ([`metrics`]), classifies frames with boosted trees or threshold
//! baselines ([`classify`], [`train`]) and scores detections against ground
//! truth ([`evaluate`]). [`synthkit`] generates test video with known
//! transitions and [`dataprep`] builds annotation sets from detector output
//! and observer votes.

pub mod classify;
pub mod dataprep;
pub mod evaluate;
pub mod events;
pub mod frameio;
pub mod metrics;
pub mod pipeline;
pub mod synthkit;
pub mod train;
