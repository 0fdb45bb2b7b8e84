//! Std companion to the core crate: audio and feature file formats,
//! checkpointing, corpus construction and the command-line driver.

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod error;
pub mod ftr;
pub mod gradcheck;
pub mod manifest;
pub mod wav;
