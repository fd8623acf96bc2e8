//! The guide in `book/`, included chapter by chapter so `cargo test` runs
//! every Rust sample in it.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[doc = include_str!("../../../book/src/normalization.md")]
pub mod normalization {}

#[doc = include_str!("../../../book/src/potential-weights.md")]
pub mod potential_weights {}

#[doc = include_str!("../../../book/src/classifier.md")]
pub mod classifier {}

#[doc = include_str!("../../../book/src/runtime.md")]
pub mod runtime {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/zones.md")]
pub mod zones {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
