//! The guide's chapters, compiled as doc comments so `cargo test --doc`
//! runs every Rust listing in the book.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/deformation.md")]
pub mod deformation {}
#[doc = include_str!("src/features.md")]
pub mod features {}
#[doc = include_str!("src/learning.md")]
pub mod learning {}
#[doc = include_str!("src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("src/service.md")]
pub mod service {}
