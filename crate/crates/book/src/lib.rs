//! Chapters of the book, compiled so that `cargo test --doc` runs their
//! code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/errors.md")]
pub mod errors {}
#[doc = include_str!("../../../book/src/rig.md")]
pub mod rig {}
#[doc = include_str!("../../../book/src/simulation.md")]
pub mod simulation {}
#[doc = include_str!("../../../book/src/control.md")]
pub mod control {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
