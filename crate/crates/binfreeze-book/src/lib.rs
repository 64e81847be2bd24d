//! Runs the book through the compiler.
//!
//! Each chapter of `book/src/` is attached to an empty module as its doc
//! comment, so `cargo test -p binfreeze-book --doc` compiles and executes
//! every Rust snippet in the guide. A chapter that drifts from the library
//! API fails the build, and the failing module name points at the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/tensors-and-tape.md")]
pub mod tensors_and_tape {}

#[doc = include_str!("../../../book/src/masked-binarization.md")]
pub mod masked_binarization {}

#[doc = include_str!("../../../book/src/schedules-and-refresh.md")]
pub mod schedules_and_refresh {}

#[doc = include_str!("../../../book/src/layerwise-progression.md")]
pub mod layerwise_progression {}

#[doc = include_str!("../../../book/src/models-and-precision.md")]
pub mod models_and_precision {}

#[doc = include_str!("../../../book/src/training-and-metrics.md")]
pub mod training_and_metrics {}

#[doc = include_str!("../../../book/src/cli-and-formats.md")]
pub mod cli_and_formats {}
