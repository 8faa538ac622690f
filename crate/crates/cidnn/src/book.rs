//! Runs the book's code blocks as doctests so the guide and the library
//! cannot drift apart. Compiled only under `cargo test --doc`.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/signals.md")]
mod signals {}

#[doc = include_str!("../../../book/src/levels.md")]
mod levels {}

#[doc = include_str!("../../../book/src/network.md")]
mod network {}

#[doc = include_str!("../../../book/src/training.md")]
mod training {}

#[doc = include_str!("../../../book/src/staging.md")]
mod staging {}

#[doc = include_str!("../../../book/src/classical.md")]
mod classical {}

#[doc = include_str!("../../../book/src/metrics.md")]
mod metrics {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
