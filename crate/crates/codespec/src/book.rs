//! Compiles every code sample in the guide (`book/`) as a doc-test, so the
//! book can never drift out of sync with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/spectra.md")]
mod spectra {}

#[doc = include_str!("../../../book/src/projections.md")]
mod projections {}

#[doc = include_str!("../../../book/src/capacity.md")]
mod capacity {}

#[doc = include_str!("../../../book/src/cascades.md")]
mod cascades {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}
