//! Bound, subradiant multi-excitation dynamics in a chirally coupled atomic array.
//!
//! The crate enumerates the `M`-excitation basis of an `N`-site chain
//! ([`basis`]), assembles the nonreciprocal kernel `V` ([`kernel`]),
//! propagates amplitudes under `da/dt = V a` ([`dynamics`]), evaluates
//! populations, correlations, entropies and routing times ([`observables`]),
//! and checks everything against a full master-equation engine for small
//! arrays ([`oracle`]). [`runner`] ties it together behind a TOML
//! configuration ([`config`]) and the `chiral-array` binary, with SVG
//! output from [`figures`].

pub mod basis;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod observables;
pub mod oracle;
pub mod runner;

pub use error::{Error, Result};
