//! Holds the acceptance suite (`tests/acceptance.rs`) for `chiral-array`.
//!
//! It is a separate workspace member so that `cargo test --workspace` runs it
//! after all of the library's own test targets.
