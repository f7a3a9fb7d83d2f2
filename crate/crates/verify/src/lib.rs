//! Acceptance suite for the workspace. The library is empty; the suite is the
//! `acceptance` test target, which prints one PASS/FAIL line per criterion:
//!
//! ```text
//! cargo test -p twjscc-verify --test acceptance
//! ```
//!
//! It lives in its own package so that `cargo test --workspace` runs it after
//! every other test binary.
