//! Holds the `acceptance` test target. Run it with
//! `cargo test -p fishloc-verify --test acceptance`.
