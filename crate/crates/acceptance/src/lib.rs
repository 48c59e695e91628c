//! Holds the `acceptance` test target. Run it with `cargo test -p natural-vqe-acceptance`.
