//! Command-line front end (placeholder while the library modules compile).

pub mod validate {}
