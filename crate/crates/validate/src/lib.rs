//! Hosts the `acceptance` test target, which runs every criterion of
//! [`odl::validation`] at full scale and prints one line per criterion.

pub use odl::validation::{run_suite, SuiteOptions};
