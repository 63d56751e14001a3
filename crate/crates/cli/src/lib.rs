//! Command-line front end: run configuration, method dispatch, CSV and
//! metadata output, and the parallel ensemble driver.

pub mod config;
pub mod output;
pub mod runner;
pub mod table_cache;
