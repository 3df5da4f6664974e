//! HTTP service, session store and command-line front end.

pub mod api;
pub mod cli;
pub mod config;
pub mod store;
