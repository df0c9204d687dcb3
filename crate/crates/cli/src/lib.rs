//! HTTP service, remote backend and command-line front end for varapps.

pub mod commands;
pub mod protocol;
pub mod remote;
pub mod server;

pub use protocol::PROTOCOL_VERSION;
