//! Network boundary of the matching engine: a TCP service accepting
//! sessions that carry both channel recordings as length-prefixed frames,
//! plus the matching client.

pub mod client;
pub mod error;
pub mod protocol;
pub mod server;

pub use client::{client_match, ClientOptions};
pub use error::{GatewayError, Result};
pub use server::{serve, Server, ServerConfig, WireReport};
