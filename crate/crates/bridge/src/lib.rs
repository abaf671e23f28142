//! Live simulation service.
//!
//! A dedicated thread owns the [`Session`] and steps it against the wall
//! clock. WebSocket clients at `/ws` send [`Command`]s, which reach that
//! thread through a bounded FIFO and are applied between control ticks, and
//! receive an [`Ack`] per message plus the telemetry broadcast.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{Ack, Command, Outbound, StreamFrame};
pub use server::{Bridge, BridgeError, ServeOptions};
pub use session::Session;
