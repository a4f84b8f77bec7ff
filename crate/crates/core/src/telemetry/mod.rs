//! Live telemetry: devices stream samples in, viewers receive swings out.

mod client;
mod outbox;
mod server;
mod wire;

pub use client::Connection;
pub use outbox::Outbox;
pub use server::{ServerConfig, ServerHandle, TelemetryError, TelemetryServer, DEFAULT_VIEWER_QUEUE, SWING_LOG};
pub use wire::{valid_session_id, ErrorCode, Role, SessionPhase, WireMessage};
