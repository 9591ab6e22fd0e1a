//! Batch CLI and interactive edit service for Gaussian splat deformation.

pub mod cli;
pub mod frame;
pub mod protocol;
pub mod server;
pub mod session;

pub use frame::UpdateFrame;
pub use protocol::{parse_message, ClientMessage, ErrorCode, ServerMessage};
pub use session::{Reply, Session};

/// Thread cap from the `GSD_THREADS` value; `None` leaves the default.
pub fn parse_thread_cap(value: Option<&str>) -> Result<Option<usize>, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("GSD_THREADS must be a positive integer, got `{v}`")),
            Ok(n) => Ok(Some(n)),
        },
    }
}

/// Applies `GSD_THREADS` to the global solver thread pool. Call once at startup.
pub fn configure_threads() -> Result<(), String> {
    let value = std::env::var("GSD_THREADS").ok();
    if let Some(n) = parse_thread_cap(value.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}
