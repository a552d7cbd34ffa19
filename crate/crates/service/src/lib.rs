//! Patient record store for obsolete-observation updates.
//!
//! A [`Store`] keeps one observation set per patient. Each new observation
//! is checked against the stored ones; a consistent observation is stored
//! at once, a contradictory one opens an [`UpdateSession`] holding the
//! recommendation tree until a reviewer commits keep, replace or delete
//! decisions. [`http::router`] puts the store behind a JSON API.
//!
//! ```no_run
//! # async fn run() -> Result<(), Box<dyn std::error::Error>> {
//! let config = oius_service::Config::load(None)?;
//! oius_service::serve(config).await?;
//! # Ok(())
//! # }
//! ```

pub mod config;
pub mod error;
pub mod http;
pub mod store;
mod wal;

use std::sync::Arc;

pub use config::Config;
pub use error::{ServiceError, AND_PROPOSITION, OR_PROPOSITION};
pub use store::{
    AuditAction, AuditEntry, CommitOutcome, Decision, PatientRecord, ReplayError, SessionState, Store, SweepFinding,
    UpdateSession,
};

impl Store {
    /// Opens the configured network and log.
    pub fn from_config(config: &Config) -> Result<Self, ServiceError> {
        Store::open(config.load_network()?, config.epsilon, &config.storage)
    }
}

/// Serves the API until Ctrl-C.
pub async fn serve(config: Config) -> Result<(), ServiceError> {
    let store = Arc::new(Store::from_config(&config)?);
    let app = http::router(store, config.network.clone(), config.api_token.clone());
    let listener = tokio::net::TcpListener::bind(&config.bind).await?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
