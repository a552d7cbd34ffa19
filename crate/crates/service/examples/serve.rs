//! Runs the record service.
//!
//! ```sh
//! cargo run -p oius-service --example serve -- crates/service/examples/service.toml
//! OIUS_BIND=0.0.0.0:9000 OIUS_API_TOKEN=secret cargo run -p oius-service --example serve
//! ```

use std::path::PathBuf;

use oius_service::{serve, Config};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from);
    let config = Config::load(path.as_deref())?;
    eprintln!(
        "serving {} at http://{} (epsilon {}, log {})",
        config.network,
        config.bind,
        config.epsilon,
        config.storage.display()
    );
    serve(config).await?;
    Ok(())
}
