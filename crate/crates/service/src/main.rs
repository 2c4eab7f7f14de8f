use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use corrlearn_service::{router, ServiceConfig};

/// Serves learning sessions over HTTP.
#[derive(Parser)]
#[command(name = "correction-service", version)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    host: Option<String>,
    #[arg(long)]
    port: Option<u16>,
    /// Directory with the browser bundle.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Where finished sessions write their traces.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Planner segments T.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    smooth_mu: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

impl Cli {
    fn config(self) -> anyhow::Result<ServiceConfig> {
        let mut cfg = match &self.config {
            Some(path) => ServiceConfig::load(path)?,
            None => ServiceConfig::default(),
        };
        if let Some(v) = self.host {
            cfg.host = v;
        }
        if let Some(v) = self.port {
            cfg.port = v;
        }
        if self.static_dir.is_some() {
            cfg.static_dir = self.static_dir;
        }
        if self.trace_dir.is_some() {
            cfg.trace_dir = self.trace_dir;
        }
        if let Some(v) = self.horizon {
            cfg.planner.horizon = v;
        }
        if let Some(v) = self.smooth_mu {
            cfg.planner.smooth_mu = v;
        }
        if let Some(v) = self.max_iters {
            cfg.planner.max_iters = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let cfg = Cli::parse().config()?;
    let addr = format!("{}:{}", cfg.host, cfg.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(cfg)).await?;
    Ok(())
}
