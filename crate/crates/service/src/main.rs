use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use socratic_ga_service::{router, AppState};

#[derive(Parser)]
#[command(
    name = "socratic-service",
    version,
    about = "HTTP session API for the socratic tutor"
)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Serve the web UI bundle from this directory.
    #[arg(long)]
    static_dir: Option<PathBuf>,
    /// Keep session snapshots here so they survive restarts.
    #[arg(long)]
    snapshot_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let state = match args.snapshot_dir {
        Some(dir) => AppState::with_snapshots(dir)?,
        None => AppState::new(),
    };
    let listener = tokio::net::TcpListener::bind(args.bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, args.static_dir)).await
}
