use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;
use waysign::graph_json::read_graph;
use waysign_core::{GraphMeta, NavGraph};

/// Serves localization sessions over HTTP and WebSocket.
#[derive(Debug, Parser)]
#[command(name = "waysign-bridge", version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Graph JSON to start with; an empty graph if absent.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[tokio::main]
async fn main() {
    let args = Args::parse();
    let graph = match &args.graph {
        Some(p) => match read_graph(p) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(e.exit_code());
            }
        },
        None => NavGraph::empty(GraphMeta::named("empty")),
    };
    let app = waysign_bridge::router(waysign_bridge::AppState::new(graph));
    let addr = SocketAddr::from(([127, 0, 0, 1], args.port));
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {addr}: {e}");
            std::process::exit(3);
        }
    };
    eprintln!("listening on http://{addr}");
    if let Err(e) = axum::serve(listener, app).await {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
