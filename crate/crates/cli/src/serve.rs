//! Read-only HTTP hosting of one map document plus the viewer bundle.

use std::path::PathBuf;
use std::sync::Arc;

use arbor_core::io::MapDocument;
use axum::http::header;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use tower_http::services::ServeDir;

const PLACEHOLDER: &str = "<!doctype html>\n<title>arbor</title>\n\
<p>No viewer bundle configured. The map document is at <a href=\"/map.json\">/map.json</a>.</p>\n";

/// `GET /map.json` returns the document; every other path is looked up in
/// `assets` (with `index.html` for directories), or a placeholder page at
/// `/` when there is no bundle.
pub fn router(document: &MapDocument, assets: Option<PathBuf>) -> Router {
    let body: Arc<str> = document.to_json().into();
    let app = Router::new().route(
        "/map.json",
        get(move || {
            let body = body.clone();
            async move { ([(header::CONTENT_TYPE, "application/json")], body.to_string()).into_response() }
        }),
    );
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

pub fn serve_blocking(document: MapDocument, assets: Option<PathBuf>, addr: &str) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, router(&document, assets)).await
    })
}
