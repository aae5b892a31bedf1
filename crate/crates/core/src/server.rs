//! Read-only HTTP delivery of a bundle and the explorer's static files.
//!
//! `GET /bundle/<file>` returns one of the seven bundle files, byte for
//! byte. `GET /app/...` serves files from the app directory when one is
//! given, otherwise a small built-in index page. Every other method gets 405.

use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;
use std::thread::JoinHandle;

use log::{debug, info};
use tiny_http::{Header, Method, Request, Response, Server};

use crate::error::{Error, Result};
use crate::pipeline::{validate_bundle, BUNDLE_FILES};

pub const DEFAULT_PORT: u16 = 8765;
const WORKERS: usize = 4;

const BUILTIN_INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>instance space bundle</title></head>
<body>
<h1>Bundle files</h1>
<ul>
<li><a href=\"/bundle/manifest.json\">manifest.json</a></li>
<li><a href=\"/bundle/coordinates.csv\">coordinates.csv</a></li>
<li><a href=\"/bundle/metadata.csv\">metadata.csv</a></li>
<li><a href=\"/bundle/raw_records.csv\">raw_records.csv</a></li>
<li><a href=\"/bundle/footprints.json\">footprints.json</a></li>
<li><a href=\"/bundle/model.json\">model.json</a></li>
<li><a href=\"/bundle/ranking.json\">ranking.json</a></li>
</ul>
<p>No explorer build was configured; start the server with an app directory to serve it here.</p>
</body></html>
";

pub fn content_type(path: &str) -> &'static str {
    match path.rsplit_once('.').map(|(_, ext)| ext) {
        Some("json") => "application/json",
        Some("csv") => "text/csv; charset=utf-8",
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("wasm") => "application/wasm",
        Some("map") | Some("txt") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Outcome of routing one request, before it is turned into a response.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Ok {
        body: Vec<u8>,
        content_type: &'static str,
    },
    Redirect(String),
    NotFound,
    MethodNotAllowed,
}

/// Bundle bytes (read once at startup) plus the optional app directory.
#[derive(Debug)]
pub struct BundleSite {
    files: BTreeMap<&'static str, Vec<u8>>,
    app_dir: Option<PathBuf>,
}

impl BundleSite {
    /// Validates the bundle and loads its files.
    pub fn load(bundle_dir: impl AsRef<Path>, app_dir: Option<PathBuf>) -> Result<Self> {
        let dir = bundle_dir.as_ref();
        validate_bundle(dir)?;
        let mut files = BTreeMap::new();
        for name in BUNDLE_FILES {
            let path = dir.join(name);
            files.insert(name, fs::read(&path).map_err(|e| Error::io(&path, e))?);
        }
        if let Some(app) = &app_dir {
            if !app.is_dir() {
                return Err(Error::Server(format!(
                    "app directory {} does not exist",
                    app.display()
                )));
            }
        }
        Ok(BundleSite { files, app_dir })
    }

    fn app_file(&self, rel: &str) -> Option<(Vec<u8>, &'static str)> {
        let rel = if rel.is_empty() || rel.ends_with('/') {
            format!("{rel}index.html")
        } else {
            rel.to_string()
        };
        let Some(app) = &self.app_dir else {
            return (rel == "index.html").then(|| {
                (
                    BUILTIN_INDEX.as_bytes().to_vec(),
                    content_type("index.html"),
                )
            });
        };
        let rel_path = Path::new(&rel);
        if !rel_path
            .components()
            .all(|c| matches!(c, Component::Normal(_)))
        {
            return None;
        }
        let path = app.join(rel_path);
        fs::read(&path).ok().map(|b| (b, content_type(&rel)))
    }

    pub fn route(&self, method: &Method, url: &str) -> Reply {
        if !matches!(method, Method::Get | Method::Head) {
            return Reply::MethodNotAllowed;
        }
        let path = url.split(['?', '#']).next().unwrap_or("");
        if path == "/" || path == "/app" {
            return Reply::Redirect("/app/".into());
        }
        if let Some(name) = path.strip_prefix("/bundle/") {
            return match self.files.get(name) {
                Some(body) => Reply::Ok {
                    body: body.clone(),
                    content_type: content_type(name),
                },
                None => Reply::NotFound,
            };
        }
        if let Some(rel) = path.strip_prefix("/app/") {
            return match self.app_file(rel) {
                Some((body, content_type)) => Reply::Ok { body, content_type },
                None => Reply::NotFound,
            };
        }
        Reply::NotFound
    }
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static header is valid")
}

fn respond(site: &BundleSite, request: Request) {
    let reply = site.route(request.method(), request.url());
    debug!(
        "{} {} -> {:?}",
        request.method(),
        request.url(),
        std::mem::discriminant(&reply)
    );
    let head = *request.method() == Method::Head;
    let response = match reply {
        Reply::Ok { body, content_type } => {
            let len = body.len();
            let body = if head { Vec::new() } else { body };
            let mut r = Response::from_data(body).with_header(header("Content-Type", content_type));
            if head {
                r = r.with_header(header("Content-Length", &len.to_string()));
            }
            r
        }
        Reply::Redirect(to) => Response::from_data(Vec::new())
            .with_status_code(302)
            .with_header(header("Location", &to)),
        Reply::NotFound => Response::from_string("not found\n").with_status_code(404),
        Reply::MethodNotAllowed => Response::from_string("method not allowed\n")
            .with_status_code(405)
            .with_header(header("Allow", "GET, HEAD")),
    };
    let _ = request.respond(response);
}

/// A running server. Dropping it (or calling [`RunningServer::shutdown`])
/// stops the workers.
pub struct RunningServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

impl RunningServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Blocks until the workers stop.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        for _ in 0..self.workers.len() {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Validates the bundle, binds `host:port` (port 0 picks a free one) and
/// starts serving on background threads.
pub fn serve_bundle(
    bundle_dir: impl AsRef<Path>,
    host: &str,
    port: u16,
    app_dir: Option<PathBuf>,
) -> Result<RunningServer> {
    let site = Arc::new(BundleSite::load(bundle_dir, app_dir)?);
    let server = Server::http((host, port))
        .map_err(|e| Error::Server(format!("cannot listen on {host}:{port}: {e}")))?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| Error::Server("not bound to an IP address".into()))?;
    let server = Arc::new(server);
    info!("serving on http://{addr}/app/");
    let workers = (0..WORKERS)
        .map(|_| {
            let server = Arc::clone(&server);
            let site = Arc::clone(&site);
            std::thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    respond(&site, request);
                }
            })
        })
        .collect();
    Ok(RunningServer {
        server,
        workers,
        addr,
    })
}
