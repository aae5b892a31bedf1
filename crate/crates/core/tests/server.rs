mod common;

use std::fs;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::OnceLock;

use common::{quick_config, write_csv_dataset};
use instance_space::pipeline::{run_and_write, BUNDLE_FILES};
use instance_space::server::serve_bundle;
use tempfile::TempDir;

/// One bundle shared by every test in this file.
fn bundle_dir() -> PathBuf {
    static DIR: OnceLock<(TempDir, PathBuf)> = OnceLock::new();
    DIR.get_or_init(|| {
        let tmp = TempDir::new().unwrap();
        let data = tmp.path().join("data.csv");
        write_csv_dataset(&data, 21, 60, 3, 1.0);
        let config = quick_config(&data, &tmp.path().join("bundle"), 21);
        run_and_write(&config).unwrap();
        let dir = config.output_dir.clone();
        (tmp, dir)
    })
    .1
    .clone()
}

fn request(addr: SocketAddr, method: &str, path: &str) -> (u16, Vec<(String, String)>, Vec<u8>) {
    let mut s = TcpStream::connect(addr).unwrap();
    write!(s, "{method} {path} HTTP/1.1\r\nHost: localhost\r\nContent-Length: 0\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = Vec::new();
    s.read_to_end(&mut buf).unwrap();
    let split = buf.windows(4).position(|w| w == b"\r\n\r\n").unwrap();
    let head = String::from_utf8(buf[..split].to_vec()).unwrap();
    let mut lines = head.lines();
    let status: u16 = lines
        .next()
        .unwrap()
        .split(' ')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let headers = lines
        .filter_map(|l| l.split_once(':'))
        .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim().to_string()))
        .collect();
    (status, headers, buf[split + 4..].to_vec())
}

fn header<'a>(headers: &'a [(String, String)], name: &str) -> Option<&'a str> {
    headers
        .iter()
        .find(|(k, _)| k == name)
        .map(|(_, v)| v.as_str())
}

#[test]
fn serves_exact_bundle_bytes() {
    let dir = bundle_dir();
    let server = serve_bundle(&dir, "127.0.0.1", 0, None).unwrap();
    for f in BUNDLE_FILES {
        let (status, headers, body) = request(server.addr(), "GET", &format!("/bundle/{f}"));
        assert_eq!(status, 200, "{f}");
        assert_eq!(body, fs::read(dir.join(f)).unwrap(), "{f}");
        let ct = header(&headers, "content-type").unwrap();
        assert!(ct.starts_with(if f.ends_with(".csv") {
            "text/csv"
        } else {
            "application/json"
        }));
    }
    server.shutdown();
}

#[test]
fn unknown_paths_are_not_found() {
    let server = serve_bundle(bundle_dir(), "127.0.0.1", 0, None).unwrap();
    assert_eq!(request(server.addr(), "GET", "/bundle/missing.bin").0, 404);
    assert_eq!(request(server.addr(), "GET", "/bundle/../data.csv").0, 404);
    assert_eq!(request(server.addr(), "GET", "/elsewhere").0, 404);
}

#[test]
fn only_reads_are_allowed() {
    let server = serve_bundle(bundle_dir(), "127.0.0.1", 0, None).unwrap();
    for method in ["POST", "PUT", "DELETE", "PATCH"] {
        let (status, headers, _) = request(server.addr(), method, "/bundle/manifest.json");
        assert_eq!(status, 405, "{method}");
        assert_eq!(header(&headers, "allow"), Some("GET, HEAD"));
    }
    let (status, _, body) = request(server.addr(), "HEAD", "/bundle/manifest.json");
    assert_eq!(status, 200);
    assert!(body.is_empty());
}

#[test]
fn app_routes() {
    let server = serve_bundle(bundle_dir(), "127.0.0.1", 0, None).unwrap();
    let (status, headers, _) = request(server.addr(), "GET", "/");
    assert_eq!(status, 302);
    assert_eq!(header(&headers, "location"), Some("/app/"));
    let (status, _, body) = request(server.addr(), "GET", "/app/");
    assert_eq!(status, 200);
    assert!(String::from_utf8(body)
        .unwrap()
        .contains("/bundle/manifest.json"));

    let app = TempDir::new().unwrap();
    fs::write(app.path().join("index.html"), "<html>explorer</html>").unwrap();
    fs::create_dir(app.path().join("assets")).unwrap();
    fs::write(app.path().join("assets/main.js"), "console.log(1)").unwrap();
    let server =
        serve_bundle(bundle_dir(), "127.0.0.1", 0, Some(app.path().to_path_buf())).unwrap();
    assert_eq!(
        request(server.addr(), "GET", "/app/").2,
        b"<html>explorer</html>"
    );
    let (status, headers, body) = request(server.addr(), "GET", "/app/assets/main.js");
    assert_eq!(
        (status, body.as_slice()),
        (200, b"console.log(1)".as_slice())
    );
    assert_eq!(header(&headers, "content-type"), Some("text/javascript"));
    assert_eq!(request(server.addr(), "GET", "/app/missing.js").0, 404);
}

#[test]
fn incomplete_bundle_is_refused() {
    let broken = TempDir::new().unwrap();
    for f in BUNDLE_FILES.iter().filter(|f| **f != "model.json") {
        fs::copy(bundle_dir().join(f), broken.path().join(f)).unwrap();
    }
    let err = serve_bundle(broken.path(), "127.0.0.1", 0, None)
        .err()
        .unwrap();
    assert!(err.to_string().contains("model.json"), "{err}");
}

#[test]
fn busy_port_is_reported() {
    let holder = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port();
    let err = serve_bundle(bundle_dir(), "127.0.0.1", port, None)
        .err()
        .unwrap();
    assert!(err.to_string().contains(&port.to_string()), "{err}");
}

#[test]
fn bundle_is_not_modified_by_serving() {
    let dir = bundle_dir();
    let before: Vec<Vec<u8>> = BUNDLE_FILES
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect();
    let server = serve_bundle(&dir, "127.0.0.1", 0, None).unwrap();
    let threads: Vec<_> = (0..8)
        .map(|i| {
            let addr = server.addr();
            std::thread::spawn(move || {
                request(addr, "GET", &format!("/bundle/{}", BUNDLE_FILES[i % 7])).0
            })
        })
        .collect();
    for t in threads {
        assert_eq!(t.join().unwrap(), 200);
    }
    server.shutdown();
    let after: Vec<Vec<u8>> = BUNDLE_FILES
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect();
    assert_eq!(before, after);
}
