//! Shared helpers for the integration tests.
#![allow(dead_code)]

#[path = "../../../core/tests/support/oracles.rs"]
pub mod oracles;
#[path = "../../../core/tests/support/strategies.rs"]
pub mod strategies;
pub mod tours;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::thread::JoinHandle;

use panotour::bundle::{compile, CompileOptions, Compiled};
use panotour::server::{Server, ServerConfig, Shared};

pub fn sample_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/sample")
}

/// Compiles the committed sample tour into `out`.
pub fn compile_sample(out: &Path, cubemaps: bool) -> Compiled {
    let src = sample_dir();
    let opts = CompileOptions {
        cubemaps,
        ..CompileOptions::default()
    };
    compile(&src.join("tour.json"), &src.join("media"), out, &opts).expect("sample tour compiles")
}

/// Critical path of the sample bundle on the reference profile (8 Mbit/s, 50 ms, 6 connections).
///
/// The last eager asset to finish is the third preview. index.html (689 B)
/// arrives at 50.689 and is processed by 51.378. The stylesheet (1201 B) is on
/// connection 2 until 102.579. The advance preview (126244 B) follows it there,
/// arriving at 102.579 + 50 + 126.244 = 278.823, and decodes in
/// 126244 B / 50 MB/s = 2.52488 ms.
pub const SAMPLE_CRITICAL_PATH_MS: f64 = 281.34788;

/// A server on its own runtime thread; stops when dropped.
pub struct TestServer {
    pub addr: SocketAddr,
    pub state: Shared,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(bundle: &Path) -> TestServer {
        Self::start_with(bundle, 4)
    }

    pub fn start_with(bundle: &Path, max_renders: usize) -> TestServer {
        let mut cfg = ServerConfig::new(bundle);
        cfg.bind = "127.0.0.1:0".into();
        cfg.max_concurrent_renders = max_renders;
        let (ready_tx, ready_rx) = mpsc::channel();
        let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(4)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let server = Server::bind(&cfg).await.expect("server binds");
                ready_tx.send((server.local_addr().unwrap(), server.state())).unwrap();
                server
                    .run_until(async {
                        let _ = stop_rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        let (addr, state) = ready_rx.recv().expect("server started");
        TestServer {
            addr,
            state,
            stop: Some(stop_tx),
            thread: Some(thread),
        }
    }

    pub fn get(&self, target: &str) -> HttpResponse {
        http_get(self.addr, target, &[])
    }

    pub fn get_with(&self, target: &str, headers: &[(&str, &str)]) -> HttpResponse {
        http_get(self.addr, target, headers)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(s) = self.stop.take() {
            let _ = s.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).expect("JSON body")
    }
}

/// Minimal HTTP/1.1 GET over a fresh connection.
pub fn http_get(addr: SocketAddr, target: &str, headers: &[(&str, &str)]) -> HttpResponse {
    let mut stream = TcpStream::connect(addr).expect("connect");
    let mut req = format!("GET {target} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n");
    for (k, v) in headers {
        req.push_str(&format!("{k}: {v}\r\n"));
    }
    req.push_str("\r\n");
    stream.write_all(req.as_bytes()).unwrap();
    let mut r = BufReader::new(stream);
    let mut line = String::new();
    r.read_line(&mut line).unwrap();
    let status: u16 = line.split_whitespace().nth(1).expect("status line").parse().unwrap();
    let mut hdrs = Vec::new();
    loop {
        line.clear();
        r.read_line(&mut line).unwrap();
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        let (k, v) = l.split_once(':').expect("header line");
        hdrs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    let find = |n: &str| hdrs.iter().find(|(k, _)| k == n).map(|(_, v)| v.clone());
    let mut body = Vec::new();
    if let Some(len) = find("content-length") {
        body.resize(len.parse().unwrap(), 0);
        r.read_exact(&mut body).unwrap();
    } else if find("transfer-encoding").is_some_and(|v| v.contains("chunked")) {
        loop {
            line.clear();
            r.read_line(&mut line).unwrap();
            let n = usize::from_str_radix(line.trim(), 16).unwrap();
            let mut chunk = vec![0; n + 2];
            r.read_exact(&mut chunk).unwrap();
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        r.read_to_end(&mut body).unwrap();
    }
    HttpResponse {
        status,
        headers: hdrs,
        body,
    }
}

/// Small deterministic generator for test inputs that do not need shrinking.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.unit() * (hi - lo)
    }
}
