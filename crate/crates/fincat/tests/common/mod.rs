#![allow(dead_code)]

use std::net::TcpListener as StdListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::Router;
use fincat::provider::DynProvider;
use fincat_core::classifier::load_model;
use fincat_core::embedding::HashedEmbedder;
use fincat_core::Analyzer;
use tokio::sync::oneshot;

pub const SAMPLE: &str =
    "The company expects revenue to grow 12% next year while margins held steady at 31 percent last quarter";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// A router served on 127.0.0.1 from a background thread; stops on drop.
pub struct TestServer {
    pub base: String,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl TestServer {
    pub fn start(router: Router) -> Self {
        let listener = StdListener::bind("127.0.0.1:0").unwrap();
        listener.set_nonblocking(true).unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_all()
                .build()
                .unwrap();
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener).unwrap();
                axum::serve(listener, router)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
                    .unwrap();
            });
        });
        TestServer {
            base,
            shutdown: Some(tx),
            thread: Some(thread),
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn fixture_analyzer() -> Arc<Analyzer<DynProvider>> {
    let model = load_model(&fixture("model.json")).unwrap();
    let provider: DynProvider = Box::new(HashedEmbedder::new(64, 0).unwrap());
    Arc::new(Analyzer::new(model, provider, 6).unwrap())
}

pub fn fixture_service() -> TestServer {
    TestServer::start(fincat::server::router(fixture_analyzer()))
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder().http_status_as_error(false).build().into()
}

pub fn fincat() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fincat"));
    cmd.env_remove("FINCAT_EMBED_ENDPOINT");
    cmd
}

pub fn run(args: &[&str]) -> Output {
    fincat().args(args).stdin(Stdio::null()).output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}
