//! Threaded HTTP front end over [`ArenaService`].

use std::io::Read;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use tiny_http::{Header, Method, Request, Response, Server};

use super::state::{ArenaService, ServiceError};
use crate::error::{ArenaError, Result};
use crate::wire::{
    self, ErrorResponse, API_KEY_HEADER, LEADERBOARD_PATH, SOURCE_PATH, STATUS_PATH,
    TRANSLATION_PATH,
};

pub struct HttpServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    service: Arc<ArenaService>,
    addr: SocketAddr,
}

impl HttpServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts `workers`
    /// request threads.
    pub fn start(service: ArenaService, addr: &str, workers: usize) -> Result<Self> {
        let server = Server::http(addr)
            .map_err(|e| ArenaError::config(format!("cannot bind {addr}: {e}")))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(addr) => addr,
            other => {
                return Err(ArenaError::config(format!(
                    "unsupported listen address {other:?}"
                )))
            }
        };
        let server = Arc::new(server);
        let service = Arc::new(service);
        let workers = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&server);
                let service = Arc::clone(&service);
                std::thread::spawn(move || {
                    while let Ok(request) = server.recv() {
                        handle(&service, request);
                    }
                })
            })
            .collect();
        Ok(Self {
            server,
            workers,
            service,
            addr,
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn service(&self) -> &ArenaService {
        &self.service
    }

    /// Stops accepting requests and joins the worker threads.
    pub fn shutdown(self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for worker in self.workers {
            let _ = worker.join();
        }
    }

    /// Blocks until the server is unblocked externally (ctrl-c kills the
    /// process; serving threads do the work).
    pub fn join(mut self) {
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for HttpServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
    }
}

fn handle(service: &ArenaService, mut request: Request) {
    let response = route(service, &mut request);
    let _ = request.respond(response);
}

fn json_header() -> Header {
    Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header")
}

fn ok_json<T: serde::Serialize>(value: &T) -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_vec(value).expect("wire types serialize");
    Response::from_data(body).with_header(json_header())
}

fn error_json(err: &ServiceError) -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_vec(&ErrorResponse {
        error: err.message(),
    })
    .expect("error body serializes");
    let mut response = Response::from_data(body)
        .with_header(json_header())
        .with_status_code(err.status_code());
    if matches!(err, ServiceError::RateLimited) {
        response =
            response.with_header(Header::from_bytes(&b"Retry-After"[..], &b"1"[..]).unwrap());
    }
    response
}

fn not_found() -> Response<std::io::Cursor<Vec<u8>>> {
    let body = serde_json::to_vec(&ErrorResponse {
        error: "no such endpoint".to_string(),
    })
    .unwrap();
    Response::from_data(body)
        .with_header(json_header())
        .with_status_code(404)
}

fn api_key(request: &Request) -> Option<String> {
    request
        .headers()
        .iter()
        .find(|h| h.field.as_str().as_str().eq_ignore_ascii_case(API_KEY_HEADER))
        .map(|h| h.value.as_str().to_string())
}

fn route(service: &ArenaService, request: &mut Request) -> Response<std::io::Cursor<Vec<u8>>> {
    let path = request.url().split('?').next().unwrap_or("").to_string();
    match (request.method().clone(), path.as_str()) {
        (Method::Get, LEADERBOARD_PATH) => ok_json(&service.leaderboard()),
        (Method::Get, SOURCE_PATH) => {
            let Some(key) = api_key(request) else {
                return error_json(&ServiceError::Unauthorized);
            };
            match service.get_source(&key) {
                Ok(body) => ok_json(&body),
                Err(err) => error_json(&err),
            }
        }
        (Method::Post, TRANSLATION_PATH) => {
            let Some(key) = api_key(request) else {
                return error_json(&ServiceError::Unauthorized);
            };
            let mut body = String::new();
            if request.as_reader().read_to_string(&mut body).is_err() {
                return error_json(&ServiceError::BadRequest("unreadable body".to_string()));
            }
            let parsed: wire::TranslationRequest = match serde_json::from_str(&body) {
                Ok(parsed) => parsed,
                Err(e) => {
                    return error_json(&ServiceError::BadRequest(format!(
                        "malformed translation request: {e}"
                    )))
                }
            };
            match service.post_translation(&key, &parsed) {
                Ok(body) => ok_json(&body),
                Err(err) => error_json(&err),
            }
        }
        (Method::Get, STATUS_PATH) => {
            let Some(key) = api_key(request) else {
                return error_json(&ServiceError::Unauthorized);
            };
            match service.status(&key) {
                Ok(body) => ok_json(&body),
                Err(err) => error_json(&err),
            }
        }
        _ => not_found(),
    }
}
