//! Typed wrapper over the service's HTTP routes.

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;

use tablog_api as api;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("{} ({status}): {}", body.kind, body.message)]
    Api { status: StatusCode, body: api::ErrorBody },
}

impl ClientError {
    /// Error category reported by the server, if the server answered.
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Api { body, .. } => Some(&body.kind),
            ClientError::Http(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, such as `http://127.0.0.1:7878`.
    pub fn new(base: impl Into<String>) -> Self {
        let base = base.into().trim_end_matches('/').to_string();
        Client { base, http: reqwest::Client::new() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let body = serde_json::from_str(&text)
            .unwrap_or_else(|_| api::ErrorBody { kind: "http".into(), message: text });
        Err(ClientError::Api { status, body })
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        let resp = self.http.post(format!("{}{path}", self.base)).json(body).send().await?;
        Self::decode(resp).await
    }

    pub async fn health(&self) -> Result<api::Health> {
        let resp = self.http.get(format!("{}{}", self.base, api::HEALTH)).send().await?;
        Self::decode(resp).await
    }

    pub async fn run(&self, req: &api::RunRequest) -> Result<api::RunResponse> {
        self.post(api::RUN, req).await
    }

    pub async fn transform(&self, req: &api::TransformRequest) -> Result<api::TransformResponse> {
        self.post(api::TRANSFORM, req).await
    }

    pub async fn check(&self, req: &api::CheckRequest) -> Result<api::CheckResponse> {
        self.post(api::CHECK, req).await
    }

    pub async fn bench(&self, req: &api::BenchRequest) -> Result<api::BenchResponse> {
        self.post(api::BENCH, req).await
    }

    pub async fn ingest_demo(&self, req: &api::IngestDemoRequest) -> Result<api::IngestDemoResponse> {
        self.post(api::INGEST_DEMO, req).await
    }

    pub async fn create_session(&self, req: &api::SessionRequest) -> Result<api::SessionInfo> {
        self.post(api::SESSIONS, req).await
    }

    pub async fn session_query(&self, id: &str, req: &api::SessionQuery) -> Result<api::RunResponse> {
        self.post(&format!("{}/{id}/query", api::SESSIONS), req).await
    }

    pub async fn delete_session(&self, id: &str) -> Result<()> {
        let resp = self.http.delete(format!("{}{}/{id}", self.base, api::SESSIONS)).send().await?;
        if resp.status().is_success() {
            return Ok(());
        }
        Self::decode::<()>(resp).await
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    async fn client() -> Client {
        let (addr, _) = tablog_server::spawn_local().await.unwrap();
        Client::new(format!("http://{addr}/"))
    }

    #[tokio::test]
    async fn round_trips() {
        let c = client().await;
        assert_eq!(c.health().await.unwrap().status, "ok");
        let req = api::RunRequest {
            program: ":- table p/1.\np(a).\np(b).".into(),
            query: "p(X)".into(),
            trace: api::TraceMode::Off,
            options: Default::default(),
            tables: false,
        };
        let resp = c.run(&req).await.unwrap();
        let answers: Vec<_> = resp.answers.iter().map(|a| a.answer.as_str()).collect();
        assert_eq!(answers, ["X = a", "X = b"]);
    }

    #[tokio::test]
    async fn server_errors_keep_their_kind() {
        let c = client().await;
        let req = api::TransformRequest { program: "p(.".into() };
        let err = c.transform(&req).await.unwrap_err();
        assert_eq!(err.kind(), Some("syntax"));
        let err = c.delete_session("nope").await.unwrap_err();
        assert_eq!(err.kind(), Some("not_found"));
    }

    #[tokio::test]
    async fn sessions() {
        let c = client().await;
        let info = c
            .create_session(&api::SessionRequest { program: ":- table q/1.\nq(1).".into(), options: Default::default() })
            .await
            .unwrap();
        let q = api::SessionQuery { query: "q(X)".into(), trace: api::TraceMode::Off, tables: true };
        let resp = c.session_query(&info.id, &q).await.unwrap();
        assert_eq!(resp.answers.len(), 1);
        assert_eq!(resp.tables.unwrap().len(), 1);
        c.delete_session(&info.id).await.unwrap();
    }
}
