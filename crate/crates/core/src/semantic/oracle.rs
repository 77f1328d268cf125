use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EquivalenceOracle, OracleError};
use crate::text::normalize_answer;

/// Equal after lowercasing, collapsing whitespace, and trimming punctuation
/// from both ends.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatchOracle;

impl EquivalenceOracle for ExactMatchOracle {
    fn equivalent(&self, a: &str, b: &str, _context: &str) -> Result<bool, OracleError> {
        Ok(normalize_answer(a) == normalize_answer(b))
    }
}

pub fn exact_match_oracle() -> ExactMatchOracle {
    ExactMatchOracle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NliLabel {
    Entailment,
    Neutral,
    Contradiction,
}

#[derive(Serialize)]
struct NliRequest<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Deserialize)]
struct NliResponse {
    label: NliLabel,
}

/// Entailment judged by an HTTP service.
///
/// Each call posts `{"premise", "hypothesis"}` with the question prepended
/// to both sides and expects `{"label": "entailment"|"neutral"|"contradiction"}`.
/// One call answers one direction; [`super::cluster_generations`] asks both.
#[derive(Debug, Clone)]
pub struct RemoteNliOracle {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteNliOracle {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn classify(&self, premise: &str, hypothesis: &str) -> Result<NliLabel, OracleError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(NliRequest {
                premise,
                hypothesis,
            })
            .map_err(|e| {
                OracleError::new(format!("NLI request to {} failed: {e}", self.endpoint))
            })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(OracleError::new(format!(
                "NLI service {} returned status {status}",
                self.endpoint
            )));
        }
        let body: NliResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| OracleError::new(format!("malformed NLI response: {e}")))?;
        Ok(body.label)
    }
}

impl EquivalenceOracle for RemoteNliOracle {
    fn equivalent(&self, a: &str, b: &str, context: &str) -> Result<bool, OracleError> {
        let premise = format!("{context} {a}");
        let hypothesis = format!("{context} {b}");
        Ok(self.classify(&premise, &hypothesis)? == NliLabel::Entailment)
    }
}

pub fn remote_nli_oracle(endpoint: impl Into<String>, timeout: Duration) -> RemoteNliOracle {
    RemoteNliOracle::new(endpoint, timeout)
}
