//! The agentic inference loop: interleaved generation and retrieval with a
//! hard action budget and forced answering, over pluggable policy and
//! retriever backends.

use crate::config::AgentConfig;
use crate::jsonl;
use crate::text::token_set;
use crate::types::{QASample, Trajectory, TrajectoryStep};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::Path;
use std::time::{Duration, Instant};
use thiserror::Error;

pub const INFERENCE_PROMPT_TEMPLATE: &str = include_str!("../assets/inference_prompt.txt");

/// The system prompt given to the policy, with the question substituted.
pub fn render_inference_prompt(question: &str) -> String {
    INFERENCE_PROMPT_TEMPLATE.replace("{question}", question)
}

/// Opaque sampling settings passed through to the policy backend.
pub type SamplingParams = serde_json::Map<String, Value>;

#[derive(Debug, Clone, Error)]
pub enum PolicyError {
    #[error("policy backend unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, Error)]
pub enum RetrieveError {
    #[error("retriever backend unavailable: {0}")]
    Unavailable(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

/// Text-generation backend. Returns one segment that should end at one of
/// the stop tags, or at the backend's length cap when no stop tag was
/// produced.
pub trait PolicyBackend {
    fn generate(
        &mut self,
        transcript: &str,
        stop_tags: &[&str],
        sampling: &SamplingParams,
    ) -> Result<String, PolicyError>;
}

/// One retrieved passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedDoc {
    pub doc_id: String,
    pub body: String,
    pub score: f64,
}

/// Search backend. Results are at most `k`, score-descending, with ties
/// broken by ascending `doc_id`.
pub trait Retriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrieveError>;
}

/// Outcome of one episode.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub trajectory: Trajectory,
    pub turns_used: usize,
    pub budget_exhausted: bool,
    pub forced_answer: bool,
    pub wall_time: Duration,
    /// Transport failure encountered mid-episode, if any. The partial
    /// transcript up to the failure is preserved in `trajectory`.
    pub error: Option<String>,
}

/// Sidecar metrics record for episode trace files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub sample_id: String,
    pub turns_used: usize,
    pub forced_answer: bool,
    pub wall_time_ms: u64,
}

impl EpisodeTrace {
    pub fn metrics(&self) -> EpisodeMetrics {
        EpisodeMetrics {
            sample_id: self.trajectory.sample_id.clone(),
            turns_used: self.turns_used,
            forced_answer: self.forced_answer,
            wall_time_ms: self.wall_time.as_millis() as u64,
        }
    }
}

fn truncate_chars(s: &str, cap: usize) -> &str {
    match s.char_indices().nth(cap) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

fn strip_reasoning_tags(text: &str) -> String {
    text.replace("<reasoning>", "").replace("</reasoning>", "").trim().to_string()
}

/// Runs one search episode: generate until a tool call or answer, retrieve
/// and append results for tool calls, stop at the action budget, and force
/// an answer when generation ends without one. The step list is built by
/// the runtime itself, so it satisfies the trajectory invariants even when
/// the raw text is damaged; the raw transcript is preserved for format
/// scoring.
pub fn run_episode(
    sample: &QASample,
    policy: &mut dyn PolicyBackend,
    retriever: &dyn Retriever,
    cfg: &AgentConfig,
    sampling: &SamplingParams,
) -> EpisodeTrace {
    let started = Instant::now();
    let prompt = render_inference_prompt(&sample.question);
    let mut y = String::from("<reasoning>");
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    let mut turns = 0usize;
    let mut answered = false;
    let mut error: Option<String> = None;

    while turns < cfg.budget as usize {
        let transcript = format!("{prompt}\n{y}");
        let segment = match policy.generate(&transcript, &["</tool_call>", "</answer>"], sampling) {
            Ok(s) => s,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        let segment = truncate_chars(&segment, cfg.max_response_length).to_string();

        if let Some(close) = segment.find("</answer>") {
            let head = &segment[..close];
            let (before, body) = match head.rfind("<answer>") {
                Some(open) => (&head[..open], head[open + "<answer>".len()..].trim()),
                None => (head, ""),
            };
            let reasoning = strip_reasoning_tags(before);
            if !reasoning.is_empty() {
                steps.push(TrajectoryStep::reasoning(reasoning));
            }
            steps.push(TrajectoryStep::answer(body));
            y.push_str(&segment[..close + "</answer>".len()]);
            answered = true;
            break;
        }

        if let Some(close) = segment.rfind("</tool_call>") {
            let head = &segment[..close];
            let opens: Vec<usize> = head.match_indices("<tool_call>").map(|(i, _)| i).collect();
            if opens.len() > 1 {
                log::warn!(
                    "sample {}: {} tool_call blocks in one segment, keeping the last",
                    sample.id,
                    opens.len()
                );
            }
            if let Some(&open) = opens.last() {
                let query = head[open + "<tool_call>".len()..].trim().to_string();
                y.push_str(&segment);
                if query.is_empty() {
                    let reasoning = strip_reasoning_tags(head);
                    if !reasoning.is_empty() {
                        steps.push(TrajectoryStep::reasoning(reasoning));
                    }
                    break; // malformed call; proceed to forced answering
                }
                let reasoning = strip_reasoning_tags(&head[..open]);
                if !reasoning.is_empty() {
                    steps.push(TrajectoryStep::reasoning(reasoning));
                }
                steps.push(TrajectoryStep::tool_call(query.clone()));
                match retriever.retrieve(&query, cfg.top_k) {
                    Ok(mut docs) => {
                        docs.truncate(cfg.top_k);
                        let body = docs
                            .iter()
                            .map(|d| truncate_chars(&d.body, cfg.max_response_length))
                            .collect::<Vec<_>>()
                            .join("\n");
                        y.push_str(&format!("\n<tool_response>{body}</tool_response>\n"));
                        steps.push(TrajectoryStep::tool_response(body));
                        turns += 1;
                    }
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
                continue;
            }
            // A closing tag with no opener: treat the segment as damaged
            // reasoning and force an answer.
            y.push_str(&segment);
            let reasoning = strip_reasoning_tags(head);
            if !reasoning.is_empty() {
                steps.push(TrajectoryStep::reasoning(reasoning));
            }
            break;
        }

        // No stop tag within the cap: truncated generation.
        y.push_str(&segment);
        let reasoning = strip_reasoning_tags(&segment);
        if !reasoning.is_empty() {
            steps.push(TrajectoryStep::reasoning(reasoning));
        }
        break;
    }

    let budget_exhausted = !answered && turns >= cfg.budget as usize;
    let mut forced_answer = false;
    if !answered && error.is_none() {
        forced_answer = true;
        y.push_str("\n<answer>");
        let transcript = format!("{prompt}\n{y}");
        let body = match policy.generate(&transcript, &["</answer>"], sampling) {
            Ok(segment) => {
                let segment = truncate_chars(&segment, cfg.max_response_length).to_string();
                match segment.find("</answer>") {
                    Some(close) => {
                        let body = segment[..close].trim().to_string();
                        y.push_str(&segment[..close + "</answer>".len()]);
                        body
                    }
                    None => {
                        // Could not close the tag; append an empty answer so
                        // the transcript stays parseable.
                        y.push_str("</answer>");
                        String::new()
                    }
                }
            }
            Err(e) => {
                error = Some(e.to_string());
                y.push_str("</answer>");
                String::new()
            }
        };
        steps.push(TrajectoryStep::answer(body));
    }

    let mut trajectory = Trajectory::new(sample.id.clone(), steps);
    trajectory.raw_text = Some(y);
    EpisodeTrace {
        trajectory,
        turns_used: turns,
        budget_exhausted,
        forced_answer,
        wall_time: started.elapsed(),
        error,
    }
}

// ---------------------------------------------------------------------------
// Lexical retriever
// ---------------------------------------------------------------------------

/// One corpus passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub doc_id: String,
    pub body: String,
}

/// In-memory token-overlap retriever. Scores each document by
/// `|tokens(query) ∩ tokens(doc)| / |tokens(query)|`, ranks by score then
/// ascending doc id, and by default drops zero-score documents.
pub struct LexicalRetriever {
    docs: Vec<CorpusDoc>,
    token_sets: Vec<std::collections::BTreeSet<String>>,
    pub return_zero_scores: bool,
}

impl LexicalRetriever {
    pub fn new(docs: Vec<CorpusDoc>) -> Self {
        let token_sets = docs.iter().map(|d| token_set(&d.body)).collect();
        LexicalRetriever { docs, token_sets, return_zero_scores: false }
    }

    pub fn from_jsonl(path: &Path) -> Result<Self, jsonl::JsonlError> {
        Ok(Self::new(jsonl::read_jsonl(path)?))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

impl Retriever for LexicalRetriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrieveError> {
        if self.docs.is_empty() {
            return Err(RetrieveError::EmptyCorpus);
        }
        let q = token_set(query);
        let q_len = q.len().max(1) as f64;
        let mut scored: Vec<(f64, &CorpusDoc)> = self
            .docs
            .iter()
            .zip(&self.token_sets)
            .map(|(d, toks)| {
                let overlap = q.intersection(toks).count() as f64;
                (overlap / q_len, d)
            })
            .filter(|(score, _)| self.return_zero_scores || *score > 0.0)
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.doc_id.cmp(&b.1.doc_id))
        });
        scored.truncate(k);
        Ok(scored
            .into_iter()
            .map(|(score, d)| RetrievedDoc { doc_id: d.doc_id.clone(), body: d.body.clone(), score })
            .collect())
    }
}

// ---------------------------------------------------------------------------
// Remote backends
// ---------------------------------------------------------------------------

/// HTTP retriever speaking `POST {query, k}` -> `{results: [...]}`.
pub struct RemoteRetriever {
    pub url: String,
    pub timeout: Duration,
    pub attempts: u32,
    client: reqwest::blocking::Client,
}

#[derive(Debug, Deserialize)]
struct RetrieveResponse {
    results: Vec<RetrievedDoc>,
}

impl RemoteRetriever {
    pub fn new(url: impl Into<String>) -> Result<Self, RetrieveError> {
        let timeout = Duration::from_secs(30);
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| RetrieveError::Unavailable(e.to_string()))?;
        Ok(RemoteRetriever { url: url.into(), timeout, attempts: 3, client })
    }
}

impl Retriever for RemoteRetriever {
    fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievedDoc>, RetrieveError> {
        let mut last_err = String::new();
        for attempt in 1..=self.attempts {
            let result = self
                .client
                .post(&self.url)
                .json(&serde_json::json!({ "query": query, "k": k }))
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.json::<RetrieveResponse>());
            match result {
                Ok(response) => {
                    let mut docs = response.results;
                    if docs.len() > k {
                        log::warn!("retriever returned {} docs for k={k}; truncating", docs.len());
                        docs.truncate(k);
                    }
                    let sorted = docs.windows(2).all(|w| w[0].score >= w[1].score);
                    if !sorted {
                        log::warn!("retriever returned unsorted scores; re-sorting locally");
                        docs.sort_by(|a, b| {
                            b.score
                                .partial_cmp(&a.score)
                                .unwrap_or(std::cmp::Ordering::Equal)
                                .then_with(|| a.doc_id.cmp(&b.doc_id))
                        });
                    }
                    return Ok(docs);
                }
                Err(e) => {
                    last_err = e.to_string();
                    log::warn!("retriever attempt {attempt} failed: {last_err}");
                }
            }
        }
        Err(RetrieveError::Unavailable(last_err))
    }
}

/// HTTP policy backend speaking a chat-completion protocol: the transcript
/// is sent as a single user message with the stop tags as stop sequences,
/// and sampling params are merged into the request body untouched.
pub struct RemotePolicy {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub attempts: u32,
    client: reqwest::blocking::Client,
}

impl RemotePolicy {
    pub fn new(url: impl Into<String>) -> Result<Self, PolicyError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| PolicyError::Unavailable(e.to_string()))?;
        Ok(RemotePolicy {
            url: url.into(),
            model: "policy".to_string(),
            api_key: std::env::var("POLICY_API_KEY").ok(),
            attempts: 3,
            client,
        })
    }
}

impl PolicyBackend for RemotePolicy {
    fn generate(
        &mut self,
        transcript: &str,
        stop_tags: &[&str],
        sampling: &SamplingParams,
    ) -> Result<String, PolicyError> {
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [{ "role": "user", "content": transcript }],
            "stop": stop_tags,
        });
        for (key, value) in sampling {
            body[key] = value.clone();
        }
        let mut last_err = String::new();
        for attempt in 1..=self.attempts {
            let mut request = self.client.post(&self.url).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            let result = request
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.json::<serde_json::Value>());
            match result {
                Ok(v) => {
                    let content = v["choices"][0]["message"]["content"].as_str().map(String::from);
                    match content {
                        Some(c) => return Ok(c),
                        None => last_err = "policy response had no content".to_string(),
                    }
                }
                Err(e) => last_err = e.to_string(),
            }
            log::warn!("policy attempt {attempt} failed: {last_err}");
        }
        Err(PolicyError::Unavailable(last_err))
    }
}

/// Replays a fixed list of segments; used by tests and offline fixtures.
pub struct ScriptedPolicy {
    segments: Vec<String>,
    cursor: usize,
}

impl ScriptedPolicy {
    pub fn new(segments: Vec<String>) -> Self {
        ScriptedPolicy { segments, cursor: 0 }
    }
}

impl PolicyBackend for ScriptedPolicy {
    fn generate(
        &mut self,
        _transcript: &str,
        _stop_tags: &[&str],
        _sampling: &SamplingParams,
    ) -> Result<String, PolicyError> {
        let segment = self.segments.get(self.cursor).cloned().unwrap_or_default();
        self.cursor += 1;
        Ok(segment)
    }
}

// ---------------------------------------------------------------------------
// Turn statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TurnBuckets {
    pub one: f64,
    pub two: f64,
    pub three_plus: f64,
}

/// Turn-count summary split by outcome, in the 1 / 2 / 3+ bucket layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnStats {
    pub mean_turns_success: Option<f64>,
    pub mean_turns_failure: Option<f64>,
    pub success: TurnBuckets,
    pub failure: TurnBuckets,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("traces and outcomes have mismatched lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no traces to summarize")]
    Empty,
}

/// Bucketed turn distribution per outcome class. Episodes that answered
/// without searching fall into the `1` bucket.
pub fn turn_statistics(traces: &[EpisodeTrace], outcomes: &[bool]) -> Result<TurnStats, StatsError> {
    if traces.len() != outcomes.len() {
        return Err(StatsError::LengthMismatch(traces.len(), outcomes.len()));
    }
    if traces.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut counts = [[0usize; 3]; 2];
    let mut sums = [0usize; 2];
    let mut totals = [0usize; 2];
    for (trace, &success) in traces.iter().zip(outcomes) {
        let class = usize::from(!success); // 0 = success, 1 = failure
        let bucket = match trace.turns_used {
            0 | 1 => 0,
            2 => 1,
            _ => 2,
        };
        counts[class][bucket] += 1;
        sums[class] += trace.turns_used;
        totals[class] += 1;
    }
    let buckets = |class: usize| {
        let n = totals[class];
        if n == 0 {
            TurnBuckets::default()
        } else {
            TurnBuckets {
                one: counts[class][0] as f64 / n as f64,
                two: counts[class][1] as f64 / n as f64,
                three_plus: counts[class][2] as f64 / n as f64,
            }
        }
    };
    let mean = |class: usize| {
        if totals[class] == 0 {
            None
        } else {
            Some(sums[class] as f64 / totals[class] as f64)
        }
    };
    Ok(TurnStats {
        mean_turns_success: mean(0),
        mean_turns_failure: mean(1),
        success: buckets(0),
        failure: buckets(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{format_flags, parse_trajectory};
    use crate::types::StepKind;

    fn world_retriever() -> LexicalRetriever {
        LexicalRetriever::new(vec![
            CorpusDoc { doc_id: "f0".into(), body: "The rel1 of e0 is e1.".into() },
            CorpusDoc { doc_id: "f1".into(), body: "The rel2 of e1 is e2.".into() },
            CorpusDoc { doc_id: "f2".into(), body: "The rel1 of e9 is e8.".into() },
        ])
    }

    fn sample() -> QASample {
        QASample::new("s1", "who is the rel2 of the rel1 of e0", &["e2"])
    }

    #[test]
    fn lexical_retriever_ranks_exact_fact_first() {
        let r = world_retriever();
        let docs = r.retrieve("rel1 of e0", 3).unwrap();
        assert_eq!(docs[0].doc_id, "f0");
        assert!((docs[0].score - 1.0).abs() < 1e-12);
        assert!(docs.len() <= 3);
        // No overlap: empty by default.
        assert!(r.retrieve("zzz qqq", 3).unwrap().is_empty());
        // k larger than corpus returns everything that scores.
        assert_eq!(r.retrieve("rel1 rel2 e0 e1 e9", 10).unwrap().len(), 3);
    }

    #[test]
    fn empty_corpus_errors() {
        let r = LexicalRetriever::new(vec![]);
        assert!(matches!(r.retrieve("q", 3), Err(RetrieveError::EmptyCorpus)));
    }

    #[test]
    fn episode_with_tool_call_then_answer() {
        let mut policy = ScriptedPolicy::new(vec![
            "1. find rel1 of e0\n2. find rel2</reasoning>\n<tool_call>rel1 of e0</tool_call>".into(),
            "<reasoning>got e1</reasoning>\n<answer>e2</answer>".into(),
        ]);
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert_eq!(trace.turns_used, 1);
        assert!(!trace.forced_answer);
        assert!(!trace.budget_exhausted);
        assert_eq!(trace.trajectory.answer(), Some("e2"));
        assert_eq!(trace.trajectory.n_actions(), 1);
        // Raw transcript parses and is fully compliant.
        let raw = trace.trajectory.raw_text.as_deref().unwrap();
        let flags = format_flags(raw);
        assert!(flags.valid_format && flags.has_answer && flags.has_tool_call);
        let reparsed = parse_trajectory(raw, "s1").unwrap();
        assert_eq!(reparsed.n_actions(), 1);
    }

    struct AlwaysSearch;
    impl PolicyBackend for AlwaysSearch {
        fn generate(
            &mut self,
            _t: &str,
            _s: &[&str],
            _p: &SamplingParams,
        ) -> Result<String, PolicyError> {
            Ok("thinking</reasoning>\n<tool_call>rel1 of e0</tool_call>".into())
        }
    }

    #[test]
    fn budget_exhaustion_forces_an_answer() {
        let mut policy = AlwaysSearch;
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert_eq!(trace.turns_used, 4);
        assert!(trace.budget_exhausted);
        assert!(trace.forced_answer);
        let last = trace.trajectory.steps.last().unwrap();
        assert_eq!(last.kind, StepKind::Answer);
        assert_eq!(trace.trajectory.n_actions(), 4);
    }

    #[test]
    fn immediate_answer_uses_zero_turns() {
        let mut policy = ScriptedPolicy::new(vec!["done</reasoning><answer>e2</answer>".into()]);
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert_eq!(trace.turns_used, 0);
        assert_eq!(trace.trajectory.n_actions(), 0);
        assert!(!trace.forced_answer);
    }

    #[test]
    fn malformed_segment_becomes_truncated_reasoning() {
        let mut policy = ScriptedPolicy::new(vec![
            "rambling with no stop tag at all".into(),
            "e2</answer>".into(),
        ]);
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert!(trace.forced_answer);
        assert_eq!(trace.trajectory.answer(), Some("e2"));
        assert!(!trace.budget_exhausted);
    }

    struct MultiCall;
    impl PolicyBackend for MultiCall {
        fn generate(
            &mut self,
            transcript: &str,
            _s: &[&str],
            _p: &SamplingParams,
        ) -> Result<String, PolicyError> {
            if transcript.contains("<tool_response>") {
                Ok("done</reasoning><answer>e2</answer>".into())
            } else {
                Ok("x</reasoning><tool_call>bogus one</tool_call>\n<tool_call>rel1 of e0</tool_call>".into())
            }
        }
    }

    #[test]
    fn multiple_tool_calls_in_one_segment_keep_the_last() {
        let mut policy = MultiCall;
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert_eq!(trace.trajectory.tool_queries(), vec!["rel1 of e0"]);
        assert_eq!(trace.turns_used, 1);
    }

    struct FailingPolicy;
    impl PolicyBackend for FailingPolicy {
        fn generate(
            &mut self,
            _t: &str,
            _s: &[&str],
            _p: &SamplingParams,
        ) -> Result<String, PolicyError> {
            Err(PolicyError::Unavailable("down".into()))
        }
    }

    #[test]
    fn policy_failure_yields_partial_trace_with_error() {
        let mut policy = FailingPolicy;
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert!(trace.error.is_some());
        assert!(!trace.forced_answer);
    }

    #[test]
    fn forced_answer_without_close_appends_empty_answer() {
        let mut policy = ScriptedPolicy::new(vec![
            "no stop tag".into(),
            "junk that never closes".into(),
        ]);
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let trace = run_episode(&sample(), &mut policy, &retriever, &cfg, &SamplingParams::new());
        assert_eq!(trace.trajectory.answer(), Some(""));
        // The step list keeps its invariants even though the raw transcript
        // is damaged (the seeded <reasoning> was never closed).
        assert!(trace.trajectory.violations(cfg.budget as usize).is_empty());
        let flags = format_flags(trace.trajectory.raw_text.as_deref().unwrap());
        assert!(!flags.valid_format);
        assert!(!flags.has_answer);
    }

    #[test]
    fn deterministic_episodes_are_reproducible() {
        let script = || {
            ScriptedPolicy::new(vec![
                "p</reasoning><tool_call>rel1 of e0</tool_call>".into(),
                "<reasoning>ok</reasoning><answer>e2</answer>".into(),
            ])
        };
        let retriever = world_retriever();
        let cfg = AgentConfig::default();
        let a = run_episode(&sample(), &mut script(), &retriever, &cfg, &SamplingParams::new());
        let b = run_episode(&sample(), &mut script(), &retriever, &cfg, &SamplingParams::new());
        assert_eq!(a.trajectory, b.trajectory);
        assert_eq!(a.trajectory.raw_text, b.trajectory.raw_text);
    }

    #[test]
    fn turn_statistics_buckets() {
        let mk = |turns: usize| EpisodeTrace {
            trajectory: Trajectory::new("s", vec![]),
            turns_used: turns,
            budget_exhausted: false,
            forced_answer: false,
            wall_time: Duration::ZERO,
            error: None,
        };
        let traces = vec![mk(1), mk(1), mk(2)];
        let stats = turn_statistics(&traces, &[true, true, false]).unwrap();
        assert_eq!(stats.success, TurnBuckets { one: 1.0, two: 0.0, three_plus: 0.0 });
        assert_eq!(stats.failure, TurnBuckets { one: 0.0, two: 1.0, three_plus: 0.0 });
        assert_eq!(stats.mean_turns_success, Some(1.0));

        assert!(turn_statistics(&[], &[]).is_err());
        assert!(turn_statistics(&traces, &[true]).is_err());

        let all3 = vec![mk(3), mk(5)];
        let stats = turn_statistics(&all3, &[false, false]).unwrap();
        assert_eq!(stats.failure.three_plus, 1.0);
    }
}
