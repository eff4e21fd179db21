//! Obtaining trajectory verdicts: prompt rendering for the LLM judge,
//! robust verdict parsing, a remote judge client that degrades instead of
//! failing, a deterministic rule oracle for tests and the sandbox, and
//! agreement measurement between evaluators.

use crate::codec::extract_plan_steps;
use crate::decimal::Dec;
use crate::jsonl;
use crate::reward::{containment_acc, exact_match};
use crate::text::token_jaccard;
use crate::types::{EvaluatorVerdict, QASample, ReferenceBundle, Trajectory};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Duration;
use thiserror::Error;

/// Default token-overlap threshold above which a query accomplishes a step.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.6;

pub const EVALUATION_PROMPT_TEMPLATE: &str = include_str!("../assets/evaluation_prompt.txt");

/// Everything the judge needs to rate one trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorRequest {
    pub question: String,
    pub golden_answers: Vec<String>,
    pub ref_planner: String,
    pub ref_path: Vec<String>,
    /// Canonical rendering of the judged trajectory.
    pub trajectory_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("missing field `{0}` in evaluator request")]
pub struct MissingField(pub &'static str);

/// Substitutes the request into the evaluation prompt template. Every
/// placeholder value must be present and non-empty.
pub fn render_eval_prompt(req: &EvaluatorRequest) -> Result<String, MissingField> {
    if req.question.trim().is_empty() {
        return Err(MissingField("question"));
    }
    if req.golden_answers.is_empty() || req.golden_answers.iter().all(|a| a.trim().is_empty()) {
        return Err(MissingField("golden_answers"));
    }
    if req.ref_planner.trim().is_empty() {
        return Err(MissingField("ref_planner"));
    }
    if req.ref_path.is_empty() {
        return Err(MissingField("ref_path"));
    }
    if req.trajectory_text.trim().is_empty() {
        return Err(MissingField("trajectory"));
    }
    let path_rendered = req
        .ref_path
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {s}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(EVALUATION_PROMPT_TEMPLATE
        .replace("{question}", &req.question)
        .replace("{golden_answers}", &req.golden_answers.join(", "))
        .replace("{ref_planner}", &req.ref_planner)
        .replace("{ref_reasoning_path}", &path_rendered)
        .replace("{trajectory}", &req.trajectory_text))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerdictParseError {
    #[error("no JSON object found in judge output")]
    NoObject,
    #[error("judge object is missing numeric field `{0}`")]
    MissingField(String),
}

/// Extracts the verdict from arbitrary judge output: locates the first
/// well-formed JSON object literal, reads the six required fields, snaps
/// score fields onto their grids (marking the verdict degraded when
/// anything moved), and clamps `effective_steps_self` to the plan size.
pub fn parse_verdict(raw: &str) -> Result<EvaluatorVerdict, VerdictParseError> {
    let obj = first_json_object(raw).ok_or(VerdictParseError::NoObject)?;
    let mut degraded = false;

    let score = |name: &str| -> Result<Dec, VerdictParseError> {
        let x = obj
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| VerdictParseError::MissingField(name.to_string()))?;
        Ok(Dec::thousandths((x * 1000.0).round() as i64))
    };
    let mut count = |name: &str| -> Result<u32, VerdictParseError> {
        let x = obj
            .get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| VerdictParseError::MissingField(name.to_string()))?;
        if x < 0.0 {
            degraded = true;
            return Ok(0);
        }
        Ok(x.round() as u32)
    };

    let model_plan_steps = count("model_plan_steps")?;
    let effective_steps_self = count("effective_steps_self")?;
    let effective_steps_ref = count("effective_steps_ref")?;
    let verdict = EvaluatorVerdict {
        planner_score: score("planner_score")?,
        model_plan_steps,
        effective_steps_self: effective_steps_self.min(model_plan_steps),
        effective_steps_ref,
        outcome_accuracy: score("outcome_accuracy_score")?,
        outcome_reasoning: score("outcome_reasoning_score")?,
        degraded,
    };
    Ok(verdict.snap_scores())
}

/// First balanced `{...}` region of `raw` that parses as a JSON object.
fn first_json_object(raw: &str) -> Option<Value> {
    let bytes = raw.as_bytes();
    let mut start = 0;
    while let Some(rel) = raw[start..].find('{') {
        let open = start + rel;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(open) {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        let candidate = &raw[open..=i];
                        if let Ok(v @ Value::Object(_)) = serde_json::from_str::<Value>(candidate) {
                            return Some(v);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
        start = open + 1;
    }
    None
}

// ---------------------------------------------------------------------------
// Rule oracle
// ---------------------------------------------------------------------------

/// Maximum-cardinality bipartite matching (Kuhn's augmenting paths) over
/// the given edge list. The cardinality is a graph invariant, so crediting
/// is injective and independent of input ordering.
fn max_matching(n_left: usize, n_right: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n_left];
    for &(l, r) in edges {
        adj[l].push(r);
    }
    let mut match_right: Vec<Option<usize>> = vec![None; n_right];

    fn try_augment(
        l: usize,
        adj: &[Vec<usize>],
        match_right: &mut [Option<usize>],
        visited: &mut [bool],
    ) -> bool {
        for &r in &adj[l] {
            if visited[r] {
                continue;
            }
            visited[r] = true;
            if match_right[r].is_none()
                || try_augment(match_right[r].unwrap(), adj, match_right, visited)
            {
                match_right[r] = Some(l);
                return true;
            }
        }
        false
    }

    let mut size = 0;
    for l in 0..n_left {
        let mut visited = vec![false; n_right];
        if try_augment(l, &adj, &mut match_right, &mut visited) {
            size += 1;
        }
    }
    size
}

/// Number of `targets` entries accomplished by `sources`, where a source
/// accomplishes a target when their token-set Jaccard overlap reaches the
/// threshold. Each side is creditable once.
pub fn coverage_count(sources: &[&str], targets: &[&str], threshold: f64) -> usize {
    let mut edges = Vec::new();
    for (i, s) in sources.iter().enumerate() {
        for (j, t) in targets.iter().enumerate() {
            if token_jaccard(s, t) >= threshold {
                edges.push((i, j));
            }
        }
    }
    max_matching(sources.len(), targets.len(), &edges)
}

/// Deterministic rule-based evaluation standing in for the LLM judge.
///
/// Coverage and plan-execution counts come from order-agnostic token
/// matching; the plan rating reflects how much of the reference the plan
/// anticipates, with the top grade reserved for a plan that covers the
/// whole reference in exactly as many steps.
pub fn oracle_evaluate(
    t: &Trajectory,
    sample: &QASample,
    reference: &ReferenceBundle,
) -> EvaluatorVerdict {
    oracle_evaluate_with_threshold(t, sample, reference, DEFAULT_MATCH_THRESHOLD)
}

pub fn oracle_evaluate_with_threshold(
    t: &Trajectory,
    sample: &QASample,
    reference: &ReferenceBundle,
    threshold: f64,
) -> EvaluatorVerdict {
    if t.steps.is_empty() {
        return EvaluatorVerdict {
            degraded: false,
            ..EvaluatorVerdict::zero_degraded()
        };
    }

    let queries = t.tool_queries();
    let ref_steps: Vec<&str> = reference.ref_path.iter().map(String::as_str).collect();
    let plan_steps = extract_plan_steps(t);
    let plan_refs: Vec<&str> = plan_steps.iter().map(String::as_str).collect();

    let n_covered = coverage_count(&queries, &ref_steps, threshold);
    let n_exec_self = coverage_count(&plan_refs, &queries, threshold);
    let plan_cover = coverage_count(&plan_refs, &ref_steps, threshold);

    let ref_len = ref_steps.len();
    let planner_score = if ref_len > 0 && plan_cover == ref_len {
        if plan_steps.len() == ref_len {
            Dec::thousandths(1200)
        } else {
            Dec::ONE
        }
    } else if plan_cover >= 1 {
        Dec::thousandths(600)
    } else {
        Dec::thousandths(200)
    };

    let answer = t.answer().unwrap_or("");
    let outcome_accuracy = if exact_match(answer, &sample.golden_answers) {
        Dec::ONE
    } else if containment_acc(answer, &sample.golden_answers) {
        Dec::thousandths(500)
    } else {
        Dec::ZERO
    };

    let outcome_reasoning = if ref_len == 0 || n_covered == 0 {
        Dec::ZERO
    } else if n_covered == ref_len {
        Dec::ONE
    } else if 2 * n_covered >= ref_len {
        Dec::thousandths(800)
    } else {
        Dec::thousandths(500)
    };

    EvaluatorVerdict {
        planner_score,
        model_plan_steps: plan_steps.len() as u32,
        effective_steps_self: n_exec_self as u32,
        effective_steps_ref: n_covered as u32,
        outcome_accuracy,
        outcome_reasoning,
        degraded: false,
    }
    .clamp_counts(t.n_actions(), ref_len)
}

// ---------------------------------------------------------------------------
// Agreement measurement
// ---------------------------------------------------------------------------

/// Per-dimension agreement rates between two aligned verdict lists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: usize,
    pub plan_agreement: f64,
    pub step_agreement: f64,
    pub outcome_agreement: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("verdict lists have mismatched lengths: {0} vs {1}")]
pub struct LengthMismatch(pub usize, pub usize);

/// Fraction of index-aligned pairs agreeing on each dimension: plan rating,
/// both effective step counts, and both outcome sub-scores.
pub fn measure_agreement(
    a: &[EvaluatorVerdict],
    b: &[EvaluatorVerdict],
) -> Result<AgreementReport, LengthMismatch> {
    if a.len() != b.len() || a.is_empty() {
        return Err(LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    let mut plan = 0usize;
    let mut step = 0usize;
    let mut outcome = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x.planner_score == y.planner_score {
            plan += 1;
        }
        if x.effective_steps_self == y.effective_steps_self
            && x.effective_steps_ref == y.effective_steps_ref
        {
            step += 1;
        }
        if x.outcome_accuracy == y.outcome_accuracy && x.outcome_reasoning == y.outcome_reasoning {
            outcome += 1;
        }
    }
    Ok(AgreementReport {
        n,
        plan_agreement: plan as f64 / n as f64,
        step_agreement: step as f64 / n as f64,
        outcome_agreement: outcome as f64 / n as f64,
    })
}

// ---------------------------------------------------------------------------
// Remote judge
// ---------------------------------------------------------------------------

/// Chat-completion judge endpoint. Temperature is pinned to zero so the
/// judge is as deterministic as the service allows.
#[derive(Debug, Clone)]
pub struct JudgeEndpoint {
    pub url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub base_backoff: Duration,
}

impl JudgeEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        JudgeEndpoint {
            url: url.into(),
            model: "judge".to_string(),
            api_key: std::env::var("EVALUATOR_API_KEY").ok(),
            timeout: Duration::from_secs(30),
            base_backoff: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: Vec<ChatMessage<'a>>,
    temperature: f64,
}

#[derive(Debug, Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ChatResponseMessage {
    content: String,
}

/// Posts the rendered prompt to the judge endpoint and parses the verdict.
/// Never raises: after `retry_budget` failed attempts (exponential backoff
/// with jitter) it returns the all-zero degraded verdict so that training
/// continues with a pessimistic reward instead of stalling.
pub fn remote_evaluate(
    req: &EvaluatorRequest,
    endpoint: &JudgeEndpoint,
    retry_budget: u32,
) -> EvaluatorVerdict {
    let prompt = match render_eval_prompt(req) {
        Ok(p) => p,
        Err(e) => {
            log::warn!("evaluator request unusable ({e}); returning degraded verdict");
            return EvaluatorVerdict::zero_degraded();
        }
    };
    let client = match reqwest::blocking::Client::builder().timeout(endpoint.timeout).build() {
        Ok(c) => c,
        Err(e) => {
            log::warn!("judge client construction failed ({e}); returning degraded verdict");
            return EvaluatorVerdict::zero_degraded();
        }
    };

    for attempt in 1..=retry_budget.max(1) {
        match post_judge(&client, endpoint, &prompt) {
            Ok(raw) => match parse_verdict(&raw) {
                Ok(v) => return v,
                Err(e) => log::warn!("judge output unparseable on attempt {attempt}: {e}"),
            },
            Err(e) => log::warn!("judge transport error on attempt {attempt}: {e}"),
        }
        if attempt < retry_budget {
            let factor = 1u64 << (attempt - 1).min(6);
            let jitter = rand::random::<u64>() % 100;
            std::thread::sleep(endpoint.base_backoff * factor as u32 + Duration::from_millis(jitter));
        }
    }
    EvaluatorVerdict::zero_degraded()
}

fn post_judge(
    client: &reqwest::blocking::Client,
    endpoint: &JudgeEndpoint,
    prompt: &str,
) -> Result<String, String> {
    let body = ChatRequest {
        model: &endpoint.model,
        messages: vec![ChatMessage { role: "user", content: prompt }],
        temperature: 0.0,
    };
    let mut request = client.post(&endpoint.url).json(&body);
    if let Some(key) = &endpoint.api_key {
        request = request.bearer_auth(key);
    }
    let response = request.send().map_err(|e| e.to_string())?;
    if !response.status().is_success() {
        return Err(format!("judge returned status {}", response.status()));
    }
    let parsed: ChatResponse = response.json().map_err(|e| e.to_string())?;
    parsed
        .choices
        .first()
        .map(|c| c.message.content.clone())
        .ok_or_else(|| "judge response had no choices".to_string())
}

/// Scores a batch with at most `max_in_flight` concurrent judge calls,
/// preserving input order.
pub fn evaluate_batch(
    reqs: &[EvaluatorRequest],
    endpoint: &JudgeEndpoint,
    retry_budget: u32,
    max_in_flight: usize,
) -> Vec<EvaluatorVerdict> {
    let mut out = Vec::with_capacity(reqs.len());
    for chunk in reqs.chunks(max_in_flight.max(1)) {
        let verdicts = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|r| scope.spawn(move || remote_evaluate(r, endpoint, retry_budget)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("judge worker panicked")).collect::<Vec<_>>()
        });
        out.extend(verdicts);
    }
    out
}

// ---------------------------------------------------------------------------
// Verdict cache
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheRecord {
    sample_id: String,
    content_hash: String,
    verdict: EvaluatorVerdict,
}

/// Append-only verdict cache keyed by (sample_id, trajectory content hash).
#[derive(Debug)]
pub struct VerdictCache {
    path: PathBuf,
    entries: HashMap<(String, String), EvaluatorVerdict>,
}

impl VerdictCache {
    /// Opens (or starts) a cache file; existing records are loaded.
    pub fn open(path: &Path) -> Result<Self, jsonl::JsonlError> {
        let entries = if path.exists() {
            jsonl::read_jsonl::<CacheRecord>(path)?
                .into_iter()
                .map(|r| ((r.sample_id, r.content_hash), r.verdict))
                .collect()
        } else {
            HashMap::new()
        };
        Ok(VerdictCache { path: path.to_path_buf(), entries })
    }

    pub fn hash_content(text: &str) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut acc, b| {
            use std::fmt::Write;
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }

    pub fn get(&self, sample_id: &str, trajectory_text: &str) -> Option<EvaluatorVerdict> {
        let key = (sample_id.to_string(), Self::hash_content(trajectory_text));
        self.entries.get(&key).copied()
    }

    pub fn put(
        &mut self,
        sample_id: &str,
        trajectory_text: &str,
        verdict: EvaluatorVerdict,
    ) -> Result<(), jsonl::JsonlError> {
        let hash = Self::hash_content(trajectory_text);
        let record = CacheRecord {
            sample_id: sample_id.to_string(),
            content_hash: hash.clone(),
            verdict,
        };
        jsonl::append_jsonl(&self.path, &record)?;
        self.entries.insert((sample_id.to_string(), hash), verdict);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Provenance, TrajectoryStep};

    fn request() -> EvaluatorRequest {
        EvaluatorRequest {
            question: "Q?".to_string(),
            golden_answers: vec!["gold".to_string()],
            ref_planner: "plan text".to_string(),
            ref_path: vec!["step a".to_string(), "step b".to_string()],
            trajectory_text: "<answer>gold</answer>".to_string(),
        }
    }

    #[test]
    fn prompt_contains_scoring_grid_and_values() {
        let p = render_eval_prompt(&request()).unwrap();
        assert!(p.contains("0.2 (Bad) / 0.6 (Average) / 1.0 (Good) / 1.2 (Excellent)"));
        assert!(p.contains("Q?"));
        assert_eq!(p.matches("Q?").count(), 1);
        assert!(p.contains("1. step a\n2. step b"));
        assert!(p.contains("<answer>gold</answer>"));
    }

    #[test]
    fn empty_ref_path_is_missing_field() {
        let mut r = request();
        r.ref_path.clear();
        assert_eq!(render_eval_prompt(&r), Err(MissingField("ref_path")));
    }

    #[test]
    fn parses_clean_verdict_json() {
        let raw = r#"{"planner_score":1.0,"model_plan_steps":2,"effective_steps_self":2,
            "effective_steps_ref":2,"outcome_accuracy_score":1.0,"outcome_reasoning_score":1.0}"#;
        let v = parse_verdict(raw).unwrap();
        assert_eq!(v.planner_score, Dec::ONE);
        assert_eq!(v.model_plan_steps, 2);
        assert_eq!(v.effective_steps_ref, 2);
        assert!(!v.degraded);
    }

    #[test]
    fn snaps_off_grid_scores_and_flags_degraded() {
        let raw = r#"{"planner_score":0.9,"model_plan_steps":1,"effective_steps_self":1,
            "effective_steps_ref":0,"outcome_accuracy_score":0.5,"outcome_reasoning_score":0.8}"#;
        let v = parse_verdict(raw).unwrap();
        assert_eq!(v.planner_score, Dec::ONE);
        assert!(v.degraded);
    }

    #[test]
    fn extracts_object_embedded_in_prose() {
        let raw = r#"Let me think. The scores are {"planner_score":0.6,"model_plan_steps":3,
            "effective_steps_self":5,"effective_steps_ref":1,"outcome_accuracy_score":0.0,
            "outcome_reasoning_score":0.5} as requested."#;
        let v = parse_verdict(raw).unwrap();
        assert_eq!(v.planner_score, Dec::thousandths(600));
        // Clamped to the plan size at ingestion.
        assert_eq!(v.effective_steps_self, 3);
    }

    #[test]
    fn refusals_and_junk_fail_to_parse() {
        assert_eq!(parse_verdict("I cannot evaluate"), Err(VerdictParseError::NoObject));
        assert!(matches!(
            parse_verdict(r#"{"planner_score":1.0}"#),
            Err(VerdictParseError::MissingField(_))
        ));
        // A broken object followed by a good one: the good one wins.
        let raw = r#"{oops} {"planner_score":0.2,"model_plan_steps":0,"effective_steps_self":0,
            "effective_steps_ref":0,"outcome_accuracy_score":0.0,"outcome_reasoning_score":0.0}"#;
        assert!(parse_verdict(raw).is_ok());
    }

    #[test]
    fn verdict_serialization_round_trips_through_parse() {
        let v = EvaluatorVerdict {
            planner_score: Dec::thousandths(1200),
            model_plan_steps: 3,
            effective_steps_self: 2,
            effective_steps_ref: 1,
            outcome_accuracy: Dec::thousandths(500),
            outcome_reasoning: Dec::thousandths(800),
            degraded: false,
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(parse_verdict(&json).unwrap(), v);
    }

    fn trajectory(plan: &str, queries: &[&str], answer: &str) -> Trajectory {
        let mut steps = vec![TrajectoryStep::reasoning(plan)];
        for q in queries {
            steps.push(TrajectoryStep::tool_call(*q));
            steps.push(TrajectoryStep::tool_response(format!("docs for {q}")));
        }
        steps.push(TrajectoryStep::answer(answer));
        Trajectory::new("s1", steps)
    }

    fn reference(steps: &[&str]) -> ReferenceBundle {
        ReferenceBundle {
            sample_id: "s1".to_string(),
            ref_planner: "do the steps".to_string(),
            ref_path: steps.iter().map(|s| s.to_string()).collect(),
            provenance: Provenance::Oracle,
        }
    }

    #[test]
    fn oracle_counts_coverage_order_agnostically() {
        let reference = reference(&["r1 of ent0", "r2 of ent1"]);
        let sample = QASample::new("s1", "q?", &["ent2"]);
        let forward = trajectory("1. r1 of ent0\n2. r2 of ent1", &["r1 of ent0", "r2 of ent1"], "ent2");
        let reversed = trajectory("1. r1 of ent0\n2. r2 of ent1", &["r2 of ent1", "r1 of ent0"], "ent2");
        let vf = oracle_evaluate(&forward, &sample, &reference);
        let vr = oracle_evaluate(&reversed, &sample, &reference);
        assert_eq!(vf.effective_steps_ref, 2);
        assert_eq!(vr.effective_steps_ref, 2);
        assert_eq!(vf.outcome_accuracy, Dec::ONE);
        // Plan enumerates both steps with n_plan == ref_len: top grade.
        assert_eq!(vf.planner_score, Dec::thousandths(1200));
    }

    #[test]
    fn oracle_on_empty_trajectory_is_all_zero() {
        let t = Trajectory::new("s1", vec![]);
        let sample = QASample::new("s1", "q?", &["x"]);
        let v = oracle_evaluate(&t, &sample, &reference(&["a"]));
        assert_eq!(v.effective_steps_ref, 0);
        assert_eq!(v.planner_score, Dec::ZERO);
        assert!(!v.degraded);
    }

    #[test]
    fn crediting_is_injective_under_multi_match() {
        // One query lexically matches both reference steps; coverage is 1.
        let n = coverage_count(&["find the album name"], &["find the album name", "find the album name again now"], 0.5);
        assert_eq!(n, 1);
        // Two queries, two steps, full cross matching: coverage 2.
        let n = coverage_count(
            &["alpha beta gamma", "alpha beta delta"],
            &["alpha beta gamma", "alpha beta delta"],
            0.4,
        );
        assert_eq!(n, 2);
    }

    #[test]
    fn agreement_on_identical_and_planted_lists() {
        let v = EvaluatorVerdict {
            planner_score: Dec::ONE,
            model_plan_steps: 2,
            effective_steps_self: 2,
            effective_steps_ref: 2,
            outcome_accuracy: Dec::ONE,
            outcome_reasoning: Dec::ONE,
            degraded: false,
        };
        let a = vec![v; 200];
        let mut b = a.clone();
        let r = measure_agreement(&a, &b).unwrap();
        assert_eq!((r.plan_agreement, r.step_agreement, r.outcome_agreement), (1.0, 1.0, 1.0));

        for item in b.iter_mut().take(11) {
            item.planner_score = Dec::thousandths(600);
        }
        let r = measure_agreement(&a, &b).unwrap();
        assert!((r.plan_agreement - 0.945).abs() < 1e-12);

        assert!(measure_agreement(&a[..3], &a[..2]).is_err());
    }
}
