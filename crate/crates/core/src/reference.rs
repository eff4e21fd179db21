//! Offline generation of reference bundles: rejection-sample candidate
//! episodes, keep the correct ones, and distill the majority query set
//! into an ordered reference path, with a single-pass prompted fallback
//! and a persistent JSONL cache.

use crate::config::AgentConfig;
use crate::jsonl;
use crate::reward::exact_match;
use crate::runtime::{run_episode, PolicyBackend, Retriever, SamplingParams};
use crate::text::normalize_light;
use crate::types::{Provenance, QASample, ReferenceBundle, Trajectory};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

pub const PLANNER_PROMPT_TEMPLATE: &str = include_str!("../assets/planner_prompt.txt");
pub const REASONING_PROMPT_TEMPLATE: &str = include_str!("../assets/reasoning_prompt.txt");

/// Candidate trajectories for one sample with their correctness mask.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub sample_id: String,
    pub candidates: Vec<Trajectory>,
    pub correct_mask: Vec<bool>,
    /// Episodes actually run (early stopping may use fewer than K).
    pub calls_used: usize,
}

impl CandidateSet {
    pub fn correct(&self) -> Vec<&Trajectory> {
        self.candidates
            .iter()
            .zip(&self.correct_mask)
            .filter_map(|(t, &ok)| ok.then_some(t))
            .collect()
    }
}

/// Everything needed to roll candidate episodes.
pub struct EpisodeRunner<'a> {
    pub retriever: &'a dyn Retriever,
    pub cfg: &'a AgentConfig,
    pub sampling: &'a SamplingParams,
}

/// Collect enough correct candidates before K is exhausted; sampling more
/// once this many are in hand buys little for the vote.
pub const EARLY_STOP_CORRECT: usize = 3;

/// Rolls up to `k` independent episodes and marks which answered
/// correctly. Stops early once [`EARLY_STOP_CORRECT`] correct candidates
/// are collected. Episodes that die on transport errors are dropped, so
/// the candidate list may be shorter than `k`.
pub fn generate_candidates(
    sample: &QASample,
    k: usize,
    make_policy: &mut dyn FnMut(usize) -> Box<dyn PolicyBackend>,
    runner: &EpisodeRunner,
) -> CandidateSet {
    let mut candidates = Vec::new();
    let mut mask = Vec::new();
    let mut calls = 0;
    for episode_idx in 0..k {
        let mut policy = make_policy(episode_idx);
        let trace = run_episode(sample, policy.as_mut(), runner.retriever, runner.cfg, runner.sampling);
        calls += 1;
        if let Some(err) = trace.error {
            log::warn!("sample {}: candidate {episode_idx} dropped: {err}", sample.id);
            continue;
        }
        let correct = trace
            .trajectory
            .answer()
            .map(|a| exact_match(a, &sample.golden_answers))
            .unwrap_or(false);
        candidates.push(trace.trajectory);
        mask.push(correct);
        if mask.iter().filter(|&&c| c).count() >= EARLY_STOP_CORRECT {
            break;
        }
    }
    CandidateSet { sample_id: sample.id.clone(), candidates, correct_mask: mask, calls_used: calls }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no query reached a majority across {0} correct candidates")]
pub struct EmptyVote(pub usize);

/// Distills correct candidates into a reference bundle by rule-based
/// voting: normalized queries appearing in a strict majority of candidates
/// are kept and ordered by their mean first-occurrence position. The
/// planner text is a numbered rendering of that list. The vote never
/// invents steps and is invariant to candidate order.
pub fn vote_distill(
    sample_id: &str,
    correct: &[&Trajectory],
) -> Result<ReferenceBundle, EmptyVote> {
    vote_distill_with_fraction(sample_id, correct, 0.5)
}

/// As [`vote_distill`] with an explicit majority fraction: a query is kept
/// when it appears in strictly more than `fraction * n` candidates.
pub fn vote_distill_with_fraction(
    sample_id: &str,
    correct: &[&Trajectory],
    fraction: f64,
) -> Result<ReferenceBundle, EmptyVote> {
    assert!(!correct.is_empty(), "vote requires at least one correct candidate");
    let n = correct.len();

    // Per normalized query: how many candidates contain it, and the sum of
    // its first-occurrence positions in those candidates.
    let mut stats: HashMap<String, (usize, f64)> = HashMap::new();
    for t in correct {
        let mut seen_here: HashMap<String, usize> = HashMap::new();
        for (pos, q) in t.tool_queries().iter().enumerate() {
            let norm = normalize_light(q);
            if norm.is_empty() {
                continue;
            }
            seen_here.entry(norm).or_insert(pos);
        }
        for (norm, pos) in seen_here {
            let entry = stats.entry(norm).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += pos as f64;
        }
    }

    let mut kept: Vec<(String, f64)> = stats
        .into_iter()
        .filter(|(_, (count, _))| *count as f64 > fraction * n as f64)
        .map(|(norm, (count, pos_sum))| (norm, pos_sum / count as f64))
        .collect();
    if kept.is_empty() {
        return Err(EmptyVote(n));
    }
    kept.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));

    let ref_path: Vec<String> = kept.into_iter().map(|(q, _)| q).collect();
    Ok(ReferenceBundle {
        sample_id: sample_id.to_string(),
        ref_planner: synthesize_planner(&ref_path),
        ref_path,
        provenance: Provenance::Voted,
    })
}

/// Numbered planner text for a reference path.
pub fn synthesize_planner(ref_path: &[String]) -> String {
    let mut out = String::from("To solve this, first search for:");
    for (i, step) in ref_path.iter().enumerate() {
        out.push_str(&format!("\n{}. {step}", i + 1));
    }
    out
}

/// Fallback when voting fails: the query list of the shortest correct
/// candidate, in order.
pub fn shortest_correct_fallback(sample_id: &str, correct: &[&Trajectory]) -> ReferenceBundle {
    let shortest = correct
        .iter()
        .min_by_key(|t| (t.n_actions(), t.steps.len()))
        .expect("fallback requires at least one correct candidate");
    let mut ref_path = Vec::new();
    for q in shortest.tool_queries() {
        let norm = normalize_light(q);
        if !norm.is_empty() && !ref_path.contains(&norm) {
            ref_path.push(norm);
        }
    }
    ReferenceBundle {
        sample_id: sample_id.to_string(),
        ref_planner: synthesize_planner(&ref_path),
        ref_path,
        provenance: Provenance::SinglePass,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SinglePassError {
    #[error("generator output is missing the <{0}> block")]
    TemplateParse(&'static str),
    #[error("generator unavailable: {0}")]
    Generator(String),
}

/// Two-call prompted generation of a reference bundle: the planner prompt
/// yields the optimized planner block, then the reasoning prompt (planner
/// included) yields the numbered reasoning path.
pub fn generate_reference_single_pass(
    sample: &QASample,
    generator: &mut dyn PolicyBackend,
) -> Result<ReferenceBundle, SinglePassError> {
    let golden = sample.golden_answers.join(", ");
    let planner_prompt = PLANNER_PROMPT_TEMPLATE
        .replace("{question}", &sample.question)
        .replace("{golden_answers}", &golden);
    let sampling = SamplingParams::new();
    let out1 = generator
        .generate(&planner_prompt, &[], &sampling)
        .map_err(|e| SinglePassError::Generator(e.to_string()))?;
    let planner = extract_block(&out1, "optimized_planner")
        .ok_or(SinglePassError::TemplateParse("optimized_planner"))?;

    let reasoning_prompt = REASONING_PROMPT_TEMPLATE
        .replace("{question}", &sample.question)
        .replace("{golden_answers}", &golden)
        .replace("{planner}", &planner);
    let out2 = generator
        .generate(&reasoning_prompt, &[], &sampling)
        .map_err(|e| SinglePassError::Generator(e.to_string()))?;
    let path_block = extract_block(&out2, "correct_reasoning_path")
        .ok_or(SinglePassError::TemplateParse("correct_reasoning_path"))?;

    let mut ref_path: Vec<String> = Vec::new();
    for step in parse_numbered_list(&path_block) {
        let norm = normalize_light(&step);
        if !norm.is_empty() && !ref_path.iter().any(|p| normalize_light(p) == norm) {
            ref_path.push(step);
        }
    }
    Ok(ReferenceBundle {
        sample_id: sample.id.clone(),
        ref_planner: planner.trim().to_string(),
        ref_path,
        provenance: Provenance::SinglePass,
    })
}

fn extract_block(text: &str, name: &str) -> Option<String> {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let start = text.find(&open)? + open.len();
    let end = start + text[start..].find(&close)?;
    Some(text[start..end].trim().to_string())
}

/// Items of a numbered list ("1. item" / "2) item"), in order.
pub fn parse_numbered_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits == 0 {
            continue;
        }
        if let Some(rest) = trimmed[digits..].strip_prefix(['.', ')']) {
            let item = rest.trim();
            if !item.is_empty() {
                out.push(item.to_string());
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Cache
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum CacheError {
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
    #[error("duplicate sample id `{0}` in cache")]
    DuplicateId(String),
    #[error("bundle for `{id}` violates invariants: {details}")]
    InvalidBundle { id: String, details: String },
}

/// Loads a reference cache file into a map, verifying bundle invariants
/// and rejecting duplicate ids.
pub fn load_cache(path: &Path) -> Result<HashMap<String, ReferenceBundle>, CacheError> {
    let bundles: Vec<ReferenceBundle> = jsonl::read_jsonl(path)?;
    let mut map = HashMap::new();
    for bundle in bundles {
        let violations = bundle.violations();
        if !violations.is_empty() {
            return Err(CacheError::InvalidBundle {
                id: bundle.sample_id.clone(),
                details: violations.join("; "),
            });
        }
        if map.insert(bundle.sample_id.clone(), bundle).is_some() {
            let id = map.keys().next().cloned().unwrap_or_default();
            return Err(CacheError::DuplicateId(id));
        }
    }
    Ok(map)
}

/// Summary of one cache-building run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BuildReport {
    pub total_samples: usize,
    pub newly_built: usize,
    pub skipped_cached: usize,
    pub failed: usize,
    pub generator_calls: usize,
}

use serde::Serialize;

impl BuildReport {
    pub fn mean_calls_per_built(&self) -> f64 {
        if self.newly_built == 0 {
            0.0
        } else {
            self.generator_calls as f64 / self.newly_built as f64
        }
    }
}

/// Builds (or resumes) a reference cache for a dataset. Ids already in the
/// cache file are skipped, so reruns are idempotent and interrupted runs
/// resume. Per sample: roll up to `k` candidates, vote over the correct
/// ones, fall back to the shortest correct candidate when the vote is
/// empty, fall back to single-pass prompting when nothing was correct, and
/// emit no bundle when that also fails.
#[allow(clippy::too_many_arguments)]
pub fn build_cache(
    dataset: &[QASample],
    k: usize,
    make_policy: &mut dyn FnMut(&QASample, usize) -> Box<dyn PolicyBackend>,
    runner: &EpisodeRunner,
    cache_path: &Path,
) -> Result<BuildReport, CacheError> {
    let mut seen_ids = std::collections::HashSet::new();
    for s in dataset {
        if !seen_ids.insert(s.id.clone()) {
            return Err(CacheError::DuplicateId(s.id.clone()));
        }
    }
    let existing = if cache_path.exists() {
        load_cache(cache_path)?
    } else {
        HashMap::new()
    };

    let mut report = BuildReport { total_samples: dataset.len(), ..Default::default() };
    for sample in dataset {
        if existing.contains_key(&sample.id) {
            report.skipped_cached += 1;
            continue;
        }
        let mut factory = |idx: usize| make_policy(sample, idx);
        let set = generate_candidates(sample, k, &mut factory, runner);
        report.generator_calls += set.calls_used;
        let correct = set.correct();
        let bundle = if correct.is_empty() {
            let mut generator = make_policy(sample, k);
            report.generator_calls += 2;
            match generate_reference_single_pass(sample, generator.as_mut()) {
                Ok(b) => Some(b),
                Err(e) => {
                    log::warn!("sample {}: no reference produced: {e}", sample.id);
                    None
                }
            }
        } else {
            match vote_distill(&sample.id, &correct) {
                Ok(b) => Some(b),
                Err(_) => Some(shortest_correct_fallback(&sample.id, &correct)),
            }
        };
        match bundle {
            Some(b) => {
                jsonl::append_jsonl(cache_path, &b)?;
                report.newly_built += 1;
            }
            None => report.failed += 1,
        }
    }
    Ok(report)
}
