//! Deterministic synthetic multi-hop QA world and a toy policy-gradient
//! trainer for studying reward dynamics at desk scale.
//!
//! The world is a set of disjoint relation chains; each sample asks for
//! the entity at the end of its chain, so the minimal reference path is
//! known by construction. The policy is a per-progress-slot categorical
//! distribution over a small set of query templates (not a language
//! model), which isolates the effect of the reward signal itself. Updates
//! use a plain score-function gradient with the group-relative advantage
//! as baseline; with a tabular policy and fresh samples every step, a
//! clipped surrogate would be inert.

use crate::config::{AgentConfig, RewardConfig};
use crate::decimal::Dec;
use crate::evaluator::oracle_evaluate;
use crate::reference::synthesize_planner;
use crate::reward::{exact_match, grpo_advantages, total_reward};
use crate::runtime::{
    run_episode, CorpusDoc, EpisodeTrace, LexicalRetriever, PolicyBackend, PolicyError,
    SamplingParams,
};
use crate::types::{Provenance, QASample, ReferenceBundle};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Seed splitting
// ---------------------------------------------------------------------------

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a path of counters, so that
/// every episode gets an independent stream regardless of execution order
/// or parallelism.
pub fn split_seed(root: u64, parts: &[u64]) -> u64 {
    let mut z = splitmix64(root ^ 0xA076_1D64_78BD_642F);
    for &p in parts {
        z = splitmix64(z ^ splitmix64(p));
    }
    z
}

// ---------------------------------------------------------------------------
// Synthetic world
// ---------------------------------------------------------------------------

/// A seeded multi-hop QA world with known minimal reference paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticWorld {
    pub seed: u64,
    pub hops: usize,
    pub entities: Vec<String>,
    pub facts: Vec<(String, String, String)>,
    pub corpus: Vec<CorpusDoc>,
    pub samples: Vec<QASample>,
    pub true_paths: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot build {n_samples} disjoint {hops}-hop chains from {n_entities} entities")]
pub struct InfeasibleWorld {
    pub n_entities: usize,
    pub hops: usize,
    pub n_samples: usize,
}

/// Builds disjoint relation chains with one fact document per edge.
/// Identical parameters reproduce the world bit-exactly.
pub fn build_world(
    seed: u64,
    n_entities: usize,
    hops: usize,
    n_samples: usize,
) -> Result<SyntheticWorld, InfeasibleWorld> {
    if hops < 1 || n_samples < 1 || n_entities < n_samples * (hops + 1) {
        return Err(InfeasibleWorld { n_entities, hops, n_samples });
    }
    let ent_width = n_entities.to_string().len().max(3);
    let entities: Vec<String> = (0..n_entities).map(|i| format!("ent{i:0ent_width$}")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n_entities).collect();
    order.shuffle(&mut rng);

    let id_width = n_samples.to_string().len().max(3);
    let mut facts = Vec::new();
    let mut corpus = Vec::new();
    let mut samples = Vec::new();
    let mut true_paths = BTreeMap::new();

    for s in 0..n_samples {
        let chain: Vec<&String> =
            (0..=hops).map(|j| &entities[order[s * (hops + 1) + j]]).collect();
        let id = format!("q{s:0id_width$}");

        let mut path = Vec::new();
        for j in 0..hops {
            let rel = format!("r{}", j + 1);
            let subj = chain[j].clone();
            let obj = chain[j + 1].clone();
            let doc_id = format!("f{:04}", facts.len());
            corpus.push(CorpusDoc { doc_id, body: format!("The {rel} of {subj} is {obj}.") });
            path.push(format!("{rel} of {subj}"));
            facts.push((subj, rel, obj));
        }

        let mut phrase = chain[0].clone();
        for j in 1..=hops {
            phrase = format!("the r{j} of {phrase}");
        }
        samples.push(QASample {
            id: id.clone(),
            question: format!("who is {phrase}"),
            golden_answers: vec![chain[hops].clone()],
        });
        true_paths.insert(id, path);
    }

    Ok(SyntheticWorld { seed, hops, entities, facts, corpus, samples, true_paths })
}

impl SyntheticWorld {
    /// The known-minimal reference bundle for one sample.
    pub fn bundle_for(&self, sample_id: &str) -> Option<ReferenceBundle> {
        let path = self.true_paths.get(sample_id)?;
        Some(ReferenceBundle {
            sample_id: sample_id.to_string(),
            ref_planner: synthesize_planner(path),
            ref_path: path.clone(),
            provenance: Provenance::Oracle,
        })
    }

    pub fn reference_bundles(&self) -> Vec<ReferenceBundle> {
        self.samples.iter().filter_map(|s| self.bundle_for(&s.id)).collect()
    }

    pub fn retriever(&self) -> LexicalRetriever {
        LexicalRetriever::new(self.corpus.clone())
    }
}

// ---------------------------------------------------------------------------
// Toy policy
// ---------------------------------------------------------------------------

/// Query templates available to the toy policy at each turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    /// Issue the next hop query along the chain discovered so far.
    NextHop,
    /// Re-issue the previous query (redundant).
    RepeatLast,
    /// Query a relation that exists in no fact.
    WrongRel,
    /// Query the final relation against the source entity (skips hops).
    SkipAhead,
    /// Stop and answer with a hedged sentence around the current entity.
    HedgeAnswer,
    /// Stop and answer with exactly the current entity.
    Answer,
}

pub const DEFAULT_ACTIONS: [ActionKind; 6] = [
    ActionKind::NextHop,
    ActionKind::RepeatLast,
    ActionKind::WrongRel,
    ActionKind::SkipAhead,
    ActionKind::HedgeAnswer,
    ActionKind::Answer,
];

/// Per-slot categorical policy over query templates. Slot = number of
/// chain hops successfully completed so far, capped at the hop count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub hops: usize,
    pub actions: Vec<ActionKind>,
    /// Logits indexed `[slot][action]`, slots `0..=hops`.
    pub logits: Vec<Vec<f64>>,
}

impl ToyPolicy {
    pub fn new(hops: usize, actions: Vec<ActionKind>) -> Self {
        assert!(!actions.is_empty());
        let logits = vec![vec![0.0; actions.len()]; hops + 1];
        ToyPolicy { hops, actions, logits }
    }

    /// Uniform policy over the full template set.
    pub fn uniform(hops: usize) -> Self {
        Self::new(hops, DEFAULT_ACTIONS.to_vec())
    }

    /// A policy that almost surely follows the chain and answers when done.
    pub fn near_optimal(hops: usize) -> Self {
        let mut p = Self::uniform(hops);
        for slot in 0..=hops {
            let target = if slot < hops { ActionKind::NextHop } else { ActionKind::Answer };
            let idx = p.actions.iter().position(|&a| a == target).unwrap();
            p.logits[slot][idx] = 12.0;
        }
        p
    }

    /// Softmax probabilities for one slot. Normalized to within 1e-9 by
    /// construction.
    pub fn probs(&self, slot: usize) -> Vec<f64> {
        softmax(&self.logits[slot])
    }

    /// A fresh episode backend sampling from the current probabilities.
    pub fn episode(&self, seed: u64, format_noise: f64) -> ToyEpisode {
        ToyEpisode {
            hops: self.hops,
            actions: self.actions.clone(),
            probs: (0..=self.hops).map(|s| self.probs(s)).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            format_noise,
            parsed: None,
            cur: String::new(),
            progress: 0,
            last_query: None,
            first_segment_done: false,
            decisions: Vec::new(),
        }
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[derive(Debug, Clone)]
struct ParsedQuestion {
    source: String,
    relations: Vec<String>,
}

/// One episode's worth of toy-policy state. Records the (slot, action)
/// decisions it sampled so the trainer can form the score-function
/// gradient.
pub struct ToyEpisode {
    hops: usize,
    actions: Vec<ActionKind>,
    probs: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    format_noise: f64,
    parsed: Option<ParsedQuestion>,
    cur: String,
    progress: usize,
    last_query: Option<String>,
    first_segment_done: bool,
    pub decisions: Vec<(usize, usize)>,
}

impl ToyEpisode {
    fn parse_question(&mut self, transcript: &str) {
        if self.parsed.is_some() {
            return;
        }
        let question = transcript
            .lines()
            .filter_map(|l| l.split_once("Question:").map(|(_, q)| q))
            .last()
            .unwrap_or("");
        let tokens: Vec<&str> = question.split_whitespace().collect();
        let mut relations: Vec<String> = tokens
            .iter()
            .filter(|t| {
                t.len() > 1 && t.starts_with('r') && t[1..].chars().all(|c| c.is_ascii_digit())
            })
            .map(|t| t.to_string())
            .collect();
        relations.reverse(); // question lists the outermost relation first
        let source = tokens.last().copied().unwrap_or("").to_string();
        self.cur = source.clone();
        self.parsed = Some(ParsedQuestion { source, relations });
    }

    /// Reads the latest tool response and advances the chain when the
    /// previous query was the expected next hop and the response contains
    /// the matching fact.
    fn try_advance(&mut self, transcript: &str) {
        let Some(parsed) = &self.parsed else { return };
        if self.progress >= parsed.relations.len() {
            return;
        }
        let Some(last_query) = &self.last_query else { return };
        let expected = format!("{} of {}", parsed.relations[self.progress], self.cur);
        if *last_query != expected {
            return;
        }
        let Some(open) = transcript.rfind("<tool_response>") else { return };
        let body_start = open + "<tool_response>".len();
        let body = match transcript[body_start..].find("</tool_response>") {
            Some(close) => &transcript[body_start..body_start + close],
            None => &transcript[body_start..],
        };
        let needle = format!("The {} of {} is ", parsed.relations[self.progress], self.cur);
        if let Some(at) = body.find(&needle) {
            let rest = &body[at + needle.len()..];
            let obj: String = rest.chars().take_while(|c| c.is_alphanumeric()).collect();
            if !obj.is_empty() {
                self.cur = obj;
                self.progress += 1;
            }
        }
    }

    fn plan_text(&self) -> String {
        let parsed = self.parsed.as_ref().unwrap();
        let mut plan = String::from("I need to:");
        for (j, rel) in parsed.relations.iter().enumerate() {
            if j == 0 {
                let _ = write!(plan, "\n1. {rel} of {}", parsed.source);
            } else {
                let _ = write!(plan, "\n{}. {rel} of the entity found in step {j}", j + 1);
            }
        }
        plan
    }

    fn sample_action(&mut self, slot: usize) -> usize {
        let u: f64 = self.rng.gen();
        let probs = &self.probs[slot];
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }
}

impl PolicyBackend for ToyEpisode {
    fn generate(
        &mut self,
        transcript: &str,
        stop_tags: &[&str],
        _sampling: &SamplingParams,
    ) -> Result<String, PolicyError> {
        self.parse_question(transcript);
        self.try_advance(transcript);

        // Forced answering: close the tag the runtime already opened.
        if stop_tags == ["</answer>"] {
            return Ok(format!("{}</answer>", self.cur));
        }

        let parsed = self.parsed.clone().expect("question parsed above");
        let m = parsed.relations.len().min(self.hops);
        let slot = self.progress.min(self.hops);
        let action_idx = self.sample_action(slot);
        self.decisions.push((slot, action_idx));
        let action = self.actions[action_idx];

        let prefix = if self.first_segment_done {
            "<reasoning>checking the results so far</reasoning>\n".to_string()
        } else {
            self.first_segment_done = true;
            format!("{}</reasoning>\n", self.plan_text())
        };

        let relations = &parsed.relations;
        let source = &parsed.source;
        let segment = match action {
            ActionKind::NextHop if self.progress < m => {
                let q = format!("{} of {}", relations[self.progress], self.cur);
                self.last_query = Some(q.clone());
                format!("{prefix}<tool_call>{q}</tool_call>")
            }
            ActionKind::NextHop | ActionKind::RepeatLast => {
                let q = self
                    .last_query
                    .clone()
                    .unwrap_or_else(|| format!("recall {source} record"));
                self.last_query = Some(q.clone());
                format!("{prefix}<tool_call>{q}</tool_call>")
            }
            ActionKind::WrongRel => {
                let q = format!("r{} of {}", self.hops + 1, self.cur);
                self.last_query = Some(q.clone());
                format!("{prefix}<tool_call>{q}</tool_call>")
            }
            ActionKind::SkipAhead => {
                let q = if m >= 2 {
                    format!("{} of {}", relations[m - 1], source)
                } else {
                    format!("source of {source}")
                };
                self.last_query = Some(q.clone());
                format!("{prefix}<tool_call>{q}</tool_call>")
            }
            ActionKind::HedgeAnswer => {
                format!("{prefix}<answer>possibly {} or {}</answer>", self.cur, source)
            }
            ActionKind::Answer => format!("{prefix}<answer>{}</answer>", self.cur),
        };

        let segment = if self.format_noise > 0.0 && self.rng.gen::<f64>() < self.format_noise {
            segment.replace("</reasoning>", "")
        } else {
            segment
        };
        Ok(segment)
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Which reward drives the gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardVariant {
    /// Full shaped reward: format + dual-track path + soft outcome.
    PathCentric,
    /// Correctness indicator only.
    BinaryOutcome,
}

impl RewardVariant {
    pub fn name(self) -> &'static str {
        match self {
            RewardVariant::PathCentric => "path_centric",
            RewardVariant::BinaryOutcome => "binary_outcome",
        }
    }
}

/// One record of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub mean_reward: f64,
    pub accuracy: f64,
    pub mean_turns: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub group_size: usize,
    pub updates: usize,
    /// Questions sampled per update; `None` uses the whole dataset.
    pub samples_per_update: Option<usize>,
    pub step_size: f64,
    pub seed: u64,
    /// Probability that the policy mangles a segment's reasoning tags.
    pub format_noise: f64,
    /// Stop early once batch accuracy reaches this level.
    pub stop_at_accuracy: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            group_size: 8,
            updates: 100,
            samples_per_update: None,
            step_size: 0.5,
            seed: 0,
            format_noise: 0.0,
            stop_at_accuracy: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub curve: Vec<CurvePoint>,
    pub policy: ToyPolicy,
}

/// Scores one sandbox episode under a reward variant. Returns the reward
/// and the exact-match correctness of the final answer.
pub fn episode_reward(
    variant: RewardVariant,
    trace: &EpisodeTrace,
    sample: &QASample,
    bundle: &ReferenceBundle,
    cfg: &RewardConfig,
) -> (f64, bool) {
    let correct = trace
        .trajectory
        .answer()
        .map(|a| exact_match(a, &sample.golden_answers))
        .unwrap_or(false);
    match variant {
        RewardVariant::BinaryOutcome => (if correct { 1.0 } else { 0.0 }, correct),
        RewardVariant::PathCentric => {
            let verdict = oracle_evaluate(&trace.trajectory, sample, bundle);
            let breakdown = total_reward(&trace.trajectory, sample, bundle, &verdict, cfg);
            (breakdown.r_total, correct)
        }
    }
}

/// Runs the toy policy-gradient loop: per update, roll `G` episodes per
/// sampled question, score them, normalize rewards into group-relative
/// advantages, and apply one averaged score-function step to the logits.
pub fn train(
    world: &SyntheticWorld,
    variant: RewardVariant,
    cfg: &RewardConfig,
    opts: &TrainOptions,
) -> TrainResult {
    let mut policy = ToyPolicy::uniform(world.hops);
    let curve = train_policy(world, variant, cfg, opts, &mut policy);
    TrainResult { curve, policy }
}

/// As [`train`] but starting from (and mutating) a caller-provided policy.
pub fn train_policy(
    world: &SyntheticWorld,
    variant: RewardVariant,
    cfg: &RewardConfig,
    opts: &TrainOptions,
    policy: &mut ToyPolicy,
) -> Vec<CurvePoint> {
    let retriever = world.retriever();
    let agent_cfg = AgentConfig::default();
    let sampling = SamplingParams::new();
    let bundles: BTreeMap<&str, ReferenceBundle> = world
        .samples
        .iter()
        .map(|s| (s.id.as_str(), world.bundle_for(&s.id).expect("bundle exists")))
        .collect();

    let n_slots = world.hops + 1;
    let n_actions = policy.actions.len();
    let mut curve = Vec::with_capacity(opts.updates);

    for update in 0..opts.updates {
        let batch: Vec<usize> = match opts.samples_per_update {
            Some(k) if k < world.samples.len() => {
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(opts.seed, &[update as u64, u64::MAX]));
                let mut idx: Vec<usize> = (0..world.samples.len()).collect();
                idx.shuffle(&mut rng);
                idx.truncate(k);
                idx
            }
            _ => (0..world.samples.len()).collect(),
        };

        let mut grads = vec![vec![0.0; n_actions]; n_slots];
        let mut reward_sum = 0.0;
        let mut correct_count = 0usize;
        let mut turn_sum = 0usize;
        let mut episode_count = 0usize;

        for &si in &batch {
            let sample = &world.samples[si];
            let bundle = &bundles[sample.id.as_str()];
            let mut rewards = Vec::with_capacity(opts.group_size);
            let mut all_decisions = Vec::with_capacity(opts.group_size);
            for g in 0..opts.group_size {
                let seed = split_seed(opts.seed, &[update as u64, si as u64, g as u64]);
                let mut episode = policy.episode(seed, opts.format_noise);
                let trace = run_episode(sample, &mut episode, &retriever, &agent_cfg, &sampling);
                let (reward, correct) = episode_reward(variant, &trace, sample, bundle, cfg);
                rewards.push(reward);
                reward_sum += reward;
                correct_count += usize::from(correct);
                turn_sum += trace.turns_used;
                episode_count += 1;
                all_decisions.push(episode.decisions);
            }
            let advantages = grpo_advantages(&rewards, 1e-8);
            for (adv, decisions) in advantages.iter().zip(&all_decisions) {
                if *adv == 0.0 {
                    continue;
                }
                for &(slot, action) in decisions {
                    let probs = policy.probs(slot);
                    for (a, p) in probs.iter().enumerate() {
                        let indicator = if a == action { 1.0 } else { 0.0 };
                        grads[slot][a] += adv * (indicator - p);
                    }
                }
            }
        }

        let scale = opts.step_size / episode_count.max(1) as f64;
        for slot in 0..n_slots {
            for a in 0..n_actions {
                policy.logits[slot][a] += scale * grads[slot][a];
            }
        }

        let accuracy = correct_count as f64 / episode_count.max(1) as f64;
        curve.push(CurvePoint {
            update,
            mean_reward: reward_sum / episode_count.max(1) as f64,
            accuracy,
            mean_turns: turn_sum as f64 / episode_count.max(1) as f64,
        });
        if let Some(threshold) = opts.stop_at_accuracy {
            if accuracy >= threshold {
                break;
            }
        }
    }
    curve
}

// ---------------------------------------------------------------------------
// Variant comparison and sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub variant: String,
    pub seed: u64,
    /// First update index reaching the threshold; `None` when never reached.
    pub steps_to_threshold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareResult {
    pub rows: Vec<CompareRow>,
    /// Median steps per variant (upper median; `None` means the median run
    /// never reached the threshold).
    pub medians: Vec<(String, Option<usize>)>,
}

/// Trains every (variant, seed) pair and tabulates updates-to-threshold.
/// Runs stop as soon as the threshold is crossed.
pub fn compare_variants(
    world: &SyntheticWorld,
    variants: &[(RewardVariant, RewardConfig)],
    seeds: &[u64],
    threshold: f64,
    opts: &TrainOptions,
) -> CompareResult {
    let mut rows = Vec::new();
    for (variant, cfg) in variants {
        for &seed in seeds {
            let run_opts = TrainOptions { seed, stop_at_accuracy: Some(threshold), ..opts.clone() };
            let result = train(world, *variant, cfg, &run_opts);
            let steps = result
                .curve
                .iter()
                .find(|p| p.accuracy >= threshold)
                .map(|p| p.update);
            rows.push(CompareRow { variant: variant.name().to_string(), seed, steps_to_threshold: steps });
        }
    }
    let mut medians = Vec::new();
    for (variant, _) in variants {
        let mut steps: Vec<Option<usize>> = rows
            .iter()
            .filter(|r| r.variant == variant.name())
            .map(|r| r.steps_to_threshold)
            .collect();
        steps.sort_by_key(|s| s.map(|v| v as u64).unwrap_or(u64::MAX));
        let median = steps[steps.len() / 2];
        medians.push((variant.name().to_string(), median));
    }
    CompareResult { rows, medians }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    LambdaP,
    LambdaA,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::LambdaP => "lambda_p",
            SweepParam::LambdaA => "lambda_a",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: Dec,
    pub mean_reward: f64,
    pub mean_accuracy: f64,
    pub median_accuracy: f64,
    pub per_seed_accuracy: Vec<f64>,
}

/// For each grid value, trains the path-centric arm across the seeds and
/// averages the final window of the curve (the window mirrors end-of-run
/// averaging conventions).
pub fn sweep(
    world: &SyntheticWorld,
    param: SweepParam,
    grid: &[Dec],
    seeds: &[u64],
    base_cfg: &RewardConfig,
    opts: &TrainOptions,
    window: usize,
) -> Vec<SweepRow> {
    assert!(!grid.is_empty(), "sweep grid must be non-empty");
    let mut rows = Vec::new();
    for &value in grid {
        let mut cfg = *base_cfg;
        match param {
            SweepParam::LambdaP => cfg.lambda_p = value,
            SweepParam::LambdaA => cfg.lambda_a = value,
        }
        let mut rewards = Vec::new();
        let mut accuracies = Vec::new();
        for &seed in seeds {
            let run_opts = TrainOptions { seed, stop_at_accuracy: None, ..opts.clone() };
            let result = train(world, RewardVariant::PathCentric, &cfg, &run_opts);
            let tail = result.curve.len().saturating_sub(window.max(1));
            let final_window = &result.curve[tail..];
            let n = final_window.len().max(1) as f64;
            rewards.push(final_window.iter().map(|p| p.mean_reward).sum::<f64>() / n);
            accuracies.push(final_window.iter().map(|p| p.accuracy).sum::<f64>() / n);
        }
        let mut sorted = accuracies.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows.push(SweepRow {
            value,
            mean_reward: rewards.iter().sum::<f64>() / rewards.len().max(1) as f64,
            mean_accuracy: accuracies.iter().sum::<f64>() / accuracies.len().max(1) as f64,
            median_accuracy: sorted[sorted.len() / 2],
            per_seed_accuracy: accuracies,
        });
    }
    rows
}

// ---------------------------------------------------------------------------
// Gradient estimation (used by verification)
// ---------------------------------------------------------------------------

/// Plain score-function gradient estimate of the expected reward, without
/// any baseline: the mean of `R * grad log pi` over `n` rollouts on the
/// world's first sample.
pub fn policy_gradient_estimate(
    world: &SyntheticWorld,
    policy: &ToyPolicy,
    variant: RewardVariant,
    cfg: &RewardConfig,
    n: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let retriever = world.retriever();
    let agent_cfg = AgentConfig::default();
    let sampling = SamplingParams::new();
    let sample = &world.samples[0];
    let bundle = world.bundle_for(&sample.id).expect("bundle exists");
    let n_actions = policy.actions.len();
    let mut grads = vec![vec![0.0; n_actions]; world.hops + 1];

    for i in 0..n {
        let mut episode = policy.episode(split_seed(seed, &[i as u64]), 0.0);
        let trace = run_episode(sample, &mut episode, &retriever, &agent_cfg, &sampling);
        let (reward, _) = episode_reward(variant, &trace, sample, &bundle, cfg);
        for &(slot, action) in &episode.decisions {
            let probs = policy.probs(slot);
            for (a, p) in probs.iter().enumerate() {
                let indicator = if a == action { 1.0 } else { 0.0 };
                grads[slot][a] += reward * (indicator - p) / n as f64;
            }
        }
    }
    grads
}

/// Monte-Carlo estimate of the expected reward under the policy, using the
/// same per-rollout seed stream as [`policy_gradient_estimate`] so that
/// perturbed estimates share randomness.
pub fn expected_reward_mc(
    world: &SyntheticWorld,
    policy: &ToyPolicy,
    variant: RewardVariant,
    cfg: &RewardConfig,
    n: usize,
    seed: u64,
) -> f64 {
    let retriever = world.retriever();
    let agent_cfg = AgentConfig::default();
    let sampling = SamplingParams::new();
    let sample = &world.samples[0];
    let bundle = world.bundle_for(&sample.id).expect("bundle exists");
    let mut total = 0.0;
    for i in 0..n {
        let mut episode = policy.episode(split_seed(seed, &[i as u64]), 0.0);
        let trace = run_episode(sample, &mut episode, &retriever, &agent_cfg, &sampling);
        let (reward, _) = episode_reward(variant, &trace, sample, &bundle, cfg);
        total += reward;
    }
    total / n as f64
}

// ---------------------------------------------------------------------------
// CSV emission
// ---------------------------------------------------------------------------

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("update,mean_reward,accuracy,mean_turns\n");
    for p in curve {
        let _ = writeln!(out, "{},{},{},{}", p.update, p.mean_reward, p.accuracy, p.mean_turns);
    }
    out
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("variant,seed,steps_to_threshold\n");
    for r in rows {
        let steps = match r.steps_to_threshold {
            Some(s) => s.to_string(),
            None => "inf".to_string(),
        };
        let _ = writeln!(out, "{},{},{}", r.variant, r.seed, steps);
    }
    out
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("{},mean_reward,accuracy,median_accuracy\n", param.name());
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.value, r.mean_reward, r.mean_accuracy, r.median_accuracy
        );
    }
    out
}
