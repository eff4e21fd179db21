//! Shared domain types: QA samples, trajectories, reference bundles, and
//! evaluator verdicts.
//!
//! Everything here is an immutable value object after construction and can
//! be shared freely across threads.

use crate::decimal::Dec;
use serde::{Deserialize, Serialize};

/// Score grid for plan quality ratings.
pub const PLANNER_GRID: [Dec; 4] = [
    Dec::thousandths(200),
    Dec::thousandths(600),
    Dec::thousandths(1000),
    Dec::thousandths(1200),
];

/// Score grid for outcome accuracy sub-scores.
pub const ACCURACY_GRID: [Dec; 3] = [Dec::ZERO, Dec::thousandths(500), Dec::ONE];

/// Score grid for outcome reasoning sub-scores.
pub const REASONING_GRID: [Dec; 4] = [
    Dec::ZERO,
    Dec::thousandths(500),
    Dec::thousandths(800),
    Dec::ONE,
];

/// One question with its accepted gold answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QASample {
    pub id: String,
    pub question: String,
    pub golden_answers: Vec<String>,
}

impl QASample {
    pub fn new(id: impl Into<String>, question: impl Into<String>, golden: &[&str]) -> Self {
        QASample {
            id: id.into(),
            question: question.into(),
            golden_answers: golden.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Field-level violations; empty means the sample is well-formed.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.id.trim().is_empty() {
            v.push("id is empty".to_string());
        }
        if self.golden_answers.is_empty() {
            v.push("golden_answers is empty".to_string());
        }
        for (i, a) in self.golden_answers.iter().enumerate() {
            if a.trim().is_empty() {
                v.push(format!("golden_answers[{i}] is empty after trim"));
            }
        }
        v
    }
}

/// The four structural roles a trajectory step can play.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Reasoning,
    ToolCall,
    ToolResponse,
    Answer,
}

/// One tagged step of a reasoning trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub kind: StepKind,
    pub body: String,
}

impl TrajectoryStep {
    pub fn reasoning(body: impl Into<String>) -> Self {
        TrajectoryStep { kind: StepKind::Reasoning, body: body.into() }
    }
    pub fn tool_call(body: impl Into<String>) -> Self {
        TrajectoryStep { kind: StepKind::ToolCall, body: body.into() }
    }
    pub fn tool_response(body: impl Into<String>) -> Self {
        TrajectoryStep { kind: StepKind::ToolResponse, body: body.into() }
    }
    pub fn answer(body: impl Into<String>) -> Self {
        TrajectoryStep { kind: StepKind::Answer, body: body.into() }
    }
}

/// A full episode transcript as an ordered step list.
///
/// `raw_text` preserves the original tagged transcript when the trajectory
/// came from live generation; format checks prefer it over the canonical
/// re-rendering because truncation and tag damage only survive there.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub sample_id: String,
    pub steps: Vec<TrajectoryStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_text: Option<String>,
}

impl Trajectory {
    pub fn new(sample_id: impl Into<String>, steps: Vec<TrajectoryStep>) -> Self {
        Trajectory { sample_id: sample_id.into(), steps, raw_text: None }
    }

    /// Number of search actions taken.
    pub fn n_actions(&self) -> usize {
        self.steps.iter().filter(|s| s.kind == StepKind::ToolCall).count()
    }

    /// The declared plan: by convention the first reasoning step.
    pub fn planner(&self) -> Option<&str> {
        self.steps
            .iter()
            .find(|s| s.kind == StepKind::Reasoning)
            .map(|s| s.body.as_str())
    }

    /// Final answer body, when an answer step is present.
    pub fn answer(&self) -> Option<&str> {
        self.steps
            .iter()
            .find(|s| s.kind == StepKind::Answer)
            .map(|s| s.body.as_str())
    }

    pub fn tool_queries(&self) -> Vec<&str> {
        self.steps
            .iter()
            .filter(|s| s.kind == StepKind::ToolCall)
            .map(|s| s.body.as_str())
            .collect()
    }

    /// Structural violations against the trajectory invariants:
    /// tool calls paired with responses (except a trailing truncated call),
    /// at most one answer in final position, and the action budget.
    pub fn violations(&self, budget: usize) -> Vec<String> {
        let mut v = Vec::new();
        let n = self.steps.len();
        for (i, s) in self.steps.iter().enumerate() {
            match s.kind {
                StepKind::ToolCall => {
                    if s.body.trim().is_empty() {
                        v.push(format!("step {i}: tool call with empty query"));
                    }
                    let followed = self
                        .steps
                        .get(i + 1)
                        .map(|n| n.kind == StepKind::ToolResponse)
                        .unwrap_or(false);
                    if !followed && i + 1 != n {
                        v.push(format!("step {i}: tool call not followed by a tool response"));
                    }
                }
                StepKind::Answer => {
                    if i + 1 != n {
                        v.push(format!("step {i}: answer is not the final step"));
                    }
                }
                _ => {}
            }
        }
        let answers = self.steps.iter().filter(|s| s.kind == StepKind::Answer).count();
        if answers > 1 {
            v.push(format!("{answers} answer steps (at most one allowed)"));
        }
        if self.n_actions() > budget {
            v.push(format!("{} actions exceed budget {budget}", self.n_actions()));
        }
        v
    }
}

/// Where a reference bundle came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Voted,
    SinglePass,
    Oracle,
}

/// Offline-distilled expert guidance for one sample: an optimized planner
/// text plus the ordered list of search steps it prescribes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceBundle {
    pub sample_id: String,
    pub ref_planner: String,
    pub ref_path: Vec<String>,
    pub provenance: Provenance,
}

impl ReferenceBundle {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.ref_path.is_empty() && self.provenance != Provenance::SinglePass {
            v.push("ref_path is empty for a voted/oracle bundle".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for (i, step) in self.ref_path.iter().enumerate() {
            if !seen.insert(crate::text::normalize_light(step)) {
                v.push(format!("ref_path[{i}] duplicates an earlier step after normalization"));
            }
        }
        v
    }
}

/// Structured judge output for one trajectory.
///
/// `degraded` marks verdicts that are fallbacks (transport failure) or that
/// needed grid snapping because the judge strayed from the rubric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorVerdict {
    pub planner_score: Dec,
    pub model_plan_steps: u32,
    pub effective_steps_self: u32,
    pub effective_steps_ref: u32,
    #[serde(rename = "outcome_accuracy_score")]
    pub outcome_accuracy: Dec,
    #[serde(rename = "outcome_reasoning_score")]
    pub outcome_reasoning: Dec,
    #[serde(default)]
    pub degraded: bool,
}

impl EvaluatorVerdict {
    /// The all-zero fallback used when no judge verdict could be obtained.
    pub fn zero_degraded() -> Self {
        EvaluatorVerdict {
            planner_score: Dec::ZERO,
            model_plan_steps: 0,
            effective_steps_self: 0,
            effective_steps_ref: 0,
            outcome_accuracy: Dec::ZERO,
            outcome_reasoning: Dec::ZERO,
            degraded: true,
        }
    }

    /// Clamps step counts against the judged trajectory and reference:
    /// `effective_steps_self <= min(model_plan_steps, n_actions)` and
    /// `effective_steps_ref <= min(ref_len, n_actions)`. Idempotent.
    pub fn clamp_counts(mut self, n_actions: usize, ref_len: usize) -> Self {
        let n_actions = n_actions as u32;
        self.effective_steps_self = self
            .effective_steps_self
            .min(self.model_plan_steps)
            .min(n_actions);
        self.effective_steps_ref = self.effective_steps_ref.min(ref_len as u32).min(n_actions);
        self
    }

    /// Snaps the three score fields onto their grids. Returns the snapped
    /// verdict with `degraded` set when anything moved. Idempotent.
    pub fn snap_scores(mut self) -> Self {
        let before = (self.planner_score, self.outcome_accuracy, self.outcome_reasoning);
        self.planner_score = self.planner_score.snap_to_grid(&PLANNER_GRID);
        self.outcome_accuracy = self.outcome_accuracy.snap_to_grid(&ACCURACY_GRID);
        self.outcome_reasoning = self.outcome_reasoning.snap_to_grid(&REASONING_GRID);
        if before != (self.planner_score, self.outcome_accuracy, self.outcome_reasoning) {
            self.degraded = true;
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_accessors() {
        let t = Trajectory::new(
            "s1",
            vec![
                TrajectoryStep::reasoning("plan"),
                TrajectoryStep::tool_call("q1"),
                TrajectoryStep::tool_response("d1"),
                TrajectoryStep::answer("x"),
            ],
        );
        assert_eq!(t.n_actions(), 1);
        assert_eq!(t.planner(), Some("plan"));
        assert_eq!(t.answer(), Some("x"));
        assert!(t.violations(4).is_empty());
    }

    #[test]
    fn trajectory_violations_detected() {
        let t = Trajectory::new(
            "s1",
            vec![
                TrajectoryStep::answer("x"),
                TrajectoryStep::tool_call("q"),
                TrajectoryStep::tool_call("q2"),
            ],
        );
        let v = t.violations(1);
        assert!(v.iter().any(|m| m.contains("answer is not the final step")));
        assert!(v.iter().any(|m| m.contains("not followed by a tool response")));
        assert!(v.iter().any(|m| m.contains("exceed budget")));
    }

    #[test]
    fn truncated_trailing_tool_call_is_allowed() {
        let t = Trajectory::new(
            "s1",
            vec![TrajectoryStep::reasoning("p"), TrajectoryStep::tool_call("q")],
        );
        assert!(t.violations(4).is_empty());
    }

    #[test]
    fn clamping_is_idempotent() {
        let v = EvaluatorVerdict {
            planner_score: Dec::thousandths(900),
            model_plan_steps: 2,
            effective_steps_self: 5,
            effective_steps_ref: 7,
            outcome_accuracy: Dec::thousandths(400),
            outcome_reasoning: Dec::thousandths(900),
            degraded: false,
        };
        let once = v.clamp_counts(3, 2).snap_scores();
        let twice = once.clamp_counts(3, 2).snap_scores();
        assert_eq!(once, twice);
        assert_eq!(once.effective_steps_self, 2);
        assert_eq!(once.effective_steps_ref, 2);
        assert_eq!(once.planner_score, Dec::ONE);
        assert!(once.degraded);
    }

    #[test]
    fn snapping_clean_verdict_keeps_degraded_false() {
        let v = EvaluatorVerdict {
            planner_score: Dec::thousandths(600),
            model_plan_steps: 2,
            effective_steps_self: 1,
            effective_steps_ref: 1,
            outcome_accuracy: Dec::thousandths(500),
            outcome_reasoning: Dec::thousandths(800),
            degraded: false,
        };
        assert!(!v.snap_scores().degraded);
    }
}
