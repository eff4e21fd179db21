//! The total reward and its components: buffered format reward, dual-track
//! path scoring with the max-combination rule, soft outcome scoring,
//! answer matching, and group-relative advantage normalization.

use crate::codec::{trajectory_format_flags, FormatFlags};
use crate::config::{FormatMode, MatchMode, PathFormula, RewardConfig};
use crate::decimal::Dec;
use crate::text::normalize_answer;
use crate::types::{EvaluatorVerdict, QASample, ReferenceBundle, Trajectory};
use serde::{Deserialize, Serialize};

pub const FORMAT_FULL: Dec = Dec::thousandths(100); // 0.1
pub const FORMAT_PARTIAL: Dec = Dec::thousandths(50); // 0.05

/// All intermediate and final reward terms for one trajectory.
///
/// When `invalid` is set, every numeric field is zero: an invalid
/// trajectory earns nothing regardless of its path or answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub s_self: f64,
    pub s_ref: f64,
    pub r_path: f64,
    pub r_outcome: f64,
    pub r_total: f64,
    pub invalid: bool,
    pub exact_match: bool,
}

impl RewardBreakdown {
    pub fn invalid_zero() -> Self {
        RewardBreakdown {
            r_format: 0.0,
            s_self: 0.0,
            s_ref: 0.0,
            r_path: 0.0,
            r_outcome: 0.0,
            r_total: 0.0,
            invalid: true,
            exact_match: false,
        }
    }
}

/// Format reward per mode. Returns the reward level and whether the
/// trajectory is invalid (which zeroes the total reward).
///
/// Soft mode gives 0.1 for a fully compliant transcript, a buffered 0.05
/// when an answer and at least one tool response are present despite
/// format damage, and marks everything else invalid. Strict mode only
/// rewards full compliance. Off mode never pays, but an answerless
/// trajectory is still invalid.
pub fn format_reward(flags: FormatFlags, mode: FormatMode) -> (Dec, bool) {
    let full = flags.valid_format && flags.has_answer && flags.has_tool_call;
    let partial = flags.has_answer && flags.has_tool_response;
    match mode {
        FormatMode::Soft => {
            if full {
                (FORMAT_FULL, false)
            } else if partial {
                (FORMAT_PARTIAL, false)
            } else {
                (Dec::ZERO, true)
            }
        }
        FormatMode::Strict => {
            if full {
                (FORMAT_FULL, false)
            } else {
                (Dec::ZERO, true)
            }
        }
        FormatMode::Off => (Dec::ZERO, !flags.has_answer),
    }
}

/// Track A: how well the model executed its own plan.
///
/// Under the main-text formula the plan-execution ratio is multiplied by
/// the efficiency ratio `n_exec / n_actions`, so redundant actions dilute
/// the score. Degenerate denominators score zero.
pub fn self_consistency_score(v: &EvaluatorVerdict, n_actions: usize, formula: PathFormula) -> f64 {
    let n_plan = v.model_plan_steps as f64;
    let n_exec = v.effective_steps_self as f64;
    if v.model_plan_steps == 0 {
        return 0.0;
    }
    let planner = v.planner_score.to_f64();
    match formula {
        PathFormula::MainText => {
            if n_actions == 0 {
                0.0
            } else {
                planner * (n_exec / n_plan) * (n_exec / n_actions as f64)
            }
        }
        PathFormula::Algorithm3 => planner * (n_exec / n_plan),
    }
}

/// Track B: order-agnostic coverage of the reference path.
pub fn reference_alignment_score(
    n_covered: usize,
    ref_len: usize,
    n_actions: usize,
    formula: PathFormula,
) -> f64 {
    if ref_len == 0 {
        return 0.0;
    }
    let covered = n_covered as f64;
    let len = ref_len as f64;
    match formula {
        PathFormula::MainText => {
            if n_actions == 0 {
                0.0
            } else {
                (covered / len) * (covered / n_actions as f64)
            }
        }
        PathFormula::Algorithm3 => covered / len,
    }
}

/// Best of the dual tracks. The max (rather than a weighted mix) lets the
/// stronger track dominate when the other is uninformative.
pub fn path_reward(s_self: f64, s_ref: f64) -> f64 {
    s_self.max(s_ref)
}

/// Soft outcome score: full credit for a correct answer, otherwise partial
/// credit `alpha * r_acc + (1 - alpha) * r_reason` from the judge.
pub fn outcome_reward(is_correct: bool, v: &EvaluatorVerdict, alpha: Dec) -> f64 {
    if is_correct {
        1.0
    } else {
        let a = alpha.to_f64();
        a * v.outcome_accuracy.to_f64() + (1.0 - a) * v.outcome_reasoning.to_f64()
    }
}

/// True iff the normalized answer equals any normalized gold answer.
pub fn exact_match(answer: &str, golden: &[String]) -> bool {
    let norm = normalize_answer(answer);
    golden.iter().any(|g| normalize_answer(g) == norm)
}

/// True iff any normalized gold answer occurs as a substring of the
/// normalized response. Deliberately lenient; used for evaluation-style
/// accuracy.
pub fn containment_acc(response: &str, golden: &[String]) -> bool {
    let norm = normalize_answer(response);
    golden.iter().any(|g| {
        let g = normalize_answer(g);
        !g.is_empty() && norm.contains(&g)
    })
}

/// Composes the full reward for one trajectory given a clamped verdict.
///
/// Degenerate inputs yield zero components, never failures. All
/// intermediates are recorded in the returned breakdown.
pub fn total_reward(
    t: &Trajectory,
    sample: &QASample,
    reference: &ReferenceBundle,
    verdict: &EvaluatorVerdict,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let flags = trajectory_format_flags(t);
    total_reward_with_flags(flags, t, sample, reference, verdict, cfg)
}

/// Same as [`total_reward`] but with precomputed format flags, for callers
/// that already scanned the raw transcript.
pub fn total_reward_with_flags(
    flags: FormatFlags,
    t: &Trajectory,
    sample: &QASample,
    reference: &ReferenceBundle,
    verdict: &EvaluatorVerdict,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let (r_format, invalid) = format_reward(flags, cfg.format_mode);
    if invalid {
        return RewardBreakdown::invalid_zero();
    }

    let n_actions = t.n_actions();
    let v = verdict.clamp_counts(n_actions, reference.ref_path.len());

    let s_self = self_consistency_score(&v, n_actions, cfg.path_formula);
    let s_ref = reference_alignment_score(
        v.effective_steps_ref as usize,
        reference.ref_path.len(),
        n_actions,
        cfg.path_formula,
    );
    let r_path = path_reward(s_self, s_ref);

    let answer = t.answer().unwrap_or("");
    let is_correct = match cfg.match_mode {
        MatchMode::Exact => exact_match(answer, &sample.golden_answers),
        MatchMode::Containment => containment_acc(answer, &sample.golden_answers),
    };
    let r_outcome = outcome_reward(is_correct, &v, cfg.alpha);

    let r_format_f = r_format.to_f64();
    let r_total = cfg.lambda_f.to_f64() * r_format_f
        + cfg.lambda_p.to_f64() * r_path
        + cfg.lambda_a.to_f64() * r_outcome;

    RewardBreakdown {
        r_format: r_format_f,
        s_self,
        s_ref,
        r_path,
        r_outcome,
        r_total,
        invalid: false,
        exact_match: is_correct,
    }
}

/// G sibling rollouts for one question with group-normalized advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub sample_id: String,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn from_rewards(sample_id: impl Into<String>, rewards: Vec<f64>) -> Self {
        let advantages = grpo_advantages(&rewards, 1e-8);
        RolloutGroup { sample_id: sample_id.into(), rewards, advantages }
    }
}

/// Group-relative advantages: `(r_i - mean) / (population_std + eps)`.
///
/// An all-equal group short-circuits to exact zeros before any division,
/// so zero-variance groups (common early in training) contribute nothing.
pub fn grpo_advantages(rewards: &[f64], eps: f64) -> Vec<f64> {
    assert!(!rewards.is_empty(), "rewards must be non-empty");
    assert!(eps > 0.0, "eps must be positive");
    let first = rewards[0];
    if rewards.iter().all(|&r| r == first) {
        return vec![0.0; rewards.len()];
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    rewards.iter().map(|r| (r - mean) / (std + eps)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::format_flags;
    use crate::types::{Provenance, TrajectoryStep};

    fn verdict(
        planner: i64,
        n_plan: u32,
        eff_self: u32,
        eff_ref: u32,
        acc: i64,
        reason: i64,
    ) -> EvaluatorVerdict {
        EvaluatorVerdict {
            planner_score: Dec::thousandths(planner),
            model_plan_steps: n_plan,
            effective_steps_self: eff_self,
            effective_steps_ref: eff_ref,
            outcome_accuracy: Dec::thousandths(acc),
            outcome_reasoning: Dec::thousandths(reason),
            degraded: false,
        }
    }

    #[test]
    fn format_reward_published_branches() {
        let full = FormatFlags { valid_format: true, has_answer: true, has_tool_call: true, has_tool_response: true };
        assert_eq!(format_reward(full, FormatMode::Soft), (FORMAT_FULL, false));

        let buffered = FormatFlags { valid_format: false, has_answer: true, has_tool_call: false, has_tool_response: true };
        assert_eq!(format_reward(buffered, FormatMode::Soft), (FORMAT_PARTIAL, false));

        let answerless = FormatFlags { valid_format: true, has_answer: false, has_tool_call: true, has_tool_response: false };
        assert_eq!(format_reward(answerless, FormatMode::Soft), (Dec::ZERO, true));

        assert_eq!(format_reward(buffered, FormatMode::Strict), (Dec::ZERO, true));
        assert_eq!(format_reward(buffered, FormatMode::Off), (Dec::ZERO, false));
        assert_eq!(format_reward(answerless, FormatMode::Off), (Dec::ZERO, true));
    }

    #[test]
    fn self_consistency_examples() {
        let v = verdict(1000, 2, 2, 0, 0, 0);
        assert!((self_consistency_score(&v, 2, PathFormula::MainText) - 1.0).abs() < 1e-12);

        let v = verdict(600, 2, 1, 0, 0, 0);
        assert!((self_consistency_score(&v, 4, PathFormula::MainText) - 0.075).abs() < 1e-12);
        assert!((self_consistency_score(&v, 4, PathFormula::Algorithm3) - 0.3).abs() < 1e-12);

        let v = verdict(1000, 0, 0, 0, 0, 0);
        assert_eq!(self_consistency_score(&v, 3, PathFormula::MainText), 0.0);
        let v = verdict(1000, 2, 2, 0, 0, 0);
        assert_eq!(self_consistency_score(&v, 0, PathFormula::MainText), 0.0);
    }

    #[test]
    fn reference_alignment_examples() {
        assert!((reference_alignment_score(2, 2, 2, PathFormula::MainText) - 1.0).abs() < 1e-12);
        let expected = 2.0 / 3.0;
        assert!((reference_alignment_score(2, 2, 3, PathFormula::MainText) - expected).abs() < 1e-12);
        assert_eq!(reference_alignment_score(0, 3, 2, PathFormula::MainText), 0.0);
        assert_eq!(reference_alignment_score(0, 0, 2, PathFormula::MainText), 0.0);
        assert!((reference_alignment_score(2, 3, 5, PathFormula::Algorithm3) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn path_reward_takes_max() {
        assert_eq!(path_reward(0.075, 2.0 / 3.0), 2.0 / 3.0);
        assert_eq!(path_reward(0.0, 0.0), 0.0);
        assert_eq!(path_reward(1.2, 1.0), 1.2);
    }

    #[test]
    fn outcome_reward_soft_scoring() {
        let v = verdict(200, 0, 0, 0, 500, 800);
        assert_eq!(outcome_reward(true, &v, Dec::thousandths(800)), 1.0);
        assert!((outcome_reward(false, &v, Dec::thousandths(800)) - 0.56).abs() < 1e-12);
        let zero = verdict(200, 0, 0, 0, 0, 0);
        assert_eq!(outcome_reward(false, &zero, Dec::thousandths(800)), 0.0);
    }

    #[test]
    fn answer_matching() {
        let golden = vec!["Eddie Argos".to_string()];
        assert!(exact_match("Eddie Argos", &golden));
        assert!(exact_match("eddie  argos.", &golden));
        assert!(!exact_match("Dan Auerbach", &golden));

        assert!(containment_acc("The lead singer is Eddie Argos.", &golden));
        assert!(!containment_acc("", &[String::from("x")]));
        assert!(containment_acc("xy", &[String::from("x")]));
    }

    fn sample_trajectory(answer: &str) -> Trajectory {
        Trajectory::new(
            "s1",
            vec![
                TrajectoryStep::reasoning("1. step one 2. step two"),
                TrajectoryStep::tool_call("q1"),
                TrajectoryStep::tool_response("d1"),
                TrajectoryStep::tool_call("q2"),
                TrajectoryStep::tool_response("d2"),
                TrajectoryStep::answer(answer),
            ],
        )
    }

    fn reference(n: usize) -> ReferenceBundle {
        ReferenceBundle {
            sample_id: "s1".to_string(),
            ref_planner: "plan".to_string(),
            ref_path: (0..n).map(|i| format!("ref step {i}")).collect(),
            provenance: Provenance::Oracle,
        }
    }

    #[test]
    fn total_reward_composes_components() {
        let t = sample_trajectory("right");
        let sample = QASample::new("s1", "q?", &["right"]);
        let v = verdict(1000, 2, 2, 2, 0, 0);
        let cfg = RewardConfig::default();
        let b = total_reward(&t, &sample, &reference(2), &v, &cfg);
        assert!(!b.invalid);
        assert!(b.exact_match);
        assert!((b.r_total - 0.91).abs() < 1e-12);
        assert!((b.s_self - 1.0).abs() < 1e-12);
        assert!((b.s_ref - 1.0).abs() < 1e-12);
    }

    #[test]
    fn answerless_trajectory_is_invalid_zero() {
        let t = Trajectory::new(
            "s1",
            vec![
                TrajectoryStep::reasoning("p"),
                TrajectoryStep::tool_call("q"),
                TrajectoryStep::tool_response("d"),
            ],
        );
        let sample = QASample::new("s1", "q?", &["right"]);
        let v = verdict(1000, 1, 1, 1, 1000, 1000);
        let b = total_reward(&t, &sample, &reference(1), &v, &RewardConfig::default());
        assert_eq!(b, RewardBreakdown::invalid_zero());
    }

    #[test]
    fn buffered_branch_composition() {
        // Damaged format, wrong answer, partial coverage.
        let mut t = sample_trajectory("wrong");
        t.steps.remove(0); // no plan
        t.raw_text = Some(
            "<reasoning>open<tool_call>q1</tool_call>\
             <tool_response>d1</tool_response><tool_call>q2</tool_call>\
             <tool_response>d2</tool_response><answer>wrong</answer>"
                .to_string(),
        );
        let flags = format_flags(t.raw_text.as_deref().unwrap());
        assert!(!flags.valid_format);
        let sample = QASample::new("s1", "q?", &["right"]);
        let v = verdict(0, 0, 0, 2, 500, 800);
        let b = total_reward(&t, &sample, &reference(2), &v, &RewardConfig::default());
        let expected = 0.1 * 0.05 + 0.3 * (2.0 / 3.0) + 0.6 * 0.56;
        // n_actions = 2 here, so s_ref = (2/2) * (2/2) = 1.0; rebuild with 3 actions.
        assert!((b.r_format - 0.05).abs() < 1e-12);
        let mut t3 = t.clone();
        t3.steps.insert(2, TrajectoryStep::tool_call("extra"));
        t3.steps.insert(3, TrajectoryStep::tool_response("junk"));
        let b3 = total_reward(&t3, &sample, &reference(2), &v, &RewardConfig::default());
        assert!((b3.r_total - expected).abs() < 1e-12, "got {}", b3.r_total);
    }

    #[test]
    fn grpo_examples() {
        assert_eq!(grpo_advantages(&[1.0, 1.0, 1.0, 1.0], 1e-8), vec![0.0; 4]);
        assert_eq!(grpo_advantages(&[0.91], 1e-8), vec![0.0]);

        let a = grpo_advantages(&[1.0, 0.0, 0.0, 0.0], 1e-8);
        assert!((a[0] - 1.7321).abs() < 1e-3);
        assert!((a[1] + 0.5774).abs() < 1e-3);
        let sum: f64 = a.iter().sum();
        assert!(sum.abs() < 1e-9);
    }

    #[test]
    fn grpo_shift_invariance_and_sign() {
        let rewards = vec![0.2, 0.9, 0.4, 0.4];
        let a = grpo_advantages(&rewards, 1e-8);
        let shifted: Vec<f64> = rewards.iter().map(|r| r + 5.0).collect();
        let b = grpo_advantages(&shifted, 1e-8);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(a[1] > 0.0 && a[0] < 0.0);
    }
}
