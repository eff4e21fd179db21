//! Parser and renderer for the tagged transcript grammar, plus the format
//! predicates consumed by the reward engine.
//!
//! The grammar is: zero or more `<reasoning>`, `<tool_call>`,
//! `<tool_response>` blocks in any order, then an optional `<answer>`
//! block, with nothing but whitespace between and after blocks. A
//! compatibility dialect accepts `<think>`/`<search>`/`<result>` spellings.

use crate::types::{StepKind, Trajectory, TrajectoryStep};
use regex::Regex;
use std::sync::OnceLock;
use thiserror::Error;

/// Tag vocabulary used when parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TagDialect {
    /// `<reasoning>` / `<tool_call>` / `<tool_response>` / `<answer>`.
    #[default]
    Canonical,
    /// `<think>` / `<search>` / `<result>` / `<answer>`.
    Compat,
}

impl TagDialect {
    fn tag_name(self, kind: StepKind) -> &'static str {
        match (self, kind) {
            (TagDialect::Canonical, StepKind::Reasoning) => "reasoning",
            (TagDialect::Canonical, StepKind::ToolCall) => "tool_call",
            (TagDialect::Canonical, StepKind::ToolResponse) => "tool_response",
            (TagDialect::Compat, StepKind::Reasoning) => "think",
            (TagDialect::Compat, StepKind::ToolCall) => "search",
            (TagDialect::Compat, StepKind::ToolResponse) => "result",
            (_, StepKind::Answer) => "answer",
        }
    }

    fn kinds() -> [StepKind; 4] {
        [StepKind::Reasoning, StepKind::ToolCall, StepKind::ToolResponse, StepKind::Answer]
    }
}

/// Strict-parse failure, carrying the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unclosed <{tag}> at offset {pos}")]
    UnclosedTag { tag: &'static str, pos: usize },
    #[error("nested <{tag}> inside an open <{tag}> at offset {pos}")]
    NestedTag { tag: &'static str, pos: usize },
    #[error("tag <{found}> inside an open <{open}> at offset {pos}")]
    InterleavedTag { found: &'static str, open: &'static str, pos: usize },
    #[error("content after </answer> at offset {pos}")]
    TagAfterAnswer { pos: usize },
    #[error("text outside any tag at offset {pos}")]
    StrayText { pos: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::UnclosedTag { pos, .. }
            | ParseError::NestedTag { pos, .. }
            | ParseError::InterleavedTag { pos, .. }
            | ParseError::TagAfterAnswer { pos }
            | ParseError::StrayText { pos } => *pos,
        }
    }
}

/// Format predicates of one transcript, as consumed by the format reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FormatFlags {
    pub valid_format: bool,
    pub has_answer: bool,
    pub has_tool_call: bool,
    pub has_tool_response: bool,
}

/// Strict parse of a tagged transcript in the canonical dialect.
pub fn parse_trajectory(text: &str, sample_id: &str) -> Result<Trajectory, ParseError> {
    parse_trajectory_with(text, sample_id, TagDialect::Canonical)
}

/// Strict parse with an explicit tag dialect. Step bodies are trimmed.
pub fn parse_trajectory_with(
    text: &str,
    sample_id: &str,
    dialect: TagDialect,
) -> Result<Trajectory, ParseError> {
    let mut steps = Vec::new();
    let mut pos = 0;
    let mut answered = false;
    let bytes = text.as_bytes();

    'outer: while pos < bytes.len() {
        // Skip inter-block whitespace.
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            break;
        }
        if answered {
            return Err(ParseError::TagAfterAnswer { pos });
        }
        for kind in TagDialect::kinds() {
            let name = dialect.tag_name(kind);
            let open = format!("<{name}>");
            if text[pos..].starts_with(&open) {
                let open_pos = pos;
                let body_start = pos + open.len();
                let (body_end, close_len) =
                    find_close(text, body_start, name, dialect, open_pos)?;
                let body = text[body_start..body_end].trim().to_string();
                steps.push(TrajectoryStep { kind, body });
                if kind == StepKind::Answer {
                    answered = true;
                }
                pos = body_end + close_len;
                continue 'outer;
            }
        }
        return Err(ParseError::StrayText { pos });
    }

    let mut t = Trajectory::new(sample_id, steps);
    t.raw_text = Some(text.to_string());
    Ok(t)
}

/// Finds the closing tag for an open block, rejecting any other tag of the
/// dialect that appears first.
fn find_close(
    text: &str,
    from: usize,
    open_name: &'static str,
    dialect: TagDialect,
    open_pos: usize,
) -> Result<(usize, usize), ParseError> {
    let close = format!("</{open_name}>");
    let mut earliest: Option<(usize, &'static str, bool)> = None; // (pos, name, is_close_of_open)
    for kind in TagDialect::kinds() {
        let name = dialect.tag_name(kind);
        for candidate in [format!("<{name}>"), format!("</{name}>")] {
            if let Some(rel) = text[from..].find(&candidate) {
                let abs = from + rel;
                let is_matching_close = candidate == close;
                if earliest.map(|(p, _, _)| abs < p).unwrap_or(true) {
                    earliest = Some((abs, name, is_matching_close));
                }
            }
        }
    }
    match earliest {
        Some((p, _, true)) => Ok((p, close.len())),
        Some((p, name, false)) if name == open_name => {
            Err(ParseError::NestedTag { tag: open_name, pos: p })
        }
        Some((p, name, false)) => {
            Err(ParseError::InterleavedTag { found: name, open: open_name, pos: p })
        }
        None => Err(ParseError::UnclosedTag { tag: open_name, pos: open_pos }),
    }
}

/// Canonical rendering: one block per step, trimmed bodies, single newline
/// between blocks. Inverse of `parse_trajectory` for structurally valid
/// trajectories.
pub fn render_trajectory(t: &Trajectory) -> String {
    render_trajectory_with(t, TagDialect::Canonical)
}

pub fn render_trajectory_with(t: &Trajectory, dialect: TagDialect) -> String {
    t.steps
        .iter()
        .map(|s| {
            let name = dialect.tag_name(s.kind);
            format!("<{name}>{}</{name}>", s.body.trim())
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Format predicates of raw transcript text in the canonical dialect.
///
/// `valid_format` is true iff the strict parse succeeds. The `has_*` flags
/// are detected by lenient tag scanning and are defined even for malformed
/// input: a flag is set when at least one well-formed pair of that tag
/// encloses a non-empty body.
pub fn format_flags(text: &str) -> FormatFlags {
    format_flags_with(text, TagDialect::Canonical)
}

pub fn format_flags_with(text: &str, dialect: TagDialect) -> FormatFlags {
    FormatFlags {
        valid_format: parse_trajectory_with(text, "", dialect).is_ok(),
        has_answer: has_nonempty_block(text, dialect.tag_name(StepKind::Answer)),
        has_tool_call: has_nonempty_block(text, dialect.tag_name(StepKind::ToolCall)),
        has_tool_response: has_nonempty_block(text, dialect.tag_name(StepKind::ToolResponse)),
    }
}

/// Format predicates of a trajectory, preferring its original raw text so
/// that tag damage from live generation is still visible.
pub fn trajectory_format_flags(t: &Trajectory) -> FormatFlags {
    match &t.raw_text {
        Some(raw) => format_flags(raw),
        None => format_flags(&render_trajectory(t)),
    }
}

fn has_nonempty_block(text: &str, name: &str) -> bool {
    let open = format!("<{name}>");
    let close = format!("</{name}>");
    let mut from = 0;
    while let Some(rel) = text[from..].find(&open) {
        let start = from + rel + open.len();
        match text[start..].find(&close) {
            Some(rel_close) => {
                if !text[start..start + rel_close].trim().is_empty() {
                    return true;
                }
                from = start + rel_close + close.len();
            }
            None => return false,
        }
    }
    false
}

fn inline_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[\s:;,])(\d{1,2})[.)]\s+").unwrap())
}

/// Splits the trajectory's plan (its first reasoning step) into enumerated
/// sub-steps. Recognizes numbered lines (`1.` / `2)`), bullet lines
/// (`-`, `*`, `•`), and inline numbering within one line. Returns an empty
/// list when there is no reasoning step or no enumeration.
pub fn extract_plan_steps(t: &Trajectory) -> Vec<String> {
    let Some(plan) = t.planner() else {
        return Vec::new();
    };
    plan_steps_from_text(plan)
}

/// Enumerated sub-steps of free plan text; see [`extract_plan_steps`].
pub fn plan_steps_from_text(plan: &str) -> Vec<String> {
    // Line-based markers first.
    let mut segments: Vec<String> = Vec::new();
    let mut current: Option<String> = None;
    for line in plan.lines() {
        let trimmed = line.trim();
        if let Some(rest) = line_marker_rest(trimmed) {
            if let Some(done) = current.take() {
                segments.push(done);
            }
            current = Some(rest.to_string());
        } else if let Some(cur) = current.as_mut() {
            if !trimmed.is_empty() {
                cur.push(' ');
                cur.push_str(trimmed);
            }
        }
    }
    if let Some(done) = current.take() {
        segments.push(done);
    }
    let segments: Vec<String> = segments
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if !segments.is_empty() {
        return segments;
    }

    // Inline numbering: require at least two markers to avoid treating a
    // stray "1." mid-sentence as a plan.
    let markers: Vec<_> = inline_marker_re().find_iter(plan).collect();
    if markers.len() < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for (i, m) in markers.iter().enumerate() {
        let start = m.end();
        let end = markers.get(i + 1).map(|n| n.start()).unwrap_or(plan.len());
        let piece = plan[start..end].trim();
        if !piece.is_empty() {
            out.push(piece.to_string());
        }
    }
    out
}

fn line_marker_rest(line: &str) -> Option<&str> {
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return Some(rest.trim_start());
        }
    }
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 || digits > 2 {
        return None;
    }
    let after = &line[digits..];
    let after = after.strip_prefix(['.', ')'])?;
    if after.starts_with(' ') || after.starts_with('\t') {
        Some(after.trim_start())
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "<reasoning>plan</reasoning><tool_call>q1</tool_call>\
                        <tool_response>d1</tool_response><answer>x</answer>";

    #[test]
    fn parses_well_formed_transcript() {
        let t = parse_trajectory(FULL, "s").unwrap();
        assert_eq!(t.steps.len(), 4);
        assert_eq!(t.n_actions(), 1);
        assert_eq!(t.answer(), Some("x"));
    }

    #[test]
    fn empty_input_is_an_empty_trajectory() {
        let t = parse_trajectory("", "s").unwrap();
        assert!(t.steps.is_empty());
    }

    #[test]
    fn unclosed_answer_errors_at_open_offset() {
        let err = parse_trajectory("  <answer>x", "s").unwrap_err();
        assert_eq!(err, ParseError::UnclosedTag { tag: "answer", pos: 2 });
    }

    #[test]
    fn content_after_answer_is_rejected() {
        let err = parse_trajectory("<answer>x</answer><reasoning>y</reasoning>", "s").unwrap_err();
        assert!(matches!(err, ParseError::TagAfterAnswer { .. }));
        let err = parse_trajectory("<answer>x</answer> trailing", "s").unwrap_err();
        assert!(matches!(err, ParseError::TagAfterAnswer { .. }));
    }

    #[test]
    fn nested_and_interleaved_tags_are_rejected() {
        let err = parse_trajectory("<reasoning>a<reasoning>b</reasoning>", "s").unwrap_err();
        assert!(matches!(err, ParseError::NestedTag { tag: "reasoning", .. }));
        let err = parse_trajectory("<reasoning>a<tool_call>q</tool_call></reasoning>", "s")
            .unwrap_err();
        assert!(matches!(err, ParseError::InterleavedTag { .. }));
    }

    #[test]
    fn stray_text_is_rejected() {
        let err = parse_trajectory("hello <answer>x</answer>", "s").unwrap_err();
        assert_eq!(err, ParseError::StrayText { pos: 0 });
    }

    #[test]
    fn compat_dialect_parses_search_r1_tags() {
        let t = parse_trajectory_with(
            "<think>p</think><search>q</search><result>d</result><answer>x</answer>",
            "s",
            TagDialect::Compat,
        )
        .unwrap();
        assert_eq!(t.steps[1].kind, StepKind::ToolCall);
        assert_eq!(t.steps[2].kind, StepKind::ToolResponse);
    }

    #[test]
    fn render_round_trips() {
        let t = parse_trajectory(FULL, "s").unwrap();
        let rendered = render_trajectory(&t);
        let mut back = parse_trajectory(&rendered, "s").unwrap();
        back.raw_text = None;
        let mut orig = t.clone();
        orig.raw_text = None;
        assert_eq!(back, orig);
        assert_eq!(render_trajectory(&Trajectory::new("s", vec![])), "");
        assert_eq!(
            render_trajectory(&Trajectory::new("s", vec![TrajectoryStep::answer("x")])),
            "<answer>x</answer>"
        );
    }

    #[test]
    fn flags_on_well_formed_and_damaged_input() {
        let f = format_flags(FULL);
        assert_eq!(f, FormatFlags { valid_format: true, has_answer: true, has_tool_call: true, has_tool_response: true });

        let damaged = "<reasoning><tool_response>d</tool_response><answer>x</answer>";
        let f = format_flags(damaged);
        assert_eq!(f, FormatFlags { valid_format: false, has_answer: true, has_tool_call: false, has_tool_response: true });

        assert!(!format_flags("<reasoning>p</reasoning>").has_answer);
        assert!(!format_flags("<answer>  </answer>").has_answer);
    }

    #[test]
    fn multiple_answer_blocks_invalidate_but_keep_has_answer() {
        let text = "<answer>x</answer><answer>y</answer>";
        let f = format_flags(text);
        assert!(!f.valid_format);
        assert!(f.has_answer);
    }

    #[test]
    fn plan_extraction_inline_and_lines() {
        let inline = Trajectory::new(
            "s",
            vec![TrajectoryStep::reasoning(
                "I need to: 1. Find the band performing the album. 2. Find the lead singer.",
            )],
        );
        assert_eq!(
            extract_plan_steps(&inline),
            vec!["Find the band performing the album.", "Find the lead singer."]
        );

        let lines = Trajectory::new(
            "s",
            vec![TrajectoryStep::reasoning("First:\n1. look up A\n2. look up B\n")],
        );
        assert_eq!(extract_plan_steps(&lines), vec!["look up A", "look up B"]);

        let bullets = Trajectory::new(
            "s",
            vec![TrajectoryStep::reasoning("- search A\n- search B")],
        );
        assert_eq!(extract_plan_steps(&bullets), vec!["search A", "search B"]);
    }

    #[test]
    fn plan_extraction_degenerate_cases() {
        let prose = Trajectory::new(
            "s",
            vec![TrajectoryStep::reasoning("just think hard and answer")],
        );
        assert!(extract_plan_steps(&prose).is_empty());
        assert!(extract_plan_steps(&Trajectory::new("s", vec![])).is_empty());
        // A lone inline "1." is not an enumeration.
        let lone = Trajectory::new(
            "s",
            vec![TrajectoryStep::reasoning("see item 1. then decide")],
        );
        assert!(extract_plan_steps(&lone).is_empty());
    }

    #[test]
    fn plan_extraction_stable_under_trailing_whitespace() {
        let a = plan_steps_from_text("1. alpha\n2. beta");
        let b = plan_steps_from_text("1. alpha   \n2. beta  \n\n");
        assert_eq!(a, b);
    }
}
