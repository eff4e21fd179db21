//! Path-centric reward shaping for agentic retrieval-augmented generation.
//!
//! This crate scores tool-using reasoning trajectories with a dense,
//! structure-aware reward: a buffered format reward, a dual-track path
//! reward (self-consistency against the model's own plan, and
//! reference-alignment against an offline expert path, combined by max),
//! and a soft outcome reward that extracts signal from wrong answers. It
//! also ships the surrounding machinery: a strict parser for tagged
//! transcripts, an LLM-judge gateway with a deterministic rule oracle,
//! offline reference-plan distillation, the budgeted search-agent loop over
//! pluggable policy/retriever backends, and a synthetic multi-hop sandbox
//! with a toy policy-gradient trainer for studying the reward's dynamics.

pub mod codec;
pub mod config;
pub mod decimal;
pub mod evaluator;
pub mod jsonl;
pub mod reference;
pub mod reward;
pub mod runtime;
pub mod sandbox;
pub mod text;
pub mod types;

pub use codec::{format_flags, parse_trajectory, render_trajectory, FormatFlags, TagDialect};
pub use config::{default_config, AgentConfig, Config, FormatMode, MatchMode, PathFormula, RewardConfig};
pub use decimal::Dec;
pub use types::{
    EvaluatorVerdict, Provenance, QASample, ReferenceBundle, StepKind, Trajectory, TrajectoryStep,
};
