//! Records and manifests emitted by pipeline runs.

use crate::protocol::{AnchorParts, Position, Verdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// The judging strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineId {
    /// Plain judge: query, image, two answers, one call.
    Base,
    /// Base with the image message deleted.
    BaseNoImage,
    /// Caption the image first, then judge with the caption as reference.
    ImageCaption,
    /// Answer the query directly first, then judge against that reference.
    StandardRef,
    /// Revise-and-merge the candidates into an anchor, then judge against it.
    Birch,
}

impl PipelineId {
    pub const ALL: [PipelineId; 5] = [
        PipelineId::Base,
        PipelineId::BaseNoImage,
        PipelineId::ImageCaption,
        PipelineId::StandardRef,
        PipelineId::Birch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineId::Base => "base",
            PipelineId::BaseNoImage => "base-no-image",
            PipelineId::ImageCaption => "image-caption",
            PipelineId::StandardRef => "standard-ref",
            PipelineId::Birch => "birch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Backend calls per successful record: one for base variants, two for
    /// the reference-building pipelines.
    pub fn expected_calls(self) -> u32 {
        match self {
            PipelineId::Base | PipelineId::BaseNoImage => 1,
            PipelineId::ImageCaption | PipelineId::StandardRef | PipelineId::Birch => 2,
        }
    }

    pub fn needs_image(self) -> bool {
        !matches!(self, PipelineId::BaseNoImage)
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which on-screen slot held the human-preferred answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionMap {
    pub chosen: Position,
}

/// Artifact produced by the first call of a two-call pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intermediate {
    Caption(String),
    Reference(String),
    Anchor(AnchorParts),
}

/// One pipeline execution over one example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub example_id: String,
    pub pipeline: PipelineId,
    pub model: String,
    pub position_map: PositionMap,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intermediate: Option<Intermediate>,
    pub backend_calls: u32,
    pub latency_ms: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub flags: Vec<String>,
}

/// One direct (non-judging) model answer, kept for case studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectAnswerRecord {
    pub example_id: String,
    pub model: String,
    pub answer: String,
}

/// An example the run could not judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub example_id: String,
    pub error: String,
}

/// Self-describing metadata for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub pipeline: String,
    pub model: String,
    pub backend: String,
    pub collection: String,
    pub collection_fingerprint: String,
    pub config_hash: String,
    pub template_hashes: BTreeMap<String, String>,
    pub position_policy: String,
    pub seed: u64,
    /// How the image was removed for ablation runs, when it was.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub no_image_mode: Option<String>,
    pub n_examples: usize,
    pub n_success: usize,
    pub n_failed: usize,
    /// Completions requested, cache hits included.
    pub total_requests: u64,
    /// Requests that actually reached the backend.
    pub fresh_backend_calls: u64,
    pub cache_hits: u64,
    pub wall_time_ms: f64,
    /// Mean per-example latency over successful records, from per-call
    /// latencies (stable across warm-cache replays).
    pub mean_latency_ms: f64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}
