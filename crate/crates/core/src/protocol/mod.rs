//! Prompt rendering and model-output parsing.
//!
//! Templates are plain-text files with `{{slot}}` placeholders, shipped in
//! the repository (`prompts/`) and overridable by path so the exact bytes
//! sent to a model can be audited. Rendering is pure: the same kind and
//! slots always produce byte-identical request text.

mod parse;

pub use parse::{parse_anchor, parse_score, parse_verdict, AnchorParts, Choice, Verdict};

use crate::chat::{ChatRequest, Decoding, Image, Message};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

/// One of the two on-screen answer slots of a pairwise prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    A,
    B,
}

impl Position {
    pub fn other(self) -> Self {
        match self {
            Position::A => Position::B,
            Position::B => Position::A,
        }
    }

    /// The judgment marker for this position, e.g. `[[A]]`.
    pub fn marker(self) -> &'static str {
        match self {
            Position::A => "[[A]]",
            Position::B => "[[B]]",
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Position::A => "A",
            Position::B => "B",
        })
    }
}

impl Choice {
    /// The position a valid verdict points at.
    pub fn position(self) -> Option<Position> {
        match self {
            Choice::A => Some(Position::A),
            Choice::B => Some(Position::B),
            Choice::Invalid => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("missing slot `{0}`")]
    MissingSlot(String),
    #[error("template `{kind}` does not accept slot `{slot}`")]
    UnexpectedSlot { kind: PromptKind, slot: String },
    #[error("template `{0}` has no image slot but an image was supplied")]
    UnexpectedImage(PromptKind),
    #[error("template `{0}` requires an image")]
    MissingImage(PromptKind),
    #[error("template `{kind}`: {msg}")]
    InvalidTemplate { kind: PromptKind, msg: String },
    #[error("failed to read template `{kind}` from {path}: {source}")]
    TemplateIo {
        kind: PromptKind,
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("anchor output has no `Merged Response:` marker")]
    AnchorParseFailure,
    #[error("no score in [1,5] found after a `Score` token")]
    Unscoreable,
    #[error(transparent)]
    Request(#[from] crate::chat::RequestError),
}

/// The prompt families used by the pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptKind {
    /// Decide which answer is more informative, from text alone.
    Informativeness,
    /// Answer the query directly from the image.
    DirectAnswer,
    /// Revise both answers against the image and merge them into an anchor.
    Anchor,
    /// Judge two answers against a reference answer.
    JudgeWithReference,
    /// Judge two answers with no reference.
    BaseJudge,
    /// Generate a caption for the image.
    ImageCaption,
    /// Rewrite an answer to a target word count without new information.
    Lengthen,
    /// Score one text's correctness against the image on a 1-5 scale.
    Score,
}

impl PromptKind {
    pub const ALL: [PromptKind; 8] = [
        PromptKind::Informativeness,
        PromptKind::DirectAnswer,
        PromptKind::Anchor,
        PromptKind::JudgeWithReference,
        PromptKind::BaseJudge,
        PromptKind::ImageCaption,
        PromptKind::Lengthen,
        PromptKind::Score,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Informativeness => "informativeness",
            PromptKind::DirectAnswer => "direct-answer",
            PromptKind::Anchor => "anchor",
            PromptKind::JudgeWithReference => "judge-with-reference",
            PromptKind::BaseJudge => "base-judge",
            PromptKind::ImageCaption => "image-caption",
            PromptKind::Lengthen => "lengthen",
            PromptKind::Score => "score",
        }
    }

    /// Slot names the template must contain, each exactly once.
    pub fn required_slots(self) -> &'static [&'static str] {
        match self {
            PromptKind::Informativeness => &["query", "answer_a", "answer_b"],
            PromptKind::DirectAnswer => &["query"],
            PromptKind::Anchor => &["query", "answer_a", "answer_b"],
            PromptKind::JudgeWithReference => &["query", "answer_a", "answer_b", "reference"],
            PromptKind::BaseJudge => &["query", "answer_a", "answer_b"],
            PromptKind::ImageCaption => &[],
            PromptKind::Lengthen => &["answer", "target_words"],
            PromptKind::Score => &["query", "text"],
        }
    }

    /// All kinds take an image except informativeness and lengthen.
    pub fn has_image_slot(self) -> bool {
        !matches!(self, PromptKind::Informativeness | PromptKind::Lengthen)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

const IMAGE_PLACEHOLDER: &str = "{{image}}";

#[derive(Debug, Clone)]
pub struct Template {
    pub kind: PromptKind,
    pub text: String,
}

impl Template {
    fn validate(&self) -> Result<(), ProtocolError> {
        for slot in self.kind.required_slots() {
            let marker = format!("{{{{{slot}}}}}");
            match self.text.matches(&marker).count() {
                1 => {}
                n => {
                    return Err(ProtocolError::InvalidTemplate {
                        kind: self.kind,
                        msg: format!("slot `{slot}` appears {n} times, expected exactly once"),
                    })
                }
            }
        }
        let image_marks = self.text.matches(IMAGE_PLACEHOLDER).count();
        match (self.kind.has_image_slot(), image_marks) {
            (true, 1) | (false, 0) => Ok(()),
            (true, n) => Err(ProtocolError::InvalidTemplate {
                kind: self.kind,
                msg: format!("expected one image placeholder, found {n}"),
            }),
            (false, n) => Err(ProtocolError::InvalidTemplate {
                kind: self.kind,
                msg: format!("template takes no image but has {n} image placeholder(s)"),
            }),
        }
    }

    pub fn sha256_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

/// The template for every prompt kind.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<PromptKind, Template>,
}

impl TemplateSet {
    /// Templates compiled into the binary from `prompts/`.
    pub fn builtin() -> Self {
        let texts = [
            (
                PromptKind::Informativeness,
                include_str!("../../prompts/informativeness.txt"),
            ),
            (
                PromptKind::DirectAnswer,
                include_str!("../../prompts/direct_answer.txt"),
            ),
            (PromptKind::Anchor, include_str!("../../prompts/anchor.txt")),
            (
                PromptKind::JudgeWithReference,
                include_str!("../../prompts/judge_with_reference.txt"),
            ),
            (
                PromptKind::BaseJudge,
                include_str!("../../prompts/base_judge.txt"),
            ),
            (
                PromptKind::ImageCaption,
                include_str!("../../prompts/image_caption.txt"),
            ),
            (
                PromptKind::Lengthen,
                include_str!("../../prompts/lengthen.txt"),
            ),
            (PromptKind::Score, include_str!("../../prompts/score.txt")),
        ];
        let templates = texts
            .into_iter()
            .map(|(kind, text)| {
                let t = Template {
                    kind,
                    text: text.to_string(),
                };
                t.validate().expect("builtin template is valid");
                (kind, t)
            })
            .collect();
        Self { templates }
    }

    /// Replace one template with the contents of `path`.
    pub fn override_from_file(&mut self, kind: PromptKind, path: &Path) -> Result<(), ProtocolError> {
        let text = std::fs::read_to_string(path).map_err(|source| ProtocolError::TemplateIo {
            kind,
            path: path.display().to_string(),
            source,
        })?;
        let t = Template { kind, text };
        t.validate()?;
        self.templates.insert(kind, t);
        Ok(())
    }

    pub fn get(&self, kind: PromptKind) -> &Template {
        self.templates.get(&kind).expect("all kinds present")
    }

    /// SHA-256 per template, keyed by kind name; recorded in run manifests.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        self.templates
            .iter()
            .map(|(k, t)| (k.name().to_string(), t.sha256_hex()))
            .collect()
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Named slot values for one render.
#[derive(Debug, Clone, Default)]
pub struct Slots {
    values: BTreeMap<String, String>,
}

impl Slots {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(mut self, name: &str, value: impl Into<String>) -> Self {
        self.values.insert(name.to_string(), value.into());
        self
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(String::as_str)
    }
}

/// Renders prompts into [`ChatRequest`]s for a fixed model and decoding.
#[derive(Debug, Clone)]
pub struct Renderer {
    templates: TemplateSet,
    model: String,
    decoding: Decoding,
}

impl Renderer {
    pub fn new(templates: TemplateSet, model: impl Into<String>, decoding: Decoding) -> Self {
        Self {
            templates,
            model: model.into(),
            decoding,
        }
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn decoding(&self) -> &Decoding {
        &self.decoding
    }

    /// Render `kind` with `slots`, attaching `image` when the template has an
    /// image slot. Every required slot must be present; an image supplied to
    /// an image-less template is an error.
    pub fn render(
        &self,
        kind: PromptKind,
        slots: &Slots,
        image: Option<Image>,
    ) -> Result<ChatRequest, ProtocolError> {
        self.render_with_decoding(kind, slots, image, self.decoding.clone())
    }

    /// Render an image-slot template with the image message deleted: the
    /// ablation path for no-image runs and text-only collections. The prompt
    /// text is untouched; only the attachment is absent.
    pub fn render_omitting_image(
        &self,
        kind: PromptKind,
        slots: &Slots,
    ) -> Result<ChatRequest, ProtocolError> {
        if !kind.has_image_slot() {
            return self.render(kind, slots, None);
        }
        // Render against a stand-in attachment, then delete it.
        let placeholder = Image::new(Vec::new(), "image/png");
        Ok(self.render(kind, slots, Some(placeholder))?.without_image())
    }

    /// As [`Renderer::render`] but with per-call decoding overrides.
    pub fn render_with_decoding(
        &self,
        kind: PromptKind,
        slots: &Slots,
        image: Option<Image>,
        decoding: Decoding,
    ) -> Result<ChatRequest, ProtocolError> {
        let template = self.templates.get(kind);
        match (kind.has_image_slot(), &image) {
            (false, Some(_)) => return Err(ProtocolError::UnexpectedImage(kind)),
            (true, None) => return Err(ProtocolError::MissingImage(kind)),
            _ => {}
        }
        for name in slots.values.keys() {
            if !kind.required_slots().contains(&name.as_str()) {
                return Err(ProtocolError::UnexpectedSlot {
                    kind,
                    slot: name.clone(),
                });
            }
        }

        let mut text = template.text.clone();
        // Drop the image placeholder line; the image travels as an attachment.
        for pat in [
            concat!("{{image}}", "\n\n"),
            concat!("{{image}}", "\n"),
            "{{image}}",
        ] {
            if text.contains(pat) {
                text = text.replacen(pat, "", 1);
                break;
            }
        }
        for slot in kind.required_slots() {
            let value = slots
                .get(slot)
                .ok_or_else(|| ProtocolError::MissingSlot(slot.to_string()))?;
            text = text.replacen(&format!("{{{{{slot}}}}}"), value, 1);
        }

        let message = match image {
            Some(img) => Message::user_with_image(text, img),
            None => Message::user(text),
        };
        Ok(ChatRequest::new(
            self.model.clone(),
            vec![message],
            decoding,
        )?)
    }
}
