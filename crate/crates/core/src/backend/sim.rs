//! Deterministic simulated judge.
//!
//! Lives behind the same [`Backend`] interface as remote endpoints so every
//! pipeline runs offline. Judgments follow a configured policy driven by the
//! ground-truth positions the pipeline injects; all draws are pure functions
//! of (seed, example id), so replays are bit-identical.

use super::{Backend, BackendError, CallContext, CallTask};
use crate::chat::{ChatRequest, ChatResponse};
use crate::protocol::Position;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimPolicy {
    /// Always pick the human-preferred answer's position.
    AlwaysHumanChosen,
    /// Always pick the more-informative answer's position.
    AlwaysInformative,
    /// Pick the informative answer with probability beta, else the chosen one.
    FollowInformative,
    /// A seeded fair coin between the two positions.
    Random,
}

impl SimPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SimPolicy::AlwaysHumanChosen => "always-human-chosen",
            SimPolicy::AlwaysInformative => "always-informative",
            SimPolicy::FollowInformative => "follow-informative",
            SimPolicy::Random => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedJudgeConfig {
    pub policy: SimPolicy,
    /// Probability of following informativeness under `FollowInformative`.
    pub beta: f64,
    pub seed: u64,
    /// Reported per-call latency; the call also sleeps for it when
    /// `real_sleep` is set.
    pub delay: Duration,
    pub real_sleep: bool,
    /// Word-count offset the simulated rewriter misses the lengthen target
    /// by; 0 converges exactly.
    pub lengthen_offset: i64,
}

impl Default for SimulatedJudgeConfig {
    fn default() -> Self {
        Self {
            policy: SimPolicy::AlwaysHumanChosen,
            beta: 0.5,
            seed: 0,
            delay: Duration::ZERO,
            real_sleep: false,
            lengthen_offset: 0,
        }
    }
}

impl SimulatedJudgeConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(BackendError::Config(format!(
                "beta must lie in [0,1], got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

fn draw_u64(seed: u64, salt: &str, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(salt.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Seeded Bernoulli draw, exact at p = 0 and p = 1.
fn bernoulli(seed: u64, salt: &str, id: &str, p: f64) -> bool {
    let threshold: u128 = if p >= 1.0 {
        1u128 << 64
    } else if p <= 0.0 {
        0
    } else {
        (p * (u64::MAX as f64 + 1.0)) as u128
    };
    (draw_u64(seed, salt, id) as u128) < threshold
}

fn verdict_text(position: Position) -> String {
    format!(
        "Analysis: simulated decision.\nJudgement: {}",
        position.marker()
    )
}

/// Decide a judgment position for one example under `config`.
///
/// `chosen_position` and `informative_position` are the ground-truth side
/// channel injected by the pipeline layer.
pub fn simulate_judgment(
    example_id: &str,
    chosen_position: Position,
    informative_position: Option<Position>,
    config: &SimulatedJudgeConfig,
) -> Result<ChatResponse, BackendError> {
    config.validate()?;
    let need_informative = || {
        informative_position.ok_or_else(|| BackendError::MissingGroundTruth {
            policy: config.policy.name().into(),
            example_id: example_id.into(),
        })
    };
    let position = match config.policy {
        SimPolicy::AlwaysHumanChosen => chosen_position,
        SimPolicy::AlwaysInformative => need_informative()?,
        SimPolicy::FollowInformative => {
            let informative = need_informative()?;
            if bernoulli(config.seed, "follow-informative", example_id, config.beta) {
                informative
            } else {
                chosen_position
            }
        }
        SimPolicy::Random => {
            if bernoulli(config.seed, "random-position", example_id, 0.5) {
                Position::A
            } else {
                Position::B
            }
        }
    };
    Ok(ChatResponse {
        text: verdict_text(position),
        usage: None,
        latency_ms: 0.001,
        from_cache: false,
    })
}

/// Offline judge backend; requires a [`CallContext`] on every call.
#[derive(Debug, Clone, Default)]
pub struct SimulatedBackend {
    pub config: SimulatedJudgeConfig,
}

impl SimulatedBackend {
    pub fn new(config: SimulatedJudgeConfig) -> Self {
        Self { config }
    }

    fn lengthened(&self, target_words: usize) -> String {
        let n = (target_words as i64 + self.config.lengthen_offset).max(1) as usize;
        let mut words = Vec::with_capacity(n);
        for i in 0..n {
            words.push(if i % 2 == 0 { "restated" } else { "content" });
        }
        words.join(" ")
    }

    fn respond(&self, ctx: &CallContext) -> Result<String, BackendError> {
        let cfg = &self.config;
        let id = &ctx.example_id;
        Ok(match &ctx.task {
            CallTask::Judge {
                chosen_position,
                informative_position,
            } => simulate_judgment(id, *chosen_position, *informative_position, cfg)?.text,
            CallTask::Informativeness {
                informative_position,
            } => {
                // Ground truth when injected, else a stable per-id coin so
                // annotation works on collections without labels.
                let pos = informative_position.unwrap_or({
                    if bernoulli(cfg.seed, "informativeness", id, 0.5) {
                        Position::A
                    } else {
                        Position::B
                    }
                });
                verdict_text(pos)
            }
            CallTask::Anchor => format!(
                "Revised Response A: Revised first answer for {id}.\n\
                 Revised Response B: Revised second answer for {id}.\n\
                 Merged Response: Verified merged description for {id}."
            ),
            CallTask::Caption => format!("A concise caption describing the image of {id}."),
            CallTask::DirectAnswer => format!("A direct answer to the query of {id}."),
            CallTask::Lengthen { target_words } => self.lengthened(*target_words),
            CallTask::Score { label } => {
                let score = if label.contains("anchor") {
                    4 + (draw_u64(cfg.seed, "score", id) & 1)
                } else {
                    3
                };
                format!("Analysis: simulated correctness assessment.\nScore: {score}")
            }
        })
    }
}

impl Backend for SimulatedBackend {
    fn complete(
        &self,
        request: &ChatRequest,
        ctx: Option<&CallContext>,
    ) -> Result<ChatResponse, BackendError> {
        request.validate()?;
        self.config.validate()?;
        let ctx = ctx.ok_or(BackendError::MissingCallContext)?;
        let started = Instant::now();
        let text = self.respond(ctx)?;
        if self.config.real_sleep && !self.config.delay.is_zero() {
            std::thread::sleep(self.config.delay);
        }
        let latency_ms = if self.config.delay.is_zero() {
            (started.elapsed().as_secs_f64() * 1000.0).max(0.0001)
        } else {
            self.config.delay.as_secs_f64() * 1000.0
        };
        Ok(ChatResponse {
            text,
            usage: None,
            latency_ms,
            from_cache: false,
        })
    }

    fn name(&self) -> String {
        format!("simulated:{}", self.config.policy.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chat::{Decoding, Message};

    fn req() -> ChatRequest {
        ChatRequest::new("sim", vec![Message::user("prompt")], Decoding::default()).unwrap()
    }

    fn judge_ctx(id: &str, chosen: Position, informative: Option<Position>) -> CallContext {
        CallContext::new(
            id,
            CallTask::Judge {
                chosen_position: chosen,
                informative_position: informative,
            },
        )
    }

    #[test]
    fn always_human_chosen_emits_chosen_marker() {
        let resp = simulate_judgment("x1", Position::A, None, &SimulatedJudgeConfig::default())
            .unwrap();
        assert!(resp.text.contains("Judgement: [[A]]"));
        assert!(resp.text.starts_with("Analysis:"));
    }

    #[test]
    fn always_informative_emits_informative_marker() {
        let cfg = SimulatedJudgeConfig {
            policy: SimPolicy::AlwaysInformative,
            ..Default::default()
        };
        let resp = simulate_judgment("x1", Position::A, Some(Position::B), &cfg).unwrap();
        assert!(resp.text.contains("Judgement: [[B]]"));
    }

    #[test]
    fn always_informative_requires_ground_truth() {
        let cfg = SimulatedJudgeConfig {
            policy: SimPolicy::AlwaysInformative,
            ..Default::default()
        };
        assert!(matches!(
            simulate_judgment("x1", Position::A, None, &cfg),
            Err(BackendError::MissingGroundTruth { .. })
        ));
    }

    #[test]
    fn beta_one_matches_always_informative_everywhere() {
        let follow = SimulatedJudgeConfig {
            policy: SimPolicy::FollowInformative,
            beta: 1.0,
            ..Default::default()
        };
        let always = SimulatedJudgeConfig {
            policy: SimPolicy::AlwaysInformative,
            ..Default::default()
        };
        for i in 0..500 {
            let id = format!("ex{i}");
            let informative = if i % 2 == 0 { Position::A } else { Position::B };
            let f = simulate_judgment(&id, informative.other(), Some(informative), &follow)
                .unwrap();
            let a = simulate_judgment(&id, informative.other(), Some(informative), &always)
                .unwrap();
            assert_eq!(f.text, a.text, "diverged at {id}");
        }
    }

    #[test]
    fn deterministic_per_seed_and_id() {
        let cfg = SimulatedJudgeConfig {
            policy: SimPolicy::FollowInformative,
            beta: 0.5,
            seed: 42,
            ..Default::default()
        };
        let a = simulate_judgment("e", Position::A, Some(Position::B), &cfg).unwrap();
        let b = simulate_judgment("e", Position::A, Some(Position::B), &cfg).unwrap();
        assert_eq!(a.text, b.text);
    }

    #[test]
    fn beta_outside_unit_interval_rejected() {
        let cfg = SimulatedJudgeConfig {
            policy: SimPolicy::FollowInformative,
            beta: 1.5,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(BackendError::Config(_))));
    }

    #[test]
    fn backend_requires_call_context() {
        let backend = SimulatedBackend::default();
        assert!(matches!(
            backend.complete(&req(), None),
            Err(BackendError::MissingCallContext)
        ));
    }

    #[test]
    fn anchor_task_is_well_formed() {
        let backend = SimulatedBackend::default();
        let ctx = CallContext::new("x9", CallTask::Anchor);
        let resp = backend.complete(&req(), Some(&ctx)).unwrap();
        let parts = crate::protocol::parse_anchor(&resp.text).unwrap();
        assert!(!parts.merged.is_empty());
        assert!(!parts.is_degraded());
    }

    #[test]
    fn lengthen_task_hits_target() {
        let backend = SimulatedBackend::default();
        let ctx = CallContext::new("x1", CallTask::Lengthen { target_words: 60 });
        let resp = backend.complete(&req(), Some(&ctx)).unwrap();
        assert_eq!(crate::corpus::word_count(&resp.text), 60);
    }

    #[test]
    fn configured_delay_is_reported_latency() {
        let backend = SimulatedBackend::new(SimulatedJudgeConfig {
            delay: Duration::from_millis(250),
            ..Default::default()
        });
        let ctx = judge_ctx("x1", Position::A, None);
        let resp = backend.complete(&req(), Some(&ctx)).unwrap();
        assert_eq!(resp.latency_ms, 250.0);
    }
}
