//! Parsers for the structured parts of model outputs.

use super::ProtocolError;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::LazyLock;

/// The judged position, or `Invalid` when no well-formed marker was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    Invalid,
}

/// A parsed judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub choice: Choice,
    pub analysis: String,
    pub raw: String,
}

/// Parse a judgment from free text. Total: every input maps to `A`, `B`, or
/// `Invalid`. The decision is taken from the last `[[A]]`/`[[B]]` marker, as
/// analyses often mention both before concluding.
pub fn parse_verdict(text: &str) -> Verdict {
    let last_a = text.rfind("[[A]]");
    let last_b = text.rfind("[[B]]");
    let choice = match (last_a, last_b) {
        (Some(a), Some(b)) => {
            if a > b {
                Choice::A
            } else {
                Choice::B
            }
        }
        (Some(_), None) => Choice::A,
        (None, Some(_)) => Choice::B,
        (None, None) => Choice::Invalid,
    };
    let analysis = text
        .lines()
        .find_map(|line| line.trim_start().strip_prefix("Analysis:"))
        .map(|rest| rest.trim().to_string())
        .unwrap_or_default();
    Verdict {
        choice,
        analysis,
        raw: text.to_string(),
    }
}

/// The three parts of an anchor-generation output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorParts {
    pub revised_a: String,
    pub revised_b: String,
    pub merged: String,
}

impl AnchorParts {
    /// True when only the merged part could be recovered.
    pub fn is_degraded(&self) -> bool {
        self.revised_a.is_empty() && self.revised_b.is_empty()
    }
}

const REVISED_A_MARK: &str = "Revised Response A:";
const REVISED_B_MARK: &str = "Revised Response B:";
const MERGED_MARK: &str = "Merged Response:";

/// Split an anchor output on its three header markers. Each part is the
/// trimmed text following its marker, up to the next marker or end of input.
/// A missing merged part is a parse failure; missing revised parts with a
/// merged part present degrade to empty revised fields.
pub fn parse_anchor(text: &str) -> Result<AnchorParts, ProtocolError> {
    let marks = [REVISED_A_MARK, REVISED_B_MARK, MERGED_MARK];
    let mut spans: Vec<(usize, usize, &str)> = marks
        .iter()
        .filter_map(|m| text.find(m).map(|at| (at, at + m.len(), *m)))
        .collect();
    spans.sort_unstable();

    let part_of = |mark: &str| -> String {
        for (i, &(_, body_start, m)) in spans.iter().enumerate() {
            if m == mark {
                let end = spans.get(i + 1).map(|&(s, _, _)| s).unwrap_or(text.len());
                return text[body_start..end].trim().to_string();
            }
        }
        String::new()
    };

    let merged = part_of(MERGED_MARK);
    if merged.is_empty() {
        return Err(ProtocolError::AnchorParseFailure);
    }
    Ok(AnchorParts {
        revised_a: part_of(REVISED_A_MARK),
        revised_b: part_of(REVISED_B_MARK),
        merged,
    })
}

static SCORE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bscore\b[^0-9]*([1-5])([^0-9]|$)").expect("valid regex"));

/// Extract the first standalone integer in [1,5] that follows a `Score`
/// token.
pub fn parse_score(text: &str) -> Result<u8, ProtocolError> {
    let caps = SCORE_RE.captures(text).ok_or(ProtocolError::Unscoreable)?;
    let digit = caps.get(1).expect("group 1").as_str();
    Ok(digit.parse::<u8>().expect("single digit"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn verdict_from_analysis_and_marker() {
        let v = parse_verdict("Analysis: B is grounded in the image.\nJudgement: [[B]]");
        assert_eq!(v.choice, Choice::B);
        assert_eq!(v.analysis, "B is grounded in the image.");
    }

    #[test]
    fn verdict_without_analysis() {
        let v = parse_verdict("Judgement: [[A]]");
        assert_eq!(v.choice, Choice::A);
        assert!(v.analysis.is_empty());
    }

    #[test]
    fn verdict_takes_last_marker() {
        let v = parse_verdict("I considered [[A]] but conclude Judgement: [[B]]");
        assert_eq!(v.choice, Choice::B);
        let v = parse_verdict("[[B]] is weaker, so [[A]]");
        assert_eq!(v.choice, Choice::A);
    }

    #[test]
    fn verdict_invalid_without_marker() {
        assert_eq!(parse_verdict("no judgment here").choice, Choice::Invalid);
        assert_eq!(parse_verdict("").choice, Choice::Invalid);
        assert_eq!(parse_verdict("[[C]] [A] [[ A ]]").choice, Choice::Invalid);
    }

    #[test]
    fn anchor_full_parse() {
        let parts = parse_anchor(
            "Revised Response A: alpha text\nRevised Response B: beta text\nMerged Response: the anchor",
        )
        .unwrap();
        assert_eq!(parts.revised_a, "alpha text");
        assert_eq!(parts.revised_b, "beta text");
        assert_eq!(parts.merged, "the anchor");
        assert!(!parts.is_degraded());
    }

    #[test]
    fn anchor_merged_only_degrades() {
        let parts = parse_anchor("Merged Response: X").unwrap();
        assert_eq!(parts.merged, "X");
        assert!(parts.revised_a.is_empty());
        assert!(parts.is_degraded());
    }

    #[test]
    fn anchor_without_markers_fails() {
        assert!(matches!(
            parse_anchor("nothing structured here"),
            Err(ProtocolError::AnchorParseFailure)
        ));
        assert!(matches!(
            parse_anchor("Revised Response A: only this"),
            Err(ProtocolError::AnchorParseFailure)
        ));
    }

    #[test]
    fn score_examples() {
        assert_eq!(parse_score("Score: 4").unwrap(), 4);
        assert_eq!(parse_score("Analysis blah.\nScore: 5 out of 5").unwrap(), 5);
        assert!(parse_score("no numeric judgment").is_err());
        assert!(parse_score("Score: 10").is_err());
        assert_eq!(parse_score("score is 3").unwrap(), 3);
    }

    proptest! {
        #[test]
        fn parse_verdict_is_total(text in ".{0,300}") {
            let v = parse_verdict(&text);
            prop_assert!(matches!(v.choice, Choice::A | Choice::B | Choice::Invalid));
            prop_assert_eq!(v.raw, text);
        }

        #[test]
        fn anchor_roundtrip_on_output_grammar(
            a in "[a-z ]{1,40}", b in "[a-z ]{1,40}", m in "[a-z]{1}[a-z ]{0,40}"
        ) {
            let text = format!(
                "Revised Response A: {a}\nRevised Response B: {b}\nMerged Response: {m}"
            );
            let parts = parse_anchor(&text).unwrap();
            prop_assert_eq!(parts.merged, m.trim().to_string());
            prop_assert_eq!(parts.revised_a, a.trim().to_string());
        }
    }
}
