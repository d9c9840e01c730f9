//! Pairwise preference benchmarks: loading, label corrections, annotations,
//! and the subset partitions that the bias metrics consume.

use crate::chat::Image;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },
    #[error("duplicate example id `{id}`")]
    DuplicateId { id: String },
    #[error("unknown benchmark schema `{0}`")]
    UnknownSchema(String),
    #[error("correction overlay references unknown id `{id}`")]
    OverlayUnknownId { id: String },
    #[error("correction overlay lists id `{id}` twice")]
    OverlayDuplicateId { id: String },
    #[error("missing annotations for {} example(s): {}", ids.len(), ids.join(", "))]
    MissingAnnotations { ids: Vec<String> },
    #[error("target ratio {0} must lie strictly between 0 and 1")]
    InvalidRatio(f64),
    #[error(
        "ratio {target} unachievable by downsampling one side (|{label_a}|={n_a}, |{label_b}|={n_b})"
    )]
    UnachievableRatio {
        target: f64,
        label_a: String,
        n_a: usize,
        label_b: String,
        n_b: usize,
    },
    #[error("partition has no subset labeled `{0}`")]
    NoSuchSubset(String),
    #[error("subsets `{0}` and `{1}` overlap on id `{2}`")]
    OverlappingSubsets(String, String, String),
}

/// Which of the two stored answers a label refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerSide {
    Chosen,
    Rejected,
}

impl AnswerSide {
    pub fn other(self) -> Self {
        match self {
            AnswerSide::Chosen => AnswerSide::Rejected,
            AnswerSide::Rejected => AnswerSide::Chosen,
        }
    }
}

/// Benchmark provenance: dataset name plus an optional domain tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Source {
    pub benchmark: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub domain: Option<String>,
}

/// One benchmark item: a query about an image and two answers ordered by
/// human preference.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceExample {
    pub id: String,
    pub query: String,
    pub image: Option<Image>,
    /// Relative path the image was resolved from, kept for re-emission.
    pub image_path: Option<String>,
    pub chosen: String,
    pub rejected: String,
    pub source: Source,
}

impl PreferenceExample {
    pub fn answer(&self, side: AnswerSide) -> &str {
        match side {
            AnswerSide::Chosen => &self.chosen,
            AnswerSide::Rejected => &self.rejected,
        }
    }
}

/// An immutable, id-indexed set of preference examples.
#[derive(Debug, Clone, Default)]
pub struct ExampleCollection {
    name: String,
    examples: Vec<PreferenceExample>,
    index: HashMap<String, usize>,
}

impl ExampleCollection {
    pub fn from_examples(
        name: impl Into<String>,
        examples: Vec<PreferenceExample>,
    ) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(examples.len());
        for (i, ex) in examples.iter().enumerate() {
            if ex.id.is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: i + 1,
                    msg: "empty id".into(),
                });
            }
            if ex.query.is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: i + 1,
                    msg: format!("example `{}` has an empty query", ex.id),
                });
            }
            if ex.chosen == ex.rejected {
                return Err(CorpusError::MalformedRecord {
                    line: i + 1,
                    msg: format!("example `{}` has identical answers", ex.id),
                });
            }
            if index.insert(ex.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId { id: ex.id.clone() });
            }
        }
        Ok(Self {
            name: name.into(),
            examples,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PreferenceExample> {
        self.examples.iter()
    }

    pub fn examples(&self) -> &[PreferenceExample] {
        &self.examples
    }

    pub fn get(&self, id: &str) -> Option<&PreferenceExample> {
        self.index.get(id).map(|&i| &self.examples[i])
    }

    pub fn ids(&self) -> Vec<String> {
        self.examples.iter().map(|e| e.id.clone()).collect()
    }

    /// Fingerprint over the ordered id list; lets downstream consumers verify
    /// two runs used the same collection.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for ex in &self.examples {
            h.update(ex.id.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }

    /// Subcollection restricted to `keep`, preserving collection order.
    pub fn retain_ids(&self, keep: &BTreeSet<String>) -> Self {
        let examples: Vec<_> = self
            .examples
            .iter()
            .filter(|e| keep.contains(&e.id))
            .cloned()
            .collect();
        Self::from_examples(self.name.clone(), examples).expect("subset of a valid collection")
    }
}

/// What `load_benchmark` observed along the way.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub loaded: usize,
    /// Ids whose image file was absent; the examples load with `image: None`.
    pub missing_images: Vec<String>,
}

/// Field mapping from an on-disk record to the internal schema.
///
/// Adapters are table-driven: a schema is just a set of field names plus the
/// two values its preference label uses for "first answer" / "second answer".
#[derive(Debug, Clone)]
pub struct SchemaMap {
    pub id: &'static str,
    pub query: &'static str,
    pub image: &'static str,
    pub answer_a: &'static str,
    pub answer_b: &'static str,
    pub preferred: &'static str,
    pub source: &'static str,
    pub preferred_a: &'static str,
    pub preferred_b: &'static str,
}

impl SchemaMap {
    pub fn for_id(schema: &str) -> Result<Self, CorpusError> {
        match schema {
            "default" => Ok(Self {
                id: "id",
                query: "query",
                image: "image_path",
                answer_a: "answer_a",
                answer_b: "answer_b",
                preferred: "preferred",
                source: "source",
                preferred_a: "a",
                preferred_b: "b",
            }),
            "mllm-as-a-judge" => Ok(Self {
                id: "id",
                query: "instruction",
                image: "image",
                answer_a: "response_a",
                answer_b: "response_b",
                preferred: "label",
                source: "dataset",
                preferred_a: "A",
                preferred_b: "B",
            }),
            "vl-rewardbench" => Ok(Self {
                id: "id",
                query: "query",
                image: "image",
                answer_a: "response_0",
                answer_b: "response_1",
                preferred: "human_ranking",
                source: "source",
                preferred_a: "0",
                preferred_b: "1",
            }),
            other => Err(CorpusError::UnknownSchema(other.to_string())),
        }
    }
}

fn field<'v>(
    value: &'v serde_json::Value,
    key: &str,
    line: usize,
) -> Result<&'v str, CorpusError> {
    value
        .get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| CorpusError::MalformedRecord {
            line,
            msg: format!("missing or non-string field `{key}`"),
        })
}

/// Load a line-delimited benchmark file, resolving images relative to
/// `image_root`. A missing image file flags the record and the load
/// continues; structural problems abort with the offending line number.
pub fn load_benchmark(
    path: &Path,
    schema: &str,
    image_root: Option<&Path>,
) -> Result<(ExampleCollection, LoadReport), CorpusError> {
    let map = SchemaMap::for_id(schema)?;
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    let mut report = LoadReport::default();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                line: line_no,
                msg: e.to_string(),
            })?;

        let id = field(&value, map.id, line_no)?.to_string();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { id });
        }
        let query = field(&value, map.query, line_no)?.to_string();
        let answer_a = field(&value, map.answer_a, line_no)?.to_string();
        let answer_b = field(&value, map.answer_b, line_no)?.to_string();
        let preferred = field(&value, map.preferred, line_no)?;
        let (chosen, rejected) = if preferred == map.preferred_a {
            (answer_a, answer_b)
        } else if preferred == map.preferred_b {
            (answer_b, answer_a)
        } else {
            return Err(CorpusError::MalformedRecord {
                line: line_no,
                msg: format!(
                    "preference label `{preferred}` names no answer (expected `{}` or `{}`)",
                    map.preferred_a, map.preferred_b
                ),
            });
        };
        let source = match value.get(map.source) {
            Some(serde_json::Value::String(s)) => Source {
                benchmark: s.clone(),
                domain: value
                    .get("domain")
                    .and_then(|d| d.as_str())
                    .map(String::from),
            },
            _ => Source::default(),
        };

        let image_path = value
            .get(map.image)
            .and_then(|v| v.as_str())
            .map(String::from);
        let image = match &image_path {
            Some(rel) => {
                let resolved = match image_root {
                    Some(root) => root.join(rel),
                    None => PathBuf::from(rel),
                };
                match std::fs::read(&resolved) {
                    Ok(bytes) => Some(Image::new(bytes, Image::media_type_for_path(&resolved))),
                    Err(_) => {
                        report.missing_images.push(id.clone());
                        None
                    }
                }
            }
            None => None,
        };

        examples.push(PreferenceExample {
            id,
            query,
            image,
            image_path,
            chosen,
            rejected,
            source,
        });
    }

    report.loaded = examples.len();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "benchmark".into());
    let collection = ExampleCollection::from_examples(name, examples)?;
    Ok((collection, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionAction {
    SwapPreference,
    Drop,
}

/// Human-label corrections applied on top of a loaded benchmark.
#[derive(Debug, Clone, Default)]
pub struct CorrectionOverlay {
    pub entries: Vec<(String, CorrectionAction)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OverlayRecord {
    id: String,
    action: CorrectionAction,
}

impl CorrectionOverlay {
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: OverlayRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            entries.push((rec.id, rec.action));
        }
        Ok(Self { entries })
    }
}

/// One applied correction, for the change log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChangeLogEntry {
    pub id: String,
    pub action: CorrectionAction,
}

/// Apply an overlay: `swap-preference` exchanges chosen/rejected, `drop`
/// removes the example. Returns the corrected collection plus a change log.
pub fn apply_corrections(
    collection: &ExampleCollection,
    overlay: &CorrectionOverlay,
) -> Result<(ExampleCollection, Vec<ChangeLogEntry>), CorpusError> {
    let mut seen = HashSet::new();
    for (id, _) in &overlay.entries {
        if !seen.insert(id.clone()) {
            return Err(CorpusError::OverlayDuplicateId { id: id.clone() });
        }
        if collection.get(id).is_none() {
            return Err(CorpusError::OverlayUnknownId { id: id.clone() });
        }
    }

    let actions: HashMap<&str, CorrectionAction> = overlay
        .entries
        .iter()
        .map(|(id, a)| (id.as_str(), *a))
        .collect();
    let mut log = Vec::new();
    let mut out = Vec::new();
    for ex in collection.iter() {
        match actions.get(ex.id.as_str()) {
            Some(CorrectionAction::Drop) => {
                log.push(ChangeLogEntry {
                    id: ex.id.clone(),
                    action: CorrectionAction::Drop,
                });
            }
            Some(CorrectionAction::SwapPreference) => {
                let mut swapped = ex.clone();
                std::mem::swap(&mut swapped.chosen, &mut swapped.rejected);
                out.push(swapped);
                log.push(ChangeLogEntry {
                    id: ex.id.clone(),
                    action: CorrectionAction::SwapPreference,
                });
            }
            None => out.push(ex.clone()),
        }
    }
    let corrected = ExampleCollection::from_examples(collection.name().to_string(), out)?;
    Ok((corrected, log))
}

/// Count of maximal whitespace-separated tokens after trimming.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Per-example derived labels: the more informative answer and word counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub informative: AnswerSide,
    pub chosen_words: usize,
    pub rejected_words: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub equalized: Option<EqualizedPair>,
}

/// Length-equalized variants of the two answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EqualizedPair {
    pub chosen: String,
    pub rejected: String,
}

/// Annotations per example id, plus the ids that could not be annotated.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    entries: BTreeMap<String, Annotation>,
    unannotatable: BTreeSet<String>,
}

impl AnnotationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a label for `example`, deriving word counts from the stored
    /// texts so the counts always match `word_count`.
    pub fn annotate(&mut self, example: &PreferenceExample, informative: AnswerSide) {
        self.entries.insert(
            example.id.clone(),
            Annotation {
                informative,
                chosen_words: word_count(&example.chosen),
                rejected_words: word_count(&example.rejected),
                equalized: None,
            },
        );
        self.unannotatable.remove(&example.id);
    }

    pub fn mark_unannotatable(&mut self, id: &str) {
        self.unannotatable.insert(id.to_string());
        self.entries.remove(id);
    }

    pub fn set_equalized(&mut self, id: &str, pair: EqualizedPair) -> bool {
        match self.entries.get_mut(id) {
            Some(a) => {
                a.equalized = Some(pair);
                true
            }
            None => false,
        }
    }

    pub fn get(&self, id: &str) -> Option<&Annotation> {
        self.entries.get(id)
    }

    pub fn is_unannotatable(&self, id: &str) -> bool {
        self.unannotatable.contains(id)
    }

    pub fn unannotatable_ids(&self) -> impl Iterator<Item = &String> {
        self.unannotatable.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Annotation)> {
        self.entries.iter()
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let mut out = String::new();
        for (id, ann) in &self.entries {
            let line = serde_json::json!({
                "example_id": id,
                "informative": ann.informative,
                "chosen_words": ann.chosen_words,
                "rejected_words": ann.rejected_words,
                "equalized": ann.equalized,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        for id in &self.unannotatable {
            let line = serde_json::json!({ "example_id": id, "unannotatable": true });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut set = Self::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| CorpusError::MalformedRecord {
                    line: i + 1,
                    msg: e.to_string(),
                })?;
            let id = field(&v, "example_id", i + 1)?.to_string();
            if v.get("unannotatable").and_then(|b| b.as_bool()) == Some(true) {
                set.unannotatable.insert(id);
                continue;
            }
            let ann: Annotation = serde_json::from_value(serde_json::json!({
                "informative": v.get("informative"),
                "chosen_words": v.get("chosen_words"),
                "rejected_words": v.get("rejected_words"),
                "equalized": v.get("equalized"),
            }))
            .map_err(|e| CorpusError::MalformedRecord {
                line: i + 1,
                msg: e.to_string(),
            })?;
            set.entries.insert(id, ann);
        }
        Ok(set)
    }
}

/// A named split of a collection into two disjoint id subsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetPartition {
    pub label_a: String,
    pub label_b: String,
    pub ids_a: Vec<String>,
    pub ids_b: Vec<String>,
}

impl SubsetPartition {
    pub fn new(
        label_a: impl Into<String>,
        ids_a: Vec<String>,
        label_b: impl Into<String>,
        ids_b: Vec<String>,
    ) -> Result<Self, CorpusError> {
        let label_a = label_a.into();
        let label_b = label_b.into();
        let set_a: HashSet<&String> = ids_a.iter().collect();
        if let Some(dup) = ids_b.iter().find(|id| set_a.contains(id)) {
            return Err(CorpusError::OverlappingSubsets(
                label_a,
                label_b,
                dup.clone(),
            ));
        }
        Ok(Self {
            label_a,
            label_b,
            ids_a,
            ids_b,
        })
    }

    pub fn ids_for(&self, label: &str) -> Result<&[String], CorpusError> {
        if label == self.label_a {
            Ok(&self.ids_a)
        } else if label == self.label_b {
            Ok(&self.ids_b)
        } else {
            Err(CorpusError::NoSuchSubset(label.to_string()))
        }
    }

    pub fn other_label(&self, label: &str) -> Result<&str, CorpusError> {
        if label == self.label_a {
            Ok(&self.label_b)
        } else if label == self.label_b {
            Ok(&self.label_a)
        } else {
            Err(CorpusError::NoSuchSubset(label.to_string()))
        }
    }

    pub fn len(&self) -> usize {
        self.ids_a.len() + self.ids_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const IDS_LABEL: &str = "IDS";
pub const CDS_LABEL: &str = "CDS";
pub const LONGER_LABEL: &str = "longer-chosen";
pub const SHORTER_LABEL: &str = "shorter-chosen";

/// Split into the informativeness-driven subset (preferred answer is the
/// more informative one) and the correctness-driven subset (it is not).
pub fn partition_by_informativeness(
    collection: &ExampleCollection,
    annotations: &AnnotationSet,
) -> Result<SubsetPartition, CorpusError> {
    let missing: Vec<String> = collection
        .iter()
        .filter(|ex| annotations.get(&ex.id).is_none())
        .map(|ex| ex.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingAnnotations { ids: missing });
    }
    let mut ids_a = Vec::new();
    let mut ids_b = Vec::new();
    for ex in collection.iter() {
        match annotations.get(&ex.id).expect("checked above").informative {
            AnswerSide::Chosen => ids_a.push(ex.id.clone()),
            AnswerSide::Rejected => ids_b.push(ex.id.clone()),
        }
    }
    SubsetPartition::new(IDS_LABEL, ids_a, CDS_LABEL, ids_b)
}

/// Split by answer length; exact ties are excluded from both subsets and
/// returned separately.
pub fn partition_by_length(
    collection: &ExampleCollection,
    annotations: &AnnotationSet,
) -> Result<(SubsetPartition, Vec<String>), CorpusError> {
    let missing: Vec<String> = collection
        .iter()
        .filter(|ex| annotations.get(&ex.id).is_none())
        .map(|ex| ex.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(CorpusError::MissingAnnotations { ids: missing });
    }
    let mut longer = Vec::new();
    let mut shorter = Vec::new();
    let mut ties = Vec::new();
    for ex in collection.iter() {
        let ann = annotations.get(&ex.id).expect("checked above");
        match ann.chosen_words.cmp(&ann.rejected_words) {
            std::cmp::Ordering::Greater => longer.push(ex.id.clone()),
            std::cmp::Ordering::Less => shorter.push(ex.id.clone()),
            std::cmp::Ordering::Equal => ties.push(ex.id.clone()),
        }
    }
    let partition = SubsetPartition::new(LONGER_LABEL, longer, SHORTER_LABEL, shorter)?;
    Ok((partition, ties))
}

/// Downsample exactly one side of a two-subset split so that
/// `|target subset| / total` lands within one example of `target_ratio`.
/// Sampling is uniform without replacement and a pure function of the inputs
/// and the RNG state. Returns the kept ids per side (target side first).
pub(crate) fn downsample_to_ratio<'a>(
    target_ids: &'a [String],
    other_ids: &'a [String],
    target_ratio: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<&'a String>, Vec<&'a String>), CorpusError> {
    if !(target_ratio > 0.0 && target_ratio < 1.0) {
        return Err(CorpusError::InvalidRatio(target_ratio));
    }
    let n_t = target_ids.len();
    let n_o = other_ids.len();
    if n_t == 0 || n_o == 0 {
        return Err(CorpusError::UnachievableRatio {
            target: target_ratio,
            label_a: "target".into(),
            n_a: n_t,
            label_b: "other".into(),
            n_b: n_o,
        });
    }
    let current = n_t as f64 / (n_t + n_o) as f64;
    let pick = |ids: &'a [String], keep: usize, rng: &mut ChaCha8Rng| -> Vec<&'a String> {
        let mut idx: Vec<usize> = sample(rng, ids.len(), keep).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| &ids[i]).collect()
    };
    if (current - target_ratio).abs() < f64::EPSILON {
        return Ok((target_ids.iter().collect(), other_ids.iter().collect()));
    }
    if current < target_ratio {
        // Too few target examples relative to the rest: shrink the other side.
        let keep = ((n_t as f64) * (1.0 - target_ratio) / target_ratio).round() as usize;
        let keep = keep.min(n_o);
        if keep == n_o {
            return Ok((target_ids.iter().collect(), other_ids.iter().collect()));
        }
        Ok((target_ids.iter().collect(), pick(other_ids, keep, rng)))
    } else {
        let keep = ((n_o as f64) * target_ratio / (1.0 - target_ratio)).round() as usize;
        let keep = keep.min(n_t);
        if keep == n_t {
            return Ok((target_ids.iter().collect(), other_ids.iter().collect()));
        }
        Ok((pick(target_ids, keep, rng), other_ids.iter().collect()))
    }
}

/// Build a subcollection whose correctness-driven share matches
/// `target_ratio` by downsampling exactly one side of the IDS/CDS partition.
/// Deterministic per seed.
pub fn control_cds_ratio(
    collection: &ExampleCollection,
    partition: &SubsetPartition,
    target_ratio: f64,
    seed: u64,
) -> Result<ExampleCollection, CorpusError> {
    let cds = partition.ids_for(CDS_LABEL)?;
    let ids = partition.ids_for(IDS_LABEL)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (keep_cds, keep_ids) = downsample_to_ratio(cds, ids, target_ratio, &mut rng)?;
    let mut keep: BTreeSet<String> = keep_cds.into_iter().cloned().collect();
    keep.extend(keep_ids.into_iter().cloned());
    Ok(collection.retain_ids(&keep))
}
