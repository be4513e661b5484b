//! Reading and writing the JSON / JSONL files exchanged between commands.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Gesture, GestureKind, LabelSource, LabelSpan, ReferenceSet, TokenizedSentence};

#[derive(Debug, Serialize, Deserialize)]
struct RefsFile {
    author: String,
    gestures: Vec<RefsEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RefsEntry {
    id: String,
    name: String,
    kind: GestureKind,
    #[serde(default)]
    description: String,
    reference_sentences: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusLine {
    id: String,
    text: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn schema(path: &Path, line: usize, message: impl ToString) -> Error {
    Error::Schema {
        path: path.to_owned(),
        line,
        message: message.to_string(),
    }
}

pub fn load_reference_set(path: impl AsRef<Path>) -> Result<ReferenceSet> {
    let path = path.as_ref();
    parse_reference_set(&read(path)?).map_err(|e| match e {
        Error::Invalid(message) => schema(path, 0, message),
        other => other,
    })
}

pub fn parse_reference_set(json: &str) -> Result<ReferenceSet> {
    let file: RefsFile = serde_json::from_str(json).map_err(|e| Error::invalid(e.to_string()))?;
    let entries = file
        .gestures
        .into_iter()
        .map(|g| {
            (
                Gesture {
                    id: g.id,
                    name: g.name,
                    description: g.description,
                    kind: g.kind,
                },
                g.reference_sentences,
            )
        })
        .collect();
    ReferenceSet::new(file.author, entries)
}

pub fn reference_set_to_json(refs: &ReferenceSet) -> String {
    let file = RefsFile {
        author: refs.author().to_owned(),
        gestures: refs
            .gestures()
            .iter()
            .enumerate()
            .map(|(i, g)| RefsEntry {
                id: g.id.clone(),
                name: g.name.clone(),
                kind: g.kind,
                description: g.description.clone(),
                reference_sentences: refs.references(i).to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("refs serialize")
}

/// Non-blank lines with their 1-based line numbers.
fn jsonl_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<TokenizedSentence>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, raw) in jsonl_lines(&text) {
        let rec: CorpusLine = serde_json::from_str(raw).map_err(|e| schema(path, line, e))?;
        if !seen.insert(rec.id.clone()) {
            return Err(schema(path, line, format!("duplicate sentence id {:?}", rec.id)));
        }
        out.push(TokenizedSentence::new(rec.id, rec.text));
    }
    Ok(out)
}

pub fn write_corpus(path: impl AsRef<Path>, corpus: &[TokenizedSentence]) -> Result<()> {
    let mut buf = String::new();
    for s in corpus {
        buf.push_str(&serde_json::json!({"id": s.id, "text": s.text}).to_string());
        buf.push('\n');
    }
    write_atomic(path.as_ref(), buf.as_bytes())
}

/// Loads a labels file, rejecting malformed lines and overlapping spans
/// within one (sentence, source, annotator) group.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<LabelSpan>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut out = Vec::new();
    let mut groups: HashMap<(String, LabelSource, Option<String>), Vec<(usize, usize)>> =
        HashMap::new();
    for (line, raw) in jsonl_lines(&text) {
        let span: LabelSpan = serde_json::from_str(raw).map_err(|e| schema(path, line, e))?;
        if span.len == 0 {
            return Err(schema(path, line, "label length must be at least 1"));
        }
        if !(0.0..=1.0).contains(&span.score) {
            return Err(schema(path, line, format!("score {} outside [0, 1]", span.score)));
        }
        let key = (
            span.sentence_id.clone(),
            span.source,
            span.annotator_id.clone(),
        );
        let group = groups.entry(key).or_default();
        if let Some(&(s, e)) = group
            .iter()
            .find(|&&(s, e)| span.start < e && s < span.end())
        {
            return Err(schema(
                path,
                line,
                format!(
                    "span [{}, {}) overlaps span [{s}, {e}) in sentence {:?}",
                    span.start,
                    span.end(),
                    span.sentence_id
                ),
            ));
        }
        group.push((span.start, span.end()));
        out.push(span);
    }
    Ok(out)
}

/// Cross-checks labels against the gestures and sentences they refer to.
pub fn validate_labels(
    labels: &[LabelSpan],
    refs: &ReferenceSet,
    corpus: &[TokenizedSentence],
) -> Result<()> {
    let lengths: HashMap<&str, usize> = corpus.iter().map(|s| (s.id.as_str(), s.len())).collect();
    let mut unknown: Vec<&str> = labels
        .iter()
        .filter(|l| !refs.contains(&l.gesture_id))
        .map(|l| l.gesture_id.as_str())
        .collect();
    unknown.sort_unstable();
    unknown.dedup();
    if !unknown.is_empty() {
        return Err(Error::invalid(format!("unknown gesture ids: {}", unknown.join(", "))));
    }
    for l in labels {
        match lengths.get(l.sentence_id.as_str()) {
            None => {
                return Err(Error::invalid(format!(
                    "label refers to unknown sentence {:?}",
                    l.sentence_id
                )))
            }
            Some(&n) if l.end() > n => {
                return Err(Error::invalid(format!(
                    "label [{}, {}) exceeds sentence {:?} of {n} tokens",
                    l.start,
                    l.end(),
                    l.sentence_id
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

pub fn labels_to_jsonl(labels: &[LabelSpan]) -> String {
    let mut buf = String::new();
    for l in labels {
        buf.push_str(&serde_json::to_string(l).expect("label serializes"));
        buf.push('\n');
    }
    buf
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[LabelSpan]) -> Result<()> {
    write_atomic(path.as_ref(), labels_to_jsonl(labels).as_bytes())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value).expect("value serializes");
    body.push(b'\n');
    write_atomic(path.as_ref(), &body)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    serde_json::from_str(&read(path)?).map_err(|e| schema(path, e.line(), e))
}

/// Writes through a sibling temp file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
