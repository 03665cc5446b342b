//! On-disk formats: canonical JSONL corpus, FAQ JSON, annotation CSV and
//! sender alias JSON.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Conversation, CorpusError, FaqDatabase, FaqItem, Utterance};
use crate::class::FaqId;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads the canonical corpus: one utterance per line. Conversations are
/// returned sorted by id; utterances are ordered by index.
pub fn read_corpus(path: &Path) -> Result<Vec<Conversation>, CorpusError> {
    let raw = fs::read_to_string(path).map_err(io_err(path))?;
    let mut grouped: BTreeMap<String, Vec<Utterance>> = BTreeMap::new();
    for (n, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let u: Utterance = serde_json::from_str(line).map_err(|source| CorpusError::Json {
            path: path.to_path_buf(),
            line: n + 1,
            source,
        })?;
        grouped
            .entry(u.conversation_id.clone())
            .or_default()
            .push(u);
    }
    grouped
        .into_iter()
        .map(|(id, mut utterances)| {
            utterances.sort_by_key(|u| u.index);
            Conversation::new(id, utterances)
        })
        .collect()
}

pub fn write_corpus(path: &Path, convs: &[Conversation]) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for u in convs.iter().flat_map(Conversation::utterances) {
        let line = serde_json::to_string(u).expect("utterances serialize");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

pub fn read_faqs(path: &Path) -> Result<FaqDatabase, CorpusError> {
    let raw = fs::read_to_string(path).map_err(io_err(path))?;
    let items: Vec<FaqItem> = serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
        path: path.to_path_buf(),
        line: source.line(),
        source,
    })?;
    FaqDatabase::new(items)
}

/// One row of the annotation sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub conversation_id: String,
    pub utterance_index: usize,
    pub faq_id: FaqId,
}

/// Annotations grouped per conversation id, in file order.
pub fn read_annotations(path: &Path) -> Result<HashMap<String, Vec<(usize, FaqId)>>, CorpusError> {
    let csv_err = |source| CorpusError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out: HashMap<String, Vec<(usize, FaqId)>> = HashMap::new();
    for record in reader.deserialize::<AnnotationRecord>() {
        let r = record.map_err(csv_err)?;
        out.entry(r.conversation_id)
            .or_default()
            .push((r.utterance_index, r.faq_id));
    }
    Ok(out)
}

/// Sender alias map stored as a JSON object `{"real name": "alias"}`.
pub fn read_aliases(path: &Path) -> Result<HashMap<String, String>, CorpusError> {
    let raw = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
        path: path.to_path_buf(),
        line: source.line(),
        source,
    })
}
