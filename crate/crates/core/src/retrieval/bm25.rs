//! Okapi BM25 over FAQ passages.
//!
//! `score(q, d) = sum over query tokens t of
//!   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))`
//! with the non-negative idf `ln(1 + (N - df + 0.5) / (df + 0.5))`.
//! Repeated query tokens contribute once per occurrence.

use std::collections::BTreeMap;

use super::{
    build_passage, finish_ranking, tokenize, Query, RankedSuggestion, Ranker, RetrievalError,
    DEFAULT_TOP_K,
};
use crate::class::{CandidateClass, FaqId};
use crate::corpus::FaqDatabase;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

/// Inverted index over `build_passage` of every FAQ. Documents are numbered
/// in ascending FAQ id order. `no-suggestion` is never indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    faq_ids: Vec<FaqId>,
    /// term -> document frequency
    vocabulary: BTreeMap<String, usize>,
    /// term -> (document, term frequency), documents ascending
    postings: BTreeMap<String, Vec<(usize, u32)>>,
    doc_lengths: Vec<usize>,
    avg_doc_length: f64,
    params: Bm25Params,
}

impl Bm25Index {
    pub fn build(faqs: &FaqDatabase, params: Bm25Params) -> Result<Self, RetrievalError> {
        if faqs.is_empty() {
            return Err(RetrievalError::EmptyDatabase);
        }
        let mut postings: BTreeMap<String, Vec<(usize, u32)>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(faqs.len());
        for (doc, faq) in faqs.items().iter().enumerate() {
            let tokens = tokenize(&build_passage(faq).text);
            doc_lengths.push(tokens.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, count) in tf {
                postings.entry(term).or_default().push((doc, count));
            }
        }
        let vocabulary = postings.iter().map(|(t, p)| (t.clone(), p.len())).collect();
        let avg_doc_length = doc_lengths.iter().sum::<usize>() as f64 / doc_lengths.len() as f64;
        Ok(Bm25Index {
            faq_ids: faqs.ids().collect(),
            vocabulary,
            postings,
            doc_lengths,
            avg_doc_length,
            params,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.faq_ids.len()
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.vocabulary.get(term).copied().unwrap_or(0)
    }

    pub fn doc_lengths(&self) -> &[usize] {
        &self.doc_lengths
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.document_frequency(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Raw BM25 score of every document for `query_text`, in FAQ id order.
    pub fn scores(&self, query_text: &str) -> Vec<(FaqId, f64)> {
        let Bm25Params { k1, b } = self.params;
        let mut acc = vec![0.0f64; self.num_docs()];
        for token in tokenize(query_text) {
            let Some(postings) = self.postings.get(&token) else {
                continue;
            };
            let idf = self.idf(&token);
            for &(doc, tf) in postings {
                let tf = tf as f64;
                let norm = 1.0 - b + b * self.doc_lengths[doc] as f64 / self.avg_doc_length;
                acc[doc] += idf * (tf * (k1 + 1.0)) / (tf + k1 * norm);
            }
        }
        self.faq_ids.iter().copied().zip(acc).collect()
    }
}

/// Top `top_k` FAQs by BM25 score. Zero-score passages still fill the list.
pub fn rank_bm25(index: &Bm25Index, query: &Query, top_k: usize) -> Vec<RankedSuggestion> {
    let scored = index
        .scores(&query.text)
        .into_iter()
        .map(|(id, s)| (CandidateClass::Faq(id), s))
        .collect();
    finish_ranking(scored, top_k)
}

#[derive(Debug, Clone)]
pub struct Bm25Ranker {
    index: Bm25Index,
    top_k: usize,
}

impl Bm25Ranker {
    pub fn new(index: Bm25Index) -> Self {
        Bm25Ranker {
            index,
            top_k: DEFAULT_TOP_K,
        }
    }

    pub fn index(&self) -> &Bm25Index {
        &self.index
    }
}

impl Ranker for Bm25Ranker {
    fn name(&self) -> &str {
        "bm25"
    }

    fn rank(&self, query: &Query, _seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        Ok(rank_bm25(&self.index, query, self.top_k))
    }
}
