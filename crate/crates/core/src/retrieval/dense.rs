//! Inner-product ranking over externally supplied embeddings.
//!
//! Encoders live outside this crate. An [`EmbeddingProvider`] hands out one
//! vector per query and per candidate; `no-suggestion` is represented by a
//! reserved silence vector. Two providers ship here: [`SidecarProvider`]
//! reads precomputed vectors from a text file and [`HashingProvider`] is a
//! deterministic bag-of-words feature hasher for tests and demos.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{
    build_passage, finish_ranking, tokenize, Passage, Query, RankedSuggestion, Ranker,
    RetrievalError, DEFAULT_TOP_K,
};
use crate::class::{CandidateClass, FaqId};
use crate::corpus::FaqDatabase;

/// Something that can be embedded on the candidate side.
#[derive(Debug, Clone, Copy)]
pub enum Candidate<'a> {
    Silence,
    Passage(&'a Passage),
}

pub trait EmbeddingProvider: Send + Sync {
    fn dimension(&self) -> usize;

    fn embed_query(&self, query: &Query) -> Result<Vec<f64>, RetrievalError>;

    fn embed_candidate(&self, candidate: Candidate<'_>) -> Result<Vec<f64>, RetrievalError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn embed_query(&self, query: &Query) -> Result<Vec<f64>, RetrievalError> {
        (**self).embed_query(query)
    }

    fn embed_candidate(&self, candidate: Candidate<'_>) -> Result<Vec<f64>, RetrievalError> {
        (**self).embed_candidate(candidate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseConfig {
    /// Rank the provider's silence vector as a regular candidate.
    pub include_silence: bool,
    /// Alternative silence mechanism: when set, `no-suggestion` is ranked
    /// with this fixed score instead of its vector's inner product. Off by
    /// default.
    pub silence_threshold: Option<f64>,
    pub top_k: usize,
}

impl Default for DenseConfig {
    fn default() -> Self {
        DenseConfig {
            include_silence: true,
            silence_threshold: None,
            top_k: DEFAULT_TOP_K,
        }
    }
}

fn check_dim(
    key: impl FnOnce() -> String,
    expected: usize,
    v: &[f64],
) -> Result<(), RetrievalError> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(RetrievalError::DimensionMismatch {
            key: key(),
            expected,
            found: v.len(),
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Candidate vectors computed once per FAQ database.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseIndex {
    dimension: usize,
    candidates: Vec<(CandidateClass, Vec<f64>)>,
    config: DenseConfig,
}

impl DenseIndex {
    pub fn build<P: EmbeddingProvider + ?Sized>(
        provider: &P,
        faqs: &FaqDatabase,
        config: DenseConfig,
    ) -> Result<Self, RetrievalError> {
        let dimension = provider.dimension();
        let mut candidates = Vec::with_capacity(faqs.len() + 1);
        if config.include_silence && config.silence_threshold.is_none() {
            let v = provider.embed_candidate(Candidate::Silence)?;
            check_dim(|| "silence".into(), dimension, &v)?;
            candidates.push((CandidateClass::NoSuggestion, v));
        }
        for faq in faqs.items() {
            let passage = build_passage(faq);
            let v = provider.embed_candidate(Candidate::Passage(&passage))?;
            check_dim(|| format!("faq:{}", faq.id), dimension, &v)?;
            candidates.push((CandidateClass::Faq(faq.id), v));
        }
        Ok(DenseIndex {
            dimension,
            candidates,
            config,
        })
    }

    pub fn config(&self) -> DenseConfig {
        self.config
    }

    pub fn rank<P: EmbeddingProvider + ?Sized>(
        &self,
        provider: &P,
        query: &Query,
    ) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        let q = provider.embed_query(query)?;
        check_dim(|| query_key(&query.text), self.dimension, &q)?;
        let mut scored: Vec<(CandidateClass, f64)> = self
            .candidates
            .iter()
            .map(|(class, v)| (*class, dot(&q, v)))
            .collect();
        if let Some(threshold) = self.config.silence_threshold {
            scored.push((CandidateClass::NoSuggestion, threshold));
        }
        Ok(finish_ranking(scored, self.config.top_k))
    }
}

/// Scores every FAQ passage (and the silence candidate when configured) by
/// inner product with the query vector.
pub fn rank_dense<P: EmbeddingProvider + ?Sized>(
    provider: &P,
    faqs: &FaqDatabase,
    query: &Query,
    config: DenseConfig,
) -> Result<Vec<RankedSuggestion>, RetrievalError> {
    DenseIndex::build(provider, faqs, config)?.rank(provider, query)
}

pub struct DenseRanker<P> {
    provider: P,
    index: DenseIndex,
}

impl<P: EmbeddingProvider> DenseRanker<P> {
    pub fn new(
        provider: P,
        faqs: &FaqDatabase,
        config: DenseConfig,
    ) -> Result<Self, RetrievalError> {
        let index = DenseIndex::build(&provider, faqs, config)?;
        Ok(DenseRanker { provider, index })
    }
}

impl<P: EmbeddingProvider> Ranker for DenseRanker<P> {
    fn name(&self) -> &str {
        "dense"
    }

    fn rank(&self, query: &Query, _seed: u64) -> Result<Vec<RankedSuggestion>, RetrievalError> {
        self.index.rank(&self.provider, query)
    }
}

/// Sidecar key of a query: `query:` followed by the hex SHA-256 of its text.
pub fn query_key(text: &str) -> String {
    format!("query:{}", hex::encode(Sha256::digest(text.as_bytes())))
}

/// Precomputed vectors loaded from the embedding sidecar.
///
/// File layout: a `dim=<d>` header line, then one record per line, a key
/// (`faq:<id>`, `silence` or `query:<sha256 hex>`) followed by `d`
/// space-separated decimal floats. Blank lines are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SidecarProvider {
    dimension: usize,
    faqs: BTreeMap<FaqId, Vec<f64>>,
    silence: Option<Vec<f64>>,
    queries: HashMap<String, Vec<f64>>,
}

impl SidecarProvider {
    pub fn new(dimension: usize) -> Self {
        SidecarProvider {
            dimension,
            faqs: BTreeMap::new(),
            silence: None,
            queries: HashMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, RetrievalError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self, RetrievalError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let bad = |line: usize, message: String| RetrievalError::Sidecar { line, message };

        let (line, header) = lines
            .next()
            .ok_or_else(|| bad(1, "missing dim=<d> header".into()))?;
        let dimension: usize = header
            .strip_prefix("dim=")
            .and_then(|d| d.parse().ok())
            .filter(|d| *d > 0)
            .ok_or_else(|| bad(line, format!("expected dim=<d> header, got {header:?}")))?;

        let mut provider = SidecarProvider::new(dimension);
        for (line, record) in lines {
            let mut fields = record.split_whitespace();
            let key = fields.next().expect("non-empty line");
            let values = fields
                .map(|f| match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(bad(line, format!("invalid float {f:?}"))),
                })
                .collect::<Result<Vec<f64>, _>>()?;
            if values.len() != dimension {
                return Err(bad(
                    line,
                    format!("{key} has {} values, expected {dimension}", values.len()),
                ));
            }
            let fresh = if key == "silence" {
                provider.silence.replace(values).is_none()
            } else if let Some(id) = key.strip_prefix("faq:") {
                let id: FaqId = id.parse().map_err(|e: String| bad(line, e))?;
                provider.faqs.insert(id, values).is_none()
            } else if key.starts_with("query:") {
                provider.queries.insert(key.to_string(), values).is_none()
            } else {
                return Err(bad(line, format!("unknown key {key:?}")));
            };
            if !fresh {
                return Err(bad(line, format!("duplicate key {key:?}")));
            }
        }
        Ok(provider)
    }

    pub fn insert_faq(&mut self, id: FaqId, v: Vec<f64>) -> Result<(), RetrievalError> {
        check_dim(|| format!("faq:{id}"), self.dimension, &v)?;
        self.faqs.insert(id, v);
        Ok(())
    }

    pub fn set_silence(&mut self, v: Vec<f64>) -> Result<(), RetrievalError> {
        check_dim(|| "silence".into(), self.dimension, &v)?;
        self.silence = Some(v);
        Ok(())
    }

    pub fn insert_query(&mut self, text: &str, v: Vec<f64>) -> Result<(), RetrievalError> {
        let key = query_key(text);
        check_dim(|| key.clone(), self.dimension, &v)?;
        self.queries.insert(key, v);
        Ok(())
    }

    /// Serialises into the sidecar text format. Query records are sorted by
    /// key so the output is deterministic.
    pub fn to_sidecar_string(&self) -> String {
        fn record(out: &mut String, key: &str, v: &[f64]) {
            out.push_str(key);
            for x in v {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        let mut out = format!("dim={}\n", self.dimension);
        if let Some(s) = &self.silence {
            record(&mut out, "silence", s);
        }
        for (id, v) in &self.faqs {
            record(&mut out, &format!("faq:{id}"), v);
        }
        let mut queries: Vec<_> = self.queries.iter().collect();
        queries.sort_by(|a, b| a.0.cmp(b.0));
        for (key, v) in queries {
            record(&mut out, key, v);
        }
        out
    }
}

impl EmbeddingProvider for SidecarProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_query(&self, query: &Query) -> Result<Vec<f64>, RetrievalError> {
        let key = query_key(&query.text);
        self.queries
            .get(&key)
            .cloned()
            .ok_or(RetrievalError::MissingEmbedding(key))
    }

    fn embed_candidate(&self, candidate: Candidate<'_>) -> Result<Vec<f64>, RetrievalError> {
        match candidate {
            Candidate::Silence => self
                .silence
                .clone()
                .ok_or_else(|| RetrievalError::MissingEmbedding("silence".into())),
            Candidate::Passage(p) => self
                .faqs
                .get(&p.faq_id)
                .cloned()
                .ok_or_else(|| RetrievalError::MissingEmbedding(format!("faq:{}", p.faq_id))),
        }
    }
}

/// Feature-hashed bag of words, L2-normalised.
///
/// Each token is hashed with 64-bit FNV-1a; the low bits pick the bucket
/// and the top bit the sign. The silence vector defaults to zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct HashingProvider {
    dimension: usize,
    silence: Vec<f64>,
}

impl HashingProvider {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "embedding dimension must be positive");
        HashingProvider {
            dimension,
            silence: vec![0.0; dimension],
        }
    }

    pub fn with_silence(mut self, silence: Vec<f64>) -> Result<Self, RetrievalError> {
        check_dim(|| "silence".into(), self.dimension, &silence)?;
        self.silence = silence;
        Ok(self)
    }

    pub fn embed_text(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dimension];
        for token in tokenize(text) {
            let h = fnv1a(token.as_bytes());
            let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
            v[(h % self.dimension as u64) as usize] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl EmbeddingProvider for HashingProvider {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_query(&self, query: &Query) -> Result<Vec<f64>, RetrievalError> {
        Ok(self.embed_text(&query.text))
    }

    fn embed_candidate(&self, candidate: Candidate<'_>) -> Result<Vec<f64>, RetrievalError> {
        Ok(match candidate {
            Candidate::Silence => self.silence.clone(),
            Candidate::Passage(p) => self.embed_text(&p.text),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::faq;

    fn basis(dim: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        v
    }

    fn id(n: u32) -> FaqId {
        FaqId::new(n).unwrap()
    }

    fn five_faqs() -> FaqDatabase {
        FaqDatabase::new(
            (1..=5)
                .map(|i| faq(i, &format!("Frage {i}"), "Antwort"))
                .collect(),
        )
        .unwrap()
    }

    /// Dimension 6: FAQ i gets e_{i-1}, silence gets e_5.
    fn orthonormal() -> SidecarProvider {
        let mut p = SidecarProvider::new(6);
        for i in 1..=5 {
            p.insert_faq(id(i), basis(6, i as usize - 1)).unwrap();
        }
        p.set_silence(basis(6, 5)).unwrap();
        p
    }

    fn q(text: &str) -> Query {
        Query::from_window(vec![("Kunde".into(), text.into())])
    }

    #[test]
    fn exact_match() {
        let mut p = orthonormal();
        p.insert_query(&q("drei").text, basis(6, 2)).unwrap();
        let out = rank_dense(&p, &five_faqs(), &q("drei"), DenseConfig::default()).unwrap();
        assert_eq!(out[0].class, CandidateClass::Faq(id(3)));
        assert_eq!(out[0].score, 1.0);
        assert_eq!(out.len(), 6);

        let no_silence = DenseConfig {
            include_silence: false,
            ..DenseConfig::default()
        };
        assert_eq!(
            rank_dense(&p, &five_faqs(), &q("drei"), no_silence)
                .unwrap()
                .len(),
            5
        );
    }

    #[test]
    fn zero_query_uses_tie_order() {
        let mut p = orthonormal();
        p.insert_query(&q("leer").text, vec![0.0; 6]).unwrap();
        let out = rank_dense(&p, &five_faqs(), &q("leer"), DenseConfig::default()).unwrap();
        assert!(out.iter().all(|s| s.score == 0.0));
        assert_eq!(out[0].class, CandidateClass::NoSuggestion);
        let ids: Vec<u32> = out[1..]
            .iter()
            .map(|s| s.class.faq_id().unwrap().get())
            .collect();
        assert_eq!(ids, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn threshold_mode() {
        let mut p = orthonormal();
        p.insert_query(&q("schwach").text, {
            let mut v = vec![0.0; 6];
            v[0] = 0.3;
            v
        })
        .unwrap();
        let cfg = DenseConfig {
            include_silence: false,
            silence_threshold: Some(0.5),
            ..DenseConfig::default()
        };
        let out = rank_dense(&p, &five_faqs(), &q("schwach"), cfg).unwrap();
        assert_eq!(out[0].class, CandidateClass::NoSuggestion);
        assert_eq!(out[1].class, CandidateClass::Faq(id(1)));
    }

    #[test]
    fn wrong_dimension() {
        let mut p = orthonormal();
        assert!(matches!(
            p.insert_query("x", vec![1.0; 3]),
            Err(RetrievalError::DimensionMismatch {
                expected: 6,
                found: 3,
                ..
            })
        ));
        let bad = "dim=6\nfaq:1 1 0 0 0 0 0\n";
        let parsed = SidecarProvider::parse(bad).unwrap();
        assert!(matches!(
            DenseIndex::build(&parsed, &five_faqs(), DenseConfig::default()),
            Err(RetrievalError::MissingEmbedding(_))
        ));

        struct Liar;
        impl EmbeddingProvider for Liar {
            fn dimension(&self) -> usize {
                4
            }
            fn embed_query(&self, _: &Query) -> Result<Vec<f64>, RetrievalError> {
                Ok(vec![0.0; 3])
            }
            fn embed_candidate(&self, _: Candidate<'_>) -> Result<Vec<f64>, RetrievalError> {
                Ok(vec![0.0; 4])
            }
        }
        let idx = DenseIndex::build(&Liar, &five_faqs(), DenseConfig::default()).unwrap();
        assert!(matches!(
            idx.rank(&Liar, &q("x")),
            Err(RetrievalError::DimensionMismatch {
                expected: 4,
                found: 3,
                ..
            })
        ));
    }

    #[test]
    fn sidecar_round_trip() {
        let mut p = orthonormal();
        p.insert_query("hallo", vec![0.5, -0.25, 0.0, 0.0, 1e-3, 2.0])
            .unwrap();
        let text = p.to_sidecar_string();
        assert!(text.starts_with("dim=6\nsilence "));
        assert_eq!(SidecarProvider::parse(&text).unwrap(), p);
    }

    #[test]
    fn sidecar_errors() {
        assert!(matches!(
            SidecarProvider::parse(""),
            Err(RetrievalError::Sidecar { .. })
        ));
        assert!(matches!(
            SidecarProvider::parse("dim=2\nfaq:1 1 2 3"),
            Err(RetrievalError::Sidecar { line: 2, .. })
        ));
        assert!(matches!(
            SidecarProvider::parse("dim=1\nbanana 1"),
            Err(RetrievalError::Sidecar { line: 2, .. })
        ));
        assert!(matches!(
            SidecarProvider::parse("dim=1\nsilence 1\nsilence 2"),
            Err(RetrievalError::Sidecar { line: 3, .. })
        ));
        assert!(matches!(
            SidecarProvider::parse("dim=1\nfaq:1 NaN"),
            Err(RetrievalError::Sidecar { line: 2, .. })
        ));
    }

    #[test]
    fn hashing_provider_prefers_lexical_match() {
        let faqs = FaqDatabase::new(vec![
            faq(1, "Wie melde ich mich online an?", "Über das Portal."),
            faq(2, "Gibt es ein Zertifikat?", "Ja, am Ende des Projekts."),
        ])
        .unwrap();
        let p = HashingProvider::new(256);
        let out = rank_dense(
            &p,
            &faqs,
            &q("bekomme ich ein zertifikat am ende"),
            DenseConfig::default(),
        )
        .unwrap();
        assert_eq!(out[0].class, CandidateClass::Faq(id(2)));
        let v = p.embed_text("zertifikat");
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
