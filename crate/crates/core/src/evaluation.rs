//! Dual-class MRR@10.
//!
//! Every utterance of the test split is ranked from its query window. The
//! reciprocal rank of its gold class is then averaged separately over
//! silence-gold and FAQ-gold utterances, so a ranker that is always silent
//! cannot hide behind the majority class.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::class::CandidateClass;
use crate::corpus::Utterance;
use crate::retrieval::{
    build_query_with_window, RankedSuggestion, Ranker, RetrievalError, DEFAULT_TOP_K,
    DEFAULT_WINDOW,
};
use crate::sampling::SamplingSetting;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("test split is empty")]
    EmptySplit,
    #[error("ranking utterance {index} of conversation {conversation_id:?} failed: {source}")]
    Ranker {
        conversation_id: String,
        index: usize,
        source: RetrievalError,
    },
    #[error("unknown report format {0:?} (expected md or csv)")]
    UnknownFormat(String),
}

/// `1 / position` of `gold` among the first `cutoff` entries, 0 if absent.
pub fn reciprocal_rank(ranking: &[RankedSuggestion], gold: CandidateClass, cutoff: usize) -> f64 {
    ranking
        .iter()
        .take(cutoff)
        .position(|s| s.class == gold)
        .map_or(0.0, |p| 1.0 / (p + 1) as f64)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    /// Sampling setting the model was trained under, `None` for baselines.
    pub setting: Option<SamplingSetting>,
    pub mrr_no_suggestion: f64,
    pub mrr_faq: f64,
    pub n_no_suggestion: usize,
    pub n_faq: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub window: usize,
    pub cutoff: usize,
    /// Base seed; each utterance gets its own seed derived from it.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            window: DEFAULT_WINDOW,
            cutoff: DEFAULT_TOP_K,
            seed: 0,
        }
    }
}

/// Seed for one utterance, independent of evaluation order.
pub fn utterance_seed(base: u64, conversation_id: &str, index: usize) -> u64 {
    let mut h = conversation_id
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        });
    h ^= (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(h ^ splitmix64(base))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ranks every utterance of `test_split` and averages reciprocal ranks per
/// gold class. Utterances of one conversation must be contiguous and in
/// order, as produced by [`crate::Conversation::utterances`].
pub fn evaluate<R: Ranker + ?Sized>(
    ranker: &R,
    test_split: &[Utterance],
    setting: Option<SamplingSetting>,
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    if test_split.is_empty() {
        return Err(EvalError::EmptySplit);
    }
    let mut silence = CompensatedSum::default();
    let mut faq = CompensatedSum::default();
    let (mut n_silence, mut n_faq) = (0usize, 0usize);
    for (pos, u) in test_split.iter().enumerate() {
        let context = |source| EvalError::Ranker {
            conversation_id: u.conversation_id.clone(),
            index: u.index,
            source,
        };
        let query = build_query_with_window(test_split, pos, options.window).map_err(context)?;
        let seed = utterance_seed(options.seed, &u.conversation_id, u.index);
        let ranking = ranker.rank(&query, seed).map_err(context)?;
        let rr = reciprocal_rank(&ranking, u.gold, options.cutoff);
        if u.gold.is_silence() {
            silence.add(rr);
            n_silence += 1;
        } else {
            faq.add(rr);
            n_faq += 1;
        }
    }
    let mean = |s: CompensatedSum, n: usize| if n == 0 { 0.0 } else { s.total() / n as f64 };
    Ok(EvalReport {
        model: ranker.name().to_string(),
        setting,
        mrr_no_suggestion: mean(silence, n_silence),
        mrr_faq: mean(faq, n_faq),
        n_no_suggestion: n_silence,
        n_faq,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

/// Results table, rows sorted by (model, setting), MRRs to two decimals.
pub fn render_report(reports: &[EvalReport], format: ReportFormat) -> String {
    let mut rows: Vec<&EvalReport> = reports.iter().collect();
    rows.sort_by(|a, b| a.model.cmp(&b.model).then(a.setting.cmp(&b.setting)));
    let setting = |r: &EvalReport| {
        r.setting
            .map_or_else(|| "n/a".to_string(), |s| s.to_string())
    };

    let mut out = String::new();
    match format {
        ReportFormat::Markdown => {
            out.push_str("| model | setting | no-suggestion | faq | n no-suggestion | n faq |\n");
            out.push_str("|---|---|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {:.2} | {:.2} | {} | {} |",
                    r.model,
                    setting(r),
                    r.mrr_no_suggestion,
                    r.mrr_faq,
                    r.n_no_suggestion,
                    r.n_faq
                );
            }
        }
        ReportFormat::Csv => {
            out.push_str("model,setting,mrr_no_suggestion,mrr_faq,n_no_suggestion,n_faq\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{:.2},{:.2},{},{}",
                    r.model,
                    setting(r),
                    r.mrr_no_suggestion,
                    r.mrr_faq,
                    r.n_no_suggestion,
                    r.n_faq
                );
            }
        }
    }
    out
}
