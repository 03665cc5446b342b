use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Conversation, CorpusError};

/// Conversation-level train/dev/test partition. Each list is sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<String>,
    pub dev: Vec<String>,
    pub test: Vec<String>,
}

impl Splits {
    pub fn contains(&self, split: SplitName, id: &str) -> bool {
        self.ids(split).iter().any(|s| s == id)
    }

    pub fn ids(&self, split: SplitName) -> &[String] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!(
                "unknown split {other:?} (expected train, dev or test)"
            )),
        }
    }
}

const RATIO_EPS: f64 = 1e-9;

/// Split sizes for `n` conversations.
///
/// Dev and test take `ceil(ratio * n)`; train takes the remainder. When the
/// rounding would leave a non-empty train share without conversations, the
/// larger of dev/test gives one back.
pub fn split_sizes(
    n: usize,
    ratios: (f64, f64, f64),
) -> Result<(usize, usize, usize), CorpusError> {
    let (train, dev, test) = ratios;
    if [train, dev, test]
        .iter()
        .any(|r| !r.is_finite() || *r < 0.0)
    {
        return Err(CorpusError::InvalidRatios(format!(
            "ratios must be non-negative, got {ratios:?}"
        )));
    }
    if ((train + dev + test) - 1.0).abs() > RATIO_EPS {
        return Err(CorpusError::InvalidRatios(format!(
            "ratios must sum to 1, got {}",
            train + dev + test
        )));
    }
    let needed = [train, dev, test].iter().filter(|r| **r > 0.0).count();
    if n < needed {
        return Err(CorpusError::TooFewConversations {
            needed,
            available: n,
        });
    }
    let share = |r: f64| -> usize {
        if r > 0.0 {
            ((r * n as f64) - RATIO_EPS).ceil().max(1.0) as usize
        } else {
            0
        }
    };
    let (mut d, mut t) = (share(dev), share(test));
    let train_min = usize::from(train > 0.0);
    while d + t + train_min > n {
        if d >= t && d > 1 {
            d -= 1;
        } else if t > 1 {
            t -= 1;
        } else {
            d -= 1;
        }
    }
    Ok((n - d - t, d, t))
}

/// Shuffles conversation ids under `seed` and cuts them into train/dev/test.
pub fn split_dataset(
    convs: &[Conversation],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<Splits, CorpusError> {
    let (n_train, n_dev, _) = split_sizes(convs.len(), ratios)?;
    let mut ids: Vec<String> = convs.iter().map(|c| c.id().to_string()).collect();
    ids.sort();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = ids.split_off(n_train + n_dev);
    let mut dev = ids.split_off(n_train);
    let mut train = ids;
    train.sort();
    dev.sort();
    test.sort();
    Ok(Splits { train, dev, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::fixtures::conversation;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn corpus(n: usize) -> Vec<Conversation> {
        (0..n)
            .map(|i| conversation(&format!("conv{i:02}"), &[None]))
            .collect()
    }

    #[test]
    fn twenty_six_conversations() {
        let s = split_dataset(&corpus(26), (0.70, 0.10, 0.20), 7).unwrap();
        assert_eq!((s.train.len(), s.dev.len(), s.test.len()), (17, 3, 6));
    }

    #[test]
    fn degenerate_ratio() {
        let s = split_dataset(&corpus(10), (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(s.train.len(), 10);
        assert!(s.dev.is_empty() && s.test.is_empty());
    }

    #[test]
    fn deterministic() {
        let c = corpus(26);
        assert_eq!(
            split_dataset(&c, (0.7, 0.1, 0.2), 42).unwrap(),
            split_dataset(&c, (0.7, 0.1, 0.2), 42).unwrap()
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(
            split_dataset(&corpus(2), (0.7, 0.1, 0.2), 0),
            Err(CorpusError::TooFewConversations {
                needed: 3,
                available: 2
            })
        ));
        assert!(matches!(
            split_dataset(&corpus(5), (0.7, 0.1, 0.1), 0),
            Err(CorpusError::InvalidRatios(_))
        ));
        assert!(matches!(
            split_dataset(&corpus(5), (1.2, -0.1, -0.1), 0),
            Err(CorpusError::InvalidRatios(_))
        ));
    }

    #[test]
    fn skewed_small_corpus_keeps_train() {
        assert_eq!(split_sizes(3, (0.1, 0.45, 0.45)).unwrap(), (1, 1, 1));
        assert_eq!(split_sizes(4, (0.0, 0.5, 0.5)).unwrap(), (0, 2, 2));
    }

    proptest! {
        #[test]
        fn partitions(n in 3usize..60, seed in any::<u64>(), dev in 0.05f64..0.3, test in 0.05f64..0.3) {
            let c = corpus(n);
            let s = split_dataset(&c, (1.0 - dev - test, dev, test), seed).unwrap();
            let all: BTreeSet<&String> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
            prop_assert_eq!(all.len(), n);
            prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), n);
            prop_assert!(!s.train.is_empty() && !s.dev.is_empty() && !s.test.is_empty());
        }
    }
}
