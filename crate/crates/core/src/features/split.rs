use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    #[default]
    Random,
    #[serde(alias = "chrono")]
    Chronological,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random" => Ok(SplitMode::Random),
            "chrono" | "chronological" => Ok(SplitMode::Chronological),
            other => Err(format!("unknown split mode `{other}`")),
        }
    }
}

/// Disjoint train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
    pub mode: SplitMode,
}

fn test_size(n_rows: usize, test_fraction: f64) -> Result<usize> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    // the small offset keeps exact products such as 10 * 0.2 from rounding up
    let n_test = (n_rows as f64 * test_fraction - 1e-9).ceil().max(0.0) as usize;
    if n_test == 0 || n_test >= n_rows {
        return Err(Error::invalid(format!(
            "{n_rows} rows with test fraction {test_fraction} leaves an empty train or test set"
        )));
    }
    Ok(n_test)
}

/// Random mode shuffles with a seeded ChaCha generator and sends the first
/// `ceil(n * fraction)` rows to test. Chronological mode sends the latest
/// `ceil(n * fraction)` rows by date to test and needs `dates`.
pub fn train_test_split(
    n_rows: usize,
    test_fraction: f64,
    seed: u64,
    mode: SplitMode,
    dates: Option<&[NaiveDate]>,
) -> Result<SplitIndices> {
    if n_rows < 2 {
        return Err(Error::invalid("need at least 2 rows to split"));
    }
    let n_test = test_size(n_rows, test_fraction)?;
    let mut order: Vec<usize> = (0..n_rows).collect();
    let (mut test, mut train) = match mode {
        SplitMode::Random => {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (t, r) = order.split_at(n_test);
            (t.to_vec(), r.to_vec())
        }
        SplitMode::Chronological => {
            let dates = dates
                .ok_or_else(|| Error::invalid("chronological split requires row dates"))?;
            if dates.len() != n_rows {
                return Err(Error::Shape("dates length differs from row count".into()));
            }
            order.sort_by_key(|&i| dates[i]);
            let (r, t) = order.split_at(n_rows - n_test);
            (t.to_vec(), r.to_vec())
        }
    };
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices {
        train,
        test,
        seed,
        test_fraction,
        mode,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_twenty_percent() {
        let s = train_test_split(10, 0.2, 1, SplitMode::Random, None).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (8, 2));
        let again = train_test_split(10, 0.2, 1, SplitMode::Random, None).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn chronological_takes_latest_dates() {
        let dates: Vec<NaiveDate> = [5, 1, 4, 2, 3]
            .iter()
            .map(|&d| NaiveDate::from_ymd_opt(2017, 1, d).unwrap())
            .collect();
        let s = train_test_split(5, 0.4, 0, SplitMode::Chronological, Some(&dates)).unwrap();
        assert_eq!(s.test, vec![0, 2]);
        assert!(train_test_split(5, 0.4, 0, SplitMode::Chronological, None).is_err());
    }

    #[test]
    fn degenerate_sizes_rejected() {
        assert!(train_test_split(1, 0.5, 0, SplitMode::Random, None).is_err());
        assert!(train_test_split(10, 0.0, 0, SplitMode::Random, None).is_err());
        assert!(train_test_split(10, 1.0, 0, SplitMode::Random, None).is_err());
        assert!(train_test_split(2, 0.99, 0, SplitMode::Random, None).is_err());
    }

    proptest! {
        #[test]
        fn partitions_exactly(n in 2usize..300, frac in 0.01f64..0.99, seed in any::<u64>()) {
            if let Ok(s) = train_test_split(n, frac, seed, SplitMode::Random, None) {
                let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert!(!s.train.is_empty() && !s.test.is_empty());
            }
        }
    }
}
