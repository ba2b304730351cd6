use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Citation counts for one subject/year cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountDataset {
    pub subject: String,
    pub year: i32,
    pub counts: Vec<u64>,
}

impl CountDataset {
    pub fn new(subject: impl Into<String>, year: i32, counts: Vec<u64>) -> Self {
        Self {
            subject: subject.into(),
            year,
            counts,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn uncited(&self) -> usize {
        self.counts.iter().filter(|&&c| c == 0).count()
    }

    /// The same cell with uncited articles removed.
    pub fn without_uncited(&self) -> Self {
        Self {
            subject: self.subject.clone(),
            year: self.year,
            counts: self.counts.iter().copied().filter(|&c| c > 0).collect(),
        }
    }

    /// `ln(count + offset)` for every article, the transform behind the
    /// normal-on-log model and log-linear regression.
    pub fn log_transformed(&self, offset: u32) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| ((c + offset as u64) as f64).ln())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub max: u64,
    pub n: usize,
}

/// Raw-count mean, maximum and size, as in a per-cell summary table.
pub fn summarize(dataset: &CountDataset) -> Result<SummaryStats> {
    let counts = &dataset.counts;
    if counts.is_empty() {
        return Err(Error::EmptyData);
    }
    let total: u128 = counts.iter().map(|&c| c as u128).sum();
    Ok(SummaryStats {
        mean: total as f64 / counts.len() as f64,
        max: counts.iter().copied().max().unwrap_or(0),
        n: counts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&CountDataset::new("A", 2009, vec![0, 0, 0])).unwrap();
        assert_eq!((s.mean, s.max, s.n), (0.0, 0, 3));
        let s = summarize(&CountDataset::new("A", 2009, vec![5])).unwrap();
        assert_eq!((s.mean, s.max, s.n), (5.0, 5, 1));
        assert_eq!(summarize(&CountDataset::new("A", 2009, vec![])), Err(Error::EmptyData));
    }

    #[test]
    fn table_row_fixture() {
        // 9968 articles, total 72069 citations (mean 7.23), largest 433
        let n = 9968usize;
        let total = 72_069u64;
        let mut counts = vec![0u64; n];
        counts[0] = 433;
        let rest = total - 433;
        let per = rest / (n as u64 - 1);
        let extra = rest % (n as u64 - 1);
        for (i, c) in counts.iter_mut().enumerate().skip(1) {
            *c = per + u64::from((i as u64) <= extra);
        }
        let s = summarize(&CountDataset::new("Animal Science & Zoology", 2009, counts)).unwrap();
        assert_eq!(s.n, 9968);
        assert_eq!(s.max, 433);
        assert_eq!(format!("{:.2}", s.mean), "7.23");
    }

    #[test]
    fn without_uncited_drops_only_zeros() {
        let d = CountDataset::new("A", 2009, vec![0, 3, 0, 1]);
        let e = d.without_uncited();
        assert_eq!(e.counts, vec![3, 1]);
        assert_eq!(e.len() + d.uncited(), d.len());
    }
}
