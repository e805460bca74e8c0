use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An observed trajectory of nonnegative counts `Y_1, ..., Y_n`.
///
/// Time indices used throughout the crate are 1-based: `Y_t` is
/// `counts()[t - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSeries {
    counts: Vec<u64>,
    known_change: Option<usize>,
}

impl CountSeries {
    pub fn new(counts: Vec<u64>) -> Self {
        Self {
            counts,
            known_change: None,
        }
    }

    /// Attach the index of the last pre-change observation.
    pub fn with_known_change(mut self, k_star: usize) -> Result<Self> {
        if k_star == 0 || k_star > self.counts.len() {
            return Err(Error::structural(format!(
                "change index {k_star} outside 1..={}",
                self.counts.len()
            )));
        }
        self.known_change = Some(k_star);
        Ok(self)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn known_change(&self) -> Option<usize> {
        self.known_change
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn into_counts(self) -> Vec<u64> {
        self.counts
    }
}

impl From<Vec<u64>> for CountSeries {
    fn from(counts: Vec<u64>) -> Self {
        Self::new(counts)
    }
}

/// Inclusive 1-based index range `{start, ..., end}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    start: usize,
    end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start == 0 || start > end {
            return Err(Error::structural(format!(
                "invalid window [{start}, {end}]: need 1 <= start <= end"
            )));
        }
        Ok(Self { start, end })
    }

    /// The window covering a whole series of length `n`.
    pub fn full(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub(crate) fn check_within(&self, n: usize) -> Result<()> {
        if self.end > n {
            return Err(Error::structural(format!(
                "window [{}, {}] exceeds series length {n}",
                self.start, self.end
            )));
        }
        Ok(())
    }
}
