use serde::Serialize;

use crate::error::{Error, Result};

/// Category reports of `n` users. Categories are zero-based (`0..k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dataset {
    values: Vec<u32>,
    k: usize,
}

impl Dataset {
    pub fn new(values: Vec<u32>, k: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&v) = values.iter().find(|&&v| v as usize >= k) {
            return Err(Error::CategoryOutOfRange {
                value: v as usize,
                k,
            });
        }
        Ok(Self { values, k })
    }

    pub(crate) fn new_unchecked(values: Vec<u32>, k: usize) -> Self {
        debug_assert!(!values.is_empty());
        Self { values, k }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Per-category counts.
    pub fn counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.k];
        for &v in &self.values {
            counts[v as usize] += 1;
        }
        counts
    }
}
