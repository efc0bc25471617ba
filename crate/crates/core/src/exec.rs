//! Chunked trial execution, parallel when the `parallel` feature is on.
//!
//! Trials are split into fixed-size chunks keyed by trial index and the
//! per-chunk results are returned in chunk order, so the output does not
//! depend on the number of worker threads.

use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over chunks. Falls back to sequential when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub(crate) fn chunk_ranges(total: u64, chunk: u64) -> Vec<Range<u64>> {
    let chunk = chunk.max(1);
    (0..total.div_ceil(chunk))
        .map(|c| c * chunk..((c + 1) * chunk).min(total))
        .collect()
}

pub(crate) fn run_chunks<T, F>(
    execution: Execution,
    total: u64,
    chunk: u64,
    work: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Range<u64>) -> Result<T> + Sync + Send,
{
    let ranges = chunk_ranges(total, chunk);
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            ranges.into_par_iter().map(work).collect()
        }
        _ => ranges.into_iter().map(work).collect(),
    }
}
