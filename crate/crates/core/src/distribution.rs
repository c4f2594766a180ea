//! Exact empirical CDF and CCDF series.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistributionKind {
    Cdf,
    Ccdf,
}

impl DistributionKind {
    pub fn label(self) -> &'static str {
        match self {
            DistributionKind::Cdf => "cdf",
            DistributionKind::Ccdf => "ccdf",
        }
    }
}

/// Sorted `(value, probability)` pairs, one per sample.
///
/// The CDF at the i-th smallest sample (1-based rank i) is `i / n`; tied
/// samples all take the rank of the last of them, so `P(X <= x)` is exact.
pub fn distribution(samples: &[f64], kind: DistributionKind) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if samples.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("distribution sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let cdf = (j + 1) as f64 / n as f64;
        let p = match kind {
            DistributionKind::Cdf => cdf,
            DistributionKind::Ccdf => 1.0 - cdf,
        };
        for _ in i..=j {
            out.push((sorted[i], p));
        }
        i = j + 1;
    }
    Ok(out)
}

pub fn write_series<W: Write>(series: &[(f64, f64)], kind: DistributionKind, mut w: W) -> std::io::Result<()> {
    writeln!(w, "value,{}", kind.label())?;
    for (v, p) in series {
        writeln!(w, "{v},{p}")?;
    }
    w.flush()
}
