/// Count histogram over 8-bit samples with `n >= 2` equal-width bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: Vec<u32>,
    total: u64,
}

impl Histogram {
    pub fn from_samples(samples: &[u8], bins: usize) -> Self {
        assert!((2..=256).contains(&bins), "histogram needs 2..=256 bins");
        let mut counts = vec![0u32; bins];
        for &s in samples {
            counts[usize::from(s) * bins / 256] += 1;
        }
        Histogram {
            counts,
            total: samples.len() as u64,
        }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        Histogram { counts, total }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Masses summing to one, or all zero for an empty histogram.
    pub fn normalized(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| f64::from(c) / n).collect()
    }
}

/// `sqrt(1 - BC)` with `BC = sum sqrt(p_i q_i)`. Evaluated on raw counts so
/// that identical histograms give exactly zero. Empty histograms are at
/// distance zero from each other and one from anything else.
pub fn bhattacharyya_distance(a: &Histogram, b: &Histogram) -> f64 {
    assert_eq!(a.bins(), b.bins(), "histograms must have the same bin count");
    match (a.total, b.total) {
        (0, 0) => return 0.0,
        (0, _) | (_, 0) => return 1.0,
        _ => {}
    }
    let overlap: f64 = a
        .counts
        .iter()
        .zip(&b.counts)
        .map(|(&x, &y)| (f64::from(x) * f64::from(y)).sqrt())
        .sum();
    let bc = overlap / (a.total as f64 * b.total as f64).sqrt();
    (1.0 - bc.min(1.0)).max(0.0).sqrt()
}
