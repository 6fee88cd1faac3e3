/// Lower edges of the histogram buckets after the first; bucket 0 holds
/// errors below `1e-8`, including exact zeros.
pub const DECADE_EDGES: [f64; 9] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0];

pub const BUCKETS: usize = DECADE_EDGES.len() + 1;

/// Labels used as CSV column names.
pub const BUCKET_LABELS: [&str; BUCKETS] = [
    "lt_1e-8", "1e-8", "1e-7", "1e-6", "1e-5", "1e-4", "1e-3", "1e-2", "1e-1", "ge_1e0",
];

/// Absolute-error statistics. Merging is order sensitive in the last bits
/// of `sum`, so callers merge in vector index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorStats {
    pub count: u64,
    pub sum: f64,
    pub max: f64,
    pub histogram: [u64; BUCKETS],
}

pub fn bucket(err: f64) -> usize {
    DECADE_EDGES.iter().take_while(|&&edge| err >= edge).count()
}

impl ErrorStats {
    pub fn push(&mut self, err: f64) {
        self.count += 1;
        self.sum += err;
        // NaN propagates into max so a broken run is visible
        if err > self.max || err.is_nan() {
            self.max = err;
        }
        self.histogram[bucket(err)] += 1;
    }

    pub fn from_pairs(got: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut s = ErrorStats::default();
        for (a, b) in got {
            s.push((a - b).abs());
        }
        s
    }

    pub fn merge(&mut self, other: &ErrorStats) {
        self.count += other.count;
        self.sum += other.sum;
        if other.max > self.max || other.max.is_nan() {
            self.max = other.max;
        }
        for (h, o) in self.histogram.iter_mut().zip(other.histogram) {
            *h += o;
        }
    }

    pub fn avg(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }
}
