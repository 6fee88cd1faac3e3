use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recorded in CSV headers.
pub const RNG_ID: &str = "ChaCha8 (rand_chacha 0.3), seed_from_u64(seed), stream = d << 32 | index";

/// Vector `index` of length `d`, uniform on the open interval (−1, 1).
///
/// Each `(d, index)` pair has its own stream, so vectors do not depend on
/// the formats, the other lengths or the number of worker threads.
pub fn uniform_vector(seed: u64, d: usize, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((d as u64) << 32) | index as u64);
    (0..d)
        .map(|_| loop {
            let v: f64 = rng.gen_range(-1.0..1.0);
            if v != -1.0 {
                break v;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(uniform_vector(7, 64, 3), uniform_vector(7, 64, 3));
        assert_ne!(uniform_vector(7, 64, 3), uniform_vector(7, 64, 4));
        assert_ne!(uniform_vector(7, 64, 3)[..8], uniform_vector(7, 65, 3)[..8]);
        assert_ne!(uniform_vector(7, 64, 3), uniform_vector(8, 64, 3));
    }

    #[test]
    fn values_in_open_interval() {
        let v = uniform_vector(1, 4096, 0);
        assert!(v.iter().all(|x| *x > -1.0 && *x < 1.0));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean.abs() < 0.05);
    }
}
