//! Halton points for cold-starting an empty sample set.

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points in `[0,1)^dim`, starting at sequence index `start`, each
/// coordinate shifted by `shift` modulo 1 (a Cranley-Patterson rotation).
pub fn halton_points(count: usize, dim: usize, start: u64, shift: &[f64]) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "halton supports up to {} dimensions", PRIMES.len());
    (0..count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = halton(start + i, PRIMES[d]) + shift.get(d).copied().unwrap_or(0.0);
                    v - v.floor()
                })
                .collect()
        })
        .collect()
}
