//! Halton low-discrepancy points, optionally shifted by a random rotation.

use alloc::vec::Vec;

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

pub const MAX_DIM: usize = PRIMES.len();

pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while index > 0 {
        out += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    out
}

/// Iterator over Halton points in `[0,1)^dim`, starting at index 1 so the
/// origin is skipped. `shift` applies a Cranley-Patterson rotation.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    index: u64,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "Halton sequence supports at most {MAX_DIM} dimensions");
        Self {
            dim,
            index: 1,
            shift: alloc::vec![0.0; dim],
        }
    }

    pub fn with_shift(dim: usize, shift: Vec<f64>) -> Self {
        assert_eq!(shift.len(), dim);
        Self { shift, ..Self::new(dim) }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.index;
        self.index += 1;
        Some(
            (0..self.dim)
                .map(|k| {
                    let v = radical_inverse(i, PRIMES[k]) + self.shift[k];
                    v - libm::floor(v)
                })
                .collect(),
        )
    }
}
