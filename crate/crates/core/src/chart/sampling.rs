//! Seeded sampling: scrambled Halton points, random arrows and jets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::domain::{DomainBox, Point};
use super::lie::JetVector;
use super::linalg::Matrix;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Fraction of the chart box that sample points are drawn from.
pub const SAMPLE_FRACTION: f64 = 0.9;

/// A deterministic generator for one `(seed, stream)` pair.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Halton points with a random Cranley–Patterson rotation.
#[derive(Clone, Debug)]
pub struct QuasiSampler {
    region: DomainBox,
    shift: Vec<f64>,
    index: u64,
}

impl QuasiSampler {
    /// Samples from `domain` shrunk to [`SAMPLE_FRACTION`].
    pub fn new(domain: &DomainBox, seed: u64) -> Self {
        Self::in_region(domain.shrink(SAMPLE_FRACTION), seed)
    }

    pub fn in_region(region: DomainBox, seed: u64) -> Self {
        assert!(region.dim() <= PRIMES.len(), "Halton bases only cover dimension ≤ 8");
        let mut r = rng(seed, 0x5a17);
        let shift = (0..region.dim()).map(|_| r.random::<f64>()).collect();
        QuasiSampler {
            region,
            shift,
            // skip the origin of the sequence
            index: 1,
        }
    }

    pub fn next_point(&mut self) -> Point {
        let i = self.index;
        self.index += 1;
        Point(
            self.region
                .bounds
                .iter()
                .enumerate()
                .map(|(d, [lo, hi])| {
                    let u = (radical_inverse(i, PRIMES[d]) + self.shift[d]).fract();
                    lo + (hi - lo) * u
                })
                .collect(),
        )
    }

    pub fn take(&mut self, count: usize) -> Vec<Point> {
        (0..count).map(|_| self.next_point()).collect()
    }
}

pub fn gaussian_matrix<R: Rng>(n: usize, r: &mut R) -> Matrix {
    Matrix::from_fn(n, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vec<R: Rng>(n: usize, r: &mut R) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

/// Orthogonal matrix from the QR factorization of a Gaussian matrix, with
/// the column signs fixed so that `R` has a positive diagonal.
pub fn random_orthogonal<R: Rng>(n: usize, r: &mut R) -> Matrix {
    let g: DMatrix<f64> = gaussian_matrix(n, r).to_nalgebra();
    let qr = g.qr();
    let mut q = qr.q();
    let rr = qr.r();
    for j in 0..n {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Matrix::from_nalgebra(&q)
}

/// A well-conditioned random invertible matrix `I + scale·G`.
pub fn random_invertible<R: Rng>(n: usize, scale: f64, r: &mut R) -> Matrix {
    loop {
        let m = Matrix::<f64>::identity(n).add(&gaussian_matrix(n, r).scale(scale));
        if m.det().abs() > 0.1 {
            return m;
        }
    }
}

/// Random symmetric positive-definite matrix `AᵀA + I/2`.
pub fn random_spd<R: Rng>(n: usize, r: &mut R) -> Matrix {
    let a = gaussian_matrix(n, r);
    a.transpose().mul(&a).add(&Matrix::identity(n).scale(0.5))
}

/// A random jet of the requested order with Gaussian components; `xi2` is
/// symmetrized.
pub fn random_jet<R: Rng>(n: usize, order: usize, r: &mut R) -> JetVector {
    let xi0 = gaussian_vec(n, r);
    match order {
        0 => JetVector::order0(xi0),
        1 => JetVector::order1(xi0, gaussian_matrix(n, r)).expect("consistent dimensions"),
        _ => {
            let xi1 = gaussian_matrix(n, r);
            let mut xi2 = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in j..n {
                        let v: f64 = r.sample(StandardNormal);
                        xi2[i * n * n + j * n + k] = v;
                        xi2[i * n * n + k * n + j] = v;
                    }
                }
            }
            JetVector::order2(xi0, xi1, xi2).expect("symmetric by construction")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_deterministic_and_inside() {
        let d = DomainBox::new(vec![[0.5, 3.0], [-1.0, 1.0]]).unwrap();
        let a = QuasiSampler::new(&d, 7).take(200);
        let b = QuasiSampler::new(&d, 7).take(200);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| d.contains(p.coords())));
        assert_ne!(a, QuasiSampler::new(&d, 8).take(200));
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(4, 2), 0.125);
    }

    #[test]
    fn orthogonal_matrices_are_orthogonal() {
        let mut r = rng(1, 2);
        for n in 1..=3 {
            let q = random_orthogonal(n, &mut r);
            assert!(q.transpose().mul(&q).max_abs_diff(&Matrix::identity(n)) < 1e-14);
        }
    }

    #[test]
    fn random_second_jets_are_symmetric() {
        let j = random_jet(3, 2, &mut rng(3, 0));
        for i in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(j.xi2_at(i, a, b), j.xi2_at(i, b, a));
                }
            }
        }
    }
}
