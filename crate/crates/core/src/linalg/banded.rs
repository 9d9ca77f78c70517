//! Banded Cholesky factorization for SPD matrices with a narrow band.
//!
//! Row-by-row node numbering on the structured strip meshes keeps the
//! half-bandwidth near the number of nodes per mesh row, so a band factor is
//! far cheaper than a dense one and exact up to rounding.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Lower-triangular band factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    band: usize,
    // row i holds L[i, i-band ..= i], left-padded with zeros
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.dim();
        let band = a.bandwidth();
        let width = band + 1;
        let mut data = vec![0.0; n * width];
        for (i, j, v) in a.triplets() {
            if j <= i {
                data[i * width + (j + band - i)] = v;
            }
        }
        for i in 0..n {
            let first = i.saturating_sub(band);
            for j in first..=i {
                let k0 = first.max(j.saturating_sub(band));
                let mut s = data[i * width + (j + band - i)];
                for k in k0..j {
                    s -= data[i * width + (k + band - i)] * data[j * width + (k + band - j)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Argument(format!(
                            "matrix is not positive definite (pivot {s:.3e} at row {i})"
                        )));
                    }
                    data[i * width + band] = s.sqrt();
                } else {
                    data[i * width + (j + band - i)] = s / data[j * width + band];
                }
            }
        }
        Ok(Self { n, band, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, band, width) = (self.n, self.band, self.band + 1);
        debug_assert_eq!(x.len(), n);
        for i in 0..n {
            let first = i.saturating_sub(band);
            let row = &self.data[i * width..(i + 1) * width];
            let mut s = x[i];
            for k in first..i {
                s -= row[k + band - i] * x[k];
            }
            x[i] = s / row[band];
        }
        for i in (0..n).rev() {
            x[i] /= self.data[i * width + band];
            let xi = x[i];
            let first = i.saturating_sub(band);
            let row = &self.data[i * width..(i + 1) * width];
            for k in first..i {
                x[k] -= row[k + band - i] * xi;
            }
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
