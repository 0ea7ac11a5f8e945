use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Least-squares polynomial fit over a sliding odd-length window.
///
/// Interior samples are evaluated at the window centre. The first and last
/// `window / 2` samples are evaluated off-centre on the first and last full
/// windows (polynomial extrapolation), so no padding values are invented.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    window: usize,
    poly_order: usize,
    /// Maps a window of samples to polynomial coefficients in the scaled
    /// abscissa `u = offset / half_width`; shape `(poly_order + 1) × window`.
    fit: DMatrix<f64>,
}

impl SavitzkyGolay {
    pub fn new(window: usize, poly_order: usize, len: usize) -> Result<Self> {
        let bad = || Error::BadWindow {
            window,
            poly_order,
            len,
        };
        if window.is_multiple_of(2) || poly_order < 2 || window < poly_order + 2 || window > len {
            return Err(bad());
        }
        let half = (window / 2) as f64;
        let design = DMatrix::from_fn(window, poly_order + 1, |r, c| {
            let u = (r as f64 - half) / half;
            u.powi(c as i32)
        });
        let fit = design
            .svd(true, true)
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::Invariant(format!("Savitzky-Golay fit: {e}")))?;
        Ok(Self {
            window,
            poly_order,
            fit,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn poly_order(&self) -> usize {
        self.poly_order
    }

    /// Applies the filter; `deriv = 0` smooths, higher orders differentiate.
    /// Derivatives are scaled to per-second units using `fs`.
    pub fn apply(&self, values: &[f64], deriv: usize, fs: f64) -> Result<Vec<f64>> {
        if deriv > self.poly_order {
            return Err(Error::OrderTooHigh {
                order: deriv,
                poly_order: self.poly_order,
            });
        }
        let n = values.len();
        if n < self.window {
            return Err(Error::BadWindow {
                window: self.window,
                poly_order: self.poly_order,
                len: n,
            });
        }
        let half = self.window / 2;
        let scale = (fs / half as f64).powi(deriv as i32);
        let k = self.poly_order + 1;

        // Interior rows only need one coefficient: deriv! * c_deriv.
        let fact: f64 = (1..=deriv).map(|i| i as f64).product();
        let centre_row: Vec<f64> = (0..self.window)
            .map(|j| self.fit[(deriv, j)] * fact * scale)
            .collect();

        let mut out = vec![0.0; n];
        for i in half..n - half {
            let w = &values[i - half..=i + half];
            out[i] = centre_row.iter().zip(w).map(|(c, v)| c * v).sum();
        }

        let mut edge = |centre: usize, range: std::ops::Range<usize>| {
            let w = &values[centre - half..=centre + half];
            let coeffs: Vec<f64> = (0..k)
                .map(|r| (0..self.window).map(|j| self.fit[(r, j)] * w[j]).sum())
                .collect();
            for i in range {
                let u = (i as f64 - centre as f64) / half as f64;
                out[i] = eval_derivative(&coeffs, deriv, u) * scale;
            }
        };
        edge(half, 0..half);
        edge(n - 1 - half, n - half..n);
        Ok(out)
    }
}

/// Value of the `deriv`-th derivative of `sum c_j u^j` at `u`.
fn eval_derivative(coeffs: &[f64], deriv: usize, u: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(deriv)
        .rev()
        .fold(0.0, |acc, (j, &c)| {
            let falling: f64 = ((j - deriv + 1)..=j).map(|m| m as f64).product();
            acc * u + c * falling
        })
}
