//! Shapiro–Wilk W test using Royston's AS R94 approximation (uncensored samples).

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::dist::{horner, normal_quantile, normal_sf};
use super::{Method, TestResult};
use crate::error::{Error, Result};

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.5440, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];
const SMALL: f64 = 1e-19;

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

/// Half of the antisymmetric coefficient vector: `a[i]` weights
/// `x_(n-1-i) - x_(i)` in the sorted sample.
fn coefficients(n: usize) -> Vec<f64> {
    let nn2 = n / 2;
    if n == 3 {
        return vec![FRAC_1_SQRT_2];
    }
    let an = n as f64;
    let an25 = an + 0.25;
    // expected normal order statistics (lower half, negative)
    let m: Vec<f64> = (0..nn2)
        .map(|i| normal_quantile((i as f64 + 1.0 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = horner(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; nn2];
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + horner(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first_scaled..nn2 {
        a[i] = -m[i] / fac;
    }
    a
}

pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult> {
    let n = sample.len();
    if n < MIN_N {
        return Err(Error::SampleTooSmall { n, min: MIN_N });
    }
    if n > MAX_N {
        return Err(Error::SampleTooLarge { n, max: MAX_N });
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConfigInvalid("sample contains non-finite values".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < SMALL * x[n - 1].abs().max(x[0].abs()).max(1.0) {
        return Err(Error::AllEqual);
    }

    let half = coefficients(n);
    // full antisymmetric coefficient vector, ascending order statistics
    let a_full: Vec<f64> = (0..n)
        .map(|i| {
            let j = n - 1 - i;
            match i.cmp(&j) {
                std::cmp::Ordering::Less => -half[i],
                std::cmp::Ordering::Greater => half[j],
                std::cmp::Ordering::Equal => 0.0,
            }
        })
        .collect();

    // W as a squared correlation; the (s - sax)(s + sax) form keeps 1 - W accurate
    let xs: Vec<f64> = x.iter().map(|v| v / range).collect();
    let sx = xs.iter().sum::<f64>() / n as f64;
    let sa = a_full.iter().sum::<f64>() / n as f64;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (ai, xi) in a_full.iter().zip(&xs) {
        let asa = ai - sa;
        let xsx = xi - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p = if n == 3 {
        (1.0 - (6.0 / PI) * w.sqrt().min(1.0).acos()).max(0.0)
    } else {
        let an = n as f64;
        let y = w1.ln();
        if n <= 11 {
            let gamma = horner(&G, an);
            if y >= gamma {
                SMALL
            } else {
                let y = -(gamma - y).ln();
                let m = horner(&C3, an);
                let s = horner(&C4, an).exp();
                normal_sf((y - m) / s)
            }
        } else {
            let xx = an.ln();
            let m = horner(&C5, xx);
            let s = horner(&C6, xx).exp();
            normal_sf((y - m) / s)
        }
    };

    Ok(TestResult {
        statistic: w,
        p_value: p.clamp(0.0, 1.0),
        method: Method::ShapiroWilk,
        n: vec![n],
    })
}
