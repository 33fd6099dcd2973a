//! Matrix exponentials.
//!
//! Generators and sub-generators (nonnegative off-diagonals, column sums
//! `≤ 0`) go through uniformization, which only ever combines nonnegative
//! numbers. Everything else falls back to scaling and squaring with a
//! truncated Taylor series.

use num_complex::Complex64;

use super::DenseMatrix;
use crate::error::{Error, Result};

/// Bound on the discarded Poisson tail mass, relative to `‖v‖₁`.
pub const TRUNCATION_TOLERANCE: f64 = 1e-12;

/// Largest `q·h` handled in a single uniformization step; keeps `e^{-qh}`
/// well above the underflow threshold.
const MAX_STEP_MASS: f64 = 50.0;

/// `exp(A t) v`.
pub fn matrix_exponential_action(a: &DenseMatrix, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    if v.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "vector of length {} for a {}x{} matrix",
            v.len(),
            a.rows(),
            a.cols()
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "matrix exponential needs a finite t >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    if is_subgenerator(a) {
        uniformized_action(a, t, v)
    } else {
        expm(a, t)?.matvec(v)
    }
}

/// Nonnegative off-diagonals and every column sum `≤ 0` (to rounding).
pub fn is_subgenerator(a: &DenseMatrix) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.rows();
    let tol = 1e-12 * a.max_abs().max(1.0);
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..n {
            let x = a[(i, j)];
            if i != j && x < 0.0 {
                return false;
            }
            sum += x;
        }
        if sum > tol {
            return false;
        }
    }
    true
}

fn uniformized_action(a: &DenseMatrix, t: f64, v: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let rate = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max) + 1.0;
    // P = I + A / rate is entrywise nonnegative with column sums <= 1.
    let mut p = a.scaled(1.0 / rate);
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    let total = rate * t;
    let steps = (total / MAX_STEP_MASS).ceil().max(1.0);
    if steps > 1e9 {
        return Err(Error::InvalidParameter(format!(
            "uniformization would need {steps:e} steps (rate·t = {total:e})"
        )));
    }
    let steps = steps as usize;
    let mass = total / steps as f64;
    // four digits of headroom below the advertised bound
    let step_tol = 1e-4 * TRUNCATION_TOLERANCE / steps as f64;

    let mut x = v.to_vec();
    let mut term = vec![0.0; n];
    for _ in 0..steps {
        let mut weight = (-mass).exp();
        let mut acc: Vec<f64> = x.iter().map(|xi| weight * xi).collect();
        term.copy_from_slice(&x);
        let mut k = 0usize;
        loop {
            k += 1;
            term = p.matvec(&term)?;
            weight *= mass / k as f64;
            for (a, ti) in acc.iter_mut().zip(&term) {
                *a += weight * ti;
            }
            // Remaining Poisson mass is bounded by a geometric series once
            // k exceeds the mean.
            let ratio = mass / (k + 2) as f64;
            if ratio < 1.0 {
                let tail = weight * (mass / (k + 1) as f64) / (1.0 - ratio);
                if tail <= step_tol {
                    break;
                }
            }
        }
        if acc.iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow);
        }
        x = acc;
    }
    Ok(x)
}

/// `exp(A t)` by scaling and squaring a truncated Taylor series.
pub fn expm(a: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("expm needs a square matrix".into()));
    }
    let n = a.rows();
    let b = a.scaled(t);
    let norm = b.norm_1();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(Error::Overflow);
    }
    let c = b.scaled(0.5f64.powi(squarings));
    let mut result = DenseMatrix::identity(n);
    let mut term = DenseMatrix::identity(n);
    for k in 1..=60 {
        term = term.matmul(&c)?.scaled(1.0 / k as f64);
        result = result.add(&term)?;
        if term.norm_1() <= 1e-18 * result.norm_1() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result)?;
        if result.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::Overflow);
        }
    }
    Ok(result)
}

/// Complex scaling-and-squaring exponential of a row-major `d×d` matrix.
pub(crate) fn expm_complex(a: &[Complex64], d: usize) -> Result<Vec<Complex64>> {
    debug_assert_eq!(a.len(), d * d);
    let norm = (0..d)
        .map(|j| (0..d).map(|i| a[i * d + j].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings);
    let c: Vec<Complex64> = a.iter().map(|x| x * scale).collect();

    let matmul = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let xik = x[i * d + k];
                for j in 0..d {
                    out[i * d + j] += xik * y[k * d + j];
                }
            }
        }
        out
    };
    let norm_of = |x: &[Complex64]| x.iter().map(|z| z.norm()).sum::<f64>();

    let mut result = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        result[i * d + i] = Complex64::new(1.0, 0.0);
    }
    let mut term = result.clone();
    for k in 1..=60 {
        term = matmul(&term, &c);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|z| *z *= inv);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
        if norm_of(&term) <= 1e-18 * norm_of(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
        if result.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Overflow);
        }
    }
    Ok(result)
}
