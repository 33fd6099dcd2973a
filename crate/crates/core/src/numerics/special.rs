use std::f64::consts::{PI, SQRT_2};

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Asymptotic Kolmogorov p-value `P(K > √n · stat)`.
///
/// For arguments below 1 the alternating series converges slowly, so the
/// equivalent theta-function form is summed instead.
pub fn kolmogorov_pvalue(stat: f64, n_samples: usize) -> f64 {
    let x = (n_samples as f64).sqrt() * stat;
    if !(x > 0.0) {
        return 1.0;
    }
    if x < 1.0 {
        // P(K <= x) = √(2π)/x Σ_{k>=1} exp(-(2k-1)²π²/(8x²))
        let mut cdf = 0.0;
        for k in 1..=100 {
            let m = (2 * k - 1) as f64;
            let term = (-m * m * PI * PI / (8.0 * x * x)).exp();
            cdf += term;
            if term < 1e-16 * cdf.max(1e-300) || term == 0.0 {
                break;
            }
        }
        cdf *= (2.0 * PI).sqrt() / x;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for k in 1..=100u32 {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if k >= 25 || term < 1e-12 {
            // the next term bounds the tail of an alternating series
            let next = (-2.0 * (kf + 1.0).powi(2) * x * x).exp();
            if next < 1e-12 {
                break;
            }
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    if !(stat > 0.0) {
        return 1.0;
    }
    ChiSquared::new(df as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}
