//! Joint law of the end state and the accumulated intensity of a fast chain
//! over a fixed interval.
//!
//! When the chain speed is so large that event-level simulation is out of
//! reach, `(Z_h, Λ_h)` given `Z_0 = i` is drawn directly. With
//! `Y = (Λ_h − λ∞h)/σ`, `σ² = V h / s`, the sub-characteristic function is
//!
//! ```text
//! E[e^{iuY}; Z_h = j | Z_0 = i] = [exp(h (sQ + i(u/σ) diag(λ − λ∞)))]_{ji}
//! ```
//!
//! and the conditional distribution function of `Y` follows by Gil-Pelaez
//! inversion with a midpoint rule. The inversion assumes `Λ_h` has no atom,
//! which holds to below `e^{-745}` when every state is left at least
//! `s·min_i(−q_ii)·h > 745` times in expectation. Distribution values are
//! accurate to about `1e-7`, limited by the complex matrix exponential.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ChainStatics, Generator};
use crate::error::{Error, Result};
use crate::numerics::{expm, expm_complex, RngStream};

/// Minimum expected number of exits from every state in one interval.
pub const MIN_EXPECTED_EXITS: f64 = 745.0;

/// Half-width of the midpoint-rule period in standardized units.
const PERIOD_HALF_WIDTH: f64 = 10.0;
const CF_CUTOFF: f64 = 1e-13;
const MAX_NODES: usize = 20_000;
/// Tabulated range and spacing of the standardized variable.
const TABLE_RANGE: f64 = 12.0;
const TABLE_STEP: f64 = 0.05;
const BISECTION_STEPS: usize = 36;

#[derive(Debug, Clone)]
struct IntervalTable {
    h: f64,
    /// `P_{ji} = P(Z_h = j | Z_0 = i)`, row-major by `j`.
    transition: Vec<f64>,
    sigma: f64,
    /// Midpoint nodes `u_k` and `ψ(u_k)` (row-major by `j`).
    nodes: Vec<f64>,
    psi: Vec<Vec<Complex64>>,
    /// Monotone tabulated conditional CDF for each `(j, i)`.
    cdf: Vec<Vec<f64>>,
}

/// Draws `(Z_h, Λ_h)` for the chain with generator `speed·Q`.
#[derive(Debug, Clone)]
pub struct OccupationSampler {
    d: usize,
    speed: f64,
    lambda: Vec<f64>,
    lambda_inf: f64,
    v: f64,
    degenerate: bool,
    tables: Vec<IntervalTable>,
}

impl OccupationSampler {
    /// Whether intervals of length `h` are handled within tolerance.
    pub fn is_applicable(generator: &Generator, speed: f64, h: f64) -> bool {
        let d = generator.dim();
        if d == 1 {
            return true;
        }
        let min_exit = (0..d).map(|i| generator.exit_rate(i)).fold(f64::INFINITY, f64::min);
        speed * min_exit * h > MIN_EXPECTED_EXITS
    }

    /// Precomputes the inversion tables for every distinct interval length.
    pub fn new(generator: &Generator, speed: f64, lambda: &[f64], lengths: &[f64]) -> Result<Self> {
        let statics = ChainStatics::new(generator, lambda, None)?;
        let d = generator.dim();
        let lambda_inf = statics.lambda_inf();
        let scale = lambda.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let degenerate = lambda.iter().all(|x| (x - lambda_inf).abs() <= 1e-12 * scale);
        let mut sampler = Self {
            d,
            speed,
            lambda: lambda.to_vec(),
            lambda_inf,
            v: statics.v(),
            degenerate,
            tables: Vec::new(),
        };
        for &h in lengths {
            if !(h > 0.0) || !h.is_finite() {
                return Err(Error::InvalidParameter(format!("interval length must be > 0, got {h}")));
            }
            if sampler.tables.iter().any(|t| t.h == h) {
                continue;
            }
            if !Self::is_applicable(generator, speed, h) {
                return Err(Error::UnsupportedRegime(format!(
                    "occupation sampling needs speed·min exit rate·h > {MIN_EXPECTED_EXITS}, got {:e}",
                    speed * h * (0..d).map(|i| generator.exit_rate(i)).fold(f64::INFINITY, f64::min)
                )));
            }
            let table = sampler.build_table(generator, h)?;
            sampler.tables.push(table);
        }
        Ok(sampler)
    }

    fn build_table(&self, generator: &Generator, h: f64) -> Result<IntervalTable> {
        let d = self.d;
        let p = expm(generator.matrix(), self.speed * h)?;
        let transition = p.as_slice().to_vec();
        let mut table = IntervalTable {
            h,
            transition,
            sigma: 0.0,
            nodes: Vec::new(),
            psi: Vec::new(),
            cdf: Vec::new(),
        };
        if self.degenerate || d == 1 {
            return Ok(table);
        }
        let sigma = (self.v * h / self.speed).sqrt();
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(
                "nonconstant rates with zero ergodic variance".into(),
            ));
        }
        table.sigma = sigma;

        let du = PI / (2.0 * PERIOD_HALF_WIDTH);
        let q = generator.matrix();
        for k in 0.. {
            if k == MAX_NODES {
                return Err(Error::InvalidParameter(
                    "characteristic function does not decay; interval too short".into(),
                ));
            }
            let u = (k as f64 + 0.5) * du;
            let a: Vec<Complex64> = (0..d * d)
                .map(|idx| {
                    let (r, c) = (idx / d, idx % d);
                    let mut z = Complex64::new(self.speed * h * q[(r, c)], 0.0);
                    if r == c {
                        z.im = h * (u / sigma) * (self.lambda[r] - self.lambda_inf);
                    }
                    z
                })
                .collect();
            let psi = expm_complex(&a, d)?;
            let largest = psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
            table.nodes.push(u);
            table.psi.push(psi);
            if largest < CF_CUTOFF {
                break;
            }
        }

        let points = (2.0 * TABLE_RANGE / TABLE_STEP).round() as usize + 1;
        for idx in 0..d * d {
            let mut column = Vec::with_capacity(points);
            let mut running = 0.0f64;
            for m in 0..points {
                let y = -TABLE_RANGE + m as f64 * TABLE_STEP;
                running = running.max(self.conditional_cdf(&table, idx, y));
                column.push(running);
            }
            table.cdf.push(column);
        }
        Ok(table)
    }

    /// `P(Y ≤ y | Z_h = j, Z_0 = i)` for `idx = j·d + i`, by Gil-Pelaez.
    fn conditional_cdf(&self, table: &IntervalTable, idx: usize, y: f64) -> f64 {
        let p = table.transition[idx];
        if p <= 0.0 {
            return 0.0;
        }
        let du = PI / (2.0 * PERIOD_HALF_WIDTH);
        let mut s = 0.0;
        for (u, psi) in table.nodes.iter().zip(&table.psi) {
            let rot = Complex64::from_polar(1.0, -u * y);
            s += (rot * psi[idx]).im / u;
        }
        (0.5 * p - s * du / PI) / p
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Draws the end state and `Λ_h` over an interval of a precomputed
    /// length `h`, starting from `from`.
    pub fn sample(&self, h: f64, from: usize, rng: &mut RngStream) -> Result<(usize, f64)> {
        let table = self
            .tables
            .iter()
            .find(|t| t.h == h)
            .ok_or_else(|| Error::InvalidParameter(format!("no table for interval length {h}")))?;
        let d = self.d;
        let weights: Vec<f64> = (0..d).map(|j| table.transition[j * d + from].max(0.0)).collect();
        let to = if d == 1 { 0 } else { rng.weighted_index(&weights) };
        if self.degenerate || d == 1 {
            return Ok((to, self.lambda[from] * h));
        }
        let idx = to * d + from;
        let u = rng.uniform();
        let column = &table.cdf[idx];
        let k = column.partition_point(|&f| f < u);
        let y = if k == 0 {
            -TABLE_RANGE
        } else if k == column.len() {
            TABLE_RANGE
        } else {
            let mut lo = -TABLE_RANGE + (k - 1) as f64 * TABLE_STEP;
            let mut hi = lo + TABLE_STEP;
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if self.conditional_cdf(table, idx, mid) < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let lo = self.lambda.iter().cloned().fold(f64::INFINITY, f64::min) * h;
        let hi = self.lambda.iter().cloned().fold(0.0, f64::max) * h;
        let lambda = (self.lambda_inf * h + table.sigma * y).clamp(lo, hi);
        Ok((to, lambda))
    }
}
