//! Centering functions, scaling exponents and the limiting Gaussian laws.
//!
//! Every limit process solves a linear equation `dX = −aX dt + σ(t) dW`
//! with `X_0 = 0`, where each contributing martingale has
//!
//! ```text
//! σ²(s) = c₀ + c₁ e^{−as} + c₂ e^{−2as}.
//! ```
//!
//! Brackets, variances and exact Gaussian transitions therefore all have
//! closed forms.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::chain::{ChainPath, ChainStatics};
use crate::counting::{recovery_mean_ode, CountingPath};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Scaling regime of a limit theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    /// Constant intensity.
    NonModulated,
    /// `n → ∞`, then chain speed `α → ∞`.
    IteratedNThenAlpha,
    /// `α → ∞`, then `n → ∞`.
    IteratedAlphaThenN,
    /// Chain speed `n^β`, `n → ∞`.
    JointBeta { beta: f64 },
    /// Intensity `n^{-γ} λᵀZ_t`, `0 < γ < 1`.
    Gamma { gamma: f64 },
    /// Constant default and recovery rates.
    RecoveryNonModulated,
    /// Recovery with chain speed `n^β`.
    RecoveryJoint { beta: f64 },
}

impl Regime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::JointBeta { beta } | Self::RecoveryJoint { beta } if !(beta > 0.0) || !beta.is_finite() => {
                Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")))
            }
            Self::Gamma { gamma } if !(gamma > 0.0 && gamma < 1.0) => Err(Error::InvalidParameter(format!(
                "gamma must lie in (0, 1), got {gamma}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NonModulated => "non_modulated",
            Self::IteratedNThenAlpha => "iterated_n_then_alpha",
            Self::IteratedAlphaThenN => "iterated_alpha_then_n",
            Self::JointBeta { .. } => "joint_beta",
            Self::Gamma { .. } => "gamma",
            Self::RecoveryNonModulated => "recovery_non_modulated",
            Self::RecoveryJoint { .. } => "recovery_joint",
        }
    }

    /// `γ` for the intensity-scaled regime, else 0.
    pub fn gamma(&self) -> f64 {
        match *self {
            Self::Gamma { gamma } => gamma,
            _ => 0.0,
        }
    }

    pub fn is_recovery(&self) -> bool {
        matches!(self, Self::RecoveryNonModulated | Self::RecoveryJoint { .. })
    }
}

/// Choice of centering process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// `n ρ_t` with the deterministic curve.
    #[default]
    Deterministic,
    /// `n ρⁿ_t = n (1 − exp(−n^{-γ} Λ_t))` along the realised chain.
    Pathwise,
}

/// The exponent `e` in `n^e (N_t − n ρ_t)`.
pub fn scaling_exponent(regime: &Regime) -> f64 {
    match *regime {
        Regime::JointBeta { beta } | Regime::RecoveryJoint { beta } => -0.5 * (1.0 + (1.0 - beta).max(0.0)),
        Regime::Gamma { gamma } => 0.5 * (gamma - 1.0),
        _ => -0.5,
    }
}

/// Deterministic centering `ρ_t`; zero for the intensity-scaled regime,
/// whose centering is pathwise only.
pub fn centering_curve(regime: &Regime, statics: &ChainStatics, t: f64) -> f64 {
    match regime {
        Regime::Gamma { .. } => 0.0,
        Regime::RecoveryNonModulated | Regime::RecoveryJoint { .. } => {
            recovery_mean_ode(statics.lambda_inf(), statics.mu_inf(), t)
        }
        _ => -(-statics.lambda_inf() * t).exp_m1(),
    }
}

/// `1 − exp(−n^{-γ} Λ_t)` along the chain path.
pub fn pathwise_centering(path: &ChainPath, lambda: &[f64], n: u64, gamma: f64, t: f64) -> Result<f64> {
    let scale = if gamma == 0.0 { 1.0 } else { (n as f64).powf(-gamma) };
    Ok(-(-scale * path.accumulated_intensity(lambda, t)?).exp_m1())
}

/// `(1 − e^{−x})/x`, continuous at 0.
fn phi(x: f64) -> f64 {
    if x.abs() < 1e-300 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// One Gaussian martingale driving the limit, with
/// `σ²(s) = c₀ + c₁ e^{−as} + c₂ e^{−2as}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub label: &'static str,
    pub coeffs: [f64; 3],
}

/// Limit law of one regime.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitLaw {
    regime: Regime,
    drift_rate: f64,
    brackets: Vec<Bracket>,
}

impl LimitLaw {
    pub fn new(regime: Regime, statics: &ChainStatics) -> Result<Self> {
        regime.validate()?;
        let li = statics.lambda_inf();
        let mi = statics.mu_inf();
        let b = |c1: f64| Bracket {
            label: "B",
            coeffs: [0.0, c1, 0.0],
        };
        let (drift_rate, brackets) = match regime {
            Regime::NonModulated | Regime::IteratedNThenAlpha | Regime::IteratedAlphaThenN => (li, vec![b(li)]),
            Regime::JointBeta { beta } => {
                let v = statics.v();
                let mut out = Vec::new();
                if beta < 1.0 {
                    out.push(Bracket {
                        label: "G^H",
                        coeffs: [0.0, 0.0, v],
                    });
                }
                if beta == 1.0 {
                    out.push(Bracket {
                        label: "G",
                        coeffs: [0.0, 0.0, v],
                    });
                }
                if beta >= 1.0 {
                    out.push(b(li));
                }
                (li, out)
            }
            Regime::Gamma { .. } => (
                0.0,
                vec![Bracket {
                    label: "B",
                    coeffs: [li, 0.0, 0.0],
                }],
            ),
            Regime::RecoveryNonModulated => {
                let a = li + mi;
                (a, vec![recovery_jump_bracket(li, mi)])
            }
            Regime::RecoveryJoint { beta } => {
                let a = li + mi;
                let mut out = Vec::new();
                if beta <= 1.0 {
                    // Φ_s = (1 − ρ_s)λ − ρ_s μ = u + e^{−as} w
                    let r = if a > 0.0 { li / a } else { 0.0 };
                    let u: Vec<f64> = statics
                        .lambda()
                        .iter()
                        .zip(statics.mu())
                        .map(|(l, m)| (1.0 - r) * l - r * m)
                        .collect();
                    let w: Vec<f64> = statics
                        .lambda()
                        .iter()
                        .zip(statics.mu())
                        .map(|(l, m)| r * (l + m))
                        .collect();
                    out.push(Bracket {
                        label: "G",
                        coeffs: [
                            statics.quadratic_variance(&u)?,
                            2.0 * statics.cross_variance(&u, &w)?,
                            statics.quadratic_variance(&w)?,
                        ],
                    });
                }
                if beta >= 1.0 {
                    out.push(recovery_jump_bracket(li, mi));
                }
                (a, out)
            }
        };
        Ok(Self {
            regime,
            drift_rate,
            brackets,
        })
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Mean-reversion rate `a`.
    pub fn drift_rate(&self) -> f64 {
        self.drift_rate
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }

    /// Total `σ²(s)`.
    pub fn sigma_sq(&self, s: f64) -> f64 {
        let e = (-self.drift_rate * s).exp();
        self.brackets
            .iter()
            .map(|b| b.coeffs[0] + b.coeffs[1] * e + b.coeffs[2] * e * e)
            .sum()
    }

    /// `⟨·⟩_t` of each contributing martingale.
    pub fn bracket_values(&self, t: f64) -> Vec<(&'static str, f64)> {
        let a = self.drift_rate;
        self.brackets
            .iter()
            .map(|b| {
                let [c0, c1, c2] = b.coeffs;
                (b.label, c0 * t + c1 * t * phi(a * t) + c2 * t * phi(2.0 * a * t))
            })
            .collect()
    }

    /// `Var X_t = e^{−2at} ∫₀ᵗ e^{2as} σ²(s) ds`.
    pub fn variance(&self, t: f64) -> f64 {
        self.transition_variance(0.0, t)
    }

    pub fn stddev(&self, t: f64) -> f64 {
        self.variance(t).sqrt()
    }

    /// Variance of `X_{t+h} − e^{−ah} X_t`.
    pub fn transition_variance(&self, t: f64, h: f64) -> f64 {
        let a = self.drift_rate;
        let e1 = (-a * (t + h)).exp();
        let v: f64 = self
            .brackets
            .iter()
            .map(|b| {
                let [c0, c1, c2] = b.coeffs;
                c0 * h * phi(2.0 * a * h) + c1 * e1 * h * phi(a * h) + c2 * h * e1 * e1
            })
            .sum();
        v.max(0.0)
    }
}

/// Jump-martingale bracket of the recovery limit,
/// `σ²(s) = λ∞(1 − ρ_s) + μ∞ ρ_s`.
fn recovery_jump_bracket(li: f64, mi: f64) -> Bracket {
    let a = li + mi;
    let (c0, c1) = if a > 0.0 {
        (2.0 * li * mi / a, li * (li - mi) / a)
    } else {
        (0.0, 0.0)
    };
    Bracket {
        label: "B",
        coeffs: [c0, c1, 0.0],
    }
}

/// Variance of the limit at `t`.
pub fn limit_variance_curve(regime: &Regime, statics: &ChainStatics, t: f64) -> Result<f64> {
    Ok(LimitLaw::new(*regime, statics)?.variance(t))
}

/// `e^{−Λ_t} − e^{−2Λ_t}`, the variance of the limit conditional on the
/// chain path.
pub fn conditional_limit_variance(path: &ChainPath, lambda: &[f64], t: f64) -> Result<f64> {
    let e = (-path.accumulated_intensity(lambda, t)?).exp();
    Ok(e - e * e)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    let mut prev = 0.0;
    for &t in grid {
        if !(t >= prev) || !t.is_finite() {
            return Err(Error::InvalidParameter("grid must be nondecreasing from 0".into()));
        }
        prev = t;
    }
    Ok(())
}

/// Exact Gaussian transitions of the limit process on the grid.
pub fn sample_limit_process(law: &LimitLaw, grid: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let a = law.drift_rate();
    let (mut x, mut prev) = (0.0, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    for &t in grid {
        let h = t - prev;
        if h > 0.0 {
            x = (-a * h).exp() * x + law.transition_variance(prev, h).sqrt() * rng.standard_normal();
        }
        out.push(x);
        prev = t;
    }
    Ok(out)
}

/// Exact transitions of `e^{−Λ_t} ∫₀ᵗ e^{Λ_s} dB_s`, `d⟨B⟩_s = λ_s e^{−Λ_s} ds`,
/// given the chain path.
pub fn sample_conditional_limit(
    path: &ChainPath,
    lambda: &[f64],
    grid: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    check_grid(grid)?;
    let acc = path.accumulated_intensity_at(lambda, grid)?;
    let (mut x, mut prev) = (0.0, 0.0);
    let mut out = Vec::with_capacity(grid.len());
    for &l in &acc {
        let dl = l - prev;
        if dl > 0.0 {
            let var = (-l).exp() * -(-dl).exp_m1();
            x = (-dl).exp() * x + var.sqrt() * rng.standard_normal();
        }
        out.push(x);
        prev = l;
    }
    Ok(out)
}

/// `n^e (N_t − n ρ_t)` at each grid point from observed counts and
/// unscaled accumulated intensities.
pub fn center_and_scale_values(
    regime: &Regime,
    statics: &ChainStatics,
    n: u64,
    grid: &[f64],
    counts: &[u64],
    accumulated: &[f64],
    centering: Centering,
) -> Vec<f64> {
    let nf = n as f64;
    let factor = nf.powf(scaling_exponent(regime));
    let gamma = regime.gamma();
    let scale = if gamma == 0.0 { 1.0 } else { nf.powf(-gamma) };
    grid.iter()
        .zip(counts)
        .zip(accumulated)
        .map(|((&t, &k), &acc)| {
            let rho = match centering {
                Centering::Deterministic => centering_curve(regime, statics, t),
                Centering::Pathwise => -(-scale * acc).exp_m1(),
            };
            factor * (k as f64 - nf * rho)
        })
        .collect()
}

/// Centered and scaled path on the grid.
pub fn center_and_scale(
    path: &CountingPath,
    regime: &Regime,
    statics: &ChainStatics,
    grid: &[f64],
    centering: Centering,
) -> Result<Vec<f64>> {
    let acc = path.chain().accumulated_intensity_at(statics.lambda(), grid)?;
    let counts = path.counts_at(grid);
    Ok(center_and_scale_values(
        regime,
        statics,
        path.n(),
        grid,
        &counts,
        &acc,
        centering,
    ))
}

/// `N̂ = n^{-1/2}(N − nρ)` split as `Ĥ = n^{1/2}(ρⁿ − ρ)` plus
/// `K̂ = n^{-1/2}(N − nρⁿ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub t: f64,
    pub n_hat: f64,
    pub h_hat: f64,
    pub k_hat: f64,
}

impl Decomposition {
    pub fn residual(&self) -> f64 {
        (self.n_hat - self.h_hat - self.k_hat).abs()
    }
}

pub fn decompose(path: &CountingPath, statics: &ChainStatics, grid: &[f64]) -> Result<Vec<Decomposition>> {
    let acc = path.chain().accumulated_intensity_at(statics.lambda(), grid)?;
    let nf = path.n() as f64;
    let root = nf.sqrt();
    Ok(grid
        .iter()
        .zip(&acc)
        .map(|(&t, &l)| {
            let k = path.count_at(t) as f64;
            let rho = -(-statics.lambda_inf() * t).exp_m1();
            let rho_n = -(-l).exp_m1();
            Decomposition {
                t,
                n_hat: (k - nf * rho) / root,
                h_hat: root * (rho_n - rho),
                k_hat: (k - nf * rho_n) / root,
            }
        })
        .collect())
}

/// Writes `time,mean,variance,stddev` for the regime, with `mean` the
/// deterministic centering `ρ_t`.
pub fn write_curve_csv<W: Write>(law: &LimitLaw, statics: &ChainStatics, grid: &[f64], mut w: W) -> io::Result<()> {
    writeln!(w, "time,mean,variance,stddev")?;
    for &t in grid {
        let v = law.variance(t);
        writeln!(w, "{t},{},{v},{}", centering_curve(&law.regime(), statics, t), v.sqrt())?;
    }
    w.flush()
}
