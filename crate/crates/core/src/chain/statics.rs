//! Stationary law, fundamental and deviation matrices, and the derived
//! rate constants used by the limit laws.

use super::Generator;
use crate::error::{Error, Result};
use crate::numerics::{inverse, solve_linear, DenseMatrix};

/// Negative quadratic forms above this (times the scale of `λ`) are rounding.
const VARIANCE_CLIP: f64 = 1e-12;

/// Solves `Qπ = 0, 𝟙ᵀπ = 1` by replacing the last balance equation with
/// the normalisation row.
pub(crate) fn stationary_distribution(q: &DenseMatrix) -> Result<Vec<f64>> {
    let d = q.rows();
    if d == 1 {
        return Ok(vec![1.0]);
    }
    let mut a = q.clone();
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; d];
    b[d - 1] = 1.0;
    let mut pi = solve_linear(&a, &b)?;
    // rounding can leave -0.0 or 1e-17 negatives on tiny components
    for p in &mut pi {
        if *p < 0.0 && *p > -1e-14 {
            *p = 0.0;
        }
    }
    Ok(pi)
}

/// `π` of a validated generator.
pub fn stationary(generator: &Generator) -> Vec<f64> {
    generator.stationary().to_vec()
}

/// Fundamental matrix `F = (Π − Q)^{-1}` and deviation matrix `D = F − Π`.
pub fn deviation_matrix(generator: &Generator) -> Result<(DenseMatrix, DenseMatrix)> {
    let pi = generator.stationary();
    let ergodic = DenseMatrix::outer(pi, &vec![1.0; pi.len()]);
    let f = inverse(&ergodic.sub(generator.matrix())?)?;
    let d = f.sub(&ergodic)?;
    Ok((f, d))
}

/// `λᵀ (diag{π} Dᵀ + D diag{π}) λ`, clipped at zero for rounding noise.
pub fn ergodic_variance(lambda: &[f64], statics: &ChainStatics) -> Result<f64> {
    statics.quadratic_variance(lambda)
}

/// Everything the limit theorems need from the background chain and the
/// per-state rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStatics {
    pi: Vec<f64>,
    ergodic: DenseMatrix,
    fundamental: DenseMatrix,
    deviation: DenseMatrix,
    /// `diag{π} Dᵀ + D diag{π}`
    covariance: DenseMatrix,
    lambda: Vec<f64>,
    mu: Vec<f64>,
    lambda_inf: f64,
    mu_inf: f64,
    v: f64,
}

impl ChainStatics {
    pub fn new(generator: &Generator, lambda: &[f64], mu: Option<&[f64]>) -> Result<Self> {
        let d = generator.dim();
        let mu = mu.map_or_else(|| vec![0.0; d], <[f64]>::to_vec);
        check_rates("lambda", lambda, d)?;
        check_rates("mu", &mu, d)?;
        let pi = generator.stationary().to_vec();
        let ergodic = DenseMatrix::outer(&pi, &vec![1.0; d]);
        let (fundamental, deviation) = deviation_matrix(generator)?;
        let diag_pi = DenseMatrix::diag(&pi);
        let covariance = diag_pi
            .matmul(&deviation.transpose())?
            .add(&deviation.matmul(&diag_pi)?)?;
        let dot = |x: &[f64]| x.iter().zip(&pi).map(|(a, b)| a * b).sum::<f64>();
        let mut statics = Self {
            lambda_inf: dot(lambda),
            mu_inf: dot(&mu),
            pi,
            ergodic,
            fundamental,
            deviation,
            covariance,
            lambda: lambda.to_vec(),
            mu,
            v: 0.0,
        };
        statics.v = statics.quadratic_variance(lambda)?;
        Ok(statics)
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// `Π = π𝟙ᵀ`.
    pub fn ergodic(&self) -> &DenseMatrix {
        &self.ergodic
    }

    pub fn fundamental(&self) -> &DenseMatrix {
        &self.fundamental
    }

    pub fn deviation(&self) -> &DenseMatrix {
        &self.deviation
    }

    /// `diag{π} Dᵀ + D diag{π}`, nonnegative definite.
    pub fn covariance(&self) -> &DenseMatrix {
        &self.covariance
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `λ∞ = λᵀπ`.
    pub fn lambda_inf(&self) -> f64 {
        self.lambda_inf
    }

    /// `μ∞ = μᵀπ`.
    pub fn mu_inf(&self) -> f64 {
        self.mu_inf
    }

    /// Ergodic variance `V` of the default rates.
    pub fn v(&self) -> f64 {
        self.v
    }

    /// `xᵀ (diag{π} Dᵀ + D diag{π}) y`.
    pub fn cross_variance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.covariance.bilinear(x, y)
    }

    /// `xᵀ (diag{π} Dᵀ + D diag{π}) x`, clipped to zero within rounding.
    pub fn quadratic_variance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "rate vector of length {} for a {}-state chain",
                x.len(),
                self.dim()
            )));
        }
        let v = self.covariance.bilinear(x, x)?;
        let scale = x.iter().map(|a| a * a).sum::<f64>().max(1.0);
        if v >= 0.0 {
            Ok(v)
        } else if v >= -VARIANCE_CLIP * scale {
            Ok(0.0)
        } else {
            Err(Error::NegativeVariance(v))
        }
    }

    /// Residuals of the defining identities, measured in max-abs norm.
    pub fn residuals(&self, generator: &Generator) -> Result<IdentityResiduals> {
        let q = generator.matrix();
        let d = self.dim();
        let target = self.ergodic.sub(&DenseMatrix::identity(d))?;
        let ones = vec![1.0; d];
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Ok(IdentityResiduals {
            q_pi: max_abs(&q.matvec(&self.pi)?),
            pi_sum: (self.pi.iter().sum::<f64>() - 1.0).abs(),
            qf: q.matmul(&self.fundamental)?.sub(&target)?.max_abs(),
            fq: self.fundamental.matmul(q)?.sub(&target)?.max_abs(),
            one_f: max_abs(
                &self
                    .fundamental
                    .vecmat(&ones)?
                    .iter()
                    .map(|x| x - 1.0)
                    .collect::<Vec<_>>(),
            ),
            one_d: max_abs(&self.deviation.vecmat(&ones)?),
            d_pi: max_abs(&self.deviation.matvec(&self.pi)?),
        })
    }
}

fn check_rates(name: &str, rates: &[f64], d: usize) -> Result<()> {
    if rates.len() != d {
        return Err(Error::Dimension(format!(
            "{name} has {} entries for a {d}-state chain",
            rates.len()
        )));
    }
    if let Some(x) = rates.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "{name} entries must be finite and >= 0, got {x}"
        )));
    }
    Ok(())
}

/// Residuals of `Qπ = 0`, `𝟙ᵀπ = 1`, `QF = FQ = Π − I`, `𝟙ᵀF = 𝟙ᵀ`,
/// `𝟙ᵀD = 0`, `Dπ = 0`.
///
/// With columns summing to zero the unit vector is a left eigenvector of
/// `F`, so the normalisation identity is stated for `𝟙ᵀF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub q_pi: f64,
    pub pi_sum: f64,
    pub qf: f64,
    pub fq: f64,
    pub one_f: f64,
    pub one_d: f64,
    pub d_pi: f64,
}

impl IdentityResiduals {
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("Q*pi", self.q_pi),
            ("1'pi-1", self.pi_sum),
            ("QF-(Pi-I)", self.qf),
            ("FQ-(Pi-I)", self.fq),
            ("1'F-1'", self.one_f),
            ("1'D", self.one_d),
            ("D*pi", self.d_pi),
        ]
    }

    pub fn max(&self) -> f64 {
        self.named().iter().fold(0.0, |m, (_, v)| m.max(*v))
    }
}
