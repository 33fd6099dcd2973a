//! Replicated Monte-Carlo experiments and the conformance tests applied to
//! their output.
//!
//! Replicate `r` always draws from `RngStream::new(master_seed, r)` and
//! results are collected in replicate order, so a summary is bitwise
//! identical for any thread count.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainStatics, Generator, OccupationSampler};
use crate::counting::{grid_intervals, simulate_grid_conditional, simulate_on_grid, ProcessSpec};
use crate::error::{Error, Result};
use crate::limits::{center_and_scale_values, sample_limit_process, Centering, LimitLaw, Regime};
use crate::numerics::{chi_square_sf, kolmogorov_pvalue, normal_cdf, RngStream};

/// Theory variances at or below this are treated as zero.
pub const THEORY_FLOOR: f64 = 1e-6;

/// Expected events per path above which `Auto` switches to the
/// grid-conditional engine when it applies.
pub const AUTO_EVENT_LIMIT: f64 = 2e6;

/// Smallest replicate count accepted by the statistical gates.
pub const MIN_REPLICATES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Event-level simulation unless the chain is too fast for it.
    #[default]
    Auto,
    Ssa,
    /// Occupation-time draws per grid interval; no recovery.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolerancePolicy {
    /// Significance level of the per-time KS test.
    pub ks_alpha: f64,
    /// Relative variance error bound; `None` uses [`default_rel_tol`].
    pub rel_tol: Option<f64>,
    /// Allowed `|mean|` in standard errors.
    pub mean_se: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            ks_alpha: 0.01,
            rel_tol: None,
            mean_se: 4.0,
        }
    }
}

impl TolerancePolicy {
    pub fn rel_tol_for(&self, replicates: usize) -> f64 {
        self.rel_tol.unwrap_or_else(|| default_rel_tol(replicates))
    }
}

/// `max(0.10, 3·√(2/(M−1)))`: about three standard errors of a sample
/// variance.
pub fn default_rel_tol(replicates: usize) -> f64 {
    let m = replicates.max(2) as f64;
    (3.0 * (2.0 / (m - 1.0)).sqrt()).max(0.10)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ProcessSpec,
    pub regime: Regime,
    pub generator: Generator,
    pub replicates: usize,
    pub grid: Vec<f64>,
    pub master_seed: u64,
    pub centering: Centering,
    pub tolerance: TolerancePolicy,
    pub engine: Engine,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate(&self.generator)?;
        self.regime.validate()?;
        if self.replicates < MIN_REPLICATES {
            return Err(Error::InvalidParameter(format!(
                "at least {MIN_REPLICATES} replicates required, got {}",
                self.replicates
            )));
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("grid must not be empty".into()));
        }
        let mut prev = 0.0;
        for &t in &self.grid {
            if !(t > prev || (t == 0.0 && prev == 0.0)) || t > self.spec.horizon {
                return Err(Error::InvalidParameter(format!(
                    "grid must be increasing within [0, {}]",
                    self.spec.horizon
                )));
            }
            prev = t;
        }
        if (self.regime.gamma() - self.spec.gamma).abs() > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regime gamma {} differs from the process gamma {}",
                self.regime.gamma(),
                self.spec.gamma
            )));
        }
        Ok(())
    }

    pub fn statics(&self) -> Result<ChainStatics> {
        ChainStatics::new(&self.generator, &self.spec.lambda, Some(&self.spec.mu))
    }

    /// The engine actually used.
    pub fn resolved_engine(&self) -> Engine {
        match self.engine {
            Engine::Auto => {
                let fast = self.spec.expected_events(&self.generator) > AUTO_EVENT_LIMIT;
                let applicable = grid_intervals(&self.grid)
                    .iter()
                    .all(|&h| OccupationSampler::is_applicable(&self.generator, self.spec.chain_speed, h));
                if fast && applicable && !self.spec.has_recovery() {
                    Engine::Grid
                } else {
                    Engine::Ssa
                }
            }
            e => e,
        }
    }
}

/// One grid time of a summary. Test fields are `None` for degenerate
/// samples or a zero theory variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub time: f64,
    pub emp_mean: f64,
    pub emp_var: f64,
    pub var_se: f64,
    pub theory_var: f64,
    pub rel_err: Option<f64>,
    pub ks_stat: Option<f64>,
    pub ks_p: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub rows: Vec<GridRow>,
    pub replicates: usize,
    pub engine: Engine,
    /// `samples[r][k]`: replicate `r` at grid time `k`.
    pub samples: Vec<Vec<f64>>,
}

impl McSummary {
    /// All grid times degenerate.
    pub fn is_degenerate(&self) -> bool {
        self.rows.iter().all(|r| r.degenerate)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[k]).collect()
    }
}

/// Centered and scaled values of every replicate at the grid times.
pub fn run_replicates(config: &ExperimentConfig) -> Result<(Engine, Vec<Vec<f64>>)> {
    config.validate()?;
    let statics = config.statics()?;
    let engine = config.resolved_engine();
    let sampler = match engine {
        Engine::Grid => Some(OccupationSampler::new(
            &config.generator,
            config.spec.chain_speed,
            &config.spec.lambda,
            &grid_intervals(&config.grid),
        )?),
        _ => None,
    };
    let samples = (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(config.master_seed, r);
            let obs = match &sampler {
                Some(s) => simulate_grid_conditional(&config.spec, &config.generator, s, &config.grid, &mut rng)?,
                None => simulate_on_grid(&config.spec, &config.generator, &config.grid, &mut rng)?,
            };
            Ok(center_and_scale_values(
                &config.regime,
                &statics,
                config.spec.n,
                &config.grid,
                &obs.counts,
                &obs.accumulated,
                config.centering,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((engine, samples))
}

/// Runs the experiment and compares each grid time with the limit law.
pub fn run_experiment(config: &ExperimentConfig) -> Result<McSummary> {
    let (engine, samples) = run_replicates(config)?;
    let law = LimitLaw::new(config.regime, &config.statics()?)?;
    let theory: Vec<f64> = config.grid.iter().map(|&t| law.variance(t)).collect();
    let rows = summarize(&config.grid, &samples, &theory);
    Ok(McSummary {
        rows,
        replicates: config.replicates,
        engine,
        samples,
    })
}

/// Draws `replicates` paths of the limit process itself.
pub fn run_limit_replicates(law: &LimitLaw, grid: &[f64], replicates: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| sample_limit_process(law, grid, &mut RngStream::new(seed, r)))
        .collect()
}

/// Per-time moments and tests against `N(0, theory[k])`.
pub fn summarize(grid: &[f64], samples: &[Vec<f64>], theory: &[f64]) -> Vec<GridRow> {
    let m = samples.len();
    let mf = m as f64;
    grid.iter()
        .enumerate()
        .map(|(k, &time)| {
            let mut xs: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let mean = xs.iter().sum::<f64>() / mf;
            let var = if m > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (mf - 1.0)
            } else {
                0.0
            };
            let th = theory[k];
            let se_factor = (2.0 / (mf - 1.0).max(1.0)).sqrt();
            // the theory value keeps the error bar free of sampling noise
            let var_se = if th > 0.0 { th * se_factor } else { var * se_factor };
            let degenerate = var == 0.0 || th <= 0.0;
            let rel_err = (th > THEORY_FLOOR).then(|| (var - th).abs() / th);
            let (ks_stat, ks_p) = if degenerate {
                (None, None)
            } else {
                let d = ks_statistic(&mut xs, th.sqrt());
                (Some(d), Some(kolmogorov_pvalue(d, m)))
            };
            GridRow {
                time,
                emp_mean: mean,
                emp_var: var,
                var_se,
                theory_var: th,
                rel_err,
                ks_stat,
                ks_p,
                degenerate,
            }
        })
        .collect()
}

/// One-sample KS distance between `xs` and `N(0, sd²)`; sorts `xs`.
pub fn ks_statistic(xs: &mut [f64], sd: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x / sd);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateReport {
    pub passed: bool,
    /// No grid time carried information (degenerate samples).
    pub skipped: bool,
    pub lines: Vec<String>,
}

/// Passes iff `|emp − theory|/theory ≤ rel_tol` wherever theory exceeds
/// [`THEORY_FLOOR`] and `|mean| ≤ mean_se·√(emp_var/M)` at every time.
pub fn variance_gate_with(summary: &McSummary, rel_tol: f64, mean_se: f64) -> GateReport {
    if summary.is_degenerate() {
        return GateReport {
            passed: true,
            skipped: true,
            lines: vec!["degenerate distribution at every grid time; variance gate skipped".into()],
        };
    }
    let m = summary.replicates as f64;
    let mut passed = true;
    let mut lines = Vec::new();
    for r in &summary.rows {
        let se = (r.emp_var / m).sqrt();
        let mean_ok = r.emp_mean.abs() <= mean_se * se;
        let var_ok = r.rel_err.is_none_or(|e| e <= rel_tol);
        passed &= mean_ok && var_ok;
        lines.push(format!(
            "t={}: var {:.6} vs {:.6} (rel err {}) {}; mean {:.5} (|mean|/se {:.2}) {}",
            r.time,
            r.emp_var,
            r.theory_var,
            r.rel_err.map_or("n/a".into(), |e| format!("{e:.4}")),
            if var_ok { "ok" } else { "FAIL" },
            r.emp_mean,
            if se > 0.0 { r.emp_mean.abs() / se } else { 0.0 },
            if mean_ok { "ok" } else { "FAIL" },
        ));
    }
    GateReport {
        passed,
        skipped: false,
        lines,
    }
}

pub fn variance_gate(summary: &McSummary, rel_tol: f64) -> GateReport {
    variance_gate_with(summary, rel_tol, TolerancePolicy::default().mean_se)
}

/// Passes iff every non-degenerate KS p-value exceeds `alpha`.
pub fn ks_gate(summary: &McSummary, alpha: f64) -> GateReport {
    let mut passed = true;
    let mut lines = Vec::new();
    for r in &summary.rows {
        match r.ks_p {
            Some(p) => {
                passed &= p > alpha;
                lines.push(format!("t={}: KS p = {p:.4}", r.time));
            }
            None => lines.push(format!("t={}: degenerate, KS skipped", r.time)),
        }
    }
    GateReport {
        passed,
        skipped: summary.is_degenerate(),
        lines,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub bins: usize,
}

/// Goodness of fit of integer samples on `0..=max` to `pmf`, with
/// adjacent values merged until each bin expects at least 20.
pub fn chi_square_gof(samples: &[u64], max: u64, pmf: impl Fn(u64) -> f64) -> ChiSquareTest {
    let m = samples.len() as f64;
    let mut observed = vec![0u64; max as usize + 1];
    for &x in samples {
        observed[x.min(max) as usize] += 1;
    }
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=max {
        o += observed[k as usize] as f64;
        e += m * pmf(k);
        if e >= 20.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += o;
            last.1 += e;
        }
        None => bins.push((o, e)),
    }
    let statistic = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let df = bins.len().saturating_sub(1);
    ChiSquareTest {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        bins: bins.len(),
    }
}

/// Two-sample chi-square on integer samples. Adjacent values are merged
/// until each bin expects at least 20 in the smaller sample.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> ChiSquareTest {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let lo = a.iter().chain(b).copied().min().unwrap_or(0);
    let hi = a.iter().chain(b).copied().max().unwrap_or(0);
    let width = (hi - lo) as usize + 1;
    let (mut ca, mut cb) = (vec![0u64; width], vec![0u64; width]);
    for &x in a {
        ca[(x - lo) as usize] += 1;
    }
    for &x in b {
        cb[(x - lo) as usize] += 1;
    }
    let need = 20.0 * (na + nb) / na.min(nb);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut x, mut y) = (0.0, 0.0);
    for k in 0..width {
        x += ca[k] as f64;
        y += cb[k] as f64;
        if x + y >= need {
            bins.push((x, y));
            x = 0.0;
            y = 0.0;
        }
    }
    match bins.last_mut() {
        Some(last) => {
            last.0 += x;
            last.1 += y;
        }
        None => bins.push((x, y)),
    }
    let (k1, k2) = ((nb / na).sqrt(), (na / nb).sqrt());
    let statistic = bins
        .iter()
        .filter(|(x, y)| x + y > 0.0)
        .map(|(x, y)| (k1 * x - k2 * y).powi(2) / (x + y))
        .sum();
    let df = bins.len().saturating_sub(1);
    ChiSquareTest {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
        bins: bins.len(),
    }
}

/// `time,emp_mean,emp_var,var_se,theory_var,rel_err,ks_stat,ks_p`; fields
/// without a value are left empty.
pub fn write_summary_csv<W: Write>(summary: &McSummary, mut w: W) -> io::Result<()> {
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    writeln!(w, "time,emp_mean,emp_var,var_se,theory_var,rel_err,ks_stat,ks_p")?;
    for r in &summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.time,
            r.emp_mean,
            r.emp_var,
            r.var_se,
            r.theory_var,
            opt(r.rel_err),
            opt(r.ks_stat),
            opt(r.ks_p)
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ChainStatics, Convention, InitialState};
    use crate::numerics::DenseMatrix;
    use statrs::distribution::{Binomial, Discrete};

    fn scalar() -> Generator {
        Generator::new(DenseMatrix::zeros(1, 1), Convention::Column).unwrap()
    }

    fn reference() -> Generator {
        Generator::from_rows(
            &[[-5.0, 1.0, 5.0], [2.0, -2.0, 5.0], [3.0, 1.0, -10.0]],
            Convention::Column,
        )
        .unwrap()
    }

    fn config(spec: ProcessSpec, generator: Generator, regime: Regime, m: usize, grid: Vec<f64>) -> ExperimentConfig {
        ExperimentConfig {
            spec,
            regime,
            generator,
            replicates: m,
            grid,
            master_seed: 2024,
            centering: Centering::Deterministic,
            tolerance: TolerancePolicy::default(),
            engine: Engine::Auto,
        }
    }

    fn row(emp_var: f64, theory_var: f64) -> GridRow {
        GridRow {
            time: 1.0,
            emp_mean: 0.0,
            emp_var,
            var_se: 0.0,
            theory_var,
            rel_err: Some((emp_var - theory_var).abs() / theory_var),
            ks_stat: Some(0.0),
            ks_p: Some(1.0),
            degenerate: false,
        }
    }

    fn summary_of(rows: Vec<GridRow>) -> McSummary {
        McSummary {
            rows,
            replicates: 1000,
            engine: Engine::Ssa,
            samples: Vec::new(),
        }
    }

    #[test]
    fn gate_examples() {
        assert!(variance_gate(&summary_of(vec![row(0.3, 0.3)]), 0.1).passed);
        assert!(!variance_gate(&summary_of(vec![row(0.36, 0.3)]), 0.1).passed);
        assert!((default_rel_tol(2000) - 0.10).abs() < 1e-15);
        assert!((default_rel_tol(100) - 3.0 * (2.0f64 / 99.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_intensity_is_degenerate() {
        let spec = ProcessSpec::new(50, vec![0.0], 2.0);
        let s = run_experiment(&config(spec, scalar(), Regime::NonModulated, 100, vec![1.0, 2.0])).unwrap();
        assert!(s.is_degenerate());
        assert!(s.rows.iter().all(|r| r.ks_p.is_none() && r.emp_var == 0.0));
        let gate = variance_gate(&s, 0.1);
        assert!(gate.skipped);
    }

    #[test]
    fn non_modulated_variance() {
        let spec = ProcessSpec::new(500, vec![1.0], 1.0);
        let s = run_experiment(&config(spec, scalar(), Regime::NonModulated, 2000, vec![1.0])).unwrap();
        let r = &s.rows[0];
        let e = (-1.0f64).exp();
        assert!((r.theory_var - e * (1.0 - e)).abs() < 1e-15);
        assert!((r.emp_var - r.theory_var).abs() < 3.0 * r.var_se, "{r:?}");
    }

    #[test]
    fn deterministic_for_any_thread_count() {
        let spec = ProcessSpec::new(200, vec![0.1, 1.0, 3.0], 2.0).with_speed(50.0);
        let cfg = config(spec, reference(), Regime::JointBeta { beta: 1.0 }, 200, vec![1.0, 2.0]);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_experiment(&cfg)).unwrap();
        let b = three.install(|| run_experiment(&cfg)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn variance_error_bar_shrinks_with_replicates() {
        let spec = ProcessSpec::new(100, vec![1.0], 1.0);
        let a = run_experiment(&config(
            spec.clone(),
            scalar(),
            Regime::NonModulated,
            200,
            vec![0.5, 1.0],
        ))
        .unwrap();
        let b = run_experiment(&config(spec, scalar(), Regime::NonModulated, 400, vec![0.5, 1.0])).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!(y.var_se <= x.var_se);
        }
    }

    #[test]
    fn limit_samples_pass_their_own_tests() {
        let g = reference();
        let st = ChainStatics::new(&g, &[0.1, 1.0, 3.0], None).unwrap();
        let law = LimitLaw::new(Regime::JointBeta { beta: 1.0 }, &st).unwrap();
        let grid = [0.5, 1.0, 2.0, 3.0];
        let theory: Vec<f64> = grid.iter().map(|&t| law.variance(t)).collect();
        let samples = run_limit_replicates(&law, &grid, 100_000, 1).unwrap();
        let summary = McSummary {
            rows: summarize(&grid, &samples, &theory),
            replicates: samples.len(),
            engine: Engine::Ssa,
            samples,
        };
        assert!(ks_gate(&summary, 0.01).passed, "{:?}", ks_gate(&summary, 0.01).lines);
        assert!(variance_gate(&summary, default_rel_tol(100_000)).passed);
    }

    #[test]
    fn ks_p_values_are_calibrated() {
        // under the null, 80 p-values hold about 0.8 below 1%; more than 4 has
        // probability below 0.2%
        let g = reference();
        let st = ChainStatics::new(&g, &[0.1, 1.0, 3.0], None).unwrap();
        let law = LimitLaw::new(Regime::JointBeta { beta: 1.0 }, &st).unwrap();
        let grid = [0.5, 1.0, 2.0, 3.0];
        let theory: Vec<f64> = grid.iter().map(|&t| law.variance(t)).collect();
        let mut small = 0;
        for seed in 100..120 {
            let samples = run_limit_replicates(&law, &grid, 20_000, seed).unwrap();
            small += summarize(&grid, &samples, &theory)
                .iter()
                .filter(|r| r.ks_p.unwrap() < 0.01)
                .count();
        }
        assert!(small <= 4, "{small} of 80 p-values below 0.01");
    }

    #[test]
    fn ks_rejects_wrong_scale() {
        let mut rng = RngStream::new(1, 1);
        let mut xs: Vec<f64> = (0..5000).map(|_| 1.2 * rng.standard_normal()).collect();
        let d = ks_statistic(&mut xs, 1.0);
        assert!(kolmogorov_pvalue(d, 5000) < 1e-4);
    }

    #[test]
    fn chi_square_accepts_exact_binomial() {
        let mut rng = RngStream::new(4, 4);
        let law = Binomial::new(0.3, 60).unwrap();
        let xs: Vec<u64> = (0..20_000).map(|_| rng.binomial(60, 0.3)).collect();
        let t = chi_square_gof(&xs, 60, |k| law.pmf(k));
        assert!(t.p_value > 0.001, "{t:?}");
        assert!(t.bins > 10);
        let shifted = Binomial::new(0.32, 60).unwrap();
        assert!(chi_square_gof(&xs, 60, |k| shifted.pmf(k)).p_value < 1e-6);
    }

    #[test]
    fn two_sample_chi_square() {
        let mut rng = RngStream::new(5, 5);
        let a: Vec<u64> = (0..10_000).map(|_| rng.binomial(100, 0.4)).collect();
        let b: Vec<u64> = (0..10_000).map(|_| rng.binomial(100, 0.4)).collect();
        let c: Vec<u64> = (0..10_000).map(|_| rng.binomial(100, 0.43)).collect();
        assert!(chi_square_two_sample(&a, &b).p_value > 0.001);
        assert!(chi_square_two_sample(&a, &c).p_value < 1e-6);
        // identical samples give a zero statistic
        assert_eq!(chi_square_two_sample(&a, &a).statistic, 0.0);
    }

    #[test]
    fn grid_engine_selected_for_fast_chains() {
        let spec = ProcessSpec::new(10_000, vec![0.1, 1.0, 3.0], 2.0).with_beta(2.0);
        let cfg = config(spec, reference(), Regime::JointBeta { beta: 2.0 }, 100, vec![1.0, 2.0]);
        assert_eq!(cfg.resolved_engine(), Engine::Grid);
        let slow = ProcessSpec::new(1000, vec![0.1, 1.0, 3.0], 2.0).with_speed(10.0);
        let cfg = config(slow, reference(), Regime::JointBeta { beta: 1.0 }, 100, vec![1.0, 2.0]);
        assert_eq!(cfg.resolved_engine(), Engine::Ssa);
    }

    #[test]
    fn config_validation() {
        let spec = ProcessSpec::new(100, vec![1.0], 1.0);
        assert!(config(spec.clone(), scalar(), Regime::NonModulated, 50, vec![1.0])
            .validate()
            .is_err());
        assert!(config(spec.clone(), scalar(), Regime::NonModulated, 100, vec![])
            .validate()
            .is_err());
        assert!(config(spec.clone(), scalar(), Regime::NonModulated, 100, vec![2.0])
            .validate()
            .is_err());
        assert!(config(spec, scalar(), Regime::Gamma { gamma: 0.5 }, 100, vec![1.0])
            .validate()
            .is_err());
        let fixed = ProcessSpec::new(100, vec![1.0], 1.0).with_initial(InitialState::Fixed(0));
        assert!(config(fixed, scalar(), Regime::NonModulated, 100, vec![0.0, 1.0])
            .validate()
            .is_ok());
    }

    #[test]
    fn summary_csv() {
        let mut s = summary_of(vec![row(0.25, 0.2)]);
        s.rows[0].ks_p = None;
        let mut buf = Vec::new();
        write_summary_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "time,emp_mean,emp_var,var_se,theory_var,rel_err,ks_stat,ks_p"
        );
        assert!(text.lines().nth(1).unwrap().ends_with(",0,"));
    }
}
