//! Exact simulation of the Markov-modulated binomial counting process and
//! its recovery variant, plus the oracles used to check it.
//!
//! The primary engine is an event-driven simulation of the joint Markov
//! process `(Z, N)`. In joint state `(i, k)` the competing rates are
//!
//! ```text
//! chain move i → j     speed · q_ji
//! default              n^{-γ} λ_i (n − k)
//! recovery             μ_i k
//! ```
//!
//! For very fast chains without recovery, [`simulate_grid_conditional`]
//! draws `(Z, Λ)` over each grid interval with an [`OccupationSampler`] and
//! the count increment from its conditional binomial law.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::chain::{ChainPath, Generator, InitialState, OccupationSampler};
use crate::error::{Error, Result};
use crate::numerics::{matrix_exponential_action, DenseMatrix, RngStream};

/// Parameters of one counting process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    /// Number of obligors.
    pub n: u64,
    /// Per-state default intensity.
    pub lambda: Vec<f64>,
    /// Per-state recovery intensity; all zeros without recovery.
    pub mu: Vec<f64>,
    /// Multiplier applied to the generator (`α`, or `n^β`).
    pub chain_speed: f64,
    /// Intensities are scaled by `n^{-γ}`.
    pub gamma: f64,
    pub horizon: f64,
    pub initial: InitialState,
}

impl ProcessSpec {
    /// Spec without recovery or intensity scaling, chain at speed 1 started
    /// from `π`.
    pub fn new(n: u64, lambda: Vec<f64>, horizon: f64) -> Self {
        let d = lambda.len();
        Self {
            n,
            lambda,
            mu: vec![0.0; d],
            chain_speed: 1.0,
            gamma: 0.0,
            horizon,
            initial: InitialState::Stationary,
        }
    }

    pub fn with_mu(mut self, mu: Vec<f64>) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_speed(mut self, speed: f64) -> Self {
        self.chain_speed = speed;
        self
    }

    /// Chain speed `n^β`.
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.chain_speed = (self.n as f64).powf(beta);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn has_recovery(&self) -> bool {
        self.mu.iter().any(|&m| m != 0.0)
    }

    /// `n^{-γ}`.
    pub fn intensity_scale(&self) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            (self.n as f64).powf(-self.gamma)
        }
    }

    pub fn validate(&self, generator: &Generator) -> Result<()> {
        let d = generator.dim();
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n < 1 {
            return bad("n must be >= 1".into());
        }
        if self.lambda.len() != d || self.mu.len() != d {
            return Err(Error::Dimension(format!(
                "rate vectors of length {} and {} for a {d}-state chain",
                self.lambda.len(),
                self.mu.len()
            )));
        }
        for (name, v) in [("lambda", &self.lambda), ("mu", &self.mu)] {
            if let Some(x) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return bad(format!("{name} entries must be finite and >= 0, got {x}"));
            }
        }
        if !(self.chain_speed > 0.0) || !self.chain_speed.is_finite() {
            return bad(format!("chain speed must be > 0, got {}", self.chain_speed));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be > 0, got {}", self.horizon));
        }
        if self.gamma > 0.0 && self.has_recovery() {
            return Err(Error::UnsupportedRegime(
                "intensity scaling (gamma > 0) has no recovery variant".into(),
            ));
        }
        if let InitialState::Fixed(i) = self.initial {
            if i >= d {
                return bad(format!("initial state {} outside 1..={d}", i + 1));
            }
        }
        Ok(())
    }

    /// Expected number of events per path, dominated by chain jumps for
    /// fast chains.
    pub fn expected_events(&self, generator: &Generator) -> f64 {
        let mu_max = self.mu.iter().cloned().fold(0.0, f64::max);
        generator.mean_jump_rate() * self.chain_speed * self.horizon + self.n as f64 * (1.0 + mu_max * self.horizon)
    }
}

/// One simulated path: event record of `N` together with the chain path.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingPath {
    n: u64,
    event_times: Vec<f64>,
    /// `N` just after each event.
    counts: Vec<u64>,
    chain: ChainPath,
}

impl CountingPath {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn event_times(&self) -> &[f64] {
        &self.event_times
    }

    /// `+1` for a default, `−1` for a recovery.
    pub fn event_marks(&self) -> Vec<i8> {
        let mut prev = 0u64;
        self.counts
            .iter()
            .map(|&c| {
                let mark = if c > prev { 1 } else { -1 };
                prev = c;
                mark
            })
            .collect()
    }

    pub fn chain(&self) -> &ChainPath {
        &self.chain
    }

    pub fn horizon(&self) -> f64 {
        self.chain.horizon()
    }

    /// `N_t` (right-continuous).
    pub fn count_at(&self, t: f64) -> u64 {
        let k = self.event_times.partition_point(|&s| s <= t);
        if k == 0 {
            0
        } else {
            self.counts[k - 1]
        }
    }

    pub fn counts_at(&self, times: &[f64]) -> Vec<u64> {
        times.iter().map(|&t| self.count_at(t)).collect()
    }
}

/// `N` and the unscaled accumulated intensity `Λ` at grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub counts: Vec<u64>,
    pub accumulated: Vec<f64>,
}

trait Observer {
    /// The joint state is `(state, count)` on `[from, to)`.
    fn hold(&mut self, from: f64, to: f64, state: usize, count: u64);
    fn chain_jump(&mut self, _t: f64, _to: usize) {}
    fn count_jump(&mut self, _t: f64, _count: u64) {}
}

struct PathRecorder {
    jump_times: Vec<f64>,
    states: Vec<usize>,
    event_times: Vec<f64>,
    counts: Vec<u64>,
}

impl Observer for PathRecorder {
    fn hold(&mut self, _: f64, _: f64, _: usize, _: u64) {}

    fn chain_jump(&mut self, t: f64, to: usize) {
        self.jump_times.push(t);
        self.states.push(to);
    }

    fn count_jump(&mut self, t: f64, count: u64) {
        self.event_times.push(t);
        self.counts.push(count);
    }
}

struct GridRecorder<'a> {
    grid: &'a [f64],
    lambda: &'a [f64],
    next: usize,
    acc: f64,
    out: GridSample,
}

impl Observer for GridRecorder<'_> {
    fn hold(&mut self, from: f64, to: f64, state: usize, count: u64) {
        let rate = self.lambda[state];
        while self.next < self.grid.len() && self.grid[self.next] < to {
            let g = self.grid[self.next];
            self.out.counts.push(count);
            self.out.accumulated.push(self.acc + rate * (g - from));
            self.next += 1;
        }
        self.acc += rate * (to - from);
    }
}

/// Runs the joint event-driven simulation; returns the initial state.
fn run_ssa<O: Observer>(spec: &ProcessSpec, generator: &Generator, rng: &mut RngStream, obs: &mut O) -> Result<usize> {
    spec.validate(generator)?;
    let d = generator.dim();
    let n = spec.n;
    let speed = spec.chain_speed;
    let horizon = spec.horizon;
    let scale = spec.intensity_scale();
    let start = spec.initial.draw(generator, rng)?;
    let (mut state, mut k, mut t) = (start, 0u64, 0.0f64);
    loop {
        let chain_rate = if d > 1 { speed * generator.exit_rate(state) } else { 0.0 };
        let default_rate = scale * spec.lambda[state] * (n - k) as f64;
        let recovery_rate = spec.mu[state] * k as f64;
        let total = chain_rate + default_rate + recovery_rate;
        if !(total > 0.0) {
            break;
        }
        let mut next = t + rng.exponential(total);
        if next > horizon {
            break;
        }
        if next <= t {
            next = t.next_up();
        }
        obs.hold(t, next, state, k);
        let u = rng.uniform() * total;
        if u < chain_rate {
            // reuse the uniform: u / speed is uniform on [0, exit rate)
            let mut x = u / speed;
            let mut to = state;
            for j in (0..d).filter(|&j| j != state) {
                let r = generator.rate(j, state);
                if r > 0.0 {
                    to = j;
                    if x < r {
                        break;
                    }
                    x -= r;
                }
            }
            state = to;
            obs.chain_jump(next, to);
        } else if u < chain_rate + default_rate {
            k += 1;
            obs.count_jump(next, k);
        } else {
            k -= 1;
            obs.count_jump(next, k);
        }
        t = next;
    }
    obs.hold(t, f64::INFINITY, state, k);
    Ok(start)
}

/// Exact joint simulation of `(Z, N)` on `[0, T]`.
pub fn simulate_counting(spec: &ProcessSpec, generator: &Generator, rng: &mut RngStream) -> Result<CountingPath> {
    let mut rec = PathRecorder {
        jump_times: Vec::new(),
        states: Vec::new(),
        event_times: Vec::new(),
        counts: Vec::new(),
    };
    let start = run_ssa(spec, generator, rng, &mut rec)?;
    let chain = ChainPath::new(spec.horizon, start, rec.jump_times, rec.states, spec.chain_speed)?;
    Ok(CountingPath {
        n: spec.n,
        event_times: rec.event_times,
        counts: rec.counts,
        chain,
    })
}

fn check_grid(grid: &[f64], horizon: f64) -> Result<()> {
    let mut prev = 0.0;
    for &g in grid {
        if !(g >= prev) || g > horizon {
            return Err(Error::InvalidParameter(format!(
                "grid must be nondecreasing within [0, {horizon}]"
            )));
        }
        prev = g;
    }
    Ok(())
}

/// Same law as [`simulate_counting`], but only `N` and `Λ` at the grid
/// times are kept.
pub fn simulate_on_grid(
    spec: &ProcessSpec,
    generator: &Generator,
    grid: &[f64],
    rng: &mut RngStream,
) -> Result<GridSample> {
    check_grid(grid, spec.horizon)?;
    let mut rec = GridRecorder {
        grid,
        lambda: &spec.lambda,
        next: 0,
        acc: 0.0,
        out: GridSample {
            counts: Vec::with_capacity(grid.len()),
            accumulated: Vec::with_capacity(grid.len()),
        },
    };
    run_ssa(spec, generator, rng, &mut rec)?;
    Ok(rec.out)
}

/// Distinct positive gaps of `0 = t_0 ≤ t_1 ≤ …`, for building an
/// [`OccupationSampler`].
pub fn grid_intervals(grid: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut prev = 0.0;
    for &g in grid {
        let h = g - prev;
        if h > 0.0 && !out.contains(&h) {
            out.push(h);
        }
        prev = g;
    }
    out
}

/// Grid-conditional engine: `(Z, Λ)` over each grid interval from the
/// occupation sampler, then `ΔN ~ Bin(n − N, 1 − exp(−n^{-γ} ΔΛ))`.
pub fn simulate_grid_conditional(
    spec: &ProcessSpec,
    generator: &Generator,
    sampler: &OccupationSampler,
    grid: &[f64],
    rng: &mut RngStream,
) -> Result<GridSample> {
    spec.validate(generator)?;
    check_grid(grid, spec.horizon)?;
    if spec.has_recovery() {
        return Err(Error::UnsupportedRegime(
            "the grid-conditional engine has no recovery variant".into(),
        ));
    }
    if sampler.speed() != spec.chain_speed {
        return Err(Error::InvalidParameter(
            "occupation sampler built for a different chain speed".into(),
        ));
    }
    let scale = spec.intensity_scale();
    let mut state = spec.initial.draw(generator, rng)?;
    let (mut count, mut acc, mut prev) = (0u64, 0.0, 0.0);
    let mut out = GridSample {
        counts: Vec::with_capacity(grid.len()),
        accumulated: Vec::with_capacity(grid.len()),
    };
    for &g in grid {
        let h = g - prev;
        if h > 0.0 {
            let (to, inc) = sampler.sample(h, state, rng)?;
            let p = -(-scale * inc).exp_m1();
            count += rng.binomial(spec.n - count, p);
            acc += inc;
            state = to;
        }
        out.counts.push(count);
        out.accumulated.push(acc);
        prev = g;
    }
    Ok(out)
}

/// Draws `Bin(n, 1 − exp(−n^{-γ} Λ_t))` given the chain path.
pub fn conditional_binomial_sample(spec: &ProcessSpec, path: &ChainPath, t: f64, rng: &mut RngStream) -> Result<u64> {
    if spec.has_recovery() {
        return Err(Error::UnsupportedRegime(
            "the conditional binomial law holds only without recovery".into(),
        ));
    }
    let big_lambda = path.accumulated_intensity(&spec.lambda, t)?;
    let p = -(-spec.intensity_scale() * big_lambda).exp_m1();
    Ok(rng.binomial(spec.n, p))
}

/// `E[N_t]/n = 1 − 𝟙ᵀ exp((sQ − n^{-γ} diag λ) t) z₀`.
pub fn expected_fraction_semianalytic(
    generator: &Generator,
    spec: &ProcessSpec,
    initial: InitialState,
    t: f64,
) -> Result<f64> {
    spec.validate(generator)?;
    if spec.has_recovery() {
        return Err(Error::UnsupportedRegime(
            "the semi-analytic mean holds only without recovery".into(),
        ));
    }
    let z0 = initial.distribution(generator)?;
    let scale = spec.intensity_scale();
    let lambda: Vec<f64> = spec.lambda.iter().map(|l| scale * l).collect();
    let a = generator
        .matrix()
        .scaled(spec.chain_speed)
        .sub(&DenseMatrix::diag(&lambda))?;
    let survival: f64 = matrix_exponential_action(&a, t, &z0)?.iter().sum();
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

/// `ρ_t = λ∞/(λ∞+μ∞) (1 − e^{−(λ∞+μ∞)t})`.
pub fn recovery_mean_ode(lambda_inf: f64, mu_inf: f64, t: f64) -> f64 {
    let a = lambda_inf + mu_inf;
    if a <= 0.0 {
        return 0.0;
    }
    lambda_inf / a * -(-a * t).exp_m1()
}

/// Writes `time,N,chain_state,intensity` rows: the initial state, one row
/// per event (chain move, default or recovery) and the terminal state.
/// Chain states are one-based.
pub fn write_path_csv<W: Write>(path: &CountingPath, lambda: &[f64], mut w: W) -> io::Result<()> {
    let chain = path.chain();
    writeln!(w, "time,N,chain_state,intensity")?;
    let mut state = chain.initial_state();
    let mut count = 0u64;
    writeln!(w, "0,0,{},{}", state + 1, lambda[state])?;
    let (jt, js) = (chain.jump_times(), chain.post_jump_states());
    let (et, ec) = (&path.event_times, &path.counts);
    let (mut a, mut b) = (0, 0);
    while a < jt.len() || b < et.len() {
        let t = if b == et.len() || (a < jt.len() && jt[a] < et[b]) {
            state = js[a];
            a += 1;
            jt[a - 1]
        } else {
            count = ec[b];
            b += 1;
            et[b - 1]
        };
        writeln!(w, "{t},{count},{},{}", state + 1, lambda[state])?;
    }
    writeln!(w, "{},{count},{},{}", chain.horizon(), state + 1, lambda[state])?;
    w.flush()
}
