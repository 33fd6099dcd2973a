use serde::{Deserialize, Serialize};

use super::Generator;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Initial law of the background chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InitialState {
    /// Draw `Z_0` from `π`.
    #[default]
    Stationary,
    /// Start in the given (zero-based) state.
    Fixed(usize),
}

impl InitialState {
    pub fn draw(&self, generator: &Generator, rng: &mut RngStream) -> Result<usize> {
        match *self {
            Self::Fixed(i) if i < generator.dim() => Ok(i),
            Self::Fixed(i) => Err(Error::InvalidParameter(format!(
                "initial state {} outside 1..={}",
                i + 1,
                generator.dim()
            ))),
            Self::Stationary if generator.dim() == 1 => Ok(0),
            Self::Stationary => Ok(rng.weighted_index(generator.stationary())),
        }
    }

    /// Initial distribution as a probability vector.
    pub fn distribution(&self, generator: &Generator) -> Result<Vec<f64>> {
        match *self {
            Self::Stationary => Ok(generator.stationary().to_vec()),
            Self::Fixed(i) if i < generator.dim() => {
                let mut e = vec![0.0; generator.dim()];
                e[i] = 1.0;
                Ok(e)
            }
            Self::Fixed(i) => Err(Error::InvalidParameter(format!(
                "initial state {} outside 1..={}",
                i + 1,
                generator.dim()
            ))),
        }
    }
}

/// Piecewise-constant trajectory of the background chain on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    horizon: f64,
    initial_state: usize,
    jump_times: Vec<f64>,
    states: Vec<usize>,
    speed: f64,
}

impl ChainPath {
    /// Builds a path from its jump record, checking the path invariants.
    pub fn new(
        horizon: f64,
        initial_state: usize,
        jump_times: Vec<f64>,
        states: Vec<usize>,
        speed: f64,
    ) -> Result<Self> {
        if jump_times.len() != states.len() {
            return Err(Error::Dimension(
                "jump times and post-jump states differ in length".into(),
            ));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
        }
        let mut prev_t = 0.0;
        let mut prev_s = initial_state;
        for (&t, &s) in jump_times.iter().zip(&states) {
            if !(t > prev_t) || t > horizon {
                return Err(Error::InvalidParameter(format!(
                    "jump times must be strictly increasing within (0, {horizon}]"
                )));
            }
            if s == prev_s {
                return Err(Error::InvalidParameter("consecutive states must differ".into()));
            }
            prev_t = t;
            prev_s = s;
        }
        Ok(Self {
            horizon,
            initial_state,
            jump_times,
            states,
            speed,
        })
    }

    pub(crate) fn from_parts_unchecked(
        horizon: f64,
        initial_state: usize,
        jump_times: Vec<f64>,
        states: Vec<usize>,
        speed: f64,
    ) -> Self {
        Self {
            horizon,
            initial_state,
            jump_times,
            states,
            speed,
        }
    }

    pub fn constant(state: usize, horizon: f64) -> Self {
        Self::from_parts_unchecked(horizon, state, Vec::new(), Vec::new(), 1.0)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn post_jump_states(&self) -> &[usize] {
        &self.states
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn jump_count(&self) -> usize {
        self.jump_times.len()
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial_state
        } else {
            self.states[k - 1]
        }
    }

    /// `(start, end, state)` for each constant piece, in time order.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let n = self.jump_times.len();
        (0..=n).map(move |k| {
            let start = if k == 0 { 0.0 } else { self.jump_times[k - 1] };
            let end = if k == n { self.horizon } else { self.jump_times[k] };
            let state = if k == 0 { self.initial_state } else { self.states[k - 1] };
            (start, end, state)
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutsideHorizon {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// `Λ_t = ∫₀ᵗ λᵀZ_s ds`, summed exactly over sojourns.
    pub fn accumulated_intensity(&self, lambda: &[f64], t: f64) -> Result<f64> {
        self.check_time(t)?;
        let mut acc = 0.0;
        for (start, end, state) in self.segments() {
            if start >= t {
                break;
            }
            acc += lambda[state] * (end.min(t) - start);
        }
        Ok(acc)
    }

    /// `Λ` at each of the nondecreasing `times`, in one sweep.
    pub fn accumulated_intensity_at(&self, lambda: &[f64], times: &[f64]) -> Result<Vec<f64>> {
        for &t in times {
            self.check_time(t)?;
        }
        let mut out = Vec::with_capacity(times.len());
        let mut segs = self.segments().peekable();
        let mut acc_before = 0.0; // Λ at the start of the current segment
        for &t in times {
            loop {
                let &(start, end, state) = segs.peek().expect("segments cover [0, T]");
                if t <= end || end >= self.horizon {
                    out.push(acc_before + lambda[state] * (t - start).max(0.0));
                    break;
                }
                acc_before += lambda[state] * (end - start);
                segs.next();
            }
        }
        Ok(out)
    }

    /// Time spent in each state during `[0, t]`.
    pub fn occupation_times(&self, dim: usize, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let mut occ = vec![0.0; dim];
        for (start, end, state) in self.segments() {
            if start >= t {
                break;
            }
            occ[state] += end.min(t) - start;
        }
        Ok(occ)
    }
}

/// Exact path of the chain with generator `speed·Q` on `[0, horizon]`.
pub fn sample_chain_path(
    generator: &Generator,
    speed: f64,
    initial: InitialState,
    horizon: f64,
    rng: &mut RngStream,
) -> Result<ChainPath> {
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::InvalidParameter(format!("chain speed must be > 0, got {speed}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be > 0, got {horizon}")));
    }
    let d = generator.dim();
    let mut state = initial.draw(generator, rng)?;
    let start = state;
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    if d > 1 {
        let mut t = 0.0;
        let mut weights = vec![0.0; d];
        loop {
            let exit = speed * generator.exit_rate(state);
            t += rng.exponential(exit);
            if t > horizon {
                break;
            }
            for (j, w) in weights.iter_mut().enumerate() {
                *w = if j == state { 0.0 } else { generator.rate(j, state) };
            }
            state = rng.weighted_index(&weights);
            if let Some(&last) = jump_times.last() {
                if t <= last {
                    t = f64::next_up(last);
                }
            }
            jump_times.push(t);
            states.push(state);
        }
    }
    Ok(ChainPath::from_parts_unchecked(
        horizon, start, jump_times, states, speed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::Convention;

    fn symmetric() -> Generator {
        Generator::from_rows(&[[-1.0, 1.0], [1.0, -1.0]], Convention::Column).unwrap()
    }

    fn reference() -> Generator {
        Generator::from_rows(
            &[[-5.0, 1.0, 5.0], [2.0, -2.0, 5.0], [3.0, 1.0, -10.0]],
            Convention::Column,
        )
        .unwrap()
    }

    #[test]
    fn single_state_path_is_constant() {
        let g = Generator::from_rows(&[[0.0]], Convention::Column).unwrap();
        let mut rng = RngStream::new(1, 0);
        let p = sample_chain_path(&g, 5.0, InitialState::Stationary, 10.0, &mut rng).unwrap();
        assert_eq!(p.jump_count(), 0);
        assert_eq!(p.state_at(7.0), 0);
    }

    #[test]
    fn jump_count_of_symmetric_chain() {
        // 100 seeded runs of length 1000: mean jump count ≈ 1000
        let g = symmetric();
        let mean: f64 = (0..100)
            .map(|r| {
                let mut rng = RngStream::new(42, r);
                sample_chain_path(&g, 1.0, InitialState::Fixed(0), 1000.0, &mut rng)
                    .unwrap()
                    .jump_count() as f64
            })
            .sum::<f64>()
            / 100.0;
        assert!((mean - 1000.0).abs() < 50.0, "{mean}");
    }

    #[test]
    fn occupation_fractions_match_pi() {
        let g = reference();
        for speed in [1.0, 10.0] {
            let horizon = 1e4 / speed;
            let mut rng = RngStream::new(9, 0);
            let p = sample_chain_path(&g, speed, InitialState::Fixed(0), horizon, &mut rng).unwrap();
            let occ = p.occupation_times(3, horizon).unwrap();
            for (o, pi) in occ.iter().zip(g.stationary()) {
                assert!((o / horizon - pi).abs() < 0.01, "{occ:?}");
            }
        }
    }

    #[test]
    fn path_invariants_hold() {
        let g = reference();
        let mut rng = RngStream::new(3, 1);
        let p = sample_chain_path(&g, 50.0, InitialState::Stationary, 3.0, &mut rng).unwrap();
        let checked = ChainPath::new(
            p.horizon(),
            p.initial_state(),
            p.jump_times().to_vec(),
            p.post_jump_states().to_vec(),
            p.speed(),
        );
        assert!(checked.is_ok());
        assert!(p.jump_count() > 100);
    }

    #[test]
    fn accumulated_intensity_closed_forms() {
        let lam = [0.5, 2.0];
        let constant = ChainPath::constant(1, 5.0);
        assert_eq!(constant.accumulated_intensity(&lam, 3.0).unwrap(), 6.0);
        assert_eq!(constant.accumulated_intensity(&[0.0, 0.0], 3.0).unwrap(), 0.0);

        let one_jump = ChainPath::new(5.0, 0, vec![1.5], vec![1], 1.0).unwrap();
        let got = one_jump.accumulated_intensity(&lam, 4.0).unwrap();
        assert!((got - (0.5 * 1.5 + 2.0 * 2.5)).abs() < 1e-15);
        assert_eq!(one_jump.state_at(1.5), 1);
        assert_eq!(one_jump.state_at(1.4999), 0);

        let batch = one_jump
            .accumulated_intensity_at(&lam, &[0.0, 1.0, 1.5, 4.0, 5.0])
            .unwrap();
        for (&t, b) in [0.0, 1.0, 1.5, 4.0, 5.0].iter().zip(&batch) {
            assert!((one_jump.accumulated_intensity(&lam, t).unwrap() - b).abs() < 1e-15);
        }
        assert!(matches!(
            one_jump.accumulated_intensity(&lam, 5.5),
            Err(Error::OutsideHorizon { .. })
        ));
    }

    #[test]
    fn path_constructor_rejects_bad_records() {
        assert!(ChainPath::new(1.0, 0, vec![0.5, 0.4], vec![1, 0], 1.0).is_err());
        assert!(ChainPath::new(1.0, 0, vec![0.5], vec![0], 1.0).is_err());
        assert!(ChainPath::new(1.0, 0, vec![1.5], vec![1], 1.0).is_err());
    }

    #[test]
    fn reproducible_with_same_stream() {
        let g = reference();
        let a = sample_chain_path(&g, 7.0, InitialState::Stationary, 4.0, &mut RngStream::new(5, 2)).unwrap();
        let b = sample_chain_path(&g, 7.0, InitialState::Stationary, 4.0, &mut RngStream::new(5, 2)).unwrap();
        assert_eq!(a, b);
    }
}
