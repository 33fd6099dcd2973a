use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::statics::stationary_distribution;
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// Orientation of an input rate matrix.
///
/// `Column`: entry `(j, i)` is the rate of `i → j`, columns sum to zero.
/// `Row`: entry `(i, j)` is the rate of `i → j`, rows sum to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Column,
    Row,
}

/// Validated, irreducible generator stored in column convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DenseMatrix,
    pi: Vec<f64>,
}

impl Generator {
    pub fn new(q: DenseMatrix, convention: Convention) -> Result<Self> {
        validate_generator(q, convention)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], convention: Convention) -> Result<Self> {
        Self::new(DenseMatrix::from_rows(rows)?, convention)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// The rate matrix in column convention.
    pub fn matrix(&self) -> &DenseMatrix {
        &self.q
    }

    /// Rate of the transition `from → to`.
    #[inline]
    pub fn rate(&self, to: usize, from: usize) -> f64 {
        self.q[(to, from)]
    }

    /// Total rate of leaving `state`, `-q_ii`.
    #[inline]
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.q[(state, state)]
    }

    /// Stationary distribution, computed once at validation.
    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    /// Expected number of jumps per unit time of the stationary chain.
    pub fn mean_jump_rate(&self) -> f64 {
        (0..self.dim()).map(|i| self.pi[i] * self.exit_rate(i)).sum()
    }
}

/// Checks the generator axioms and irreducibility; row-convention input is
/// transposed. Error positions refer to the matrix as supplied.
pub fn validate_generator(q: DenseMatrix, convention: Convention) -> Result<Generator> {
    if !q.is_square() {
        return Err(Error::Dimension(format!(
            "generator must be square, got {}x{}",
            q.rows(),
            q.cols()
        )));
    }
    if q.rows() == 0 {
        return Err(Error::Dimension("generator must have at least one state".into()));
    }
    let q = match convention {
        Convention::Column => q,
        Convention::Row => q.transpose(),
    };
    let flip = |(r, c): (usize, usize)| match convention {
        Convention::Column => (r, c),
        Convention::Row => (c, r),
    };
    let d = q.rows();

    for j in 0..d {
        for i in 0..d {
            let v = q[(i, j)];
            if i != j && v < 0.0 {
                let (row, col) = flip((i, j));
                return Err(Error::NegativeRate { row, col, value: v });
            }
        }
    }
    let tol = 1e-12 * q.max_abs().max(1.0);
    for (j, sum) in q.column_sums().into_iter().enumerate() {
        if sum.abs() > tol {
            return Err(Error::NonzeroSum {
                kind: match convention {
                    Convention::Column => "column",
                    Convention::Row => "row",
                },
                index: j,
                sum,
            });
        }
    }
    check_irreducible(&q)?;
    let pi = stationary_distribution(&q)?;
    Ok(Generator { q, pi })
}

/// Strong connectivity via forward and backward reachability from state 0.
fn check_irreducible(q: &DenseMatrix) -> Result<()> {
    let d = q.rows();
    let reach = |forward: bool| -> Vec<bool> {
        let mut seen = vec![false; d];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for j in 0..d {
                // edge i -> j exists iff q[(j, i)] > 0
                let rate = if forward { q[(j, i)] } else { q[(i, j)] };
                if j != i && rate > 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    };
    if let Some(to) = reach(true).iter().position(|&s| !s) {
        return Err(Error::Reducible { from: 0, to });
    }
    if let Some(from) = reach(false).iter().position(|&s| !s) {
        return Err(Error::Reducible { from, to: 0 });
    }
    Ok(())
}
