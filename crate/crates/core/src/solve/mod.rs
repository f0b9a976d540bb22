//! Multinomial scoring, the MaxProb argmax, the ExpOc expectation, the
//! relative-entropy maximizer, and the large-sample diagnostics connecting
//! them.
//!
//! MaxProb and ExpOc scan the working set partitioned by the value of the
//! first cell. Partitions are always the same, whether or not they run in
//! parallel, and are merged in ascending order, so results do not depend
//! on the thread count.

mod expoc;
mod maxprob;
mod rem;
mod score;
mod stationarity;
mod wallis;

pub use expoc::{expoc, ExpOcResult};
pub use maxprob::{maxprob, MaxProbResult};
pub use rem::{moment_residual, rem_solve, RemOptions, RemResult};
pub use score::{log_multinomial_prob, Scorer};
pub use stationarity::{asymptotic_gradient, directional_derivative, stationarity_residual};
pub use wallis::{largest_remainder_round, wallis_limit_check, WallisRecord};

use rayon::prelude::*;

use crate::enumerate::{Budget, ScaledSystem, WorkingSetIter};
use crate::error::{Error, Result};
use crate::model::{PriorGenerator, WorkingSetSpec};
use crate::scalar::Real;

/// Log-domain tolerance under which two scores count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub budget: Budget,
    /// Scan partitions on the rayon pool.
    pub parallel: bool,
    pub tie_tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            budget: Budget::default(),
            parallel: true,
            tie_tolerance: TIE_TOLERANCE,
        }
    }
}

impl SolveOptions {
    pub fn serial() -> Self {
        Self {
            parallel: false,
            ..Self::default()
        }
    }
}

fn check_dims<T: Real>(spec: &WorkingSetSpec, q: &PriorGenerator<T>) -> Result<()> {
    if spec.m != q.m() {
        return Err(Error::DimensionMismatch {
            expected: spec.m,
            found: q.m(),
        });
    }
    Ok(())
}

/// Applies `scan` to each first-cell partition and returns the results in
/// ascending partition order.
fn map_partitions<R, F>(system: &ScaledSystem, parallel: bool, scan: F) -> Vec<R>
where
    R: Send,
    F: Fn(WorkingSetIter) -> R + Sync + Send,
{
    let firsts = WorkingSetIter::first_cell_values(system);
    let run = |&first: &u64| scan(WorkingSetIter::with_first_range(system, first, first));
    if parallel {
        firsts.par_iter().map(run).collect()
    } else {
        firsts.iter().map(run).collect()
    }
}
