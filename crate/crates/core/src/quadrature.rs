//! Composite trapezoid integration on uniform grids, with nested doubling.

use rayon::prelude::*;

use crate::dispersion::WavenumberGrid;
use crate::error::{Error, Result};

/// Composite trapezoid rule for samples with uniform `spacing`.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => spacing * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Settings for [`integrate_until_converged`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    /// Points in the first grid; at least 3.
    pub initial_count: usize,
    /// Relative change between successive doublings accepted as converged.
    pub rel_tol: f64,
    /// Largest grid tried; refinement stops there with a warning.
    pub max_count: usize,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            initial_count: 257,
            rel_tol: 1e-3,
            max_count: (1 << 20) + 1,
        }
    }
}

impl Refinement {
    pub fn validate(&self) -> Result<()> {
        if self.initial_count < 3 {
            return Err(Error::Config(format!(
                "quadrature needs at least 3 points, got {}",
                self.initial_count
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!(
                "quadrature tolerance must lie in (0, 1), got {}",
                self.rel_tol
            )));
        }
        if self.max_count < self.initial_count {
            return Err(Error::Config(
                "quadrature point cap is below the initial count".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a refinement run.
#[derive(Debug, Clone, PartialEq)]
pub struct Converged {
    /// One integral per component of the integrand.
    pub values: Vec<f64>,
    /// Points in the final grid.
    pub count: usize,
    /// Largest relative change seen at the last doubling.
    pub last_change: f64,
    /// False when the point cap was hit first.
    pub converged: bool,
}

fn relative_change(old: &[f64], new: &[f64]) -> f64 {
    let scale = new.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // components far below the largest one are judged against it
    let floor = 1e-12 * scale;
    old.iter()
        .zip(new)
        .map(|(o, n)| {
            let d = (n - o).abs();
            if d == 0.0 {
                0.0
            } else {
                d / n.abs().max(floor)
            }
        })
        .fold(0.0, f64::max)
}

/// Integrates a vector-valued function over `[a, b]` by trapezoid rule,
/// doubling the point density (reusing earlier samples) until every
/// component changes by less than `rel_tol` between doublings.
///
/// Samples are evaluated in parallel but summed in grid order, so the result
/// does not depend on the thread count.
pub fn integrate_until_converged<F>(
    f: F,
    a: f64,
    b: f64,
    settings: &Refinement,
) -> Result<Converged>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    settings.validate()?;
    let mut grid = WavenumberGrid::new(a, b, settings.initial_count)?;
    let mut samples: Vec<Vec<f64>> = grid
        .values
        .par_iter()
        .map(|&k| f(k))
        .collect::<Result<_>>()?;
    let width = samples.first().map_or(0, Vec::len);
    let integrate = |s: &[Vec<f64>], spacing: f64| -> Vec<f64> {
        (0..width)
            .map(|c| trapezoid(&s.iter().map(|v| v[c]).collect::<Vec<_>>(), spacing))
            .collect()
    };
    let mut values = integrate(&samples, grid.spacing());
    let mut last_change = f64::INFINITY;
    loop {
        let next_count = 2 * grid.count() - 1;
        if next_count > settings.max_count {
            log::warn!(
                "trapezoid refinement stopped at {} points without reaching relative change {}",
                grid.count(),
                settings.rel_tol
            );
            return Ok(Converged {
                values,
                count: grid.count(),
                last_change,
                converged: false,
            });
        }
        let finer = grid.refined();
        let fresh: Vec<Vec<f64>> = finer
            .values
            .par_iter()
            .skip(1)
            .step_by(2)
            .map(|&k| f(k))
            .collect::<Result<_>>()?;
        let mut merged = Vec::with_capacity(finer.count());
        let mut fresh_iter = fresh.into_iter();
        for (i, old) in samples.into_iter().enumerate() {
            if i > 0 {
                merged.push(fresh_iter.next().expect("one new sample per interval"));
            }
            merged.push(old);
        }
        let refined = integrate(&merged, finer.spacing());
        last_change = relative_change(&values, &refined);
        values = refined;
        samples = merged;
        grid = finer;
        if last_change <= settings.rel_tol {
            return Ok(Converged {
                values,
                count: grid.count(),
                last_change,
                converged: true,
            });
        }
    }
}
