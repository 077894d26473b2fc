//! Sequential-measurement simulator used as an independent check on
//! history probabilities.
//!
//! The state is carried forward in the Schrödinger picture with the
//! schedule's step unitaries, and at every slot the untransformed outcome
//! projector is applied followed by renormalisation (Lüders rule). Nothing
//! here touches Heisenberg-lifted projectors or chain operators.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::history::{History, HistoryFamily, ZERO_THRESHOLD};
use crate::operator::{ComplexMatrix, DensityState};
use crate::scalar::{lit, Real};
use crate::spectral::Outcome;

/// Step probabilities at or below this value end the run with probability 0.
pub const STEP_ZERO: f64 = 1e-14;

/// One measurement in a sequential run.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementStep<T: Real> {
    pub slot: usize,
    pub outcome: Outcome,
    /// Probability of this outcome given the earlier ones.
    pub probability: T,
    /// Conditioned state right after the measurement; `None` when the step
    /// probability vanished.
    pub post_state: Option<DensityState<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementTrace<T: Real> {
    pub steps: Vec<MeasurementStep<T>>,
    pub cumulative: T,
    /// Slot at which a zero-probability outcome stopped the run.
    pub truncated_at: Option<usize>,
}

type Mat<T> = DMatrix<Complex<T>>;

fn evolve<T: Real>(rho: &Mat<T>, u: &Mat<T>) -> Mat<T> {
    u * rho * u.adjoint()
}

fn evolve_back<T: Real>(rho: &Mat<T>, u: &Mat<T>) -> Mat<T> {
    u.adjoint() * rho * u
}

/// State at `slot`, propagated from the reference slot step by step.
fn state_at<T: Real>(f: &HistoryFamily<T>, slot: usize) -> Mat<T> {
    let schedule = f.schedule();
    let reference = schedule.reference();
    let mut rho = f.state().matrix().as_dmatrix().clone();
    if slot >= reference {
        for k in reference..slot {
            if let Some(u) = schedule.step(k) {
                rho = evolve(&rho, u.as_dmatrix());
            }
        }
    } else {
        for k in (slot..reference).rev() {
            if let Some(u) = schedule.step(k) {
                rho = evolve_back(&rho, u.as_dmatrix());
            }
        }
    }
    rho
}

fn outcome_matrix<T: Real>(f: &HistoryFamily<T>, slot: usize, o: &Outcome) -> Mat<T> {
    let dim = f.dim();
    let mut p = Mat::<T>::zeros(dim, dim);
    for (label, proj) in f.resolution(slot).entries() {
        if o.labels().contains(&label.index) {
            p += proj.matrix().as_dmatrix();
        }
    }
    p
}

/// Measures the history's outcomes one slot at a time and multiplies the
/// step probabilities.
pub fn sequential_probability<T: Real>(
    f: &HistoryFamily<T>,
    h: &History,
) -> Result<(T, MeasurementTrace<T>)> {
    f.validate(h)?;
    let schedule = f.schedule();
    let mut rho = state_at(f, h.start());
    let mut cumulative = T::one();
    let mut steps = Vec::with_capacity(h.len());
    let last = h.end() - 1;
    for (slot, outcome) in h.span().zip(h.outcomes()) {
        let p = outcome_matrix(f, slot, outcome);
        let projected = &p * &rho * &p;
        let prob = projected.trace().re;
        if prob <= lit(STEP_ZERO) {
            steps.push(MeasurementStep {
                slot,
                outcome: outcome.clone(),
                probability: T::zero(),
                post_state: None,
            });
            let trace = MeasurementTrace {
                steps,
                cumulative: T::zero(),
                truncated_at: Some(slot),
            };
            return Ok((T::zero(), trace));
        }
        cumulative *= prob;
        rho = projected * Complex::new(T::one() / prob, T::zero());
        steps.push(MeasurementStep {
            slot,
            outcome: outcome.clone(),
            probability: prob,
            post_state: Some(DensityState::from_trusted(ComplexMatrix::from_dmatrix(
                rho.clone(),
            )?)),
        });
        if slot < last {
            if let Some(u) = schedule.step(slot) {
                rho = evolve(&rho, u.as_dmatrix());
            }
        }
    }
    let trace = MeasurementTrace {
        steps,
        cumulative,
        truncated_at: None,
    };
    Ok((cumulative, trace))
}

/// `Pr(target ∧ given) / Pr(given)` from two sequential runs over the same
/// slots, with full (non-selective) outcomes standing in for `target` in the
/// denominator run. `target` and `given` must cover adjacent slot ranges.
pub fn conditional_via_oracle<T: Real>(
    f: &HistoryFamily<T>,
    target: &History,
    given: &History,
) -> Result<T> {
    let blank = f.trivial_history(target.span())?;
    let (joint, marginal) = if target.end() == given.start() {
        (target.concat(given)?, blank.concat(given)?)
    } else {
        (given.concat(target)?, given.concat(&blank)?)
    };
    let (denominator, _) = sequential_probability(f, &marginal)?;
    if denominator <= lit(ZERO_THRESHOLD) {
        return Err(Error::ZeroConditionProbability {
            probability: denominator.to_f64_lossy(),
        });
    }
    let (numerator, _) = sequential_probability(f, &joint)?;
    Ok(numerator / denominator)
}
