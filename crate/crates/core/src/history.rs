//! Histories, chain operators, probabilities, conditionals and the
//! decoherence functional.
//!
//! A [`History`] assigns one outcome to each slot of a contiguous range of
//! the family's time grid. Its chain operator is the product of the
//! Heisenberg-lifted outcome projectors with the latest slot leftmost:
//!
//! ```text
//! C = P_{end-1}(t_{end-1}) · … · P_{start}(t_{start})
//! ```
//!
//! and its probability is `Tr(C ρ C†)` with `ρ` given at the schedule's
//! reference slot. Slots outside the range contribute the identity.

use std::ops::Range;

use nalgebra::Complex;

use crate::dynamics::DynamicsSchedule;
use crate::error::{Error, Result};
use crate::operator::{trace_of_product_with_adjoint, ComplexMatrix, DensityState, DEFAULT_TOL};
use crate::scalar::{lit, Real};
use crate::spectral::{Intersection, Outcome, Partition, Resolution};

/// Largest number of fine-grained histories the decoherence functional will enumerate.
pub const DEFAULT_HISTORY_CAP: usize = 4096;

/// Conditioning events below this probability are rejected.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// One outcome per slot over the contiguous slot range `start..start + len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct History {
    start: usize,
    outcomes: Vec<Outcome>,
}

impl History {
    pub fn new(start: usize, outcomes: Vec<Outcome>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::InvalidHistory(
                "a history needs at least one slot".into(),
            ));
        }
        Ok(Self { start, outcomes })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// One past the last slot.
    pub fn end(&self) -> usize {
        self.start + self.outcomes.len()
    }

    pub fn span(&self) -> Range<usize> {
        self.start..self.end()
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn outcome(&self, slot: usize) -> Option<&Outcome> {
        slot.checked_sub(self.start)
            .and_then(|i| self.outcomes.get(i))
    }

    /// Every slot carries a single label.
    pub fn is_fine(&self) -> bool {
        self.outcomes.iter().all(Outcome::is_singleton)
    }

    /// Joins two histories over adjacent ranges, in time order.
    pub fn concat(&self, later: &History) -> Result<History> {
        if self.end() != later.start {
            return Err(Error::InvalidHistory(format!(
                "slots {:?} and {:?} are not adjacent",
                self.span(),
                later.span()
            )));
        }
        let mut outcomes = self.outcomes.clone();
        outcomes.extend(later.outcomes.iter().cloned());
        Ok(History {
            start: self.start,
            outcomes,
        })
    }

    fn with_outcome(&self, slot: usize, outcome: Outcome) -> History {
        let mut out = self.clone();
        out.outcomes[slot - self.start] = outcome;
        out
    }

    fn check_comparable(&self, other: &History) -> Result<()> {
        let same = self.start == other.start
            && self.outcomes.len() == other.outcomes.len()
            && self
                .outcomes
                .iter()
                .zip(&other.outcomes)
                .all(|(a, b)| a.same_resolution(b));
        if same {
            Ok(())
        } else {
            Err(Error::FamilyMismatch)
        }
    }

    /// Componentwise outcome inclusion.
    pub fn is_subset(&self, other: &History) -> Result<bool> {
        self.check_comparable(other)?;
        for (a, b) in self.outcomes.iter().zip(&other.outcomes) {
            if !a.is_subset(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Componentwise intersection; empty as soon as one slot empties.
    pub fn intersection(&self, other: &History) -> Result<Intersection<History>> {
        self.check_comparable(other)?;
        let mut outcomes = Vec::with_capacity(self.outcomes.len());
        for (a, b) in self.outcomes.iter().zip(&other.outcomes) {
            match a.intersection(b)? {
                Intersection::NonEmpty(o) => outcomes.push(o),
                Intersection::Empty => return Ok(Intersection::Empty),
            }
        }
        Ok(Intersection::NonEmpty(History {
            start: self.start,
            outcomes,
        }))
    }

    /// Set union, defined only where it is again a product of outcomes:
    /// the two histories may differ in at most one slot.
    pub fn union(&self, other: &History) -> Result<HistoryUnion> {
        self.check_comparable(other)?;
        let differing: Vec<usize> = self
            .outcomes
            .iter()
            .zip(&other.outcomes)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| self.start + i)
            .collect();
        match differing.as_slice() {
            [] => Ok(HistoryUnion::Defined(self.clone())),
            [slot] => {
                let i = slot - self.start;
                let merged = self.outcomes[i].union(&other.outcomes[i])?;
                Ok(HistoryUnion::Defined(self.with_outcome(*slot, merged)))
            }
            _ => Ok(HistoryUnion::Undefined {
                differing_slots: differing,
            }),
        }
    }
}

/// Outcome of [`History::union`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HistoryUnion {
    Defined(History),
    /// The histories differ in more than one slot, so the componentwise
    /// union would be strictly larger than the set union.
    Undefined {
        differing_slots: Vec<usize>,
    },
}

pub fn history_subset(h: &History, other: &History) -> Result<bool> {
    h.is_subset(other)
}

pub fn history_union(h: &History, other: &History) -> Result<HistoryUnion> {
    h.union(other)
}

pub fn history_intersection(h: &History, other: &History) -> Result<Intersection<History>> {
    h.intersection(other)
}

/// Dynamics, one resolution per slot, and the state at the reference slot.
#[derive(Clone, Debug)]
pub struct HistoryFamily<T: Real> {
    schedule: DynamicsSchedule<T>,
    resolutions: Vec<Resolution<T>>,
    lifted: Vec<Resolution<T>>,
    state: DensityState<T>,
    tol: T,
}

impl<T: Real> HistoryFamily<T> {
    pub fn new(
        schedule: DynamicsSchedule<T>,
        resolutions: Vec<Resolution<T>>,
        state: DensityState<T>,
    ) -> Result<Self> {
        Self::with_tolerance(schedule, resolutions, state, lit(DEFAULT_TOL))
    }

    /// `tol` bounds the round-off that probabilities are clamped over.
    pub fn with_tolerance(
        schedule: DynamicsSchedule<T>,
        resolutions: Vec<Resolution<T>>,
        state: DensityState<T>,
        tol: T,
    ) -> Result<Self> {
        let dim = state.dim();
        if resolutions.len() != schedule.slots() {
            return Err(Error::CountMismatch {
                expected: schedule.slots(),
                found: resolutions.len(),
            });
        }
        if let Some(d) = schedule.dim().filter(|&d| d != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
        if let Some(r) = resolutions.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: r.dim(),
            });
        }
        let lifted = resolutions
            .iter()
            .enumerate()
            .map(|(k, r)| schedule.heisenberg_resolution(k, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            schedule,
            resolutions,
            lifted,
            state,
            tol,
        })
    }

    /// Same family with another state.
    pub fn with_state(&self, state: DensityState<T>) -> Result<Self> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim(),
            });
        }
        Ok(Self {
            state,
            ..self.clone()
        })
    }

    /// Same family with the resolution at `slot` coarsened by `partition`.
    pub fn coarsened(&self, slot: usize, partition: &Partition) -> Result<Self> {
        self.check_slot(slot)?;
        let mut resolutions = self.resolutions.clone();
        resolutions[slot] = resolutions[slot].coarsen(partition)?;
        let mut lifted = self.lifted.clone();
        lifted[slot] = self.lifted[slot].coarsen(partition)?;
        Ok(Self {
            resolutions,
            lifted,
            ..self.clone()
        })
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn slots(&self) -> usize {
        self.resolutions.len()
    }

    pub fn present(&self) -> usize {
        self.schedule.grid().present_index()
    }

    pub fn schedule(&self) -> &DynamicsSchedule<T> {
        &self.schedule
    }

    pub fn state(&self) -> &DensityState<T> {
        &self.state
    }

    pub fn tolerance(&self) -> T {
        self.tol
    }

    /// Schrödinger-picture resolution at `slot`.
    pub fn resolution(&self, slot: usize) -> &Resolution<T> {
        &self.resolutions[slot]
    }

    pub fn resolutions(&self) -> &[Resolution<T>] {
        &self.resolutions
    }

    /// Heisenberg-picture resolution at `slot`.
    pub fn lifted_resolution(&self, slot: usize) -> &Resolution<T> {
        &self.lifted[slot]
    }

    fn check_slot(&self, slot: usize) -> Result<()> {
        if slot < self.slots() {
            Ok(())
        } else {
            Err(Error::SlotOutOfRange {
                slot,
                slots: self.slots(),
            })
        }
    }

    /// Builds a history starting at `start`, checking every outcome.
    pub fn history(&self, start: usize, outcomes: Vec<Outcome>) -> Result<History> {
        let h = History::new(start, outcomes)?;
        self.validate(&h)?;
        Ok(h)
    }

    /// History over `range` built from label lists.
    pub fn history_from_labels(&self, start: usize, labels: &[&[usize]]) -> Result<History> {
        let outcomes = labels
            .iter()
            .enumerate()
            .map(|(i, ls)| {
                let slot = start + i;
                self.check_slot(slot)?;
                self.resolutions[slot].outcome(ls.iter().copied())
            })
            .collect::<Result<Vec<_>>>()?;
        self.history(start, outcomes)
    }

    /// Full outcome at every slot of `range`.
    pub fn trivial_history(&self, range: Range<usize>) -> Result<History> {
        if range.end > self.slots() {
            return Err(Error::SlotOutOfRange {
                slot: range.end - 1,
                slots: self.slots(),
            });
        }
        History::new(
            range.start,
            range.map(|k| self.resolutions[k].full_outcome()).collect(),
        )
    }

    pub fn validate(&self, h: &History) -> Result<()> {
        if h.end() > self.slots() {
            return Err(Error::InvalidHistory(format!(
                "slots {:?} exceed the family's {} slots",
                h.span(),
                self.slots()
            )));
        }
        for (k, o) in h.span().zip(h.outcomes()) {
            if !self.resolutions[k].admits(o) {
                return Err(Error::InvalidHistory(format!(
                    "outcome at slot {k} does not belong to that slot's resolution"
                )));
            }
        }
        Ok(())
    }

    /// Number of fine-grained histories over `range`, or `None` on overflow.
    pub fn fine_count(&self, range: Range<usize>) -> Option<usize> {
        self.resolutions[range]
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.len()))
    }

    /// All fine-grained histories over `range`, earliest slot most significant,
    /// labels in resolution order.
    pub fn fine_histories(&self, range: Range<usize>, cap: usize) -> Result<Vec<History>> {
        if range.is_empty() || range.end > self.slots() {
            return Err(Error::InvalidHistory(format!("bad slot range {range:?}")));
        }
        let size = self.fine_count(range.clone()).unwrap_or(usize::MAX);
        if size > cap {
            return Err(Error::FamilyTooLarge { size, cap });
        }
        let singles: Vec<Vec<Outcome>> = self.resolutions[range.clone()]
            .iter()
            .map(|r| {
                r.labels()
                    .map(|l| r.singleton(l).expect("own label"))
                    .collect()
            })
            .collect();
        let mut out = Vec::with_capacity(size);
        let mut digits = vec![0usize; singles.len()];
        loop {
            let outcomes = digits
                .iter()
                .zip(&singles)
                .map(|(&d, s)| s[d].clone())
                .collect();
            out.push(History {
                start: range.start,
                outcomes,
            });
            // odometer with the last slot least significant
            let mut pos = singles.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < singles[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }

    /// All fine-grained histories over every slot.
    pub fn all_fine_histories(&self, cap: usize) -> Result<Vec<History>> {
        self.fine_histories(0..self.slots(), cap)
    }

    /// Chain operator, latest slot leftmost.
    pub fn chain_operator(&self, h: &History) -> Result<ComplexMatrix<T>> {
        self.validate(h)?;
        let mut acc: Option<ComplexMatrix<T>> = None;
        for (k, o) in h.span().zip(h.outcomes()) {
            let p = self.lifted[k].outcome_projector(o)?;
            acc = Some(match acc {
                None => p.matrix().clone(),
                Some(c) => p.matrix() * &c,
            });
        }
        Ok(acc.expect("history has at least one slot"))
    }

    /// `Tr(C ρ C†)` without clamping.
    pub fn history_probability_raw(&self, h: &History) -> Result<T> {
        let c = self.chain_operator(h)?;
        Ok(self.weight(&c))
    }

    /// `Tr(C ρ C†)`, clamped onto `[0, 1]` when within tolerance of a bound.
    pub fn history_probability(&self, h: &History) -> Result<T> {
        Ok(clamp_unit(self.history_probability_raw(h)?, self.tol))
    }

    fn weight(&self, c: &ComplexMatrix<T>) -> T {
        let c_rho = c * self.state.matrix();
        trace_of_product_with_adjoint(&c_rho, c).re
    }

    /// Decoherence functional over every fine-grained history, capped at
    /// [`DEFAULT_HISTORY_CAP`] histories.
    pub fn decoherence_functional(&self) -> Result<DecoherenceFunctional<T>> {
        self.decoherence_functional_capped(DEFAULT_HISTORY_CAP)
    }

    pub fn decoherence_functional_capped(&self, cap: usize) -> Result<DecoherenceFunctional<T>> {
        let histories = self.all_fine_histories(cap)?;
        let chains = self.fine_chain_operators();
        debug_assert_eq!(chains.len(), histories.len());
        let weighted: Vec<ComplexMatrix<T>> =
            chains.iter().map(|c| c * self.state.matrix()).collect();
        let n = histories.len();
        let mut entries = nalgebra::DMatrix::from_element(n, n, Complex::new(T::zero(), T::zero()));
        for a in 0..n {
            for b in 0..n {
                entries[(a, b)] = trace_of_product_with_adjoint(&weighted[a], &chains[b]);
            }
        }
        Ok(DecoherenceFunctional {
            histories,
            entries: ComplexMatrix::from_dmatrix(entries)?,
        })
    }

    /// Chain operators of all fine histories in enumeration order, sharing
    /// prefixes across histories.
    fn fine_chain_operators(&self) -> Vec<ComplexMatrix<T>> {
        let mut level: Vec<ComplexMatrix<T>> = self.lifted[0]
            .entries()
            .iter()
            .map(|(_, p)| p.matrix().clone())
            .collect();
        for r in &self.lifted[1..] {
            level = level
                .iter()
                .flat_map(|prefix| r.entries().iter().map(move |(_, p)| p.matrix() * prefix))
                .collect();
        }
        level
    }

    /// `Pr(target ∧ given) / Pr(given)` for adjacent slot ranges.
    fn conditional(&self, target: &History, given: &History) -> Result<T> {
        let joint = if target.end() == given.start() {
            target.concat(given)?
        } else {
            given.concat(target)?
        };
        let denominator = self.history_probability_raw(given)?;
        if denominator <= lit(ZERO_THRESHOLD) {
            return Err(Error::ZeroConditionProbability {
                probability: denominator.to_f64_lossy(),
            });
        }
        Ok(self.history_probability_raw(&joint)? / denominator)
    }

    /// Probability of `future` (slots after the present) given `given`
    /// (a range ending at the present). Always in `[0, 1]`.
    pub fn predictive_conditional(&self, future: &History, given: &History) -> Result<T> {
        let present = self.present();
        if given.end() != present + 1 {
            return Err(Error::InvalidHistory(
                "the condition must end at the present slot".into(),
            ));
        }
        if future.start() != present + 1 {
            return Err(Error::InvalidHistory(
                "the future must start right after the present".into(),
            ));
        }
        Ok(clamp_unit(self.conditional(future, given)?, self.tol))
    }

    fn present_history(&self, present: &Outcome) -> Result<History> {
        self.history(self.present(), vec![present.clone()])
    }

    fn check_past(&self, past: &History) -> Result<()> {
        if past.end() != self.present() {
            return Err(Error::InvalidHistory(
                "the past must end right before the present slot".into(),
            ));
        }
        Ok(())
    }

    /// Probability of `past` given the present outcome, with denominator
    /// `Tr(C(present) ρ C(present)†)`. Not bounded by 1 and not additive
    /// over pasts unless the family is consistent.
    pub fn retrodictive_conditional(&self, past: &History, present: &Outcome) -> Result<T> {
        self.check_past(past)?;
        let now = self.present_history(present)?;
        self.conditional(past, &now)
    }

    /// As [`retrodictive_conditional`](Self::retrodictive_conditional), but
    /// normalised by the sum of joint probabilities over every fine-grained
    /// past on the same slots. Fine-grained pasts then sum to one.
    pub fn retrodictive_normalized(&self, past: &History, present: &Outcome) -> Result<T> {
        self.check_past(past)?;
        let now = self.present_history(present)?;
        let mut denominator = T::zero();
        for fine in self.fine_histories(past.span(), usize::MAX)? {
            denominator += self.history_probability_raw(&fine.concat(&now)?)?;
        }
        if denominator <= lit(ZERO_THRESHOLD) {
            return Err(Error::ZeroConditionProbability {
                probability: denominator.to_f64_lossy(),
            });
        }
        Ok(self.history_probability_raw(&past.concat(&now)?)? / denominator)
    }
}

/// Clamps values within `tol` outside `[0, 1]` onto the interval.
pub(crate) fn clamp_unit<T: Real>(x: T, tol: T) -> T {
    if x < T::zero() && x >= -tol {
        T::zero()
    } else if x > T::one() && x <= T::one() + tol {
        T::one()
    } else {
        x
    }
}

pub fn chain_operator<T: Real>(f: &HistoryFamily<T>, h: &History) -> Result<ComplexMatrix<T>> {
    f.chain_operator(h)
}

pub fn history_probability<T: Real>(f: &HistoryFamily<T>, h: &History) -> Result<T> {
    f.history_probability(h)
}

pub fn decoherence_functional<T: Real>(f: &HistoryFamily<T>) -> Result<DecoherenceFunctional<T>> {
    f.decoherence_functional()
}

pub fn predictive_conditional<T: Real>(
    f: &HistoryFamily<T>,
    future: &History,
    given: &History,
) -> Result<T> {
    f.predictive_conditional(future, given)
}

pub fn retrodictive_conditional<T: Real>(
    f: &HistoryFamily<T>,
    past: &History,
    present: &Outcome,
) -> Result<T> {
    f.retrodictive_conditional(past, present)
}

pub fn retrodictive_normalized<T: Real>(
    f: &HistoryFamily<T>,
    past: &History,
    present: &Outcome,
) -> Result<T> {
    f.retrodictive_normalized(past, present)
}

/// `D[α][α′] = Tr(C_α ρ C_α′†)` over the fine-grained histories of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoherenceFunctional<T: Real> {
    histories: Vec<History>,
    entries: ComplexMatrix<T>,
}

impl<T: Real> DecoherenceFunctional<T> {
    /// Wraps an explicit matrix, checking the structural invariants.
    /// `histories` may be empty for unlabelled matrices.
    pub fn from_matrix(entries: ComplexMatrix<T>, histories: Vec<History>, tol: T) -> Result<Self> {
        let n = entries.dim()?;
        if !histories.is_empty() && histories.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: histories.len(),
            });
        }
        let d = Self { histories, entries };
        d.validate(tol)?;
        Ok(d)
    }

    /// Hermitian, positive semidefinite, unit trace, all within `tol`.
    pub fn validate(&self, tol: T) -> Result<()> {
        DensityState::new(self.entries.clone(), tol).map(|_| ())
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex<T> {
        self.entries.get(a, b)
    }

    /// Real parts of the diagonal: the fine-grained history probabilities.
    pub fn probabilities(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.entries.get(i, i).re).collect()
    }

    pub fn index_of(&self, h: &History) -> Option<usize> {
        self.histories.iter().position(|x| x == h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynamicsSpec, TimeGrid};
    use crate::operator::Projector;
    use crate::spectral::SpectralLabel;

    fn x_resolution() -> Resolution<f64> {
        let plus = Projector::onto(&[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]).unwrap();
        let minus = Projector::onto(&[Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]).unwrap();
        Resolution::new(
            vec![
                (SpectralLabel::named(0, "+"), plus),
                (SpectralLabel::named(1, "-"), minus),
            ],
            1e-12,
        )
        .unwrap()
    }

    fn plus_state() -> DensityState<f64> {
        DensityState::pure(&[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]).unwrap()
    }

    fn zero_state() -> DensityState<f64> {
        DensityState::pure(&[Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]).unwrap()
    }

    fn trivial_family(
        resolutions: Vec<Resolution<f64>>,
        state: DensityState<f64>,
        present: usize,
    ) -> HistoryFamily<f64> {
        let grid = TimeGrid::uniform(resolutions.len(), 1.0, present).unwrap();
        let schedule = DynamicsSchedule::new(grid, &DynamicsSpec::trivial(2), 0, 1e-10).unwrap();
        HistoryFamily::new(schedule, resolutions, state).unwrap()
    }

    fn z_then_x() -> HistoryFamily<f64> {
        trivial_family(
            vec![Resolution::computational(2), x_resolution()],
            plus_state(),
            1,
        )
    }

    #[test]
    fn full_history_chain_is_identity() {
        let f = z_then_x();
        let h = f.trivial_history(0..2).unwrap();
        assert!(
            f.chain_operator(&h)
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(2))
                < 1e-15
        );
        assert_eq!(f.history_probability(&h).unwrap(), 1.0);
    }

    #[test]
    fn single_slot_chain_is_the_projector() {
        let f = trivial_family(vec![Resolution::computational(2)], zero_state(), 0);
        let h = f.history_from_labels(0, &[&[0]]).unwrap();
        assert_eq!(
            f.chain_operator(&h).unwrap(),
            ComplexMatrix::from_diagonal(&[1.0, 0.0])
        );
        assert_eq!(f.history_probability(&h).unwrap(), 1.0);
        let h1 = f.history_from_labels(0, &[&[1]]).unwrap();
        assert_eq!(f.history_probability(&h1).unwrap(), 0.0);
    }

    #[test]
    fn z_then_x_chain_operator() {
        let f = z_then_x();
        let h = f.history_from_labels(0, &[&[0], &[0]]).unwrap();
        let expected = ComplexMatrix::from_real_rows(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        assert!(f.chain_operator(&h).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn z_then_x_quarter_probabilities() {
        let f = z_then_x();
        for h in f.all_fine_histories(16).unwrap() {
            assert!((f.history_probability(&h).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_order_is_lexicographic() {
        let f = trivial_family(
            vec![
                Resolution::computational(2),
                x_resolution(),
                Resolution::computational(2),
            ],
            plus_state(),
            0,
        );
        let hs = f.all_fine_histories(64).unwrap();
        assert_eq!(hs.len(), 8);
        let labels: Vec<Vec<usize>> = hs
            .iter()
            .map(|h| {
                h.outcomes()
                    .iter()
                    .map(|o| *o.labels().iter().next().unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(labels[0], vec![0, 0, 0]);
        assert_eq!(labels[1], vec![0, 0, 1]);
        assert_eq!(labels[4], vec![1, 0, 0]);
        assert_eq!(labels[7], vec![1, 1, 1]);
    }

    #[test]
    fn cap_is_enforced() {
        let f = z_then_x();
        assert_eq!(
            f.decoherence_functional_capped(3).unwrap_err(),
            Error::FamilyTooLarge { size: 4, cap: 3 }
        );
    }

    #[test]
    fn maximally_mixed_single_slot_functional() {
        let r = Resolution::<f64>::computational(4);
        let grid = TimeGrid::new(vec![0.0], 0).unwrap();
        let schedule = DynamicsSchedule::new(grid, &DynamicsSpec::trivial(4), 0, 1e-10).unwrap();
        let f = HistoryFamily::new(schedule, vec![r], DensityState::maximally_mixed(4)).unwrap();
        let d = f.decoherence_functional().unwrap();
        let expected = ComplexMatrix::identity(4).scale_real(0.25);
        assert!(d.matrix().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn z_then_x_off_diagonal_quarter() {
        let f = z_then_x();
        let d = f.decoherence_functional().unwrap();
        let a = f.history_from_labels(0, &[&[0], &[0]]).unwrap();
        let b = f.history_from_labels(0, &[&[1], &[0]]).unwrap();
        let (ia, ib) = (d.index_of(&a).unwrap(), d.index_of(&b).unwrap());
        let entry = d.entry(ia, ib);
        assert!((entry.re - 0.25).abs() < 1e-12);
        assert!(entry.im.abs() < 1e-12);
        d.validate(1e-9).unwrap();
    }

    #[test]
    fn predictive_trivial_cases() {
        let f = trivial_family(
            vec![Resolution::computational(2), Resolution::computational(2)],
            zero_state(),
            0,
        );
        let given = f.history_from_labels(0, &[&[0]]).unwrap();
        let all = f.trivial_history(1..2).unwrap();
        assert_eq!(f.predictive_conditional(&all, &given).unwrap(), 1.0);
        let up = f.history_from_labels(1, &[&[0]]).unwrap();
        let down = f.history_from_labels(1, &[&[1]]).unwrap();
        assert_eq!(f.predictive_conditional(&up, &given).unwrap(), 1.0);
        assert_eq!(f.predictive_conditional(&down, &given).unwrap(), 0.0);
    }

    #[test]
    fn zero_probability_condition_is_an_error() {
        let f = trivial_family(
            vec![Resolution::computational(2), Resolution::computational(2)],
            zero_state(),
            0,
        );
        let given = f.history_from_labels(0, &[&[1]]).unwrap();
        let fut = f.history_from_labels(1, &[&[0]]).unwrap();
        assert!(matches!(
            f.predictive_conditional(&fut, &given),
            Err(Error::ZeroConditionProbability { .. })
        ));
    }

    #[test]
    fn predictive_checks_slot_layout() {
        let f = z_then_x();
        let h = f.history_from_labels(0, &[&[0]]).unwrap();
        assert!(matches!(
            f.predictive_conditional(&h, &h),
            Err(Error::InvalidHistory(_))
        ));
    }

    #[test]
    fn retrodiction_in_the_inconsistent_family() {
        let f = z_then_x();
        let plus = f.resolution(1).singleton(0).unwrap();
        let pasts = f.fine_histories(0..1, 16).unwrap();
        let plain: Vec<f64> = pasts
            .iter()
            .map(|p| f.retrodictive_conditional(p, &plus).unwrap())
            .collect();
        let normed: Vec<f64> = pasts
            .iter()
            .map(|p| f.retrodictive_normalized(p, &plus).unwrap())
            .collect();
        assert!((plain[0] - 0.25).abs() < 1e-12 && (plain[1] - 0.25).abs() < 1e-12);
        assert!((normed[0] - 0.5).abs() < 1e-12 && (normed[1] - 0.5).abs() < 1e-12);
        let trivial = f.trivial_history(0..1).unwrap();
        assert!((f.retrodictive_conditional(&trivial, &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn retrodiction_in_a_consistent_family() {
        let rho = DensityState::pure(&[Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)]).unwrap();
        let f = trivial_family(
            vec![Resolution::computational(2), Resolution::computational(2)],
            rho,
            1,
        );
        let now = f.resolution(1).singleton(1).unwrap();
        let pasts = f.fine_histories(0..1, 16).unwrap();
        let mut sum = 0.0;
        for p in &pasts {
            let plain = f.retrodictive_conditional(p, &now).unwrap();
            let normed = f.retrodictive_normalized(p, &now).unwrap();
            assert!((plain - normed).abs() < 1e-10);
            sum += plain;
        }
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_past_normalises_to_one() {
        let f = trivial_family(
            vec![Resolution::trivial(2), x_resolution()],
            plus_state(),
            1,
        );
        let past = f.trivial_history(0..1).unwrap();
        let plus = f.resolution(1).singleton(0).unwrap();
        assert!((f.retrodictive_normalized(&past, &plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn history_algebra() {
        let f = z_then_x();
        let h = f.history_from_labels(0, &[&[0], &[0]]).unwrap();
        let g = f.history_from_labels(0, &[&[1], &[0]]).unwrap();
        let k = f.history_from_labels(0, &[&[1], &[1]]).unwrap();
        assert!(history_subset(&h, &h).unwrap());
        let merged = f.history_from_labels(0, &[&[0, 1], &[0]]).unwrap();
        assert_eq!(
            history_union(&h, &g).unwrap(),
            HistoryUnion::Defined(merged.clone())
        );
        assert!(history_subset(&h, &merged).unwrap());
        assert!(history_intersection(&h, &g).unwrap().is_empty());
        assert_eq!(
            history_union(&h, &k).unwrap(),
            HistoryUnion::Undefined {
                differing_slots: vec![0, 1]
            }
        );
        let short = f.history_from_labels(0, &[&[0]]).unwrap();
        assert_eq!(
            history_subset(&h, &short).unwrap_err(),
            Error::FamilyMismatch
        );
    }

    #[test]
    fn invalid_history_rejected() {
        let f = z_then_x();
        let other = Resolution::<f64>::computational(3).singleton(0).unwrap();
        assert!(matches!(
            f.history(0, vec![other]),
            Err(Error::InvalidHistory(_))
        ));
        let out_of_range = History::new(
            1,
            vec![
                f.resolution(1).full_outcome(),
                f.resolution(1).full_outcome(),
            ],
        )
        .unwrap();
        assert!(matches!(
            f.chain_operator(&out_of_range),
            Err(Error::InvalidHistory(_))
        ));
    }

    #[test]
    fn clamp_only_touches_round_off() {
        assert_eq!(clamp_unit(-1e-12, 1e-10), 0.0);
        assert_eq!(clamp_unit(1.0 + 1e-12, 1e-10), 1.0);
        assert_eq!(clamp_unit(1.5, 1e-10), 1.5);
        assert_eq!(clamp_unit(0.3, 1e-10), 0.3);
    }
}
