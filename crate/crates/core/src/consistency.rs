//! Consistency tests on a history family.
//!
//! * weak: `|2·Re D[α][α′]| ≤ tol` for every pair of distinct fine histories
//! * medium: `2·|D[α][α′]| ≤ tol`, the largest value `|2·Re D|` can take
//!   over relative phases, so a medium pass always implies a weak pass
//! * additivity: coarse-grained probabilities against sums of fine ones
//! * robustness: one of the above, repeated over a set of states
//!
//! Every check returns a [`ConsistencyReport`] carrying the largest
//! violation found and where it occurred. Ties keep the first witness in
//! enumeration order.

use std::collections::HashMap;
use std::fmt;

use nalgebra::ComplexField;
use rand::Rng;

use crate::error::{Error, Result};
use crate::history::{
    DecoherenceFunctional, History, HistoryFamily, HistoryUnion, DEFAULT_HISTORY_CAP,
};
use crate::operator::DensityState;
use crate::random::{random_states, rng, DEFAULT_SEED};
use crate::scalar::{lit, Real};
use crate::spectral::Partition;

/// Default tolerance on violation magnitudes.
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;
/// Resolutions up to this size get every coarsening enumerated.
pub const EXHAUSTIVE_PARTITION_LIMIT: usize = 8;
/// Number of sampled coarsenings per slot above the exhaustive limit.
pub const PARTITION_SAMPLE: usize = 64;
/// Number of random states in the default robustness sweep.
pub const DEFAULT_ROBUST_STATES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CheckMode {
    Weak,
    Medium,
    Additivity,
    Robustness,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::Weak => "weak",
            CheckMode::Medium => "medium",
            CheckMode::Additivity => "additivity",
            CheckMode::Robustness => "robustness",
        })
    }
}

/// Where the worst violation was found.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// Nothing to compare (a single history, or an empty scope).
    None,
    /// Indices into the fine-history enumeration.
    Pair { a: usize, b: usize },
    /// A coarse history compared against the fine histories it contains.
    /// `slot` is the coarsened slot, `None` for the all-merged history.
    Coarse {
        slot: Option<usize>,
        history: History,
    },
    /// The state at `index` of a robustness sweep failed with `inner`.
    State { index: usize, inner: Box<Witness> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<T: Real> {
    pub mode: CheckMode,
    pub passed: bool,
    pub worst_violation: T,
    pub witness: Witness,
    pub tolerance: T,
    /// Seed behind any randomised part of the check.
    pub seed: Option<u64>,
    /// Number of comparisons made.
    pub checked: usize,
}

impl<T: Real> ConsistencyReport<T> {
    fn new(mode: CheckMode, worst: Worst<T>, tolerance: T, seed: Option<u64>) -> Self {
        Self {
            mode,
            passed: worst.value <= tolerance,
            worst_violation: worst.value,
            witness: worst.witness,
            tolerance,
            seed,
            checked: worst.checked,
        }
    }
}

/// Running maximum; the first witness wins ties.
struct Worst<T: Real> {
    value: T,
    witness: Witness,
    checked: usize,
}

impl<T: Real> Worst<T> {
    fn new() -> Self {
        Self {
            value: T::zero(),
            witness: Witness::None,
            checked: 0,
        }
    }

    fn offer(&mut self, value: T, witness: impl FnOnce() -> Witness) {
        if self.checked == 0 || value > self.value {
            self.value = value;
            self.witness = witness();
        }
        self.checked += 1;
    }
}

fn off_diagonal_check<T: Real>(
    d: &DecoherenceFunctional<T>,
    tol: T,
    mode: CheckMode,
    measure: impl Fn(nalgebra::Complex<T>) -> T,
) -> ConsistencyReport<T> {
    let mut worst = Worst::new();
    let n = d.len();
    for a in 0..n {
        for b in a + 1..n {
            let z = d.entry(a, b);
            debug_assert!(
                (d.entry(b, a) - z.conj()).modulus() <= lit::<T>(1e-9) * (T::one() + z.modulus()),
                "decoherence functional is not Hermitian at ({a}, {b})"
            );
            worst.offer(measure(z), || Witness::Pair { a, b });
        }
    }
    ConsistencyReport::new(mode, worst, tol, None)
}

/// Largest `|Tr(C_α ρ C_α′†) + Tr(C_α′ ρ C_α†)| = |2·Re D[α][α′]|` over distinct pairs.
pub fn check_weak_consistency<T: Real>(
    d: &DecoherenceFunctional<T>,
    tol: T,
) -> ConsistencyReport<T> {
    let two: T = lit(2.0);
    off_diagonal_check(d, tol, CheckMode::Weak, |z| (two * z.re).abs())
}

/// Largest `2·|D[α][α′]|` over distinct pairs: the weak measure maximised
/// over the relative phase of the two histories.
pub fn check_medium_decoherence<T: Real>(
    d: &DecoherenceFunctional<T>,
    tol: T,
) -> ConsistencyReport<T> {
    let two: T = lit(2.0);
    off_diagonal_check(d, tol, CheckMode::Medium, |z| two * z.modulus())
}

/// Which coarse-grainings the additivity check compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdditivityScope {
    /// Pairs of fine histories differing in exactly one slot, against their union.
    Pairs,
    /// At each slot, every block of every coarsening into at most two blocks
    /// (sampled above [`EXHAUSTIVE_PARTITION_LIMIT`] labels), with the other
    /// slots fine; plus the all-merged history.
    Partitions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditivityOptions {
    pub scope: AdditivityScope,
    /// Seed for partition sampling on large resolutions.
    pub seed: u64,
    pub cap: usize,
}

impl Default for AdditivityOptions {
    fn default() -> Self {
        Self {
            scope: AdditivityScope::Partitions,
            seed: DEFAULT_SEED,
            cap: DEFAULT_HISTORY_CAP,
        }
    }
}

impl AdditivityOptions {
    pub fn pairs() -> Self {
        Self {
            scope: AdditivityScope::Pairs,
            ..Self::default()
        }
    }
}

/// Additivity of history probabilities under coarse-graining.
///
/// The violation for a coarse history is `|Pr(coarse) − Σ Pr(fine)|`, where
/// the sum runs over the fine histories it contains. For disjoint pairs this
/// is `Pr(α ∪ α′) − Pr(α) − Pr(α′) + Pr(α ∩ α′)` with `Pr(∅) = 0`.
pub fn check_additivity<T: Real>(
    f: &HistoryFamily<T>,
    tol: T,
    options: AdditivityOptions,
) -> Result<ConsistencyReport<T>> {
    let fine = f.all_fine_histories(options.cap)?;
    let probs = fine
        .iter()
        .map(|h| f.history_probability_raw(h))
        .collect::<Result<Vec<T>>>()?;
    let mut worst = Worst::new();
    let seed = match options.scope {
        AdditivityScope::Pairs => {
            for a in 0..fine.len() {
                for b in a + 1..fine.len() {
                    let differing = fine[a]
                        .outcomes()
                        .iter()
                        .zip(fine[b].outcomes())
                        .filter(|(x, y)| x != y)
                        .count();
                    if differing != 1 {
                        continue;
                    }
                    let HistoryUnion::Defined(union) = fine[a].union(&fine[b])? else {
                        unreachable!("single-slot difference always has a union");
                    };
                    let p_union = f.history_probability_raw(&union)?;
                    let v = (p_union - probs[a] - probs[b]).abs();
                    worst.offer(v, || Witness::Pair { a, b });
                }
            }
            None
        }
        AdditivityScope::Partitions => {
            let index: HashMap<&History, usize> =
                fine.iter().enumerate().map(|(i, h)| (h, i)).collect();
            let all = f.trivial_history(0..f.slots())?;
            let total = probs.iter().fold(T::zero(), |acc, &p| acc + p);
            let v = (f.history_probability_raw(&all)? - total).abs();
            worst.offer(v, || Witness::Coarse {
                slot: None,
                history: all.clone(),
            });

            let mut sampler = rng(options.seed);
            let mut sampled = false;
            for slot in 0..f.slots() {
                let res = f.resolution(slot);
                let labels: Vec<usize> = res.labels().collect();
                for block in merged_blocks(&labels, &mut sampler, &mut sampled) {
                    let outcome = res.outcome(block.iter().copied())?;
                    let first = block[0];
                    for h in fine
                        .iter()
                        .filter(|h| h.outcome(slot).unwrap().labels().contains(&first))
                    {
                        let mut outcomes = h.outcomes().to_vec();
                        let mut sum = T::zero();
                        for &label in &block {
                            outcomes[slot] = res.singleton(label)?;
                            let key = History::new(0, outcomes.clone())?;
                            sum += probs[index[&key]];
                        }
                        outcomes[slot] = outcome.clone();
                        let coarse = History::new(0, outcomes)?;
                        let v = (f.history_probability_raw(&coarse)? - sum).abs();
                        worst.offer(v, || Witness::Coarse {
                            slot: Some(slot),
                            history: coarse.clone(),
                        });
                    }
                }
            }
            sampled.then_some(options.seed)
        }
    };
    Ok(ConsistencyReport::new(
        CheckMode::Additivity,
        worst,
        tol,
        seed,
    ))
}

/// Blocks with at least two labels from every partition of `labels` into at
/// most two blocks. Each such subset appears once. Above the exhaustive
/// limit, [`PARTITION_SAMPLE`] random two-block splits are used instead.
fn merged_blocks<R: Rng>(labels: &[usize], rng: &mut R, sampled: &mut bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if labels.len() < 2 {
        return out;
    }
    out.push(labels.to_vec());
    let splits: Vec<Partition> = if labels.len() <= EXHAUSTIVE_PARTITION_LIMIT {
        Partition::two_block_splits(labels)
    } else {
        *sampled = true;
        (0..PARTITION_SAMPLE)
            .map(|_| {
                let mut assignment: std::collections::BTreeMap<usize, usize> = labels
                    .iter()
                    .map(|&l| (l, rng.random_range(0..2)))
                    .collect();
                // keep both blocks non-empty
                assignment.insert(labels[0], 0);
                assignment.insert(labels[1], 1);
                Partition::new(assignment)
            })
            .collect()
    };
    for split in splits {
        out.extend(split.blocks().into_values().filter(|b| b.len() >= 2));
    }
    out
}

/// Tolerance for the partition-scope additivity check that matches `tol` on
/// the weak check: a merged block of `k` labels sums `k(k−1)/2` pair terms.
pub fn additivity_tolerance<T: Real>(f: &HistoryFamily<T>, tol: T) -> T {
    let k = f.resolutions().iter().map(|r| r.len()).max().unwrap_or(1);
    let pairs = (k * k.saturating_sub(1) / 2).max(1);
    tol * lit::<T>(pairs as f64)
}

/// Check repeated inside a robustness sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerCheck {
    Weak,
    Medium,
    Additivity(AdditivityOptions),
}

/// States for a robustness sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSet<T: Real> {
    Explicit(Vec<DensityState<T>>),
    /// Normalised Wishart samples from a seeded generator.
    Random {
        count: usize,
        seed: u64,
    },
}

impl<T: Real> Default for StateSet<T> {
    fn default() -> Self {
        StateSet::Random {
            count: DEFAULT_ROBUST_STATES,
            seed: DEFAULT_SEED,
        }
    }
}

/// Runs `inner` once per state and reports the worst case.
pub fn check_state_robustness<T: Real>(
    f: &HistoryFamily<T>,
    states: &StateSet<T>,
    inner: InnerCheck,
    tol: T,
) -> Result<ConsistencyReport<T>> {
    let (states, seed) = match states {
        StateSet::Explicit(list) => (list.clone(), None),
        StateSet::Random { count, seed } => (random_states(f.dim(), *count, *seed), Some(*seed)),
    };
    if states.is_empty() {
        return Err(Error::EmptyStateSet);
    }
    let mut worst = Worst::new();
    for (index, state) in states.into_iter().enumerate() {
        let family = f.with_state(state)?;
        let report = match inner {
            InnerCheck::Weak => check_weak_consistency(&family.decoherence_functional()?, tol),
            InnerCheck::Medium => check_medium_decoherence(&family.decoherence_functional()?, tol),
            InnerCheck::Additivity(options) => check_additivity(&family, tol, options)?,
        };
        let inner_witness = report.witness;
        worst.offer(report.worst_violation, || Witness::State {
            index,
            inner: Box::new(inner_witness),
        });
    }
    Ok(ConsistencyReport::new(
        CheckMode::Robustness,
        worst,
        tol,
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynamicsSchedule, DynamicsSpec, TimeGrid};
    use crate::operator::{ComplexMatrix, Projector};
    use crate::spectral::{Resolution, SpectralLabel};
    use nalgebra::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn x_res() -> Resolution<f64> {
        Resolution::new(
            vec![
                (
                    SpectralLabel::new(0),
                    Projector::onto(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap(),
                ),
                (
                    SpectralLabel::new(1),
                    Projector::onto(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap(),
                ),
            ],
            1e-12,
        )
        .unwrap()
    }

    fn family(res: Vec<Resolution<f64>>, state: DensityState<f64>) -> HistoryFamily<f64> {
        let grid = TimeGrid::uniform(res.len(), 1.0, res.len() - 1).unwrap();
        let schedule = DynamicsSchedule::new(grid, &DynamicsSpec::trivial(2), 0, 1e-10).unwrap();
        HistoryFamily::new(schedule, res, state).unwrap()
    }

    fn z_then_x(ket: &[Complex<f64>]) -> HistoryFamily<f64> {
        family(
            vec![Resolution::computational(2), x_res()],
            DensityState::pure(ket).unwrap(),
        )
    }

    #[test]
    fn diagonal_functional_passes_weak_and_medium() {
        let d = DecoherenceFunctional::from_matrix(
            ComplexMatrix::from_diagonal(&[0.2, 0.3, 0.5]),
            Vec::new(),
            1e-12,
        )
        .unwrap();
        let weak = check_weak_consistency(&d, 1e-9);
        assert!(weak.passed);
        assert_eq!(weak.worst_violation, 0.0);
        assert!(check_medium_decoherence(&d, 1e-9).passed);
    }

    #[test]
    fn imaginary_coherence_passes_weak_fails_medium() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.5, 0.0), c(0.0, 0.3)],
            vec![c(0.0, -0.3), c(0.5, 0.0)],
        ])
        .unwrap();
        let d = DecoherenceFunctional::from_matrix(m, Vec::new(), 1e-12).unwrap();
        assert!(check_weak_consistency(&d, 1e-9).passed);
        let medium = check_medium_decoherence(&d, 1e-9);
        assert!(!medium.passed);
        assert!((medium.worst_violation - 0.6).abs() < 1e-15);
        assert_eq!(medium.witness, Witness::Pair { a: 0, b: 1 });
    }

    #[test]
    fn z_then_x_fails_weak_with_witness() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = z_then_x(&[c(s, 0.0), c(s, 0.0)]);
        let d = f.decoherence_functional().unwrap();
        let r = check_weak_consistency(&d, 1e-9);
        assert!(!r.passed);
        assert!((r.worst_violation - 0.5).abs() < 1e-12);
        // (z0,x+) is history 0, (z1,x+) is history 2
        assert_eq!(r.witness, Witness::Pair { a: 0, b: 2 });
    }

    #[test]
    fn same_basis_twice_is_consistent() {
        let z = Resolution::computational(2);
        let f = family(
            vec![z.clone(), z],
            DensityState::pure(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap(),
        );
        let d = f.decoherence_functional().unwrap();
        assert!(check_weak_consistency(&d, 1e-9).passed);
        let add = check_additivity(&f, 1e-10, AdditivityOptions::default()).unwrap();
        assert!(add.passed && add.worst_violation <= 1e-10);
        assert!(
            check_additivity(&f, 1e-10, AdditivityOptions::pairs())
                .unwrap()
                .passed
        );
    }

    #[test]
    fn z_then_x_additivity_witness() {
        let f = z_then_x(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let r = check_additivity(&f, 1e-9, AdditivityOptions::default()).unwrap();
        assert!(!r.passed);
        assert!((r.worst_violation - 0.5).abs() < 1e-12);
        let expected = f.history_from_labels(0, &[&[0, 1], &[0]]).unwrap();
        assert_eq!(
            r.witness,
            Witness::Coarse {
                slot: Some(0),
                history: expected
            }
        );
        let pairs = check_additivity(&f, 1e-9, AdditivityOptions::pairs()).unwrap();
        assert!((pairs.worst_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_merged_history_contributes_nothing() {
        // single outcome everywhere: the only coarse history is the full one
        let f = family(
            vec![Resolution::trivial(2), Resolution::trivial(2)],
            DensityState::maximally_mixed(2),
        );
        let r = check_additivity(&f, 1e-12, AdditivityOptions::default()).unwrap();
        assert!(r.passed);
        assert_eq!(r.checked, 1);
        assert!(r.worst_violation < 1e-15);
    }

    #[test]
    fn robustness_on_z_then_x() {
        let f = z_then_x(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let d = f.decoherence_functional().unwrap();
        assert!(check_weak_consistency(&d, 1e-9).passed);
        let r = check_state_robustness(&f, &StateSet::default(), InnerCheck::Weak, 1e-9).unwrap();
        assert!(!r.passed);
        assert_eq!(r.seed, Some(DEFAULT_SEED));
        assert!(matches!(r.witness, Witness::State { .. }));
    }

    #[test]
    fn robustness_explicit_states_and_empty_set() {
        let f = family(
            vec![Resolution::trivial(2)],
            DensityState::maximally_mixed(2),
        );
        let states = StateSet::Explicit(random_states(2, 5, 9));
        let r = check_state_robustness(&f, &states, InnerCheck::Weak, 1e-9).unwrap();
        assert!(r.passed);
        assert_eq!(r.seed, None);
        assert_eq!(
            check_state_robustness(&f, &StateSet::Explicit(vec![]), InnerCheck::Weak, 1e-9)
                .unwrap_err(),
            Error::EmptyStateSet
        );
    }

    #[test]
    fn reports_are_deterministic() {
        let f = z_then_x(&[c(0.3, 0.1), c(0.5, -0.2)]);
        let a = check_state_robustness(&f, &StateSet::default(), InnerCheck::Medium, 1e-9).unwrap();
        let b = check_state_robustness(&f, &StateSet::default(), InnerCheck::Medium, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn merged_blocks_cover_each_subset_once() {
        let mut r = rng(0);
        let mut sampled = false;
        let blocks = merged_blocks(&[0, 1, 2, 3], &mut r, &mut sampled);
        // subsets of size ≥ 2 of a 4-set: 2^4 − 4 − 1 = 11
        assert_eq!(blocks.len(), 11);
        let mut sorted = blocks.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 11);
        assert!(!sampled);
        assert_eq!(
            merged_blocks(&[0, 1], &mut r, &mut sampled),
            vec![vec![0, 1]]
        );
    }
}
