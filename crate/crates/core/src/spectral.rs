//! Resolutions of the identity and the Boolean algebra of outcomes.
//!
//! An [`Outcome`] is a non-empty set of spectral labels drawn from one
//! [`Resolution`]. Inclusion, union and intersection are plain set
//! operations on labels, so they hold exactly; projectors only enter when
//! an outcome is turned into an operator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, Projector};
use crate::scalar::Real;

/// Index of one projector in a resolution, with an optional display name.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpectralLabel {
    pub index: usize,
    pub name: Option<String>,
}

impl SpectralLabel {
    pub fn new(index: usize) -> Self {
        Self { index, name: None }
    }

    pub fn named(index: usize, name: impl Into<String>) -> Self {
        Self {
            index,
            name: Some(name.into()),
        }
    }
}

impl fmt::Display for SpectralLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.name {
            Some(name) => f.write_str(name),
            None => write!(f, "{}", self.index),
        }
    }
}

/// Pairwise orthogonal projectors summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolution<T: Real> {
    entries: Vec<(SpectralLabel, Projector<T>)>,
    universe: Arc<BTreeSet<usize>>,
    dim: usize,
}

impl<T: Real> Resolution<T> {
    pub fn new(entries: Vec<(SpectralLabel, Projector<T>)>, tol: T) -> Result<Self> {
        let dim = entries
            .first()
            .map(|(_, p)| p.dim())
            .ok_or(Error::EmptyMatrix)?;
        let mut universe = BTreeSet::new();
        for (label, p) in &entries {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            if !universe.insert(label.index) {
                return Err(Error::DuplicateLabel(label.index));
            }
        }
        for (i, (la, pa)) in entries.iter().enumerate() {
            for (lb, pb) in &entries[i + 1..] {
                let dev = (pa.matrix() * pb.matrix()).max_abs();
                if dev > tol {
                    return Err(Error::NotOrthogonal {
                        a: la.index,
                        b: lb.index,
                        deviation: dev.to_f64_lossy(),
                    });
                }
            }
        }
        let total = entries
            .iter()
            .fold(ComplexMatrix::zeros(dim, dim), |acc, (_, p)| {
                &acc + p.matrix()
            });
        let dev = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if dev > tol {
            return Err(Error::NotComplete {
                deviation: dev.to_f64_lossy(),
            });
        }
        Ok(Self {
            entries,
            universe: Arc::new(universe),
            dim,
        })
    }

    /// Resolution built from computational-basis projectors, one entry per
    /// block of basis indices. Block `i` gets label `i`.
    pub fn from_basis(dim: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let entries = blocks
            .iter()
            .enumerate()
            .map(|(i, block)| {
                if block.is_empty() {
                    return Err(Error::EmptyBlock(i));
                }
                Ok((SpectralLabel::new(i), Projector::basis(dim, block)?))
            })
            .collect::<Result<Vec<_>>>()?;
        // basis projectors are exact, so any failure here is a real overlap or gap
        Self::new(entries, T::zero())
    }

    /// Rank-one projectors onto each computational basis vector.
    pub fn computational(dim: usize) -> Self {
        let blocks: Vec<Vec<usize>> = (0..dim).map(|i| vec![i]).collect();
        Self::from_basis(dim, &blocks).expect("computational basis is a resolution")
    }

    /// The single-outcome resolution `{identity}`.
    pub fn trivial(dim: usize) -> Self {
        Self::from_trusted(vec![(SpectralLabel::new(0), Projector::identity(dim))])
    }

    pub(crate) fn from_trusted(entries: Vec<(SpectralLabel, Projector<T>)>) -> Self {
        let dim = entries[0].1.dim();
        let universe = entries.iter().map(|(l, _)| l.index).collect();
        Self {
            entries,
            universe: Arc::new(universe),
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(SpectralLabel, Projector<T>)] {
        &self.entries
    }

    /// Label indices in resolution order.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(l, _)| l.index)
    }

    pub fn label(&self, index: usize) -> Option<&SpectralLabel> {
        self.entries
            .iter()
            .find(|(l, _)| l.index == index)
            .map(|(l, _)| l)
    }

    pub fn projector(&self, index: usize) -> Option<&Projector<T>> {
        self.entries
            .iter()
            .find(|(l, _)| l.index == index)
            .map(|(_, p)| p)
    }

    /// Looks a label up by display name.
    pub fn label_by_name(&self, name: &str) -> Option<usize> {
        self.entries
            .iter()
            .find(|(l, _)| l.name.as_deref() == Some(name))
            .map(|(l, _)| l.index)
    }

    pub fn outcome(&self, labels: impl IntoIterator<Item = usize>) -> Result<Outcome> {
        let labels: BTreeSet<usize> = labels.into_iter().collect();
        if labels.is_empty() {
            return Err(Error::EmptyOutcome);
        }
        if let Some(&bad) = labels.iter().find(|l| !self.universe.contains(l)) {
            return Err(Error::UnknownLabel(bad));
        }
        Ok(Outcome {
            labels,
            universe: Arc::clone(&self.universe),
        })
    }

    pub fn singleton(&self, label: usize) -> Result<Outcome> {
        self.outcome([label])
    }

    /// The outcome containing every label.
    pub fn full_outcome(&self) -> Outcome {
        Outcome {
            labels: (*self.universe).clone(),
            universe: Arc::clone(&self.universe),
        }
    }

    /// True if `o` draws from this resolution's labels.
    pub fn admits(&self, o: &Outcome) -> bool {
        *o.universe == *self.universe
    }

    /// `Σ_{a∈o} P_a`.
    pub fn outcome_projector(&self, o: &Outcome) -> Result<Projector<T>> {
        if !self.admits(o) {
            return Err(Error::ResolutionMismatch);
        }
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for (label, p) in &self.entries {
            if o.labels.contains(&label.index) {
                acc = &acc + p.matrix();
            }
        }
        Ok(Projector::from_trusted(acc))
    }

    /// Merges projectors block by block. Block identifiers become the new labels.
    pub fn coarsen(&self, partition: &Partition) -> Result<Self> {
        for &label in partition.assignment.keys() {
            if !self.universe.contains(&label) {
                return Err(Error::UnknownLabel(label));
            }
        }
        if let Some(missing) = self
            .labels()
            .find(|l| !partition.assignment.contains_key(l))
        {
            return Err(Error::PartitionNotTotal(missing));
        }
        let mut blocks: BTreeMap<usize, Vec<&(SpectralLabel, Projector<T>)>> = BTreeMap::new();
        for entry in &self.entries {
            blocks
                .entry(partition.assignment[&entry.0.index])
                .or_default()
                .push(entry);
        }
        let entries = blocks
            .into_iter()
            .map(|(block, members)| {
                let sum = members
                    .iter()
                    .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, (_, p)| {
                        &acc + p.matrix()
                    });
                let name = if members.len() == 1 {
                    members[0].0.name.clone()
                } else {
                    let names: Option<Vec<&str>> =
                        members.iter().map(|(l, _)| l.name.as_deref()).collect();
                    names.map(|n| n.join("+"))
                };
                (
                    SpectralLabel { index: block, name },
                    Projector::from_trusted(sum),
                )
            })
            .collect();
        Ok(Self::from_trusted(entries))
    }

    pub(crate) fn map_projectors(&self, f: impl Fn(&Projector<T>) -> Projector<T>) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(l, p)| (l.clone(), f(p)))
                .collect(),
            universe: Arc::clone(&self.universe),
            dim: self.dim,
        }
    }
}

/// Validates a resolution of the identity.
pub fn make_resolution<T: Real>(
    entries: Vec<(SpectralLabel, Projector<T>)>,
    tol: T,
) -> Result<Resolution<T>> {
    Resolution::new(entries, tol)
}

pub fn outcome_projector<T: Real>(r: &Resolution<T>, o: &Outcome) -> Result<Projector<T>> {
    r.outcome_projector(o)
}

pub fn coarsen<T: Real>(r: &Resolution<T>, p: &Partition) -> Result<Resolution<T>> {
    r.coarsen(p)
}

/// Non-empty set of labels of one resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome {
    labels: BTreeSet<usize>,
    universe: Arc<BTreeSet<usize>>,
}

impl Outcome {
    pub fn labels(&self) -> &BTreeSet<usize> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.labels.len() == 1
    }

    /// True when every label of the resolution is included.
    pub fn is_full(&self) -> bool {
        self.labels.len() == self.universe.len()
    }

    pub fn same_resolution(&self, other: &Outcome) -> bool {
        self.universe == other.universe
    }

    pub fn is_subset(&self, other: &Outcome) -> Result<bool> {
        self.check(other)?;
        Ok(self.labels.is_subset(&other.labels))
    }

    pub fn union(&self, other: &Outcome) -> Result<Outcome> {
        self.check(other)?;
        Ok(Outcome {
            labels: self.labels.union(&other.labels).copied().collect(),
            universe: Arc::clone(&self.universe),
        })
    }

    pub fn intersection(&self, other: &Outcome) -> Result<Intersection<Outcome>> {
        self.check(other)?;
        let labels: BTreeSet<usize> = self.labels.intersection(&other.labels).copied().collect();
        Ok(if labels.is_empty() {
            Intersection::Empty
        } else {
            Intersection::NonEmpty(Outcome {
                labels,
                universe: Arc::clone(&self.universe),
            })
        })
    }

    fn check(&self, other: &Outcome) -> Result<()> {
        if self.same_resolution(other) {
            Ok(())
        } else {
            Err(Error::ResolutionMismatch)
        }
    }
}

pub fn outcome_subset(a: &Outcome, b: &Outcome) -> Result<bool> {
    a.is_subset(b)
}

pub fn outcome_union(a: &Outcome, b: &Outcome) -> Result<Outcome> {
    a.union(b)
}

pub fn outcome_intersection(a: &Outcome, b: &Outcome) -> Result<Intersection<Outcome>> {
    a.intersection(b)
}

/// Result of intersecting outcomes or histories; the empty set is not an outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Intersection<X> {
    NonEmpty(X),
    Empty,
}

impl<X> Intersection<X> {
    pub fn is_empty(&self) -> bool {
        matches!(self, Intersection::Empty)
    }

    pub fn into_option(self) -> Option<X> {
        match self {
            Intersection::NonEmpty(x) => Some(x),
            Intersection::Empty => None,
        }
    }
}

/// Assignment of fine labels to coarse blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignment: BTreeMap<usize, usize>,
}

impl Partition {
    /// From an explicit label → block map.
    pub fn new(assignment: BTreeMap<usize, usize>) -> Self {
        Self { assignment }
    }

    /// Block `i` holds the labels in `blocks[i]`.
    pub fn from_blocks(blocks: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for (block, labels) in blocks.iter().enumerate() {
            if labels.is_empty() {
                return Err(Error::EmptyBlock(block));
            }
            for &label in labels {
                if assignment.insert(label, block).is_some() {
                    return Err(Error::DuplicateLabel(label));
                }
            }
        }
        Ok(Self { assignment })
    }

    /// Every label in its own block, keeping the label as block id.
    pub fn identity<T: Real>(r: &Resolution<T>) -> Self {
        Self {
            assignment: r.labels().map(|l| (l, l)).collect(),
        }
    }

    pub fn block_of(&self, label: usize) -> Option<usize> {
        self.assignment.get(&label).copied()
    }

    /// Labels grouped by block id.
    pub fn blocks(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&label, &block) in &self.assignment {
            out.entry(block).or_default().push(label);
        }
        out
    }

    /// Every split of `labels` into two non-empty blocks, each listed once.
    /// The first label always lands in block 0.
    pub fn two_block_splits(labels: &[usize]) -> Vec<Partition> {
        let n = labels.len();
        if n < 2 || n >= usize::BITS as usize {
            return Vec::new();
        }
        // bit i (i ≥ 1) set means labels[i] goes to block 1
        (1..(1usize << (n - 1)))
            .map(|mask| Self {
                assignment: labels
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| {
                        (
                            l,
                            if i > 0 && (mask >> (i - 1)) & 1 == 1 {
                                1
                            } else {
                                0
                            },
                        )
                    })
                    .collect(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::DEFAULT_TOL;

    fn z() -> Resolution<f64> {
        Resolution::computational(2)
    }

    fn plus_x() -> Projector<f64> {
        Projector::new(
            ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap()
    }

    #[test]
    fn z_basis_resolution_is_valid() {
        let r = make_resolution(
            vec![
                (SpectralLabel::new(0), Projector::basis(2, &[0]).unwrap()),
                (SpectralLabel::new(1), Projector::basis(2, &[1]).unwrap()),
            ],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r, z());
    }

    #[test]
    fn non_orthogonal_pair_rejected() {
        let err = make_resolution(
            vec![
                (SpectralLabel::new(0), Projector::basis(2, &[0]).unwrap()),
                (SpectralLabel::new(1), plus_x()),
            ],
            DEFAULT_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotOrthogonal { a: 0, b: 1, .. }));
    }

    #[test]
    fn incomplete_family_rejected() {
        let err = make_resolution(
            vec![(
                SpectralLabel::new(0),
                Projector::<f64>::basis(2, &[0]).unwrap(),
            )],
            DEFAULT_TOL,
        )
        .unwrap_err();
        match err {
            Error::NotComplete { deviation } => assert_eq!(deviation, 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_label_rejected() {
        let err = make_resolution(
            vec![
                (
                    SpectralLabel::new(3),
                    Projector::<f64>::basis(2, &[0]).unwrap(),
                ),
                (SpectralLabel::new(3), Projector::basis(2, &[1]).unwrap()),
            ],
            DEFAULT_TOL,
        )
        .unwrap_err();
        assert_eq!(err, Error::DuplicateLabel(3));
    }

    #[test]
    fn trivial_resolution_is_valid() {
        let r = make_resolution(
            vec![(SpectralLabel::new(0), Projector::<f64>::identity(2))],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(r, Resolution::trivial(2));
    }

    #[test]
    fn outcome_projectors() {
        let r = z();
        let p0 = r.outcome_projector(&r.singleton(0).unwrap()).unwrap();
        assert_eq!(p0.matrix(), &ComplexMatrix::from_diagonal(&[1.0, 0.0]));
        let all = r.outcome_projector(&r.full_outcome()).unwrap();
        assert_eq!(all.matrix(), &ComplexMatrix::identity(2));

        let r3 = Resolution::<f64>::computational(3);
        let p02 = r3.outcome_projector(&r3.outcome([0, 2]).unwrap()).unwrap();
        assert_eq!(
            p02.matrix(),
            &ComplexMatrix::from_diagonal(&[1.0, 0.0, 1.0])
        );
    }

    #[test]
    fn unknown_label_and_empty_outcome() {
        assert_eq!(z().outcome([5]).unwrap_err(), Error::UnknownLabel(5));
        assert_eq!(z().outcome([]).unwrap_err(), Error::EmptyOutcome);
    }

    #[test]
    fn coarsen_by_parity() {
        let r = Resolution::<f64>::computational(4);
        let parity = Partition::from_blocks(&[vec![0, 3], vec![1, 2]]).unwrap();
        let coarse = r.coarsen(&parity).unwrap();
        assert_eq!(coarse.len(), 2);
        assert!(coarse.entries().iter().all(|(_, p)| p.rank() == 2));
        assert_eq!(
            coarse.projector(0).unwrap().matrix(),
            &ComplexMatrix::from_diagonal(&[1.0, 0.0, 0.0, 1.0])
        );
    }

    #[test]
    fn coarsen_identity_and_single_block() {
        let r = Resolution::<f64>::computational(3);
        assert_eq!(r.coarsen(&Partition::identity(&r)).unwrap(), r);
        let one = Partition::from_blocks(&[vec![0, 1, 2]]).unwrap();
        assert_eq!(r.coarsen(&one).unwrap(), Resolution::trivial(3));
    }

    #[test]
    fn coarsen_requires_total_partition() {
        let r = Resolution::<f64>::computational(3);
        let partial = Partition::from_blocks(&[vec![0, 1]]).unwrap();
        assert_eq!(
            r.coarsen(&partial).unwrap_err(),
            Error::PartitionNotTotal(2)
        );
    }

    #[test]
    fn outcome_set_operations() {
        let r = z();
        let o0 = r.singleton(0).unwrap();
        let o1 = r.singleton(1).unwrap();
        let both = r.full_outcome();
        assert!(outcome_subset(&o0, &both).unwrap());
        assert_eq!(outcome_union(&o0, &o1).unwrap(), both);
        assert!(outcome_intersection(&o0, &o1).unwrap().is_empty());
        assert_eq!(
            outcome_intersection(&o0, &both).unwrap(),
            Intersection::NonEmpty(o0.clone())
        );
    }

    #[test]
    fn outcomes_of_different_resolutions_do_not_mix() {
        let a = z().singleton(0).unwrap();
        let b = Resolution::<f64>::computational(3).singleton(0).unwrap();
        assert_eq!(a.union(&b).unwrap_err(), Error::ResolutionMismatch);
    }

    #[test]
    fn two_block_splits_enumerates_each_split_once() {
        assert_eq!(Partition::two_block_splits(&[0]).len(), 0);
        assert_eq!(Partition::two_block_splits(&[0, 1]).len(), 1);
        // Stirling S(4,2) = 7
        let splits = Partition::two_block_splits(&[0, 1, 2, 3]);
        assert_eq!(splits.len(), 7);
        for s in &splits {
            assert_eq!(s.blocks().len(), 2);
        }
    }
}
