//! Seeded random states, unitaries, resolutions and whole families.
//!
//! All generators draw from a caller-supplied RNG; [`rng`] gives the
//! ChaCha generator used everywhere a seed is reported.

use nalgebra::{Complex, DMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{DynamicsSchedule, DynamicsSpec, TimeGrid};
use crate::history::HistoryFamily;
use crate::operator::{ComplexMatrix, DensityState, Projector, DEFAULT_TOL};
use crate::scalar::{lit, Real};
use crate::spectral::{Resolution, SpectralLabel};

/// Seed used when the caller supplies none.
pub const DEFAULT_SEED: u64 = 0x5eed_2024;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of independent standard complex Gaussians.
pub fn ginibre<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> DMatrix<Complex<T>> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(lit(re), lit(im))
    })
}

/// `G G† / Tr(G G†)` with `G` Ginibre.
pub fn random_state<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityState<T> {
    let g = ginibre::<T, _>(rng, dim, dim);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    let m = ComplexMatrix::from_dmatrix(w * Complex::new(T::one() / tr, T::zero()))
        .expect("finite Gaussian sample");
    DensityState::from_trusted(m)
}

/// `count` states from a fresh generator seeded with `seed`.
pub fn random_states<T: Real>(dim: usize, count: usize, seed: u64) -> Vec<DensityState<T>> {
    let mut r = rng(seed);
    (0..count).map(|_| random_state(&mut r, dim)).collect()
}

/// Unitary from the QR factor of a Ginibre matrix.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix<T> {
    let q = ginibre::<T, _>(rng, dim, dim).qr().q();
    ComplexMatrix::from_dmatrix(q).expect("finite QR factor")
}

/// `(G + G†) / 2`.
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix<T> {
    let g = ginibre::<T, _>(rng, dim, dim);
    let h = (&g + g.adjoint()) * Complex::new(lit::<T>(0.5), T::zero());
    ComplexMatrix::from_dmatrix(h).expect("finite Gaussian sample")
}

/// Splits `0..dim` into `blocks` non-empty random groups.
pub fn random_blocks<R: Rng + ?Sized>(rng: &mut R, dim: usize, blocks: usize) -> Vec<Vec<usize>> {
    assert!(blocks >= 1 && blocks <= dim, "need 1 ≤ blocks ≤ dim");
    let mut idx: Vec<usize> = (0..dim).collect();
    idx.shuffle(rng);
    let mut out: Vec<Vec<usize>> = idx[..blocks].iter().map(|&i| vec![i]).collect();
    for &i in &idx[blocks..] {
        out[rng.random_range(0..blocks)].push(i);
    }
    for b in &mut out {
        b.sort_unstable();
    }
    out
}

/// Resolution into `size` projectors spanned by groups of columns of a
/// random unitary.
pub fn random_resolution<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    size: usize,
) -> Resolution<T> {
    let u = random_unitary::<T, _>(rng, dim).into_dmatrix();
    let blocks = random_blocks(rng, dim, size);
    let entries = blocks
        .iter()
        .enumerate()
        .map(|(label, cols)| {
            let mut p = DMatrix::zeros(dim, dim);
            for &c in cols {
                let v = u.column(c);
                p += v * v.adjoint();
            }
            let p = ComplexMatrix::from_dmatrix(p).expect("finite projector");
            (
                SpectralLabel::new(label),
                Projector::new(p, T::floor_tol(1e-9)).expect("orthonormal columns"),
            )
        })
        .collect();
    Resolution::new(entries, T::floor_tol(1e-9)).expect("orthonormal columns resolve the identity")
}

/// Shape parameters for [`random_family`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyShape {
    pub dim: usize,
    pub slots: usize,
    pub max_resolution_size: usize,
}

/// Family with random dynamics (Hamiltonian or explicit steps), random
/// resolutions, state, reference slot and present slot.
pub fn random_family<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    shape: FamilyShape,
) -> HistoryFamily<T> {
    let FamilyShape {
        dim,
        slots,
        max_resolution_size,
    } = shape;
    let mut times = Vec::with_capacity(slots);
    let mut t = 0.0f64;
    for _ in 0..slots {
        times.push(lit::<T>(t));
        t += rng.random_range(0.1..2.0);
    }
    let present = rng.random_range(0..slots);
    let reference = rng.random_range(0..slots);
    let grid = TimeGrid::new(times, present).expect("increasing times");
    let spec = if rng.random_bool(0.5) {
        DynamicsSpec::Hamiltonian(random_hermitian(rng, dim))
    } else {
        DynamicsSpec::Steps((1..slots).map(|_| random_unitary(rng, dim)).collect())
    };
    let schedule = DynamicsSchedule::new(grid, &spec, reference, T::floor_tol(1e-9))
        .expect("valid random dynamics");
    let max_size = max_resolution_size.min(dim).max(1);
    let resolutions = (0..slots)
        .map(|_| {
            let size = rng.random_range(1..=max_size);
            random_resolution(rng, dim, size)
        })
        .collect();
    let state = random_state(rng, dim);
    HistoryFamily::with_tolerance(schedule, resolutions, state, T::floor_tol(DEFAULT_TOL))
        .expect("consistent dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_are_valid_and_reproducible() {
        let a = random_states::<f64>(4, 3, 7);
        let b = random_states::<f64>(4, 3, 7);
        assert_eq!(a, b);
        for s in &a {
            DensityState::new(s.matrix().clone(), 1e-10).unwrap();
        }
    }

    #[test]
    fn unitaries_are_unitary() {
        let mut r = rng(1);
        for d in [1, 2, 5, 8] {
            let u = random_unitary::<f64, _>(&mut r, d);
            assert!(u.unitary_deviation().unwrap() < 1e-12);
        }
    }

    #[test]
    fn blocks_partition_the_basis() {
        let mut r = rng(3);
        let blocks = random_blocks(&mut r, 8, 3);
        assert_eq!(blocks.len(), 3);
        let mut all: Vec<usize> = blocks.concat();
        all.sort_unstable();
        assert_eq!(all, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn random_family_has_requested_shape() {
        let mut r = rng(11);
        let f = random_family::<f64, _>(
            &mut r,
            FamilyShape {
                dim: 4,
                slots: 3,
                max_resolution_size: 4,
            },
        );
        assert_eq!(f.dim(), 4);
        assert_eq!(f.slots(), 3);
        assert!(f
            .resolutions()
            .iter()
            .all(|res| (1..=4).contains(&res.len())));
    }
}
