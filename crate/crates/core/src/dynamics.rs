//! Time grids, unitary propagation and the Heisenberg-picture lift.
//!
//! The state is fixed at a reference slot. Slot `k` carries the cumulative
//! unitary `U_k` taking the reference time to `t_k`, so a Schrödinger
//! projector `P` becomes `U_k† P U_k` at that slot.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::operator::{ComplexMatrix, Projector};
use crate::scalar::{lit, Real};
use crate::spectral::Resolution;

/// Strictly increasing sample times with a designated present slot.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid<T: Real> {
    times: Vec<T>,
    present_index: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(times: Vec<T>, present_index: usize) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if let Some(k) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::NonFiniteTime(k));
        }
        if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTimes(k + 1));
        }
        if present_index >= times.len() {
            return Err(Error::SlotOutOfRange {
                slot: present_index,
                slots: times.len(),
            });
        }
        Ok(Self {
            times,
            present_index,
        })
    }

    /// Evenly spaced grid `0, dt, 2dt, …`.
    pub fn uniform(slots: usize, dt: T, present_index: usize) -> Result<Self> {
        let times = (0..slots).map(|k| dt * lit::<T>(k as f64)).collect();
        Self::new(times, present_index)
    }

    pub fn slots(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn time(&self, slot: usize) -> T {
        self.times[slot]
    }

    pub fn present_index(&self) -> usize {
        self.present_index
    }

    /// Signed offset from the present: the present slot is 0, the past negative.
    pub fn relative(&self, slot: usize) -> isize {
        slot as isize - self.present_index as isize
    }

    pub fn slot_at_relative(&self, offset: isize) -> Option<usize> {
        let slot = self.present_index as isize + offset;
        (0..self.slots() as isize)
            .contains(&slot)
            .then_some(slot as usize)
    }

    /// Slot whose time equals `t` exactly.
    pub fn slot_at_time(&self, t: T) -> Option<usize> {
        self.times.iter().position(|&s| s == t)
    }
}

/// How the system evolves between slots.
#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsSpec<T: Real> {
    /// Time-independent Hamiltonian.
    Hamiltonian(ComplexMatrix<T>),
    /// One unitary per consecutive pair of slots.
    Steps(Vec<ComplexMatrix<T>>),
}

impl<T: Real> DynamicsSpec<T> {
    /// `H = 0`.
    pub fn trivial(dim: usize) -> Self {
        DynamicsSpec::Hamiltonian(ComplexMatrix::zeros(dim, dim))
    }
}

/// `exp(-i H dt)` via the Hermitian eigendecomposition of `H`.
pub fn propagator<T: Real>(h: &ComplexMatrix<T>, dt: T, tol: T) -> Result<ComplexMatrix<T>> {
    let dev = h.hermitian_deviation()?;
    if dev > tol {
        return Err(Error::NotHermitian {
            deviation: dev.to_f64_lossy(),
        });
    }
    let half: T = lit(0.5);
    let herm = (h + &h.adjoint()).scale_real(half);
    let (values, vectors) = herm.hermitian_eigen();
    let n = values.len();
    let phases = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            let angle = -values[r] * dt;
            Complex::new(angle.cos(), angle.sin())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    ComplexMatrix::from_dmatrix(&vectors * phases * vectors.adjoint())
}

/// Time grid plus the cumulative unitaries from the reference slot.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsSchedule<T: Real> {
    grid: TimeGrid<T>,
    reference: usize,
    cumulative: Vec<ComplexMatrix<T>>,
    steps: Vec<ComplexMatrix<T>>,
}

impl<T: Real> DynamicsSchedule<T> {
    pub fn new(
        grid: TimeGrid<T>,
        spec: &DynamicsSpec<T>,
        reference: usize,
        tol: T,
    ) -> Result<Self> {
        let slots = grid.slots();
        if reference >= slots {
            return Err(Error::SlotOutOfRange {
                slot: reference,
                slots,
            });
        }
        match spec {
            DynamicsSpec::Hamiltonian(h) => {
                let dim = h.dim()?;
                let t_ref = grid.time(reference);
                let cumulative = (0..slots)
                    .map(|k| {
                        if k == reference {
                            Ok(ComplexMatrix::identity(dim))
                        } else {
                            propagator(h, grid.time(k) - t_ref, tol)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let steps = grid
                    .times()
                    .windows(2)
                    .map(|w| propagator(h, w[1] - w[0], tol))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Self {
                    grid,
                    reference,
                    cumulative,
                    steps,
                })
            }
            DynamicsSpec::Steps(steps) => {
                if steps.len() + 1 != slots {
                    return Err(Error::CountMismatch {
                        expected: slots - 1,
                        found: steps.len(),
                    });
                }
                let dim = match steps.first() {
                    Some(u) => u.dim()?,
                    // single slot; dimension is fixed by the rest of the family
                    None => return Ok(Self::single_slot(grid)),
                };
                for u in steps {
                    if u.dim()? != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: u.nrows(),
                        });
                    }
                    let dev = u.unitary_deviation()?;
                    if dev > tol {
                        return Err(Error::NotUnitary {
                            deviation: dev.to_f64_lossy(),
                        });
                    }
                }
                let mut cumulative = vec![ComplexMatrix::identity(dim); slots];
                for k in reference + 1..slots {
                    cumulative[k] = &steps[k - 1] * &cumulative[k - 1];
                }
                for k in (0..reference).rev() {
                    cumulative[k] = &steps[k].adjoint() * &cumulative[k + 1];
                }
                Ok(Self {
                    grid,
                    reference,
                    cumulative,
                    steps: steps.clone(),
                })
            }
        }
    }

    /// Schedule for a one-slot grid; carries no matrices until a dimension is known.
    fn single_slot(grid: TimeGrid<T>) -> Self {
        Self {
            grid,
            reference: 0,
            cumulative: Vec::new(),
            steps: Vec::new(),
        }
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn slots(&self) -> usize {
        self.grid.slots()
    }

    pub fn reference(&self) -> usize {
        self.reference
    }

    /// Dimension, if the schedule carries any matrices.
    pub fn dim(&self) -> Option<usize> {
        self.cumulative.first().map(|u| u.nrows())
    }

    /// `U_k`, or `None` for a matrix-free single-slot schedule.
    pub fn cumulative(&self, slot: usize) -> Option<&ComplexMatrix<T>> {
        self.cumulative.get(slot)
    }

    /// Unitary taking slot `k` to slot `k + 1` in the Schrödinger picture.
    pub fn step(&self, slot: usize) -> Option<&ComplexMatrix<T>> {
        self.steps.get(slot)
    }

    /// `U_k† P U_k`.
    pub fn heisenberg_projector(&self, slot: usize, p: &Projector<T>) -> Result<Projector<T>> {
        if slot >= self.slots() {
            return Err(Error::SlotOutOfRange {
                slot,
                slots: self.slots(),
            });
        }
        let Some(u) = self.cumulative.get(slot) else {
            return Ok(p.clone());
        };
        if u.nrows() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: p.dim(),
            });
        }
        Ok(Projector::from_trusted(&(&u.adjoint() * p.matrix()) * u))
    }

    /// Lifts every projector of a resolution to slot `k`.
    pub fn heisenberg_resolution(&self, slot: usize, r: &Resolution<T>) -> Result<Resolution<T>> {
        if slot >= self.slots() {
            return Err(Error::SlotOutOfRange {
                slot,
                slots: self.slots(),
            });
        }
        let Some(u) = self.cumulative.get(slot) else {
            return Ok(r.clone());
        };
        if u.nrows() != r.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.nrows(),
                found: r.dim(),
            });
        }
        let u_dag = u.adjoint();
        Ok(r.map_projectors(|p| Projector::from_trusted(&(&u_dag * p.matrix()) * u)))
    }
}

pub fn build_schedule<T: Real>(
    grid: TimeGrid<T>,
    spec: &DynamicsSpec<T>,
    reference: usize,
    tol: T,
) -> Result<DynamicsSchedule<T>> {
    DynamicsSchedule::new(grid, spec, reference, tol)
}

pub fn heisenberg_projector<T: Real>(
    schedule: &DynamicsSchedule<T>,
    slot: usize,
    p: &Projector<T>,
) -> Result<Projector<T>> {
    schedule.heisenberg_projector(slot, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{make_projector, DEFAULT_TOL};
    use std::f64::consts::PI;

    fn sigma_x() -> ComplexMatrix<f64> {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    fn sigma_z() -> ComplexMatrix<f64> {
        ComplexMatrix::from_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = propagator(&ComplexMatrix::<f64>::zeros(3, 3), 1.7, DEFAULT_TOL).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn diagonal_hamiltonian_phases() {
        let (w, dt) = (1.3, 0.7);
        let h = ComplexMatrix::from_diagonal(&[0.0, w]);
        let u = propagator(&h, dt, DEFAULT_TOL).unwrap();
        let expected = ComplexMatrix::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            vec![
                Complex::new(0.0, 0.0),
                Complex::new((w * dt).cos(), -(w * dt).sin()),
            ],
        ])
        .unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn sigma_x_quarter_turn() {
        // cos(π/2)·I − i·sin(π/2)·σx = −i·σx
        let u = propagator(&sigma_x(), PI / 2.0, DEFAULT_TOL).unwrap();
        let expected = sigma_x().scale(Complex::new(0.0, -1.0));
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn propagator_rejects_non_hermitian() {
        let h = ComplexMatrix::<f64>::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            propagator(&h, 1.0, DEFAULT_TOL),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn grid_validation() {
        assert_eq!(
            TimeGrid::<f64>::new(vec![], 0).unwrap_err(),
            Error::EmptyGrid
        );
        assert_eq!(
            TimeGrid::new(vec![0.0, 1.0, 1.0], 0).unwrap_err(),
            Error::NonMonotoneTimes(2)
        );
        assert!(matches!(
            TimeGrid::new(vec![0.0], 1),
            Err(Error::SlotOutOfRange { .. })
        ));
        let g = TimeGrid::new(vec![0.0, 1.0, 2.5], 1).unwrap();
        assert_eq!(g.relative(0), -1);
        assert_eq!(g.slot_at_relative(1), Some(2));
        assert_eq!(g.slot_at_relative(2), None);
        assert_eq!(g.slot_at_time(2.5), Some(2));
    }

    #[test]
    fn trivial_dynamics_schedule() {
        let grid = TimeGrid::new(vec![0.0, 0.4, 1.1], 2).unwrap();
        let s = build_schedule(grid, &DynamicsSpec::trivial(2), 0, DEFAULT_TOL).unwrap();
        for k in 0..3 {
            assert!(
                s.cumulative(k)
                    .unwrap()
                    .max_abs_diff(&ComplexMatrix::identity(2))
                    < 1e-15
            );
        }
    }

    #[test]
    fn single_slot_schedule() {
        let grid = TimeGrid::new(vec![0.0], 0).unwrap();
        let s = build_schedule(grid, &DynamicsSpec::trivial(2), 0, DEFAULT_TOL).unwrap();
        assert_eq!(s.cumulative(0).unwrap(), &ComplexMatrix::identity(2));
    }

    #[test]
    fn one_step_composition() {
        let w = propagator(&sigma_x(), 0.3, DEFAULT_TOL).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0], 0).unwrap();
        let s =
            build_schedule(grid, &DynamicsSpec::Steps(vec![w.clone()]), 0, DEFAULT_TOL).unwrap();
        assert_eq!(s.cumulative(0).unwrap(), &ComplexMatrix::identity(2));
        assert_eq!(s.cumulative(1).unwrap(), &w);
    }

    #[test]
    fn reference_in_the_middle_inverts_earlier_steps() {
        let w0 = propagator(&sigma_x(), 0.3, DEFAULT_TOL).unwrap();
        let w1 = propagator(&sigma_z(), 0.9, DEFAULT_TOL).unwrap();
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0], 0).unwrap();
        let s = build_schedule(
            grid,
            &DynamicsSpec::Steps(vec![w0.clone(), w1.clone()]),
            1,
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(s.cumulative(1).unwrap(), &ComplexMatrix::identity(2));
        assert!(s.cumulative(0).unwrap().max_abs_diff(&w0.adjoint()) < 1e-15);
        assert!(s.cumulative(2).unwrap().max_abs_diff(&w1) < 1e-15);
    }

    #[test]
    fn step_count_and_unitarity_checked() {
        let grid = TimeGrid::new(vec![0.0, 1.0, 2.0], 0).unwrap();
        let err = build_schedule(
            grid.clone(),
            &DynamicsSpec::Steps(vec![sigma_x()]),
            0,
            DEFAULT_TOL,
        )
        .unwrap_err();
        assert_eq!(
            err,
            Error::CountMismatch {
                expected: 2,
                found: 1
            }
        );
        let bad = ComplexMatrix::identity(2).scale_real(2.0);
        let err = build_schedule(
            grid,
            &DynamicsSpec::Steps(vec![bad.clone(), bad]),
            0,
            DEFAULT_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotUnitary { .. }));
    }

    #[test]
    fn hamiltonian_schedule_matches_direct_exponentials() {
        let grid = TimeGrid::new(vec![0.0, 0.5, 1.75], 0).unwrap();
        let h = &sigma_x() + &sigma_z().scale_real(0.3);
        let s =
            build_schedule(grid, &DynamicsSpec::Hamiltonian(h.clone()), 2, DEFAULT_TOL).unwrap();
        let direct = propagator(&h, 0.5 - 1.75, DEFAULT_TOL).unwrap();
        assert!(s.cumulative(1).unwrap().max_abs_diff(&direct) < 1e-13);
        assert_eq!(s.cumulative(2).unwrap(), &ComplexMatrix::identity(2));
    }

    #[test]
    fn identity_and_unit_lift_are_fixed() {
        let grid = TimeGrid::new(vec![0.0, 1.0], 0).unwrap();
        let s =
            build_schedule(grid, &DynamicsSpec::Hamiltonian(sigma_x()), 0, DEFAULT_TOL).unwrap();
        let id = Projector::identity(2);
        let lifted = s.heisenberg_projector(1, &id).unwrap();
        assert!(lifted.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-14);
        let p = Projector::basis(2, &[0]).unwrap();
        assert_eq!(s.heisenberg_projector(0, &p).unwrap(), p);
        assert!(matches!(
            s.heisenberg_projector(2, &p),
            Err(Error::SlotOutOfRange { .. })
        ));
    }

    #[test]
    fn half_turn_about_z_flips_x() {
        // H = (ω/2)σz with ω·dt = π: U = diag(−i, i), so U†|+x⟩⟨+x|U = |−x⟩⟨−x|
        let omega = 2.0;
        let dt = PI / omega;
        let grid = TimeGrid::new(vec![0.0, dt], 0).unwrap();
        let h = sigma_z().scale_real(omega / 2.0);
        let s = build_schedule(grid, &DynamicsSpec::Hamiltonian(h), 0, DEFAULT_TOL).unwrap();
        let plus = make_projector(
            ComplexMatrix::from_real_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap(),
            DEFAULT_TOL,
        )
        .unwrap();
        let minus = ComplexMatrix::from_real_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let lifted = heisenberg_projector(&s, 1, &plus).unwrap();
        assert!(lifted.matrix().max_abs_diff(&minus) < 1e-14);
    }
}
