//! Gauge-fixed, continuously tracked instantaneous eigensystems along a time
//! grid, and the derivative couplings `<m(t)|dn(t)/dt>` built from them.
//!
//! Gauge convention: consecutive same-level overlaps are made real and
//! positive (discrete parallel transport up to normalization of the overlap
//! phase). Level identity is preserved by maximal-overlap matching, not by
//! energy sorting, so levels follow smoothly through avoided crossings.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{hermitian_eigen, hermiticity_residual, CMat, C64};
use crate::models::HamiltonianModel;

/// Instantaneous eigensystem at one grid time, in tracked level order.
#[derive(Debug, Clone)]
pub struct SpectralFrame {
    pub t: f64,
    /// Energies in tracked order (not re-sorted after the first frame).
    pub energies: DVector<f64>,
    /// Orthonormal eigenvectors as columns, same order as `energies`.
    pub states: CMat,
    /// Phase correction applied to each column by the gauge fixing, radians.
    pub gauge: Vec<f64>,
}

/// Derivative couplings at one grid time: `d[(m, n)] ~ <m(t)|dn(t)/dt>`.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub t: f64,
    pub d: CMat,
}

const HERMITICITY_TOL: f64 = 1e-12;

fn relative_degeneracy_tol(energies: &DVector<f64>) -> f64 {
    let emax = energies.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    1e-8 * emax.max(1.0)
}

fn check_degenerate(t: f64, energies: &DVector<f64>) -> Result<()> {
    let tol = relative_degeneracy_tol(energies);
    let mut sorted: Vec<f64> = energies.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap < tol {
            return Err(Error::DegeneracyDetected { t, gap, tol });
        }
    }
    Ok(())
}

/// Fix column phases so the first component above threshold is real positive.
fn canonical_phases(states: &mut CMat, gauge: &mut [f64]) {
    let n = states.ncols();
    for j in 0..n {
        let col = states.column(j);
        let lead = col.iter().find(|z| z.norm() > 1e-12);
        if let Some(z) = lead {
            let correction = -z.arg();
            gauge[j] += correction;
            let ph = C64::from_polar(1.0, correction);
            for i in 0..states.nrows() {
                states[(i, j)] *= ph;
            }
        }
    }
}

/// Permute `states`/`energies` columns to maximize overlap with `reference`,
/// greedily by descending overlap magnitude.
fn match_levels(reference: &CMat, energies: &mut DVector<f64>, states: &mut CMat) {
    let n = states.ncols();
    let overlap = reference.adjoint() * &*states;
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n);
    for m in 0..n {
        for j in 0..n {
            pairs.push((m, j, overlap[(m, j)].norm()));
        }
    }
    pairs.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut assigned = 0;
    for (m, j, _) in pairs {
        if perm[m] == usize::MAX && !used[j] {
            perm[m] = j;
            used[j] = true;
            assigned += 1;
            if assigned == n {
                break;
            }
        }
    }
    let old_states = states.clone();
    let old_energies = energies.clone();
    for m in 0..n {
        states.set_column(m, &old_states.column(perm[m]));
        energies[m] = old_energies[perm[m]];
    }
}

/// Rotate each column so its overlap with the same level in `previous` is
/// real positive; records the applied phase in `gauge`.
fn parallel_transport_phases(previous: &CMat, states: &mut CMat, gauge: &mut [f64]) {
    for j in 0..states.ncols() {
        let o: C64 = previous.column(j).dotc(&states.column(j));
        if o.norm() > 1e-300 {
            let correction = -o.arg();
            gauge[j] += correction;
            let ph = C64::from_polar(1.0, correction);
            for i in 0..states.nrows() {
                states[(i, j)] *= ph;
            }
        }
    }
}

/// Diagonalize `model` at every grid time with level tracking and the
/// real-positive-overlap gauge.
///
/// Frame 0 is matched against `reference` columns when provided, otherwise
/// ordered by ascending energy with the first-nonzero-component-real-positive
/// phase convention.
pub fn decompose_tracked(
    model: &dyn HamiltonianModel,
    grid: &TimeGrid,
    reference: Option<&CMat>,
) -> Result<Vec<SpectralFrame>> {
    let n = model.dimension();
    let mut frames: Vec<SpectralFrame> = Vec::with_capacity(grid.len());
    for t in grid.iter() {
        let h = model.hamiltonian(t);
        let residual = hermiticity_residual(&h);
        if residual > HERMITICITY_TOL * h.iter().fold(1.0f64, |a, z| a.max(z.norm())) {
            return Err(Error::NonHermitianInput { t, residual });
        }
        let (mut energies, mut states) = hermitian_eigen(&h);
        check_degenerate(t, &energies)?;
        let mut gauge = vec![0.0; n];
        match frames.last() {
            None => {
                if let Some(r) = reference {
                    match_levels(r, &mut energies, &mut states);
                    parallel_transport_phases(r, &mut states, &mut gauge);
                } else {
                    canonical_phases(&mut states, &mut gauge);
                }
            }
            Some(prev) => {
                match_levels(&prev.states, &mut energies, &mut states);
                parallel_transport_phases(&prev.states, &mut states, &mut gauge);
            }
        }
        frames.push(SpectralFrame { t, energies, states, gauge });
    }
    Ok(frames)
}

/// Derivative couplings by central finite differences of the gauge-fixed
/// states; second-order one-sided stencils at the endpoints.
pub fn couplings(frames: &[SpectralFrame]) -> Result<Vec<CouplingMatrix>> {
    if frames.len() < 3 {
        return Err(Error::GridTooCoarse { residual: f64::INFINITY });
    }
    let dt = frames[1].t - frames[0].t;
    let last = frames.len() - 1;
    let mut out = Vec::with_capacity(frames.len());
    let inv2dt = C64::new(1.0 / (2.0 * dt), 0.0);
    for k in 0..frames.len() {
        let dstates: CMat = if k == 0 {
            (&frames[0].states * C64::new(-3.0, 0.0) + &frames[1].states * C64::new(4.0, 0.0)
                - &frames[2].states)
                * inv2dt
        } else if k == last {
            (&frames[last].states * C64::new(3.0, 0.0)
                - &frames[last - 1].states * C64::new(4.0, 0.0)
                + &frames[last - 2].states)
                * inv2dt
        } else {
            (&frames[k + 1].states - &frames[k - 1].states) * inv2dt
        };
        let d = frames[k].states.adjoint() * dstates;
        out.push(CouplingMatrix { t: frames[k].t, d });
    }
    // anti-Hermiticity follows from orthonormality; a large residual means
    // the finite differences cannot resolve the state motion
    let mut residual: f64 = 0.0;
    for cm in &out {
        residual = residual.max(hermiticity_anti_residual(&cm.d));
    }
    if residual > 1e-3 {
        return Err(Error::GridTooCoarse { residual });
    }
    Ok(out)
}

fn hermiticity_anti_residual(d: &CMat) -> f64 {
    let scale = d.iter().fold(1.0f64, |a, z| a.max(z.norm()));
    let mut r: f64 = 0.0;
    for i in 0..d.nrows() {
        for j in 0..d.ncols() {
            r = r.max((d[(i, j)] + d[(j, i)].conj()).norm());
        }
    }
    r / scale
}

/// Per-time adiabaticity ratios `r[(m, n)] = |d[(m, n)]| / |E_n - E_m|` for
/// `m != n`, zero on the diagonal, plus the global maximum.
pub struct AdiabaticityReport {
    pub per_time: Vec<nalgebra::DMatrix<f64>>,
    pub global_max: f64,
}

pub fn adiabaticity_ratio(
    frames: &[SpectralFrame],
    couplings: &[CouplingMatrix],
) -> Result<AdiabaticityReport> {
    assert_eq!(frames.len(), couplings.len());
    let mut per_time = Vec::with_capacity(frames.len());
    let mut global_max: f64 = 0.0;
    for (f, c) in frames.iter().zip(couplings) {
        check_degenerate(f.t, &f.energies)?;
        let n = f.energies.len();
        let mut r = nalgebra::DMatrix::<f64>::zeros(n, n);
        for m in 0..n {
            for j in 0..n {
                if m != j {
                    let gap = (f.energies[j] - f.energies[m]).abs();
                    r[(m, j)] = c.d[(m, j)].norm() / gap;
                    global_max = global_max.max(r[(m, j)]);
                }
            }
        }
        per_time.push(r);
    }
    Ok(AdiabaticityReport { per_time, global_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;
    use crate::models::{ConstantModel, MsModel, MsParams, SchwingerModel, SchwingerParams};
    use std::f64::consts::FRAC_PI_2;

    fn diag_model() -> ConstantModel {
        let m = CMat::from_row_slice(2, 2, &[
            C64::new(1.0, 0.0), C64::new(0.0, 0.0),
            C64::new(0.0, 0.0), C64::new(2.0, 0.0),
        ]);
        ConstantModel::new(m).unwrap()
    }

    #[test]
    fn constant_diagonal_frames_are_canonical_basis() {
        let model = diag_model();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        for f in &frames {
            assert!((f.energies[0] - 1.0).abs() < 1e-14);
            assert!((f.energies[1] - 2.0).abs() < 1e-14);
            assert!((f.states[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-14);
            assert!((f.states[(1, 1)] - C64::new(1.0, 0.0)).norm() < 1e-14);
        }
        let cs = couplings(&frames).unwrap();
        for c in &cs {
            assert!(c.d.iter().all(|z| z.norm() < 1e-10));
        }
        let ar = adiabaticity_ratio(&frames, &cs).unwrap();
        assert!(ar.global_max < 1e-10);
    }

    #[test]
    fn schwinger_energies_constant_per_frame() {
        let model = SchwingerModel::new(SchwingerParams::new(1.0, 1.0, 0.1).unwrap());
        let grid = TimeGrid::new(5.0, 500).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        for f in &frames {
            assert!((f.energies[0] + 1.0).abs() < 1e-12);
            assert!((f.energies[1] - 1.0).abs() < 1e-12);
            assert!(unitarity_residual(&f.states) < 1e-10);
        }
    }

    #[test]
    fn frame_invariants_on_ms_model() {
        let model = MsModel::new(MsParams::new(1.0, 0.1).unwrap());
        let grid = TimeGrid::new(std::f64::consts::TAU, 2000).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        for f in &frames {
            assert!(unitarity_residual(&f.states) < 1e-10);
            let h = model.hamiltonian(f.t);
            for j in 0..2 {
                let col = f.states.column(j).clone_owned();
                let resid = (&h * &col - &col * C64::new(f.energies[j], 0.0)).norm();
                assert!(resid < 1e-9);
            }
            // level 1 follows the closed form sqrt(omega0^2 + Omega^2 sin^2 omega0 t)
            assert!((f.energies[1] - model.e0(f.t)).abs() < 1e-9);
        }
        // consecutive overlaps real positive
        for w in frames.windows(2) {
            for j in 0..2 {
                let o: C64 = w[0].states.column(j).dotc(&w[1].states.column(j));
                assert!(o.im.abs() < 1e-12);
                assert!(o.re > 0.0);
            }
        }
    }

    #[test]
    fn gauge_fixing_idempotent() {
        let model = SchwingerModel::new(SchwingerParams::new(1.0, FRAC_PI_2, 0.1).unwrap());
        let grid = TimeGrid::new(3.0, 300).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        for w in frames.windows(2) {
            let mut states = w[1].states.clone();
            let mut gauge = vec![0.0; 2];
            parallel_transport_phases(&w[0].states, &mut states, &mut gauge);
            assert!(crate::linalg::max_abs_diff(&states, &w[1].states) < 1e-12);
        }
    }

    #[test]
    fn tracking_permutation_identity_on_fine_grid() {
        let model = MsModel::new(MsParams::new(1.0, 0.2).unwrap());
        let grid = TimeGrid::new(6.0, 1200).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        for w in frames.windows(2) {
            for j in 0..2 {
                let o: C64 = w[0].states.column(j).dotc(&w[1].states.column(j));
                assert!(o.norm() > 0.9);
            }
            // ascending order preserved implies no swap happened
            assert!(w[1].energies[0] < w[1].energies[1]);
        }
    }

    #[test]
    fn schwinger_diagonal_coupling_limit() {
        // d[1][1] -> i omega cos(theta) / 2 in the printed gauge; compare via
        // the gauge-stamped frames by adding back the transported phase rate.
        // In the parallel-transport gauge the diagonal coupling is ~0, so
        // check the off-diagonal magnitude instead (gauge invariant).
        let theta = std::f64::consts::FRAC_PI_3;
        let omega = 0.05;
        let model = SchwingerModel::new(SchwingerParams::new(1.0, theta, omega).unwrap());
        let grid = TimeGrid::new(10.0, 4000).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        let cs = couplings(&frames).unwrap();
        let expect = 0.5 * omega * theta.sin();
        for c in cs.iter().skip(1).take(cs.len() - 2) {
            assert!((c.d[(0, 1)].norm() - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn coupling_richardson_second_order() {
        // halving dt shrinks the off-diagonal coupling error ~4x
        let theta = std::f64::consts::FRAC_PI_3;
        let omega = 0.5;
        let model = SchwingerModel::new(SchwingerParams::new(1.0, theta, omega).unwrap());
        let expect = 0.5 * omega * theta.sin();
        let err = |steps: usize| {
            let grid = TimeGrid::new(4.0, steps).unwrap();
            let frames = decompose_tracked(&model, &grid, None).unwrap();
            let cs = couplings(&frames).unwrap();
            let mid = steps / 2;
            (cs[mid].d[(0, 1)].norm() - expect).abs()
        };
        let (e1, e2) = (err(200), err(400));
        let ratio = e1 / e2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}, errors {e1} {e2}");
    }

    #[test]
    fn adiabaticity_ratio_schwinger_closed_form() {
        let model = SchwingerModel::new(SchwingerParams::new(1.0, FRAC_PI_2, 0.1).unwrap());
        let grid = TimeGrid::new(10.0, 2000).unwrap();
        let frames = decompose_tracked(&model, &grid, None).unwrap();
        let cs = couplings(&frames).unwrap();
        let ar = adiabaticity_ratio(&frames, &cs).unwrap();
        // |<n1|dn2>| / gap = (omega sin(theta) / 2) / (2 b) = 0.025
        assert!((ar.global_max - 0.025).abs() < 1e-4);
    }

    #[test]
    fn adiabaticity_max_decreases_with_drive() {
        let max_for = |big_omega: f64| {
            let model = MsModel::new(MsParams::new(1.0, big_omega).unwrap());
            let grid = TimeGrid::new(std::f64::consts::TAU, 3000).unwrap();
            let frames = decompose_tracked(&model, &grid, None).unwrap();
            let cs = couplings(&frames).unwrap();
            adiabaticity_ratio(&frames, &cs).unwrap().global_max
        };
        let (a, b, c) = (max_for(0.2), max_for(0.1), max_for(0.05));
        assert!(a > b && b > c, "expected monotone decrease, got {a} {b} {c}");
    }

    #[test]
    fn degeneracy_is_hard_error() {
        let model = ConstantModel::new(CMat::identity(2, 2)).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        match decompose_tracked(&model, &grid, None) {
            Err(Error::DegeneracyDetected { .. }) => {}
            other => panic!("expected DegeneracyDetected, got {other:?}"),
        }
    }

    #[test]
    fn reference_frame_matching() {
        // supply the model's own closed-form frame at t = 0 as reference;
        // tracked level order then follows the paper's (+E, -E) convention
        let model = SchwingerModel::new(SchwingerParams::new(1.0, 1.0, 0.1).unwrap());
        let (_, reference) = model.eigensystem(0.0);
        let grid = TimeGrid::new(2.0, 200).unwrap();
        let frames = decompose_tracked(&model, &grid, Some(&reference)).unwrap();
        assert!((frames[0].energies[0] - 1.0).abs() < 1e-12);
        assert!((frames[0].energies[1] + 1.0).abs() < 1e-12);
    }
}
