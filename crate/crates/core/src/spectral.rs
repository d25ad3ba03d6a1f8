//! FFT-based differential operators on periodic grids.
//!
//! All operators act on the trigonometric interpolant of the sampled field
//! and are exact on band-limited data. Stored fields stay real: every
//! Fourier multiplier used here satisfies `m(-k) = conj(m(k))`, so the
//! imaginary part discarded after an inverse transform is pure round-off.
//!
//! First derivatives zero the Nyquist mode (its sign is ambiguous on the
//! real grid); even-order operators keep it.

use rustfft::num_complex::Complex;

use crate::error::{Result, SimError};
use crate::field::{AxialField, ScalarField, VectorField};
use crate::grid::{PeriodicGrid, SobolevOrder};

pub(crate) type Complex64 = Complex<f64>;

/// Relative mean tolerance for an admissible Poisson right-hand side.
pub const POISSON_MEAN_TOL: f64 = 1e-10;

fn transform_axis(grid: &PeriodicGrid, buf: &mut [Complex64], axis: usize, forward: bool) {
    let n = grid.points_per_dim();
    let stride = grid.stride(axis);
    let plans = grid.plans();
    let plan = if forward {
        &plans.forward
    } else {
        &plans.inverse
    };
    let mut line = vec![Complex64::default(); n];
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
    for base in 0..grid.total_points() {
        if grid.axis_index(base, axis) != 0 {
            continue;
        }
        for (j, l) in line.iter_mut().enumerate() {
            *l = buf[base + j * stride];
        }
        plan.process_with_scratch(&mut line, &mut scratch);
        for (j, l) in line.iter().enumerate() {
            buf[base + j * stride] = *l;
        }
    }
}

/// Forward transform; returns trigonometric-interpolant coefficients
/// (the raw FFT divided by the point count).
pub(crate) fn forward(f: &ScalarField) -> Vec<Complex64> {
    let grid = f.grid();
    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    for axis in 0..grid.dim() {
        transform_axis(grid, &mut buf, axis, true);
    }
    let scale = 1.0 / grid.total_points() as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
    buf
}

/// Inverse transform of interpolant coefficients back to real samples.
pub(crate) fn inverse(grid: &PeriodicGrid, mut spec: Vec<Complex64>) -> ScalarField {
    for axis in 0..grid.dim() {
        transform_axis(grid, &mut spec, axis, false);
    }
    ScalarField::from_values(grid, spec.iter().map(|c| c.re).collect())
        .expect("spectrum has grid size")
}

/// Scaled wavenumber along `axis` with the Nyquist mode zeroed, for odd
/// derivative multipliers.
#[inline]
fn k_first(grid: &PeriodicGrid, idx: usize, axis: usize) -> f64 {
    let k = grid.mode(idx, axis);
    if k == (grid.points_per_dim() / 2) as i64 {
        0.0
    } else {
        k as f64 * grid.k_scale()
    }
}

/// Exact spectral gradient. Each component has zero mean.
pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = f.grid();
    let spec = forward(f);
    let comps = (0..grid.dim())
        .map(|axis| {
            let mut s = spec.clone();
            for (idx, c) in s.iter_mut().enumerate() {
                let k = k_first(grid, idx, axis);
                *c *= Complex64::new(0.0, k);
            }
            inverse(grid, s)
        })
        .collect();
    VectorField::from_components(comps).expect("components share grid")
}

/// Exact spectral divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    assert_eq!(v.ncomp(), grid.dim(), "divergence needs dim components");
    let mut acc = vec![Complex64::default(); grid.total_points()];
    for axis in 0..grid.dim() {
        let spec = forward(v.comp(axis));
        for (idx, (a, c)) in acc.iter_mut().zip(spec.iter()).enumerate() {
            let k = k_first(grid, idx, axis);
            *a += c * Complex64::new(0.0, k);
        }
    }
    inverse(grid, acc)
}

/// Exact spectral Laplacian (keeps the Nyquist mode: even derivative).
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = forward(f);
    for (idx, c) in spec.iter_mut().enumerate() {
        let mut k2 = 0.0;
        for axis in 0..grid.dim() {
            let k = grid.mode(idx, axis) as f64 * grid.k_scale();
            k2 += k * k;
        }
        *c *= -k2;
    }
    inverse(grid, spec)
}

/// Curl of a 3-component field on a 3-D grid.
pub fn curl(v: &VectorField) -> VectorField {
    let grid = v.grid();
    assert_eq!(grid.dim(), 3, "curl is the 3-D rotation; see scalar_curl");
    let d = |comp: usize, axis: usize| -> ScalarField {
        let mut s = forward(v.comp(comp));
        for (idx, c) in s.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, k_first(grid, idx, axis));
        }
        inverse(grid, s)
    };
    let cx = d(2, 1).sub(&d(1, 2));
    let cy = d(0, 2).sub(&d(2, 0));
    let cz = d(1, 0).sub(&d(0, 1));
    VectorField::from_components(vec![cx, cy, cz]).expect("components share grid")
}

/// In-plane curl `∂₁v₂ − ∂₂v₁` of a 2-D field (out-of-plane component).
pub fn scalar_curl(v: &VectorField) -> ScalarField {
    let grid = v.grid();
    assert_eq!(grid.dim(), 2, "scalar_curl is the 2-D reduction");
    let d = |comp: usize, axis: usize| -> ScalarField {
        let mut s = forward(v.comp(comp));
        for (idx, c) in s.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, k_first(grid, idx, axis));
        }
        inverse(grid, s)
    };
    d(1, 0).sub(&d(0, 1))
}

/// Curl of an out-of-plane scalar `B ẑ` restricted to the plane:
/// `(∂₂B, −∂₁B)`.
pub fn perp_gradient(b: &ScalarField) -> VectorField {
    let grid = b.grid();
    assert_eq!(grid.dim(), 2, "perp_gradient is 2-D only");
    let g = gradient(b);
    VectorField::from_components(vec![g.comp(1).clone(), g.comp(0).scale(-1.0)])
        .expect("components share grid")
}

/// Curl of an axial field: a vector in both reductions.
pub fn curl_axial(b: &AxialField) -> VectorField {
    match b {
        AxialField::Scalar(f) => perp_gradient(f),
        AxialField::Vector(v) => curl(v),
    }
}

/// Curl of a vector field as an axial quantity (scalar in 2-D).
pub fn curl_to_axial(v: &VectorField) -> AxialField {
    match v.grid().dim() {
        2 => AxialField::Scalar(scalar_curl(v)),
        3 => AxialField::Vector(curl(v)),
        _ => panic!("curl undefined in 1-D"),
    }
}

/// Solves `Δφ = rhs` with the zero-mean gauge `∫φ dx = 0`.
///
/// The right-hand side must have (numerically) zero mean; otherwise the
/// periodic problem is inconsistent and [`SimError::NonZeroMeanRhs`] is
/// returned — typically a signal that `∫(b − n) dx` has drifted. The check
/// carries a small absolute allowance so that sources which are themselves
/// pure round-off (differences of analytically equal fields) pass.
pub fn poisson_solve(rhs: &ScalarField) -> Result<ScalarField> {
    let grid = rhs.grid();
    let max = rhs.max_norm();
    if max == 0.0 {
        return Ok(ScalarField::zeros(grid));
    }
    let mean = rhs.mean();
    if mean.abs() > POISSON_MEAN_TOL * max + 1e-14 {
        return Err(SimError::NonZeroMeanRhs { mean, max });
    }
    let mut spec = forward(rhs);
    for (idx, c) in spec.iter_mut().enumerate() {
        let mut k2 = 0.0;
        for axis in 0..grid.dim() {
            let k = grid.mode(idx, axis) as f64 * grid.k_scale();
            k2 += k * k;
        }
        if k2 == 0.0 {
            *c = Complex64::default();
        } else {
            *c /= -k2;
        }
    }
    Ok(inverse(grid, spec))
}

/// 2/3-rule truncation: zeroes every mode with any `|k_j| > n/3`.
/// Idempotent; applied to pointwise products of fields.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let cut = grid.dealias_cutoff();
    let mut spec = forward(f);
    for (idx, c) in spec.iter_mut().enumerate() {
        for axis in 0..grid.dim() {
            if grid.mode(idx, axis).abs() > cut {
                *c = Complex64::default();
                break;
            }
        }
    }
    inverse(grid, spec)
}

pub fn dealias_vector(v: &VectorField) -> VectorField {
    v.map(dealias)
}

/// Pointwise product followed by 2/3-rule truncation — the standard
/// pseudo-spectral treatment of quadratic nonlinearities.
pub fn mul_dealias(a: &ScalarField, b: &ScalarField) -> ScalarField {
    dealias(&a.mul(b))
}

fn sobolev_weight(k2: &[f64], s: usize) -> f64 {
    // Σ_{|α| ≤ s} Π_j k_j^(2 α_j), the Parseval weight of Σ ‖∂^α f‖².
    match k2.len() {
        1 => {
            let mut w = 0.0;
            let mut p = 1.0;
            for _ in 0..=s {
                w += p;
                p *= k2[0];
            }
            w
        }
        2 => {
            let mut w = 0.0;
            let mut pa = 1.0;
            for a in 0..=s {
                let mut pb = 1.0;
                for _ in 0..=(s - a) {
                    w += pa * pb;
                    pb *= k2[1];
                }
                pa *= k2[0];
            }
            w
        }
        3 => {
            let mut w = 0.0;
            let mut pa = 1.0;
            for a in 0..=s {
                let mut pb = 1.0;
                for b in 0..=(s - a) {
                    let mut pc = 1.0;
                    for _ in 0..=(s - a - b) {
                        w += pa * pb * pc;
                        pc *= k2[2];
                    }
                    pb *= k2[1];
                }
                pa *= k2[0];
            }
            w
        }
        _ => unreachable!("dim restricted to 1..=3"),
    }
}

/// Spatial Sobolev norm `( Σ_{|α| ≤ s} ‖∂_x^α f‖²_{L²} )^{1/2}`, computed
/// modewise by Parseval. Monotone non-decreasing in `s`.
pub fn sobolev_norm(f: &ScalarField, s: SobolevOrder) -> f64 {
    let grid = f.grid();
    let spec = forward(f);
    let mut k2 = [0.0f64; 3];
    let mut acc = 0.0;
    for (idx, c) in spec.iter().enumerate() {
        for (axis, k2a) in k2.iter_mut().enumerate().take(grid.dim()) {
            let k = grid.mode(idx, axis) as f64 * grid.k_scale();
            *k2a = k * k;
        }
        acc += sobolev_weight(&k2[..grid.dim()], s.order()) * c.norm_sqr();
    }
    (grid.volume() * acc).sqrt()
}

pub fn sobolev_norm_vector(v: &VectorField, s: SobolevOrder) -> f64 {
    v.components()
        .iter()
        .map(|c| sobolev_norm(c, s).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn sobolev_norm_axial(a: &AxialField, s: SobolevOrder) -> f64 {
    match a {
        AxialField::Scalar(f) => sobolev_norm(f, s),
        AxialField::Vector(v) => sobolev_norm_vector(v, s),
    }
}

/// Quadrature `L²` norm (trapezoid rule; exact for trigonometric
/// interpolants, hence equal to the spectral `s = 0` norm to round-off).
pub fn l2_norm(f: &ScalarField) -> f64 {
    let w = f.grid().cell_volume();
    (f.values().iter().map(|v| v * v).sum::<f64>() * w).sqrt()
}

pub fn l2_norm_vector(v: &VectorField) -> f64 {
    v.components()
        .iter()
        .map(|c| l2_norm(c).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn l2_norm_axial(a: &AxialField) -> f64 {
    match a {
        AxialField::Scalar(f) => l2_norm(f),
        AxialField::Vector(v) => l2_norm_vector(v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(1, n).unwrap()
    }

    #[test]
    fn gradient_of_single_modes() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        let grad = gradient(&f);
        let expect = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!(grad.comp(0).sub(&expect).max_norm() < 1e-13);
        assert!(grad.comp(1).max_norm() < 1e-13);

        let f2 = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin());
        let grad2 = gradient(&f2);
        let expect2 = ScalarField::from_fn(&g, |x| 2.0 * (2.0 * x[0]).cos());
        assert!(grad2.comp(0).sub(&expect2).max_norm() < 1e-12);

        let c = ScalarField::constant(&g, 4.2);
        let gc = gradient(&c);
        assert!(gc.comp(0).max_norm() < 1e-14);
        assert!(gc.comp(1).max_norm() < 1e-14);
        // mean of each gradient component is zero
        assert!(grad.comp(0).mean().abs() < 1e-15);
    }

    #[test]
    fn divergence_laplacian_examples() {
        let g = PeriodicGrid::new(3, 16).unwrap();
        let v = VectorField::from_fn(&g, |x, c| if c == 0 { x[0].cos() } else { 0.0 });
        let d = divergence(&v);
        let expect = ScalarField::from_fn(&g, |x| -x[0].sin());
        assert!(d.sub(&expect).max_norm() < 1e-13);

        let f = ScalarField::from_fn(&g, |x| x[0].cos());
        let lap = laplacian(&f);
        let expect = ScalarField::from_fn(&g, |x| -x[0].cos());
        assert!(lap.sub(&expect).max_norm() < 1e-13);
    }

    #[test]
    fn div_grad_equals_laplacian() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos());
        let a = divergence(&gradient(&f));
        let b = laplacian(&f);
        assert!(a.sub(&b).max_norm() <= 1e-11 * f.max_norm());
    }

    #[test]
    fn curl_of_gradient_vanishes() {
        let g = PeriodicGrid::new(3, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| (x[0] + x[1]).sin() * (2.0 * x[2]).cos());
        let c = curl(&gradient(&f));
        for i in 0..3 {
            assert!(c.comp(i).max_norm() <= 1e-12 * f.max_norm());
        }
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = PeriodicGrid::new(3, 16).unwrap();
        let v = VectorField::from_fn(&g, |x, c| match c {
            0 => (x[1] * 2.0).sin(),
            1 => x[2].cos() * x[0].sin(),
            _ => (x[0] + x[1]).cos(),
        });
        let d = divergence(&curl(&v));
        assert!(d.max_norm() <= 1e-11 * v.max_magnitude());
    }

    #[test]
    fn poisson_single_modes() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let rhs = ScalarField::from_fn(&g, |x| x[0].cos());
        let phi = poisson_solve(&rhs).unwrap();
        let expect = ScalarField::from_fn(&g, |x| -x[0].cos());
        assert!(phi.sub(&expect).max_norm() < 1e-13);
        assert!(phi.mean().abs() < 1e-14);

        let zero = ScalarField::zeros(&g);
        assert!(poisson_solve(&zero).unwrap().max_norm() == 0.0);

        let rhs2 = ScalarField::from_fn(&g, |x| x[0].cos() + (2.0 * x[1]).cos());
        let phi2 = poisson_solve(&rhs2).unwrap();
        let expect2 = ScalarField::from_fn(&g, |x| -x[0].cos() - (2.0 * x[1]).cos() / 4.0);
        assert!(phi2.sub(&expect2).max_norm() < 1e-13);
    }

    #[test]
    fn poisson_rejects_nonzero_mean() {
        let g = grid1(16);
        let rhs = ScalarField::from_fn(&g, |x| 1.0 + x[0].sin());
        match poisson_solve(&rhs) {
            Err(SimError::NonZeroMeanRhs { .. }) => {}
            other => panic!("expected NonZeroMeanRhs, got {other:?}"),
        }
    }

    #[test]
    fn poisson_roundtrip_and_mean() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let rhs = ScalarField::from_fn(&g, |x| x[0].sin() * (2.0 * x[1]).cos() + (3.0 * x[1]).sin());
        let phi = poisson_solve(&rhs).unwrap();
        let back = laplacian(&phi);
        assert!(back.sub(&rhs).max_norm() <= 1e-10 * rhs.max_norm());
        assert!(phi.mean().abs() <= 1e-13);
    }

    #[test]
    fn sobolev_examples() {
        let g = grid1(64);
        let f = ScalarField::from_fn(&g, |x| x[0].sin());
        let s0 = SobolevOrder::new(0, &g).unwrap();
        let s1 = SobolevOrder::new(1, &g).unwrap();
        let pi = std::f64::consts::PI;
        assert!((sobolev_norm(&f, s0) - pi.sqrt()).abs() < 1e-12);
        assert!((sobolev_norm(&f, s1) - (2.0 * pi).sqrt()).abs() < 1e-12);
        let z = ScalarField::zeros(&g);
        assert_eq!(sobolev_norm(&z, SobolevOrder::new(5, &g).unwrap()), 0.0);
    }

    #[test]
    fn sobolev_monotone_in_order() {
        let g = PeriodicGrid::new(2, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| (3.0 * x[0]).sin() + (x[0] + x[1]).cos());
        let mut prev = 0.0;
        for s in 0..4 {
            let v = sobolev_norm(&f, SobolevOrder::new(s, &g).unwrap());
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn parseval_identity() {
        let g = PeriodicGrid::new(2, 32).unwrap();
        let f = ScalarField::from_fn(&g, |x| (2.0 * x[0]).sin() * x[1].cos() + 0.3);
        let s0 = SobolevOrder::new(0, &g).unwrap();
        let spectral = sobolev_norm(&f, s0);
        let quad = l2_norm(&f);
        assert!((spectral - quad).abs() <= 1e-12 * quad);
    }

    #[test]
    fn dealias_examples() {
        let g = grid1(32);
        // band-limited below n/3: unchanged
        let f = ScalarField::from_fn(&g, |x| (8.0 * x[0]).cos());
        assert!(dealias(&f).sub(&f).max_norm() < 1e-13);
        // mode above the cutoff (n/2 - 1 = 15 > 10): wiped out
        let hi = ScalarField::from_fn(&g, |x| (15.0 * x[0]).cos());
        assert!(dealias(&hi).max_norm() < 1e-13);
        // idempotent
        let mixed = ScalarField::from_fn(&g, |x| (5.0 * x[0]).cos() + (14.0 * x[0]).sin());
        let once = dealias(&mixed);
        let twice = dealias(&once);
        assert!(twice.sub(&once).max_norm() < 1e-14);
    }

    #[test]
    fn perp_gradient_matches_curl_convention() {
        let g = PeriodicGrid::new(2, 16).unwrap();
        let b = ScalarField::from_fn(&g, |x| (x[0] + x[1]).sin());
        let v = perp_gradient(&b);
        // scalar_curl(perp_gradient(b)) = -Δb
        let back = scalar_curl(&v);
        let lap = laplacian(&b);
        assert!(back.add(&lap).max_norm() < 1e-12);
        // div(perp_gradient(b)) = 0
        assert!(divergence(&v).max_norm() < 1e-12);
    }
}
