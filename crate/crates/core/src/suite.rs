//! Identity checks run on random band-limited fields: Parseval, multiplier
//! adjointness, the shift group law, projection orthogonality, the integrated
//! HKM2 identity, the entropy divergence identity and the gradient check.

use rayon::prelude::*;

use crate::besov_lab::hkm2_residual;
use crate::energy::check_gradient;
use crate::entropy_lab::div_sigma_identity;
use crate::error::Result;
use crate::record::VerificationRecord;
use crate::spectral_ops::{Axis, Multiplier};
use crate::torus_field::{random_band_limited, AdmissibleField, GridSpec, TorusField, TWO_PI};

pub const SPECTRAL_TOL: f64 = 1e-12;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const SUITE_EPS: f64 = 1.0 / 16.0;
pub const HKM2_STEPS: [f64; 3] = [0.125, 1.0 / 32.0, 0.3];

fn parseval(w: &AdmissibleField) -> Result<VerificationRecord> {
    let spectral = w.spectral().iter().map(|c| c.norm_sqr()).sum::<f64>();
    let s = w.physical()?;
    let grid_mean = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
    let residual = (spectral - grid_mean).abs();
    Ok(VerificationRecord::identity("parseval", spectral, grid_mean, residual, SPECTRAL_TOL * (1.0 + spectral)))
}

/// `<T f, g> = <f, T* g>` for `T` and its adjoint symbol.
fn adjoint(name: &str, t: &Multiplier, t_star: &Multiplier, f: &TorusField, g: &TorusField) -> Result<VerificationRecord> {
    let lhs = t.apply(f).inner(g)?;
    let rhs = f.inner(&t_star.apply(g))?;
    let scale = 1.0 + t.apply(f).norm() * g.norm();
    Ok(VerificationRecord::identity(name, lhs, rhs, (lhs - rhs).abs(), SPECTRAL_TOL * scale))
}

fn shift_group_law(f: &TorusField, a: f64, b: f64) -> Result<VerificationRecord> {
    let composed = Multiplier::shift(Axis::X1, a).apply(&Multiplier::shift(Axis::X1, b).apply(f));
    let direct = Multiplier::shift(Axis::X1, a + b).apply(f);
    let residual = composed.lin_comb(1.0, &direct, -1.0)?.norm();
    Ok(VerificationRecord::identity("shift_group_law", composed.norm(), direct.norm(), residual, SPECTRAL_TOL * (1.0 + f.norm()))
        .with_param("h1", a)
        .with_param("h2", b))
}

/// `P f` is orthogonal to `f - P f` for a field with nonzero row means.
fn projection_orthogonality(w: &AdmissibleField) -> Result<VerificationRecord> {
    let grid = w.grid();
    let bias = TorusField::from_fn(grid, |_, x2| 0.7 * (TWO_PI * x2).cos() + 0.2);
    let f = w.field().lin_comb(1.0, &bias, 1.0)?;
    let p = f.project_vanishing_x1_mean();
    let rest = f.lin_comb(1.0, &p, -1.0)?;
    let dot = p.inner(&rest)?;
    Ok(VerificationRecord::identity("projection_orthogonality", dot, 0.0, dot.abs(), SPECTRAL_TOL * (1.0 + f.norm_sq())))
}

/// All identity records for one random field.
pub fn identity_suite(grid: GridSpec, seed: u64, kmax: usize) -> Result<Vec<VerificationRecord>> {
    let w = random_band_limited(grid, seed, kmax, 1.0)?;
    let v = random_band_limited(grid, seed.wrapping_add(1 << 32), kmax, 1.0)?;
    let mut out = vec![
        parseval(&w)?,
        adjoint("adjoint_d1", &Multiplier::d1(), &Multiplier::d1().scaled(-1.0), &w, &v)?,
        adjoint("adjoint_d2", &Multiplier::d2(), &Multiplier::d2().scaled(-1.0), &w, &v)?,
        adjoint("adjoint_abs_d1", &Multiplier::abs_d1_pow(0.5), &Multiplier::abs_d1_pow(0.5), &w, &v)?,
        adjoint("adjoint_shift", &Multiplier::shift(Axis::X2, 0.137), &Multiplier::shift(Axis::X2, -0.137), &w, &v)?,
        shift_group_law(&w, 0.21, 0.0917)?,
        projection_orthogonality(&w)?,
    ];
    for h in HKM2_STEPS {
        out.push(hkm2_residual(&w, h)?);
    }
    out.push(div_sigma_identity(&w)?);
    let c = check_gradient(&w, &v, SUITE_EPS, 1e-5)?;
    out.push(
        VerificationRecord::identity("gradient_check", c.directional, c.finite_difference, c.rel_error, GRADIENT_TOL)
            .with_param("eps", SUITE_EPS)
            .with_param("step", c.step),
    );
    Ok(out.into_iter().map(|r| r.with_param("seed", seed as f64)).collect())
}

/// [`identity_suite`] over `seeds`, concatenated in seed order.
pub fn run_identity_suite(grid: GridSpec, seeds: &[u64], kmax: usize) -> Result<Vec<VerificationRecord>> {
    let per_seed = seeds.par_iter().map(|&s| identity_suite(grid, s, kmax)).collect::<Result<Vec<_>>>()?;
    Ok(per_seed.into_iter().flatten().collect())
}
