//! The smectic energy `E_eps(w) = (1/2) int (1/eps) (|d1|^{-1} eta_w)^2 + eps (d1 w)^2`,
//! its eps-independent companion `E(w)`, and the L2 gradient of `E_eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmecticError};
use crate::spectral_ops::{d1, d11, d2, eta, inv_abs_d1_sq, multiply_dealiased};
use crate::torus_field::AdmissibleField;

/// Decomposed energy of one field at one `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `|| |d1|^{-1} eta_w ||^2`
    pub compression: f64,
    /// `|| d1 w ||^2`
    pub bending: f64,
    pub eps: f64,
    pub energy_eps: f64,
    pub energy_indep: f64,
    pub eta_k1zero_residual: f64,
}

impl EnergyReport {
    fn new(compression: f64, bending: f64, eps: f64, eta_k1zero_residual: f64) -> Self {
        Self {
            compression,
            bending,
            eps,
            energy_eps: 0.5 * (compression / eps + eps * bending),
            energy_indep: (compression * bending).sqrt(),
            eta_k1zero_residual,
        }
    }

    /// `eps` at which `E_eps` touches `E`; infinite when the bending vanishes.
    pub fn optimal_eps(&self) -> f64 {
        (self.compression / self.bending).sqrt()
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(SmecticError::InvalidParameter(format!("eps must be positive and finite, got {eps}")));
    }
    Ok(())
}

struct Parts {
    compression: f64,
    bending: f64,
    eta: AdmissibleField,
    residual: f64,
}

fn parts(w: &AdmissibleField) -> Result<Parts> {
    let e = eta(w)?;
    let grid = w.grid();
    let compression = e
        .field
        .spectral()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let m = grid.mode(idx);
            if m.m1 == 0 {
                0.0
            } else {
                c.norm_sqr() / (m.k1 * m.k1)
            }
        })
        .sum();
    let bending = w
        .spectral()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let m = grid.mode(idx);
            if m.nyquist1 {
                0.0
            } else {
                m.k1 * m.k1 * c.norm_sqr()
            }
        })
        .sum();
    Ok(Parts { compression, bending, eta: e.field, residual: e.k1_zero_residual })
}

pub fn energy_eps(w: &AdmissibleField, eps: f64) -> Result<EnergyReport> {
    check_eps(eps)?;
    let p = parts(w)?;
    Ok(EnergyReport::new(p.compression, p.bending, eps, p.residual))
}

/// `E(w) = || |d1|^{-1} eta_w || * || d1 w ||`, the infimum of `E_eps(w)` over `eps`.
pub fn energy_indep(w: &AdmissibleField) -> Result<f64> {
    let p = parts(w)?;
    Ok((p.compression * p.bending).sqrt())
}

/// L2 gradient of `E_eps` restricted to admissible directions:
/// `(1/eps)(-d2 G + w d1 G) - eps d11 w` with `G = |d1|^{-2} eta_w`.
pub fn gradient_eps(w: &AdmissibleField, eps: f64) -> Result<AdmissibleField> {
    Ok(energy_and_gradient(w, eps)?.1)
}

pub fn energy_and_gradient(w: &AdmissibleField, eps: f64) -> Result<(EnergyReport, AdmissibleField)> {
    check_eps(eps)?;
    let p = parts(w)?;
    let report = EnergyReport::new(p.compression, p.bending, eps, p.residual);
    let g_pot = inv_abs_d1_sq(&p.eta)?;
    let transport = multiply_dealiased(w, &d1(&g_pot))?;
    let compression_grad = d2(&g_pot).lin_comb(-1.0 / eps, &transport, 1.0 / eps)?;
    let grad = compression_grad.lin_comb(1.0, &d11(w), -eps)?;
    Ok((report, grad.project_vanishing_x1_mean()))
}

/// Outcome of comparing `<grad, v>` with a central difference of `E_eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub directional: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
    pub step: f64,
}

/// `lambda w` with `E_eps(lambda w) = target`, smallest such `lambda > 0`,
/// by doubling and 64 bisection steps.
pub fn rescale_to_energy(w: &AdmissibleField, eps: f64, target: f64) -> Result<AdmissibleField> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(SmecticError::InvalidParameter(format!("target energy must be positive, got {target}")));
    }
    let excess = |l: f64| energy_eps(&w.scale(l), eps).map(|r| r.energy_eps - target);
    let mut hi = 1e-3;
    let mut doublings = 0;
    while excess(hi)? < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(SmecticError::DegenerateEnergy { lhs: target });
        }
    }
    let mut lo = 0.0;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(w.scale(0.5 * (lo + hi)))
}

pub fn check_gradient(w: &AdmissibleField, v: &AdmissibleField, eps: f64, step: f64) -> Result<GradientCheck> {
    let g = gradient_eps(w, eps)?;
    let directional = g.inner(v)?;
    let plus = energy_eps(&w.lin_comb(1.0, v, step)?, eps)?.energy_eps;
    let minus = energy_eps(&w.lin_comb(1.0, v, -step)?, eps)?.energy_eps;
    let finite_difference = (plus - minus) / (2.0 * step);
    let scale = directional.abs().max(finite_difference.abs()).max(f64::MIN_POSITIVE);
    Ok(GradientCheck { directional, finite_difference, rel_error: (directional - finite_difference).abs() / scale, step })
}
