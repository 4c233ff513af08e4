//! Projected first-order descent for `E_eps` over admissible fields.
//!
//! `w = 0` is the global minimizer, so nontrivial runs anchor the iterate,
//! either with a quadratic penalty toward a target or by freezing a set of
//! Fourier coefficients.

use std::collections::HashSet;
use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::{check_gradient, energy_and_gradient, energy_eps, EnergyReport, GradientCheck};
use crate::error::{Result, SmecticError};
use crate::field_io::write_field;
use crate::torus_field::{random_band_limited, AdmissibleField, GridSpec};

pub const ARMIJO_C: f64 = 1e-4;
pub const MAX_BACKTRACKS: usize = 60;
pub const PIN_TOL: f64 = 1e-14;
/// Relative error allowed by the gradient certificate.
pub const GRADIENT_CHECK_TOL: f64 = 1e-5;
const BB_MIN: f64 = 1e-6;
const BB_MAX: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    BacktrackingArmijo,
    BarzilaiBorweinSafeguarded,
}

/// A frozen coefficient; its conjugate partner is frozen with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedMode {
    pub m1: i64,
    pub m2: i64,
    #[serde(with = "complex_pair")]
    pub value: Complex64,
}

/// `[re, im]`
mod complex_pair {
    use rustfft::num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [c.re, c.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

impl PinnedMode {
    /// The `count` admissible slots of smallest `|m|`, with the current
    /// coefficients of `w`; ties are broken by `(m1, m2)`.
    pub fn lowest(w: &AdmissibleField, count: usize) -> Vec<PinnedMode> {
        let grid = w.grid();
        let mut modes: Vec<_> = grid.modes().filter(|m| m.m1 != 0 && !m.is_nyquist()).collect();
        modes.sort_by_key(|m| (m.m1 * m.m1 + m.m2 * m.m2, m.m1, m.m2));
        modes.into_iter().take(count).map(|m| PinnedMode { m1: m.m1, m2: m.m2, value: w.coefficient(m.m1, m.m2) }).collect()
    }
}

#[derive(Debug, Clone)]
pub enum Anchor {
    Penalty { target: AdmissibleField, lambda: f64 },
    Pinned(Vec<PinnedMode>),
}

#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub energy_rel_tol: f64,
    pub step_rule: StepRule,
    pub initial_step: f64,
    pub anchor: Option<Anchor>,
    /// `tau` in the bending preconditioner `(1 + tau eps k1^2)^{-1}`.
    pub preconditioner: Option<f64>,
    pub snapshot_every: Option<usize>,
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            grad_tol: 1e-10,
            energy_rel_tol: 1e-14,
            step_rule: StepRule::BarzilaiBorweinSafeguarded,
            initial_step: 1e-3,
            anchor: None,
            preconditioner: None,
            snapshot_every: None,
            snapshot_dir: None,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(self.grad_tol) && positive(self.energy_rel_tol) && positive(self.initial_step)) {
            return Err(SmecticError::InvalidParameter("tolerances and initial step must be positive".into()));
        }
        if let Some(tau) = self.preconditioner {
            if !(tau >= 0.0 && tau.is_finite()) {
                return Err(SmecticError::InvalidParameter(format!("preconditioner tau must be >= 0, got {tau}")));
            }
        }
        if let Some(Anchor::Penalty { lambda, .. }) = &self.anchor {
            if !(*lambda >= 0.0 && lambda.is_finite()) {
                return Err(SmecticError::InvalidParameter(format!("penalty weight must be >= 0, got {lambda}")));
            }
        }
        if self.snapshot_every == Some(0) {
            return Err(SmecticError::InvalidParameter("snapshot interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Gradient,
    EnergyStall,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub iterations: usize,
    pub final_energy: EnergyReport,
    /// Objective including any penalty term, one entry per accepted iterate.
    pub energy_history: Vec<f64>,
    pub grad_norm_history: Vec<f64>,
    pub termination: Termination,
    pub line_search_failure: bool,
}

/// `E_eps` plus the anchor contribution.
pub struct Objective<'a> {
    eps: f64,
    anchor: Option<&'a Anchor>,
    pinned: Vec<usize>,
}

impl<'a> Objective<'a> {
    pub fn new(grid: GridSpec, eps: f64, anchor: Option<&'a Anchor>) -> Result<Self> {
        let mut pinned = Vec::new();
        if let Some(Anchor::Pinned(pins)) = anchor {
            for p in pins {
                for (m1, m2) in [(p.m1, p.m2), (-p.m1, -p.m2)] {
                    let idx = grid
                        .index_of(m1, m2)
                        .filter(|&i| grid.mode(i).m1 != 0 && !grid.mode(i).is_nyquist())
                        .ok_or_else(|| SmecticError::InvalidParameter(format!("cannot pin mode ({m1}, {m2}) on {grid}")))?;
                    pinned.push(idx);
                }
            }
            pinned.sort_unstable();
            pinned.dedup();
        }
        if let Some(Anchor::Penalty { target, .. }) = anchor {
            if target.grid() != grid {
                return Err(SmecticError::GridMismatch);
            }
        }
        Ok(Self { eps, anchor, pinned })
    }

    pub fn value(&self, w: &AdmissibleField) -> Result<f64> {
        let e = energy_eps(w, self.eps)?.energy_eps;
        Ok(match self.anchor {
            Some(Anchor::Penalty { target, lambda }) => e + lambda * w.lin_comb(1.0, target, -1.0)?.norm_sq(),
            _ => e,
        })
    }

    /// Objective, energy report and admissible gradient with pinned slots zeroed.
    pub fn value_and_gradient(&self, w: &AdmissibleField) -> Result<(f64, EnergyReport, AdmissibleField)> {
        let (report, mut g) = energy_and_gradient(w, self.eps)?;
        let mut value = report.energy_eps;
        if let Some(Anchor::Penalty { target, lambda }) = self.anchor {
            let diff = w.lin_comb(1.0, target, -1.0)?;
            value += lambda * diff.norm_sq();
            g = g.lin_comb(1.0, &diff, 2.0 * lambda)?;
        }
        if !self.pinned.is_empty() {
            let mut spec = g.spectral().into_owned();
            for &i in &self.pinned {
                spec[i] = Complex64::new(0.0, 0.0);
            }
            g = AdmissibleField::new_unchecked(crate::TorusField::from_spectrum(w.grid(), spec)?);
        }
        Ok((value, report, g))
    }

    fn check_pins(&self, w: &AdmissibleField) -> Result<()> {
        if let Some(Anchor::Pinned(pins)) = self.anchor {
            for p in pins {
                let residual = (w.coefficient(p.m1, p.m2) - p.value).norm();
                if residual > PIN_TOL {
                    return Err(SmecticError::InvalidParameter(format!(
                        "initial field violates pin ({}, {}) by {residual:e}",
                        p.m1, p.m2
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one descent step.
#[derive(Debug, Clone)]
pub struct Step {
    pub w_next: AdmissibleField,
    pub accepted: bool,
    pub value: f64,
    pub step: f64,
    pub backtracks: usize,
}

/// Preconditioned direction `d`; the iterate moves along `-d`.
fn direction(g: &AdmissibleField, eps: f64, tau: Option<f64>) -> AdmissibleField {
    match tau {
        None => g.clone(),
        Some(tau) => AdmissibleField::new_unchecked(g.map_spectrum(|m, c| c / (1.0 + tau * eps * m.k1 * m.k1))),
    }
}

/// Armijo backtracking from a trial step along `-d`.
///
/// `slope = <g, d>`; with `g = 0` the step is accepted without moving.
pub fn descent_step(objective: &Objective<'_>, w: &AdmissibleField, value: f64, d: &AdmissibleField, slope: f64, step: f64) -> Result<Step> {
    if slope == 0.0 {
        return Ok(Step { w_next: w.clone(), accepted: true, value, step: 0.0, backtracks: 0 });
    }
    let mut t = step;
    for backtracks in 0..=MAX_BACKTRACKS {
        let trial = w.lin_comb(1.0, d, -t)?;
        let v = objective.value(&trial)?;
        if v <= value - ARMIJO_C * t * slope {
            return Ok(Step { w_next: trial, accepted: true, value: v, step: t, backtracks });
        }
        t *= 0.5;
    }
    Ok(Step { w_next: w.clone(), accepted: false, value, step: t, backtracks: MAX_BACKTRACKS })
}

fn certified() -> &'static Mutex<HashSet<GridSpec>> {
    static CERT: OnceLock<Mutex<HashSet<GridSpec>>> = OnceLock::new();
    CERT.get_or_init(|| Mutex::new(HashSet::new()))
}

/// Finite-difference check of the energy gradient on `grid`, cached per grid.
pub fn gradient_certificate(grid: GridSpec) -> Result<Option<GradientCheck>> {
    if certified().lock().expect("certificate lock").contains(&grid) {
        return Ok(None);
    }
    let kmax = (grid.n1().min(grid.n2()) / 8).clamp(1, 8);
    let w = random_band_limited(grid, 0x5eed, kmax, 1.0)?;
    let v = random_band_limited(grid, 0x5eed + 1, kmax, 1.0)?;
    let check = check_gradient(&w, &v, 1.0 / 16.0, 1e-5)?;
    if check.rel_error.is_nan() || check.rel_error > GRADIENT_CHECK_TOL {
        return Err(SmecticError::GradientCheckFailed { n1: grid.n1(), n2: grid.n2(), rel_error: check.rel_error });
    }
    certified().lock().expect("certificate lock").insert(grid);
    Ok(Some(check))
}

pub fn minimize(w0: &AdmissibleField, eps: f64, opts: &MinimizeOptions) -> Result<(AdmissibleField, MinimizeReport)> {
    opts.validate()?;
    let grid = w0.grid();
    gradient_certificate(grid)?;
    let objective = Objective::new(grid, eps, opts.anchor.as_ref())?;
    objective.check_pins(w0)?;

    let mut w = w0.clone();
    let (mut value, mut report, mut g) = objective.value_and_gradient(&w)?;
    let mut energy_history = vec![value];
    let mut grad_norm_history = vec![g.norm()];
    let mut termination = Termination::MaxIters;
    let mut line_search_failure = false;
    let mut iterations = 0;
    let mut previous: Option<(AdmissibleField, AdmissibleField)> = None;

    if g.norm() <= opts.grad_tol {
        termination = Termination::Gradient;
    } else {
        while iterations < opts.max_iters {
            let d = direction(&g, eps, opts.preconditioner);
            let slope = g.inner(&d)?;
            let trial = match (opts.step_rule, &previous) {
                (StepRule::BarzilaiBorweinSafeguarded, Some((w_prev, g_prev))) => {
                    let s = w.lin_comb(1.0, w_prev, -1.0)?;
                    let y = g.lin_comb(1.0, g_prev, -1.0)?;
                    let sy = s.inner(&y)?;
                    let bb = if sy > 0.0 { s.norm_sq() / sy } else { opts.initial_step };
                    bb.clamp(BB_MIN * opts.initial_step, BB_MAX * opts.initial_step)
                }
                _ => opts.initial_step,
            };
            let s = descent_step(&objective, &w, value, &d, slope, trial)?;
            if !s.accepted {
                line_search_failure = true;
                break;
            }
            iterations += 1;
            let (v, r, g_next) = objective.value_and_gradient(&s.w_next)?;
            previous = Some((std::mem::replace(&mut w, s.w_next), std::mem::replace(&mut g, g_next)));
            let old = value;
            value = v;
            report = r;
            energy_history.push(value);
            grad_norm_history.push(g.norm());
            if let (Some(every), Some(dir)) = (opts.snapshot_every, &opts.snapshot_dir) {
                if iterations % every == 0 {
                    write_field(&dir.join(format!("iter_{iterations:06}.field")), &w)?;
                }
            }
            if g.norm() <= opts.grad_tol {
                termination = Termination::Gradient;
                break;
            }
            if (old - value).abs() <= opts.energy_rel_tol * old.abs() {
                termination = Termination::EnergyStall;
                break;
            }
        }
    }
    let report = MinimizeReport {
        iterations,
        final_energy: report,
        energy_history,
        grad_norm_history,
        termination,
        line_search_failure,
    };
    Ok((w, report))
}
