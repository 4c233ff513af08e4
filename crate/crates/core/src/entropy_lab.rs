//! Entropy fields `Sigma(w) = (-w^3/3, w^2/2)` and `sigma(w) = (-w^2/2, w)`,
//! the identity `div Sigma(w) = w eta_w`, and sharp-interface profiles with
//! their Rankine-Hugoniot condition and jump cost.

use serde::{Deserialize, Serialize};

use crate::energy::energy_eps;
use crate::error::{Result, SmecticError};
use crate::record::VerificationRecord;
use crate::spectral_ops::{cube_dealiased, d1, d2, eta, multiply_dealiased, square_dealiased};
use crate::torus_field::{AdmissibleField, GridSpec, TorusField};

pub const DIV_SIGMA_TOL: f64 = 1e-10;
pub const RH_TOL: f64 = 1e-12;
pub const DUALITY_TOL: f64 = 1e-8;

/// Polynomial coefficients (ascending powers) of the two entropy fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EntropyPair;

impl EntropyPair {
    pub const SIGMA_BIG: [[f64; 4]; 2] = [[0.0, 0.0, 0.0, -1.0 / 3.0], [0.0, 0.0, 0.5, 0.0]];
    pub const SIGMA_SMALL: [[f64; 3]; 2] = [[0.0, 0.0, -0.5], [0.0, 1.0, 0.0]];

    pub fn sigma_big(t: f64) -> [f64; 2] {
        [-t * t * t / 3.0, 0.5 * t * t]
    }

    pub fn sigma_small(t: f64) -> [f64; 2] {
        [-0.5 * t * t, t]
    }
}

/// `-d1(w^3)/3 + d2(w^2)/2` from dealiased powers.
pub fn div_sigma(w: &AdmissibleField) -> Result<TorusField> {
    let cube = cube_dealiased(w)?;
    let square = square_dealiased(w)?;
    d1(&cube).lin_comb(-1.0 / 3.0, &d2(&square), 0.5)
}

pub fn div_sigma_identity(w: &AdmissibleField) -> Result<VerificationRecord> {
    let lhs = div_sigma(w)?;
    let rhs = multiply_dealiased(w, &eta(w)?.field)?;
    let residual = lhs.lin_comb(1.0, &rhs, -1.0)?.norm();
    let tol = DIV_SIGMA_TOL * (1.0 + w.norm().powi(3));
    Ok(VerificationRecord::identity("div_sigma", lhs.norm(), rhs.norm(), residual, tol))
}

/// Grid L1 norm of `div Sigma(w)`.
pub fn entropy_production(w: &AdmissibleField) -> Result<f64> {
    div_sigma(w)?.lp_norm(1.0)
}

/// `|∫ Sigma(w) . grad phi|` against
/// `E_eps(w) ||phi||_inf + sqrt(eps) E_eps(w)^{1/2} ||w||_2 ||d1 phi||_inf`.
pub fn duality_gap(w: &AdmissibleField, phi: &TorusField, eps: f64) -> Result<VerificationRecord> {
    w.check_grid(phi)?;
    let cube = cube_dealiased(w)?;
    let square = square_dealiased(w)?;
    let d1phi = d1(phi);
    let pairing = -cube.inner(&d1phi)? / 3.0 + 0.5 * square.inner(&d2(phi))?;
    let energy = energy_eps(w, eps)?.energy_eps;
    let rhs = energy * phi.sup_norm()? + eps.sqrt() * energy.sqrt() * w.norm() * d1phi.sup_norm()?;
    Ok(VerificationRecord::inequality("duality", pairing.abs(), rhs, DUALITY_TOL).with_param("eps", eps))
}

fn check_point(p: [f64; 2]) -> Result<()> {
    if p.iter().all(|c| c.is_finite() && (0.0..=1.0).contains(c)) {
        Ok(())
    } else {
        Err(SmecticError::InvalidProfile(format!("interface endpoint {p:?} outside the unit square")))
    }
}

/// Straight interface; `w_plus` is the trace on the side of the unit normal
/// obtained by turning the segment direction clockwise, `nu = (t2, -t1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub w_minus: f64,
    pub w_plus: f64,
}

impl Interface {
    pub fn new(start: [f64; 2], end: [f64; 2], w_minus: f64, w_plus: f64) -> Result<Self> {
        let i = Self { start, end, w_minus, w_plus };
        i.validate()?;
        Ok(i)
    }

    fn validate(&self) -> Result<()> {
        check_point(self.start)?;
        check_point(self.end)?;
        if !(self.w_minus.is_finite() && self.w_plus.is_finite()) {
            return Err(SmecticError::InvalidProfile("non-finite trace".into()));
        }
        if self.length() == 0.0 {
            return Err(SmecticError::InvalidProfile("zero-length interface".into()));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }

    pub fn tangent(&self) -> [f64; 2] {
        let l = self.length();
        [(self.end[0] - self.start[0]) / l, (self.end[1] - self.start[1]) / l]
    }

    pub fn normal(&self) -> [f64; 2] {
        let t = self.tangent();
        [t[1], -t[0]]
    }

    pub fn jump(&self) -> f64 {
        self.w_plus - self.w_minus
    }

    fn flux_jump(&self, f: fn(f64) -> [f64; 2]) -> f64 {
        let (p, m, n) = (f(self.w_plus), f(self.w_minus), self.normal());
        (p[0] - m[0]) * n[0] + (p[1] - m[1]) * n[1]
    }

    /// `|(sigma(w+) - sigma(w-)) . nu|`
    pub fn rh_residual(&self) -> f64 {
        self.flux_jump(EntropyPair::sigma_small).abs()
    }

    fn is_vertical(&self) -> bool {
        self.start[0] == self.end[0]
    }
}

/// Sharp-interface field made of straight interfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct JumpProfile {
    interfaces: Vec<Interface>,
}

#[derive(Deserialize)]
struct RawProfile {
    interfaces: Vec<Interface>,
}

impl TryFrom<RawProfile> for JumpProfile {
    type Error = SmecticError;
    fn try_from(raw: RawProfile) -> Result<Self> {
        Self::new(raw.interfaces)
    }
}

impl JumpProfile {
    pub fn new(interfaces: Vec<Interface>) -> Result<Self> {
        for i in &interfaces {
            i.validate()?;
        }
        Ok(Self { interfaces })
    }

    pub fn interfaces(&self) -> &[Interface] {
        &self.interfaces
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// The profile of `-w(x1, 1 - x2)`, which keeps `d2 w = d1(w^2/2)`
    /// invariant.
    pub fn reflect_x2(&self) -> Self {
        let interfaces = self
            .interfaces
            .iter()
            .map(|i| Interface {
                start: [i.start[0], 1.0 - i.start[1]],
                end: [i.end[0], 1.0 - i.end[1]],
                w_minus: -i.w_plus,
                w_plus: -i.w_minus,
            })
            .collect();
        Self { interfaces }
    }

    /// Values `(x1, right_value, left_value)` of an x2-independent profile,
    /// sorted by position; requires full-height vertical interfaces with
    /// consistent traces and vanishing row mean.
    fn vertical_layout(&self) -> Result<Vec<(f64, f64, f64)>> {
        if self.interfaces.is_empty() {
            return Err(SmecticError::InvalidProfile("profile has no interfaces".into()));
        }
        let mut cuts = Vec::with_capacity(self.interfaces.len());
        for i in &self.interfaces {
            if !i.is_vertical() || (i.end[1] - i.start[1]).abs() != 1.0 || i.start[0] == 1.0 {
                return Err(SmecticError::InvalidProfile("expected full-height vertical interfaces".into()));
            }
            let (right, left) = if i.normal()[0] > 0.0 { (i.w_plus, i.w_minus) } else { (i.w_minus, i.w_plus) };
            cuts.push((i.start[0], right, left));
        }
        cuts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let n = cuts.len();
        let mut mean = 0.0;
        for k in 0..n {
            let next = cuts[(k + 1) % n];
            if cuts[k].0 == next.0 && n > 1 {
                return Err(SmecticError::InvalidProfile("coincident interfaces".into()));
            }
            if (cuts[k].1 - next.2).abs() > RH_TOL {
                return Err(SmecticError::InvalidProfile(format!("inconsistent traces between x1 = {} and x1 = {}", cuts[k].0, next.0)));
            }
            let width = (next.0 - cuts[k].0).rem_euclid(1.0);
            mean += cuts[k].1 * if n == 1 { 1.0 } else { width };
        }
        if mean.abs() > RH_TOL {
            return Err(SmecticError::InvalidProfile(format!("row mean {mean} does not vanish")));
        }
        Ok(cuts)
    }

    /// Point value of an x2-independent profile; on an interface the trace
    /// average is returned.
    pub fn value_at(&self, x1: f64) -> Result<f64> {
        let cuts = self.vertical_layout()?;
        Ok(value_in(&cuts, x1))
    }

    /// Samples an x2-independent profile on `grid`.
    pub fn sample(&self, grid: GridSpec) -> Result<TorusField> {
        let cuts = self.vertical_layout()?;
        let n1 = grid.n1();
        let row: Vec<f64> = (0..n1).map(|i| value_in(&cuts, i as f64 / n1 as f64)).collect();
        let samples = (0..grid.n2()).flat_map(|_| row.iter().copied()).collect();
        TorusField::from_samples(grid, samples)
    }
}

fn value_in(cuts: &[(f64, f64, f64)], x1: f64) -> f64 {
    let x = x1.rem_euclid(1.0);
    if let Some(c) = cuts.iter().find(|c| c.0 == x) {
        return 0.5 * (c.1 + c.2);
    }
    // last cut at or left of x, cyclically
    cuts.iter().rev().find(|c| c.0 < x).unwrap_or(cuts.last().expect("non-empty")).1
}

pub fn rankine_hugoniot_check(p: &JumpProfile) -> Vec<VerificationRecord> {
    p.interfaces()
        .iter()
        .enumerate()
        .map(|(k, i)| {
            let n = i.normal();
            VerificationRecord::identity("rankine_hugoniot", i.w_minus, i.w_plus, i.rh_residual(), RH_TOL)
                .with_param("interface", k as f64)
                .with_param("nu1", n[0])
                .with_param("nu2", n[1])
        })
        .collect()
}

/// `sum length |[w]|^3 / (12 sqrt(1 + (w+ + w-)^2 / 4))`; refuses profiles
/// that violate the Rankine-Hugoniot condition.
pub fn jump_cost(p: &JumpProfile) -> Result<f64> {
    let mut total = 0.0;
    for (index, i) in p.interfaces().iter().enumerate() {
        let residual = i.rh_residual();
        if residual > RH_TOL {
            return Err(SmecticError::IncompatibleProfile { index, residual });
        }
        let s = 0.5 * (i.w_plus + i.w_minus);
        total += i.length() * i.jump().abs().powi(3) / (12.0 * (1.0 + s * s).sqrt());
    }
    Ok(total)
}

/// `sum length |(Sigma(w+) - Sigma(w-)) . nu|`, the total variation of
/// `div Sigma(w)` for the piecewise-constant field.
pub fn div_sigma_jump_measure(p: &JumpProfile) -> f64 {
    p.interfaces().iter().map(|i| i.length() * i.flux_jump(EntropyPair::sigma_big).abs()).sum()
}
