//! Fourier multipliers and alias-free products.
//!
//! Every operator here is a pure function of its input field. Multipliers act
//! on the stored spectrum; products are evaluated on a zero-padded grid and
//! truncated back to the working band, with Nyquist slots dropped on both the
//! inputs and the output.

use rustfft::num_complex::Complex64;

use crate::error::{Result, SmecticError};
use crate::fft;
use crate::torus_field::{AdmissibleField, GridSpec, Mode, TorusField};

/// Admissibility gate for the `|d1|^s` family of multipliers.
pub const MULTIPLIER_ADMISSIBLE_TOL: f64 = 1e-10;

/// Relative coefficient size below which a slot is treated as empty when
/// measuring bands for dealiasing.
pub const BAND_TOL: f64 = 1e-13;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// A Fourier multiplier `f_hat(k) -> symbol(k) * f_hat(k)`.
pub struct Multiplier {
    label: String,
    symbol: Box<dyn Fn(&Mode) -> Complex64 + Send + Sync>,
}

impl Multiplier {
    pub fn new(label: impl Into<String>, symbol: impl Fn(&Mode) -> Complex64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), symbol: Box::new(symbol) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn symbol(&self, mode: &Mode) -> Complex64 {
        (self.symbol)(mode)
    }

    /// `a * symbol`
    pub fn scaled(self, a: f64) -> Self {
        let Self { label, symbol } = self;
        Self { label: format!("{a}*{label}"), symbol: Box::new(move |m| symbol(m) * a) }
    }

    pub fn apply(&self, f: &TorusField) -> TorusField {
        f.map_spectrum(|mode, c| (self.symbol)(mode) * c)
    }

    /// Largest violation of `symbol(-k) = conj(symbol(k))` on `grid`,
    /// skipping Nyquist slots, which have no distinct partner.
    pub fn reality_defect(&self, grid: &GridSpec) -> f64 {
        grid.modes()
            .filter(|m| !m.is_nyquist())
            .map(|m| {
                let partner = grid.mode(grid.index_of(-m.m1, -m.m2).expect("partner slot exists"));
                (self.symbol(&partner) - self.symbol(&m).conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn d1() -> Self {
        Self::new("d1", |m| if m.nyquist1 { ZERO } else { Complex64::new(0.0, m.k1) })
    }

    pub fn d2() -> Self {
        Self::new("d2", |m| if m.nyquist2 { ZERO } else { Complex64::new(0.0, m.k2) })
    }

    /// `|d1|^s`; for negative `s` the k1 = 0 column maps to zero.
    pub fn abs_d1_pow(s: f64) -> Self {
        Self::new(format!("|d1|^{s}"), move |m| {
            if m.m1 == 0 {
                ZERO
            } else {
                Complex64::new(m.k1.abs().powf(s), 0.0)
            }
        })
    }

    /// Translation by `h` along `axis`. On a Nyquist slot the factor is the
    /// real part `cos(k h)`, which keeps the output real and is exact for grid
    /// multiples of `h`.
    pub fn shift(axis: Axis, h: f64) -> Self {
        Self::new(format!("shift_{axis:?}({h})"), move |m| {
            let (k, nyq) = match axis {
                Axis::X1 => (m.k1, m.nyquist1),
                Axis::X2 => (m.k2, m.nyquist2),
            };
            if nyq {
                Complex64::new((k * h).cos(), 0.0)
            } else {
                Complex64::from_polar(1.0, k * h)
            }
        })
    }
}

impl std::fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multiplier").field("label", &self.label).finish()
    }
}

pub fn d1(f: &TorusField) -> TorusField {
    Multiplier::d1().apply(f)
}

pub fn d2(f: &TorusField) -> TorusField {
    Multiplier::d2().apply(f)
}

/// `d1 d1 f`, Nyquist column zeroed.
pub fn d11(f: &TorusField) -> TorusField {
    f.map_spectrum(|m, c| if m.nyquist1 { ZERO } else { c * (-m.k1 * m.k1) })
}

fn check_admissible(f: &TorusField) -> Result<()> {
    let residual = f.k1_zero_content();
    let tolerance = MULTIPLIER_ADMISSIBLE_TOL * f.norm();
    if residual > tolerance {
        return Err(SmecticError::NonAdmissibleInput { residual, tolerance });
    }
    Ok(())
}

/// `|d1|^{-1}`. Roundoff-level k1 = 0 content below the gate is discarded.
pub fn inv_abs_d1(f: &TorusField) -> Result<AdmissibleField> {
    check_admissible(f)?;
    Ok(AdmissibleField::new_unchecked(Multiplier::abs_d1_pow(-1.0).apply(f)))
}

/// `|d1|^{-2}`, realized as two applications of the `|k1|^{-1}` symbol.
pub fn inv_abs_d1_sq(f: &TorusField) -> Result<AdmissibleField> {
    let once = inv_abs_d1(f)?;
    inv_abs_d1(&once)
}

/// `|d1|^s` for `s` in `(0, 1]`.
pub fn frac_abs_d1(f: &TorusField, s: f64) -> Result<AdmissibleField> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(SmecticError::InvalidParameter(format!("fractional order {s} outside (0, 1]")));
    }
    check_admissible(f)?;
    Ok(AdmissibleField::new_unchecked(Multiplier::abs_d1_pow(s).apply(f)))
}

pub fn shift(f: &TorusField, axis: Axis, h: f64) -> TorusField {
    Multiplier::shift(axis, h).apply(f)
}

pub fn shift1(f: &TorusField, h: f64) -> TorusField {
    shift(f, Axis::X1, h)
}

/// Directional difference `f(x + h e_j) - f(x)`.
pub fn diff(f: &TorusField, axis: Axis, h: f64) -> TorusField {
    let sh = Multiplier::shift(axis, h);
    f.map_spectrum(|m, c| (sh.symbol(m) - 1.0) * c)
}

pub fn diff1(f: &TorusField, h: f64) -> TorusField {
    diff(f, Axis::X1, h)
}

fn padded_len(n: usize, degree: usize) -> usize {
    let p = (degree + 1) * n / 2;
    p + p % 2
}

/// Pointwise product of `factors`, evaluated on a grid padded by
/// `(degree + 1) / 2` in each direction (3/2 for two factors, 2 for three)
/// and truncated to the working band.
pub fn product_dealiased(factors: &[&TorusField]) -> Result<TorusField> {
    let first = factors.first().ok_or_else(|| SmecticError::InvalidParameter("empty product".into()))?;
    let grid = first.grid();
    for f in factors {
        first.check_grid(f)?;
    }
    let degree = factors.len();
    let (n1, n2) = (grid.n1(), grid.n2());
    let (p1, p2) = (padded_len(n1, degree), padded_len(n2, degree));
    let retained = ((n1 / 2 - 1) as i64, (n2 / 2 - 1) as i64);
    let mut band_sum = (0_i64, 0_i64);
    for f in factors {
        let b = f.band(BAND_TOL);
        if b.0 as usize * 2 >= n1 || b.1 as usize * 2 >= n2 {
            return Err(SmecticError::BandLimitExceeded {
                detail: format!("factor carries Nyquist content on {grid} (band {}x{})", b.0, b.1),
            });
        }
        band_sum.0 += b.0;
        band_sum.1 += b.1;
    }
    if p1 as i64 <= band_sum.0 + retained.0 || p2 as i64 <= band_sum.1 + retained.1 {
        return Err(SmecticError::BandLimitExceeded {
            detail: format!("padded grid {p1}x{p2} too small for combined band {}x{}", band_sum.0, band_sum.1),
        });
    }
    let padded = GridSpec::new(p1, p2).expect("padded grid is valid");
    let mut product = vec![1.0; p1 * p2];
    let mut buf = vec![ZERO; p1 * p2];
    for f in factors {
        buf.iter_mut().for_each(|c| *c = ZERO);
        let s = f.spectral();
        for (idx, &c) in s.iter().enumerate() {
            let m = grid.mode(idx);
            if m.is_nyquist() {
                continue;
            }
            buf[padded.index_of(m.m1, m.m2).expect("padded grid holds working band")] = c;
        }
        fft::inverse(&mut buf, p1, p2);
        for (p, c) in product.iter_mut().zip(buf.iter()) {
            *p *= c.re;
        }
    }
    let mut data: Vec<Complex64> = product.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft::forward(&mut data, p1, p2);
    let mut out = vec![ZERO; grid.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let m = grid.mode(idx);
        if m.is_nyquist() {
            continue;
        }
        *slot = data[padded.index_of(m.m1, m.m2).expect("padded grid holds working band")];
    }
    TorusField::from_spectrum(grid, out)
}

pub fn square_dealiased(f: &TorusField) -> Result<TorusField> {
    product_dealiased(&[f, f])
}

pub fn cube_dealiased(f: &TorusField) -> Result<TorusField> {
    product_dealiased(&[f, f, f])
}

pub fn multiply_dealiased(f: &TorusField, g: &TorusField) -> Result<TorusField> {
    product_dealiased(&[f, g])
}

/// The Burgers quantity together with the size of the k1 = 0 content that
/// was projected away.
#[derive(Debug, Clone)]
pub struct Eta {
    pub field: AdmissibleField,
    pub k1_zero_residual: f64,
}

/// `eta_w = d2 w - d1 (w^2 / 2)`.
pub fn eta(w: &AdmissibleField) -> Result<Eta> {
    let sq = square_dealiased(w)?;
    let raw = d2(w).lin_comb(1.0, &d1(&sq), -0.5)?;
    let k1_zero_residual = raw.k1_zero_content();
    Ok(Eta { field: raw.project_vanishing_x1_mean(), k1_zero_residual })
}

/// Torus integral of a field (its zero coefficient).
pub fn integral(f: &TorusField) -> f64 {
    f.spectral()[0].re
}
