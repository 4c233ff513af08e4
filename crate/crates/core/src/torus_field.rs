//! Periodic scalar fields on the unit torus.
//!
//! A [`TorusField`] carries grid samples, Fourier coefficients, or both. The
//! transform is normalized so that the zero coefficient is the mean of the
//! samples, which makes Parseval read `mean(f^2) = sum |f_hat|^2`.
//!
//! Spectra are stored with the same row-major, x1-fastest layout as the
//! samples: entry `j * n1 + i` holds the mode `(m1(i), m2(j))` where the
//! signed index runs over `-n/2+1 ..= n/2`.

use std::borrow::Cow;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmecticError};
use crate::fft;

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Relative tolerance for the admissibility invariant of [`AdmissibleField`].
pub const ADMISSIBLE_TOL: f64 = 1e-12;

/// Uniform `n1 x n2` sampling of `[0,1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    n1: usize,
    n2: usize,
}

#[derive(Deserialize)]
struct RawGrid {
    n1: usize,
    n2: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = SmecticError;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.n1, raw.n2)
    }
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 < 8 || n2 < 8 || !n1.is_multiple_of(2) || !n2.is_multiple_of(2) {
            return Err(SmecticError::InvalidGrid { n1, n2 });
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Twice the resolution in both directions.
    pub fn refined(&self) -> Self {
        Self { n1: 2 * self.n1, n2: 2 * self.n2 }
    }

    /// Point `(i/n1, j/n2)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 / self.n1 as f64, j as f64 / self.n2 as f64)
    }

    pub fn mode(&self, idx: usize) -> Mode {
        let i = idx % self.n1;
        let j = idx / self.n1;
        let m1 = signed_mode(i, self.n1);
        let m2 = signed_mode(j, self.n2);
        Mode {
            m1,
            m2,
            k1: TWO_PI * m1 as f64,
            k2: TWO_PI * m2 as f64,
            nyquist1: 2 * i == self.n1,
            nyquist2: 2 * j == self.n2,
        }
    }

    /// Storage index of the signed mode, if it is representable.
    pub fn index_of(&self, m1: i64, m2: i64) -> Option<usize> {
        let i = wrap_mode(m1, self.n1)?;
        let j = wrap_mode(m2, self.n2)?;
        Some(j * self.n1 + i)
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(move |idx| self.mode(idx))
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n1, self.n2)
    }
}

impl FromStr for GridSpec {
    type Err = SmecticError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || SmecticError::InvalidParameter(format!("grid '{s}' is not of the form N1xN2"));
        let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let n1 = a.trim().parse().map_err(|_| bad())?;
        let n2 = b.trim().parse().map_err(|_| bad())?;
        GridSpec::new(n1, n2)
    }
}

/// Signed index in `-n/2+1 ..= n/2` for storage position `i`.
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn wrap_mode(m: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if m > half || m <= half - n as i64 {
        return None;
    }
    Some(m.rem_euclid(n as i64) as usize)
}

/// Lattice data attached to one spectral slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub m1: i64,
    pub m2: i64,
    pub k1: f64,
    pub k2: f64,
    pub nyquist1: bool,
    pub nyquist2: bool,
}

impl Mode {
    pub fn is_nyquist(&self) -> bool {
        self.nyquist1 || self.nyquist2
    }
}

/// A real scalar field on the torus.
#[derive(Debug, Clone)]
pub struct TorusField {
    grid: GridSpec,
    samples: Option<Vec<f64>>,
    spectrum: Option<Vec<Complex64>>,
}

impl TorusField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            samples: Some(vec![0.0; grid.len()]),
            spectrum: Some(vec![Complex64::new(0.0, 0.0); grid.len()]),
        }
    }

    pub fn from_samples(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(SmecticError::ShapeMismatch { expected: grid.len(), got: samples.len() });
        }
        Ok(Self { grid, samples: Some(samples), spectrum: None })
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for j in 0..grid.n2() {
            for i in 0..grid.n1() {
                let (x1, x2) = grid.point(i, j);
                samples.push(f(x1, x2));
            }
        }
        Self { grid, samples: Some(samples), spectrum: None }
    }

    pub fn from_spectrum(grid: GridSpec, spectrum: Vec<Complex64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(SmecticError::ShapeMismatch { expected: grid.len(), got: spectrum.len() });
        }
        Ok(Self { grid, samples: None, spectrum: Some(spectrum) })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn samples(&self) -> Option<&[f64]> {
        self.samples.as_deref()
    }

    pub fn spectrum(&self) -> Option<&[Complex64]> {
        self.spectrum.as_deref()
    }

    pub fn has_samples(&self) -> bool {
        self.samples.is_some()
    }

    pub fn has_spectrum(&self) -> bool {
        self.spectrum.is_some()
    }

    /// Returns a copy with a valid spectrum.
    pub fn to_spectral(&self) -> TorusField {
        let spectrum = self.spectral().into_owned();
        Self { grid: self.grid, samples: self.samples.clone(), spectrum: Some(spectrum) }
    }

    /// Returns a copy with valid samples.
    pub fn to_physical(&self) -> Result<TorusField> {
        let samples = self.physical()?.into_owned();
        Ok(Self { grid: self.grid, samples: Some(samples), spectrum: self.spectrum.clone() })
    }

    /// The spectrum, computing it when only samples are held.
    pub fn spectral(&self) -> Cow<'_, [Complex64]> {
        if let Some(s) = &self.spectrum {
            return Cow::Borrowed(s);
        }
        let samples = self.samples.as_ref().expect("field holds neither representation");
        let mut data: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft::forward(&mut data, self.grid.n1(), self.grid.n2());
        Cow::Owned(data)
    }

    /// The samples, computing them when only a spectrum is held.
    pub fn physical(&self) -> Result<Cow<'_, [f64]>> {
        if let Some(s) = &self.samples {
            return Ok(Cow::Borrowed(s));
        }
        let spectrum = self.spectrum.as_ref().expect("field holds neither representation");
        let mut data = spectrum.clone();
        fft::inverse(&mut data, self.grid.n1(), self.grid.n2());
        let norm = spectrum.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let imag = (data.iter().map(|c| c.im * c.im).sum::<f64>() / data.len() as f64).sqrt();
        // absolute floor covers rounding in differences of nearly equal fields
        if imag > 1e-10 * norm + 1e-13 {
            return Err(SmecticError::ConjugateSymmetryViolation { residual: imag });
        }
        Ok(Cow::Owned(data.into_iter().map(|c| c.re).collect()))
    }

    pub fn coefficient(&self, m1: i64, m2: i64) -> Complex64 {
        match self.grid.index_of(m1, m2) {
            Some(idx) => self.spectral()[idx],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Applies `f(mode, coefficient)` to every spectral slot.
    pub fn map_spectrum(&self, f: impl Fn(&Mode, Complex64) -> Complex64) -> TorusField {
        let grid = self.grid;
        let spectrum = self.spectral();
        let out = spectrum.iter().enumerate().map(|(idx, &c)| f(&grid.mode(idx), c)).collect();
        Self { grid, samples: None, spectrum: Some(out) }
    }

    /// Squared L2 norm over the torus (grid mean of squares).
    pub fn norm_sq(&self) -> f64 {
        match (&self.spectrum, &self.samples) {
            (Some(s), _) => s.iter().map(|c| c.norm_sqr()).sum(),
            (None, Some(x)) => x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64,
            (None, None) => unreachable!(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `(mean |f|^p)^(1/p)` over grid samples.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        let x = self.physical()?;
        let n = x.len() as f64;
        Ok((x.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n).powf(1.0 / p))
    }

    pub fn sup_norm(&self) -> Result<f64> {
        Ok(self.physical()?.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    /// L2 inner product over the torus, evaluated on spectra.
    pub fn inner(&self, other: &TorusField) -> Result<f64> {
        self.check_grid(other)?;
        let a = self.spectral();
        let b = other.spectral();
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum())
    }

    pub fn check_grid(&self, other: &TorusField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SmecticError::GridMismatch);
        }
        Ok(())
    }

    /// `a * self + b * other`, computed on spectra.
    pub fn lin_comb(&self, a: f64, other: &TorusField, b: f64) -> Result<TorusField> {
        self.check_grid(other)?;
        let x = self.spectral();
        let y = other.spectral();
        let out = x.iter().zip(y.iter()).map(|(u, v)| u * a + v * b).collect();
        TorusField::from_spectrum(self.grid, out)
    }

    pub fn scale(&self, a: f64) -> TorusField {
        self.map_spectrum(|_, c| c * a)
    }

    /// L2 norm of the k1 = 0 column of the spectrum.
    pub fn k1_zero_content(&self) -> f64 {
        let grid = self.grid;
        let s = self.spectral();
        (0..grid.n2()).map(|j| s[j * grid.n1()].norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest `|m1|` and `|m2|` carrying a coefficient above `rel_tol * max|c|`.
    pub fn band(&self, rel_tol: f64) -> (i64, i64) {
        let s = self.spectral();
        let peak = s.iter().fold(0.0_f64, |m, c| m.max(c.norm()));
        if peak == 0.0 {
            return (0, 0);
        }
        let mut band = (0, 0);
        for (idx, c) in s.iter().enumerate() {
            if c.norm() > rel_tol * peak {
                let mode = self.grid.mode(idx);
                band.0 = band.0.max(mode.m1.abs());
                band.1 = band.1.max(mode.m2.abs());
            }
        }
        band
    }

    /// Spectral interpolation onto another grid; Nyquist slots are dropped.
    pub fn resample(&self, grid: GridSpec) -> TorusField {
        let src = self.spectral();
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, &c) in src.iter().enumerate() {
            let mode = self.grid.mode(idx);
            if mode.is_nyquist() {
                continue;
            }
            if let Some(t) = grid.index_of(mode.m1, mode.m2) {
                let target = grid.mode(t);
                if !target.is_nyquist() {
                    out[t] = c;
                }
            }
        }
        Self { grid, samples: None, spectrum: Some(out) }
    }

    /// Zeroes every k1 = 0 coefficient.
    pub fn project_vanishing_x1_mean(&self) -> AdmissibleField {
        AdmissibleField(self.map_spectrum(|mode, c| if mode.m1 == 0 { Complex64::new(0.0, 0.0) } else { c }))
    }
}

/// A field whose k1 = 0 Fourier column vanishes, i.e. whose x1-average is
/// zero on every horizontal line.
#[derive(Debug, Clone)]
pub struct AdmissibleField(TorusField);

impl AdmissibleField {
    /// Checks the admissibility invariant at [`ADMISSIBLE_TOL`].
    pub fn new(field: TorusField) -> Result<Self> {
        Self::with_tolerance(field, ADMISSIBLE_TOL)
    }

    pub fn with_tolerance(field: TorusField, tolerance: f64) -> Result<Self> {
        let residual = field.k1_zero_content();
        let scale = field.norm();
        if residual > tolerance * scale {
            return Err(SmecticError::NonAdmissibleInput { residual, tolerance: tolerance * scale });
        }
        Ok(Self(field))
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self(TorusField::zeros(grid))
    }

    pub(crate) fn new_unchecked(field: TorusField) -> Self {
        Self(field)
    }

    pub fn field(&self) -> &TorusField {
        &self.0
    }

    pub fn into_inner(self) -> TorusField {
        self.0
    }

    /// `a * self + b * other`; admissibility is closed under linear combination.
    pub fn lin_comb(&self, a: f64, other: &AdmissibleField, b: f64) -> Result<AdmissibleField> {
        Ok(Self(self.0.lin_comb(a, &other.0, b)?))
    }

    pub fn scale(&self, a: f64) -> AdmissibleField {
        Self(self.0.scale(a))
    }

    pub fn to_physical(&self) -> Result<AdmissibleField> {
        Ok(Self(self.0.to_physical()?))
    }

    pub fn resample(&self, grid: GridSpec) -> AdmissibleField {
        Self(self.0.resample(grid))
    }
}

impl Deref for AdmissibleField {
    type Target = TorusField;

    fn deref(&self) -> &TorusField {
        &self.0
    }
}

impl AsRef<TorusField> for AdmissibleField {
    fn as_ref(&self) -> &TorusField {
        &self.0
    }
}

/// Deterministic random admissible field.
///
/// Coefficients are complex Gaussians scaled by `amplitude / (1 + |m|^2)` on
/// `0 < |m1| <= kmax`, `|m2| <= kmax`, with conjugate partners filled in so
/// the field is real.
pub fn random_band_limited(grid: GridSpec, seed: u64, kmax: usize, amplitude: f64) -> Result<AdmissibleField> {
    if kmax == 0 || 3 * kmax >= grid.n1().min(grid.n2()) {
        return Err(SmecticError::BandLimitExceeded {
            detail: format!("kmax {kmax} must satisfy 0 < 3*kmax < {}", grid.n1().min(grid.n2())),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); grid.len()];
    let k = kmax as i64;
    for m1 in 1..=k {
        for m2 in -k..=k {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let weight = amplitude / (1.0 + (m1 * m1 + m2 * m2) as f64);
            let c = Complex64::new(re, im) * weight;
            let idx = grid.index_of(m1, m2).expect("mode within band");
            let conj = grid.index_of(-m1, -m2).expect("mode within band");
            spectrum[idx] = c;
            spectrum[conj] = c.conj();
        }
    }
    Ok(AdmissibleField(TorusField::from_spectrum(grid, spectrum)?))
}
