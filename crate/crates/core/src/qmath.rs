//! Two-level linear algebra: complex 2x2 matrices, two-component states and
//! the two numerical propagator oracles (series exponential and fine-step
//! Runge-Kutta integration).
//!
//! Units: angular frequencies in rad/μs, rates in 1/μs, times in μs.

use std::ops::{Add, Mul, Sub};

use crate::error::{ensure_finite, invalid, Result};

pub use num_complex::Complex64 as Complex;

const ZERO: Complex = Complex::new(0.0, 0.0);
const ONE: Complex = Complex::new(1.0, 0.0);

/// Terms kept in the truncated exponential series after scaling.
const SERIES_TERMS: usize = 18;
/// Upper bound on the scaled generator norm before the series is applied.
const SCALED_NORM_BOUND: f64 = 0.5;

/// How a frequency label such as "50 MHz" is turned into a rate in 1/μs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyConvention {
    /// The label already is the angular frequency or rate (50 MHz → 50 /μs).
    Angular,
    /// The label is an ordinary frequency; multiply by 2π (50 MHz → 100π /μs).
    Ordinary,
}

impl FrequencyConvention {
    pub fn to_rate(self, label_mhz: f64) -> f64 {
        match self {
            FrequencyConvention::Angular => label_mhz,
            FrequencyConvention::Ordinary => 2.0 * std::f64::consts::PI * label_mhz,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FrequencyConvention::Angular => "angular",
            FrequencyConvention::Ordinary => "ordinary",
        }
    }
}

/// Convention applied to tunneling-rate labels throughout the crate.
pub const RATE_LABEL_CONVENTION: FrequencyConvention = FrequencyConvention::Angular;

/// A 2x2 complex matrix, entries stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [Complex; 4],
}

impl Mat2 {
    pub const fn new(m00: Complex, m01: Complex, m10: Complex, m11: Complex) -> Self {
        Mat2 {
            m: [m00, m01, m10, m11],
        }
    }

    pub const fn zero() -> Self {
        Mat2 { m: [ZERO; 4] }
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex {
        self.m[2 * row + col]
    }

    pub fn scale(&self, s: Complex) -> Mat2 {
        Mat2 {
            m: self.m.map(|z| z * s),
        }
    }

    pub fn dagger(&self) -> Mat2 {
        let [a, b, c, d] = self.m;
        Mat2::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn trace(&self) -> Complex {
        self.m[0] + self.m[3]
    }

    pub fn det(&self) -> Complex {
        self.m[0] * self.m[3] - self.m[1] * self.m[2]
    }

    /// Maximum absolute row sum (induced ∞-norm).
    pub fn norm_inf(&self) -> f64 {
        let r0 = self.m[0].norm() + self.m[1].norm();
        let r1 = self.m[2].norm() + self.m[3].norm();
        r0.max(r1)
    }

    /// Largest element-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    #[inline]
    pub fn apply(&self, psi: &TwoLevelState) -> TwoLevelState {
        TwoLevelState {
            a0: self.m[0] * psi.a0 + self.m[1] * psi.a1,
            a1: self.m[2] * psi.a0 + self.m[3] * psi.a1,
        }
    }

    fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("{what} has non-finite entries")))
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let [a, b, c, d] = self.m;
        let [e, f, g, h] = rhs.m;
        Mat2::new(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let mut m = self.m;
        for (x, y) in m.iter_mut().zip(rhs.m) {
            *x += y;
        }
        Mat2 { m }
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut m = self.m;
        for (x, y) in m.iter_mut().zip(rhs.m) {
            *x -= y;
        }
        Mat2 { m }
    }
}

/// Amplitudes of |0⟩ (ground) and |1⟩ (excited).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelState {
    pub a0: Complex,
    pub a1: Complex,
}

impl TwoLevelState {
    pub const fn ground() -> Self {
        TwoLevelState { a0: ONE, a1: ZERO }
    }

    pub const fn excited() -> Self {
        TwoLevelState { a0: ZERO, a1: ONE }
    }

    /// Normalized state with the given amplitudes.
    pub fn new(a0: Complex, a1: Complex) -> Result<Self> {
        TwoLevelState { a0, a1 }.normalized()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a0.norm_sqr() + self.a1.norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn ground_population(&self) -> f64 {
        self.a0.norm_sqr()
    }

    pub fn excited_population(&self) -> f64 {
        self.a1.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(invalid(format!("cannot normalize state with norm {n}")));
        }
        Ok(TwoLevelState {
            a0: self.a0 / n,
            a1: self.a1 / n,
        })
    }

    pub fn max_abs_diff(&self, other: &TwoLevelState) -> f64 {
        (self.a0 - other.a0).norm().max((self.a1 - other.a1).norm())
    }
}

/// `e^{-iMt}` by scaling and squaring a truncated Taylor series.
///
/// The generator `-iMt` is halved `s` times until its ∞-norm is at most 0.5,
/// an 18-term series is summed, and the result is squared `s` times. The
/// truncation remainder is below 0.5^18/18! and far under 1e-12.
pub fn mat_exp(m: &Mat2, t: f64) -> Result<Mat2> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(invalid(format!("t must be non-negative, got {t}")));
    }
    m.ensure_finite("generator")?;

    let a = m.scale(Complex::new(0.0, -t));
    let norm = a.norm_inf();
    let mut squarings = 0u32;
    if norm > SCALED_NORM_BOUND {
        squarings = (norm / SCALED_NORM_BOUND).log2().ceil() as u32;
    }
    let a = a.scale(Complex::new(0.5f64.powi(squarings as i32), 0.0));

    let mut sum = Mat2::identity();
    let mut term = Mat2::identity();
    for k in 1..=SERIES_TERMS {
        term = (term * a).scale(Complex::new(1.0 / k as f64, 0.0));
        sum = sum + term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum.ensure_finite("propagator")?;
    Ok(sum)
}

/// Integrates `dψ/dt = -iMψ` from 0 to `t` with `steps` classical RK4 steps.
///
/// Independent of [`mat_exp`]; used as a second oracle for the closed forms.
pub fn fine_step_integrate(
    m: &Mat2,
    psi0: &TwoLevelState,
    t: f64,
    steps: usize,
) -> Result<TwoLevelState> {
    if steps == 0 {
        return Err(invalid("steps must be at least 1"));
    }
    ensure_finite("t", t)?;
    if t < 0.0 {
        return Err(invalid(format!("t must be non-negative, got {t}")));
    }
    m.ensure_finite("generator")?;

    let gen = m.scale(Complex::new(0.0, -1.0));
    let h = t / steps as f64;
    let half = Complex::new(h / 2.0, 0.0);
    let full = Complex::new(h, 0.0);
    let sixth = Complex::new(h / 6.0, 0.0);
    let two = Complex::new(2.0, 0.0);

    let axpy = |y: &TwoLevelState, k: &TwoLevelState, s: Complex| TwoLevelState {
        a0: y.a0 + k.a0 * s,
        a1: y.a1 + k.a1 * s,
    };

    let mut y = *psi0;
    for _ in 0..steps {
        let k1 = gen.apply(&y);
        let k2 = gen.apply(&axpy(&y, &k1, half));
        let k3 = gen.apply(&axpy(&y, &k2, half));
        let k4 = gen.apply(&axpy(&y, &k3, full));
        y = TwoLevelState {
            a0: y.a0 + (k1.a0 + two * k2.a0 + two * k3.a0 + k4.a0) * sixth,
            a1: y.a1 + (k1.a1 + two * k2.a1 + two * k3.a1 + k4.a1) * sixth,
        };
    }
    Ok(y)
}
