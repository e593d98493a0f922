//! Truncated power series in one complex variable with values in `C^n`, `n` in `{1, 2}`.
//!
//! Two coefficient backends share one implementation through [`Coeff`]:
//! Gaussian rationals ([`Exact`]) for identities that must hold exactly, and
//! double precision complex numbers ([`Float`]) for interoperation with grid data.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 32;

/// Smallest truncation order a series may carry.
pub const MIN_ORDER: usize = 4;

/// Relative threshold under which a float coefficient counts as zero.
pub const FLOAT_ZERO_REL: f64 = 1e-12;

/// Relative tolerance of float-mode series equality.
pub const FLOAT_EQ_REL: f64 = 1e-10;

/// Exact Gaussian rational coefficients.
pub type Exact = Complex<BigRational>;

/// Double precision coefficients.
pub type Float = Complex64;

/// Scalar field the series coefficients live in.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` when arithmetic is exact.
    const EXACT: bool;

    fn conj(&self) -> Self;
    /// The real part, as a coefficient with zero imaginary part.
    fn real_part(&self) -> Self;
    fn is_real(&self) -> bool;
    fn magnitude(&self) -> f64;
    fn from_i64(n: i64) -> Self;
    /// Exact conversion of a pair of doubles (exact mode keeps every bit).
    fn from_f64s(re: f64, im: f64) -> Self;
    fn to_c64(&self) -> Complex64;

    /// Zero test used for vanishing orders. `scale` is the largest coefficient
    /// magnitude of the series the value belongs to.
    fn is_negligible(&self, scale: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.magnitude() < FLOAT_ZERO_REL * scale.max(f64::MIN_POSITIVE)
        }
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }
}

fn ratio_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

fn ratio_to_f64(x: &BigRational) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Huge numerators and denominators: shift both down first.
            let bits = x.numer().bits().max(x.denom().bits()) as i64;
            let shift = (bits - 900).max(0) as usize;
            let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

impl Coeff for Exact {
    const EXACT: bool = true;

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn real_part(&self) -> Self {
        Complex::new(self.re.clone(), BigRational::zero())
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn magnitude(&self) -> f64 {
        let re = ratio_to_f64(&self.re);
        let im = ratio_to_f64(&self.im);
        num_traits::Float::hypot(re, im)
    }

    fn from_i64(n: i64) -> Self {
        Complex::new(
            BigRational::from_integer(BigInt::from(n)),
            BigRational::zero(),
        )
    }

    fn from_f64s(re: f64, im: f64) -> Self {
        Complex::new(ratio_from_f64(re), ratio_from_f64(im))
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(&self.re), ratio_to_f64(&self.im))
    }
}

impl Coeff for Float {
    const EXACT: bool = false;

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn real_part(&self) -> Self {
        Complex64::new(self.re, 0.0)
    }

    fn is_real(&self) -> bool {
        self.im == 0.0
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }

    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn from_f64s(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }
}

/// Convenience constructor for a real exact coefficient `num / den`.
pub fn rational(num: i64, den: i64) -> Exact {
    Exact::from_ratio(num, den)
}

/// `sum_k c_k zeta^k` for `k = 0..=order`, each `c_k` a vector in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries<C> {
    dim: usize,
    order: usize,
    coeffs: Vec<C>,
    exceeded: bool,
}

impl<C: Coeff> TruncatedSeries<C> {
    pub fn zero(dim: usize, order: usize) -> Result<Self> {
        check_shape(dim, order)?;
        Ok(Self {
            dim,
            order,
            coeffs: vec![C::zero(); dim * (order + 1)],
            exceeded: false,
        })
    }

    /// Builds a series from `f(k, j)`, the `j`-th component of the `zeta^k` coefficient.
    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(usize, usize) -> C) -> Result<Self> {
        check_shape(dim, order)?;
        let mut coeffs = Vec::with_capacity(dim * (order + 1));
        for k in 0..=order {
            for j in 0..dim {
                coeffs.push(f(k, j));
            }
        }
        Ok(Self {
            dim,
            order,
            coeffs,
            exceeded: false,
        })
    }

    /// Scalar series from a (possibly short) coefficient list.
    pub fn scalar(order: usize, coeffs: &[C]) -> Result<Self> {
        Self::from_components(order, &[coeffs])
    }

    /// Vector series from one coefficient list per component. Lists longer
    /// than `order + 1` mark the result as exceeding its truncation.
    pub fn from_components(order: usize, components: &[&[C]]) -> Result<Self> {
        let dim = components.len();
        let mut s = Self::zero(dim, order)?;
        for (j, comp) in components.iter().enumerate() {
            for (k, c) in comp.iter().enumerate() {
                if k <= order {
                    s.coeffs[k * dim + j] = c.clone();
                } else if !c.is_zero() {
                    s.exceeded = true;
                }
            }
        }
        Ok(s)
    }

    /// Stacks scalar series into a vector series.
    pub fn stack(components: &[TruncatedSeries<C>]) -> Result<Self> {
        let dim = components.len();
        let order = components.iter().map(|c| c.order).min().unwrap_or(0);
        for c in components {
            if c.dim != 1 {
                return Err(Error::DimensionMismatch {
                    left: c.dim,
                    right: 1,
                });
            }
        }
        let mut s = Self::zero(dim, order)?;
        for (j, comp) in components.iter().enumerate() {
            for k in 0..=order {
                s.coeffs[k * dim + j] = comp.coeffs[k].clone();
            }
            s.exceeded |= comp.exceeded;
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest index whose coefficient is valid.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Whether some nonzero term was dropped because it lay beyond `order`.
    pub fn truncation_exceeded(&self) -> bool {
        self.exceeded
    }

    pub fn coeff(&self, k: usize, j: usize) -> &C {
        &self.coeffs[k * self.dim + j]
    }

    pub fn set_coeff(&mut self, k: usize, j: usize, value: C) {
        self.coeffs[k * self.dim + j] = value;
    }

    /// Coefficient vector of `zeta^k`.
    pub fn vector(&self, k: usize) -> &[C] {
        &self.coeffs[k * self.dim..(k + 1) * self.dim]
    }

    pub fn component(&self, j: usize) -> TruncatedSeries<C> {
        TruncatedSeries {
            dim: 1,
            order: self.order,
            coeffs: (0..=self.order).map(|k| self.coeff(k, j).clone()).collect(),
            exceeded: self.exceeded,
        }
    }

    /// Largest coefficient magnitude, used as the float zero scale.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().map(Coeff::magnitude).fold(0.0, f64::max)
    }

    fn vector_negligible(&self, k: usize, scale: f64) -> bool {
        self.vector(k).iter().all(|c| c.is_negligible(scale))
    }

    /// Index of the first nonzero coefficient vector, `None` if the series
    /// vanishes up to its truncation order.
    pub fn valuation(&self) -> Option<usize> {
        let scale = self.scale();
        (0..=self.order).find(|&k| !self.vector_negligible(k, scale))
    }

    /// Index of the last nonzero coefficient vector.
    pub fn degree(&self) -> Option<usize> {
        let scale = self.scale();
        (0..=self.order)
            .rev()
            .find(|&k| !self.vector_negligible(k, scale))
    }

    pub fn is_zero_series(&self) -> bool {
        self.valuation().is_none()
    }

    /// Every coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        if C::EXACT {
            self.coeffs.iter().all(Coeff::is_real)
        } else {
            let scale = self.scale();
            self.coeffs
                .iter()
                .all(|c| c.to_c64().im.abs() < FLOAT_ZERO_REL * scale.max(f64::MIN_POSITIVE))
        }
    }

    /// Lowers the truncation order; dropped nonzero terms set the exceeded flag.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        if order >= self.order {
            return Ok(self.clone());
        }
        check_shape(self.dim, order)?;
        let dropped = (order + 1..=self.order).any(|k| self.vector(k).iter().any(|c| !c.is_zero()));
        Ok(Self {
            dim: self.dim,
            order,
            coeffs: self.coeffs[..self.dim * (order + 1)].to_vec(),
            exceeded: self.exceeded || dropped,
        })
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&C, &C) -> C) -> Result<Self> {
        self.check_same_dim(other)?;
        let order = self.order.min(other.order);
        let n = self.dim * (order + 1);
        Ok(Self {
            dim: self.dim,
            order,
            coeffs: (0..n)
                .map(|i| f(&self.coeffs[i], &other.coeffs[i]))
                .collect(),
            exceeded: self.exceeded || other.exceeded,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a.clone() - b.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|c| -c.clone())
    }

    pub fn scale_by(&self, factor: &C) -> Self {
        self.map(|c| c.clone() * factor.clone())
    }

    pub fn map(&self, f: impl Fn(&C) -> C) -> Self {
        Self {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(f).collect(),
            exceeded: self.exceeded,
        }
    }

    /// Product of series. A scalar factor multiplies every component of the
    /// other; two vector series of equal dimension multiply componentwise.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let dim = match (self.dim, other.dim) {
            (1, d) | (d, 1) => d,
            (a, b) if a == b => a,
            (a, b) => return Err(Error::DimensionMismatch { left: a, right: b }),
        };
        let order = self.order.min(other.order);
        let mut out = Self::zero(dim, order)?;
        let (da, db) = (self.degree(), other.degree());
        if let (Some(da), Some(db)) = (da, db) {
            let va = self.valuation().unwrap_or(0);
            let vb = other.valuation().unwrap_or(0);
            for j in 0..dim {
                let ja = if self.dim == 1 { 0 } else { j };
                let jb = if other.dim == 1 { 0 } else { j };
                for i in va..=da.min(order) {
                    let a = self.coeff(i, ja);
                    if a.is_zero() {
                        continue;
                    }
                    for k in vb..=db.min(order - i) {
                        let b = other.coeff(k, jb);
                        if b.is_zero() {
                            continue;
                        }
                        let slot = &mut out.coeffs[(i + k) * dim + j];
                        *slot = slot.clone() + a.clone() * b.clone();
                    }
                }
            }
            out.exceeded = da + db > order;
        }
        out.exceeded |= self.exceeded || other.exceeded;
        Ok(out)
    }

    /// `zeta^k * self`, keeping the truncation order.
    pub fn shift_up(&self, k: usize) -> Self {
        let mut out = Self {
            dim: self.dim,
            order: self.order,
            coeffs: vec![C::zero(); self.coeffs.len()],
            exceeded: self.exceeded,
        };
        for i in 0..=self.order {
            let vec = self.vector(i);
            if i + k <= self.order {
                for (j, c) in vec.iter().enumerate() {
                    out.coeffs[(i + k) * self.dim + j] = c.clone();
                }
            } else if vec.iter().any(|c| !c.is_zero()) {
                out.exceeded = true;
            }
        }
        out
    }

    /// `self / zeta^k`; the first `k` coefficients must vanish. The result is
    /// valid to order `order - k`.
    pub fn shift_down(&self, k: usize) -> Result<Self> {
        if k > self.order {
            return Err(Error::TruncationExhausted {
                needed: k,
                order: self.order,
            });
        }
        let scale = self.scale();
        if (0..k).any(|i| !self.vector_negligible(i, scale)) {
            return Err(Error::NotDivisible { power: k });
        }
        let order = self.order - k;
        Ok(Self {
            dim: self.dim,
            order,
            coeffs: self.coeffs[k * self.dim..].to_vec(),
            exceeded: self.exceeded,
        })
    }

    /// `zeta^k * self` with the truncation order raised by `k`, so nothing is lost.
    pub fn raise(&self, k: usize) -> Self {
        let mut coeffs = vec![C::zero(); self.dim * k];
        coeffs.extend(self.coeffs.iter().cloned());
        Self {
            dim: self.dim,
            order: self.order + k,
            coeffs,
            exceeded: self.exceeded,
        }
    }

    /// Multiplicative inverse of a scalar series with nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: 1,
            });
        }
        let a0 = self.coeffs[0].clone();
        if a0.is_negligible(self.scale()) {
            return Err(Error::NotInvertible);
        }
        let inv0 = C::one() / a0;
        let mut b: Vec<C> = Vec::with_capacity(self.order + 1);
        b.push(inv0.clone());
        for n in 1..=self.order {
            let mut acc = C::zero();
            for k in 1..=n {
                if !self.coeffs[k].is_zero() {
                    acc = acc + self.coeffs[k].clone() * b[n - k].clone();
                }
            }
            b.push(-(acc * inv0.clone()));
        }
        Ok(Self {
            dim: 1,
            order: self.order,
            coeffs: b,
            exceeded: self.exceeded,
        })
    }

    /// Formal derivative; valid one order lower.
    pub fn derivative(&self) -> Self {
        let order = self.order.saturating_sub(1);
        let mut coeffs = Vec::with_capacity(self.dim * (order + 1));
        for k in 1..=self.order {
            let factor = C::from_i64(k as i64);
            for c in self.vector(k) {
                coeffs.push(c.clone() * factor.clone());
            }
        }
        if coeffs.is_empty() {
            coeffs = vec![C::zero(); self.dim];
        }
        Self {
            dim: self.dim,
            order,
            coeffs,
            exceeded: self.exceeded,
        }
    }

    /// Coefficients of `u(psi(zeta))` up to the common truncation order.
    pub fn compose(&self, psi: &Self) -> Result<Self> {
        if psi.dim != 1 {
            return Err(Error::DimensionMismatch {
                left: psi.dim,
                right: 1,
            });
        }
        if !psi.coeffs[0].is_negligible(psi.scale()) {
            return Err(Error::NonzeroConstantTerm);
        }
        let order = self.order.min(psi.order);
        let mut psi = psi.truncate(order)?;
        psi.coeffs[0] = C::zero();
        // Horner in series arithmetic: (((c_d) psi + c_{d-1}) psi + ...) + c_0.
        let mut acc = Self::zero(self.dim, order)?;
        let Some(deg) = self.degree() else {
            acc.exceeded = self.exceeded || psi.exceeded;
            return Ok(acc);
        };
        let deg = deg.min(order);
        for k in (0..=deg).rev() {
            acc = acc.mul(&psi)?;
            for j in 0..self.dim {
                let slot = &mut acc.coeffs[j];
                *slot = slot.clone() + self.coeff(k, j).clone();
            }
        }
        let psi_deg = psi.degree().unwrap_or(0);
        acc.exceeded =
            self.exceeded || psi.exceeded || self.degree().unwrap_or(0) * psi_deg > order;
        Ok(acc)
    }

    /// Series of `zeta -> conj(u(conj zeta))`: coefficientwise conjugation.
    pub fn conjugate_reflect(&self) -> Self {
        self.map(Coeff::conj)
    }

    /// `zeta -> u(-zeta)`.
    pub fn reflect_argument(&self) -> Self {
        let mut out = self.clone();
        for k in (1..=self.order).step_by(2) {
            for j in 0..self.dim {
                let c = out.coeff(k, j).clone();
                out.set_coeff(k, j, -c);
            }
        }
        out
    }

    /// `zeta -> u(lambda zeta)`.
    pub fn rescale_argument(&self, lambda: &C) -> Self {
        let mut out = self.clone();
        let mut power = C::one();
        for k in 0..=self.order {
            for j in 0..self.dim {
                let c = out.coeff(k, j).clone();
                out.set_coeff(k, j, c * power.clone());
            }
            power = power * lambda.clone();
        }
        out
    }

    /// Applies a constant `dim x dim` complex-linear map to every coefficient vector.
    pub fn map_linear(&self, matrix: &[&[C]]) -> Result<Self> {
        if matrix.len() != self.dim || matrix.iter().any(|row| row.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                left: matrix.len(),
                right: self.dim,
            });
        }
        let mut out = self.clone();
        for k in 0..=self.order {
            let v = self.vector(k).to_vec();
            for (i, row) in matrix.iter().enumerate() {
                let mut acc = C::zero();
                for (m, x) in row.iter().zip(v.iter()) {
                    acc = acc + m.clone() * x.clone();
                }
                out.set_coeff(k, i, acc);
            }
        }
        Ok(out)
    }

    /// Evaluates the series at a complex point in double precision.
    pub fn eval(&self, zeta: Complex64) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        for k in (0..=self.order).rev() {
            for (j, a) in acc.iter_mut().enumerate() {
                *a = *a * zeta + self.coeff(k, j).to_c64();
            }
        }
        acc
    }

    /// Evaluates the derivative at a complex point in double precision.
    pub fn eval_derivative(&self, zeta: Complex64) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        for k in (1..=self.order).rev() {
            for (j, a) in acc.iter_mut().enumerate() {
                *a = *a * zeta + self.coeff(k, j).to_c64() * (k as f64);
            }
        }
        acc
    }

    pub fn to_float(&self) -> TruncatedSeries<Float> {
        TruncatedSeries {
            dim: self.dim,
            order: self.order,
            coeffs: self.coeffs.iter().map(Coeff::to_c64).collect(),
            exceeded: self.exceeded,
        }
    }

    /// Equality up to the common truncation order: exact in rational mode,
    /// relative tolerance [`FLOAT_EQ_REL`] in float mode.
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.dim != other.dim {
            return false;
        }
        let order = self.order.min(other.order);
        let n = self.dim * (order + 1);
        if C::EXACT {
            return self.coeffs[..n] == other.coeffs[..n];
        }
        let scale = self.scale().max(other.scale()).max(f64::MIN_POSITIVE);
        self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .all(|(a, b)| (a.clone() - b.clone()).magnitude() <= FLOAT_EQ_REL * scale)
    }
}

impl TruncatedSeries<Float> {
    /// Exact rational copy of a float series (every double is a dyadic rational).
    pub fn to_exact(&self) -> TruncatedSeries<Exact> {
        TruncatedSeries {
            dim: self.dim,
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Exact::from_f64s(c.re, c.im))
                .collect(),
            exceeded: self.exceeded,
        }
    }
}

impl TruncatedSeries<Exact> {
    /// Series with small integer coefficients given as `(re, im)` numerator pairs over `den`.
    pub fn from_integers(order: usize, den: i64, components: &[&[(i64, i64)]]) -> Result<Self> {
        let comps: Vec<Vec<Exact>> = components
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&(re, im)| {
                        Complex::new(
                            BigRational::new(BigInt::from(re), BigInt::from(den)),
                            BigRational::new(BigInt::from(im), BigInt::from(den)),
                        )
                    })
                    .collect()
            })
            .collect();
        let refs: Vec<&[Exact]> = comps.iter().map(Vec::as_slice).collect();
        Self::from_components(order, &refs)
    }
}

fn check_shape(dim: usize, order: usize) -> Result<()> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if order < MIN_ORDER {
        return Err(Error::OrderTooSmall {
            order,
            min: MIN_ORDER,
        });
    }
    Ok(())
}

/// Real rational from an integer pair, for callers building exact data.
pub fn real_ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Nearest exact coefficient to a double (exact binary value).
pub fn exact_from_f64(x: f64) -> Exact {
    Complex::new(ratio_from_f64(x), BigRational::zero())
}

/// Lossy conversion of an exact real rational, used in reports.
pub fn ratio_f64(x: &BigRational) -> f64 {
    ratio_to_f64(x)
}
