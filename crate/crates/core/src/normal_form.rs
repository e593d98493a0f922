//! Vanishing order, tangent vector and polynomial normal form of a half-disk,
//! plus the order of tangency of two immersed half-disks.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::{Coeff, TruncatedSeries};

/// A half-disk `u: (D+, edge, 0) -> (R^4, R^2, 0)` given by its Taylor series
/// in `zeta`, with values in `C^2`. Real coefficients encode the boundary
/// condition on the edge; the same series evaluated on the lower half is the
/// extension by reflection.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesDisk<C> {
    series: TruncatedSeries<C>,
}

impl<C: Coeff> SeriesDisk<C> {
    pub fn new(series: TruncatedSeries<C>) -> Result<Self> {
        if series.dim() != 2 {
            return Err(Error::DimensionMismatch {
                left: series.dim(),
                right: 2,
            });
        }
        if !series.is_real() {
            let scale = series.scale();
            let index = (0..=series.order())
                .find(|&k| {
                    series.vector(k).iter().any(|c| {
                        let im = c.clone() - c.real_part();
                        !im.is_negligible(scale)
                    })
                })
                .unwrap_or(0);
            return Err(Error::NotReal { index });
        }
        let scale = series.scale();
        if series.vector(0).iter().any(|c| !c.is_negligible(scale)) {
            return Err(Error::NotCentered);
        }
        Ok(Self { series })
    }

    pub fn series(&self) -> &TruncatedSeries<C> {
        &self.series
    }

    pub fn into_series(self) -> TruncatedSeries<C> {
        self.series
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    /// Vanishing order at zero.
    pub fn mu(&self) -> Result<usize> {
        self.series.valuation().ok_or(Error::VanishesToTruncation)
    }

    /// Leading coefficient vector.
    pub fn tangent(&self) -> Result<[C; 2]> {
        let mu = self.mu()?;
        let v = self.series.vector(mu);
        Ok([v[0].real_part(), v[1].real_part()])
    }

    /// `zeta -> u(-zeta)`.
    pub fn flipped(&self) -> Self {
        Self {
            series: self.series.reflect_argument(),
        }
    }

    /// Precomposition with a real reparametrization `psi = zeta + O(zeta^2)`.
    pub fn reparametrize(&self, psi: &TruncatedSeries<C>) -> Result<Self> {
        Self::new(self.series.compose(psi)?)
    }

    /// Applies a constant real 2x2 block acting complex-linearly on `C^2`.
    pub fn map_block(&self, block: [[C; 2]; 2]) -> Result<Self> {
        let rows: [&[C]; 2] = [&block[0], &block[1]];
        Self::new(self.series.map_linear(&rows)?)
    }
}

/// `u = zeta^mu P(zeta) + zeta^(2 mu - 1) R(zeta)` with `P` a real polynomial
/// of degree at most `mu - 1`, `P(0) = v0` and `R(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm<C> {
    pub mu: usize,
    pub v0: [C; 2],
    pub polynomial: TruncatedSeries<C>,
    pub remainder: TruncatedSeries<C>,
}

impl<C: Coeff> NormalForm<C> {
    /// `zeta^mu P + zeta^(2 mu - 1) R`, valid to the order of the input.
    pub fn recompose(&self) -> Result<TruncatedSeries<C>> {
        let order = self.polynomial.order();
        let head = self.polynomial.shift_up(self.mu);
        let tail = self.remainder.raise(2 * self.mu - 1).truncate(order)?;
        head.add(&tail)
    }
}

pub fn normal_form<C: Coeff>(u: &SeriesDisk<C>) -> Result<NormalForm<C>> {
    let s = u.series();
    let mu = u.mu()?;
    let order = s.order();
    if 2 * mu - 1 > order {
        return Err(Error::TruncationExhausted {
            needed: 2 * mu - 1,
            order,
        });
    }
    let v0 = u.tangent()?;
    let polynomial = TruncatedSeries::from_fn(2, order, |k, j| {
        if k < mu && mu + k <= order {
            s.coeff(mu + k, j).clone()
        } else {
            C::zero()
        }
    })?;
    let head = polynomial.shift_up(mu);
    let remainder = s.sub(&head)?.shift_down(2 * mu - 1)?;
    Ok(NormalForm {
        mu,
        v0,
        polynomial,
        remainder,
    })
}

/// Compositional inverse of a scalar series with `f(0) = 0`, `f'(0) != 0`,
/// by Lagrange inversion: `[zeta^n] g = (1/n) [w^(n-1)] (w / f(w))^n`.
pub fn series_inverse<C: Coeff>(f: &TruncatedSeries<C>) -> Result<TruncatedSeries<C>> {
    if f.dim() != 1 {
        return Err(Error::DimensionMismatch {
            left: f.dim(),
            right: 1,
        });
    }
    let scale = f.scale();
    if !f.coeff(0, 0).is_negligible(scale) {
        return Err(Error::NonzeroConstantTerm);
    }
    if f.coeff(1, 0).is_negligible(scale) {
        return Err(Error::NotInvertible);
    }
    let order = f.order();
    let mut zeroed = f.clone();
    zeroed.set_coeff(0, 0, C::zero());
    let h = zeroed.shift_down(1)?.reciprocal()?;
    let mut coeffs: Vec<C> = Vec::with_capacity(order + 1);
    coeffs.push(C::zero());
    let mut power = h.clone();
    for n in 1..=order {
        if n > 1 {
            power = power.mul(&h)?;
        }
        coeffs.push(power.coeff(n - 1, 0).clone() / C::from_i64(n as i64));
    }
    TruncatedSeries::scalar(order, &coeffs)
}

/// Whether the boundary tangent vectors point the same way or opposite ways.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ContactKind {
    Touching,
    Meeting,
}

/// Order of tangency, or agreement of the graphs up to the truncation order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Contact {
    Finite(usize),
    Infinite { valid_to: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tangency {
    pub order: Contact,
    pub kind: ContactKind,
}

pub(crate) fn dot<C: Coeff>(a: &[C; 2], b: &[C; 2]) -> C {
    a[0].clone() * b[0].clone() + a[1].clone() * b[1].clone()
}

pub(crate) fn cross<C: Coeff>(a: &[C; 2], b: &[C; 2]) -> C {
    a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone()
}

pub(crate) fn collinear<C: Coeff>(a: &[C; 2], b: &[C; 2]) -> bool {
    let scale = a[0].magnitude().hypot(a[1].magnitude()) * b[0].magnitude().hypot(b[1].magnitude());
    cross(a, b).is_negligible(scale)
}

pub(crate) fn positive<C: Coeff>(c: &C) -> bool {
    c.to_c64().re > 0.0
}

/// Second coordinate of `u` written as a graph over the tangent line of
/// `axis`: rotate-and-scale so `axis` lies along `e1`, invert the first
/// coordinate and substitute.
pub(crate) fn graph_over<C: Coeff>(u: &SeriesDisk<C>, axis: &[C; 2]) -> Result<TruncatedSeries<C>> {
    let block = [
        [axis[0].clone(), axis[1].clone()],
        [-axis[1].clone(), axis[0].clone()],
    ];
    let rows: [&[C]; 2] = [&block[0], &block[1]];
    let turned = u.series().map_linear(&rows)?;
    let first = turned.component(0);
    let second = turned.component(1);
    let inverse = series_inverse(&first)?;
    second.compose(&inverse)
}

/// Order of tangency of two immersed half-disks and their contact kind.
/// Non-collinear tangents give order 1.
pub fn tangency_order<C: Coeff>(u1: &SeriesDisk<C>, u2: &SeriesDisk<C>) -> Result<Tangency> {
    for u in [u1, u2] {
        let mu = u.mu()?;
        if mu != 1 {
            return Err(Error::NotImmersed(mu));
        }
    }
    let v1 = u1.tangent()?;
    let v2 = u2.tangent()?;
    let kind = if positive(&dot(&v1, &v2)) || dot(&v1, &v2).is_zero() {
        ContactKind::Touching
    } else {
        ContactKind::Meeting
    };
    if !collinear(&v1, &v2) {
        return Ok(Tangency {
            order: Contact::Finite(1),
            kind,
        });
    }
    let g1 = graph_over(u1, &v1)?;
    let g2 = graph_over(u2, &v1)?;
    let diff = g2.sub(&g1)?;
    let order = match diff.valuation() {
        Some(d) => Contact::Finite(d),
        None => Contact::Infinite {
            valid_to: diff.order(),
        },
    };
    Ok(Tangency { order, kind })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rational, Exact, DEFAULT_ORDER};
    use num_traits::Zero;

    fn disk(components: &[&[(i64, i64)]]) -> SeriesDisk<Exact> {
        SeriesDisk::new(TruncatedSeries::from_integers(DEFAULT_ORDER, 1, components).unwrap())
            .unwrap()
    }

    fn poly(coeffs: &[i64]) -> TruncatedSeries<Exact> {
        let c: Vec<Exact> = coeffs.iter().map(|&x| rational(x, 1)).collect();
        TruncatedSeries::scalar(DEFAULT_ORDER, &c).unwrap()
    }

    #[test]
    fn flat_disk_normal_form() {
        let u = disk(&[&[(0, 0), (1, 0)], &[]]);
        let nf = normal_form(&u).unwrap();
        assert_eq!(nf.mu, 1);
        assert_eq!(nf.v0, [rational(1, 1), rational(0, 1)]);
        assert_eq!(nf.polynomial.degree(), Some(0));
        assert!(nf.remainder.is_zero_series());
    }

    #[test]
    fn cusp_normal_form() {
        let u = disk(&[&[(0, 0), (0, 0), (1, 0)], &[(0, 0), (0, 0), (0, 0), (1, 0)]]);
        let nf = normal_form(&u).unwrap();
        assert_eq!(nf.mu, 2);
        assert_eq!(nf.v0, [rational(1, 1), rational(0, 1)]);
        assert_eq!(nf.recompose().unwrap(), *u.series());
        assert!(nf.remainder.coeff(0, 0).is_zero());
    }

    #[test]
    fn zero_map_vanishes_to_truncation() {
        let u = disk(&[&[], &[]]);
        assert_eq!(normal_form(&u), Err(Error::VanishesToTruncation));
    }

    #[test]
    fn imaginary_coefficient_is_rejected() {
        let s = TruncatedSeries::from_integers(8, 1, &[&[(0, 0), (1, 0), (0, 1)], &[]]).unwrap();
        assert_eq!(SeriesDisk::new(s), Err(Error::NotReal { index: 2 }));
    }

    #[test]
    fn inverse_examples() {
        let id = poly(&[0, 1]);
        assert_eq!(series_inverse(&id).unwrap(), id);
        let two = poly(&[0, 2]);
        let half =
            TruncatedSeries::scalar(DEFAULT_ORDER, &[rational(0, 1), rational(1, 2)]).unwrap();
        assert_eq!(series_inverse(&two).unwrap(), half);
        let f = poly(&[0, 1, 1]);
        let g = series_inverse(&f).unwrap();
        // Catalan numbers with alternating signs.
        let expected = [0i64, 1, -1, 2, -5, 14, -42, 132];
        for (k, &c) in expected.iter().enumerate() {
            assert_eq!(*g.coeff(k, 0), rational(c, 1));
        }
        assert!(f.compose(&g).unwrap().approx_eq(&id));
        assert!(g.compose(&f).unwrap().approx_eq(&id));
    }

    #[test]
    fn inverse_requires_nonzero_derivative() {
        assert_eq!(series_inverse(&poly(&[0, 0, 1])), Err(Error::NotInvertible));
    }

    #[test]
    fn tangency_examples() {
        let flat = disk(&[&[(0, 0), (1, 0)], &[]]);
        let t = tangency_order(
            &flat,
            &disk(&[&[(0, 0), (1, 0)], &[(0, 0), (0, 0), (1, 0)]]),
        )
        .unwrap();
        assert_eq!(
            t,
            Tangency {
                order: Contact::Finite(2),
                kind: ContactKind::Touching
            }
        );
        let t = tangency_order(&flat, &disk(&[&[(0, 0), (1, 0)], &[(0, 0), (1, 0)]])).unwrap();
        assert_eq!(
            t,
            Tangency {
                order: Contact::Finite(1),
                kind: ContactKind::Touching
            }
        );
        let t = tangency_order(
            &flat,
            &disk(&[&[(0, 0), (-1, 0)], &[(0, 0), (0, 0), (0, 0), (1, 0)]]),
        )
        .unwrap();
        assert_eq!(
            t,
            Tangency {
                order: Contact::Finite(3),
                kind: ContactKind::Meeting
            }
        );
        let t = tangency_order(&flat, &flat).unwrap();
        assert_eq!(
            t.order,
            Contact::Infinite {
                valid_to: DEFAULT_ORDER
            }
        );
    }

    #[test]
    fn tangency_refuses_cusps() {
        let flat = disk(&[&[(0, 0), (1, 0)], &[]]);
        let cusp = disk(&[&[(0, 0), (0, 0), (1, 0)], &[(0, 0), (0, 0), (0, 0), (1, 0)]]);
        assert_eq!(tangency_order(&flat, &cusp), Err(Error::NotImmersed(2)));
    }
}
