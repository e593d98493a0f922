//! Reparametrization `psi`, contact exponent `nu` and remainder `w` with
//! `u2(+-zeta) - u1(psi(zeta)) = zeta^nu w(zeta)` and `w(0)` orthogonal to `v0`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::normal_form::{collinear, dot, normal_form, ContactKind, SeriesDisk};
use crate::series::{Coeff, TruncatedSeries, MIN_ORDER};

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonResult<C> {
    /// Real reparametrization with `psi'(0) = 1`.
    pub psi: TruncatedSeries<C>,
    /// `None` when `u2(+-zeta)` is a reparametrization of `u1` to truncation.
    pub nu: Option<usize>,
    /// Remainder, valid to order `N - nu`; zero for reparametrizations.
    pub w: TruncatedSeries<C>,
    pub kind: ContactKind,
    pub mu: usize,
    pub v0: [C; 2],
    /// Contact exponents `nu_1 < nu_2 < ...` met by the recursion.
    pub steps: Vec<usize>,
}

impl<C: Coeff> ComparisonResult<C> {
    /// `w(0)`, or zero for reparametrizations.
    pub fn w0(&self) -> [C; 2] {
        let v = self.w.vector(0);
        [v[0].clone(), v[1].clone()]
    }

    /// `u2(+-zeta) - u1(psi(zeta)) - zeta^nu w(zeta)`, to the common truncation.
    pub fn residual(&self, u1: &SeriesDisk<C>, u2: &SeriesDisk<C>) -> Result<TruncatedSeries<C>> {
        let target = match self.kind {
            ContactKind::Touching => u2.series().clone(),
            ContactKind::Meeting => u2.series().reflect_argument(),
        };
        let diff = target.sub(&u1.series().compose(&self.psi)?)?;
        let tail = self.w.raise(self.nu.unwrap_or(0));
        diff.sub(&tail.truncate(diff.order())?)
    }
}

/// Comparison of two half-disks with equal vanishing order and equal (touching)
/// or opposite (meeting) tangent vectors.
pub fn compare<C: Coeff>(u1: &SeriesDisk<C>, u2: &SeriesDisk<C>) -> Result<ComparisonResult<C>> {
    let nf1 = normal_form(u1)?;
    let nf2 = normal_form(u2)?;
    let mu = nf1.mu;
    if nf2.mu != mu {
        return Err(Error::OrderMismatch(mu, nf2.mu));
    }
    let v0 = nf1.v0.clone();
    if !collinear(&v0, &nf2.v0) {
        return Err(Error::NotTangent);
    }
    let flipped = u2.flipped();
    let (kind, target) = if nf2.v0 == v0 {
        (ContactKind::Touching, u2.series().clone())
    } else if normal_form(&flipped)?.v0 == v0 {
        (ContactKind::Meeting, flipped.into_series())
    } else {
        return Err(Error::TangentLengthMismatch);
    };

    let order = target.order().min(u1.order());
    let norm2 = dot(&v0, &v0);
    let mu_c = C::from_i64(mu as i64);
    let mut psi = TruncatedSeries::scalar(order, &[C::zero(), C::one()])?;
    let mut steps = Vec::new();
    loop {
        let diff = target.sub(&u1.series().compose(&psi)?)?;
        let Some(nu) = diff.valuation() else {
            return Ok(ComparisonResult {
                w: TruncatedSeries::zero(2, order)?,
                psi,
                nu: None,
                kind,
                mu,
                v0,
                steps,
            });
        };
        if nu <= mu {
            return Err(Error::NotTangent);
        }
        if order < nu + MIN_ORDER {
            return Err(Error::ContactBeyondTruncation(order));
        }
        steps.push(nu);
        let lead = diff.vector(nu);
        let w0 = [lead[0].clone(), lead[1].clone()];
        let m = nu - mu + 1;
        let parallel = dot(&w0, &v0) / (mu_c.clone() * norm2.clone());
        if collinear(&w0, &v0) {
            psi.set_coeff(m, 0, psi.coeff(m, 0).clone() + parallel);
            continue;
        }
        let scale = w0[0].magnitude().hypot(w0[1].magnitude());
        let diff = if parallel.is_negligible(scale) {
            diff
        } else {
            psi.set_coeff(m, 0, psi.coeff(m, 0).clone() + parallel);
            target.sub(&u1.series().compose(&psi)?)?
        };
        let w = diff.shift_down(nu)?;
        return Ok(ComparisonResult {
            psi,
            nu: Some(nu),
            w,
            kind,
            mu,
            v0,
            steps,
        });
    }
}
