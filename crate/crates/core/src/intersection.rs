//! Boundary intersection index of two immersed half-disks through the origin,
//! and the perturbation that splits it into real transverse intersections.

use alloc::vec::Vec;

use num_traits::{One, ToPrimitive, Zero};

use crate::comparison::compare;
use crate::error::{Error, Result};
use crate::normal_form::{
    collinear, dot, graph_over, positive, series_inverse, tangency_order, Contact, ContactKind,
    SeriesDisk,
};
use crate::roots::{durand_kerner, real_roots, RationalPoly};
use crate::series::{exact_from_f64, Coeff, Exact, TruncatedSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexMethod {
    Series,
    Linking,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexReport {
    pub index: i64,
    pub method: IndexMethod,
    /// Contact exponent from the comparison recursion.
    pub nu: Option<usize>,
    /// Order of tangency from the graph reduction.
    pub tangency: Option<usize>,
    pub sphere_radius: Option<f64>,
    /// Distance of the linking integral from the nearest integer.
    pub residual: Option<f64>,
    pub transverse: bool,
    pub kind: ContactKind,
}

fn immersed<C: Coeff>(u: &SeriesDisk<C>) -> Result<()> {
    let mu = u.mu()?;
    if mu != 1 {
        return Err(Error::NotImmersed(mu));
    }
    Ok(())
}

/// `u2(zeta / |lambda|)` where `v2 = lambda v1`, so both tangents have equal length.
fn match_tangent_length<C: Coeff>(v1: &[C; 2], u2: &SeriesDisk<C>) -> Result<SeriesDisk<C>> {
    let v2 = u2.tangent()?;
    let lambda = dot(&v2, v1) / dot(v1, v1);
    let abs = if positive(&lambda) { lambda } else { -lambda };
    SeriesDisk::new(u2.series().rescale_argument(&(C::one() / abs)))
}

/// Index through the comparison recursion: `nu` for tangent pairs, 1 for
/// transverse ones.
pub fn boundary_index_series<C: Coeff>(
    u1: &SeriesDisk<C>,
    u2: &SeriesDisk<C>,
) -> Result<IndexReport> {
    immersed(u1)?;
    immersed(u2)?;
    let v1 = u1.tangent()?;
    let v2 = u2.tangent()?;
    let tangency = tangency_order(u1, u2)?;
    if !collinear(&v1, &v2) {
        return Ok(IndexReport {
            index: 1,
            method: IndexMethod::Series,
            nu: None,
            tangency: Some(1),
            sphere_radius: None,
            residual: None,
            transverse: true,
            kind: tangency.kind,
        });
    }
    let scaled = match_tangent_length(&v1, u2)?;
    let cmp = compare(u1, &scaled)?;
    let nu = cmp.nu.ok_or(Error::Coincident)?;
    let d = match tangency.order {
        Contact::Finite(d) => Some(d),
        Contact::Infinite { .. } => None,
    };
    Ok(IndexReport {
        index: nu as i64,
        method: IndexMethod::Series,
        nu: Some(nu),
        tangency: d,
        sphere_radius: None,
        residual: None,
        transverse: nu == 1,
        kind: cmp.kind,
    })
}

/// Outcome of [`split_to_transverse`].
#[derive(Clone, Debug)]
pub struct SplitReport {
    pub index: usize,
    /// `u2` plus the added terms `delta * zeta^power * e_perp`.
    pub perturbed: SeriesDisk<Exact>,
    /// `(power, delta)` of every added term, in order.
    pub terms: Vec<(usize, f64)>,
    /// Graph difference truncated at degree `index`.
    pub polynomial: RationalPoly,
    /// Intersection parameters on `u1`, sorted.
    pub roots: Vec<f64>,
    /// Distinct real roots of `polynomial`, counted exactly.
    pub exact_real_roots: usize,
    pub squarefree: bool,
}

/// Perturbation rounds allowed per unit of index.
const ROUNDS_PER_ORDER: usize = 4;

/// Halvings of a single perturbation size before giving up.
const MAX_HALVINGS: usize = 40;

struct Splitter<'a> {
    g1: TruncatedSeries<Exact>,
    axis: [Exact; 2],
    e_perp: [Exact; 2],
    u2: &'a SeriesDisk<Exact>,
    degree: usize,
}

impl Splitter<'_> {
    fn polynomial(&self, terms: &[(usize, Exact)]) -> Result<(RationalPoly, SeriesDisk<Exact>)> {
        let mut s = self.u2.series().clone();
        for (power, delta) in terms {
            for j in 0..2 {
                let c = s.coeff(*power, j).clone() + delta.clone() * self.e_perp[j].clone();
                s.set_coeff(*power, j, c);
            }
        }
        let disk = SeriesDisk::new(s)?;
        let g2 = graph_over(&disk, &self.axis)?;
        let diff = g2.sub(&self.g1)?;
        let coeffs = (0..=self.degree)
            .map(|k| diff.coeff(k, 0).re.clone())
            .collect();
        Ok((RationalPoly::new(coeffs), disk))
    }
}

fn zero_multiplicity(p: &RationalPoly) -> usize {
    p.coeffs().iter().take_while(|c| c.is_zero()).count()
}

/// `p / x^m` with `m` the multiplicity of the root 0.
fn strip_zero(p: &RationalPoly) -> RationalPoly {
    RationalPoly::new(p.coeffs()[zero_multiplicity(p)..].to_vec())
}

/// Every nonzero root real and simple, counted exactly.
fn nonzero_roots_real_simple(p: &RationalPoly) -> bool {
    let q = strip_zero(p);
    let deg = q.degree().unwrap_or(0);
    deg == 0 || (q.is_squarefree() && q.distinct_real_roots() == deg)
}

/// Real roots, with the root at 0 (known exactly) inserted with its multiplicity.
fn float_roots(p: &RationalPoly) -> Vec<f64> {
    let mut roots = real_roots(&durand_kerner(&strip_zero(p).to_f64(), 2000));
    roots.extend(core::iter::repeat_n(0.0, zero_multiplicity(p)));
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// Largest power of two not above `x`.
fn dyadic_floor(x: f64) -> f64 {
    let e = x.log2().floor();
    2f64.powi(e as i32)
}

/// Adds terms `delta_k zeta^(m-1) e_perp` to `u2`, one per round, each
/// splitting one real root off the origin, until the `nu` intersections near
/// the origin are real and simple.
pub fn split_to_transverse(
    u1: &SeriesDisk<Exact>,
    u2: &SeriesDisk<Exact>,
    epsilon: f64,
) -> Result<SplitReport> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidConfig("epsilon must be positive"));
    }
    let report = boundary_index_series(u1, u2)?;
    let nu = report.index as usize;
    let axis = u1.tangent()?;
    let e_perp = [-axis[1].clone(), axis[0].clone()];
    let g1 = graph_over(u1, &axis)?;
    let f1_inverse = {
        let s = u1.series();
        let first = s
            .component(0)
            .scale_by(&axis[0])
            .add(&s.component(1).scale_by(&axis[1]))?;
        series_inverse(&first)?.to_float()
    };
    let to_parameter = |z: f64| f1_inverse.eval(num_complex::Complex64::new(z, 0.0))[0].re;

    if nu == 1 {
        // A transverse intersection is already simple and real.
        let p = RationalPoly::new(alloc::vec![Zero::zero(), One::one()]);
        return Ok(SplitReport {
            index: 1,
            perturbed: u2.clone(),
            terms: Vec::new(),
            roots: alloc::vec![0.0],
            exact_real_roots: 1,
            squarefree: true,
            polynomial: p,
        });
    }

    let splitter = Splitter {
        g1,
        axis,
        e_perp,
        u2,
        degree: nu,
    };
    let mut terms: Vec<(usize, Exact)> = Vec::new();
    let (mut p, _) = splitter.polynomial(&terms)?;
    let budget = ROUNDS_PER_ORDER * nu;
    let mut rounds = 0;
    while zero_multiplicity(&p) > 1 {
        rounds += 1;
        if rounds > budget {
            return Err(Error::RootsNotSeparated(budget));
        }
        let m = zero_multiplicity(&p);
        let power = m - 1;
        // Effect of a unit term on the coefficient of z^power.
        let mut probe = terms.clone();
        probe.push((power, Exact::one()));
        let (unit, _) = splitter.polynomial(&probe)?;
        let c = (unit.coeffs()[power].clone()
            - p.coeffs().get(power).cloned().unwrap_or_else(Zero::zero))
        .to_f64()
        .unwrap_or(0.0)
        .abs();
        let lead = crate::series::ratio_f64(&p.coeffs()[m]).abs();
        let existing: Vec<f64> = float_roots(&p)
            .into_iter()
            .filter(|r| *r != 0.0)
            .map(f64::abs)
            .collect();
        let mut delta = if existing.is_empty() {
            epsilon
        } else {
            let nearest = existing.iter().cloned().fold(f64::INFINITY, f64::min);
            dyadic_floor((nearest / 8.0 * lead / c.max(f64::MIN_POSITIVE)).min(epsilon))
        };
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = terms.clone();
            trial.push((power, exact_from_f64(delta)));
            let (q, _) = splitter.polynomial(&trial)?;
            if zero_multiplicity(&q) == m - 1 && nonzero_roots_real_simple(&q) {
                accepted = Some((trial, q));
                break;
            }
            delta /= 2.0;
        }
        let Some((trial, q)) = accepted else {
            return Err(Error::RootsNotSeparated(rounds));
        };
        terms = trial;
        p = q;
    }
    let (p, disk) = splitter.polynomial(&terms)?;
    Ok(SplitReport {
        index: nu,
        perturbed: disk,
        terms: terms.iter().map(|(k, d)| (*k, d.to_c64().re)).collect(),
        roots: float_roots(&p).into_iter().map(to_parameter).collect(),
        exact_real_roots: p.distinct_real_roots(),
        squarefree: p.is_squarefree(),
        polynomial: p,
    })
}
