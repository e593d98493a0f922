//! Boundary intersection index as the linking number of the traces of the
//! reflected disks on a small sphere `S^3_r`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::intersection::{IndexMethod, IndexReport};
use crate::normal_form::{collinear, graph_over, ContactKind, SeriesDisk};
use crate::series::{Coeff, Float, TruncatedSeries};
use crate::structures::Point;

/// Default number of samples per trace.
pub const DEFAULT_SAMPLES: usize = 512;

/// Largest admissible distance of the linking integral from an integer.
pub const RESIDUAL_GUARD: f64 = 0.2;

/// Fraction of the convergence radius proxy used as default sphere radius.
pub const DEFAULT_RADIUS_FRACTION: f64 = 0.3;

/// A reflected half-disk `zeta -> u~(zeta)` on the unit disk.
pub trait ReflectedMap: Sync {
    fn eval(&self, zeta: Complex64) -> [Complex64; 2];
}

impl<M: ReflectedMap + ?Sized> ReflectedMap for &M {
    fn eval(&self, zeta: Complex64) -> [Complex64; 2] {
        (**self).eval(zeta)
    }
}

/// Double precision copy of a series disk for fast evaluation. The series
/// has real coefficients, so evaluating it below the edge is the reflection.
#[derive(Clone, Debug)]
pub struct FloatDisk {
    coeffs: Vec<[Complex64; 2]>,
}

impl FloatDisk {
    pub fn new<C: Coeff>(u: &SeriesDisk<C>) -> Self {
        let s = u.series();
        let mut coeffs: Vec<[Complex64; 2]> = (0..=s.order())
            .map(|k| [s.coeff(k, 0).to_c64(), s.coeff(k, 1).to_c64()])
            .collect();
        while coeffs.len() > 1
            && coeffs
                .last()
                .is_some_and(|c| c[0].norm() == 0.0 && c[1].norm() == 0.0)
        {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Coefficients of `zeta^k`, trailing zeros dropped.
    pub fn coeffs(&self) -> &[[Complex64; 2]] {
        &self.coeffs
    }
}

impl ReflectedMap for FloatDisk {
    fn eval(&self, zeta: Complex64) -> [Complex64; 2] {
        let mut a = Complex64::new(0.0, 0.0);
        let mut b = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            a = a * zeta + c[0];
            b = b * zeta + c[1];
        }
        [a, b]
    }
}

/// `1 / max_k (|c_k| / |c_mu|)^(1 / (k - mu))`: the scale where higher terms
/// catch up with the leading one. Infinite for a monomial.
pub fn convergence_radius_proxy<C: Coeff>(u: &SeriesDisk<C>) -> f64 {
    let s = u.series();
    let Some(mu) = s.valuation() else {
        return 0.0;
    };
    let norm = |k: usize| s.coeff(k, 0).magnitude().hypot(s.coeff(k, 1).magnitude());
    let lead = norm(mu);
    let mut worst: f64 = 0.0;
    for k in mu + 1..=s.order() {
        let c = norm(k);
        if c > 0.0 {
            worst = worst.max((c / lead).powf(1.0 / (k - mu) as f64));
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        1.0 / worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkingConfig {
    /// Sphere radius; derived from the inputs when `None`.
    pub radius: Option<f64>,
    pub samples: usize,
    /// Radius halvings allowed when a precondition fails.
    pub max_halvings: usize,
}

impl Default for LinkingConfig {
    fn default() -> Self {
        Self {
            radius: None,
            samples: DEFAULT_SAMPLES,
            max_halvings: 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkingOutcome {
    pub value: f64,
    pub index: i64,
    pub residual: f64,
    pub radius: f64,
}

/// Parameter on the ray of angle `theta` where `|u~|` reaches `r`.
fn crossing<M: ReflectedMap + ?Sized>(map: &M, theta: f64, r: f64) -> Result<f64> {
    const STEPS: usize = 256;
    let dir = Complex64::from_polar(1.0, theta);
    let size = |rho: f64| {
        let v = map.eval(dir * rho);
        v[0].norm_sqr() + v[1].norm_sqr()
    };
    let target = r * r;
    let mut prev = 0.0;
    let mut lo = 0.0;
    for k in 1..=STEPS {
        let rho = k as f64 / STEPS as f64;
        let s = size(rho);
        if !s.is_finite() || s <= prev {
            return Err(Error::Linking("trace is not transverse to the sphere"));
        }
        if s >= target {
            let mut hi = rho;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if size(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = s;
        lo = rho;
    }
    Err(Error::Linking(
        "sphere radius exceeds the image of the unit disk",
    ))
}

/// `2n` points of the trace at angles `pi k / n`; even ones are polygon
/// vertices, odd ones measure the sagitta.
fn trace<M: ReflectedMap + ?Sized>(map: &M, r: f64, n: usize) -> Result<Vec<Point>> {
    (0..2 * n)
        .map(|k| {
            let theta = PI * k as f64 / n as f64;
            let rho = crossing(map, theta, r)?;
            let v = map.eval(Complex64::from_polar(rho, theta));
            Ok(Point::new(v[0].re, v[0].im, v[1].re, v[1].im) / r)
        })
        .collect()
}

/// Orientation convention of the projection, calibrated so that the two
/// complex coordinate axes link with `+1`.
const ORIENTATION: f64 = -1.0;

/// Stereographic projection of the unit sphere from a pole `n`, in an
/// orthonormal basis `b` of `n^perp` with `det[n, b] > 0`.
struct Stereo {
    pole: Point,
    basis: [Point; 3],
}

impl Stereo {
    fn new(pole: Point) -> Self {
        let pole = pole.normalize();
        let mut basis: Vec<Point> = Vec::with_capacity(3);
        for i in 0..4 {
            let mut v = Point::zeros();
            v[i] = 1.0;
            v -= pole * pole.dot(&v);
            for b in &basis {
                v -= b * b.dot(&v);
            }
            if v.norm() > 1e-6 && basis.len() < 3 {
                basis.push(v.normalize());
            }
        }
        let frame = nalgebra::Matrix4::from_columns(&[pole, basis[0], basis[1], basis[2]]);
        if frame.determinant() * ORIENTATION < 0.0 {
            basis[0] = -basis[0];
        }
        Self {
            pole,
            basis: [basis[0], basis[1], basis[2]],
        }
    }

    fn project(&self, p: &Point) -> Vector3<f64> {
        let d = 1.0 - self.pole.dot(p);
        Vector3::new(
            self.basis[0].dot(p),
            self.basis[1].dot(p),
            self.basis[2].dot(p),
        ) / d
    }
}

/// Candidate poles: the coordinate axes and the diagonals `(+-1, +-1, +-1, +-1) / 2`.
fn candidate_poles() -> Vec<Point> {
    let mut out = Vec::with_capacity(24);
    for axis in 0..4 {
        for sign in [1.0, -1.0] {
            let mut p = Point::zeros();
            p[axis] = sign;
            out.push(p);
        }
    }
    for bits in 0..16u32 {
        let c = |i: u32| if bits & (1 << i) == 0 { 0.5 } else { -0.5 };
        out.push(Point::new(c(0), c(1), c(2), c(3)));
    }
    out
}

/// The pole farthest from both traces.
fn choose_pole(curves: &[&[Point]]) -> Stereo {
    let mut best = (Point::zeros(), -1.0f64);
    for pole in candidate_poles() {
        let closest = curves
            .iter()
            .flat_map(|c| c.iter())
            .map(|p| (p - pole).norm())
            .fold(f64::INFINITY, f64::min);
        if closest > best.1 {
            best = (pole, closest);
        }
    }
    Stereo::new(best.0)
}

fn segment_distance(
    p0: &Vector3<f64>,
    p1: &Vector3<f64>,
    q0: &Vector3<f64>,
    q1: &Vector3<f64>,
) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 {
        ((b * f - c * e) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let mut t = if e > 0.0 { (b * s + f) / e } else { 0.0 };
    if t < 0.0 {
        t = 0.0;
        s = if a > 0.0 {
            (-c / a).clamp(0.0, 1.0)
        } else {
            0.0
        };
    } else if t > 1.0 {
        t = 1.0;
        s = if a > 0.0 {
            ((b - c) / a).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Exact linking number of two closed polygons (signed solid angles of the
/// quadrilaterals spanned by every pair of edges).
pub fn polygon_linking(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    let asin = |x: f64| x.clamp(-1.0, 1.0).asin();
    let unit = |v: Vector3<f64>| {
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            v
        }
    };
    let mut total = 0.0;
    for i in 0..a.len() {
        let p1 = a[i];
        let p2 = a[(i + 1) % a.len()];
        for j in 0..b.len() {
            let p3 = b[j];
            let p4 = b[(j + 1) % b.len()];
            let r13 = p3 - p1;
            let r14 = p4 - p1;
            let r23 = p3 - p2;
            let r24 = p4 - p2;
            let n1 = unit(r13.cross(&r14));
            let n2 = unit(r14.cross(&r24));
            let n3 = unit(r24.cross(&r23));
            let n4 = unit(r23.cross(&r13));
            let omega =
                asin(n1.dot(&n2)) + asin(n2.dot(&n3)) + asin(n3.dot(&n4)) + asin(n4.dot(&n1));
            let orient = (p4 - p3).cross(&(p2 - p1)).dot(&r13);
            if orient > 0.0 {
                total += omega;
            } else if orient < 0.0 {
                total -= omega;
            }
        }
    }
    total / (4.0 * PI)
}

/// Linking number of the traces of `m1` and `m2` on the sphere of radius `r`.
pub fn linking_number<M1, M2>(m1: &M1, m2: &M2, r: f64, samples: usize) -> Result<LinkingOutcome>
where
    M1: ReflectedMap + ?Sized,
    M2: ReflectedMap + ?Sized,
{
    if samples < 8 || !(r > 0.0) {
        return Err(Error::InvalidConfig(
            "linking needs a positive radius and at least 8 samples",
        ));
    }
    let t1 = trace(m1, r, samples)?;
    let t2 = trace(m2, r, samples)?;
    let stereo = choose_pole(&[&t1, &t2]);
    let fine1: Vec<Vector3<f64>> = t1.iter().map(|p| stereo.project(p)).collect();
    let fine2: Vec<Vector3<f64>> = t2.iter().map(|p| stereo.project(p)).collect();
    let poly1: Vec<Vector3<f64>> = fine1.iter().step_by(2).copied().collect();
    let poly2: Vec<Vector3<f64>> = fine2.iter().step_by(2).copied().collect();
    // Chord deviation of each edge, widened to its neighbours.
    let sagitta = |fine: &[Vector3<f64>]| -> Vec<f64> {
        let raw: Vec<f64> = (0..samples)
            .map(|k| {
                let a = fine[2 * k];
                let b = fine[(2 * k + 2) % fine.len()];
                (fine[2 * k + 1] - (a + b) * 0.5).norm()
            })
            .collect();
        (0..samples)
            .map(|k| {
                raw[(k + samples - 1) % samples]
                    .max(raw[k])
                    .max(raw[(k + 1) % samples])
            })
            .collect()
    };
    let (s1, s2) = (sagitta(&fine1), sagitta(&fine2));
    // Moving each edge onto its arc cannot cross the other curve while every
    // pair of edges is farther apart than the two deviations, with margin 2.
    let mut clear = true;
    for i in 0..samples {
        for j in 0..samples {
            let d = segment_distance(
                &poly1[i],
                &poly1[(i + 1) % samples],
                &poly2[j],
                &poly2[(j + 1) % samples],
            );
            if !(d > 2.0 * (s1[i] + s2[j])) {
                clear = false;
            }
        }
    }
    if !clear {
        return Err(Error::Linking("traces too close for the sampling density"));
    }
    let value = polygon_linking(&poly1, &poly2);
    let index = value.round();
    Ok(LinkingOutcome {
        value,
        index: index as i64,
        residual: (value - index).abs(),
        radius: r,
    })
}

/// `|g(z) / z^nu|` bounded away from zero on `|z| <= bound`, where `g` is the
/// graph difference: no intersections other than the origin nearby.
fn isolated_on<C: Coeff>(u1: &SeriesDisk<C>, u2: &SeriesDisk<C>, r: f64) -> Result<bool> {
    let v1 = u1.tangent()?;
    let v2 = u2.tangent()?;
    if !collinear(&v1, &v2) {
        return Ok(true);
    }
    let g: TruncatedSeries<Float> = graph_over(u2, &v1)?.sub(&graph_over(u1, &v1)?)?.to_float();
    let Some(nu) = g.valuation() else {
        return Ok(false);
    };
    let lead = g.coeff(nu, 0).norm();
    let v = v1[0].to_c64().re.hypot(v1[1].to_c64().re);
    let bound = 1.2 * r * v;
    for i in 1..=16 {
        let rad = bound * i as f64 / 16.0;
        for k in 0..64 {
            let z = Complex64::from_polar(rad, 2.0 * PI * k as f64 / 64.0);
            let value = g.eval(z)[0] / z.powu(nu as u32);
            if value.norm() < 0.25 * lead {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn default_radius<C: Coeff>(u: &SeriesDisk<C>) -> Result<f64> {
    let v = u.tangent()?;
    let len = v[0].to_c64().re.hypot(v[1].to_c64().re);
    Ok(DEFAULT_RADIUS_FRACTION * convergence_radius_proxy(u).min(1.0) * len)
}

/// Index of two series half-disks from the linking number of their traces,
/// halving the radius while the traces fail to separate.
pub fn boundary_index_linking<C: Coeff>(
    u1: &SeriesDisk<C>,
    u2: &SeriesDisk<C>,
    cfg: &LinkingConfig,
) -> Result<IndexReport> {
    for u in [u1, u2] {
        let mu = u.mu()?;
        if mu != 1 {
            return Err(Error::NotImmersed(mu));
        }
    }
    let mut r = match cfg.radius {
        Some(r) => r,
        None => default_radius(u1)?.min(default_radius(u2)?),
    };
    let m1 = FloatDisk::new(u1);
    let m2 = FloatDisk::new(u2);
    let mut last = Error::Linking("no admissible sphere radius");
    for _ in 0..=cfg.max_halvings {
        if isolated_on(u1, u2, r)? {
            match linking_number(&m1, &m2, r, cfg.samples) {
                Ok(out) => return finish(out, u1, u2),
                Err(e @ Error::Linking(_)) => last = e,
                Err(e) => return Err(e),
            }
        } else {
            last = Error::Linking("other intersections inside the sphere");
        }
        r *= 0.5;
    }
    Err(last)
}

fn finish<C: Coeff>(
    out: LinkingOutcome,
    u1: &SeriesDisk<C>,
    u2: &SeriesDisk<C>,
) -> Result<IndexReport> {
    if out.residual > RESIDUAL_GUARD {
        return Err(Error::LinkingResidual {
            residual: out.residual,
        });
    }
    let v1 = u1.tangent()?;
    let v2 = u2.tangent()?;
    let kind = if crate::normal_form::positive(&crate::normal_form::dot(&v1, &v2)) {
        ContactKind::Touching
    } else {
        ContactKind::Meeting
    };
    Ok(IndexReport {
        index: out.index,
        method: IndexMethod::Linking,
        nu: None,
        tangency: None,
        sphere_radius: Some(out.radius),
        residual: Some(out.residual),
        transverse: out.index == 1,
        kind,
    })
}

/// Linking-route index for arbitrary reflected maps at a fixed radius.
pub fn boundary_index_linking_maps<M1, M2>(
    m1: &M1,
    m2: &M2,
    r: f64,
    samples: usize,
) -> Result<LinkingOutcome>
where
    M1: ReflectedMap + ?Sized,
    M2: ReflectedMap + ?Sized,
{
    let out = linking_number(m1, m2, r, samples)?;
    if out.residual > RESIDUAL_GUARD {
        return Err(Error::LinkingResidual {
            residual: out.residual,
        });
    }
    Ok(out)
}
