//! Polynomial roots: Durand-Kerner in floating point and exact real-root
//! counting over the rationals by Sturm sequences.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// A root whose imaginary part is below this is declared real.
pub const REAL_ROOT_TOL: f64 = 1e-9;

/// All complex roots of `sum_k c_k x^k` (leading coefficient nonzero).
pub fn durand_kerner(coeffs: &[f64], max_iter: usize) -> Vec<Complex64> {
    let mut c: Vec<f64> = coeffs.to_vec();
    while c.len() > 1 && *c.last().unwrap() == 0.0 {
        c.pop();
    }
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let lead = c[n];
    let monic: Vec<f64> = c.iter().map(|x| x / lead).collect();
    // Cauchy bound for the initial circle.
    let bound = 1.0 + monic[..n].iter().map(|x| x.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32) * (bound / 2.0).min(1.0).max(1e-3))
        .collect();
    let eval = |x: Complex64| {
        monic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
    };
    for _ in 0..max_iter {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-300, 0.0);
            }
            let step = eval(z[i]) / denom;
            z[i] -= step;
            moved = moved.max(step.norm() / z[i].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Real roots among `roots`, sorted, after pairing off conjugates.
pub fn real_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut out: Vec<f64> = roots
        .iter()
        .filter(|r| r.im.abs() < REAL_ROOT_TOL)
        .map(|r| r.re)
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Exact polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
    }

    /// Remainder of Euclidean division by a nonzero `d`.
    pub fn rem(&self, d: &Self) -> Self {
        let dd = d.degree().expect("division by the zero polynomial");
        let lead = d.coeffs[dd].clone();
        let mut r = self.coeffs.clone();
        while r.len() > dd && !r.is_empty() {
            let top = r.len() - 1;
            let q = r[top].clone() / lead.clone();
            if !q.is_zero() {
                for (k, c) in d.coeffs.iter().enumerate() {
                    let slot = &mut r[top - dd + k];
                    *slot = slot.clone() - q.clone() * c.clone();
                }
            }
            r.pop();
            while r.last().is_some_and(Zero::is_zero) {
                r.pop();
            }
        }
        Self::new(r)
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// No repeated complex roots.
    pub fn is_squarefree(&self) -> bool {
        self.gcd(&self.derivative()).degree().unwrap_or(0) == 0
    }

    /// Number of distinct real roots, by a Sturm sequence.
    pub fn distinct_real_roots(&self) -> usize {
        let Some(deg) = self.degree() else {
            return 0;
        };
        if deg == 0 {
            return 0;
        }
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(Self::new(r.coeffs.into_iter().map(|c| -c).collect()));
        }
        let sign_changes = |signs: Vec<i32>| {
            let nz: Vec<i32> = signs.into_iter().filter(|&s| s != 0).collect();
            nz.windows(2).filter(|w| w[0] != w[1]).count()
        };
        let sign = |c: &BigRational| {
            if c.is_positive() {
                1
            } else if c.is_negative() {
                -1
            } else {
                0
            }
        };
        let at_pos: Vec<i32> = seq.iter().map(|p| sign(p.coeffs.last().unwrap())).collect();
        let at_neg: Vec<i32> = seq
            .iter()
            .map(|p| {
                let s = sign(p.coeffs.last().unwrap());
                if p.degree().unwrap() % 2 == 1 {
                    -s
                } else {
                    s
                }
            })
            .collect();
        sign_changes(at_neg) - sign_changes(at_pos)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(crate::series::ratio_f64).collect()
    }
}
