//! JSON file formats: series, structures, attached disks, curve
//! configurations and grid dumps.

use std::fmt;

use halfdisk_core::adjunction::CurveConfig;
use halfdisk_core::grid::{GridField, C2};
use halfdisk_core::linking::FloatDisk;
use halfdisk_core::normal_form::SeriesDisk;
use halfdisk_core::series::{Exact, Float, TruncatedSeries, DEFAULT_ORDER};
use halfdisk_core::solver::{AttachedDisk, EtaCusp, EtaLine};
use halfdisk_core::structures::{
    blend_cones, coupled_example, minus_structure, to_point, BundleStructure, EtaBundle,
    EtaExample, LinearCayleyField, Mat4, Point, Pullback, SampledField, Standard, StructureField,
};
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = "halfdisk/1";

pub type DynDisk = Box<dyn AttachedDisk + Send + Sync>;

/// A malformed document, located by a JSON pointer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormatError {
    pub pointer: String,
    pub message: String,
}

impl FormatError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    /// Prefixes the pointer with the location of the enclosing value.
    pub fn within(mut self, prefix: &str) -> Self {
        self.pointer = format!("{prefix}{}", self.pointer);
        self
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() {
            "/"
        } else {
            &self.pointer
        };
        write!(f, "at {at}: {}", self.message)
    }
}

impl std::error::Error for FormatError {}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

/// Deserializes `value`, reporting failures with the JSON pointer of the
/// offending element.
pub fn from_value<T: DeserializeOwned>(value: &Value) -> Result<T, FormatError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            match seg {
                serde_path_to_error::Segment::Seq { index } => {
                    pointer.push_str(&format!("/{index}"))
                }
                serde_path_to_error::Segment::Map { key } => {
                    pointer.push_str(&format!("/{}", escape(key)))
                }
                serde_path_to_error::Segment::Enum { .. }
                | serde_path_to_error::Segment::Unknown => {}
            }
        }
        FormatError::new(pointer, e.into_inner().to_string())
    })
}

/// A real number: an integer, a double, or an exact rational `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Ratio(String),
}

impl Number {
    pub fn zero() -> Self {
        Number::Int(0)
    }

    pub fn to_ratio(&self) -> Result<BigRational, String> {
        match self {
            Number::Int(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
            Number::Float(x) => {
                BigRational::from_float(*x).ok_or_else(|| format!("{x} is not a finite number"))
            }
            Number::Ratio(s) => {
                let r: BigRational = s
                    .trim()
                    .parse()
                    .map_err(|_| format!("{s:?} is not a rational p/q"))?;
                Ok(r)
            }
        }
    }

    pub fn to_f64(&self) -> Result<f64, String> {
        match self {
            Number::Int(n) => Ok(*n as f64),
            Number::Float(x) => Ok(*x),
            Number::Ratio(_) => Ok(self.to_ratio()?.to_f64().unwrap_or(f64::NAN)),
        }
    }

    pub fn from_ratio(r: &BigRational) -> Self {
        if r.denom().is_one() {
            if let Some(n) = r.numer().to_i64() {
                return Number::Int(n);
            }
        }
        Number::Ratio(format!("{}/{}", r.numer(), r.denom()))
    }

    /// Canonical spelling: reduced rationals, integers for whole ratios.
    pub fn normalized(&self) -> Result<Self, String> {
        match self {
            Number::Ratio(_) => Ok(Self::from_ratio(&self.to_ratio()?)),
            Number::Float(x) if !x.is_finite() => Err(format!("{x} is not a finite number")),
            other => Ok(other.clone()),
        }
    }
}

/// Coefficient types that can be read from and written to [`Number`] pairs.
pub trait JsonCoeff: halfdisk_core::series::Coeff {
    fn from_pair(pair: &[Number; 2]) -> Result<Self, String>;
    fn to_pair(&self) -> [Number; 2];
}

impl JsonCoeff for Exact {
    fn from_pair(pair: &[Number; 2]) -> Result<Self, String> {
        Ok(Complex::new(pair[0].to_ratio()?, pair[1].to_ratio()?))
    }
    fn to_pair(&self) -> [Number; 2] {
        [Number::from_ratio(&self.re), Number::from_ratio(&self.im)]
    }
}

impl JsonCoeff for Float {
    fn from_pair(pair: &[Number; 2]) -> Result<Self, String> {
        Ok(Complex64::new(pair[0].to_f64()?, pair[1].to_f64()?))
    }
    fn to_pair(&self) -> [Number; 2] {
        [Number::Float(self.re), Number::Float(self.im)]
    }
}

/// `{"dim": n, "order": N, "coeffs": [[[re, im], ...], ...]}`, one coefficient
/// list per component, lowest power first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesJson {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub coeffs: Vec<Vec<[Number; 2]>>,
}

impl SeriesJson {
    /// Effective truncation order: the override, then the stated order, then
    /// the default.
    pub fn effective_order(&self, truncation: Option<usize>) -> usize {
        truncation.or(self.order).unwrap_or(DEFAULT_ORDER)
    }

    /// The series truncated or zero-padded to `order`.
    pub fn to_series<C: JsonCoeff>(
        &self,
        truncation: Option<usize>,
    ) -> Result<TruncatedSeries<C>, FormatError> {
        if self.coeffs.len() != self.dim {
            return Err(FormatError::new(
                "/coeffs",
                format!("{} component lists for dim {}", self.coeffs.len(), self.dim),
            ));
        }
        let order = self.effective_order(truncation);
        let mut comps: Vec<Vec<C>> = Vec::with_capacity(self.dim);
        for (j, list) in self.coeffs.iter().enumerate() {
            let mut comp = Vec::with_capacity(list.len());
            for (k, pair) in list.iter().enumerate() {
                let c = C::from_pair(pair)
                    .map_err(|m| FormatError::new(format!("/coeffs/{j}/{k}"), m))?;
                comp.push(c);
            }
            comp.truncate(order + 1);
            comps.push(comp);
        }
        let refs: Vec<&[C]> = comps.iter().map(Vec::as_slice).collect();
        TruncatedSeries::from_components(order, &refs)
            .map_err(|e| FormatError::new("", e.to_string()))
    }

    pub fn to_disk<C: JsonCoeff>(
        &self,
        truncation: Option<usize>,
    ) -> Result<SeriesDisk<C>, FormatError> {
        SeriesDisk::new(self.to_series(truncation)?)
            .map_err(|e| FormatError::new("", e.to_string()))
    }

    /// Coefficients up to the last nonzero power.
    pub fn from_series<C: JsonCoeff>(s: &TruncatedSeries<C>) -> Self {
        let last = (0..=s.order())
            .rev()
            .find(|&k| (0..s.dim()).any(|j| !s.coeff(k, j).is_zero()))
            .unwrap_or(0);
        let coeffs = (0..s.dim())
            .map(|j| (0..=last).map(|k| s.coeff(k, j).to_pair()).collect())
            .collect();
        Self {
            dim: s.dim(),
            order: Some(s.order()),
            coeffs,
        }
    }

    /// Fills in the order and spells every number canonically.
    pub fn normalized(&self, truncation: Option<usize>) -> Result<Self, FormatError> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (j, list) in self.coeffs.iter().enumerate() {
            let mut out = Vec::with_capacity(list.len());
            for (k, [a, b]) in list.iter().enumerate() {
                let at = |m| FormatError::new(format!("/coeffs/{j}/{k}"), m);
                out.push([a.normalized().map_err(at)?, b.normalized().map_err(at)?]);
            }
            coeffs.push(out);
        }
        Ok(Self {
            dim: self.dim,
            order: Some(self.effective_order(truncation)),
            coeffs,
        })
    }
}

fn matrix(entries: &[f64], pointer: &str) -> Result<Mat4, FormatError> {
    if entries.len() != 16 {
        return Err(FormatError::new(
            pointer,
            format!("expected 16 row-major entries, got {}", entries.len()),
        ));
    }
    Ok(Mat4::from_row_slice(entries))
}

pub fn matrix_rows(m: &Mat4) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, x) in row.iter_mut().enumerate() {
            *x = m[(r, c)] + 0.0;
        }
    }
    out
}

/// Structure fields on `R^4`, selected by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StructureSpec {
    Standard,
    /// `J_st + s y1 E`.
    Eta {
        scale: f64,
    },
    /// See [`coupled_example`].
    Coupled {
        scale: f64,
    },
    /// `K(sum_k z_k A_k)`, four row-major 4x4 matrices.
    LinearCayley {
        coefficients: Vec<Vec<f64>>,
    },
    /// Nearest-sample lookup.
    Sampled {
        points: Vec<[f64; 4]>,
        matrices: Vec<Vec<f64>>,
    },
    /// `J^-(z) = -tau J(conj z) tau`.
    Minus {
        inner: Box<StructureSpec>,
    },
    /// Cone blend of `inner` and its minus structure.
    Blend {
        inner: Box<StructureSpec>,
        cone: f64,
    },
}

impl StructureSpec {
    pub fn build(&self) -> Result<Box<dyn StructureField>, FormatError> {
        Ok(match self {
            StructureSpec::Standard => Box::new(Standard),
            StructureSpec::Eta { scale } => Box::new(EtaExample { scale: *scale }),
            StructureSpec::Coupled { scale } => Box::new(coupled_example(*scale)),
            StructureSpec::LinearCayley { coefficients } => {
                if coefficients.len() != 4 {
                    return Err(FormatError::new("/coefficients", "expected four matrices"));
                }
                let mut a = [Mat4::zeros(); 4];
                for (k, m) in coefficients.iter().enumerate() {
                    a[k] = matrix(m, &format!("/coefficients/{k}"))?;
                }
                Box::new(LinearCayleyField::new(a))
            }
            StructureSpec::Sampled { points, matrices } => {
                let pts = points
                    .iter()
                    .map(|p| Point::new(p[0], p[1], p[2], p[3]))
                    .collect();
                let mats = matrices
                    .iter()
                    .enumerate()
                    .map(|(k, m)| matrix(m, &format!("/matrices/{k}")))
                    .collect::<Result<Vec<_>, _>>()?;
                Box::new(
                    SampledField::new(pts, mats)
                        .map_err(|e| FormatError::new("", e.to_string()))?,
                )
            }
            StructureSpec::Minus { inner } => Box::new(minus_structure(
                inner.build().map_err(|e| e.within("/inner"))?,
            )),
            StructureSpec::Blend { inner, cone } => {
                let j = inner.build().map_err(|e| e.within("/inner"))?;
                Box::new(
                    blend_cones(j, *cone).map_err(|e| FormatError::new("/cone", e.to_string()))?,
                )
            }
        })
    }
}

/// Initial half-disks for the grid solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DiskSpec {
    /// A real polynomial, holomorphic for `J_st`.
    Series { series: SeriesJson },
    /// `(zeta, i s eta^2 / 2)`.
    EtaLine { scale: f64 },
    /// `(zeta^2, zeta^3 + (i s / 4)(|zeta|^4 - Re zeta^4))`.
    EtaCusp { scale: f64 },
}

impl DiskSpec {
    pub fn build(&self) -> Result<DynDisk, FormatError> {
        Ok(match self {
            DiskSpec::Series { series } => {
                let disk: SeriesDisk<Float> =
                    series.to_disk(None).map_err(|e| e.within("/series"))?;
                Box::new(FloatDisk::new(&disk))
            }
            DiskSpec::EtaLine { scale } => Box::new(EtaLine { scale: *scale }),
            DiskSpec::EtaCusp { scale } => Box::new(EtaCusp { scale: *scale }),
        })
    }

    pub fn normalized(&self) -> Result<Self, FormatError> {
        Ok(match self {
            DiskSpec::Series { series } => DiskSpec::Series {
                series: series.normalized(None).map_err(|e| e.within("/series"))?,
            },
            other => other.clone(),
        })
    }
}

/// Structures on the trivial bundle over the parameter disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BundleSpec {
    Standard,
    /// `J(xi + i eta)` with `s eta` in the lower block.
    EtaBundle {
        scale: f64,
    },
    /// `zeta -> J(u(zeta))`.
    Pullback {
        structure: StructureSpec,
        disk: DiskSpec,
    },
}

struct DiskPullback {
    inner: Pullback<Box<dyn StructureField>, Box<dyn Fn(Complex64) -> Point + Send + Sync>>,
}

impl BundleStructure for DiskPullback {
    fn eval(&self, zeta: Complex64) -> Mat4 {
        self.inner.eval(zeta)
    }
}

impl BundleSpec {
    pub fn build(&self) -> Result<Box<dyn BundleStructure>, FormatError> {
        Ok(match self {
            BundleSpec::Standard => Box::new(Standard),
            BundleSpec::EtaBundle { scale } => Box::new(EtaBundle { scale: *scale }),
            BundleSpec::Pullback { structure, disk } => {
                let j = structure.build().map_err(|e| e.within("/structure"))?;
                let u = disk.build().map_err(|e| e.within("/disk"))?;
                let map: Box<dyn Fn(Complex64) -> Point + Send + Sync> =
                    Box::new(move |z| to_point(u.eval(z)));
                Box::new(DiskPullback {
                    inner: Pullback::new(j, map),
                })
            }
        })
    }
}

/// Mirror of [`CurveConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfigJson {
    pub g: u32,
    pub sigma: u32,
    pub delta_b: u32,
    pub delta_i: u32,
    pub kappa_i: u32,
    pub normal_maslov: i64,
    pub maslov_total: i64,
    pub double_sq: i64,
}

impl From<CurveConfigJson> for CurveConfig {
    fn from(c: CurveConfigJson) -> Self {
        CurveConfig {
            g: c.g,
            sigma: c.sigma,
            delta_b: c.delta_b,
            delta_i: c.delta_i,
            kappa_i: c.kappa_i,
            normal_maslov: c.normal_maslov,
            maslov_total: c.maslov_total,
            double_sq: c.double_sq,
        }
    }
}

impl From<CurveConfig> for CurveConfigJson {
    fn from(c: CurveConfig) -> Self {
        CurveConfigJson {
            g: c.g,
            sigma: c.sigma,
            delta_b: c.delta_b,
            delta_i: c.delta_i,
            kappa_i: c.kappa_i,
            normal_maslov: c.normal_maslov,
            maslov_total: c.maslov_total,
            double_sq: c.double_sq,
        }
    }
}

/// One component of a grid field: `values[j * side + i]` at
/// `(-1 + i h, -1 + j h)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDump {
    pub h: f64,
    pub side: usize,
    pub values: Vec<[f64; 2]>,
}

impl GridDump {
    pub fn component(field: &GridField<C2>, c: usize) -> Self {
        let g = field.grid();
        Self {
            h: g.h(),
            side: g.side(),
            values: field.values().iter().map(|v| [v[c].re, v[c].im]).collect(),
        }
    }
}
