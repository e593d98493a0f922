//! Maslov indices, the Schottky-double self-intersection and the adjunction
//! identity for curves with boundary, as integer bookkeeping.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Integer invariants of a curve `M` with boundary on a totally real surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CurveConfig {
    pub g: u32,
    pub sigma: u32,
    pub delta_b: u32,
    pub delta_i: u32,
    pub kappa_i: u32,
    pub normal_maslov: i64,
    pub maslov_total: i64,
    /// `[M^d]^2`.
    pub double_sq: i64,
}

impl CurveConfig {
    /// An embedded curve: no double points or cusps, `[M^d]^2` equal to the
    /// normal Maslov index.
    pub fn embedded(g: u32, sigma: u32, normal_maslov: i64) -> Result<Self> {
        if sigma == 0 {
            return Err(Error::InconsistentConfig(
                "a curve with boundary has sigma >= 1",
            ));
        }
        Ok(Self {
            g,
            sigma,
            delta_b: 0,
            delta_i: 0,
            kappa_i: 0,
            normal_maslov,
            maslov_total: normal_maslov + maslov_tangent(g, sigma),
            double_sq: normal_maslov,
        })
    }

    /// `sigma >= 1` and `maslov_total = normal_maslov + 4 - 4g - 2 sigma`.
    pub fn validate(&self) -> Result<()> {
        if self.sigma == 0 {
            return Err(Error::InconsistentConfig(
                "a curve with boundary has sigma >= 1",
            ));
        }
        if self.maslov_total != self.normal_maslov + maslov_tangent(self.g, self.sigma) {
            return Err(Error::InconsistentConfig(
                "maslov_total != normal_maslov + 4 - 4g - 2 sigma",
            ));
        }
        Ok(())
    }

    /// `normal_maslov + 4 delta_i + 4 kappa_i + 2 delta_b`, the value of
    /// `[M^d]^2` forced by the double point and cusp counts.
    pub fn expected_double_sq(&self) -> i64 {
        self.normal_maslov
            + 4 * self.delta_i as i64
            + 4 * self.kappa_i as i64
            + 2 * self.delta_b as i64
    }

    /// Euler characteristic of the immersed curve, `2 - 2g - sigma - delta_b`.
    pub fn euler(&self) -> i64 {
        2 - 2 * self.g as i64 - self.sigma as i64 - self.delta_b as i64
    }
}

/// Signs of the nondegenerate zeros of a section.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SectionZeroData {
    pub interior_zeros: Vec<i8>,
    pub boundary_zeros: Vec<i8>,
}

fn signed_count(signs: &[i8]) -> Result<i64> {
    signs.iter().try_fold(0i64, |acc, &s| match s {
        1 | -1 => Ok(acc + s as i64),
        _ => Err(Error::InconsistentConfig("zero signs must be +1 or -1")),
    })
}

/// Interior zeros count twice, boundary zeros once.
pub fn maslov_from_zeros(z: &SectionZeroData) -> Result<i64> {
    Ok(2 * signed_count(&z.interior_zeros)? + signed_count(&z.boundary_zeros)?)
}

/// Zero count of the doubled section on the Schottky double: every interior
/// zero appears with its mirror image, boundary zeros lie on the fixed locus.
pub fn double_chern_count(z: &SectionZeroData) -> Result<i64> {
    let mirrored: Vec<i8> = z
        .interior_zeros
        .iter()
        .chain(z.interior_zeros.iter())
        .copied()
        .collect();
    Ok(signed_count(&mirrored)? + signed_count(&z.boundary_zeros)?)
}

/// Maslov index of the tangent pair of a genus `g` curve with `sigma`
/// boundary circles.
pub fn maslov_tangent(g: u32, sigma: u32) -> i64 {
    4 - 4 * g as i64 - 2 * sigma as i64
}

pub fn maslov_sum(m1: i64, m2: i64) -> i64 {
    m1 + m2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    Unequal { gap: i64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdjunctionCheck {
    /// `2g + sigma`.
    pub lhs: i64,
    /// `([M^d]^2 - mu(M)) / 2 + 2 - delta_b - 2 delta_i - 2 kappa_i`.
    pub rhs: i64,
    pub verdict: Verdict,
}

pub fn check_adjunction(cfg: &CurveConfig) -> Result<AdjunctionCheck> {
    cfg.validate()?;
    let diff = cfg.double_sq - cfg.maslov_total;
    if diff % 2 != 0 {
        return Err(Error::InconsistentConfig("double_sq - maslov_total is odd"));
    }
    let lhs = 2 * cfg.g as i64 + cfg.sigma as i64;
    let rhs = diff / 2 + 2 - cfg.delta_b as i64 - 2 * cfg.delta_i as i64 - 2 * cfg.kappa_i as i64;
    let verdict = if lhs == rhs {
        Verdict::Equal
    } else {
        Verdict::Unequal { gap: lhs - rhs }
    };
    Ok(AdjunctionCheck { lhs, rhs, verdict })
}

/// Perturbs an interior cusp of index `k` into `k` transverse double points.
pub fn move_cusp_to_nodes(cfg: &CurveConfig, k: u32) -> Result<CurveConfig> {
    if cfg.kappa_i < k {
        return Err(Error::MoveNotApplicable("cusp index exceeds kappa_i"));
    }
    Ok(CurveConfig {
        kappa_i: cfg.kappa_i - k,
        delta_i: cfg.delta_i + k,
        ..*cfg
    })
}

/// Inverse of [`move_cusp_to_nodes`].
pub fn move_nodes_to_cusp(cfg: &CurveConfig, k: u32) -> Result<CurveConfig> {
    if cfg.delta_i < k {
        return Err(Error::MoveNotApplicable(
            "not enough interior double points",
        ));
    }
    Ok(CurveConfig {
        kappa_i: cfg.kappa_i + k,
        delta_i: cfg.delta_i - k,
        ..*cfg
    })
}

/// Replaces an interior double point by a handle.
pub fn move_node_to_handle(cfg: &CurveConfig) -> Result<CurveConfig> {
    if cfg.delta_i == 0 {
        return Err(Error::MoveNotApplicable("no interior double point"));
    }
    Ok(CurveConfig {
        delta_i: cfg.delta_i - 1,
        g: cfg.g + 1,
        normal_maslov: cfg.normal_maslov + 4,
        ..*cfg
    })
}

/// Inverse of [`move_node_to_handle`].
pub fn move_handle_to_node(cfg: &CurveConfig) -> Result<CurveConfig> {
    if cfg.g == 0 {
        return Err(Error::MoveNotApplicable("genus is zero"));
    }
    Ok(CurveConfig {
        delta_i: cfg.delta_i + 1,
        g: cfg.g - 1,
        normal_maslov: cfg.normal_maslov - 4,
        ..*cfg
    })
}

/// Whether the two branches at a boundary double point lie on the same
/// boundary circle of the normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SurgeryKind {
    /// The circle splits in two: `sigma += 1`.
    #[default]
    SameCircle,
    /// Two circles merge and a handle appears: `sigma -= 1`, `g += 1`.
    DifferentCircles,
}

/// Removes a boundary double point by the half-hyperbola surgery. `[M^d]^2`
/// and the total Maslov index are unchanged, as is the Euler characteristic.
pub fn move_boundary_surgery(cfg: &CurveConfig, kind: SurgeryKind) -> Result<CurveConfig> {
    if cfg.delta_b == 0 {
        return Err(Error::MoveNotApplicable("no boundary double point"));
    }
    let delta_b = cfg.delta_b - 1;
    let normal_maslov = cfg.normal_maslov + 2;
    match kind {
        SurgeryKind::SameCircle => Ok(CurveConfig {
            delta_b,
            sigma: cfg.sigma + 1,
            normal_maslov,
            ..*cfg
        }),
        SurgeryKind::DifferentCircles => {
            if cfg.sigma < 2 {
                return Err(Error::MoveNotApplicable("need two boundary circles"));
            }
            Ok(CurveConfig {
                delta_b,
                sigma: cfg.sigma - 1,
                g: cfg.g + 1,
                normal_maslov,
                ..*cfg
            })
        }
    }
}

/// Inverse of [`move_boundary_surgery`].
pub fn move_boundary_node(cfg: &CurveConfig, kind: SurgeryKind) -> Result<CurveConfig> {
    let delta_b = cfg.delta_b + 1;
    let normal_maslov = cfg.normal_maslov - 2;
    match kind {
        SurgeryKind::SameCircle => {
            if cfg.sigma < 2 {
                return Err(Error::MoveNotApplicable("need two boundary circles"));
            }
            Ok(CurveConfig {
                delta_b,
                sigma: cfg.sigma - 1,
                normal_maslov,
                ..*cfg
            })
        }
        SurgeryKind::DifferentCircles => {
            if cfg.g == 0 {
                return Err(Error::MoveNotApplicable("genus is zero"));
            }
            Ok(CurveConfig {
                delta_b,
                sigma: cfg.sigma + 1,
                g: cfg.g - 1,
                normal_maslov,
                ..*cfg
            })
        }
    }
}

/// All moves, for random walks through configurations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    CuspToNodes(u32),
    NodesToCusp(u32),
    NodeToHandle,
    HandleToNode,
    BoundarySurgery(SurgeryKind),
    BoundaryNode(SurgeryKind),
}

pub fn apply_move(cfg: &CurveConfig, m: Move) -> Result<CurveConfig> {
    match m {
        Move::CuspToNodes(k) => move_cusp_to_nodes(cfg, k),
        Move::NodesToCusp(k) => move_nodes_to_cusp(cfg, k),
        Move::NodeToHandle => move_node_to_handle(cfg),
        Move::HandleToNode => move_handle_to_node(cfg),
        Move::BoundarySurgery(kind) => move_boundary_surgery(cfg, kind),
        Move::BoundaryNode(kind) => move_boundary_node(cfg, kind),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tangent_maslov() {
        assert_eq!(maslov_tangent(0, 1), 2);
        assert_eq!(maslov_tangent(1, 2), -4);
        assert_eq!(maslov_tangent(0, 2), 0);
    }

    #[test]
    fn zero_counts() {
        assert_eq!(maslov_from_zeros(&SectionZeroData::default()).unwrap(), 0);
        let z = SectionZeroData {
            interior_zeros: vec![1],
            boundary_zeros: vec![1],
        };
        assert_eq!(maslov_from_zeros(&z).unwrap(), 3);
        let z = SectionZeroData {
            interior_zeros: vec![1, 1, -1],
            boundary_zeros: vec![],
        };
        assert_eq!(maslov_from_zeros(&z).unwrap(), 2);
        assert_eq!(double_chern_count(&z).unwrap(), 2);
        let bad = SectionZeroData {
            interior_zeros: vec![2],
            boundary_zeros: vec![],
        };
        assert!(maslov_from_zeros(&bad).is_err());
    }

    #[test]
    fn embedded_disks_satisfy_adjunction() {
        for m in -6..6 {
            let c = CurveConfig::embedded(0, 1, m).unwrap();
            assert_eq!(c.maslov_total - c.double_sq, 2);
            assert_eq!(check_adjunction(&c).unwrap().verdict, Verdict::Equal);
        }
    }

    #[test]
    fn boundary_node_without_correction_is_unequal() {
        let c = CurveConfig {
            delta_b: 1,
            ..CurveConfig::embedded(0, 1, 3).unwrap()
        };
        let r = check_adjunction(&c).unwrap();
        assert_eq!((r.lhs, r.rhs), (1, 0));
        assert_eq!(r.verdict, Verdict::Unequal { gap: 1 });
    }

    #[test]
    fn odd_difference_is_rejected() {
        let c = CurveConfig {
            double_sq: 4,
            ..CurveConfig::embedded(0, 1, 3).unwrap()
        };
        assert!(matches!(
            check_adjunction(&c),
            Err(Error::InconsistentConfig(_))
        ));
    }

    #[test]
    fn move_examples() {
        let base = CurveConfig {
            kappa_i: 2,
            double_sq: 8,
            ..CurveConfig::embedded(0, 1, 0).unwrap()
        };
        let moved = move_cusp_to_nodes(&base, 2).unwrap();
        assert_eq!((moved.kappa_i, moved.delta_i), (0, 2));
        assert_eq!(move_cusp_to_nodes(&base, 0).unwrap(), base);
        assert!(move_cusp_to_nodes(&base, 3).is_err());

        let node = CurveConfig {
            delta_i: 1,
            double_sq: 4,
            ..CurveConfig::embedded(0, 1, 0).unwrap()
        };
        let handle = move_node_to_handle(&node).unwrap();
        assert_eq!((handle.g, handle.delta_i, handle.normal_maslov), (1, 0, 4));
        assert_eq!(handle.maslov_total, node.maslov_total);
        assert_eq!(handle.double_sq, handle.expected_double_sq());

        let bnode = move_boundary_node(
            &CurveConfig::embedded(0, 2, 0).unwrap(),
            SurgeryKind::SameCircle,
        )
        .unwrap();
        let cut = move_boundary_surgery(&bnode, SurgeryKind::SameCircle).unwrap();
        assert_eq!((bnode.sigma, cut.sigma), (1, 2));
        assert_eq!(cut.double_sq, bnode.double_sq);
        assert_eq!(cut.euler(), bnode.euler());
        for c in [base, moved, node, handle, bnode, cut] {
            assert_eq!(check_adjunction(&c).unwrap().verdict, Verdict::Equal);
        }
    }
}
