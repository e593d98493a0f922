use halfdisk_core::comparison::compare;
use halfdisk_core::error::Error;
use halfdisk_core::intersection::boundary_index_series;
use halfdisk_core::normal_form::{tangency_order, Contact, SeriesDisk};
use halfdisk_core::series::{Coeff, Exact, TruncatedSeries};
use proptest::prelude::*;

const ORDER: usize = 12;

#[derive(Clone, Debug)]
struct Pair {
    u1: SeriesDisk<Exact>,
    u2: SeriesDisk<Exact>,
    mu: usize,
    d: usize,
    v0: (i64, i64),
    r: (i64, i64),
    /// Both traces lie on the line through v0.
    collinear: bool,
}

fn real_series(comps: [Vec<i64>; 2], den: i64) -> TruncatedSeries<Exact> {
    let c: Vec<Vec<(i64, i64)>> = comps
        .iter()
        .map(|v| v.iter().map(|&a| (a, 0)).collect())
        .collect();
    TruncatedSeries::from_integers(ORDER, den, &[&c[0], &c[1]]).unwrap()
}

fn tangent() -> impl Strategy<Value = (i64, i64)> {
    (-3i64..=3, -3i64..=3).prop_filter("nonzero tangent", |&(p, q)| p != 0 || q != 0)
}

fn pair() -> impl Strategy<Value = Pair> {
    (
        tangent(),
        1usize..=2,
        prop::collection::vec((-3i64..=3, -3i64..=3), 7),
        prop::collection::vec(-2i64..=2, 5),
        2usize..=6,
        (-3i64..=3, -3i64..=3),
        any::<bool>(),
    )
        .prop_map(|(v0, mu, body, tail, d_off, r, meeting)| {
            let mut c1 = vec![0i64; ORDER + 1];
            let mut c2 = vec![0i64; ORDER + 1];
            c1[mu] = v0.0;
            c2[mu] = v0.1;
            for (k, &(a, b)) in body.iter().enumerate() {
                c1[mu + 1 + k] = a;
                c2[mu + 1 + k] = b;
            }
            let cross = |a: (i64, i64)| v0.0 * a.1 - v0.1 * a.0;
            let collinear = cross(r) == 0 && body.iter().all(|&b| cross(b) == 0);
            let u1 = real_series([c1, c2], 1);
            let mut p = vec![0i64, 4];
            p.extend(tail);
            let psi = TruncatedSeries::from_integers(
                ORDER,
                4,
                &[&p.iter().map(|&a| (a, 0)).collect::<Vec<_>>()],
            )
            .unwrap();
            let d = mu + d_off - 1;
            let mut s = u1.compose(&psi).unwrap();
            for (j, x) in [r.0, r.1].into_iter().enumerate() {
                let c = s.coeff(d, j).clone() + Exact::from_i64(x);
                s.set_coeff(d, j, c);
            }
            if meeting {
                s = s.reflect_argument();
            }
            Pair {
                u1: SeriesDisk::new(u1).unwrap(),
                u2: SeriesDisk::new(s).unwrap(),
                mu,
                d,
                v0,
                r,
                collinear,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn comparison_identity_is_exact(p in pair()) {
        let c = match compare(&p.u1, &p.u2) {
            Err(Error::ContactBeyondTruncation(_)) => {
                prop_assert_eq!(p.v0.0 * p.r.1 - p.v0.1 * p.r.0, 0);
                return Ok(());
            }
            other => other.unwrap(),
        };
        prop_assert!(!p.collinear || c.nu.is_none());
        prop_assert!(c.residual(&p.u1, &p.u2).unwrap().is_zero_series());
        prop_assert!(c.psi.is_real());
        prop_assert_eq!(c.psi.coeff(0, 0).clone(), Exact::from_i64(0));
        prop_assert_eq!(c.psi.coeff(1, 0).clone(), Exact::from_i64(1));
        prop_assert_eq!(c.mu, p.mu);
        if let Some(nu) = c.nu {
            prop_assert!(nu > p.mu);
            let w0 = c.w0();
            let v = [Exact::from_i64(p.v0.0), Exact::from_i64(p.v0.1)];
            prop_assert_eq!(w0[0].clone() * v[0].clone() + w0[1].clone() * v[1].clone(), Exact::from_i64(0));
            prop_assert!(w0.iter().any(|c| *c != Exact::from_i64(0)));
        }
    }

    #[test]
    fn tangent_pairs_have_index_at_least_two(p in pair()) {
        prop_assume!(p.mu == 1 && p.v0.0 * p.r.1 - p.v0.1 * p.r.0 != 0);
        let report = boundary_index_series(&p.u1, &p.u2).unwrap();
        prop_assert_eq!(report.index, p.d as i64);
        prop_assert!(report.index >= 2);
        let t = tangency_order(&p.u1, &p.u2).unwrap();
        prop_assert_eq!(t.order, Contact::Finite(p.d));
    }

    #[test]
    fn transverse_pairs_have_index_one(v in tangent(), w in tangent()) {
        prop_assume!(v.0 * w.1 - v.1 * w.0 != 0);
        let u1 = real_series([vec![0, v.0, 1], vec![0, v.1, 0]], 1);
        let u2 = real_series([vec![0, w.0, 0, 2], vec![0, w.1, -1]], 1);
        let report = boundary_index_series(&SeriesDisk::new(u1).unwrap(), &SeriesDisk::new(u2).unwrap()).unwrap();
        prop_assert_eq!(report.index, 1);
        prop_assert!(report.transverse);
    }
}
