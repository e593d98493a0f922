//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use halfdisk::core::adjunction::{
    apply_move, check_adjunction, maslov_tangent, CurveConfig, Move, SurgeryKind, Verdict,
};
use halfdisk::core::cauchy_green::{dbar_residual, CauchyGreen};
use halfdisk::core::comparison::compare;
use halfdisk::core::grid::{norm2, sub2, Grid, GridField};
use halfdisk::core::intersection::{boundary_index_series, split_to_transverse};
use halfdisk::core::linking::{boundary_index_linking, FloatDisk, LinkingConfig};
use halfdisk::core::normal_form::SeriesDisk;
use halfdisk::core::roots::{durand_kerner, real_roots};
use halfdisk::core::series::{Coeff, Exact, TruncatedSeries};
use halfdisk::core::solver::{
    smooth_cusp_with, solve_perturbation_with, AttachedDisk, EtaCusp, EtaLine, Solution,
    SolveConfig,
};
use halfdisk::core::structures::{
    anti_linear_part, blend_cones, cayley_k, cayley_l, cone_cutoff, conj_point, conjugate_matrix,
    coupled_example, j_st, lipschitz_estimate, minus_structure, reflect_structure, square_defect,
    AntiLinearContraction, BundleStructure, EtaBundle, EtaExample, Mat4, Point, Standard,
    StructureField,
};
use halfdisk::fft::FftConvolver;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Fft = CauchyGreen<FftConvolver>;

const ORDER: usize = 12;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, limit: f64) -> Result<(), String> {
    let s = t.elapsed().as_secs_f64();
    ensure(s < limit, || format!("took {s:.2}s, limit {limit}s"))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn int(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> i64 {
    rng.gen_range(lo..=hi)
}

fn nonzero_vec(rng: &mut ChaCha8Rng) -> (i64, i64) {
    loop {
        let v = (int(rng, -3, 3), int(rng, -3, 3));
        if v != (0, 0) {
            return v;
        }
    }
}

fn real_series(comps: [Vec<i64>; 2], den: i64) -> TruncatedSeries<Exact> {
    let c: Vec<Vec<(i64, i64)>> = comps
        .iter()
        .map(|v| v.iter().map(|&a| (a, 0)).collect())
        .collect();
    TruncatedSeries::from_integers(ORDER, den, &[&c[0], &c[1]]).unwrap()
}

fn disk(s: TruncatedSeries<Exact>) -> SeriesDisk<Exact> {
    SeriesDisk::new(s).unwrap()
}

struct Pair {
    u1: SeriesDisk<Exact>,
    u2: SeriesDisk<Exact>,
    v0: (i64, i64),
}

/// `u2 = u1 o psi + zeta^d r`, optionally reflected, with `u1` real of
/// vanishing order `mu`. Coefficients are integers over `den`.
fn pair(
    rng: &mut ChaCha8Rng,
    v0: (i64, i64),
    mu: usize,
    d: usize,
    r: (i64, i64),
    den: i64,
    meeting: bool,
) -> Pair {
    let mut c1 = vec![0i64; ORDER + 1];
    let mut c2 = vec![0i64; ORDER + 1];
    c1[mu] = v0.0 * den;
    c2[mu] = v0.1 * den;
    for k in mu + 1..=(mu + 6).min(ORDER) {
        c1[k] = int(rng, -3, 3);
        c2[k] = int(rng, -3, 3);
    }
    let u1 = real_series([c1, c2], den);
    let mut p = vec![(0, 0), (4, 0)];
    p.extend((0..4).map(|_| (int(rng, -2, 2), 0)));
    let psi = TruncatedSeries::from_integers(ORDER, 4, &[&p]).unwrap();
    let mut s = u1.compose(&psi).unwrap();
    for (j, x) in [r.0, r.1].into_iter().enumerate() {
        let c = s.coeff(d, j).clone() + Exact::from_i64(x);
        s.set_coeff(d, j, c);
    }
    if meeting {
        s = s.reflect_argument();
    }
    Pair {
        u1: disk(u1),
        u2: disk(s),
        v0,
    }
}

/// A correction `r` with `cross(v0, r) != 0`, so that contact is exactly `d`.
fn pair_off_axis(rng: &mut ChaCha8Rng, d: usize, den: i64, meeting: bool) -> Pair {
    let v0 = nonzero_vec(rng);
    let r = loop {
        let r = nonzero_vec(rng);
        if v0.0 * r.1 - v0.1 * r.0 != 0 {
            break r;
        }
    };
    pair(rng, v0, 1, d, r, den, meeting)
}

/// Contact term `k zeta^d (-v0y, v0x)`, of the size of the tangent.
fn pair_normal(rng: &mut ChaCha8Rng, d: usize, den: i64, meeting: bool) -> Pair {
    let v0 = nonzero_vec(rng);
    let k = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)];
    pair(rng, v0, 1, d, (-k * v0.1, k * v0.0), den, meeting)
}

fn index_equals_tangency() -> Check {
    let t = Instant::now();
    let mut rng = rng(1);
    let u1 = disk(real_series([vec![0, 1], vec![0]], 1));
    for d in 1..=6 {
        let mut second = vec![0i64; ORDER + 1];
        second[d] = loop {
            let a = int(&mut rng, -5, 5);
            if a != 0 {
                break a;
            }
        };
        for c in second.iter_mut().skip(d + 1) {
            *c = int(&mut rng, -3, 3);
        }
        let u2 = disk(real_series([vec![0, 4], second], 4));
        let r = boundary_index_series(&u1, &u2).map_err(|e| format!("d = {d}: {e}"))?;
        ensure(r.index == d as i64, || {
            format!("d = {d}: index {}", r.index)
        })?;
    }
    within(t, 1.0)?;
    Ok("index = d for d = 1..6".into())
}

fn positivity_sweep() -> Check {
    let t = Instant::now();
    let mut rng = rng(2);
    let mut min_tangent = i64::MAX;
    for k in 0..200 {
        let d = rng.gen_range(2..=6);
        let p = pair_off_axis(&mut rng, d, 1, k % 2 == 1);
        let r = boundary_index_series(&p.u1, &p.u2).map_err(|e| format!("tangent {k}: {e}"))?;
        ensure(r.index >= 2 && r.index == d as i64, || {
            format!("tangent pair {k}: index {} for contact {d}", r.index)
        })?;
        min_tangent = min_tangent.min(r.index);
    }
    for k in 0..200 {
        let p = pair_off_axis(&mut rng, 1, 1, k % 2 == 1);
        let r = boundary_index_series(&p.u1, &p.u2).map_err(|e| format!("transverse {k}: {e}"))?;
        ensure(r.index == 1 && r.transverse, || {
            format!("transverse pair {k}: index {}", r.index)
        })?;
    }
    within(t, 10.0)?;
    Ok(format!(
        "200 tangent pairs, min index {min_tangent}; 200 transverse pairs, index 1"
    ))
}

fn cross_method_agreement() -> Check {
    let t = Instant::now();
    let mut rng = rng(3);
    let cfg = LinkingConfig {
        samples: 512,
        ..LinkingConfig::default()
    };
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let d = 1 + k % 5;
        let p = pair_normal(&mut rng, d, 4, k % 3 == 2);
        let s = boundary_index_series(&p.u1, &p.u2).map_err(|e| format!("pair {k}: {e}"))?;
        let l = boundary_index_linking(&p.u1, &p.u2, &cfg)
            .map_err(|e| format!("pair {k} (d = {d}): linking: {e}"))?;
        let res = l.residual.unwrap_or(f64::INFINITY);
        ensure(s.index == l.index && res < 0.1, || {
            format!(
                "pair {k}: series {} vs linking {} (residual {res:.3})",
                s.index, l.index
            )
        })?;
        worst = worst.max(res);
    }
    within(t, 60.0)?;
    Ok(format!("50 pairs agree, worst residual {worst:.2e}"))
}

fn horner(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// Sign changes of the exact polynomial on rational points separating its
/// approximate real roots; `degree` changes certify `degree` simple real roots.
fn certified_roots(coeffs: &[BigRational]) -> usize {
    let approx: Vec<f64> = coeffs.iter().map(|c| c.to_f64().unwrap()).collect();
    let roots = real_roots(&durand_kerner(&approx, 500));
    let mut probes = Vec::with_capacity(roots.len() + 1);
    probes.push(roots.first().copied().unwrap_or(0.0) - 1.0);
    for w in roots.windows(2) {
        probes.push((w[0] + w[1]) / 2.0);
    }
    probes.push(roots.last().copied().unwrap_or(0.0) + 1.0);
    let signs: Vec<bool> = probes
        .iter()
        .map(|&x| horner(coeffs, &BigRational::from_float(x).unwrap()).is_positive())
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn split_count() -> Check {
    let t = Instant::now();
    let mut rng = rng(4);
    let flat = disk(real_series([vec![0, 1], vec![0]], 1));
    let mut cases = 0;
    for d in 2..=5 {
        let mut power = vec![0i64; d + 1];
        power[d] = 1;
        let mut pairs = vec![(flat.clone(), disk(real_series([vec![0, 1], power], 1)))];
        for k in 0..3 {
            let p = pair_off_axis(&mut rng, d, 1, k == 2);
            pairs.push((p.u1, p.u2));
        }
        for (u1, u2) in &pairs {
            let s = split_to_transverse(u1, u2, 0.05).map_err(|e| format!("d = {d}: {e}"))?;
            let coeffs = s.polynomial.coeffs();
            ensure(
                s.index == d
                    && s.roots.len() == d
                    && s.exact_real_roots == d
                    && s.squarefree
                    && s.polynomial.degree() == Some(d)
                    && certified_roots(coeffs) == d,
                || {
                    format!(
                        "d = {d}: index {}, {} roots {:?}, {} exact, squarefree {}, degree {:?}, {} sign changes",
                        s.index,
                        s.roots.len(),
                        s.roots,
                        s.exact_real_roots,
                        s.squarefree,
                        s.polynomial.degree(),
                        certified_roots(coeffs)
                    )
                },
            )?;
            cases += 1;
        }
    }
    within(t, 60.0)?;
    Ok(format!("{cases} splittings, d simple real roots each"))
}

fn comparison_closure() -> Check {
    let t = Instant::now();
    let mut rng = rng(5);
    let zero = Exact::from_i64(0);
    for k in 0..100 {
        let mu = 1 + k % 2;
        let d = mu + rng.gen_range(1..=5);
        let r = nonzero_vec(&mut rng);
        let meeting = rng.gen_bool(0.5);
        let v0 = nonzero_vec(&mut rng);
        let p = pair(&mut rng, v0, mu, d, r, 1, meeting);
        let c = compare(&p.u1, &p.u2).map_err(|e| format!("pair {k}: {e}"))?;
        let residual = c.residual(&p.u1, &p.u2).map_err(|e| e.to_string())?;
        ensure(residual.is_zero_series(), || format!("pair {k}: residual"))?;
        ensure(
            c.psi.is_real()
                && *c.psi.coeff(0, 0) == zero
                && *c.psi.coeff(1, 0) == Exact::from_i64(1),
            || format!("pair {k}: psi not a real normalized reparametrization"),
        )?;
        let nu =
            c.nu.ok_or_else(|| format!("pair {k}: no contact exponent"))?;
        ensure(nu > mu, || format!("pair {k}: nu {nu} <= mu {mu}"))?;
        let w0 = c.w0();
        let dot = w0[0].clone() * Exact::from_i64(p.v0.0) + w0[1].clone() * Exact::from_i64(p.v0.1);
        ensure(dot == zero, || format!("pair {k}: <w0, v0> = {dot}"))?;
    }
    within(t, 60.0)?;
    Ok("100 pairs, identity exact".into())
}

fn order(errors: &[f64]) -> f64 {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min)
}

fn cauchy_green_convergence(ops: &[Fft]) -> Check {
    let t = Instant::now();
    let mut rng = rng(6);
    let c: Vec<Complex64> = (0..10)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let smooth = |z: Complex64| {
        let zb = z.conj();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut k = 0;
        for a in 0..=3 {
            for b in 0..=3 - a {
                acc += c[k] * z.powi(a) * zb.powi(b);
                k += 1;
            }
        }
        acc
    };
    let mut conj_err = Vec::new();
    let mut residual = Vec::new();
    for cg in ops {
        let g = *cg.grid();
        let one = cg.apply(&GridField::from_fn(g, |_| Complex64::new(1.0, 0.0)));
        let e = g
            .disk_nodes()
            .map(|k| (one.values()[k] - g.point(k).conj()).norm())
            .fold(0.0, f64::max);
        ensure(e < 5.0 * g.h(), || {
            format!("h = 1/{}: |T1 - conj z| = {e:.3e}", g.n())
        })?;
        conj_err.push(e);
        residual.push(dbar_residual(cg, &GridField::from_fn(g, smooth), 0.8));
    }
    let (p1, p2) = (order(&conj_err), order(&residual));
    ensure(p1 >= 0.9 && p2 >= 0.9, || {
        format!("orders {p1:.2} (f = 1), {p2:.2} (smooth f)")
    })?;
    Ok(format!(
        "orders {p1:.2} (f = 1), {p2:.2} (smooth f); T1 errors {:.2e} {:.2e} {:.2e} ({:.1}s)",
        conj_err[0],
        conj_err[1],
        conj_err[2],
        t.elapsed().as_secs_f64()
    ))
}

fn line() -> FloatDisk {
    FloatDisk::new(&disk(real_series([vec![0, 1], vec![0]], 1)))
}

fn solve(
    cg: &Fft,
    u0: &dyn AttachedDisk,
    j: &dyn StructureField,
    w0: [f64; 2],
) -> Result<(Solution, f64), String> {
    let cfg = SolveConfig {
        w0,
        h: cg.grid().h(),
        ..SolveConfig::default()
    };
    let t = Instant::now();
    let s = solve_perturbation_with(cg, u0, j, &cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("solve took {secs:.1}s"))?;
    Ok((s, secs))
}

fn solver_contract(cg: &Fft) -> Check {
    let (fixed, _) = solve(cg, &line(), &Standard, [0.0, 0.3])?;
    let expected = [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.0)];
    ensure(
        fixed
            .w
            .grid()
            .disk_nodes()
            .all(|k| fixed.w.values()[k] == expected),
        || "integrable fixed point is not reproduced exactly".into(),
    )?;

    let coupled = coupled_example(0.05);
    let lip = lipschitz_estimate(&coupled, 0.5, 5);
    ensure((lip - 0.05).abs() < 0.01, || {
        format!("Lipschitz estimate {lip}")
    })?;
    let (s, secs) = solve(cg, &line(), &coupled, [0.0, 0.01])?;
    ensure(
        s.ratio <= 0.9
            && s.residual <= 1e-6
            && s.origin_error <= 1e-15
            && s.symmetry_residual <= 1e-12
            && s.dilation == 1.0,
        || {
            format!(
                "ratio {:.3}, residual {:.2e}, origin {:.1e}, symmetry {:.1e}, dilation {}",
                s.ratio, s.residual, s.origin_error, s.symmetry_residual, s.dilation
            )
        },
    )?;
    let headline = format!(
        "Lip {lip:.3}: {} iterations, ratio {:.2e}, residual {:.2e}, origin {:.0e}, symmetry {:.0e}, {secs:.1}s",
        s.iterations,
        s.ratio, s.residual, s.origin_error, s.symmetry_residual
    );

    let eta = EtaExample { scale: 0.05 };
    let eta_line = EtaLine { scale: 0.05 };
    let cases: [(&dyn AttachedDisk, &dyn StructureField); 2] =
        [(&line(), &coupled), (&eta_line, &eta)];
    let data = [
        [0.0, 0.01],
        [0.0, 0.02],
        [0.01, 0.01],
        [0.0, 0.005],
        [0.02, 0.0],
    ];
    let mut constants = Vec::new();
    for (u0, j) in cases {
        let runs: Vec<Solution> = data
            .iter()
            .map(|&w0| solve(cg, u0, j, w0).map(|r| r.0))
            .collect::<Result<_, _>>()?;
        for (a, b) in runs.iter().zip(runs.iter().skip(1)) {
            ensure(a.dilation == 1.0 && b.dilation == 1.0, || {
                "dilated solve".into()
            })?;
            let diff =
                a.w.values()
                    .iter()
                    .zip(b.w.values())
                    .map(|(x, y)| norm2(&sub2(x, y)))
                    .fold(0.0, f64::max);
            constants.push(diff / norm2(&sub2(&a.w0, &b.w0)));
        }
    }
    let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().copied().fold(0.0, f64::max);
    ensure(hi <= 2.0 * lo, || {
        format!("stability constants in [{lo}, {hi}]")
    })?;
    Ok(format!(
        "{headline}; stability constants in [{lo:.4}, {hi:.4}]"
    ))
}

/// `inf over |zeta| <= 1` of a lower bound for `|du|` when
/// `u = (zeta^2, zeta^3 + a zeta)`: `|du| >= max(2 r, a - 3 r^2)`.
fn integrable_lower_bound(a: f64) -> f64 {
    // The bound is smallest where both sides meet: 3 r^2 + 2 r - a = 0.
    let r = (-2.0 + (4.0 + 12.0 * a).sqrt()) / 6.0;
    2.0 * r
}

fn cusp_smoothing(cg: &Fft) -> Check {
    let h = cg.grid().h();
    let cfg = SolveConfig {
        h,
        ..SolveConfig::default()
    };
    let a = 0.1;
    let integrable = smooth_cusp_with(cg, &EtaCusp { scale: 0.0 }, &Standard, a, &cfg)
        .map_err(|e| format!("integrable: {e}"))?;
    let w = &integrable.solution.w;
    let constant = [Complex64::new(0.0, 0.0), Complex64::new(a, 0.0)];
    let drift = w
        .grid()
        .disk_nodes()
        .map(|k| norm2(&sub2(&w.values()[k], &constant)))
        .fold(0.0, f64::max);
    let bound = integrable_lower_bound(a);
    ensure(
        drift < 1e-12 && bound > 0.0 && integrable.radius > 0.0,
        || format!("integrable: w drift {drift:.1e}, bound {bound}"),
    )?;

    let s = 0.02;
    let eta = smooth_cusp_with(
        cg,
        &EtaCusp { scale: s },
        &EtaExample { scale: s },
        0.05,
        &cfg,
    )
    .map_err(|e| format!("eta cusp: {e}"))?;
    let cusp = FloatDisk::new(&disk(real_series([vec![0, 0, 1], vec![0]], 1)));
    let coupled = smooth_cusp_with(cg, &cusp, &coupled_example(s), 0.05, &cfg)
        .map_err(|e| format!("coupled cusp: {e}"))?;
    for (name, r) in [("eta", &eta), ("coupled", &coupled)] {
        ensure(r.radius > 0.0 && r.min_differential > 0.0, || {
            format!("{name}: radius {}", r.radius)
        })?;
    }
    Ok(format!(
        "integrable |du| >= {bound:.3}; radii {:.3} (eta), {:.3} (coupled), min |du| {:.2e}, {:.2e}",
        eta.radius, coupled.radius, eta.min_differential, coupled.min_differential
    ))
}

fn random_move(rng: &mut ChaCha8Rng) -> Move {
    let kind = if rng.gen_bool(0.5) {
        SurgeryKind::SameCircle
    } else {
        SurgeryKind::DifferentCircles
    };
    match rng.gen_range(0..6) {
        0 => Move::CuspToNodes(rng.gen_range(1..=3)),
        1 => Move::NodesToCusp(rng.gen_range(1..=3)),
        2 => Move::NodeToHandle,
        3 => Move::HandleToNode,
        4 => Move::BoundarySurgery(kind),
        _ => Move::BoundaryNode(kind),
    }
}

fn adjunction_suite() -> Check {
    let t = Instant::now();
    for g in 0..=2u32 {
        for sigma in 1..=3u32 {
            let m = maslov_tangent(g, sigma);
            let chi = 2 - 2 * g as i64 - sigma as i64;
            ensure(
                m == 4 - 4 * g as i64 - 2 * sigma as i64 && m == 2 * chi,
                || format!("g = {g}, sigma = {sigma}: {m}"),
            )?;
        }
    }
    let mut rng = rng(9);
    let mut applied = 0usize;
    for walk in 0..1000 {
        let seed = CurveConfig::embedded(
            rng.gen_range(0..=3),
            rng.gen_range(1..=4),
            rng.gen_range(-6..=6),
        )
        .map_err(|e| e.to_string())?;
        let mut cfg = seed;
        for _ in 0..rng.gen_range(1..=40) {
            let Ok(next) = apply_move(&cfg, random_move(&mut rng)) else {
                continue;
            };
            let check = check_adjunction(&next).map_err(|e| e.to_string())?;
            ensure(
                check.verdict == Verdict::Equal
                    && next.double_sq == next.expected_double_sq()
                    && next.double_sq == seed.double_sq
                    && next.maslov_total == seed.maslov_total,
                || format!("walk {walk}: {next:?}"),
            )?;
            if next.delta_b == 0 && next.kappa_i == 0 {
                ensure(
                    next.double_sq == next.normal_maslov + 4 * next.delta_i as i64,
                    || format!("walk {walk}: {next:?}"),
                )?;
            }
            applied += 1;
            cfg = next;
        }
    }
    within(t, 1.0)?;
    Ok(format!(
        "Maslov table; 1000 walks, {applied} moves, all equal"
    ))
}

/// Tamed on the unit ball: `K(W0 + sum z_k A_k)` with `|W0| = 0.4`, `|A_k| = 0.1`.
struct AffineCayley {
    w0: Mat4,
    a: [Mat4; 4],
}

impl StructureField for AffineCayley {
    fn eval(&self, z: &Point) -> Mat4 {
        let mut w = self.w0;
        for k in 0..4 {
            w += self.a[k] * z[k];
        }
        cayley_k(&AntiLinearContraction::new(w).unwrap()).unwrap()
    }
}

fn anti_linear(rng: &mut ChaCha8Rng, size: f64) -> Mat4 {
    let e: Vec<f64> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = anti_linear_part(&Mat4::from_row_slice(&e));
    a * (size / a.norm())
}

fn point(rng: &mut ChaCha8Rng) -> Point {
    Point::from_fn(|_, _| rng.gen_range(-0.5..0.5))
}

fn structure_calculus() -> Check {
    const TOL: f64 = 1e-10;
    let t = Instant::now();
    let mut rng = rng(10);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let f = AffineCayley {
            w0: anti_linear(&mut rng, 0.4),
            a: [(); 4].map(|_| anti_linear(&mut rng, 0.1)),
        };
        let cone = rng.gen_range(0.5..2.0);
        let blend = blend_cones(&f, cone).map_err(|e| e.to_string())?;
        let minus = minus_structure(&f);
        for _ in 0..4 {
            let z = point(&mut rng);
            let j = f.eval(&z);
            let w = cayley_l(&j).map_err(|e| e.to_string())?;
            let back = cayley_k(&w).map_err(|e| e.to_string())?;
            let again = cayley_l(&back).map_err(|e| e.to_string())?;
            let mut up = z;
            up[1] = cone * z[3].abs() + 0.01 + z[1].abs();
            let down = conj_point(&up);
            let b = blend.eval(&z);
            let errs = [
                square_defect(&j),
                (back - j).amax(),
                (again.matrix() - w.matrix()).amax(),
                (blend.eval(&up) - f.eval(&up)).amax(),
                (blend.eval(&down) - minus.eval(&down)).amax(),
                square_defect(&b),
                (blend.eval(&conj_point(&z)) - conjugate_matrix(&b)).amax(),
            ];
            let e = errs.iter().copied().fold(0.0, f64::max);
            ensure(
                e < TOL && w.norm() < 1.0 && cone_cutoff(&up, cone) == 1.0,
                || format!("structure {k}: errors {errs:?}"),
            )?;
            worst = worst.max(e);
        }
    }
    let r = reflect_structure(EtaBundle { scale: 1.0 }).map_err(|e| e.to_string())?;
    for &(xi, eta) in &[
        (0.25, 0.5),
        (0.25, -0.5),
        (-0.7, -0.1),
        (0.0, 0.3),
        (0.6, 0.0),
    ] {
        let mut expected = j_st();
        expected[(2, 1)] = f64::abs(eta);
        expected[(3, 0)] = f64::abs(eta);
        let m = r.eval(Complex64::new(xi, eta));
        ensure(m == expected, || {
            format!("reflected matrix at ({xi}, {eta}): {m}")
        })?;
    }
    within(t, 10.0)?;
    Ok(format!(
        "100 structures, worst error {worst:.1e}; reflected |eta| matrix exact"
    ))
}

fn operator(n: usize) -> Fft {
    CauchyGreen::new(Grid::with_n(n))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let ops: Vec<Fft> = [32, 64, 128].into_iter().map(operator).collect();
    let fine = &ops[1];
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("index equals tangency", Box::new(index_equals_tangency)),
        ("positivity sweep", Box::new(positivity_sweep)),
        ("cross-method agreement", Box::new(cross_method_agreement)),
        ("split count", Box::new(split_count)),
        ("comparison closure", Box::new(comparison_closure)),
        (
            "Cauchy-Green convergence",
            Box::new(|| cauchy_green_convergence(&ops)),
        ),
        ("solver contract", Box::new(|| solver_contract(fine))),
        ("cusp smoothing", Box::new(|| cusp_smoothing(fine))),
        ("Maslov and adjunction", Box::new(adjunction_suite)),
        ("structure calculus", Box::new(structure_calculus)),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let secs = t.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name:<26} {secs:>7.2}s  {detail}", k + 1);
    }
    println!(
        "{} of {} criteria passed in {:.1?}",
        criteria.len() - failed,
        criteria.len(),
        Duration::from_secs_f64(start.elapsed().as_secs_f64())
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
