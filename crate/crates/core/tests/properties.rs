use std::sync::Arc;

use gaplattice::circleset::{frac_points, gap_spectrum, Alpha};
use gaplattice::diophantine::{cubic_pair, littlewood_min, orbit_track};
use gaplattice::geometry::{q_to_f64, ConvexBody, DiagDilation};
use gaplattice::latticecore::{
    covering_radius_estimate, dtheta, f_value, points_in_region, slater_basis_diag, steinhaus_basis_diag, LatticeBasis, Region,
};
use gaplattice::ratsum::{decompose_s, inclusion_check, random_sumset_spec, DecompositionSpec};
use gaplattice::slater::{return_time, return_time_via_f, DEFAULT_CAP};
use gaplattice::steinhaus::{
    candidate_bound, distinct_f_values, gap_count, gap_report, identity_check, interior_padding_for,
};
use gaplattice::{Budget, ExactReal, Q};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn budget() -> Budget {
    Budget::default()
}

fn rq(rng: &mut ChaCha8Rng, lo: i128, hi: i128, den: i128) -> Q {
    q(rng.gen_range(lo..hi), den)
}

fn random_box(rng: &mut ChaCha8Rng, d: usize) -> ConvexBody {
    let lo: Vec<Q> = (0..d).map(|_| rq(rng, -6, 6, 4)).collect();
    let hi: Vec<Q> = lo.iter().map(|l| *l + rq(rng, 1, 10, 4)).collect();
    let lc = (0..d).map(|_| rng.gen()).collect();
    let hc = (0..d).map(|_| rng.gen()).collect();
    ConvexBody::axis_box(lo, hi, lc, hc).unwrap()
}

fn random_ball(rng: &mut ChaCha8Rng, d: usize) -> ConvexBody {
    let c: Vec<Q> = (0..d).map(|_| rq(rng, -4, 4, 4)).collect();
    ConvexBody::ball(c, rq(rng, 2, 9, 4), rng.gen()).unwrap()
}

fn random_triangle(rng: &mut ChaCha8Rng) -> ConvexBody {
    loop {
        let v: Vec<[Q; 2]> = (0..3).map(|_| [rq(rng, -8, 8, 4), rq(rng, -8, 8, 4)]).collect();
        if let Ok(b) = ConvexBody::polygon(&v) {
            return b;
        }
    }
}

fn random_body(rng: &mut ChaCha8Rng, d: usize) -> ConvexBody {
    match rng.gen_range(0..if d == 2 { 3 } else { 2 }) {
        0 => random_box(rng, d),
        1 => random_ball(rng, d),
        _ => random_triangle(rng),
    }
}

/// Diagonal factors that `body` accepts (balls need homothetic ones).
fn random_dilation(rng: &mut ChaCha8Rng, body: &ConvexBody, t_max: i64) -> DiagDilation {
    let d = body.dim();
    let t: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=t_max)).collect();
    let dil = DiagDilation::from_ints(&t).unwrap();
    if body.dilate(&dil).is_ok() {
        dil
    } else {
        DiagDilation::from_ints(&vec![t[0]; d]).unwrap()
    }
}

fn sample_in(rng: &mut ChaCha8Rng, body: &ConvexBody) -> Option<Vec<Q>> {
    let (lo, hi) = body.bbox();
    for _ in 0..50 {
        let x: Vec<Q> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| *a + (*b - *a) * q(rng.gen_range(0..=1000), 1000))
            .collect();
        if body.contains(&x).unwrap() {
            return Some(x);
        }
    }
    None
}

const SQUAREFREE: [u64; 8] = [2, 3, 5, 6, 7, 10, 11, 13];

fn sqrt_alpha(rng: &mut ChaCha8Rng, d: usize) -> Alpha {
    let mut picks = SQUAREFREE.to_vec();
    picks.shuffle(rng);
    Alpha::generic(picks[..d].iter().map(|&n| ExactReal::sqrt(n)).collect()).unwrap()
}

fn relation_alpha(rng: &mut ChaCha8Rng, d: usize) -> Alpha {
    let qq = rng.gen_range(1..=6);
    let r: Vec<Q> = (0..d)
        .map(|_| {
            let b = rng.gen_range(1..=4) * if rng.gen_bool(0.2) { -1 } else { 1 };
            q(b, qq)
        })
        .collect();
    let s: Vec<Q> = (0..d).map(|_| q(rng.gen_range(0..qq), qq)).collect();
    let beta = ExactReal::sqrt(*SQUAREFREE.choose(rng).unwrap());
    Alpha::rational_beta(beta, r, s).unwrap()
}

fn rows_close(a: &LatticeBasis, b: &LatticeBasis, tol: f64) -> bool {
    (a.rows() - b.rows()).abs().max() <= tol
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dilation_maps_membership(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=3);
        let body = random_body(&mut rng, if d == 1 { 1 } else { d });
        let t = random_dilation(&mut rng, &body, 7);
        let big = body.dilate(&t).unwrap();
        let (lo, hi) = body.bbox();
        for _ in 0..20 {
            let x: Vec<Q> = lo.iter().zip(&hi).map(|(a, b)| *a - q(1, 2) + (*b - *a + 1) * q(rng.gen_range(0..=64), 64)).collect();
            let xt: Vec<Q> = x.iter().zip(t.factors()).map(|(a, b)| *a * *b).collect();
            prop_assert_eq!(big.contains(&xt).unwrap(), body.contains(&x).unwrap());
        }
    }

    #[test]
    fn lattice_points_match_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=3);
        let body = random_body(&mut rng, d);
        let got = body.lattice_points(budget()).unwrap();
        let (lo, hi) = body.bbox_f64();
        let mut want = Vec::new();
        let mut z: Vec<i64> = lo.iter().map(|x| x.floor() as i64 - 1).collect();
        'outer: loop {
            let zq: Vec<Q> = z.iter().map(|&v| Q::from_integer(v as i128)).collect();
            if body.contains(&zq).unwrap() {
                want.push(z.clone());
            }
            for i in (0..d).rev() {
                if (z[i] as f64) < hi[i].ceil() + 1.0 {
                    z[i] += 1;
                    continue 'outer;
                }
                z[i] = lo[i].floor() as i64 - 1;
            }
            break;
        }
        let mut got = got;
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn difference_body_contains_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=3);
        let body = random_body(&mut rng, d);
        let diff = body.difference_body().unwrap();
        prop_assert!(diff.contains(&vec![Q::from_integer(0); d]).unwrap());
        for _ in 0..10 {
            let (Some(s), Some(t)) = (sample_in(&mut rng, &body), sample_in(&mut rng, &body)) else { continue };
            let x: Vec<Q> = s.iter().zip(&t).map(|(a, b)| *a - *b).collect();
            prop_assert!(diff.contains(&x).unwrap(), "{:?} - {:?}", s, t);
        }
    }

    #[test]
    fn chord_anchor_lands_on_boundary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=3);
        let body = if rng.gen() { random_box(&mut rng, d) } else { random_ball(&mut rng, d) };
        let info = body.direction_and_length().unwrap();
        let l = info.lambda * rng.gen_range(0.05..1.0);
        let t = body.chord_anchor(&info.u, l).unwrap();
        let end: Vec<f64> = t.iter().zip(&info.u).map(|(a, b)| a + l * b).collect();
        prop_assert!(body.boundary_distance_f64(&t) <= 1e-12);
        prop_assert!(body.boundary_distance_f64(&end) <= 1e-12);
    }

    #[test]
    fn three_gaps_in_dimension_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = Alpha::random(1, rng.gen()).unwrap();
        let lo = rq(&mut rng, -200, 200, 3);
        let body = ConvexBody::axis_box(vec![lo], vec![lo + rq(&mut rng, 3, 900, 3)], vec![rng.gen()], vec![rng.gen()]).unwrap();
        let rec = gap_count(&alpha, &body, &DiagDilation::from_ints(&[1]).unwrap(), budget()).unwrap();
        prop_assert!(rec.g <= 3);
    }

    #[test]
    fn gap_report_basic_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=3);
        let alpha = if rng.gen() { Alpha::random(d, rng.gen()).unwrap() } else { relation_alpha(&mut rng, d) };
        let body = random_body(&mut rng, d);
        let t = random_dilation(&mut rng, &body, 4);
        let Ok(rep) = gap_report(&alpha, &body, &t, budget()) else { return Ok(()) };
        let n = rep.points.len();
        prop_assert!(rep.count >= 1 && rep.count <= n);
        prop_assert!(rep.max_gap() >= 1.0 / n as f64 - 1e-12);
        prop_assert_eq!(rep.gap_sum(), alpha.key_of(1, &vec![0; d]));
    }

    #[test]
    fn gap_report_ignores_point_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = Alpha::random(2, rng.gen()).unwrap();
        let body = random_box(&mut rng, 2);
        let mut pts = body.lattice_points(budget()).unwrap();
        prop_assume!(!pts.is_empty());
        let a = gap_spectrum(&alpha, frac_points(&alpha, &pts).unwrap()).unwrap();
        pts.shuffle(&mut rng);
        let b = gap_spectrum(&alpha, frac_points(&alpha, &pts).unwrap()).unwrap();
        prop_assert_eq!(a.count, b.count);
        let ka: Vec<_> = a.classes.iter().map(|c| (c.gap.key().clone(), c.mult)).collect();
        let kb: Vec<_> = b.classes.iter().map(|c| (c.gap.key().clone(), c.mult)).collect();
        prop_assert_eq!(ka, kb);
    }

    #[test]
    fn distance_to_integers_symmetries(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=2);
        let alpha = sqrt_alpha(&mut rng, d);
        let shifted = Alpha::generic(
            alpha
                .components()
                .iter()
                .map(|c| ExactReal::Affine { scale: q(1, 1), offset: q(1, 1), base: Box::new(c.clone()) })
                .collect(),
        )
        .unwrap();
        let n = rng.gen_range(10..200);
        let base = littlewood_min(&alpha, n).unwrap();
        prop_assert_eq!(littlewood_min(&alpha.negated(), n).unwrap(), base);
        prop_assert_eq!(littlewood_min(&shifted, n).unwrap(), base);
    }

    #[test]
    fn littlewood_minimum_is_monotone(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = sqrt_alpha(&mut rng, 2);
        let n1 = rng.gen_range(5..100);
        let n2 = n1 + rng.gen_range(0..100);
        prop_assert!(littlewood_min(&alpha, n2).unwrap().0 <= littlewood_min(&alpha, n1).unwrap().0);
    }

    #[test]
    fn sumset_inclusions(seed in any::<u64>()) {
        let spec = random_sumset_spec(seed, 4, 12).unwrap();
        let rep = inclusion_check(&spec, budget()).unwrap();
        prop_assert!(rep.outer_ok && rep.inner_ok, "{:?} {:?}", spec, rep);
    }

    #[test]
    fn slater_basis_is_dual_of_negated_steinhaus(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=3);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).unwrap());
        let r: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=9)).collect();
        let b = DiagDilation::new(r.iter().map(|&x| q(1, x as i128)).collect()).unwrap();
        let binv = DiagDilation::from_ints(&r).unwrap();
        let sl = slater_basis_diag(alpha.clone(), &b).unwrap();
        let st = steinhaus_basis_diag(Arc::new(alpha.negated()), &binv).unwrap();
        prop_assert!(rows_close(&sl, &st.transpose_inverse().unwrap(), 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gap_identity_through_f(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=3);
        let alpha = Arc::new(if rng.gen_bool(0.7) { Alpha::random(d, rng.gen()).unwrap() } else { relation_alpha(&mut rng, d) });
        let body = random_body(&mut rng, d);
        let t = random_dilation(&mut rng, &body, if d == 2 { 5 } else { 3 });
        let Ok(rep) = identity_check(alpha, &body, &t, None, budget()) else { return Ok(()) };
        prop_assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
    }

    #[test]
    fn gap_count_below_candidate_count(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let alpha = Arc::new(Alpha::random(2, rng.gen()).unwrap());
        let body = random_box(&mut rng, 2);
        let t = random_dilation(&mut rng, &body, 4);
        let Ok((g, c)) = candidate_bound(alpha, &body, &t, budget()) else { return Ok(()) };
        prop_assert!(g <= c, "G = {} exceeds candidate count {}", g, c);
    }

    #[test]
    fn return_time_identity_through_f(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(1..=2);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).unwrap());
        let body = ConvexBody::half_open_box(vec![q(-1, 2); d], vec![q(1, 2); d]).unwrap();
        let b = DiagDilation::new((0..d).map(|_| q(1, rng.gen_range(1..=[0, 30, 6][d]))).collect()).unwrap();
        let qv: Vec<Q> = b.factors().iter().map(|f| *f * q(rng.gen_range(-499..500), 1000)).collect();
        let direct = return_time(&qv, &alpha, &body.dilate(&b).unwrap(), DEFAULT_CAP).unwrap();
        let via = return_time_via_f(&qv, alpha, &body, &b, budget()).unwrap();
        prop_assert!(direct >= 1);
        prop_assert_eq!(direct, via);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn decomposition_is_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.gen_range(2..=3);
        let alpha = relation_alpha(&mut rng, d);
        let m: Vec<i64> = (0..d).map(|_| rng.gen_range(if d == 2 { 5..60 } else { 3..15 })).collect();
        let spec = DecompositionSpec::new(&alpha, m, None).unwrap();
        let dec = decompose_s(&alpha, &spec, budget()).unwrap();
        prop_assert!(dec.union_ok && dec.bulk_ok);
        if dec.bulk_applies {
            prop_assert!(dec.leftover_size as u128 <= dec.leftover_constant);
        }
    }
}

/// The sampled count over t = k / R never exceeds the count over all targets,
/// and over k / R it reproduces G(alpha, R D).
#[test]
fn sampled_count_bounded_by_full_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut done = 0;
    while done < 100 {
        let alpha = Arc::new(Alpha::random(2, rng.gen()).unwrap());
        let body = random_box(&mut rng, 2);
        let r = rng.gen_range(1..=4);
        let t = DiagDilation::from_ints(&[r, r]).unwrap();
        let Ok(rec) = gap_count(&alpha, &body, &t, budget()) else { continue };
        let padded = interior_padding_for(&body, &t, budget()).unwrap();
        let basis = steinhaus_basis_diag(alpha.clone(), &t).unwrap();
        let ks: Vec<Vec<f64>> = body
            .dilate(&t)
            .unwrap()
            .lattice_points(budget())
            .unwrap()
            .into_iter()
            .map(|k| k.iter().map(|&x| x as f64 / r as f64).collect())
            .collect();
        let tol = 1e-9;
        let g_r = distinct_f_values(&basis, &padded, &ks, tol, budget()).unwrap();
        assert_eq!(g_r, rec.g, "count over k / R differs from G");
        let mut all = ks.clone();
        let (lo, hi) = padded.bbox_f64();
        while all.len() < ks.len() + 20 {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.gen_range(0.0..1.0)).collect();
            if padded.interior_f64(&x) {
                all.push(x);
            }
        }
        let g_all = distinct_f_values(&basis, &padded, &all, tol, budget()).unwrap();
        assert!(g_r <= g_all);
        done += 1;
    }
}

/// tau is locally constant: a 1e-6 move of q away from cell boundaries keeps it.
#[test]
fn return_time_constant_on_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut kept = 0;
    for _ in 0..100 {
        let alpha = Alpha::random(1, rng.gen()).unwrap();
        let a = q(-rng.gen_range(1..50), 100);
        let b = q(rng.gen_range(1..50), 100);
        let body = ConvexBody::axis_box(vec![a], vec![b], vec![true], vec![false]).unwrap();
        let q0 = a + (b - a) * q(rng.gen_range(1..1000), 1000);
        let tau = return_time(&[q0], &alpha, &body, DEFAULT_CAP).unwrap();
        assert!(tau >= 1);
        // distance from q0 to the nearest cell boundary of this tau
        let x = q_to_f64(&q0) + tau as f64 * alpha.to_f64()[0];
        let y = x - x.round();
        let y = if y < q_to_f64(&a) { y + 1.0 } else { y };
        let clearance = [
            q_to_f64(&(q0 - a)),
            q_to_f64(&(b - q0)),
            y - q_to_f64(&a),
            q_to_f64(&b) - y,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        if clearance < 1e-5 {
            continue;
        }
        for eps in [q(1, 1_000_000), q(-1, 1_000_000)] {
            assert_eq!(return_time(&[q0 + eps], &alpha, &body, DEFAULT_CAP).unwrap(), tau);
        }
        kept += 1;
    }
    assert!(kept >= 80, "only {kept} samples away from cell boundaries");
}

/// Points in a region agree with a direct scan over a box of coefficients.
#[test]
fn points_in_region_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.1..0.1)).collect())
            .collect();
        let m = LatticeBasis::from_rows(rows.clone()).unwrap();
        let body = random_box(&mut rng, 2);
        let region = Region::new(body, 0.0, rng.gen_range(0.5..2.5));
        let got: Vec<Vec<i64>> = points_in_region(&m, &region, budget()).unwrap().into_iter().map(|p| p.z).collect();
        let mut want = Vec::new();
        for a in -8..=8 {
            for b in -8..=8 {
                for c in -8..=8 {
                    let z = [a as f64, b as f64, c as f64];
                    let p: Vec<f64> = (0..3).map(|j| (0..3).map(|i| z[i] * rows[i][j]).sum()).collect();
                    let y_ok = p[2] > 0.0 && p[2] <= region.y_hi;
                    if y_ok && region.body.contains_f64(&p[..2]) {
                        want.push(vec![a, b, c]);
                    }
                }
            }
        }
        assert_eq!(got, want);
    }
}

/// Shortest vectors of the orbit and of its dual both stay away from zero
/// for the badly approximable pair.
#[test]
fn dual_orbit_stays_bounded_below() {
    let alpha = Arc::new(cubic_pair().unwrap());
    let s: Vec<f64> = (0..=12).map(|i| i as f64 * 0.5).collect();
    let track = orbit_track(alpha, &s, budget()).unwrap();
    let primal = track.iter().map(|p| p.sv_norm).fold(f64::INFINITY, f64::min);
    let dual = track.iter().map(|p| p.dual_sv_norm).fold(f64::INFINITY, f64::min);
    assert!(primal > 0.3 && dual > 0.3, "primal {primal}, dual {dual}");
}

/// `F(M' D(theta)^{-1}, t) <= theta^{d+1}` once theta exceeds the covering
/// radius of `M'`. The estimate is only a lower bound, so this is a
/// necessary-condition check with a safety factor on theta.
#[test]
fn f_bounded_after_covering_radius() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let square = ConvexBody::unit_cube(2).unwrap();
    for _ in 0..20 {
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.2..0.2)).collect())
            .collect();
        let mp = LatticeBasis::from_rows(rows).unwrap();
        let rho = covering_radius_estimate(&mp, &square, 6, budget()).unwrap();
        let theta = 1.25 * rho.max(1.0);
        let dinv = dtheta(theta, 2).unwrap().rows().clone().try_inverse().unwrap();
        let m = mp.right_mul(&dinv);
        for _ in 0..20 {
            let t = [rng.gen_range(0.01..0.99), rng.gen_range(0.01..0.99)];
            let f = f_value(&m, &square, &t, budget()).unwrap();
            assert!(f.y <= theta.powi(3) * (1.0 + 1e-12), "F = {} above {}", f.y, theta.powi(3));
        }
    }
}
