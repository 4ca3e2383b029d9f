//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//! Runs without the libtest harness so the lines are always visible.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gaplattice::circleset::{gap_spectrum, frac_points, Alpha, Key};
use gaplattice::diophantine::{bad_approx_min, cubic_pair};
use gaplattice::geometry::{ConvexBody, DiagDilation};
use gaplattice::latticecore::{
    boundary_clearance, candidate_values, f_value, f_value_exact, proposition_basis, random_unimodular,
    steinhaus_basis_diag, slater_basis_diag, LatticeBasis,
};
use gaplattice::ratsum::{chevallier_fuzz, inclusion_check, random_sumset_spec, DecompositionSpec};
use gaplattice::slater::{distinct_return_count, return_time, return_time_via_f, DEFAULT_CAP};
use gaplattice::steinhaus::{gap_count, identity_check, max_g, scan_diag, scan_homothetic, ScanOptions};
use gaplattice::{Budget, ExactReal, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Outcome = Result<String, String>;

fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

fn budget() -> Budget {
    Budget::default()
}

fn fixtures_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/regressions.json")
}

/// Stored value for `key`; on first use the observed value is written and returned.
fn frozen(key: &str, observed: Value) -> Value {
    let path = fixtures_path();
    let mut all: Value = fs::read_to_string(&path)
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_else(|| json!({}));
    if let Some(v) = all.get(key) {
        return v.clone();
    }
    all[key] = observed.clone();
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(&path, serde_json::to_string_pretty(&all).unwrap() + "\n").unwrap();
    observed
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let out = f();
    let el = start.elapsed();
    match (out, limit) {
        (Ok(msg), Some(l)) if el > l => Err(format!("{msg}; took {el:.2?}, limit {l:?}")),
        (Ok(msg), _) => Ok(format!("{msg}; {el:.2?}")),
        (Err(e), _) => Err(format!("{e}; {el:.2?}")),
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> ConvexBody {
    let lo = q(rng.gen_range(-400..400), rng.gen_range(1..8));
    let len = q(rng.gen_range(1..1600), rng.gen_range(1..8));
    ConvexBody::axis_box(vec![lo], vec![lo + len], vec![rng.gen()], vec![rng.gen()]).unwrap()
}

fn c1_three_gap() -> Outcome {
    let mut worst = 0;
    for i in 0..1000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i);
        let alpha = Alpha::random(1, rng.gen()).map_err(|e| e.to_string())?;
        let body = random_interval(&mut rng);
        let rec = match gap_count(&alpha, &body, &DiagDilation::from_ints(&[1]).unwrap(), budget()) {
            Ok(r) => r,
            Err(gaplattice::Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(format!("instance {i}: {e}")),
        };
        worst = worst.max(rec.g);
        if rec.g > 3 {
            return Err(format!("instance {i}: G = {}", rec.g));
        }
    }
    Ok(format!("1000 instances, max G = {worst}"))
}

fn c2_slater_three() -> Outcome {
    let mut worst = 0;
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + i);
        let alpha = Arc::new(Alpha::random(1, rng.gen()).map_err(|e| e.to_string())?);
        let a = q(rng.gen_range(-50..0), 100);
        let b = q(rng.gen_range(1..=50), 100);
        let body = ConvexBody::axis_box(vec![a], vec![b], vec![rng.gen()], vec![rng.gen()]).unwrap();
        let r = rng.gen_range(2..60);
        let rec = distinct_return_count(&alpha, &body, &DiagDilation::new(vec![q(1, r)]).unwrap(), 64, DEFAULT_CAP, budget())
            .map_err(|e| format!("instance {i}: {e}"))?;
        worst = worst.max(rec.l_lower);
        if rec.l_lower > 3 || rec.failures > 0 {
            return Err(format!("instance {i}: {rec:?}"));
        }
    }
    Ok(format!("200 instances, max distinct return times = {worst}"))
}

fn random_body(rng: &mut ChaCha8Rng, d: usize) -> ConvexBody {
    match rng.gen_range(0..3) {
        0 => ConvexBody::unit_cube(d).unwrap(),
        1 => {
            let lo: Vec<Q> = (0..d).map(|_| q(rng.gen_range(-3..3), rng.gen_range(2..5))).collect();
            let hi: Vec<Q> = lo.iter().map(|l| *l + q(rng.gen_range(2..9), 4)).collect();
            let lc = (0..d).map(|_| rng.gen()).collect();
            let hc = (0..d).map(|_| rng.gen()).collect();
            ConvexBody::axis_box(lo, hi, lc, hc).unwrap()
        }
        _ => {
            let c: Vec<Q> = (0..d).map(|_| q(rng.gen_range(0..4), 4)).collect();
            ConvexBody::ball(c, q(rng.gen_range(3..7), 4), rng.gen()).unwrap()
        }
    }
}

fn c3_identity() -> Outcome {
    let mut checked = 0;
    let mut padded = 0;
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + i);
        let d = rng.gen_range(2..=3);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).map_err(|e| e.to_string())?);
        let body = random_body(&mut rng, d);
        let tmax = if d == 2 { 8 } else { 5 };
        let mut t: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=tmax)).collect();
        if body.dilate(&DiagDilation::from_ints(&t).unwrap()).is_err() {
            // balls only admit homothetic dilations
            t = vec![t[0]; d];
        }
        let t = DiagDilation::from_ints(&t).unwrap();
        let rep = match identity_check(alpha, &body, &t, None, budget()) {
            Ok(r) => r,
            Err(gaplattice::Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(format!("instance {i}: {e}")),
        };
        if !rep.mismatches.is_empty() {
            return Err(format!("instance {i}: mismatches {:?}", rep.mismatches));
        }
        checked += rep.checked;
        padded += rep.padded;
    }
    Ok(format!("{checked} gaps compared exactly ({padded} with boundary padding), 0 mismatches"))
}

fn c4_slater_identity() -> Outcome {
    let mut n = 0;
    for i in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + i);
        let d = rng.gen_range(1..=3);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).map_err(|e| e.to_string())?);
        let lo: Vec<Q> = (0..d).map(|_| q(-rng.gen_range(1..=10), 20)).collect();
        let hi: Vec<Q> = (0..d).map(|_| q(rng.gen_range(1..=10), 20)).collect();
        let body = ConvexBody::axis_box(lo.clone(), hi.clone(), vec![false; d], vec![true; d]).unwrap();
        let rmax = [0, 40, 8, 4][d];
        let b = DiagDilation::new((0..d).map(|_| q(1, rng.gen_range(1..=rmax))).collect()).unwrap();
        // interior q of D_B
        let qv: Vec<Q> = (0..d)
            .map(|j| {
                let k = rng.gen_range(1..1000);
                (lo[j] + (hi[j] - lo[j]) * q(k, 1000)) * b.factors()[j]
            })
            .collect();
        let db = body.dilate(&b).unwrap();
        let direct = return_time(&qv, &alpha, &db, DEFAULT_CAP).map_err(|e| format!("instance {i}: {e}"))?;
        let via = return_time_via_f(&qv, alpha, &body, &b, budget()).map_err(|e| format!("instance {i}: {e}"))?;
        if direct != via {
            return Err(format!("instance {i}: direct {direct}, via F {via}"));
        }
        n += 1;
    }
    Ok(format!("{n} instances, integer equality"))
}

fn c5_construction() -> Outcome {
    let disk = ConvexBody::ball(vec![q(0, 1), q(0, 1)], q(1, 1), true).unwrap();
    let eps = 0.1;
    let (basis, pc) = proposition_basis(&disk, eps).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for m in 1..=20 {
        let t = pc.target(&disk, m).map_err(|e| e.to_string())?;
        let f = f_value(&basis, &disk, &t, budget()).map_err(|e| e.to_string())?;
        let err = (f.y - m as f64 * eps).abs();
        worst = worst.max(err);
        if err > 1e-12 {
            return Err(format!("m = {m}: F = {}", f.y));
        }
        let kappa = eps * m as f64 + eps / 5.0;
        let cl = boundary_clearance(&basis, &disk, &t, kappa, budget()).map_err(|e| e.to_string())?;
        if !cl.cleared {
            return Err(format!("m = {m}: boundary clearance {:e}", cl.min_distance));
        }
    }
    Ok(format!("F = m/10 for m = 1..20, max error {worst:e}, all cleared"))
}

fn c6_chevallier() -> Outcome {
    let rep = chevallier_fuzz(500, &[2, 3], 12, 6, budget()).map_err(|e| e.to_string())?;
    let kinds = |k: &str| rep.trials.iter().filter(|t| t.kind == k).count();
    let msg = format!(
        "500 trials ({} random, {} rational-beta, {} rational), {} violations",
        kinds("random"),
        kinds("rational_beta"),
        kinds("rational"),
        rep.violations
    );
    if rep.violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c7_sumsets() -> Outcome {
    for i in 0..300u64 {
        let spec = random_sumset_spec(7000 + i, 4, 12).map_err(|e| e.to_string())?;
        let rep = inclusion_check(&spec, budget()).map_err(|e| e.to_string())?;
        if !(rep.outer_ok && rep.inner_ok) {
            return Err(format!("spec {spec:?}: {rep:?}"));
        }
    }
    Ok("300 specs, both inclusions hold".into())
}

fn c8_badly_approximable() -> Outcome {
    let alpha = Arc::new(cubic_pair().map_err(|e| e.to_string())?);
    let seq: Vec<f64> = (1..=400).map(f64::from).collect();
    let opts = ScanOptions { budget: budget(), ..Default::default() };
    let recs = scan_homothetic(&alpha, &ConvexBody::unit_cube(2).unwrap(), &seq, opts).map_err(|e| e.to_string())?;
    if let Some(r) = recs.iter().find(|r| !r.is_ok()) {
        return Err(format!("record {:?}: {}", r.params, r.status));
    }
    let top = max_g(&recs);
    let (bad, m) = bad_approx_min(&alpha, 500).map_err(|e| e.to_string())?;
    let frozen_g = frozen("cubic_pair_square_R400_max_G", json!(top));
    // floor: observed value truncated to six significant digits
    let floor_obs = {
        let p = 10f64.powi(5 - bad.log10().floor() as i32);
        (bad * p).floor() / p
    };
    let floor = frozen("cubic_pair_bad_approx_N500_floor", json!(floor_obs)).as_f64().unwrap();
    let msg = format!("max G = {top} (frozen {frozen_g}), bad_approx_min = {bad:.6} at {m:?} (floor {floor})");
    if json!(top) == frozen_g && bad >= floor && floor > 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c9_random_divergence() -> Outcome {
    let seq: Vec<f64> = (1..=400).map(f64::from).collect();
    let square = ConvexBody::unit_cube(2).unwrap();
    let mut hits = 0;
    let mut maxima = Vec::new();
    for i in 0..20u64 {
        let alpha = Arc::new(Alpha::random(2, 9000 + i).map_err(|e| e.to_string())?);
        let opts = ScanOptions {
            budget: budget(),
            stop_at: Some(10),
            with_sv: false,
            parallel: false,
        };
        let recs = scan_homothetic(&alpha, &square, &seq, opts).map_err(|e| e.to_string())?;
        let g = max_g(&recs);
        maxima.push(g);
        if g >= 10 {
            hits += 1;
        }
    }
    let msg = format!("{hits}/20 reach G >= 10 (per-seed max, capped at first hit: {maxima:?})");
    if hits >= 18 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn c10_rational_relation() -> Outcome {
    let alpha = Arc::new(
        Alpha::rational_beta(ExactReal::sqrt(2), vec![q(1, 3), q(1, 5)], vec![q(1, 2), q(0, 1)])
            .map_err(|e| e.to_string())?,
    );
    let grid: Vec<Vec<f64>> = gaplattice::steinhaus::integer_grid(2, 60)
        .into_iter()
        .map(|p| p.into_iter().map(|x| x as f64).collect())
        .collect();
    let recs = scan_diag(&alpha, &ConvexBody::unit_cube(2).unwrap(), &grid, ScanOptions::default())
        .map_err(|e| e.to_string())?;
    if let Some(r) = recs.iter().find(|r| !r.is_ok()) {
        return Err(format!("record {:?}: {}", r.params, r.status));
    }
    let top = max_g(&recs);
    let spec = DecompositionSpec::new(&alpha, vec![60, 60], None).map_err(|e| e.to_string())?;
    let bound = spec.gap_bound();
    let frozen_g = frozen("rational_beta_grid60_max_G", json!(top));
    let msg = format!(
        "max G = {top} (frozen {frozen_g}), bound {bound} with Q = {}, B = {:?}, C = {}",
        spec.q,
        spec.b,
        spec.leftover_constant()
    );
    if (top as u128) <= bound && json!(top) == frozen_g {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn one_key(alpha: &Alpha) -> Key {
    alpha.key_of(1, &vec![0; alpha.dim()])
}

fn c11_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut bases = 0;
    let mut reports = 0;
    // F in candidate set, and gap sums, over steinhaus lattices
    let mut samples = 0;
    while samples < 1000 {
        let d = rng.gen_range(2..=3);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).map_err(|e| e.to_string())?);
        let t: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=4)).collect();
        let dil = DiagDilation::from_ints(&t).unwrap();
        let body = random_body(&mut rng, d);
        let m = steinhaus_basis_diag(alpha.clone(), &dil).map_err(|e| e.to_string())?;
        let sl = slater_basis_diag(alpha.clone(), &dil).map_err(|e| e.to_string())?;
        for b in [&m, &sl] {
            b.det_certificate().map_err(|e| format!("det certificate: {e}"))?;
            bases += 1;
        }
        if let Ok(pts) = body.dilate(&dil).and_then(|b| b.lattice_points(budget())) {
            if !pts.is_empty() {
                let rep = gap_spectrum(&alpha, frac_points(&alpha, &pts).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                if rep.gap_sum() != one_key(&alpha) {
                    return Err("gap sum differs from 1".into());
                }
                reports += 1;
            }
        }
        let (lo, hi) = body.bbox_f64();
        for _ in 0..10 {
            let tt: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| a + (b - a) * rng.gen_range(0.05..0.95)).collect();
            if !body.interior_f64(&tt) {
                continue;
            }
            let f = f_value(&m, &body, &tt, budget()).map_err(|e| e.to_string())?;
            let cands = candidate_values(&m, &body, f.y * (1.0 + 1e-9), budget()).map_err(|e| e.to_string())?;
            if !f.witnesses.iter().all(|w| cands.contains_vector(w)) {
                return Err(format!("F witness outside candidate set at t = {tt:?}"));
            }
            samples += 1;
        }
    }
    // invariance under the left action of SL(d+1, Z), exactly
    for i in 0..50 {
        let d = rng.gen_range(2..=3);
        let alpha = Arc::new(Alpha::random(d, rng.gen()).map_err(|e| e.to_string())?);
        let dil = DiagDilation::from_ints(&(0..d).map(|_| rng.gen_range(1..=3)).collect::<Vec<_>>()).unwrap();
        let m = steinhaus_basis_diag(alpha.clone(), &dil).map_err(|e| e.to_string())?;
        let u = random_unimodular(d + 1, &mut rng, 6);
        let gm: LatticeBasis = m.left_mul_int(&u).map_err(|e| e.to_string())?;
        gm.det_certificate().map_err(|e| format!("det certificate after unimodular change: {e}"))?;
        bases += 1;
        let body = ConvexBody::unit_cube(d).unwrap();
        let t: Vec<Q> = (0..d).map(|_| q(rng.gen_range(1..16), 16)).collect();
        let a = f_value_exact(&m, &body, &t, budget()).map_err(|e| e.to_string())?;
        let b = f_value_exact(&gm, &body, &t, budget()).map_err(|e| e.to_string())?;
        if alpha.form_cmp(&a.y, &b.y).map_err(|e| e.to_string())? != std::cmp::Ordering::Equal {
            return Err(format!("invariance trial {i}: {} vs {}", a.y_f64, b.y_f64));
        }
    }
    Ok(format!(
        "{samples} F samples in candidate sets, 50 unimodular changes exact, {reports} gap sums = 1, {bases} det certificates"
    ))
}

fn main() {
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("three gap in dimension one", Some(Duration::from_secs(10)), c1_three_gap),
        ("three return times in dimension one", None, c2_slater_three),
        ("gap identity through F", Some(Duration::from_secs(60)), c3_identity),
        ("return-time identity through F", None, c4_slater_identity),
        ("explicit lattice with F = m eps", Some(Duration::from_secs(5)), c5_construction),
        ("Chevallier bound fuzz", None, c6_chevallier),
        ("sumset inclusions fuzz", None, c7_sumsets),
        ("badly approximable regression", None, c8_badly_approximable),
        ("random alpha divergence sampling", None, c9_random_divergence),
        ("rational relation regression", None, c10_rational_relation),
        ("consistency battery", None, c11_consistency),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        match timed(limit, f) {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
