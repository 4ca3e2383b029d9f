//! One function per subcommand. Each returns its table together with the
//! first failure, so partial output is still written.

use std::path::Path;
use std::sync::Arc;

use gaplattice::circleset::Alpha;
use gaplattice::diophantine::{bad_approx_min, littlewood_min, orbit_track};
use gaplattice::geometry::{ConvexBody, DiagDilation};
use gaplattice::latticecore::{boundary_clearance, f_value, proposition_basis};
use gaplattice::ratsum::{chevallier_fuzz, inclusion_check, random_sumset_spec, SumsetSpec};
use gaplattice::slater::{scan_shrinking, DEFAULT_CAP};
use gaplattice::steinhaus::{identity_check, max_g, scan_diag, scan_homothetic, tail_min, ScanOptions};
use gaplattice::{Budget, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{parse_grid, parse_sequence, RunConfig};
use crate::error::CliError;
use crate::fixtures::check_or_write;
use crate::table::{num, Table};

pub struct Outcome {
    pub table: Table,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(table: Table) -> Self {
        Outcome { table, failure: None }
    }

    fn fail(mut table: Table, e: CliError) -> Self {
        // rows were cut short; a failed assertion still leaves complete output
        if matches!(e.exit_code(), 2 | 3) {
            table.partial = true;
        }
        Outcome { table, failure: Some(e) }
    }

    fn with(table: Table, failure: Option<CliError>) -> Self {
        match failure {
            Some(e) => Self::fail(table, e),
            None => Self::ok(table),
        }
    }
}

pub struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub budget: Budget,
    pub fixtures: Option<&'a Path>,
}

fn regression(ctx: &Ctx, command: &str, observed: Value) -> Result<(), CliError> {
    if let Some(dir) = ctx.fixtures {
        check_or_write(dir, command, &ctx.cfg.raw, &observed)?;
    }
    Ok(())
}

fn sv(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

pub fn steinhaus_scan(ctx: &Ctx) -> Result<Outcome, CliError> {
    let alpha = ctx.cfg.alpha()?;
    let d = alpha.dim();
    let body = ctx.cfg.body_or_unit(d)?;
    let dil = ctx
        .cfg
        .get("dilation")
        .ok_or_else(|| CliError::Config("missing \"dilation\"".into()))?;
    let opts = ScanOptions {
        budget: ctx.budget,
        stop_at: ctx.cfg.get("stop_at").and_then(Value::as_u64).map(|x| x as usize),
        with_sv: ctx.cfg.get("with_sv").and_then(Value::as_bool).unwrap_or(false),
        parallel: true,
    };
    let (header, records) = match parse_grid(dil, d)? {
        Some(grid) => (
            (1..=d).map(|i| format!("T{i}")).collect::<Vec<_>>(),
            scan_diag(&alpha, &body, &grid, opts)?,
        ),
        None => (vec!["R".to_string()], scan_homothetic(&alpha, &body, &parse_sequence(dil)?, opts)?),
    };
    let homothetic = header.len() == 1;
    let mut table = Table::new(
        header
            .into_iter()
            .chain(["n_points", "G", "max_gap", "min_gap", "sv_norm", "status"].map(String::from)),
    );
    let mut failure = None;
    for r in &records {
        let params = if homothetic { &r.params[..1] } else { &r.params[..] };
        let mut row: Vec<Value> = params.iter().map(|x| num(*x)).collect();
        row.extend([
            json!(r.n_points),
            json!(r.g),
            num(r.max_gap),
            num(r.min_gap),
            sv(r.sv_norm),
            json!(r.status),
        ]);
        table.push(row);
        if r.status == "budget" && failure.is_none() {
            failure = Some(CliError::Budget(format!("record {:?} exceeded the budget", r.params)));
        } else if r.status.starts_with("error") && failure.is_none() {
            failure = Some(CliError::Config(r.status.clone()));
        }
    }
    let top = max_g(&records);
    table.extra.insert("max_G".into(), json!(top));
    table.extra.insert("tail_min_G".into(), json!(tail_min(&records)));
    if failure.is_none() && d == 1 && top > 3 {
        failure = Some(CliError::Assertion(format!("{top} gaps in dimension one")));
    }
    if failure.is_none() {
        if let Some(cap) = ctx.cfg.get("expect_max_g_le").and_then(Value::as_u64) {
            if top as u64 > cap {
                failure = Some(CliError::Assertion(format!("max G = {top} exceeds {cap}")));
            }
        }
    }
    if failure.is_none() {
        failure = regression(ctx, "steinhaus-scan", json!({ "max_G": top })).err();
    }
    Ok(Outcome::with(table, failure))
}

pub fn slater_scan(ctx: &Ctx) -> Result<Outcome, CliError> {
    let alpha = ctx.cfg.alpha()?;
    let d = alpha.dim();
    let body = match ctx.cfg.get("body") {
        Some(_) => ctx.cfg.body_in(d)?,
        None => ConvexBody::axis_box(
            vec![Q::new(-1, 2); d],
            vec![Q::new(1, 2); d],
            vec![false; d],
            vec![true; d],
        )?,
    };
    let seq = parse_sequence(
        ctx.cfg
            .get("dilation")
            .ok_or_else(|| CliError::Config("missing \"dilation\"".into()))?,
    )?;
    let grid_n = ctx.cfg.u64_or("grid_n", 16)? as usize;
    let cap = ctx.cfg.u64_or("cap", DEFAULT_CAP)?;
    let recs = scan_shrinking(&alpha, &body, &seq, grid_n, cap, ctx.budget)?;
    let mut table = Table::new(["R", "L_lower", "L_upper", "candidates", "max_tau", "failures"]);
    let mut failure = None;
    for (r, rec) in seq.iter().zip(&recs) {
        table.push(vec![
            num(*r),
            json!(rec.l_lower),
            json!(rec.l_upper),
            json!(rec.candidates),
            json!(rec.max_tau),
            json!(rec.failures),
        ]);
        if rec.failures > 0 && failure.is_none() {
            failure = Some(CliError::Budget(format!("{} sample points exceeded the cap at R = {r}", rec.failures)));
        }
    }
    let top = recs.iter().map(|r| r.l_upper).max().unwrap_or(0);
    table.extra.insert("max_L_upper".into(), json!(top));
    if failure.is_none() && d == 1 {
        if let Some(r) = recs.iter().find(|r| r.l_lower > 3) {
            failure = Some(CliError::Assertion(format!("{} return times in dimension one", r.l_lower)));
        }
    }
    if failure.is_none() {
        failure = regression(ctx, "slater-scan", json!({ "max_L_upper": top })).err();
    }
    Ok(Outcome::with(table, failure))
}

pub fn identity_check_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let seed = ctx.cfg.require_seed()?;
    let trials = ctx.cfg.u64_or("trials", 200)?;
    let dims = ctx.cfg.dims_or("dims", &[2, 3])?;
    let t_max = ctx.cfg.u64_or("t_max", 5)? as i64;
    if dims.is_empty() || t_max < 1 {
        return Err(CliError::Config("need non-empty dims and t_max >= 1".into()));
    }
    let prec = ctx.cfg.precision_bits;
    let budget = ctx.budget;
    let rows: Vec<Result<Vec<Value>, CliError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let ts = seed.wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let d = dims[rng.gen_range(0..dims.len())];
            let t: Vec<i64> = (0..d).map(|_| rng.gen_range(1..=t_max)).collect();
            let alpha = Arc::new(Alpha::random(d, rng.gen())?.with_precision(prec));
            let rep = identity_check(alpha, &ConvexBody::unit_cube(d)?, &DiagDilation::from_ints(&t)?, None, budget)?;
            Ok(vec![
                json!(i),
                json!(ts),
                json!(d),
                json!(t),
                json!(rep.checked),
                json!(rep.padded),
                json!(rep.mismatches.len()),
            ])
        })
        .collect();
    let mut table = Table::new(["trial", "seed", "d", "T", "checked", "padded", "mismatches"]);
    let mut bad = 0;
    for r in rows {
        let r = r?;
        bad += r[6].as_u64().unwrap_or(0);
        table.push(r);
    }
    table.extra.insert("mismatches".into(), json!(bad));
    let failure = (bad > 0).then(|| CliError::Assertion(format!("{bad} identity mismatches")));
    Ok(Outcome::with(table, failure))
}

pub fn construct_meps(ctx: &Ctx) -> Result<Outcome, CliError> {
    let body = match ctx.cfg.get("body") {
        Some(_) => ctx.cfg.body()?,
        None => ConvexBody::ball(vec![Q::from_integer(0); 2], Q::from_integer(1), true)?,
    };
    let eps = ctx.cfg.f64_or("eps", 0.1)?;
    let tol = ctx.cfg.f64_or("tol", 1e-12)?;
    let (basis, pc) = proposition_basis(&body, eps)?;
    let m_max = (ctx.cfg.u64_or("m_max", 20)? as usize).min(pc.m_max());
    let mut table = Table::new(["m", "t", "F", "expected", "abs_err", "kappa", "cleared", "min_distance"]);
    let mut failure = None;
    for m in 1..=m_max {
        let t = pc.target(&body, m)?;
        let f = f_value(&basis, &body, &t, ctx.budget)?;
        let expected = m as f64 * eps;
        let kappa = eps * m as f64 + eps / 5.0;
        let cl = boundary_clearance(&basis, &body, &t, kappa, ctx.budget)?;
        let err = (f.y - expected).abs();
        table.push(vec![
            json!(m),
            Value::Array(t.iter().map(|x| num(*x)).collect()),
            num(f.y),
            num(expected),
            num(err),
            num(kappa),
            json!(cl.cleared),
            num(cl.min_distance),
        ]);
        if failure.is_none() && (err > tol || !cl.cleared) {
            failure = Some(CliError::Assertion(format!("m = {m}: F = {}, cleared = {}", f.y, cl.cleared)));
        }
    }
    table.extra.insert("scale".into(), num(pc.scale));
    table.extra.insert("lambda".into(), num(pc.lambda));
    Ok(Outcome::with(table, failure))
}

pub fn littlewood(ctx: &Ctx) -> Result<Outcome, CliError> {
    let alpha = ctx.cfg.alpha()?;
    let d = alpha.dim() as u32;
    let ns: Vec<u64> = match ctx.cfg.get("n_values") {
        Some(v) => v
            .as_array()
            .and_then(|a| a.iter().map(Value::as_u64).collect())
            .ok_or_else(|| CliError::Config("\"n_values\" must be integers".into()))?,
        None => vec![10, 100, 1000],
    };
    let mut table = Table::new(["N", "littlewood_min", "littlewood_arg", "bad_min", "bad_arg"]);
    let mut failure = None;
    for n in ns {
        let (lv, la) = littlewood_min(&alpha, n)?;
        let box_size = (2 * n as u128 + 1).pow(d);
        let (bv, ba) = if ctx.budget.check("bad_approx_min", box_size).is_ok() {
            let (v, m) = bad_approx_min(&alpha, n as i64)?;
            (num(v), json!(m))
        } else {
            failure.get_or_insert(CliError::Budget(format!("bad_approx_min skipped at N = {n}")));
            (Value::Null, Value::Null)
        };
        table.push(vec![json!(n), num(lv), json!(la), bv, ba]);
    }
    Ok(Outcome::with(table, failure))
}

pub fn chevallier_fuzz_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let seed = ctx.cfg.require_seed()?;
    let trials = ctx.cfg.u64_or("trials", 500)? as usize;
    let dims = ctx.cfg.dims_or("dims", &[2, 3])?;
    let n_max = ctx.cfg.u64_or("n_max", 12)?;
    let rep = chevallier_fuzz(trials, &dims, n_max, seed, ctx.budget)?;
    let mut table = Table::new(["trial", "seed", "kind", "N", "G", "bound", "ok"]);
    for (i, t) in rep.trials.iter().enumerate() {
        table.push(vec![
            json!(i),
            json!(t.seed),
            json!(t.kind),
            json!(t.n),
            json!(t.g),
            json!(t.bound as u64),
            json!(t.g as u128 <= t.bound),
        ]);
    }
    table.extra.insert("violations".into(), json!(rep.violations));
    let failure =
        (rep.violations > 0).then(|| CliError::Assertion(format!("{} bound violations", rep.violations)));
    Ok(Outcome::with(table, failure))
}

pub fn sumset_verify(ctx: &Ctx) -> Result<Outcome, CliError> {
    let specs: Vec<(u64, SumsetSpec)> = match ctx.cfg.get("spec") {
        Some(s) => {
            let ints = |k: &str| -> Result<Vec<i64>, CliError> {
                s.get(k)
                    .and_then(Value::as_array)
                    .and_then(|a| a.iter().map(Value::as_i64).collect())
                    .ok_or_else(|| CliError::Config(format!("spec needs integer array \"{k}\"")))
            };
            vec![(0, SumsetSpec::new(ints("q")?, ints("C")?, ints("D")?).map_err(CliError::from_config)?)]
        }
        None => {
            let seed = ctx.cfg.require_seed()?;
            let trials = ctx.cfg.u64_or("trials", 300)?;
            let k_max = ctx.cfg.u64_or("k_max", 4)? as usize;
            let q_max = ctx.cfg.u64_or("q_max", 12)? as i64;
            (0..trials)
                .map(|i| {
                    let ts = seed.wrapping_add(i);
                    random_sumset_spec(ts, k_max, q_max).map(|s| (ts, s)).map_err(CliError::from_config)
                })
                .collect::<Result<_, _>>()?
        }
    };
    let mut table = Table::new(["seed", "q", "C", "D", "r", "outer_ok", "inner_ok", "inner_m_lo", "inner_m_hi"]);
    let mut bad = 0;
    for (ts, s) in &specs {
        let rep = inclusion_check(s, ctx.budget)?;
        if !(rep.outer_ok && rep.inner_ok) {
            bad += 1;
        }
        table.push(vec![
            json!(ts),
            json!(s.q),
            json!(s.c),
            json!(s.d),
            json!(s.r()),
            json!(rep.outer_ok),
            json!(rep.inner_ok),
            json!(rep.inner_m.0),
            json!(rep.inner_m.1),
        ]);
    }
    table.extra.insert("violations".into(), json!(bad));
    let failure = (bad > 0).then(|| CliError::Assertion(format!("{bad} inclusion violations")));
    Ok(Outcome::with(table, failure))
}

pub fn orbit_track_cmd(ctx: &Ctx) -> Result<Outcome, CliError> {
    let alpha = ctx.cfg.alpha()?;
    let s_values: Vec<f64> = match (ctx.cfg.get("s_values"), ctx.cfg.get("s")) {
        (Some(v), _) => v
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect())
            .ok_or_else(|| CliError::Config("\"s_values\" must be numbers".into()))?,
        (None, Some(r)) => {
            let get = |k: &str, dflt: f64| r.get(k).and_then(Value::as_f64).unwrap_or(dflt);
            let (from, to, step) = (get("from", 0.0), get("to", 12.0), get("step", 0.5));
            if !(step > 0.0) || to < from {
                return Err(CliError::Config("bad s range".into()));
            }
            let n = ((to - from) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| from + i as f64 * step).collect()
        }
        (None, None) => (0..=24).map(|i| i as f64 * 0.5).collect(),
    };
    let pts = orbit_track(alpha, &s_values, ctx.budget)?;
    let mut table = Table::new(["s", "sv_norm", "dual_sv_norm"]);
    for p in &pts {
        table.push(vec![num(p.s), num(p.sv_norm), num(p.dual_sv_norm)]);
    }
    Ok(Outcome::ok(table))
}
