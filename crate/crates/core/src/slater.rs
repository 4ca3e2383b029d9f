//! First-return times of `q -> q + alpha` to a region, and the number of
//! distinct values they take.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::circleset::{Alpha, AlphaForm};
use crate::error::{Budget, Error, Result};
use crate::geometry::{q_to_f64, ConvexBody, DiagDilation};
use crate::latticecore::{body_contains_forms, candidate_values, f_value_exact, slater_basis_diag};
use crate::reals::Q;

pub const DEFAULT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnRecord {
    pub params: Vec<f64>,
    pub l_lower: usize,
    pub l_upper: usize,
    /// Distinct attainable-looking candidates at or below `max_tau`, before probing.
    pub candidates: usize,
    pub samples: usize,
    pub max_tau: u64,
    pub failures: usize,
}

fn point_forms(q: &[Q], shift: &[i64], n: u64, d: usize) -> Vec<AlphaForm> {
    (0..d)
        .map(|i| {
            AlphaForm::constant(q[i] + Q::from_integer(shift[i] as i128), d)
                .add(&AlphaForm::alpha(i, Q::from_integer(n as i128), d))
        })
        .collect()
}

/// Integer shifts `m` (at most a couple per axis) that could put `x + m` in the box `[lo, hi]`.
fn shifts(x: &[f64], lo: &[f64], hi: &[f64], margin: f64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for i in 0..x.len() {
        let a = (lo[i] - margin - x[i]).ceil() as i64;
        let b = (hi[i] + margin - x[i]).floor() as i64;
        if a > b {
            return Vec::new();
        }
        out = out
            .into_iter()
            .flat_map(|p| {
                (a..=b).map(move |m| {
                    let mut p = p.clone();
                    p.push(m);
                    p
                })
            })
            .collect();
    }
    out
}

/// `tau(q, D) = min { n >= 1 : q + n alpha in D + Z^d }` by direct iteration.
/// Candidate hits are screened numerically and confirmed exactly.
pub fn return_time(q: &[Q], alpha: &Alpha, body: &ConvexBody, cap: u64) -> Result<u64> {
    let d = alpha.dim();
    if q.len() != d || body.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: q.len().max(body.dim()),
        });
    }
    if !body.contains(q)? {
        return Err(Error::InvalidArgument("q is not in the body".into()));
    }
    let (lo, hi) = body.bbox_f64();
    if lo.iter().zip(&hi).any(|(a, b)| b - a > 1.0) {
        return Err(Error::InvalidBody("body does not fit in a fundamental domain".into()));
    }
    let a = alpha.to_f64();
    let qf: Vec<f64> = q.iter().map(q_to_f64).collect();
    let mut x = vec![0.0; d];
    for n in 1..=cap {
        let margin = 1e-9 + n as f64 * 1e-15;
        for i in 0..d {
            x[i] = qf[i] + (n as f64 * a[i]).rem_euclid(1.0);
        }
        for m in shifts(&x, &lo, &hi, margin) {
            let p: Vec<f64> = x.iter().zip(&m).map(|(x, m)| x + *m as f64).collect();
            let dist = body.boundary_distance_f64(&p);
            let inside = body.interior_f64(&p);
            if !inside && dist > margin {
                continue;
            }
            let clear_in = inside && dist > margin;
            if clear_in || body_contains_forms(alpha, body, &point_forms(q, &m, n, d))? {
                return Ok(n);
            }
        }
    }
    Err(Error::CapExceeded(cap))
}

/// `(det B)^{-1} F(A~_B, q B^{-1})` where `body` is the unscaled region and
/// `q` lies in `D_B`; always an integer.
pub fn return_time_via_f(q: &[Q], alpha: Arc<Alpha>, body: &ConvexBody, b: &DiagDilation, budget: Budget) -> Result<u64> {
    let basis = slater_basis_diag(alpha.clone(), b)?;
    let t: Vec<Q> = q.iter().zip(b.factors()).map(|(q, bi)| *q / *bi).collect();
    let f = f_value_exact(&basis, body, &t, budget)?;
    let n = f.y.scale(Q::one() / b.det());
    let r = alpha
        .form_rational(&n)?
        .ok_or_else(|| Error::Certification("return time via F is not rational".into()))?;
    if !r.is_integer() {
        return Err(Error::Certification(format!("return time via F is {r}, not an integer")));
    }
    r.to_integer()
        .to_u64()
        .ok_or_else(|| Error::Certification("return time via F out of range".into()))
}

/// Rational sample grid of `grid_n^d` cell midpoints of the bounding box,
/// restricted to interior points.
pub fn sample_grid(body: &ConvexBody, grid_n: usize) -> Result<Vec<Vec<Q>>> {
    let (lo, hi) = body.bbox();
    let d = body.dim();
    let n = grid_n.max(1) as i128;
    let mut out = Vec::new();
    let mut idx = vec![0i128; d];
    loop {
        let q: Vec<Q> = (0..d)
            .map(|i| lo[i] + (hi[i] - lo[i]) * Q::new(2 * idx[i] + 1, 2 * n))
            .collect();
        if body.interior(&q)? {
            out.push(q);
        }
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Brackets `L(alpha, D_B)` for the shrunk body `D_B` (factors of `b` below 1).
///
/// `l_lower` counts distinct return times over a sample grid. `l_upper` adds to
/// those every lattice candidate `n <= max_tau` whose single probe point
/// `c - (n alpha + m)/2` has return time exactly `n`.
pub fn distinct_return_count(
    alpha: &Arc<Alpha>,
    body: &ConvexBody,
    b: &DiagDilation,
    grid_n: usize,
    cap: u64,
    budget: Budget,
) -> Result<ReturnRecord> {
    let db = body.dilate(b)?;
    let qs = sample_grid(&db, grid_n)?;
    if qs.is_empty() {
        return Err(Error::InvalidBody("no interior sample point".into()));
    }
    let taus: Vec<Result<u64>> = qs.par_iter().map(|q| return_time(q, alpha, &db, cap)).collect();
    let mut seen = BTreeSet::new();
    let mut failures = 0;
    for t in taus {
        match t {
            Ok(t) => {
                seen.insert(t);
            }
            Err(Error::CapExceeded(_)) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    let max_tau = seen.iter().max().copied().unwrap_or(0);
    let params: Vec<f64> = b.factors().iter().map(q_to_f64).collect();
    if seen.is_empty() {
        return Ok(ReturnRecord {
            params,
            l_lower: 0,
            l_upper: 0,
            candidates: 0,
            samples: qs.len(),
            max_tau,
            failures,
        });
    }
    let det = q_to_f64(&b.det());
    let basis = slater_basis_diag(alpha.clone(), b)?;
    let cands = candidate_values(&basis, body, max_tau as f64 * det * (1.0 + 1e-9), budget)?;
    let d = alpha.dim();
    let mut by_n: Vec<(u64, Vec<i64>)> = Vec::new();
    for (y, z) in &cands.values {
        let n = (y / det).round();
        if n >= 1.0 && n <= max_tau as f64 {
            by_n.push((n as u64, z[..d].to_vec()));
        }
    }
    by_n.sort();
    by_n.dedup();
    let distinct_n: BTreeSet<u64> = by_n.iter().map(|p| p.0).collect();
    let centre = db.interior_point();
    let a = alpha.to_f64();
    let mut upper = seen.clone();
    for (n, m) in &by_n {
        if upper.contains(n) {
            continue;
        }
        let probe: Vec<Q> = (0..d)
            .map(|i| {
                let v = *n as f64 * a[i] + m[i] as f64;
                let half = Q::new((v * (1u64 << 40) as f64).round() as i128, 1i128 << 41);
                centre[i] - half
            })
            .collect();
        if db.contains(&probe)? && return_time(&probe, alpha, &db, *n)? == *n {
            upper.insert(*n);
        }
    }
    Ok(ReturnRecord {
        params,
        l_lower: seen.len(),
        l_upper: upper.len(),
        candidates: distinct_n.union(&seen).count(),
        samples: qs.len(),
        max_tau,
        failures,
    })
}

/// Return-count records along shrinking homothetic bodies `R_i^{-1} D`.
pub fn scan_shrinking(
    alpha: &Arc<Alpha>,
    body: &ConvexBody,
    seq: &[f64],
    grid_n: usize,
    cap: u64,
    budget: Budget,
) -> Result<Vec<ReturnRecord>> {
    let d = body.dim();
    seq.iter()
        .map(|r| {
            let inv = Q::one() / crate::steinhaus::dilation_factor(*r)?;
            distinct_return_count(alpha, body, &DiagDilation::homothetic(inv, d)?, grid_n, cap, budget)
        })
        .collect()
}
