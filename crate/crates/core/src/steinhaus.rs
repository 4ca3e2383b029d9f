//! Distinct gaps of `{ m . alpha mod 1 : m in Z^d ∩ D_T }`, directly and
//! through the lattice function `F`.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::Arc;

use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;

use crate::circleset::{frac_points, gap_spectrum, Alpha, AlphaForm, GapReport, LinearFormValue};
use crate::error::{Budget, Error, Result};
use crate::geometry::{ConvexBody, DiagDilation};
use crate::latticecore::{
    candidate_values, diag_flow, f_value, f_value_exact, shortest_vector, steinhaus_basis_diag, LatticeBasis,
};
use crate::reals::Q;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub params: Vec<f64>,
    pub n_points: usize,
    #[serde(rename = "G")]
    pub g: usize,
    pub max_gap: f64,
    pub min_gap: f64,
    pub identity_checked: bool,
    pub sv_norm: Option<f64>,
    pub status: String,
}

impl ScanRecord {
    fn failed(params: Vec<f64>, e: &Error) -> Self {
        ScanRecord {
            params,
            n_points: 0,
            g: 0,
            max_gap: f64::NAN,
            min_gap: f64::NAN,
            identity_checked: false,
            sv_norm: None,
            status: match e {
                Error::Budget { .. } => "budget".into(),
                other => format!("error: {other}"),
            },
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn params_of(t: &DiagDilation) -> Vec<f64> {
    t.factors().iter().map(crate::geometry::q_to_f64).collect()
}

/// Full gap spectrum of `S(alpha, D_T)`.
pub fn gap_report(alpha: &Alpha, body: &ConvexBody, t: &DiagDilation, budget: Budget) -> Result<GapReport> {
    if alpha.dim() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: alpha.dim(),
        });
    }
    let pts = body.dilate(t)?.lattice_points(budget)?;
    if pts.is_empty() {
        return Err(Error::InvalidArgument("dilated body contains no integer point".into()));
    }
    gap_spectrum(alpha, frac_points(alpha, &pts)?)
}

pub fn gap_count(alpha: &Alpha, body: &ConvexBody, t: &DiagDilation, budget: Budget) -> Result<ScanRecord> {
    let n_points = body.dilate(t)?.lattice_points(budget)?.len();
    let rep = gap_report(alpha, body, t, budget)?;
    Ok(ScanRecord {
        params: params_of(t),
        n_points,
        g: rep.count,
        max_gap: rep.max_gap(),
        min_gap: rep.min_gap(),
        identity_checked: false,
        sv_norm: None,
        status: if rep.numeric_only {
            "numeric bracket only".into()
        } else {
            "ok".into()
        },
    })
}

/// `s_{k,T}`: the gap from `k . alpha mod 1` to its successor.
pub fn gap_after(
    alpha: &Alpha,
    body: &ConvexBody,
    t: &DiagDilation,
    k: &[i64],
    budget: Budget,
) -> Result<LinearFormValue> {
    let kq: Vec<Q> = k.iter().map(|x| Q::from_integer(*x as i128)).collect();
    if !body.dilate(t)?.contains(&kq)? {
        return Err(Error::InvalidArgument(format!("{k:?} is not in the dilated body")));
    }
    let rep = gap_report(alpha, body, t, budget)?;
    gap_after_in(alpha, &rep, k)
}

fn gap_after_in(alpha: &Alpha, rep: &GapReport, k: &[i64]) -> Result<LinearFormValue> {
    let p = alpha.frac(k)?;
    let i = rep
        .position(&p)
        .ok_or_else(|| Error::InvalidArgument("point missing from spectrum".into()))?;
    Ok(rep.gaps[i].clone())
}

/// Shrinks or grows every face so that the integer points of `D_T` are
/// unchanged, all of them become interior points and none lies on the new
/// boundary.
pub fn interior_padding_for(body: &ConvexBody, t: &DiagDilation, budget: Budget) -> Result<ConvexBody> {
    let dt = body.dilate(t)?;
    let pts = dt.lattice_points(budget)?;
    let tmax = t.factors().iter().max().copied().unwrap_or_else(Q::one);
    let mut delta = Q::new(1, 4) / tmax;
    for _ in 0..60 {
        let padded = body.interior_padding(delta);
        let pd = padded.dilate(t)?;
        // no integer point on the padded boundary either, so that float
        // membership of `x + t` in the F region is never a tie
        if pd.lattice_points(budget)? == pts
            && pd.closure().lattice_points(budget)? == pts
            && pts.iter().all(|k| {
                let kq: Vec<Q> = k.iter().map(|x| Q::from_integer(*x as i128)).collect();
                pd.interior(&kq).unwrap_or(false)
            })
        {
            return Ok(padded);
        }
        delta /= Q::from_integer(2);
        if *delta.denom() > (1i128 << 100) {
            break;
        }
    }
    Err(Error::Certification("no admissible interior padding found".into()))
}

#[derive(Debug, Clone)]
pub struct GapViaF {
    /// `(det T)^{-1} F(A_T, k T^{-1})` as an exact form.
    pub gap: AlphaForm,
    pub numeric: f64,
    pub witnesses: Vec<Vec<i64>>,
    /// Whether the body was replaced by its interior padding.
    pub padded: bool,
}

/// `(det T)^{-1} F(A_T, k T^{-1})`, exactly.
pub fn gap_after_via_f(
    alpha: Arc<Alpha>,
    body: &ConvexBody,
    t: &DiagDilation,
    k: &[i64],
    budget: Budget,
) -> Result<GapViaF> {
    let basis = steinhaus_basis_diag(alpha.clone(), t)?;
    gap_after_via_f_with(&alpha, &basis, body, t, k, budget)
}

fn gap_after_via_f_with(
    alpha: &Alpha,
    basis: &LatticeBasis,
    body: &ConvexBody,
    t: &DiagDilation,
    k: &[i64],
    budget: Budget,
) -> Result<GapViaF> {
    let target: Vec<Q> = k
        .iter()
        .zip(t.factors())
        .map(|(k, ti)| Q::from_integer(*k as i128) / *ti)
        .collect();
    let (b, padded) = if body.interior(&target)? {
        (body.clone(), false)
    } else {
        (interior_padding_for(body, t, budget)?, true)
    };
    let f = f_value_exact(basis, &b, &target, budget)?;
    let det = t.det();
    let gap = f.y.scale(Q::one() / det);
    let numeric = alpha.form_to_f64(&gap);
    Ok(GapViaF {
        gap,
        numeric,
        witnesses: f.witnesses,
        padded,
    })
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub checked: usize,
    pub padded: usize,
    /// `(k, direct gap, gap via F)` for every disagreement.
    pub mismatches: Vec<(Vec<i64>, f64, f64)>,
    /// Largest `F` value met (before division by `det T`).
    pub max_f: f64,
}

/// Compares the direct gap after `k` with the lattice route for every `k`
/// (or the given subset) with exact equality.
pub fn identity_check(
    alpha: Arc<Alpha>,
    body: &ConvexBody,
    t: &DiagDilation,
    ks: Option<&[Vec<i64>]>,
    budget: Budget,
) -> Result<IdentityReport> {
    let rep = gap_report(&alpha, body, t, budget)?;
    let all;
    let ks = match ks {
        Some(ks) => ks,
        None => {
            all = body.dilate(t)?.lattice_points(budget)?;
            &all
        }
    };
    let basis = steinhaus_basis_diag(alpha.clone(), t)?;
    let padded_body = interior_padding_for(body, t, budget)?;
    let d = alpha.dim();
    let mut out = IdentityReport {
        checked: 0,
        padded: 0,
        mismatches: Vec::new(),
        max_f: 0.0,
    };
    for k in ks {
        let direct = gap_after_in(&alpha, &rep, k)?;
        let target: Vec<Q> = k
            .iter()
            .zip(t.factors())
            .map(|(k, ti)| Q::from_integer(*k as i128) / *ti)
            .collect();
        let via = if body.interior(&target)? {
            gap_after_via_f_with(&alpha, &basis, body, t, k, budget)?
        } else {
            out.padded += 1;
            let mut g = gap_after_via_f_with(&alpha, &basis, &padded_body, t, k, budget)?;
            g.padded = true;
            g
        };
        out.max_f = out.max_f.max(via.numeric * crate::geometry::q_to_f64(&t.det()));
        let c = direct.coeffs();
        let mut direct_form = AlphaForm::constant(Q::from_integer(c[0] as i128), d);
        for i in 0..d {
            direct_form = direct_form.add(&AlphaForm::alpha(i, Q::from_integer(c[i + 1] as i128), d));
        }
        if alpha.form_cmp(&direct_form, &via.gap)? != Ordering::Equal {
            out.mismatches.push((k.clone(), direct.numeric(), via.numeric));
        }
        out.checked += 1;
    }
    Ok(out)
}

/// `G(alpha, D_T)` next to the number of distinct candidate values below the
/// largest observed `F`.
pub fn candidate_bound(
    alpha: Arc<Alpha>,
    body: &ConvexBody,
    t: &DiagDilation,
    budget: Budget,
) -> Result<(usize, usize)> {
    let g = gap_report(&alpha, body, t, budget)?.count;
    let id = identity_check(alpha.clone(), body, t, None, budget)?;
    let basis = steinhaus_basis_diag(alpha, t)?;
    let padded = interior_padding_for(body, t, budget)?;
    let cands = candidate_values(&basis, &padded, id.max_f * (1.0 + 1e-9), budget)?;
    Ok((g, cands.distinct(1e-9 * id.max_f.max(1.0)).len()))
}

/// Distinct values of `F(M, t)` over the given targets (merged within `tol`).
pub fn distinct_f_values(m: &LatticeBasis, body: &ConvexBody, targets: &[Vec<f64>], tol: f64, budget: Budget) -> Result<usize> {
    let mut ys: Vec<f64> = targets
        .iter()
        .map(|t| f_value(m, body, t, budget).map(|f| f.y))
        .collect::<Result<_>>()?;
    Ok(crate::circleset::distinct_count_numeric(&ys.split_off(0), 0.0, tol))
}

#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    pub budget: Budget,
    /// Stop once some record reaches this many gaps (records past it are skipped).
    pub stop_at: Option<usize>,
    pub with_sv: bool,
    pub parallel: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            budget: Budget::default(),
            stop_at: None,
            with_sv: false,
            parallel: true,
        }
    }
}

/// Shortest vector of `A_1 Phi^{log R}`, the lattice matched with `R D`.
fn orbit_sv(alpha: &Arc<Alpha>, r: f64, budget: Budget) -> Option<f64> {
    let d = alpha.dim();
    let a1 = steinhaus_basis_diag(alpha.clone(), &DiagDilation::homothetic(Q::one(), d).ok()?).ok()?;
    let m = a1.right_mul(diag_flow(r.ln(), d).rows());
    shortest_vector(&m, budget).ok().map(|s| s.norm)
}

fn run_scan(
    alpha: &Arc<Alpha>,
    body: &ConvexBody,
    dilations: Vec<DiagDilation>,
    opts: ScanOptions,
) -> Vec<ScanRecord> {
    let stop = AtomicBool::new(false);
    let one = |t: &DiagDilation| -> Option<ScanRecord> {
        if stop.load(AtomicOrdering::Relaxed) {
            return None;
        }
        let mut rec = match gap_count(alpha, body, t, opts.budget) {
            Ok(r) => r,
            Err(e) => ScanRecord::failed(params_of(t), &e),
        };
        if opts.with_sv && t.is_homothetic() {
            rec.sv_norm = orbit_sv(alpha, crate::geometry::q_to_f64(&t.factors()[0]), opts.budget);
        }
        if opts.stop_at.is_some_and(|s| rec.g >= s) {
            stop.store(true, AtomicOrdering::Relaxed);
        }
        Some(rec)
    };
    let mut out: Vec<ScanRecord> = if opts.parallel {
        dilations.par_iter().filter_map(one).collect()
    } else {
        dilations.iter().filter_map(one).collect()
    };
    if let Some(s) = opts.stop_at {
        // keep a deterministic prefix: everything up to the first record reaching the threshold
        if let Some(i) = out.iter().position(|r| r.g >= s) {
            out.truncate(i + 1);
        }
    }
    out
}

/// Rational stand-in for a real dilation factor (20 fractional bits).
pub fn dilation_factor(r: f64) -> Result<Q> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("dilation factor {r}")));
    }
    if r.fract() == 0.0 && r < 1e15 {
        return Ok(Q::from_integer(r as i128));
    }
    let den = 1i128 << 20;
    Ok(Q::new((r * den as f64).round() as i128, den))
}

/// One record per `R_i` for the dilations `R_i D`.
pub fn scan_homothetic(alpha: &Arc<Alpha>, body: &ConvexBody, seq: &[f64], opts: ScanOptions) -> Result<Vec<ScanRecord>> {
    let d = body.dim();
    let dil = seq
        .iter()
        .map(|r| DiagDilation::homothetic(dilation_factor(*r)?, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_scan(alpha, body, dil, opts))
}

/// All integer `T in {1..t_max}^d` in lexicographic order.
pub fn integer_grid(d: usize, t_max: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p| {
                (1..=t_max).map(move |t| {
                    let mut q = p.clone();
                    q.push(t);
                    q
                })
            })
            .collect();
    }
    out
}

/// One record per grid node `T` for the dilations `D_T`.
pub fn scan_diag(alpha: &Arc<Alpha>, body: &ConvexBody, grid: &[Vec<f64>], opts: ScanOptions) -> Result<Vec<ScanRecord>> {
    let dil = grid
        .iter()
        .map(|t| DiagDilation::new(t.iter().map(|x| dilation_factor(*x)).collect::<Result<_>>()?))
        .collect::<Result<Vec<_>>>()?;
    Ok(run_scan(alpha, body, dil, opts))
}

pub fn max_g(records: &[ScanRecord]) -> usize {
    records.iter().filter(|r| r.is_ok()).map(|r| r.g).max().unwrap_or(0)
}

/// Minimum of `G` over the second half of the records (a liminf proxy).
pub fn tail_min(records: &[ScanRecord]) -> Option<usize> {
    let tail = &records[records.len() / 2..];
    tail.iter().filter(|r| r.is_ok()).map(|r| r.g).min()
}
