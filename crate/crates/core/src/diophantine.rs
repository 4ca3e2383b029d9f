//! Littlewood products, badly-approximable minima, subexponential sequences
//! and shortest vectors along the diagonal orbit.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::circleset::Alpha;
use crate::error::{Budget, Error, Result};
use crate::geometry::DiagDilation;
use crate::latticecore::{diag_flow, shortest_vector, steinhaus_basis_diag};
use crate::reals::{ExactReal, Q};

/// `(theta, theta^2)` with `theta = 2 cos(2 pi / 7)`, a badly approximable pair.
pub fn cubic_pair() -> Result<Alpha> {
    Alpha::generic(vec![ExactReal::Cubic7, ExactReal::Pow(Box::new(ExactReal::Cubic7), 2)])
}

/// Screening relative slack; anything this close to the running minimum is
/// re-evaluated with certified intervals.
const SCREEN: f64 = 1e-9;

/// Certified interval for `|| m . alpha ||` (distance to the nearest integer).
fn dist_interval(alpha: &Alpha, m: &[i64], prec: u32) -> Result<(BigRational, BigRational)> {
    let f = alpha.frac(m)?;
    let key = f.key();
    let den = BigInt::from(alpha.key_den());
    let (lo, hi) = if key.is_rational() {
        let r = BigRational::new(BigInt::from(key.num), den);
        (r.clone(), r)
    } else {
        let (a, e) = alpha.approx_key(key, prec);
        let scale = den << prec as usize;
        (
            BigRational::new(&a - &e, scale.clone()),
            BigRational::new(&a + &e, scale),
        )
    };
    // distance is min(f, 1 - f), monotone pieces on [0, 1]
    let one = BigRational::one();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let clamp = |x: BigRational| {
        if x.is_negative() {
            BigRational::zero()
        } else if x > one {
            one.clone()
        } else {
            x
        }
    };
    let (lo, hi) = (clamp(lo), clamp(hi));
    let d = |x: &BigRational| if *x <= half { x.clone() } else { &one - x };
    let (dl, dh) = (d(&lo), d(&hi));
    let (mut a, mut b) = if dl < dh { (dl, dh) } else { (dh, dl) };
    if lo <= half && hi >= half {
        b = half.clone();
    }
    if lo.is_zero() || hi == one {
        a = BigRational::zero();
    }
    Ok((a, b))
}

fn product_interval(terms: &[(BigRational, BigRational)], scale: i64) -> (BigRational, BigRational) {
    let s = BigRational::from_integer(BigInt::from(scale));
    terms
        .iter()
        .fold((s.clone(), s), |(a, b), (l, h)| (a * l, b * h))
}

/// Picks the certified minimum among candidates whose values are given as
/// interval thunks; ties resolved by the smaller index.
fn certified_argmin<F>(cands: &[usize], mut interval: F) -> Result<(usize, f64)>
where
    F: FnMut(usize, u32) -> Result<(BigRational, BigRational)>,
{
    let mut prec = 128;
    loop {
        let iv: Vec<(usize, BigRational, BigRational)> = cands
            .iter()
            .map(|&c| interval(c, prec).map(|(a, b)| (c, a, b)))
            .collect::<Result<_>>()?;
        let best_hi = iv.iter().map(|x| x.2.clone()).min().unwrap();
        let live: Vec<&(usize, BigRational, BigRational)> = iv.iter().filter(|x| x.1 <= best_hi).collect();
        let exact_ties = live.iter().all(|x| x.1 == x.2 && x.1 == live[0].1);
        if live.len() == 1 || exact_ties {
            let w = live.iter().min_by_key(|x| x.0).unwrap();
            return Ok((w.0, w.1.to_f64().unwrap_or(f64::NAN)));
        }
        if prec >= crate::circleset::MAX_PRECISION {
            return Err(Error::Certification("minimum not separated".into()));
        }
        prec *= 2;
    }
}

fn screen<T: Copy + Send>(vals: Vec<(T, f64)>) -> Vec<T> {
    let min = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let cut = min * (1.0 + SCREEN) + 1e-300 + SCREEN * 1e-6;
    vals.into_iter().filter(|v| v.1 <= cut).map(|v| v.0).collect()
}

fn dist_f64(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    f.min(1.0 - f)
}

/// `min_{2 <= n <= N} n prod_i ||n alpha_i||` and its smallest witness.
pub fn littlewood_min(alpha: &Alpha, n_max: u64) -> Result<(f64, u64)> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("N must be at least 2".into()));
    }
    let d = alpha.dim();
    let a = alpha.to_f64();
    let vals: Vec<(u64, f64)> = (2..=n_max)
        .into_par_iter()
        .map(|n| (n, n as f64 * a.iter().map(|x| dist_f64(n as f64 * x)).product::<f64>()))
        .collect();
    let cands = screen(vals);
    let unit = |i: usize, n: u64| -> Vec<i64> {
        let mut m = vec![0; d];
        m[i] = n as i64;
        m
    };
    let (w, v) = certified_argmin(&(0..cands.len()).collect::<Vec<_>>(), |c, prec| {
        let n = cands[c];
        let terms = (0..d)
            .map(|i| dist_interval(alpha, &unit(i, n), prec))
            .collect::<Result<Vec<_>>>()?;
        Ok(product_interval(&terms, n as i64))
    })?;
    Ok((v, cands[w]))
}

/// `min_{0 < |m|_inf <= N} ||m . alpha|| |m|_inf^d` and a witness `m`.
pub fn bad_approx_min(alpha: &Alpha, n_max: i64) -> Result<(f64, Vec<i64>)> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("N must be at least 1".into()));
    }
    let d = alpha.dim();
    let a = alpha.to_f64();
    let side = (2 * n_max + 1) as u64;
    let total = side.pow(d as u32);
    // first nonzero coordinate positive: m and -m give the same value
    let vals: Vec<(u64, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|code| {
            let m = decode(code, side, n_max, d);
            let first = m.iter().find(|x| **x != 0)?;
            if *first < 0 {
                return None;
            }
            let norm = m.iter().map(|x| x.abs()).max().unwrap() as f64;
            let dot: f64 = m.iter().zip(&a).map(|(m, a)| *m as f64 * a).sum();
            Some((code, dist_f64(dot) * norm.powi(d as i32)))
        })
        .collect();
    let cands = screen(vals);
    let (w, v) = certified_argmin(&(0..cands.len()).collect::<Vec<_>>(), |c, prec| {
        let m = decode(cands[c], side, n_max, d);
        let norm = m.iter().map(|x| x.abs()).max().unwrap();
        let t = dist_interval(alpha, &m, prec)?;
        Ok(product_interval(&[t], norm.pow(d as u32)))
    })?;
    Ok((v, decode(cands[w], side, n_max, d)))
}

fn decode(mut code: u64, side: u64, n_max: i64, d: usize) -> Vec<i64> {
    let mut m = vec![0; d];
    for x in m.iter_mut().rev() {
        *x = (code % side) as i64 - n_max;
        code /= side;
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxStats {
    #[serde(rename = "N")]
    pub n: u64,
    pub littlewood_min: f64,
    pub littlewood_arg: u64,
    pub bad_min: f64,
    pub bad_arg: Vec<i64>,
}

pub fn approx_stats(alpha: &Alpha, n: u64) -> Result<ApproxStats> {
    let (lw, la) = littlewood_min(alpha, n.max(2))?;
    let (bm, ba) = bad_approx_min(alpha, n as i64)?;
    Ok(ApproxStats {
        n,
        littlewood_min: lw,
        littlewood_arg: la,
        bad_min: bm,
        bad_arg: ba,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitPoint {
    pub s: f64,
    pub sv_norm: f64,
    /// Shortest vector of the transpose-inverse lattice.
    pub dual_sv_norm: f64,
}

/// Shortest vectors of `A_1 Phi^s` and of its transpose inverse.
pub fn orbit_track(alpha: Arc<Alpha>, s_values: &[f64], budget: Budget) -> Result<Vec<OrbitPoint>> {
    let d = alpha.dim();
    let a1 = steinhaus_basis_diag(alpha, &DiagDilation::homothetic(Q::one(), d)?)?;
    s_values
        .par_iter()
        .map(|&s| {
            let m = a1.right_mul(diag_flow(s, d).rows());
            let sv = shortest_vector(&m, budget)?;
            let dual = shortest_vector(&m.transpose_inverse()?, budget)?;
            Ok(OrbitPoint {
                s,
                sv_norm: sv.norm,
                dual_sv_norm: dual.norm,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubexpKind {
    /// `R_i = i h`
    Linear(f64),
    /// `R_i = exp(sqrt(i))`
    ExpSqrt,
    /// `R_i = i^p`
    Power(f64),
    /// `R_i = r^i`; fails validation, kept as a contract case.
    Geometric(f64),
}

/// First `count` terms (`i = 1..=count`), validated as subexponential.
pub fn subexp_sequence(kind: SubexpKind, count: usize) -> Result<Vec<f64>> {
    if count < 2 {
        return Err(Error::InvalidArgument("count must be at least 2".into()));
    }
    let seq: Vec<f64> = match kind {
        SubexpKind::Linear(h) if h > 0.0 => (1..=count).map(|i| i as f64 * h).collect(),
        SubexpKind::ExpSqrt => (1..=count).map(|i| (i as f64).sqrt().exp()).collect(),
        SubexpKind::Power(p) if p > 0.0 => (1..=count).map(|i| (i as f64).powf(p)).collect(),
        SubexpKind::Geometric(r) if r > 1.0 => (1..=count).map(|i| r.powi(i as i32)).collect(),
        _ => return Err(Error::InvalidArgument(format!("parameter out of range: {kind:?}"))),
    };
    validate_subexp(&seq)?;
    Ok(seq)
}

/// Increasing, with consecutive ratios non-increasing and strictly smaller at
/// the end than at the start.
pub fn validate_subexp(seq: &[f64]) -> Result<f64> {
    if seq.len() < 2 || seq.windows(2).any(|w| !(w[1] > w[0])) || seq[0] <= 0.0 {
        return Err(Error::InvalidArgument("sequence is not positive and increasing".into()));
    }
    let ratios: Vec<f64> = seq.windows(2).map(|w| w[1] / w[0]).collect();
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    if !monotone || (ratios.len() > 1 && last >= first) {
        return Err(Error::InvalidArgument(format!(
            "ratios do not decrease towards 1 (first {first}, last {last})"
        )));
    }
    Ok(last)
}
