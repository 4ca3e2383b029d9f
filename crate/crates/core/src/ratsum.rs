//! Rotations with a rational relation `Q alpha - B beta in Z^d`: sumsets,
//! the bulk/leftover split of `S(alpha, D_T)`, and the Chevallier box bound.

use std::collections::{BTreeSet, HashSet};

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::circleset::{Alpha, Key, RelationSpec};
use crate::error::{Budget, Error, Result};
use crate::geometry::{ConvexBody, DiagDilation};
use crate::reals::{ExactReal, Q};
use crate::steinhaus::gap_count;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SumsetSpec {
    pub q: Vec<i64>,
    pub c: Vec<i64>,
    pub d: Vec<i64>,
}

impl SumsetSpec {
    pub fn new(q: Vec<i64>, c: Vec<i64>, d: Vec<i64>) -> Result<Self> {
        let k = q.len();
        if k < 2 || c.len() != k || d.len() != k {
            return Err(Error::InvalidArgument("need k >= 2 and matching lengths".into()));
        }
        if q.iter().any(|x| *x <= 0) {
            return Err(Error::InvalidArgument("q must be positive".into()));
        }
        let qmax = *q.iter().max().unwrap();
        if c.iter().zip(&d).any(|(c, d)| d - c < qmax) {
            return Err(Error::InvalidArgument("window D_i - C_i must be at least max q".into()));
        }
        Ok(SumsetSpec { q, c, d })
    }

    pub fn r(&self) -> i64 {
        self.q.iter().fold(0, |g, x| g.gcd(x))
    }

    pub fn c_sum(&self) -> i64 {
        self.c.iter().zip(&self.q).map(|(c, q)| c * q).sum()
    }

    pub fn d_sum(&self) -> i64 {
        self.d.iter().zip(&self.q).map(|(d, q)| d * q).sum()
    }

    /// `sum_{i<k} q_i q_{i+1}`.
    pub fn chain(&self) -> i64 {
        self.q.windows(2).map(|w| w[0] * w[1]).sum()
    }
}

/// Seeded spec with `2 <= k <= k_max`, `1 <= q_i <= q_max` and windows just
/// wide enough or a little wider.
pub fn random_sumset_spec(seed: u64, k_max: usize, q_max: i64) -> Result<SumsetSpec> {
    if k_max < 2 || q_max < 1 {
        return Err(Error::InvalidArgument("need k_max >= 2 and q_max >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(2..=k_max);
    let q: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=q_max)).collect();
    let qmax = *q.iter().max().unwrap();
    let c: Vec<i64> = (0..k).map(|_| rng.gen_range(-5..=5)).collect();
    let d = c.iter().map(|c| c + qmax + rng.gen_range(0..=q_max)).collect();
    SumsetSpec::new(q, c, d)
}

/// `{ sum a_i q_i : C_i <= a_i <= D_i }`, sorted.
pub fn sumset(spec: &SumsetSpec, budget: Budget) -> Result<Vec<i64>> {
    let product: u128 = spec.c.iter().zip(&spec.d).map(|(c, d)| (d - c + 1) as u128).product();
    budget.check("sumset", product)?;
    let mut acc: BTreeSet<i64> = BTreeSet::from([0]);
    for ((q, c), d) in spec.q.iter().zip(&spec.c).zip(&spec.d) {
        acc = acc.iter().flat_map(|s| (*c..=*d).map(move |a| s + a * q)).collect();
    }
    Ok(acc.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub outer_ok: bool,
    pub inner_ok: bool,
    /// Integer range of `m` guaranteed by the inner inclusion (`m r` in the set).
    pub inner_m: (i64, i64),
    pub outer_m: (i64, i64),
    /// Elements of the sumset outside the outer window.
    pub stray: Vec<i64>,
    /// Multiples `m r` of the inner window missing from the sumset.
    pub missing: Vec<i64>,
}

pub fn inclusion_check(spec: &SumsetSpec, budget: Budget) -> Result<InclusionReport> {
    let set = sumset(spec, budget)?;
    let r = spec.r();
    let (c, d) = (spec.c_sum(), spec.d_sum());
    let outer_m = (ceil_div(c, r), d.div_euclid(r));
    // m >= C/r + chain/r^2  <=>  m r^2 >= C r + chain
    let r2 = r * r;
    let inner_m = (ceil_div(c * r + spec.chain(), r2), (d * r - spec.chain()).div_euclid(r2));
    let stray: Vec<i64> = set
        .iter()
        .copied()
        .filter(|x| x % r != 0 || x / r < outer_m.0 || x / r > outer_m.1)
        .collect();
    let members: HashSet<i64> = set.iter().copied().collect();
    let missing: Vec<i64> = (inner_m.0..=inner_m.1)
        .map(|m| m * r)
        .filter(|x| !members.contains(x))
        .collect();
    Ok(InclusionReport {
        outer_ok: stray.is_empty(),
        inner_ok: missing.is_empty(),
        inner_m,
        outer_m,
        stray,
        missing,
    })
}

/// `prod_{i<d} N_i + 3 prod_{i<d-1} N_i + 1`; 3 when `d = 1` (three gap theorem).
pub fn chevallier_bound(n: &[u64]) -> u128 {
    let d = n.len();
    if d <= 1 {
        return 3;
    }
    let p1: u128 = n[..d - 1].iter().map(|x| *x as u128).product();
    let p2: u128 = n[..d - 2].iter().map(|x| *x as u128).product();
    p1 + 3 * p2 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzTrial {
    pub seed: u64,
    pub kind: String,
    pub alpha: Vec<f64>,
    pub n: Vec<u64>,
    #[serde(rename = "G")]
    pub g: usize,
    pub bound: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub trials: Vec<FuzzTrial>,
    pub violations: usize,
}

fn random_q(rng: &mut ChaCha8Rng, max_den: i128) -> Q {
    let den = rng.gen_range(1..=max_den);
    Q::new(rng.gen_range(0..den), den)
}

fn fuzz_alpha(d: usize, seed: u64) -> Result<(String, Alpha)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match rng.gen_range(0..10) {
        0..=4 => Ok(("random".into(), Alpha::random(d, rng.gen())?)),
        5..=8 => {
            let beta = ExactReal::sqrt([2, 3, 5, 6, 7, 10, 11][rng.gen_range(0..7)]);
            let r: Vec<Q> = (0..d)
                .map(|_| {
                    let x = random_q(&mut rng, 7);
                    if x == Q::from_integer(0) {
                        Q::new(1, 2)
                    } else {
                        x
                    }
                })
                .collect();
            let s = (0..d).map(|_| random_q(&mut rng, 6)).collect();
            Ok(("rational_beta".into(), Alpha::rational_beta(beta, r, s)?))
        }
        _ => Ok((
            "rational".into(),
            Alpha::rational((0..d).map(|_| random_q(&mut rng, 13)).collect())?,
        )),
    }
}

/// `trials` seeded draws of `alpha` (random, rational-beta or rational) and a
/// box `[0, N_1) x .. x [0, N_d)`; counts `G > chevallier_bound(N)`.
pub fn chevallier_fuzz(trials: usize, dims: &[usize], n_max: u64, seed: u64, budget: Budget) -> Result<FuzzReport> {
    if dims.is_empty() || n_max == 0 {
        return Err(Error::InvalidArgument("empty dimension range or N_max".into()));
    }
    let out: Vec<FuzzTrial> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let ts = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i);
            let mut rng = ChaCha8Rng::seed_from_u64(ts);
            let d = dims[rng.gen_range(0..dims.len())];
            let n: Vec<u64> = (0..d).map(|_| rng.gen_range(1..=n_max)).collect();
            let (kind, alpha) = fuzz_alpha(d, rng.gen())?;
            let ints: Vec<i64> = n.iter().map(|x| *x as i64).collect();
            let rec = gap_count(&alpha, &ConvexBody::unit_cube(d)?, &DiagDilation::from_ints(&ints)?, budget)?;
            Ok(FuzzTrial {
                seed: ts,
                kind,
                alpha: alpha.to_f64(),
                bound: chevallier_bound(&n),
                n,
                g: rec.g,
            })
        })
        .collect::<Result<_>>()?;
    let violations = out.iter().filter(|t| t.g as u128 > t.bound).count();
    Ok(FuzzReport { trials: out, violations })
}

/// `M_i = A_i Q + R_i` with `A_i >= 0`, `1 <= R_i <= Q`, for
/// `Q alpha_i - B_i delta in Z` and primitive `B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DecompositionSpec {
    pub q: i64,
    pub b: Vec<i64>,
    pub m: Vec<i64>,
    pub a: Vec<i64>,
    pub r: Vec<i64>,
}

/// Smallest `Q` for the relation carried by `alpha`, and the primitive `B`.
pub fn minimal_relation(alpha: &Alpha) -> Result<(i64, Vec<i64>)> {
    match alpha.relation() {
        RelationSpec::RationalBeta { b, s, .. } => {
            let q = s.iter().fold(1i128, |l, x| l.lcm(x.denom()));
            Ok((q as i64, b.clone()))
        }
        RelationSpec::GenericIndependent(_) => Err(Error::Unsupported("alpha has no rational relation".into())),
    }
}

impl DecompositionSpec {
    /// `q = None` takes the smallest admissible `Q`; any multiple of it is accepted.
    pub fn new(alpha: &Alpha, m: Vec<i64>, q: Option<i64>) -> Result<Self> {
        let (qmin, b) = minimal_relation(alpha)?;
        let q = q.unwrap_or(qmin);
        if q <= 0 || q % qmin != 0 {
            return Err(Error::InvalidArgument(format!("Q = {q} is not a multiple of {qmin}")));
        }
        if m.len() != b.len() || m.iter().any(|x| *x <= 0) {
            return Err(Error::InvalidArgument("M must be positive with one entry per coordinate".into()));
        }
        let a: Vec<i64> = m.iter().map(|mi| (mi - 1).div_euclid(q)).collect();
        let r = m.iter().zip(&a).map(|(mi, ai)| mi - ai * q).collect();
        Ok(DecompositionSpec { q, b, m, a, r })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `sum_{i<d} B_i B_{i+1}`.
    pub fn chain(&self) -> i64 {
        self.b.windows(2).map(|w| w[0] * w[1]).sum()
    }

    /// `min A_i > max B_j`.
    pub fn bulk_applies(&self) -> bool {
        self.a.iter().min() > self.b.iter().max()
    }

    /// `(2 sum B_i B_{i+1} + sum B_i) Q^d`: every `(m, r)` pair in the two
    /// leftover `m`-windows.
    pub fn leftover_constant(&self) -> u128 {
        let bsum: i64 = self.b.iter().sum();
        (2 * self.chain() + bsum) as u128 * (self.q as u128).pow(self.dim() as u32)
    }

    /// `Q^d + 3 Q^{d-1} + 1 + 2 C(B, Q)`.
    pub fn gap_bound(&self) -> u128 {
        let q = self.q as u128;
        let d = self.dim() as u32;
        q.pow(d) + 3 * q.pow(d - 1) + 1 + 2 * self.leftover_constant()
    }

    /// `D_I = sum_{i in I} A_i B_i + sum_{i not in I} (A_i - 1) B_i`.
    pub fn d_of(&self, mask: u32) -> i64 {
        (0..self.dim())
            .map(|i| if mask >> i & 1 == 1 { self.a[i] * self.b[i] } else { (self.a[i] - 1) * self.b[i] })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetPiece {
    /// Bit `i` set when `i` is in the index set.
    pub mask: u32,
    /// `A_I`.
    pub coefficients: Vec<i64>,
    /// Inclusive range of each `r_i`.
    pub r_ranges: Vec<(i64, i64)>,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub spec: DecompositionSpec,
    pub pieces: Vec<SubsetPiece>,
    /// Inclusive `m`-window of the bulk set; empty when the first exceeds the second.
    pub bulk_m: (i64, i64),
    pub bulk_applies: bool,
    pub direct_size: usize,
    pub bulk_size: usize,
    pub leftover_size: usize,
    pub leftover_constant: u128,
    /// Union of pieces equals the direct point set.
    pub union_ok: bool,
    /// Bulk set lies inside the direct point set.
    pub bulk_ok: bool,
    /// Coordinates reflected to make every `B_i` positive.
    pub reflected: Vec<usize>,
}

/// Splits `{ n . alpha mod 1 : 1 <= n_i <= M_i }` (a rotation of
/// `S(alpha, [0, M_1) x .. x [0, M_d))`) into the pieces `S_I`, then into the
/// bulk `S'` and the leftovers `S''`, checking every identity exactly.
pub fn decompose_s(alpha: &Alpha, spec: &DecompositionSpec, budget: Budget) -> Result<Decomposition> {
    let d = spec.dim();
    if alpha.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: alpha.dim() });
    }
    budget.check("decomposition", spec.m.iter().map(|x| *x as u128).product())?;
    // negative B_i: alpha_i -> -alpha_i maps the point set to a rotation of itself
    let reflected: Vec<usize> = (0..d).filter(|i| spec.b[*i] < 0).collect();
    let sign: Vec<i64> = (0..d).map(|i| if spec.b[i] < 0 { -1 } else { 1 }).collect();
    let b: Vec<i64> = spec.b.iter().map(|x| x.abs()).collect();
    let mut spec = spec.clone();
    spec.b = b.clone();

    // Q alpha_i = B_i delta mod 1 and sum u_i B_i = 1 give delta = sum u_i Q alpha_i mod 1
    let u = bezout(&b)?;
    let q = spec.q;
    let key = |m: i64, r: &[i64]| -> Result<Key> {
        let c: Vec<i64> = (0..d).map(|i| sign[i] * (m * u[i] * q + r[i])).collect();
        Ok(alpha.frac(&c)?.key().clone())
    };

    let mut direct: HashSet<Key> = HashSet::new();
    for_each_box(&vec![1; d], &spec.m, &mut |n| {
        let c: Vec<i64> = (0..d).map(|i| sign[i] * n[i]).collect();
        direct.insert(alpha.frac(&c)?.key().clone());
        Ok(())
    })?;

    let mut union: HashSet<Key> = HashSet::new();
    let mut pieces = Vec::new();
    for mask in 0..(1u32 << d) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let empty = (0..d).any(|i| !inside(i) && spec.a[i] == 0);
        let base: i64 = (0..d).filter(|i| inside(*i)).map(|i| spec.a[i] * b[i]).sum();
        let coefficients: Vec<i64> = if empty {
            Vec::new()
        } else {
            let mut acc = BTreeSet::from([base]);
            for i in (0..d).filter(|i| !inside(*i)) {
                let (ai, bi) = (spec.a[i], b[i]);
                acc = acc.iter().flat_map(|s| (0..ai).map(move |a| s + a * bi)).collect();
            }
            acc.into_iter().collect()
        };
        let r_ranges: Vec<(i64, i64)> = (0..d).map(|i| (1, if inside(i) { spec.r[i] } else { q })).collect();
        let mut piece: HashSet<Key> = HashSet::new();
        let lo: Vec<i64> = r_ranges.iter().map(|x| x.0).collect();
        let hi: Vec<i64> = r_ranges.iter().map(|x| x.1).collect();
        for m in &coefficients {
            for_each_box(&lo, &hi, &mut |r| {
                piece.insert(key(*m, r)?);
                Ok(())
            })?;
        }
        pieces.push(SubsetPiece {
            mask,
            coefficients,
            r_ranges,
            size: piece.len(),
        });
        union.extend(piece);
    }

    let chain = spec.chain();
    let bulk_applies = spec.bulk_applies();
    let bulk_m = if bulk_applies { (chain, spec.d_of(0) - chain) } else { (0, -1) };
    let mut bulk: HashSet<Key> = HashSet::new();
    for m in bulk_m.0..=bulk_m.1 {
        for_each_box(&vec![1; d], &vec![q; d], &mut |r| {
            bulk.insert(key(m, r)?);
            Ok(())
        })?;
    }
    let bulk_ok = bulk.is_subset(&direct);
    let leftover_size = direct.difference(&bulk).count();
    Ok(Decomposition {
        leftover_constant: spec.leftover_constant(),
        spec,
        pieces,
        bulk_m,
        bulk_applies,
        direct_size: direct.len(),
        bulk_size: bulk.len(),
        leftover_size,
        union_ok: union == direct,
        bulk_ok,
        reflected,
    })
}

/// Ceiling division for a positive divisor.
fn ceil_div(a: i64, b: i64) -> i64 {
    -(-a).div_euclid(b)
}

fn bezout(b: &[i64]) -> Result<Vec<i64>> {
    let mut u = vec![0i64; b.len()];
    let mut g = 0i64;
    for (i, bi) in b.iter().enumerate() {
        if g == 0 {
            g = *bi;
            u[i] = 1;
            continue;
        }
        let e = g.extended_gcd(bi);
        for x in u.iter_mut().take(i) {
            *x *= e.x;
        }
        u[i] = e.y;
        g = e.gcd;
    }
    if g != 1 {
        return Err(Error::InvalidArgument(format!("B is not primitive (gcd {g})")));
    }
    Ok(u)
}

fn for_each_box(lo: &[i64], hi: &[i64], f: &mut dyn FnMut(&[i64]) -> Result<()>) -> Result<()> {
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return Ok(());
    }
    let mut x = lo.to_vec();
    loop {
        f(&x)?;
        let mut i = 0;
        loop {
            if i == x.len() {
                return Ok(());
            }
            x[i] += 1;
            if x[i] <= hi[i] {
                break;
            }
            x[i] = lo[i];
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sumset_small() {
        let s = SumsetSpec::new(vec![4, 6], vec![0, 0], vec![6, 6]).unwrap();
        assert_eq!(s.r(), 2);
        let rep = inclusion_check(&s, Budget::default()).unwrap();
        assert_eq!(rep.inner_m, (6, 24));
        assert!(rep.outer_ok && rep.inner_ok);
        let ones = SumsetSpec::new(vec![1, 1], vec![0, 2], vec![3, 5]).unwrap();
        assert_eq!(sumset(&ones, Budget::default()).unwrap(), (2..=8).collect::<Vec<_>>());
        assert!(SumsetSpec::new(vec![4, 6], vec![0, 0], vec![5, 6]).is_err());
    }

    #[test]
    fn bounds() {
        assert_eq!(chevallier_bound(&[7, 5]), 11);
        assert_eq!(chevallier_bound(&[2, 3, 4]), 13);
        assert_eq!(chevallier_bound(&[9]), 3);
    }

    #[test]
    fn bezout_identity() {
        let b = vec![6, 10, 15];
        let u = bezout(&b).unwrap();
        assert_eq!(u.iter().zip(&b).map(|(u, b)| u * b).sum::<i64>(), 1);
    }

    #[test]
    fn decomposition_example() {
        let alpha = Alpha::rational_beta(ExactReal::sqrt(2), vec![Q::new(2, 6), Q::new(3, 6)], vec![Q::new(1, 6), Q::new(0, 1)]).unwrap();
        let spec = DecompositionSpec::new(&alpha, vec![50, 40], Some(6)).unwrap();
        assert_eq!((spec.a.clone(), spec.r.clone()), (vec![8, 6], vec![2, 4]));
        let dec = decompose_s(&alpha, &spec, Budget::default()).unwrap();
        assert!(dec.union_ok && dec.bulk_ok && dec.bulk_applies);
        assert!(dec.direct_size < 2000 && dec.bulk_size <= dec.direct_size);
        assert!((dec.leftover_size as u128) <= dec.leftover_constant);
    }

    #[test]
    fn fuzz_smoke() {
        let rep = chevallier_fuzz(20, &[2, 3], 6, 1, Budget::default()).unwrap();
        assert_eq!(rep.violations, 0);
        assert_eq!(rep.trials.len(), 20);
    }
}
