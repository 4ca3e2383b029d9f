//! Unimodular lattices `Z^{d+1} M`, lattice-point enumeration and the
//! first-hit function `F(M, t) = min { y > 0 : (x, y) in Z^{d+1} M, x + t in D }`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde_json::{json, Value};
use smallvec::SmallVec;

use crate::circleset::{Alpha, AlphaForm, MAX_PRECISION};
use crate::error::{Budget, Error, Result};
use crate::geometry::{orthonormal_complement, q_to_f64, ConvexBody, DiagDilation, Shape};
use crate::reals::Q;

/// Largest `Y` tried by the doubling search in `F`.
pub const F_CEILING_CAP: f64 = (1u64 << 40) as f64;
/// Distance below which a lattice point counts as touching a boundary.
pub const CLEARANCE_EPS: f64 = 1e-9;
const DET_TOL: f64 = 1e-12;
/// Relative float error assumed per accumulated term.
const REL_ERR: f64 = 1e-14;

/// Exact rows: entries are rational linear forms in `alpha`.
#[derive(Debug, Clone)]
pub struct ExactRows {
    pub forms: Vec<Vec<AlphaForm>>,
    pub alpha: Arc<Alpha>,
}

#[derive(Debug, Clone)]
pub struct LatticeBasis {
    rows: DMatrix<f64>,
    exact: Option<ExactRows>,
    /// Rational rows accurate enough for reduction when `rows` loses bits.
    hp: Option<Vec<Vec<BigRational>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetCertificate {
    /// Symbolic determinant is the constant polynomial 1.
    Exact,
    Numeric { det: f64 },
}

fn q_inverse(b: &[Vec<Q>]) -> Result<(Vec<Vec<Q>>, Q)> {
    let n = b.len();
    if b.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let mut a: Vec<Vec<Q>> = b.to_vec();
    let mut inv: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect())
        .collect();
    let mut det = Q::one();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).ok_or(Error::Singular)?;
        if p != c {
            a.swap(p, c);
            inv.swap(p, c);
            det = -det;
        }
        let piv = a[c][c];
        det *= piv;
        for j in 0..n {
            a[c][j] /= piv;
            inv[c][j] /= piv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c];
                for j in 0..n {
                    let (ac, ic) = (a[c][j], inv[c][j]);
                    a[r][j] -= f * ac;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    Ok((inv, det))
}

fn diag_q(t: &DiagDilation) -> Vec<Vec<Q>> {
    let d = t.dim();
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { t.factors()[i] } else { Q::zero() }).collect())
        .collect()
}

fn big_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

type Poly = HashMap<SmallVec<[u8; 4]>, Q>;

fn poly_of_form(f: &AlphaForm) -> Poly {
    let d = f.dim();
    let mut p = Poly::new();
    for (i, c) in f.c.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut e: SmallVec<[u8; 4]> = SmallVec::from_elem(0, d);
        if i > 0 {
            e[i - 1] = 1;
        }
        p.insert(e, *c);
    }
    p
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: SmallVec<[u8; 4]> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            *out.entry(e).or_insert_with(Q::zero) += *ca * *cb;
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(Vec::new(), true)];
    }
    let mut out = Vec::new();
    for (p, even) in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            // inserting at pos moves n-1 past (n-1-pos) elements
            let parity = (n - 1 - pos) % 2 == 0;
            out.push((q, even == parity));
        }
    }
    out
}

impl LatticeBasis {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("basis must be square, size >= 2".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        if m.determinant() == 0.0 {
            return Err(Error::Singular);
        }
        Ok(LatticeBasis {
            rows: m,
            exact: None,
            hp: None,
        })
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.determinant() == 0.0 {
            return Err(Error::Singular);
        }
        Ok(LatticeBasis {
            rows: m,
            exact: None,
            hp: None,
        })
    }

    /// Exact basis from rational-form rows.
    pub fn from_forms(forms: Vec<Vec<AlphaForm>>, alpha: Arc<Alpha>) -> Result<Self> {
        let n = forms.len();
        if n < 2 || forms.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("basis must be square, size >= 2".into()));
        }
        let m = DMatrix::from_fn(n, n, |i, j| alpha.form_to_f64(&forms[i][j]));
        let hp = {
            let comps: Vec<BigRational> = alpha
                .components()
                .iter()
                .map(|c| BigRational::new(c.approx(256), BigInt::one() << 256usize))
                .collect();
            forms
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|f| {
                            let q = |q: &Q| BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()));
                            let mut v = q(&f.c[0]);
                            for (c, a) in f.c[1..].iter().zip(&comps) {
                                if !c.is_zero() {
                                    v += q(c) * a;
                                }
                            }
                            v
                        })
                        .collect()
                })
                .collect()
        };
        Ok(LatticeBasis {
            rows: m,
            exact: Some(ExactRows { forms, alpha }),
            hp: Some(hp),
        })
    }

    pub fn identity(n: usize) -> Self {
        let alpha = Arc::new(Alpha::rational(vec![Q::zero()]).expect("zero vector"));
        let forms = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| AlphaForm::constant(if i == j { Q::one() } else { Q::zero() }, 1))
                    .collect()
            })
            .collect();
        Self::from_forms(forms, alpha).expect("identity is a basis")
    }

    pub fn with_hp_rows(mut self, hp: Vec<Vec<BigRational>>) -> Self {
        self.hp = Some(hp);
        self
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }

    pub fn exact(&self) -> Option<&ExactRows> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn det(&self) -> f64 {
        self.rows.determinant()
    }

    pub fn det_certificate(&self) -> Result<DetCertificate> {
        if let Some(ex) = &self.exact {
            let n = ex.forms.len();
            let mut total = Poly::new();
            for (perm, even) in permutations(n) {
                let mut term = poly_of_form(&AlphaForm::constant(Q::one(), ex.alpha.dim()));
                for (i, j) in perm.iter().enumerate() {
                    term = poly_mul(&term, &poly_of_form(&ex.forms[i][*j]));
                    if term.is_empty() {
                        break;
                    }
                }
                for (e, c) in term {
                    *total.entry(e).or_insert_with(Q::zero) += if even { c } else { -c };
                }
            }
            total.retain(|_, c| !c.is_zero());
            let one: SmallVec<[u8; 4]> = SmallVec::from_elem(0, ex.alpha.dim());
            return if total.len() == 1 && total.get(&one) == Some(&Q::one()) {
                Ok(DetCertificate::Exact)
            } else {
                Err(Error::Certification(format!("symbolic determinant is not 1: {total:?}")))
            };
        }
        let det = self.det();
        if (det - 1.0).abs() <= DET_TOL {
            Ok(DetCertificate::Numeric { det })
        } else {
            Err(Error::Certification(format!("|det - 1| = {:e}", (det - 1.0).abs())))
        }
    }

    /// `U M` for an integer matrix `U` with determinant `+-1`.
    pub fn left_mul_int(&self, u: &[Vec<i64>]) -> Result<Self> {
        let n = self.n();
        if u.len() != n || u.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        let uq: Vec<Vec<Q>> = u
            .iter()
            .map(|r| r.iter().map(|x| Q::from_integer(*x as i128)).collect())
            .collect();
        let (_, det) = q_inverse(&uq)?;
        if det.abs() != Q::one() {
            return Err(Error::InvalidArgument("matrix is not unimodular".into()));
        }
        let uf = DMatrix::from_fn(n, n, |i, j| u[i][j] as f64);
        let exact = self.exact.as_ref().map(|ex| {
            let d = ex.alpha.dim();
            let forms = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut f = AlphaForm::zero(d);
                            for (k, row) in ex.forms.iter().enumerate() {
                                f.add_scaled(&row[j], u[i][k]);
                            }
                            f
                        })
                        .collect()
                })
                .collect();
            ExactRows {
                forms,
                alpha: ex.alpha.clone(),
            }
        });
        let hp = self.hp.as_ref().map(|h| {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n)
                                .map(|k| BigRational::from_integer(BigInt::from(u[i][k])) * &h[k][j])
                                .sum()
                        })
                        .collect()
                })
                .collect()
        });
        let rows = match &exact {
            Some(ex) => DMatrix::from_fn(n, n, |i, j| ex.alpha.form_to_f64(&ex.forms[i][j])),
            None => &uf * &self.rows,
        };
        Ok(LatticeBasis { rows, exact, hp })
    }

    /// `M G` for a real matrix `G` (exactness is dropped).
    pub fn right_mul(&self, g: &DMatrix<f64>) -> Self {
        let hp = self.hp.as_ref().map(|h| {
            let n = self.n();
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| (0..n).map(|k| &h[i][k] * big_from_f64(g[(k, j)])).sum())
                        .collect()
                })
                .collect()
        });
        LatticeBasis {
            rows: &self.rows * g,
            exact: None,
            hp,
        }
    }

    pub fn transpose_inverse(&self) -> Result<Self> {
        let inv = self.rows.clone().try_inverse().ok_or(Error::Singular)?;
        Self::from_matrix(inv.transpose())
    }

    pub fn to_json(&self) -> Value {
        let n = self.n();
        match &self.exact {
            Some(ex) => json!({
                "mode": "rational",
                "rows": (0..n).map(|i| (0..n).map(|j| {
                    ex.forms[i][j].c.iter().map(|q| q.to_string()).collect::<Vec<_>>()
                }).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            None => json!({
                "mode": "float64",
                "rows": (0..n).map(|i| self.row(i)).collect::<Vec<_>>(),
            }),
        }
    }

    /// `z M` in floating point.
    pub fn point(&self, z: &[i64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|c| (0..n).map(|k| z[k] as f64 * self.rows[(k, c)]).sum())
            .collect()
    }

    fn point_err(&self, z: &[i64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|c| {
                REL_ERR * (0..n).map(|k| (z[k] as f64 * self.rows[(k, c)]).abs()).sum::<f64>() + 1e-300
            })
            .collect()
    }

    /// `z M` as exact forms.
    pub fn point_forms(&self, z: &[i64]) -> Option<Vec<AlphaForm>> {
        let ex = self.exact.as_ref()?;
        let n = self.n();
        Some(
            (0..n)
                .map(|c| {
                    let mut f = AlphaForm::zero(ex.alpha.dim());
                    for (k, row) in ex.forms.iter().enumerate() {
                        f.add_scaled(&row[c], z[k]);
                    }
                    f
                })
                .collect(),
        )
    }
}

/// `A_B = [[1, alpha^t], [0, 1]] diag(B^{-1}, det B)`.
pub fn steinhaus_basis(alpha: Arc<Alpha>, b: &[Vec<Q>]) -> Result<LatticeBasis> {
    let d = alpha.dim();
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.len(),
        });
    }
    let (binv, det) = q_inverse(b)?;
    if !det.is_positive() {
        return Err(Error::InvalidArgument("det B must be positive".into()));
    }
    let mut forms = Vec::with_capacity(d + 1);
    for i in 0..d {
        let mut row: Vec<AlphaForm> = (0..d).map(|j| AlphaForm::constant(binv[i][j], d)).collect();
        row.push(AlphaForm::alpha(i, det, d));
        forms.push(row);
    }
    let mut last: Vec<AlphaForm> = (0..d).map(|_| AlphaForm::zero(d)).collect();
    last.push(AlphaForm::constant(det, d));
    forms.push(last);
    LatticeBasis::from_forms(forms, alpha)
}

pub fn steinhaus_basis_diag(alpha: Arc<Alpha>, t: &DiagDilation) -> Result<LatticeBasis> {
    steinhaus_basis(alpha, &diag_q(t))
}

/// `A~_B = [[1, 0], [alpha, 1]] diag(B^{-1}, det B)`.
pub fn slater_basis(alpha: Arc<Alpha>, b: &[Vec<Q>]) -> Result<LatticeBasis> {
    let d = alpha.dim();
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: b.len(),
        });
    }
    let (binv, det) = q_inverse(b)?;
    if !det.is_positive() {
        return Err(Error::InvalidArgument("det B must be positive".into()));
    }
    let mut forms = Vec::with_capacity(d + 1);
    for row_b in binv.iter().take(d) {
        let mut row: Vec<AlphaForm> = row_b.iter().map(|x| AlphaForm::constant(*x, d)).collect();
        row.push(AlphaForm::zero(d));
        forms.push(row);
    }
    let mut last: Vec<AlphaForm> = (0..d)
        .map(|j| {
            let mut f = AlphaForm::zero(d);
            for (k, row_b) in binv.iter().enumerate() {
                f = f.add(&AlphaForm::alpha(k, row_b[j], d));
            }
            f
        })
        .collect();
    last.push(AlphaForm::constant(det, d));
    forms.push(last);
    LatticeBasis::from_forms(forms, alpha)
}

pub fn slater_basis_diag(alpha: Arc<Alpha>, t: &DiagDilation) -> Result<LatticeBasis> {
    slater_basis(alpha, &diag_q(t))
}

/// `Phi^s = diag(e^{-s}, .., e^{-s}, e^{ds})`.
pub fn diag_flow(s: f64, d: usize) -> LatticeBasis {
    let n = d + 1;
    let m = DMatrix::from_fn(n, n, |i, j| match (i == j, i == d) {
        (false, _) => 0.0,
        (true, false) => (-s).exp(),
        (true, true) => (d as f64 * s).exp(),
    });
    LatticeBasis {
        rows: m,
        exact: None,
        hp: None,
    }
}

/// `D(theta) = diag(theta, .., theta, theta^{-d})`.
pub fn dtheta(theta: f64, d: usize) -> Result<LatticeBasis> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument("theta must be positive".into()));
    }
    let n = d + 1;
    let m = DMatrix::from_fn(n, n, |i, j| match (i == j, i == d) {
        (false, _) => 0.0,
        (true, false) => theta,
        (true, true) => theta.powi(-(d as i32)),
    });
    Ok(LatticeBasis {
        rows: m,
        exact: None,
        hp: None,
    })
}

/// Data of the explicit lattice with `F(M_eps, t_m) = m eps`.
#[derive(Debug, Clone)]
pub struct PropositionContext {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub ortho: Vec<Vec<f64>>,
    pub eps: f64,
    /// `(eps lambda)^{-1/(d-1)}`.
    pub scale: f64,
    pub sign_flipped: bool,
}

impl PropositionContext {
    /// Number of targets `t_m`, i.e. `floor(lambda / eps)`.
    pub fn m_max(&self) -> usize {
        (self.lambda / self.eps + 1e-9).floor() as usize
    }

    /// `t_m = t'_m + (eps / 4) u` where `[t'_m, t'_m + l u]` is a chord of
    /// length `l = lambda - eps m + eps / 2`.
    pub fn target(&self, body: &ConvexBody, m: usize) -> Result<Vec<f64>> {
        let l = self.lambda - self.eps * m as f64 + self.eps / 2.0;
        let anchor = body.chord_anchor(&self.u, l)?;
        Ok(anchor
            .iter()
            .zip(&self.u)
            .map(|(a, u)| a + self.eps / 4.0 * u)
            .collect())
    }
}

pub fn proposition_basis(body: &ConvexBody, eps: f64) -> Result<(LatticeBasis, PropositionContext)> {
    let d = body.dim();
    if d < 2 {
        return Err(Error::Unsupported("the explicit construction needs d >= 2".into()));
    }
    let info = body.direction_and_length()?;
    let (u, lambda) = (info.u, info.lambda);
    if !(eps > 0.0) || eps > lambda {
        return Err(Error::InvalidArgument(format!("eps = {eps} outside (0, lambda = {lambda}]")));
    }
    let scale = (eps * lambda).powf(-1.0 / (d as f64 - 1.0));
    let diam = 2.0 * body.difference_body()?.max_norm();
    if scale <= diam {
        return Err(Error::InvalidArgument(format!(
            "eps too large: (eps lambda)^(-1/(d-1)) = {scale} <= diam = {diam}"
        )));
    }
    let ortho = orthonormal_complement(&u);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    rows.push(u.iter().map(|c| eps * c).chain([-eps]).collect());
    rows.push(u.iter().map(|c| lambda * c).chain([0.0]).collect());
    for w in &ortho {
        rows.push(w.iter().map(|c| scale * c).chain([0.0]).collect());
    }
    let mut basis = LatticeBasis::from_rows(rows)?;
    let sign_flipped = basis.det() < 0.0;
    if sign_flipped {
        let n = basis.n();
        for j in 0..n {
            basis.rows[(n - 1, j)] = -basis.rows[(n - 1, j)];
        }
    }
    Ok((
        basis,
        PropositionContext {
            u,
            lambda,
            ortho,
            eps,
            scale,
            sign_flipped,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Structure {
    Upper,
    Lower,
    General,
}

fn structure(m: &DMatrix<f64>) -> Structure {
    let n = m.nrows();
    let upper = (0..n).all(|k| (0..k).all(|c| m[(k, c)] == 0.0));
    let lower = (0..n).all(|k| (k + 1..n).all(|c| m[(k, c)] == 0.0));
    match (upper, lower) {
        (true, _) => Structure::Upper,
        (_, true) => Structure::Lower,
        _ => Structure::General,
    }
}

fn int_range(a: f64, b: f64) -> Option<(i64, i64)> {
    let slack = 1e-9 * (1.0 + a.abs().max(b.abs()));
    let lo = (a - slack).ceil();
    let hi = (b + slack).floor();
    if !(lo.is_finite() && hi.is_finite()) || lo.abs() > 9e15 || hi.abs() > 9e15 {
        return None;
    }
    (lo <= hi).then_some((lo as i64, hi as i64))
}

/// Calls `f(z, zM)` for every integer `z` with `zM` in the closed box `[lo, hi]`.
fn enumerate_box(
    m: &DMatrix<f64>,
    lo: &[f64],
    hi: &[f64],
    budget: Budget,
    f: &mut dyn FnMut(&[i64], &[f64]) -> Result<()>,
) -> Result<()> {
    let n = m.nrows();
    let mut visited: u128 = 0;
    match structure(m) {
        st @ (Structure::Upper | Structure::Lower) => {
            // coordinate c is determined by z_c and the already fixed coordinates
            let order: Vec<usize> = if st == Structure::Upper {
                (0..n).collect()
            } else {
                (0..n).rev().collect()
            };
            let mut z = vec![0i64; n];
            let mut p = vec![0.0; n];
            #[allow(clippy::too_many_arguments)]
            fn rec(
                level: usize,
                order: &[usize],
                m: &DMatrix<f64>,
                lo: &[f64],
                hi: &[f64],
                z: &mut [i64],
                p: &mut [f64],
                visited: &mut u128,
                budget: Budget,
                f: &mut dyn FnMut(&[i64], &[f64]) -> Result<()>,
            ) -> Result<()> {
                let n = order.len();
                if level == n {
                    return f(z, p);
                }
                let c = order[level];
                let s: f64 = order[..level].iter().map(|&k| z[k] as f64 * m[(k, c)]).sum();
                let piv = m[(c, c)];
                let (a, b) = ((lo[c] - s) / piv, (hi[c] - s) / piv);
                let Some((zlo, zhi)) = int_range(a.min(b), a.max(b)) else {
                    return Ok(());
                };
                *visited += (zhi - zlo + 1) as u128;
                budget.check("lattice enumeration", *visited)?;
                for zc in zlo..=zhi {
                    z[c] = zc;
                    if level + 1 == n {
                        for (j, pj) in p.iter_mut().enumerate() {
                            *pj = (0..n).map(|k| z[k] as f64 * m[(k, j)]).sum();
                        }
                    }
                    rec(level + 1, order, m, lo, hi, z, p, visited, budget, f)?;
                }
                z[c] = 0;
                Ok(())
            }
            rec(0, &order, m, lo, hi, &mut z, &mut p, &mut visited, budget, f)
        }
        Structure::General => {
            let inv = m.clone().try_inverse().ok_or(Error::Singular)?;
            let mut ranges = Vec::with_capacity(n);
            let mut total: u128 = 1;
            for j in 0..n {
                let (mut a, mut b) = (0.0, 0.0);
                for c in 0..n {
                    let (x, y) = (lo[c] * inv[(c, j)], hi[c] * inv[(c, j)]);
                    a += x.min(y);
                    b += x.max(y);
                }
                let Some(r) = int_range(a, b) else {
                    return Ok(());
                };
                total = total.saturating_mul((r.1 - r.0 + 1) as u128);
                ranges.push(r);
            }
            budget.check("lattice enumeration", total)?;
            let mut z: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            let mut p = vec![0.0; n];
            loop {
                for (j, pj) in p.iter_mut().enumerate() {
                    *pj = (0..n).map(|k| z[k] as f64 * m[(k, j)]).sum();
                }
                let slack = |c: usize| 1e-9 * (1.0 + lo[c].abs().max(hi[c].abs()));
                if (0..n).all(|c| p[c] >= lo[c] - slack(c) && p[c] <= hi[c] + slack(c)) {
                    f(&z, &p)?;
                }
                let mut i = n;
                loop {
                    if i == 0 {
                        return Ok(());
                    }
                    i -= 1;
                    if z[i] < ranges[i].1 {
                        z[i] += 1;
                        break;
                    }
                    z[i] = ranges[i].0;
                }
            }
        }
    }
}

fn pad(lo: &mut [f64], hi: &mut [f64]) {
    for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
        let p = 1e-9 * (1.0 + l.abs().max(h.abs()));
        *l -= p;
        *h += p;
    }
}

/// `{ (x, y) : x + shift in body, y in the interval }`.
#[derive(Debug, Clone)]
pub struct Region {
    pub body: ConvexBody,
    pub shift: Vec<f64>,
    pub y_lo: f64,
    pub y_lo_closed: bool,
    pub y_hi: f64,
    pub y_hi_closed: bool,
}

impl Region {
    /// `body x (y_lo, y_hi]`.
    pub fn new(body: ConvexBody, y_lo: f64, y_hi: f64) -> Self {
        let d = body.dim();
        Region {
            body,
            shift: vec![0.0; d],
            y_lo,
            y_lo_closed: false,
            y_hi,
            y_hi_closed: true,
        }
    }

    pub fn shifted(mut self, t: &[f64]) -> Self {
        self.shift = t.to_vec();
        self
    }

    fn contains(&self, p: &[f64]) -> bool {
        let d = self.body.dim();
        let y = p[d];
        let y_ok = (if self.y_lo_closed { y >= self.y_lo } else { y > self.y_lo })
            && (if self.y_hi_closed { y <= self.y_hi } else { y < self.y_hi });
        let x: Vec<f64> = p[..d].iter().zip(&self.shift).map(|(a, b)| a + b).collect();
        y_ok && self.body.contains_f64(&x)
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let (mut lo, mut hi) = self.body.bbox_f64();
        for i in 0..lo.len() {
            lo[i] -= self.shift[i];
            hi[i] -= self.shift[i];
        }
        lo.push(self.y_lo);
        hi.push(self.y_hi);
        pad(&mut lo, &mut hi);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint {
    pub z: Vec<i64>,
    pub p: Vec<f64>,
}

/// All points of `Z^{d+1} M` in the region, sorted by integer coordinates.
pub fn points_in_region(m: &LatticeBasis, region: &Region, budget: Budget) -> Result<Vec<LatticePoint>> {
    if region.body.dim() + 1 != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n() - 1,
            got: region.body.dim(),
        });
    }
    if !(region.y_lo <= region.y_hi) || !region.y_hi.is_finite() {
        return Err(Error::InvalidArgument("region must be bounded".into()));
    }
    let (lo, hi) = region.bounds();
    let mut out = Vec::new();
    enumerate_box(m.rows(), &lo, &hi, budget, &mut |z, p| {
        if region.contains(p) {
            out.push(LatticePoint {
                z: z.to_vec(),
                p: p.to_vec(),
            });
        }
        Ok(())
    })?;
    out.sort_by(|a, b| a.z.cmp(&b.z));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FValue {
    pub y: f64,
    /// All lattice vectors attaining the minimum.
    pub witnesses: Vec<Vec<i64>>,
}

fn check_target(body: &ConvexBody, m: &LatticeBasis, t_len: usize) -> Result<()> {
    if body.dim() + 1 != m.n() || t_len != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.n() - 1,
            got: t_len,
        });
    }
    Ok(())
}

/// `F(M, t)` in floating point; ties within rounding are all reported.
pub fn f_value(m: &LatticeBasis, body: &ConvexBody, t: &[f64], budget: Budget) -> Result<FValue> {
    check_target(body, m, t.len())?;
    if !body.interior_f64(t) {
        return Err(Error::NotInterior);
    }
    let d = body.dim();
    let mut ceiling = 1.0;
    loop {
        let region = Region::new(body.clone(), 0.0, ceiling).shifted(t);
        let (lo, hi) = region.bounds();
        let mut found: Vec<(f64, f64, Vec<i64>)> = Vec::new();
        enumerate_box(m.rows(), &lo, &hi, budget, &mut |z, p| {
            let err = m.point_err(z)[d];
            if p[d] > err {
                let x: Vec<f64> = p[..d].iter().zip(t).map(|(a, b)| a + b).collect();
                if body.contains_f64(&x) {
                    found.push((p[d], err, z.to_vec()));
                }
            }
            Ok(())
        })?;
        if let Some(min) = found.iter().map(|c| c.0).min_by(f64::total_cmp) {
            let emin = found.iter().filter(|c| c.0 == min).map(|c| c.1).fold(0.0, f64::max);
            let mut witnesses: Vec<Vec<i64>> = found
                .into_iter()
                .filter(|c| c.0 <= min + emin + c.1)
                .map(|c| c.2)
                .collect();
            witnesses.sort();
            return Ok(FValue { y: min, witnesses });
        }
        ceiling *= 2.0;
        if ceiling > F_CEILING_CAP {
            return Err(Error::Budget {
                what: "F ceiling",
                needed: ceiling as u128,
                cap: F_CEILING_CAP as u64,
            });
        }
    }
}

#[derive(Debug, Clone)]
pub struct FExact {
    pub y: AlphaForm,
    pub y_f64: f64,
    pub witnesses: Vec<Vec<i64>>,
}

fn rational_to_q(r: &BigRational) -> Option<Q> {
    Some(Q::new(r.numer().to_i128()?, r.denom().to_i128()?))
}

fn q_big(q: &Q) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

/// Exact membership of a point whose coordinates are forms in `alpha`.
pub fn body_contains_forms(alpha: &Alpha, body: &ConvexBody, xs: &[AlphaForm]) -> Result<bool> {
    let rat: Option<Vec<Q>> = xs
        .iter()
        .map(|f| alpha.form_rational(f).map(|r| r.as_ref().and_then(rational_to_q)))
        .collect::<Result<Option<Vec<_>>>>()?;
    if let Some(qs) = rat {
        return body.contains(&qs);
    }
    let d = body.dim();
    let le = |f: &AlphaForm, strict: bool| -> Result<bool> {
        let s = alpha.form_sign(f)?;
        Ok(if strict { s == Ordering::Less } else { s != Ordering::Greater })
    };
    match body.shape() {
        Shape::AxisBox {
            lo,
            hi,
            lo_closed,
            hi_closed,
        } => {
            for i in 0..d {
                let k = xs[i].dim();
                if !le(&AlphaForm::constant(lo[i], k).sub(&xs[i]), !lo_closed[i])? {
                    return Ok(false);
                }
                if !le(&xs[i].sub(&AlphaForm::constant(hi[i], k)), !hi_closed[i])? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Shape::Polytope { faces } => {
            for h in faces {
                let k = xs[0].dim();
                let mut f = AlphaForm::constant(-h.b, k);
                for (a, x) in h.a.iter().zip(xs) {
                    f = f.add(&x.scale(*a));
                }
                if !le(&f, h.strict)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Shape::Ball {
            center,
            radius,
            closed,
        } if d == 1 => {
            let k = xs[0].dim();
            let left = AlphaForm::constant(center[0] - *radius, k).sub(&xs[0]);
            let right = xs[0].sub(&AlphaForm::constant(center[0] + *radius, k));
            Ok(le(&left, !closed)? && le(&right, !closed)?)
        }
        Shape::Ball {
            center,
            radius,
            closed,
        } => {
            let r2 = q_big(radius) * q_big(radius);
            let mut prec = 128;
            loop {
                let (mut lo, mut hi) = (BigRational::zero(), BigRational::zero());
                for (x, c) in xs.iter().zip(center) {
                    let (a, b) = alpha.form_interval(x, prec)?;
                    let (a, b) = (a - q_big(c), b - q_big(c));
                    let (sa, sb) = (&a * &a, &b * &b);
                    let max = if sa > sb { sa.clone() } else { sb.clone() };
                    let min = if a.is_negative() && b.is_positive() {
                        BigRational::zero()
                    } else if sa < sb {
                        sa
                    } else {
                        sb
                    };
                    lo += min;
                    hi += max;
                }
                if hi < r2 {
                    return Ok(true);
                }
                if lo > r2 {
                    return Ok(false);
                }
                if lo == hi {
                    return Ok(*closed);
                }
                if prec >= MAX_PRECISION {
                    return Err(Error::Certification("ball membership undecided".into()));
                }
                prec *= 2;
            }
        }
    }
}

/// `F(M, t)` for an exact basis and rational `t`: the minimum is decided by
/// exact form comparison and every tied lattice vector is returned.
pub fn f_value_exact(m: &LatticeBasis, body: &ConvexBody, t: &[Q], budget: Budget) -> Result<FExact> {
    check_target(body, m, t.len())?;
    let ex = m
        .exact()
        .ok_or_else(|| Error::InvalidArgument("basis has no exact entries".into()))?;
    if !body.interior(t)? {
        return Err(Error::NotInterior);
    }
    let alpha = &ex.alpha;
    let k = alpha.dim();
    let d = body.dim();
    let tf: Vec<f64> = t.iter().map(q_to_f64).collect();
    let t_forms: Vec<AlphaForm> = t.iter().map(|q| AlphaForm::constant(*q, k)).collect();
    let mut ceiling = 1.0;
    loop {
        let region = Region::new(body.clone(), 0.0, ceiling).shifted(&tf);
        let (lo, hi) = region.bounds();
        let mut found: Vec<(f64, f64, Vec<i64>)> = Vec::new();
        let mut err: Option<Error> = None;
        enumerate_box(m.rows(), &lo, &hi, budget, &mut |z, p| {
            let e = m.point_err(z);
            let forms = || m.point_forms(z).expect("exact basis");
            let positive = if p[d] > e[d] {
                true
            } else if p[d] < -e[d] {
                false
            } else {
                alpha.form_sign(&forms()[d])? == Ordering::Greater
            };
            if !positive {
                return Ok(());
            }
            let x: Vec<f64> = p[..d].iter().zip(&tf).map(|(a, b)| a + b).collect();
            let ex_err = e[..d].iter().map(|v| v * v).sum::<f64>().sqrt()
                + tf.iter().map(|v| v.abs()).sum::<f64>() * 1e-15;
            let inside = if body.boundary_distance_f64(&x) > 4.0 * ex_err + 1e-13 {
                body.contains_f64(&x)
            } else {
                let f = forms();
                let xs: Vec<AlphaForm> = f[..d].iter().zip(&t_forms).map(|(a, b)| a.add(b)).collect();
                match body_contains_forms(alpha, body, &xs) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        false
                    }
                }
            };
            if inside {
                found.push((p[d], e[d], z.to_vec()));
            }
            Ok(())
        })?;
        if let Some(e) = err {
            return Err(e);
        }
        if !found.is_empty() {
            found.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (ymin, emin) = (found[0].0, found[0].1);
            let near: Vec<&(f64, f64, Vec<i64>)> =
                found.iter().filter(|c| c.0 <= ymin + 2.0 * (emin + c.1)).collect();
            let mut best: Option<(AlphaForm, Vec<Vec<i64>>)> = None;
            for c in near {
                let y = m.point_forms(&c.2).expect("exact basis")[d].clone();
                best = match best {
                    None => Some((y, vec![c.2.clone()])),
                    Some((by, mut bw)) => match alpha.form_cmp(&y, &by)? {
                        Ordering::Less => Some((y, vec![c.2.clone()])),
                        Ordering::Equal => {
                            bw.push(c.2.clone());
                            Some((by, bw))
                        }
                        Ordering::Greater => Some((by, bw)),
                    },
                };
            }
            let (y, mut witnesses) = best.expect("non-empty");
            witnesses.sort();
            let y_f64 = alpha.form_to_f64(&y);
            return Ok(FExact { y, y_f64, witnesses });
        }
        ceiling *= 2.0;
        if ceiling > F_CEILING_CAP {
            return Err(Error::Budget {
                what: "F ceiling",
                needed: ceiling as u128,
                cap: F_CEILING_CAP as u64,
            });
        }
    }
}

/// Lattice `y`-values in `(0, Y]` over `x` in the difference body; complete below `ceiling`.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    /// `(y, z)` sorted by `y`.
    pub values: Vec<(f64, Vec<i64>)>,
    pub ceiling: f64,
}

impl CandidateSet {
    pub fn contains_vector(&self, z: &[i64]) -> bool {
        self.values.iter().any(|(_, v)| v == z)
    }

    pub fn contains_value(&self, y: f64, tol: f64) -> bool {
        self.values.iter().any(|(v, _)| (v - y).abs() <= tol)
    }

    /// Distinct values after merging within `tol`.
    pub fn distinct(&self, tol: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for (y, _) in &self.values {
            if out.last().is_none_or(|l| y - l > tol) {
                out.push(*y);
            }
        }
        out
    }
}

pub fn candidate_values(m: &LatticeBasis, body: &ConvexBody, ceiling: f64, budget: Budget) -> Result<CandidateSet> {
    if !(ceiling > 0.0) {
        return Err(Error::InvalidArgument("ceiling must be positive".into()));
    }
    if body.dim() + 1 != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n() - 1,
            got: body.dim(),
        });
    }
    let delta = body.difference_body()?;
    let d = body.dim();
    let (mut lo, mut hi) = delta.bbox_f64();
    lo.push(0.0);
    hi.push(ceiling);
    pad(&mut lo, &mut hi);
    let mut values = Vec::new();
    enumerate_box(m.rows(), &lo, &hi, budget, &mut |z, p| {
        let err = m.point_err(z)[d];
        if p[d] > err && p[d] <= ceiling + err {
            let x = &p[..d];
            if delta.contains_f64(x) || delta.boundary_distance_f64(x) <= CLEARANCE_EPS {
                values.push((p[d], z.to_vec()));
            }
        }
        Ok(())
    })?;
    values.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    Ok(CandidateSet { values, ceiling })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortVector {
    /// Integer coordinates with respect to the given basis.
    pub z: Vec<i64>,
    pub v: Vec<f64>,
    pub norm: f64,
}

/// Exact shortest non-zero vector: exact LLL followed by Fincke-Pohst enumeration.
pub fn shortest_vector(m: &LatticeBasis, budget: Budget) -> Result<ShortVector> {
    let n = m.n();
    if n > 5 {
        return Err(Error::Unsupported("shortest vector supports d + 1 <= 5".into()));
    }
    let mut b: Vec<Vec<BigRational>> = match &m.hp {
        Some(h) => h.clone(),
        None => (0..n).map(|i| m.row(i).into_iter().map(big_from_f64).collect()).collect(),
    };
    let u = crate::lll::lll(&mut b);
    let bf: Vec<Vec<f64>> = b
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect())
        .collect();
    // Gram-Schmidt in f64 on the reduced basis
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut nrm = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut v = bf[i].clone();
        for j in 0..i {
            let mij = bf[i].iter().zip(&bstar[j]).map(|(a, b)| a * b).sum::<f64>() / nrm[j];
            mu[i][j] = mij;
            for (x, y) in v.iter_mut().zip(&bstar[j]) {
                *x -= mij * y;
            }
        }
        nrm[i] = v.iter().map(|x| x * x).sum();
        bstar.push(v);
    }
    let row_norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut best_w: Vec<i64> = vec![0; n];
    let (bi, bn) = bf
        .iter()
        .enumerate()
        .map(|(i, r)| (i, row_norm2(r)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty basis");
    best_w[bi] = 1;
    let mut bound = bn * (1.0 + 1e-9);
    let mut w = vec![0i64; n];
    let mut visited: u128 = 0;
    #[allow(clippy::too_many_arguments)]
    fn rec(
        i: usize,
        partial: f64,
        w: &mut [i64],
        mu: &[Vec<f64>],
        nrm: &[f64],
        bf: &[Vec<f64>],
        bound: &mut f64,
        best: &mut Vec<i64>,
        visited: &mut u128,
        budget: Budget,
    ) -> Result<()> {
        let n = w.len();
        let c: f64 = -(i + 1..n).map(|j| w[j] as f64 * mu[j][i]).sum::<f64>();
        let r = ((*bound - partial).max(0.0) / nrm[i]).sqrt();
        let (lo, hi) = ((c - r).ceil() as i64, (c + r).floor() as i64);
        for wi in lo..=hi {
            *visited += 1;
            budget.check("shortest vector enumeration", *visited)?;
            w[i] = wi;
            let part = partial + (wi as f64 - c).powi(2) * nrm[i];
            if part > *bound {
                continue;
            }
            if i == 0 {
                if w.iter().any(|x| *x != 0) {
                    let v: Vec<f64> = (0..bf[0].len())
                        .map(|col| (0..n).map(|k| w[k] as f64 * bf[k][col]).sum())
                        .collect();
                    let nv: f64 = v.iter().map(|x| x * x).sum();
                    if nv < *bound {
                        *bound = nv * (1.0 + 1e-12);
                        *best = w.to_vec();
                    }
                }
            } else {
                rec(i - 1, part, w, mu, nrm, bf, bound, best, visited, budget)?;
            }
        }
        w[i] = 0;
        Ok(())
    }
    rec(n - 1, 0.0, &mut w, &mu, &nrm, &bf, &mut bound, &mut best_w, &mut visited, budget)?;
    // exact norm of the winner, then map back to the original coordinates
    let v_exact: Vec<BigRational> = (0..n)
        .map(|col| {
            (0..n)
                .map(|k| BigRational::from_integer(BigInt::from(best_w[k])) * &b[k][col])
                .sum()
        })
        .collect();
    let norm2: BigRational = v_exact.iter().map(|x| x * x).sum();
    let norm = norm2.to_f64().unwrap_or(f64::NAN).sqrt();
    let z: Vec<i64> = (0..n)
        .map(|j| {
            let s: BigInt = (0..n).map(|k| BigInt::from(best_w[k]) * &u[k][j]).sum();
            s.to_i64().ok_or_else(|| Error::Certification("coordinates overflow".into()))
        })
        .collect::<Result<_>>()?;
    Ok(ShortVector {
        z,
        v: v_exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect(),
        norm,
    })
}

/// Certified lower bound for the covering radius of `anchor x (0, 1]` from
/// targets `(j / grid_n) M`, `j in {0..grid_n-1}^{d+1}`.
pub fn covering_radius_estimate(
    m: &LatticeBasis,
    anchor: &ConvexBody,
    grid_n: usize,
    budget: Budget,
) -> Result<f64> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument("grid_n must be at least 2".into()));
    }
    let n = m.n();
    if anchor.dim() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: anchor.dim(),
        });
    }
    let (alo, ahi) = anchor.bbox_f64();
    let d = n - 1;
    let hits = |p: &[f64], theta: f64| -> Result<bool> {
        let mut lo: Vec<f64> = (0..d).map(|i| p[i] - theta * ahi[i]).collect();
        let mut hi: Vec<f64> = (0..d).map(|i| p[i] - theta * alo[i]).collect();
        lo.push(p[d] - theta);
        hi.push(p[d]);
        pad(&mut lo, &mut hi);
        let mut any = false;
        enumerate_box(m.rows(), &lo, &hi, budget, &mut |_, v| {
            if !any {
                let q: Vec<f64> = (0..n).map(|i| (p[i] - v[i]) / theta).collect();
                any = q[d] > 0.0 && q[d] <= 1.0 && anchor.contains_f64(&q[..d]);
            }
            Ok(())
        })?;
        Ok(any)
    };
    let mut best: f64 = 0.0;
    let mut j = vec![0usize; n];
    loop {
        let coords: Vec<f64> = j.iter().map(|x| *x as f64 / grid_n as f64).collect();
        let p: Vec<f64> = (0..n)
            .map(|c| (0..n).map(|k| coords[k] * m.rows()[(k, c)]).sum())
            .collect();
        let mut hi = 1.0;
        while !hits(&p, hi)? {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::Budget {
                    what: "covering bisection",
                    needed: hi as u128,
                    cap: 1_000_000,
                });
            }
        }
        let mut lo = 0.0;
        if lo < best && !hits(&p, best)? {
            lo = best;
        }
        if lo >= best {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if hits(&p, mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            best = best.max(lo);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(best);
            }
            i -= 1;
            if j[i] + 1 < grid_n {
                j[i] += 1;
                break;
            }
            j[i] = 0;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clearance {
    pub cleared: bool,
    pub min_distance: f64,
}

/// Whether every non-zero lattice point keeps distance `> 1e-9` from the
/// boundary of `(D - t) x [0, kappa]`.
pub fn boundary_clearance(
    m: &LatticeBasis,
    body: &ConvexBody,
    t: &[f64],
    kappa: f64,
    budget: Budget,
) -> Result<Clearance> {
    check_target(body, m, t.len())?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument("kappa must be positive".into()));
    }
    let d = body.dim();
    const MARGIN: f64 = 1e-6;
    let (mut lo, mut hi) = body.bbox_f64();
    for i in 0..d {
        lo[i] -= t[i] + MARGIN;
        hi[i] += MARGIN - t[i];
    }
    lo.push(-MARGIN);
    hi.push(kappa + MARGIN);
    let mut min_distance = f64::INFINITY;
    enumerate_box(m.rows(), &lo, &hi, budget, &mut |z, p| {
        if z.iter().all(|v| *v == 0) {
            return Ok(());
        }
        let x: Vec<f64> = p[..d].iter().zip(t).map(|(a, b)| a + b).collect();
        let y = p[d];
        let dx = body.boundary_distance_f64(&x);
        let inside_x = body.interior_f64(&x) || dx == 0.0;
        let inside_y = (0.0..=kappa).contains(&y);
        let dist = if inside_x && inside_y {
            dx.min(y).min(kappa - y)
        } else {
            let ox = if inside_x { 0.0 } else { dx };
            let oy = (-y).max(y - kappa).max(0.0);
            ox.hypot(oy)
        };
        min_distance = min_distance.min(dist);
        Ok(())
    })?;
    Ok(Clearance {
        cleared: min_distance > CLEARANCE_EPS,
        min_distance,
    })
}

/// Random integer matrix of determinant 1 (product of elementary moves).
pub fn random_unimodular<R: Rng>(n: usize, rng: &mut R, steps: usize) -> Vec<Vec<i64>> {
    let mut u: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect();
    for _ in 0..steps {
        let i = rng.gen_range(0..n);
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let k: i64 = if rng.gen_bool(0.5) { 1 } else { -1 };
        let rj = u[j].clone();
        for (a, b) in u[i].iter_mut().zip(&rj) {
            *a += k * b;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reals::ExactReal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qi(n: i128) -> Q {
        Q::from_integer(n)
    }

    #[test]
    fn steinhaus_basis_shape() {
        let a = Arc::new(Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap());
        let m = steinhaus_basis_diag(a, &DiagDilation::from_ints(&[5]).unwrap()).unwrap();
        assert!((m.rows()[(0, 0)] - 0.2).abs() < 1e-16);
        assert!((m.rows()[(0, 1)] - 5.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(m.rows()[(1, 0)], 0.0);
        assert_eq!(m.rows()[(1, 1)], 5.0);
        assert_eq!(m.det_certificate().unwrap(), DetCertificate::Exact);
        assert!((m.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slater_is_dual_of_negated_steinhaus() {
        let a = Arc::new(Alpha::generic(vec![ExactReal::sqrt(2), ExactReal::sqrt(3)]).unwrap());
        let t = DiagDilation::from_ints(&[3, 5]).unwrap();
        let s = slater_basis_diag(a.clone(), &t).unwrap();
        assert_eq!(s.det_certificate().unwrap(), DetCertificate::Exact);
        let tinv = DiagDilation::new(vec![Q::new(1, 3), Q::new(1, 5)]).unwrap();
        let st = steinhaus_basis_diag(Arc::new(a.negated()), &tinv).unwrap();
        let dual = st.transpose_inverse().unwrap();
        let diff = (s.rows() - dual.rows()).abs().max();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn flows() {
        let p = diag_flow(0.0, 2);
        assert_eq!(p.rows(), &DMatrix::identity(3, 3));
        let a = diag_flow(0.3, 2).rows() * diag_flow(0.45, 2).rows();
        assert!((a - diag_flow(0.75, 2).rows()).abs().max() < 1e-14);
        let dt = dtheta(2.0, 2).unwrap();
        assert!((dt.rows() - diag_flow(-(2f64.ln()), 2).rows()).abs().max() < 1e-14);
    }

    #[test]
    fn disk_construction() {
        let disk = ConvexBody::ball(vec![qi(0), qi(0)], qi(1), true).unwrap();
        let (m, ctx) = proposition_basis(&disk, 0.1).unwrap();
        assert!((ctx.scale - 5.0).abs() < 1e-12);
        assert!(ctx.sign_flipped);
        assert!(matches!(m.det_certificate().unwrap(), DetCertificate::Numeric { .. }));
        assert_eq!(ctx.m_max(), 20);
        for k in 1..=20 {
            let t = ctx.target(&disk, k).unwrap();
            let f = f_value(&m, &disk, &t, Budget::default()).unwrap();
            assert!((f.y - 0.1 * k as f64).abs() < 1e-12, "m={k}: {}", f.y);
        }
    }

    #[test]
    fn identity_examples() {
        let id = LatticeBasis::identity(3);
        let sq = ConvexBody::unit_cube(2).unwrap();
        let pts = points_in_region(&id, &Region::new(sq.clone(), 0.0, 2.0), Budget::default()).unwrap();
        let zs: Vec<Vec<i64>> = pts.into_iter().map(|p| p.z).collect();
        assert_eq!(zs, vec![vec![0, 0, 1], vec![0, 0, 2]]);
        let f = f_value(&id, &sq, &[0.5, 0.5], Budget::default()).unwrap();
        assert_eq!(f.y, 1.0);
        assert_eq!(f.witnesses, vec![vec![0, 0, 1]]);
        let fe = f_value_exact(&id, &sq, &[Q::new(1, 2), Q::new(1, 2)], Budget::default()).unwrap();
        assert_eq!(fe.y.constant_value(), Some(Q::one()));
        let c = candidate_values(&id, &sq, 3.0, Budget::default()).unwrap();
        assert_eq!(c.distinct(1e-12), vec![1.0, 2.0, 3.0]);
        let cl = boundary_clearance(&id, &sq, &[0.5, 0.5], 1.0, Budget::default()).unwrap();
        assert!(!cl.cleared);
        let cl = boundary_clearance(&id, &sq, &[0.5, 0.5], 0.5, Budget::default()).unwrap();
        assert!(cl.cleared);
        assert_eq!(f_value(&id, &sq, &[0.0, 0.5], Budget::default()), Err(Error::NotInterior));
    }

    #[test]
    fn f_matches_gap_in_dimension_one() {
        let a = Arc::new(Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap());
        let m = steinhaus_basis_diag(a, &DiagDilation::from_ints(&[5]).unwrap()).unwrap();
        let body = ConvexBody::unit_cube(1).unwrap();
        let f = f_value(&m, &body, &[0.01], Budget::default()).unwrap();
        assert!((f.y - 5.0 * (3.0 * 2f64.sqrt() - 4.0)).abs() < 1e-12);
        let fe = f_value_exact(&m, &body, &[Q::new(1, 100)], Budget::default()).unwrap();
        // 5 (3 sqrt2 - 4) = -20 + 15 sqrt2
        assert_eq!(fe.y.c.to_vec(), vec![qi(-20), qi(15)]);
    }

    #[test]
    fn shortest_vector_invariance() {
        assert!((shortest_vector(&LatticeBasis::identity(3), Budget::default()).unwrap().norm - 1.0).abs() < 1e-15);
        let a = Arc::new(Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap());
        let m = steinhaus_basis_diag(a, &DiagDilation::from_ints(&[1]).unwrap())
            .unwrap()
            .right_mul(diag_flow(2.0, 1).rows());
        let sv = shortest_vector(&m, Budget::default()).unwrap();
        let mut brute = f64::INFINITY;
        for i in -20i64..=20 {
            for j in -20i64..=20 {
                if (i, j) != (0, 0) {
                    let p = m.point(&[i, j]);
                    brute = brute.min(p[0].hypot(p[1]));
                }
            }
        }
        assert!((sv.norm - brute).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_unimodular(2, &mut rng, 8);
        let sv2 = shortest_vector(&m.left_mul_int(&u).unwrap(), Budget::default()).unwrap();
        assert!((sv.norm - sv2.norm).abs() < 1e-12);
    }

    #[test]
    fn covering_identity_is_one() {
        let id = LatticeBasis::identity(3);
        let a = ConvexBody::unit_cube(2).unwrap();
        let est = covering_radius_estimate(&id, &a, 2, Budget::default()).unwrap();
        assert!(est <= 1.0 && est > 0.999, "{est}");
    }
}
