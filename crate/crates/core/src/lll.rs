//! Exact LLL reduction for small dimensions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

fn idot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nearest integer to `a / b` for `b > 0`.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let two = BigInt::from(2);
    (a * &two + b).div_floor(&(b * &two))
}

/// Integral LLL (delta = 3/4) on linearly independent integer rows, keeping
/// the Gram-Schmidt data as exact integers. Returns `U` with `b_new = U b_old`.
fn lll_int(b: &mut [Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = b.len();
    let mut h: Vec<Vec<BigInt>> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from(i64::from(i == j))).collect())
        .collect();
    if n < 2 {
        return h;
    }
    // 1-based: d[0] = 1, lam[k][j] for j < k
    let mut d = vec![BigInt::zero(); n + 1];
    let mut lam = vec![vec![BigInt::zero(); n + 1]; n + 1];
    d[0] = BigInt::one();
    d[1] = idot(&b[0], &b[0]);
    let (mut k, mut kmax) = (2usize, 1usize);

    fn red(k: usize, l: usize, b: &mut [Vec<BigInt>], h: &mut [Vec<BigInt>], d: &[BigInt], lam: &mut [Vec<BigInt>]) {
        if (&lam[k][l] * 2i32).abs() <= d[l] {
            return;
        }
        let q = round_div(&lam[k][l], &d[l]);
        let (bl, hl) = (b[l - 1].clone(), h[l - 1].clone());
        for (x, y) in b[k - 1].iter_mut().zip(&bl) {
            *x -= &q * y;
        }
        for (x, y) in h[k - 1].iter_mut().zip(&hl) {
            *x -= &q * y;
        }
        lam[k][l] -= &q * &d[l];
        for i in 1..l {
            let t = &q * &lam[l][i];
            lam[k][i] -= t;
        }
    }

    while k <= n {
        if k > kmax {
            kmax = k;
            for j in 1..=k {
                let mut u = idot(&b[k - 1], &b[j - 1]);
                for i in 1..j {
                    u = (&d[i] * &u - &lam[k][i] * &lam[j][i]) / &d[i - 1];
                }
                if j < k {
                    lam[k][j] = u;
                } else {
                    d[k] = u;
                }
            }
        }
        red(k, k - 1, b, &mut h, &d, &mut lam);
        let lhs = BigInt::from(4) * &d[k] * &d[k - 2];
        let rhs = BigInt::from(3) * &d[k - 1] * &d[k - 1] - BigInt::from(4) * &lam[k][k - 1] * &lam[k][k - 1];
        if lhs < rhs {
            b.swap(k - 1, k - 2);
            h.swap(k - 1, k - 2);
            for j in 1..k - 1 {
                let t = lam[k][j].clone();
                lam[k][j] = std::mem::replace(&mut lam[k - 1][j], t);
            }
            let l = lam[k][k - 1].clone();
            let bb = (&d[k - 2] * &d[k] + &l * &l) / &d[k - 1];
            for i in k + 1..=kmax {
                let t = lam[i][k].clone();
                lam[i][k] = (&d[k] * &lam[i][k - 1] - &l * &t) / &d[k - 1];
                lam[i][k - 1] = (&bb * &t + &l * &lam[i][k]) / &d[k];
            }
            d[k - 1] = bb;
            k = (k - 1).max(2);
        } else {
            for l in (1..k - 1).rev() {
                red(k, l, b, &mut h, &d, &mut lam);
            }
            k += 1;
        }
    }
    h
}

/// LLL-reduces the rows of `b` in place (delta = 3/4) and returns the
/// unimodular `U` with `b_new = U b_old`. Rows must be independent.
pub(crate) fn lll(b: &mut [Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    let den = b
        .iter()
        .flatten()
        .fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let mut ib: Vec<Vec<BigInt>> = b
        .iter()
        .map(|r| r.iter().map(|x| (x * BigRational::from_integer(den.clone())).to_integer()).collect())
        .collect();
    let u = lll_int(&mut ib);
    for (row, irow) in b.iter_mut().zip(&ib) {
        for (x, y) in row.iter_mut().zip(irow) {
            *x = BigRational::new(y.clone(), den.clone());
        }
    }
    u
}
