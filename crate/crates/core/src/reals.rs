//! Exact real constants with certified dyadic approximations.
//!
//! Every [`ExactReal`] can be approximated to any number of fractional bits.
//! The contract of [`ExactReal::approx`] is `|x * 2^prec - A| <= 2`, which is
//! all the downstream interval logic relies on.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{CheckedMul, One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact rational scalar used throughout the crate.
pub type Q = Ratio<i128>;

/// Error bound (in units of `2^-prec`) guaranteed by [`ExactReal::approx`].
pub const APPROX_ULPS: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum ExactReal {
    Rational(Q),
    /// Positive square root of a non-negative integer.
    Sqrt(u64),
    /// `2 cos(2 pi / 7)`, the root of `x^3 + x^2 - 2x - 1` in `(1.24, 1.25)`.
    Cubic7,
    Pow(Box<ExactReal>, u32),
    /// `scale * base + offset`.
    Affine {
        scale: Q,
        offset: Q,
        base: Box<ExactReal>,
    },
    /// A real in `[0, 1)` whose binary expansion is the ChaCha8 stream for
    /// `(seed, stream)`. Prefixes are stable, so any precision is available.
    RandomBits { seed: u64, stream: u64 },
    /// The exact dyadic value of an `f64`.
    Dyadic(f64),
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactReal::Rational(q) => write!(f, "{q}"),
            ExactReal::Sqrt(n) => write!(f, "sqrt({n})"),
            ExactReal::Cubic7 => write!(f, "theta7"),
            ExactReal::Pow(b, k) => write!(f, "({b})^{k}"),
            ExactReal::Affine { scale, offset, base } => write!(f, "{scale}*{base}+{offset}"),
            ExactReal::RandomBits { seed, stream } => write!(f, "rand({seed},{stream})"),
            ExactReal::Dyadic(x) => write!(f, "{x:e}"),
        }
    }
}

pub(crate) fn big(x: i128) -> BigInt {
    BigInt::from(x)
}

/// `floor(num / den)` for `den > 0`.
pub(crate) fn floor_div(num: &BigInt, den: &BigInt) -> BigInt {
    num.div_floor(den)
}

fn bit_len(x: f64) -> u32 {
    let a = x.abs().max(1.0);
    a.log2().ceil() as u32 + 1
}

impl ExactReal {
    pub fn sqrt(n: u64) -> Self {
        ExactReal::Sqrt(n)
    }

    pub fn rational(num: i128, den: i128) -> Self {
        ExactReal::Rational(Q::new(num, den))
    }

    /// `scale * self + offset`, folding rational constants.
    pub fn affine(self, scale: Q, offset: Q) -> Self {
        if scale.is_zero() {
            return ExactReal::Rational(offset);
        }
        match self {
            ExactReal::Rational(q) => ExactReal::Rational(q * scale + offset),
            ExactReal::Affine {
                scale: s0,
                offset: o0,
                base,
            } => ExactReal::Affine {
                scale: s0 * scale,
                offset: o0 * scale + offset,
                base,
            },
            other => {
                if scale.is_one() && offset.is_zero() {
                    other
                } else {
                    ExactReal::Affine {
                        scale,
                        offset,
                        base: Box::new(other),
                    }
                }
            }
        }
    }

    /// Exact rational value when the constant is known to be rational.
    pub fn rational_value(&self) -> Option<Q> {
        match self {
            ExactReal::Rational(q) => Some(*q),
            ExactReal::Sqrt(n) => {
                let r = integer_sqrt(*n);
                (r * r == *n).then(|| Q::from_integer(r as i128))
            }
            ExactReal::Pow(b, k) => {
                let q = b.rational_value()?;
                let mut acc = Q::one();
                for _ in 0..*k {
                    acc = acc.checked_mul(&q)?;
                }
                Some(acc)
            }
            ExactReal::Affine {
                scale,
                offset,
                base,
            } => base.rational_value().map(|q| q * scale + offset),
            ExactReal::Dyadic(x) => dyadic_to_q(*x),
            ExactReal::Cubic7 | ExactReal::RandomBits { .. } => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        match self {
            ExactReal::Dyadic(_) => true,
            _ => self.rational_value().is_some(),
        }
    }

    /// Returns `A` with `|x * 2^prec - A| <= 2`.
    pub fn approx(&self, prec: u32) -> BigInt {
        match self {
            ExactReal::Rational(q) => {
                floor_div(&(big(*q.numer()) << prec as usize), &big(*q.denom()))
            }
            ExactReal::Sqrt(n) => (BigInt::from(*n) << (2 * prec as usize)).sqrt(),
            ExactReal::Cubic7 => cubic7_floor(prec),
            ExactReal::Pow(b, k) => {
                if *k == 0 {
                    return BigInt::one() << prec as usize;
                }
                let bound = b.to_f64().abs() + 1.0;
                let extra = bit_len(2.0 * f64::from(*k) * bound.powi(*k as i32 - 1)) + 3;
                let q = prec + extra;
                let a = b.approx(q);
                let mut acc = a.clone();
                for _ in 1..*k {
                    acc *= &a;
                }
                let shift = (q as usize) * (*k as usize) - prec as usize;
                floor_div(&acc, &(BigInt::one() << shift))
            }
            ExactReal::Affine {
                scale,
                offset,
                base,
            } => {
                let s_abs = scale.abs().to_integer() as f64 + 1.0;
                let e = bit_len(s_abs) + 2;
                let b = base.approx(prec + e);
                let s_num = big(*scale.numer());
                let s_den = big(*scale.denom());
                let o_num = big(*offset.numer());
                let o_den = big(*offset.denom());
                let den = (&s_den * &o_den) << e as usize;
                let num = s_num * b * &o_den + ((o_num << (prec + e) as usize) * s_den);
                floor_div(&num, &den)
            }
            ExactReal::RandomBits { seed, stream } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(*stream);
                let words = (prec as usize).div_ceil(64).max(1);
                let mut acc = BigInt::zero();
                for _ in 0..words {
                    acc = (acc << 64usize) + BigInt::from(rng.next_u64());
                }
                acc >> (64 * words - prec as usize)
            }
            ExactReal::Dyadic(x) => dyadic_floor(*x, prec),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExactReal::Dyadic(x) => *x,
            ExactReal::Sqrt(n) => (*n as f64).sqrt(),
            _ => {
                let a = self.approx(80);
                a.to_f64().unwrap_or(f64::NAN) / 2f64.powi(80)
            }
        }
    }
}

pub(crate) fn integer_sqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|s| s <= n) {
        r += 1;
    }
    r
}

fn dyadic_parts(x: f64) -> (i128, i32) {
    // x = m * 2^e exactly
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i128 } else { -1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & 0xf_ffff_ffff_ffff) as i128;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i128 << 52)), exp - 1075)
    }
}

fn dyadic_to_q(x: f64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (m, e) = dyadic_parts(x);
    if e >= 0 {
        if e > 70 {
            return None;
        }
        Some(Q::from_integer(m.checked_mul(1i128 << e)?))
    } else if -e <= 120 {
        Some(Q::new(m, 1i128 << (-e)))
    } else {
        None
    }
}

fn dyadic_floor(x: f64, prec: u32) -> BigInt {
    let (m, e) = dyadic_parts(x);
    let total = e + prec as i32;
    let m = BigInt::from(m);
    if total >= 0 {
        m << total as usize
    } else {
        floor_div(&m, &(BigInt::one() << (-total) as usize))
    }
}

/// `floor(theta * 2^prec)` where theta is the root of `x^3 + x^2 - 2x - 1` near 1.247.
/// Newton iteration in fixed point, then certified by the sign change of the
/// (increasing) cubic across `[A, A+1]`.
fn cubic7_floor(prec: u32) -> BigInt {
    let p = prec as usize;
    let one = BigInt::one() << p;
    let g = |a: &BigInt| -> BigInt {
        // 2^{3p} f(a / 2^p)
        a * a * a + a * a * &one - BigInt::from(2) * a * &one * &one - &one * &one * &one
    };
    let gp = |a: &BigInt| -> BigInt {
        BigInt::from(3) * a * a + BigInt::from(2) * a * &one - BigInt::from(2) * &one * &one
    };
    let theta = 2.0 * (2.0 * std::f64::consts::PI / 7.0).cos();
    let mut a = dyadic_floor(theta, prec);
    for _ in 0..(2 + (prec as f64 / 40.0).log2().max(0.0).ceil() as usize) {
        let step = floor_div(&g(&a), &gp(&a));
        a -= step;
    }
    loop {
        if g(&a).is_positive() {
            a -= 1;
        } else if !g(&(&a + 1)).is_positive() {
            a += 1;
        } else {
            return a;
        }
    }
}
