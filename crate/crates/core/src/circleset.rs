//! Exact points and gaps on `R/Z`.
//!
//! A value `c0 + m . alpha` is stored twice: as its integer coefficient
//! vector and as a canonical [`Key`] over a basis `(1, g_1, .., g_r)` whose
//! elements are assumed linearly independent over the rationals. Two values
//! are equal iff their keys are equal. Floating approximations only ever
//! decide order, and only when the certified error intervals separate.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::reals::{big, floor_div, ExactReal, Q};

/// Fractional bits of the `i128` fast path.
pub const FAST_BITS: u32 = 96;
pub const DEFAULT_PRECISION: u32 = 128;
pub const MAX_PRECISION: u32 = 16384;

/// Largest coefficient accepted as a genuine relation by the independence check.
const RELATION_MAX_COEFF: i64 = 10_000;

pub type Coeffs = SmallVec<[i64; 5]>;
pub type IrrCoeffs = SmallVec<[i64; 4]>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationSpec {
    /// `1, alpha_1, .., alpha_d` independent over the rationals.
    GenericIndependent(usize),
    /// `alpha_i = (b_i / q) beta + s_i` with `gcd(b) = 1` and `q s_i` integral.
    RationalBeta { q: i64, b: Vec<i64>, s: Vec<Q> },
}

/// Canonical form `num / den + sum irr_j g_j` (the denominator is fixed per [`Alpha`]).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub num: i128,
    pub irr: IrrCoeffs,
}

impl Key {
    pub fn is_rational(&self) -> bool {
        self.irr.iter().all(|c| *c == 0)
    }

    pub fn sub(&self, o: &Key) -> Key {
        Key {
            num: self.num - o.num,
            irr: self.irr.iter().zip(&o.irr).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, o: &Key) -> Key {
        Key {
            num: self.num + o.num,
            irr: self.irr.iter().zip(&o.irr).map(|(a, b)| a + b).collect(),
        }
    }

    fn irr_weight(&self) -> i128 {
        self.irr.iter().map(|c| (*c as i128).abs()).sum()
    }
}

/// An element of `R` (usually of `[0, 1)`) of the form `c0 + m . alpha`.
#[derive(Debug, Clone)]
pub struct LinearFormValue {
    coeffs: Coeffs,
    key: Key,
    /// `(A, e)` with `|x 2^96 - A| <= e`.
    fast: Option<(i128, i128)>,
    numeric: f64,
}

impl PartialEq for LinearFormValue {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for LinearFormValue {}

impl std::hash::Hash for LinearFormValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl LinearFormValue {
    /// `(c0, m_1, .., m_d)`.
    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn numeric(&self) -> f64 {
        self.numeric
    }

    pub fn is_rational(&self) -> bool {
        self.key.is_rational()
    }
}

impl fmt::Display for LinearFormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeffs[0])?;
        for (i, m) in self.coeffs[1..].iter().enumerate() {
            if *m != 0 {
                write!(f, " {} {}*a{}", if *m < 0 { '-' } else { '+' }, m.abs(), i + 1)?;
            }
        }
        write!(f, " (~{:.12})", self.numeric)
    }
}

/// The rotation vector together with its arithmetic structure.
pub struct Alpha {
    components: Vec<ExactReal>,
    relation: RelationSpec,
    generators: Vec<ExactReal>,
    den: i128,
    comp_num: Vec<i128>,
    comp_irr: Vec<IrrCoeffs>,
    gen_fast: Option<Vec<i128>>,
    cache: Mutex<HashMap<u32, Arc<Vec<BigInt>>>>,
    numeric_only: bool,
    precision_bits: u32,
}

impl Clone for Alpha {
    fn clone(&self) -> Self {
        Alpha {
            components: self.components.clone(),
            relation: self.relation.clone(),
            generators: self.generators.clone(),
            den: self.den,
            comp_num: self.comp_num.clone(),
            comp_irr: self.comp_irr.clone(),
            gen_fast: self.gen_fast.clone(),
            cache: Mutex::new(HashMap::new()),
            numeric_only: self.numeric_only,
            precision_bits: self.precision_bits,
        }
    }
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Alpha")
            .field("components", &self.components)
            .field("relation", &self.relation)
            .field("numeric_only", &self.numeric_only)
            .finish()
    }
}

fn lcm_den(qs: &[Q]) -> i128 {
    qs.iter().fold(1i128, |acc, q| acc.lcm(q.denom()))
}

impl Alpha {
    fn build(
        components: Vec<ExactReal>,
        relation: RelationSpec,
        generators: Vec<ExactReal>,
        den: i128,
        comp_num: Vec<i128>,
        comp_irr: Vec<IrrCoeffs>,
    ) -> Self {
        let gen_fast = generators
            .iter()
            .map(|g| g.approx(FAST_BITS).to_i128().filter(|a| a.abs() < (1i128 << 110)))
            .collect::<Option<Vec<_>>>();
        Alpha {
            components,
            relation,
            generators,
            den,
            comp_num,
            comp_irr,
            gen_fast,
            cache: Mutex::new(HashMap::new()),
            numeric_only: false,
            precision_bits: DEFAULT_PRECISION,
        }
    }

    /// Independent components; a heuristic small-relation search runs first.
    pub fn generic(components: Vec<ExactReal>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("alpha must be non-empty".into()));
        }
        if let Some(rel) = find_small_relation(&components) {
            return Err(Error::Relation(rel));
        }
        Ok(Self::generic_unchecked(components))
    }

    /// As [`Alpha::generic`] without the relation search.
    pub fn generic_unchecked(components: Vec<ExactReal>) -> Self {
        let d = components.len();
        let comp_irr = (0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect();
        Self::build(
            components.clone(),
            RelationSpec::GenericIndependent(d),
            components,
            1,
            vec![0; d],
            comp_irr,
        )
    }

    /// Seeded uniform vector in `[0, 1)^d` with arbitrarily many certified bits.
    pub fn random(d: usize, seed: u64) -> Result<Self> {
        Self::generic((0..d as u64).map(|stream| ExactReal::RandomBits { seed, stream }).collect())
    }

    pub fn rational(values: Vec<Q>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("alpha must be non-empty".into()));
        }
        let den = lcm_den(&values);
        let d = values.len();
        let comp_num = values.iter().map(|v| (v * den).to_integer()).collect();
        Ok(Self::build(
            values.iter().map(|v| ExactReal::Rational(*v)).collect(),
            RelationSpec::RationalBeta {
                q: den as i64,
                b: vec![0; d],
                s: values,
            },
            Vec::new(),
            den,
            comp_num,
            vec![IrrCoeffs::new(); d],
        ))
    }

    /// `alpha = r beta + s` with rational `r, s` and irrational `beta`.
    ///
    /// Normalized so that `b = q r` is primitive with positive leading entry
    /// (the gcd and sign are absorbed into `beta`).
    pub fn rational_beta(beta: ExactReal, r: Vec<Q>, s: Vec<Q>) -> Result<Self> {
        let d = r.len();
        if d == 0 || s.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: s.len(),
            });
        }
        if let Some(bq) = beta.rational_value() {
            return Self::rational(r.iter().zip(&s).map(|(r, s)| *r * bq + *s).collect());
        }
        let all: Vec<Q> = r.iter().chain(&s).copied().collect();
        let q = lcm_den(&all);
        let mut b: Vec<i128> = r.iter().map(|r| (*r * q).to_integer()).collect();
        let g = b.iter().fold(0i128, |acc, x| acc.gcd(x));
        if g == 0 {
            return Self::rational(s);
        }
        let sign = b.iter().find(|x| **x != 0).map_or(1, |x| x.signum());
        let scale = g * sign;
        for x in &mut b {
            *x /= scale;
        }
        let beta_n = beta.affine(Q::from_integer(scale), Q::zero());
        let gen = beta_n.clone().affine(Q::new(1, q), Q::zero());
        let comp_num: Vec<i128> = s.iter().map(|s| (*s * q).to_integer()).collect();
        let components = b
            .iter()
            .zip(&s)
            .map(|(bi, si)| beta_n.clone().affine(Q::new(*bi, q), *si))
            .collect();
        let b64: Vec<i64> = b
            .iter()
            .map(|x| i64::try_from(*x).map_err(|_| Error::InvalidArgument("relation too large".into())))
            .collect::<Result<_>>()?;
        let comp_irr = b64.iter().map(|bi| SmallVec::from_slice(&[*bi])).collect();
        Ok(Self::build(
            components,
            RelationSpec::RationalBeta {
                q: q as i64,
                b: b64,
                s,
            },
            vec![gen],
            q,
            comp_num,
            comp_irr,
        ))
    }

    /// `alpha_i = (b_i / q) beta + s_i`.
    pub fn from_relation(beta: ExactReal, q: i64, b: Vec<i64>, s: Vec<Q>) -> Result<Self> {
        if q <= 0 {
            return Err(Error::InvalidArgument("relation denominator must be positive".into()));
        }
        let r = b.iter().map(|bi| Q::new(*bi as i128, q as i128)).collect();
        Self::rational_beta(beta, r, s)
    }

    /// Decimal input of unknown arithmetic nature. Counting is exact for the
    /// binary value of each `f64`, which only brackets the intended real.
    pub fn decimal(values: &[f64]) -> Result<Self> {
        let qs = values
            .iter()
            .map(|x| {
                ExactReal::Dyadic(*x)
                    .rational_value()
                    .filter(|q| *q.denom() < (1i128 << 62))
                    .ok_or_else(|| Error::InvalidArgument(format!("unrepresentable decimal {x}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut a = Self::rational(qs)?;
        a.numeric_only = true;
        Ok(a)
    }

    pub fn with_precision(mut self, bits: u32) -> Self {
        self.precision_bits = bits.clamp(64, MAX_PRECISION);
        self
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ExactReal] {
        &self.components
    }

    pub fn relation(&self) -> &RelationSpec {
        &self.relation
    }

    pub fn numeric_only(&self) -> bool {
        self.numeric_only
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.components.iter().map(ExactReal::to_f64).collect()
    }

    /// Negated vector with the same relation type.
    pub fn negated(&self) -> Self {
        let mut a = Self::build(
            self.components
                .iter()
                .map(|c| c.clone().affine(-Q::one(), Q::zero()))
                .collect(),
            match &self.relation {
                RelationSpec::GenericIndependent(d) => RelationSpec::GenericIndependent(*d),
                RelationSpec::RationalBeta { q, b, s } => RelationSpec::RationalBeta {
                    q: *q,
                    b: b.iter().map(|x| -x).collect(),
                    s: s.iter().map(|x| -x).collect(),
                },
            },
            self.generators.clone(),
            self.den,
            self.comp_num.iter().map(|x| -x).collect(),
            self.comp_irr
                .iter()
                .map(|v| v.iter().map(|x| -x).collect())
                .collect(),
        );
        a.numeric_only = self.numeric_only;
        a.precision_bits = self.precision_bits;
        a
    }

    /// Denominator of the rational part of every key.
    pub fn key_den(&self) -> i128 {
        self.den
    }

    /// Key of `c0 + m . alpha`.
    pub fn key_of(&self, c0: i64, m: &[i64]) -> Key {
        let mut num = c0 as i128 * self.den;
        let mut irr: IrrCoeffs = SmallVec::from_elem(0, self.generators.len());
        for (i, mi) in m.iter().enumerate() {
            if *mi == 0 {
                continue;
            }
            num += *mi as i128 * self.comp_num[i];
            for (acc, c) in irr.iter_mut().zip(&self.comp_irr[i]) {
                *acc += mi * c;
            }
        }
        Key { num, irr }
    }

    fn gen_approx(&self, prec: u32) -> Arc<Vec<BigInt>> {
        let mut cache = self.cache.lock().expect("approximation cache poisoned");
        cache
            .entry(prec)
            .or_insert_with(|| Arc::new(self.generators.iter().map(|g| g.approx(prec)).collect()))
            .clone()
    }

    fn fast_of(&self, key: &Key) -> Option<(i128, i128)> {
        let g = self.gen_fast.as_ref()?;
        let shifted = key.num.checked_mul(1i128 << FAST_BITS)?;
        let mut a = shifted.div_euclid(self.den);
        for (c, gi) in key.irr.iter().zip(g) {
            a = a.checked_add((*c as i128).checked_mul(*gi)?)?;
        }
        Some((a, 1 + 2 * key.irr_weight()))
    }

    /// `(A, e)` with `|x 2^prec - A| <= e`.
    pub fn approx_key(&self, key: &Key, prec: u32) -> (BigInt, BigInt) {
        let g = self.gen_approx(prec);
        let mut a = floor_div(&(big(key.num) << prec as usize), &big(self.den));
        for (c, gi) in key.irr.iter().zip(g.iter()) {
            if *c != 0 {
                a += BigInt::from(*c) * gi;
            }
        }
        (a, big(1 + 2 * key.irr_weight()))
    }

    fn numeric_of(&self, key: &Key, fast: Option<(i128, i128)>) -> f64 {
        match fast {
            Some((a, _)) => a as f64 / 2f64.powi(FAST_BITS as i32),
            None => {
                let (a, _) = self.approx_key(key, 80);
                a.to_f64().unwrap_or(f64::NAN) / 2f64.powi(80)
            }
        }
    }

    /// Certified sign of a key.
    pub fn sign(&self, key: &Key) -> Result<Ordering> {
        if key.is_rational() {
            return Ok(key.num.cmp(&0));
        }
        if let Some((a, e)) = self.fast_of(key) {
            if a.abs() > e {
                return Ok(a.cmp(&0));
            }
        }
        let mut p = self.precision_bits.max(FAST_BITS + 32);
        loop {
            let (a, e) = self.approx_key(key, p);
            if a.abs() > e {
                return Ok(if a.is_positive() { Ordering::Greater } else { Ordering::Less });
            }
            if p >= MAX_PRECISION {
                return Err(Error::Certification(format!(
                    "sign undecided at {p} bits for key {key:?}"
                )));
            }
            p = (p * 2).min(MAX_PRECISION);
        }
    }

    /// Certified floor of a key's value.
    pub fn floor(&self, key: &Key) -> Result<i128> {
        if key.is_rational() {
            return Ok(key.num.div_euclid(self.den));
        }
        if let Some((a, e)) = self.fast_of(key) {
            let lo = (a - e) >> FAST_BITS;
            let hi = (a + e) >> FAST_BITS;
            if lo == hi {
                return Ok(lo);
            }
        }
        let mut p = self.precision_bits.max(FAST_BITS + 32);
        loop {
            let (a, e) = self.approx_key(key, p);
            let lo: BigInt = (&a - &e) >> p as usize;
            let hi: BigInt = (&a + &e) >> p as usize;
            if lo == hi {
                return lo
                    .to_i128()
                    .ok_or_else(|| Error::Certification("integer part out of range".into()));
            }
            if p >= MAX_PRECISION {
                return Err(Error::Certification(format!(
                    "cannot place value in [0,1) at {p} bits"
                )));
            }
            p = (p * 2).min(MAX_PRECISION);
        }
    }

    /// The real number `c0 + m . alpha` (not reduced).
    pub fn value(&self, c0: i64, m: &[i64]) -> LinearFormValue {
        let key = self.key_of(c0, m);
        self.form_from_key(std::iter::once(c0).chain(m.iter().copied()).collect(), key)
    }

    fn form_from_key(&self, coeffs: Coeffs, key: Key) -> LinearFormValue {
        let fast = self.fast_of(&key);
        let numeric = self.numeric_of(&key, fast);
        LinearFormValue {
            coeffs,
            key,
            fast,
            numeric,
        }
    }

    /// `m . alpha mod 1` as a value in `[0, 1)`.
    pub fn frac(&self, m: &[i64]) -> Result<LinearFormValue> {
        if m.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: m.len(),
            });
        }
        let mut key = self.key_of(0, m);
        let n = self.floor(&key)?;
        key.num -= n * self.den;
        let mut coeffs: Coeffs = SmallVec::with_capacity(m.len() + 1);
        coeffs.push(-(n as i64));
        coeffs.extend_from_slice(m);
        Ok(self.form_from_key(coeffs, key))
    }

    /// Certified comparison; equal exactly when the canonical keys agree.
    pub fn cmp(&self, a: &LinearFormValue, b: &LinearFormValue) -> Result<Ordering> {
        if a.key == b.key {
            return Ok(Ordering::Equal);
        }
        if let (Some((va, ea)), Some((vb, eb))) = (a.fast, b.fast) {
            if va + ea < vb - eb {
                return Ok(Ordering::Less);
            }
            if vb + eb < va - ea {
                return Ok(Ordering::Greater);
            }
        }
        self.sign(&a.key.sub(&b.key))
    }

    /// `b - a`, or `1 + b - a` when `wrap` is set.
    fn difference(&self, a: &LinearFormValue, b: &LinearFormValue, wrap: bool) -> LinearFormValue {
        let mut key = b.key.sub(&a.key);
        let mut coeffs: Coeffs = b.coeffs.iter().zip(&a.coeffs).map(|(x, y)| x - y).collect();
        if wrap {
            key.num += self.den;
            coeffs[0] += 1;
        }
        let fast = match (a.fast, b.fast) {
            (Some((va, ea)), Some((vb, eb))) => {
                let one = if wrap { 1i128 << FAST_BITS } else { 0 };
                Some((vb - va + one, ea + eb))
            }
            _ => None,
        };
        let numeric = self.numeric_of(&key, fast);
        LinearFormValue {
            coeffs,
            key,
            fast,
            numeric,
        }
    }

    /// The exact rational value of a key whose irrational part vanishes.
    pub fn rational_of(&self, key: &Key) -> Option<BigRational> {
        key.is_rational()
            .then(|| BigRational::new(big(key.num), big(self.den)))
    }
}

/// Rational linear form `c[0] + sum c[i] alpha_i` (lattice entries, targets).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AlphaForm {
    pub c: SmallVec<[Q; 5]>,
}

impl AlphaForm {
    pub fn zero(d: usize) -> Self {
        AlphaForm {
            c: SmallVec::from_elem(Q::zero(), d + 1),
        }
    }

    pub fn constant(q: Q, d: usize) -> Self {
        let mut f = Self::zero(d);
        f.c[0] = q;
        f
    }

    /// `scale * alpha_i` (`i` zero-based).
    pub fn alpha(i: usize, scale: Q, d: usize) -> Self {
        let mut f = Self::zero(d);
        f.c[i + 1] = scale;
        f
    }

    pub fn dim(&self) -> usize {
        self.c.len() - 1
    }

    pub fn add(&self, o: &Self) -> Self {
        AlphaForm {
            c: self.c.iter().zip(&o.c).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        AlphaForm {
            c: self.c.iter().zip(&o.c).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn scale(&self, q: Q) -> Self {
        AlphaForm {
            c: self.c.iter().map(|a| *a * q).collect(),
        }
    }

    pub fn add_scaled(&mut self, o: &Self, k: i64) {
        if k == 0 {
            return;
        }
        let k = Q::from_integer(k as i128);
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            if !b.is_zero() {
                *a += *b * k;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// The value when no `alpha` term is present.
    pub fn constant_value(&self) -> Option<Q> {
        self.c[1..].iter().all(Zero::is_zero).then_some(self.c[0])
    }

    fn scaled_integers(&self) -> Result<(i128, i64, Vec<i64>)> {
        let l = self.c.iter().fold(1i128, |acc, q| acc.lcm(q.denom()));
        let ints = self
            .c
            .iter()
            .map(|q| {
                i64::try_from((*q * l).to_integer())
                    .map_err(|_| Error::Certification("form coefficients overflow".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((l, ints[0], ints[1..].to_vec()))
    }
}

impl Alpha {
    /// `(L, key of L * f)` with `L` the common denominator of `f`.
    pub fn form_key(&self, f: &AlphaForm) -> Result<(i128, Key)> {
        let (l, c0, m) = f.scaled_integers()?;
        Ok((l, self.key_of(c0, &m)))
    }

    pub fn form_sign(&self, f: &AlphaForm) -> Result<Ordering> {
        if let Some(q) = f.constant_value() {
            return Ok(q.cmp(&Q::zero()));
        }
        let (_, key) = self.form_key(f)?;
        self.sign(&key)
    }

    pub fn form_cmp(&self, a: &AlphaForm, b: &AlphaForm) -> Result<Ordering> {
        self.form_sign(&a.sub(b))
    }

    /// Exact rational value if the form is rational under the relation.
    pub fn form_rational(&self, f: &AlphaForm) -> Result<Option<BigRational>> {
        if let Some(q) = f.constant_value() {
            return Ok(Some(BigRational::new(big(*q.numer()), big(*q.denom()))));
        }
        let (l, key) = self.form_key(f)?;
        Ok(self.rational_of(&key).map(|r| r / BigRational::from_integer(big(l))))
    }

    /// Certified interval `[lo, hi]` of width about `2^-prec`.
    pub fn form_interval(&self, f: &AlphaForm, prec: u32) -> Result<(BigRational, BigRational)> {
        let (l, key) = self.form_key(f)?;
        let (a, e) = self.approx_key(&key, prec);
        let den = big(l) << prec as usize;
        Ok((
            BigRational::new(&a - &e, den.clone()),
            BigRational::new(&a + &e, den),
        ))
    }

    pub fn form_to_f64(&self, f: &AlphaForm) -> f64 {
        if let Some(q) = f.constant_value() {
            return *q.numer() as f64 / *q.denom() as f64;
        }
        match self.form_key(f) {
            Ok((l, key)) => {
                let fast = self.fast_of(&key);
                self.numeric_of(&key, fast) / l as f64
            }
            Err(_) => {
                let x = self.to_f64();
                let q = |q: &Q| *q.numer() as f64 / *q.denom() as f64;
                q(&f.c[0]) + f.c[1..].iter().zip(&x).map(|(c, x)| q(c) * x).sum::<f64>()
            }
        }
    }
}

/// Heuristic search for an integer relation `c0 + c . alpha = 0` with small `c`.
pub fn find_small_relation(components: &[ExactReal]) -> Option<Vec<i64>> {
    let n = components.len() + 1;
    const SCALE_BITS: u32 = 64;
    const CHECK_BITS: u32 = 400;
    let mut xs = vec![BigInt::one() << SCALE_BITS as usize];
    xs.extend(components.iter().map(|c| c.approx(SCALE_BITS)));
    let mut basis: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|j| BigRational::from_integer(BigInt::from(i64::from(i == j))))
                .collect();
            row.push(BigRational::from_integer(xs[i].clone()));
            row
        })
        .collect();
    crate::lll::lll(&mut basis);
    let mut hi = vec![BigInt::one() << CHECK_BITS as usize];
    hi.extend(components.iter().map(|c| c.approx(CHECK_BITS)));
    for row in &basis {
        let c: Vec<i64> = row[..n]
            .iter()
            .map(|x| x.to_integer().to_i64().unwrap_or(i64::MAX))
            .collect();
        if c.iter().all(|x| *x == 0) || c.iter().any(|x| x.abs() > RELATION_MAX_COEFF) {
            continue;
        }
        let v: BigInt = c.iter().zip(&hi).map(|(ci, h)| BigInt::from(*ci) * h).sum();
        if v.abs() < (BigInt::one() << (CHECK_BITS - 200) as usize) {
            return Some(c);
        }
    }
    None
}

/// `{ m . alpha mod 1 }` as a set (first occurrence kept, input order).
pub fn frac_points(alpha: &Alpha, points: &[Vec<i64>]) -> Result<Vec<LinearFormValue>> {
    let mut seen = std::collections::HashSet::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for m in points {
        let v = alpha.frac(m)?;
        if seen.insert(v.key.clone()) {
            out.push(v);
        }
    }
    Ok(out)
}

fn sort_by_fallible<T>(
    v: &mut [T],
    mut cmp: impl FnMut(&T, &T) -> Result<Ordering>,
) -> Result<()> {
    let mut err = None;
    v.sort_by(|a, b| match cmp(a, b) {
        Ok(o) => o,
        Err(e) => {
            err.get_or_insert(e);
            Ordering::Equal
        }
    });
    err.map_or(Ok(()), Err)
}

/// Sorts values increasingly with certified comparisons.
pub fn sort_values(alpha: &Alpha, values: &mut Vec<LinearFormValue>) -> Result<()> {
    if values.iter().any(|v| v.fast.is_none()) {
        return sort_by_fallible(values, |a, b| alpha.cmp(a, b));
    }
    values.sort_by_key(|v| {
        let (a, e) = v.fast.expect("checked above");
        a - e
    });
    // sweep maximal runs of overlapping intervals; only those need exact work
    let mut start = 0;
    let mut max_hi = i128::MIN;
    for i in 0..=values.len() {
        let new_run = i == values.len() || {
            let (a, e) = values[i].fast.expect("checked above");
            a - e > max_hi
        };
        if new_run {
            if i - start > 1 {
                sort_by_fallible(&mut values[start..i], |a, b| alpha.cmp(a, b))?;
            }
            start = i;
        }
        if i < values.len() {
            let (a, e) = values[i].fast.expect("checked above");
            max_hi = if new_run { a + e } else { max_hi.max(a + e) };
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct GapClass {
    pub gap: LinearFormValue,
    pub mult: usize,
}

/// Sorted points of a finite subset of `R/Z` with their circular gaps.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub points: Vec<LinearFormValue>,
    /// `gaps[i]` is the gap from `points[i]` to its successor.
    pub gaps: Vec<LinearFormValue>,
    /// Distinct gaps in increasing order.
    pub classes: Vec<GapClass>,
    pub count: usize,
    /// Set for decimal input: `count` is exact for the binary values only.
    pub numeric_only: bool,
}

impl GapReport {
    pub fn max_gap(&self) -> f64 {
        self.classes.last().map_or(f64::NAN, |c| c.gap.numeric)
    }

    pub fn min_gap(&self) -> f64 {
        self.classes.first().map_or(f64::NAN, |c| c.gap.numeric)
    }

    /// Exact sum of the gaps as a key (always the key of `1`).
    pub fn gap_sum(&self) -> Key {
        let mut it = self.gaps.iter();
        let first = it.next().expect("non-empty report").key.clone();
        it.fold(first, |acc, g| acc.add(&g.key))
    }

    /// Index of a point, by exact key.
    pub fn position(&self, v: &LinearFormValue) -> Option<usize> {
        self.points.iter().position(|p| p.key == v.key)
    }

    pub fn to_json(&self) -> Value {
        let mut out = json!({
            "count": self.count,
            "gaps": self.classes.iter().map(|c| json!({
                "coeffs": c.gap.coeffs.to_vec(),
                "numeric": c.gap.numeric,
                "mult": c.mult,
            })).collect::<Vec<_>>(),
        });
        if self.numeric_only {
            out["status"] = json!("numeric bracket only");
        }
        out
    }
}

/// Circular gap spectrum of distinct points in `[0, 1)`.
pub fn gap_spectrum(alpha: &Alpha, points: Vec<LinearFormValue>) -> Result<GapReport> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("gap spectrum of an empty set".into()));
    }
    let mut points = points;
    for p in &points {
        let inside = match p.fast {
            Some((a, e)) => a - e >= 0 && a + e < (1i128 << FAST_BITS),
            None => false,
        };
        if !inside && alpha.floor(&p.key)? != 0 {
            return Err(Error::InvalidArgument(format!("point {p} not in [0,1)")));
        }
    }
    sort_values(alpha, &mut points)?;
    if points.windows(2).any(|w| w[0].key == w[1].key) {
        return Err(Error::InvalidArgument("points must be distinct".into()));
    }
    let n = points.len();
    let gaps: Vec<LinearFormValue> = (0..n)
        .map(|i| {
            if i + 1 < n {
                alpha.difference(&points[i], &points[i + 1], false)
            } else {
                alpha.difference(&points[i], &points[0], true)
            }
        })
        .collect();
    let mut index: HashMap<&Key, usize> = HashMap::new();
    let mut classes: Vec<GapClass> = Vec::new();
    for g in &gaps {
        match index.get(&g.key) {
            Some(&i) => classes[i].mult += 1,
            None => {
                index.insert(&g.key, classes.len());
                classes.push(GapClass {
                    gap: g.clone(),
                    mult: 1,
                });
            }
        }
    }
    sort_by_fallible(&mut classes, |a, b| alpha.cmp(&a.gap, &b.gap))?;
    let count = classes.len();
    Ok(GapReport {
        points,
        gaps,
        classes,
        count,
        numeric_only: alpha.numeric_only,
    })
}

/// Single-linkage cluster count with threshold `rel_tol * max|v| + abs_tol`.
///
/// Heuristic only: chains of close values merge into one cluster, so the
/// result can undercount.
pub fn distinct_count_numeric(values: &[f64], rel_tol: f64, abs_tol: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let thr = rel_tol * scale + abs_tol;
    1 + v.windows(2).filter(|w| w[1] - w[0] > thr).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts1(n: i64) -> Vec<Vec<i64>> {
        (0..n).map(|m| vec![m]).collect()
    }

    #[test]
    fn sqrt2_five_points() {
        let a = Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap();
        let mut p = frac_points(&a, &pts1(5)).unwrap();
        sort_values(&a, &mut p).unwrap();
        let got: Vec<f64> = p.iter().map(|v| v.numeric()).collect();
        let want = [0.0, 0.242640687, 0.414213562, 0.656854249, 0.828427125];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9);
        }
        let rep = gap_spectrum(&a, p).unwrap();
        assert_eq!(rep.count, 2);
        assert!((rep.classes[0].gap.numeric() - 0.171572875).abs() < 1e-9);
        assert!((rep.classes[1].gap.numeric() - 0.242640687).abs() < 1e-9);
        assert_eq!(rep.gap_sum(), a.key_of(1, &[0]));
    }

    #[test]
    fn rational_duplicates_merge() {
        let a = Alpha::rational(vec![Q::new(1, 3)]).unwrap();
        let p = frac_points(&a, &pts1(4)).unwrap();
        assert_eq!(p.len(), 3);
        let rep = gap_spectrum(&a, p).unwrap();
        assert_eq!(rep.count, 1);
        assert_eq!(rep.classes[0].mult, 3);
    }

    #[test]
    fn two_dim_four_points() {
        let a = Alpha::generic(vec![ExactReal::sqrt(2), ExactReal::sqrt(3)]).unwrap();
        let pts = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let rep = gap_spectrum(&a, frac_points(&a, &pts).unwrap()).unwrap();
        assert_eq!(rep.count, 3);
        let nums: Vec<f64> = rep.classes.iter().map(|c| c.gap.numeric()).collect();
        for (g, w) in nums.iter().zip([0.14626, 0.26795, 0.31784]) {
            assert!((g - w).abs() < 1e-5, "{nums:?}");
        }
        assert_eq!(rep.classes[1].mult, 2);
    }

    #[test]
    fn single_point() {
        let a = Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap();
        let rep = gap_spectrum(&a, frac_points(&a, &[vec![0]]).unwrap()).unwrap();
        assert_eq!(rep.count, 1);
        assert_eq!(rep.gaps[0].coeffs(), &[1, 0]);
    }

    #[test]
    fn relation_detected() {
        let r = Alpha::generic(vec![ExactReal::sqrt(2), ExactReal::sqrt(8)]);
        assert!(matches!(r, Err(Error::Relation(_))));
        let r = Alpha::generic(vec![ExactReal::rational(2, 7)]);
        assert!(matches!(r, Err(Error::Relation(_))));
        assert!(Alpha::generic(vec![ExactReal::Cubic7, ExactReal::Pow(Box::new(ExactReal::Cubic7), 2)]).is_ok());
        assert!(Alpha::random(3, 11).is_ok());
    }

    #[test]
    fn rational_beta_normalization() {
        let a = Alpha::rational_beta(
            ExactReal::sqrt(2),
            vec![Q::new(1, 3), Q::new(1, 5)],
            vec![Q::new(1, 2), Q::zero()],
        )
        .unwrap();
        assert_eq!(
            a.relation(),
            &RelationSpec::RationalBeta {
                q: 30,
                b: vec![5, 3],
                s: vec![Q::new(1, 2), Q::zero()]
            }
        );
        let x = a.to_f64();
        assert!((x[0] - (2f64.sqrt() / 3.0 + 0.5)).abs() < 1e-15);
        assert!((x[1] - 2f64.sqrt() / 5.0).abs() < 1e-15);
        // 3 alpha_1 - 5 alpha_2 = 3/2 exactly
        let k = a.key_of(0, &[3, -5]);
        assert!(k.is_rational());
        assert_eq!(a.rational_of(&k).unwrap(), BigRational::new(3.into(), 2.into()));
    }

    #[test]
    fn numeric_clusters() {
        assert_eq!(distinct_count_numeric(&[0.1, 0.1 + 1e-15, 0.3], 0.0, 1e-12), 2);
        assert_eq!(distinct_count_numeric(&[], 1e-9, 1e-12), 0);
        assert_eq!(distinct_count_numeric(&[0.1, 0.2, 0.3], 0.0, 0.15), 1);
    }

    #[test]
    fn json_shape() {
        let a = Alpha::generic(vec![ExactReal::sqrt(2)]).unwrap();
        let rep = gap_spectrum(&a, frac_points(&a, &pts1(5)).unwrap()).unwrap();
        let j = rep.to_json();
        assert_eq!(j["count"], 2);
        assert_eq!(j["gaps"].as_array().unwrap().len(), 2);
        let mults: u64 = j["gaps"].as_array().unwrap().iter().map(|g| g["mult"].as_u64().unwrap()).sum();
        assert_eq!(mults, 5);
    }
}
