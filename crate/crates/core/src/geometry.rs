//! Bounded convex bodies with exact rational membership.
//!
//! Boxes carry per-face open/closed flags, balls a single boundary flag and
//! polytopes a strictness flag per half-space. Membership for rational points
//! is decided exactly; the `*_f64` helpers are for floating-point lattices.

use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::error::{Budget, Error, Result};
use crate::reals::Q;

pub fn q_to_f64(q: &Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn q_floor(q: &Q) -> i64 {
    q.floor().to_integer() as i64
}

fn q_ceil(q: &Q) -> i64 {
    q.ceil().to_integer() as i64
}

/// Parses `"3/4"`, `"0.25"`, `2`, or `0.5` into an exact rational.
pub fn parse_q(v: &Value) -> Result<Q> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Q::from_integer(i as i128))
            } else {
                parse_q_str(&n.to_string())
            }
        }
        Value::String(s) => parse_q_str(s),
        other => Err(Error::InvalidArgument(format!("not a rational: {other}"))),
    }
}

pub fn parse_q_str(s: &str) -> Result<Q> {
    let bad = || Error::InvalidArgument(format!("not a rational: {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Q::new(n, d));
    }
    if s.contains(['e', 'E']) {
        return Err(bad());
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let int_v: i128 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        if frac.len() > 30 {
            return Err(bad());
        }
        let den = 10i128.pow(frac.len() as u32);
        let frac_v: i128 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let mag = int_v.abs() * den + frac_v;
        return Ok(Q::new(if neg { -mag } else { mag }, den));
    }
    s.parse::<i128>().map(Q::from_integer).map_err(|_| bad())
}

fn parse_q_vec(v: &Value) -> Result<Vec<Q>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidArgument(format!("expected array, got {v}")))?
        .iter()
        .map(parse_q)
        .collect()
}

fn parse_bool_vec(v: Option<&Value>, n: usize, default: bool) -> Result<Vec<bool>> {
    match v {
        None => Ok(vec![default; n]),
        Some(Value::Bool(b)) => Ok(vec![*b; n]),
        Some(Value::Array(a)) => a
            .iter()
            .map(|x| {
                x.as_bool()
                    .ok_or_else(|| Error::InvalidArgument("expected bool".into()))
            })
            .collect(),
        Some(other) => Err(Error::InvalidArgument(format!("expected bool(s): {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub a: Vec<Q>,
    pub b: Q,
    /// `a.x < b` when set, `a.x <= b` otherwise.
    pub strict: bool,
}

impl HalfSpace {
    fn value(&self, x: &[Q]) -> Q {
        self.a.iter().zip(x).map(|(a, x)| *a * *x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    AxisBox {
        lo: Vec<Q>,
        hi: Vec<Q>,
        lo_closed: Vec<bool>,
        hi_closed: Vec<bool>,
    },
    Ball {
        center: Vec<Q>,
        radius: Q,
        closed: bool,
    },
    Polytope {
        faces: Vec<HalfSpace>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
}

/// Diagonal expansion `x -> x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagDilation {
    factors: Vec<Q>,
}

impl DiagDilation {
    pub fn new(factors: Vec<Q>) -> Result<Self> {
        if factors.is_empty() || factors.iter().any(|t| !t.is_positive()) {
            return Err(Error::InvalidArgument(
                "dilation factors must be positive".into(),
            ));
        }
        Ok(DiagDilation { factors })
    }

    pub fn homothetic(r: Q, d: usize) -> Result<Self> {
        Self::new(vec![r; d])
    }

    pub fn from_ints(t: &[i64]) -> Result<Self> {
        Self::new(t.iter().map(|&x| Q::from_integer(x as i128)).collect())
    }

    pub fn factors(&self) -> &[Q] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn det(&self) -> Q {
        self.factors.iter().product()
    }

    pub fn is_homothetic(&self) -> bool {
        self.factors.iter().all(|t| *t == self.factors[0])
    }
}

const MAX_DIM: usize = 4;

impl ConvexBody {
    pub fn axis_box(lo: Vec<Q>, hi: Vec<Q>, lo_closed: Vec<bool>, hi_closed: Vec<bool>) -> Result<Self> {
        let d = lo.len();
        if d == 0 || d > MAX_DIM || hi.len() != d || lo_closed.len() != d || hi_closed.len() != d {
            return Err(Error::InvalidBody("box dimensions inconsistent".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::InvalidBody("box requires lo < hi".into()));
        }
        Ok(ConvexBody {
            dim: d,
            shape: Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            },
        })
    }

    /// `[lo, hi)` in every coordinate.
    pub fn half_open_box(lo: Vec<Q>, hi: Vec<Q>) -> Result<Self> {
        let d = lo.len();
        Self::axis_box(lo, hi, vec![true; d], vec![false; d])
    }

    /// `[0, 1)^d`.
    pub fn unit_cube(d: usize) -> Result<Self> {
        Self::half_open_box(vec![Q::zero(); d], vec![Q::one(); d])
    }

    pub fn ball(center: Vec<Q>, radius: Q, closed: bool) -> Result<Self> {
        let d = center.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidBody("ball dimension must be 1..=4".into()));
        }
        if !radius.is_positive() {
            return Err(Error::InvalidBody("ball radius must be positive".into()));
        }
        Ok(ConvexBody {
            dim: d,
            shape: Shape::Ball {
                center,
                radius,
                closed,
            },
        })
    }

    /// Planar polytope from half-spaces; must be bounded with non-empty interior.
    pub fn polytope(faces: Vec<HalfSpace>) -> Result<Self> {
        if faces.iter().any(|f| f.a.len() != 2) {
            return Err(Error::Unsupported("polytopes are supported in d = 2 only".into()));
        }
        let body = ConvexBody {
            dim: 2,
            shape: Shape::Polytope { faces },
        };
        let verts = body.polygon_vertices()?;
        if verts.len() < 3 {
            return Err(Error::InvalidBody("polytope has empty interior".into()));
        }
        let centroid = centroid(&verts);
        if !body.interior(&centroid)? {
            return Err(Error::InvalidBody("polytope is unbounded or degenerate".into()));
        }
        Ok(body)
    }

    /// Closed convex hull of planar vertices.
    pub fn polygon(vertices: &[[Q; 2]]) -> Result<Self> {
        let hull = convex_hull(vertices);
        if hull.len() < 3 {
            return Err(Error::InvalidBody("polygon needs three non-collinear vertices".into()));
        }
        Self::polytope(faces_from_hull(&hull, false))
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let shape = v
            .get("shape")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::InvalidArgument("body needs a \"shape\"".into()))?;
        let field = |k: &str| {
            v.get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("body missing \"{k}\"")))
        };
        match shape {
            "box" => {
                let lo = parse_q_vec(field("lo")?)?;
                let hi = parse_q_vec(field("hi")?)?;
                let n = lo.len();
                let lc = parse_bool_vec(v.get("lo_closed"), n, true)?;
                let hc = parse_bool_vec(v.get("hi_closed"), n, false)?;
                Self::axis_box(lo, hi, lc, hc)
            }
            "ball" => {
                let c = parse_q_vec(field("center")?)?;
                let r = parse_q(field("radius")?)?;
                let closed = v.get("closed").and_then(Value::as_bool).unwrap_or(true);
                Self::ball(c, r, closed)
            }
            "polytope" => {
                if let Some(vs) = v.get("vertices") {
                    let pts = vs
                        .as_array()
                        .ok_or_else(|| Error::InvalidArgument("vertices must be an array".into()))?
                        .iter()
                        .map(|p| {
                            let c = parse_q_vec(p)?;
                            if c.len() != 2 {
                                return Err(Error::Unsupported("polytopes are planar".into()));
                            }
                            Ok([c[0], c[1]])
                        })
                        .collect::<Result<Vec<_>>>()?;
                    return Self::polygon(&pts);
                }
                let faces = field("halfplanes")?
                    .as_array()
                    .ok_or_else(|| Error::InvalidArgument("halfplanes must be an array".into()))?
                    .iter()
                    .map(|h| {
                        Ok(HalfSpace {
                            a: parse_q_vec(h.get("a").unwrap_or(&Value::Null))?,
                            b: parse_q(h.get("b").unwrap_or(&Value::Null))?,
                            strict: h.get("strict").and_then(Value::as_bool).unwrap_or(false),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::polytope(faces)
            }
            other => Err(Error::InvalidArgument(format!("unknown shape {other:?}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: n,
            });
        }
        Ok(())
    }

    pub fn contains(&self, x: &[Q]) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok(match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => (0..self.dim).all(|i| {
                let above = if lo_closed[i] { x[i] >= lo[i] } else { x[i] > lo[i] };
                let below = if hi_closed[i] { x[i] <= hi[i] } else { x[i] < hi[i] };
                above && below
            }),
            Shape::Ball {
                center,
                radius,
                closed,
            } => {
                let r2: Q = x.iter().zip(center).map(|(a, c)| (*a - *c) * (*a - *c)).sum();
                let rr = *radius * *radius;
                if *closed {
                    r2 <= rr
                } else {
                    r2 < rr
                }
            }
            Shape::Polytope { faces } => faces.iter().all(|f| {
                let v = f.value(x);
                if f.strict {
                    v < f.b
                } else {
                    v <= f.b
                }
            }),
        })
    }

    /// Membership in the open interior.
    pub fn interior(&self, x: &[Q]) -> Result<bool> {
        self.check_dim(x.len())?;
        Ok(match &self.shape {
            Shape::AxisBox { lo, hi, .. } => (0..self.dim).all(|i| x[i] > lo[i] && x[i] < hi[i]),
            Shape::Ball { center, radius, .. } => {
                let r2: Q = x.iter().zip(center).map(|(a, c)| (*a - *c) * (*a - *c)).sum();
                r2 < *radius * *radius
            }
            Shape::Polytope { faces } => faces.iter().all(|f| f.value(x) < f.b),
        })
    }

    /// Floating-point membership (no tolerance).
    pub fn contains_f64(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => (0..self.dim).all(|i| {
                let (l, h) = (q_to_f64(&lo[i]), q_to_f64(&hi[i]));
                let above = if lo_closed[i] { x[i] >= l } else { x[i] > l };
                let below = if hi_closed[i] { x[i] <= h } else { x[i] < h };
                above && below
            }),
            Shape::Ball {
                center,
                radius,
                closed,
            } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - q_to_f64(c)).powi(2))
                    .sum();
                let rr = q_to_f64(radius).powi(2);
                if *closed {
                    r2 <= rr
                } else {
                    r2 < rr
                }
            }
            Shape::Polytope { faces } => faces.iter().all(|f| {
                let v: f64 = f.a.iter().zip(x).map(|(a, x)| q_to_f64(a) * x).sum();
                let b = q_to_f64(&f.b);
                if f.strict {
                    v < b
                } else {
                    v <= b
                }
            }),
        }
    }

    pub fn interior_f64(&self, x: &[f64]) -> bool {
        match &self.shape {
            Shape::AxisBox { lo, hi, .. } => {
                (0..self.dim).all(|i| x[i] > q_to_f64(&lo[i]) && x[i] < q_to_f64(&hi[i]))
            }
            Shape::Ball { center, radius, .. } => {
                let r2: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - q_to_f64(c)).powi(2))
                    .sum();
                r2 < q_to_f64(radius).powi(2)
            }
            Shape::Polytope { faces } => faces.iter().all(|f| {
                let v: f64 = f.a.iter().zip(x).map(|(a, x)| q_to_f64(a) * x).sum();
                v < q_to_f64(&f.b)
            }),
        }
    }

    /// `D_T = { x T : x in D }`.
    pub fn dilate(&self, t: &DiagDilation) -> Result<Self> {
        self.check_dim(t.dim())?;
        let f = t.factors();
        let shape = match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => Shape::AxisBox {
                lo: lo.iter().zip(f).map(|(a, t)| *a * *t).collect(),
                hi: hi.iter().zip(f).map(|(a, t)| *a * *t).collect(),
                lo_closed: lo_closed.clone(),
                hi_closed: hi_closed.clone(),
            },
            Shape::Ball {
                center,
                radius,
                closed,
            } => {
                if !t.is_homothetic() {
                    return Err(Error::NonHomotheticBall);
                }
                Shape::Ball {
                    center: center.iter().map(|c| *c * f[0]).collect(),
                    radius: *radius * f[0],
                    closed: *closed,
                }
            }
            Shape::Polytope { faces } => Shape::Polytope {
                faces: faces
                    .iter()
                    .map(|h| HalfSpace {
                        a: h.a.iter().zip(f).map(|(a, t)| *a / *t).collect(),
                        b: h.b,
                        strict: h.strict,
                    })
                    .collect(),
            },
        };
        Ok(ConvexBody {
            dim: self.dim,
            shape,
        })
    }

    /// `D + v`.
    pub fn translate(&self, v: &[Q]) -> Result<Self> {
        self.check_dim(v.len())?;
        let shape = match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => Shape::AxisBox {
                lo: lo.iter().zip(v).map(|(a, b)| *a + *b).collect(),
                hi: hi.iter().zip(v).map(|(a, b)| *a + *b).collect(),
                lo_closed: lo_closed.clone(),
                hi_closed: hi_closed.clone(),
            },
            Shape::Ball {
                center,
                radius,
                closed,
            } => Shape::Ball {
                center: center.iter().zip(v).map(|(a, b)| *a + *b).collect(),
                radius: *radius,
                closed: *closed,
            },
            Shape::Polytope { faces } => Shape::Polytope {
                faces: faces
                    .iter()
                    .map(|h| HalfSpace {
                        b: h.b + h.value(v),
                        a: h.a.clone(),
                        strict: h.strict,
                    })
                    .collect(),
            },
        };
        Ok(ConvexBody {
            dim: self.dim,
            shape,
        })
    }

    /// Pushes every closed face outwards and every open face inwards by `delta`
    /// (balls: radius scaled by `1 +/- delta`). For small enough `delta` the
    /// lattice points are unchanged and all of them become interior points.
    pub fn interior_padding(&self, delta: Q) -> Self {
        let shape = match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => Shape::AxisBox {
                lo: lo
                    .iter()
                    .zip(lo_closed)
                    .map(|(l, c)| if *c { *l - delta } else { *l + delta })
                    .collect(),
                hi: hi
                    .iter()
                    .zip(hi_closed)
                    .map(|(h, c)| if *c { *h + delta } else { *h - delta })
                    .collect(),
                lo_closed: vec![false; self.dim],
                hi_closed: vec![false; self.dim],
            },
            Shape::Ball {
                center,
                radius,
                closed,
            } => Shape::Ball {
                center: center.clone(),
                radius: if *closed {
                    *radius * (Q::one() + delta)
                } else {
                    *radius * (Q::one() - delta)
                },
                closed: false,
            },
            Shape::Polytope { faces } => Shape::Polytope {
                faces: faces
                    .iter()
                    .map(|h| HalfSpace {
                        a: h.a.clone(),
                        b: if h.strict { h.b - delta } else { h.b + delta },
                        strict: true,
                    })
                    .collect(),
            },
        };
        ConvexBody {
            dim: self.dim,
            shape,
        }
    }

    /// Same body with every face closed.
    pub fn closure(&self) -> Self {
        let shape = match &self.shape {
            Shape::AxisBox { lo, hi, .. } => Shape::AxisBox {
                lo: lo.clone(),
                hi: hi.clone(),
                lo_closed: vec![true; self.dim],
                hi_closed: vec![true; self.dim],
            },
            Shape::Ball { center, radius, .. } => Shape::Ball {
                center: center.clone(),
                radius: *radius,
                closed: true,
            },
            Shape::Polytope { faces } => Shape::Polytope {
                faces: faces
                    .iter()
                    .map(|h| HalfSpace {
                        strict: false,
                        ..h.clone()
                    })
                    .collect(),
            },
        };
        ConvexBody {
            dim: self.dim,
            shape,
        }
    }

    /// Closed axis-aligned bounding box.
    pub fn bbox(&self) -> (Vec<Q>, Vec<Q>) {
        match &self.shape {
            Shape::AxisBox { lo, hi, .. } => (lo.clone(), hi.clone()),
            Shape::Ball { center, radius, .. } => (
                center.iter().map(|c| *c - *radius).collect(),
                center.iter().map(|c| *c + *radius).collect(),
            ),
            Shape::Polytope { .. } => {
                let v = self.polygon_vertices().unwrap_or_default();
                let lo = (0..2)
                    .map(|i| v.iter().map(|p| p[i]).min().unwrap_or_default())
                    .collect();
                let hi = (0..2)
                    .map(|i| v.iter().map(|p| p[i]).max().unwrap_or_default())
                    .collect();
                (lo, hi)
            }
        }
    }

    pub fn bbox_f64(&self) -> (Vec<f64>, Vec<f64>) {
        let (lo, hi) = self.bbox();
        (lo.iter().map(q_to_f64).collect(), hi.iter().map(q_to_f64).collect())
    }

    /// A rational point of the interior.
    pub fn interior_point(&self) -> Vec<Q> {
        match &self.shape {
            Shape::AxisBox { lo, hi, .. } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| (*l + *h) / Q::from_integer(2))
                .collect(),
            Shape::Ball { center, .. } => center.clone(),
            Shape::Polytope { .. } => centroid(&self.polygon_vertices().unwrap_or_default()).to_vec(),
        }
    }

    /// Largest Euclidean norm of a point of the closure.
    pub fn max_norm(&self) -> f64 {
        match &self.shape {
            Shape::AxisBox { lo, hi, .. } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| q_to_f64(l).abs().max(q_to_f64(h).abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Shape::Ball { center, radius, .. } => {
                center.iter().map(|c| q_to_f64(c).powi(2)).sum::<f64>().sqrt() + q_to_f64(radius)
            }
            Shape::Polytope { .. } => self
                .polygon_vertices()
                .unwrap_or_default()
                .iter()
                .map(|p| q_to_f64(&p[0]).hypot(q_to_f64(&p[1])))
                .fold(0.0, f64::max),
        }
    }

    /// `{s - t : s, t in D}`.
    pub fn difference_body(&self) -> Result<Self> {
        match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => {
                let w: Vec<Q> = hi.iter().zip(lo).map(|(h, l)| *h - *l).collect();
                let closed: Vec<bool> = lo_closed.iter().zip(hi_closed).map(|(a, b)| *a && *b).collect();
                Self::axis_box(w.iter().map(|x| -*x).collect(), w, closed.clone(), closed)
            }
            Shape::Ball { radius, closed, .. } => {
                Self::ball(vec![Q::zero(); self.dim], *radius * Q::from_integer(2), *closed)
            }
            Shape::Polytope { faces } => {
                let v = self.polygon_vertices()?;
                let mut diffs = Vec::with_capacity(v.len() * v.len());
                for p in &v {
                    for q in &v {
                        diffs.push([p[0] - q[0], p[1] - q[1]]);
                    }
                }
                let hull = convex_hull(&diffs);
                // open faces only when every face of D is open; mixed flags give the closure
                let strict = faces.iter().all(|f| f.strict);
                Self::polytope(faces_from_hull(&hull, strict))
            }
        }
    }

    /// `Z^d ∩ D` in lexicographic order.
    pub fn lattice_points(&self, budget: Budget) -> Result<Vec<Vec<i64>>> {
        let ranges: Vec<(i64, i64)> = match &self.shape {
            Shape::AxisBox {
                lo,
                hi,
                lo_closed,
                hi_closed,
            } => (0..self.dim)
                .map(|i| {
                    let a = if lo_closed[i] { q_ceil(&lo[i]) } else { q_floor(&lo[i]) + 1 };
                    let b = if hi_closed[i] { q_floor(&hi[i]) } else { q_ceil(&hi[i]) - 1 };
                    (a, b)
                })
                .collect(),
            _ => {
                let (lo, hi) = self.bbox();
                lo.iter().zip(&hi).map(|(l, h)| (q_ceil(l), q_floor(h))).collect()
            }
        };
        let is_box = matches!(self.shape, Shape::AxisBox { .. });
        let mut total: u128 = 1;
        for (a, b) in &ranges {
            if b < a {
                return Ok(Vec::new());
            }
            total = total.saturating_mul((b - a + 1) as u128);
        }
        budget.check("lattice_points", total)?;
        let mut out = Vec::with_capacity(if is_box { total as usize } else { 0 });
        let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        let mut qx = vec![Q::zero(); self.dim];
        loop {
            let keep = is_box || {
                for (q, c) in qx.iter_mut().zip(&cur) {
                    *q = Q::from_integer(*c as i128);
                }
                self.contains(&qx)?
            };
            if keep {
                out.push(cur.clone());
            }
            let mut i = self.dim;
            loop {
                if i == 0 {
                    return Ok(out);
                }
                i -= 1;
                if cur[i] < ranges[i].1 {
                    cur[i] += 1;
                    break;
                }
                cur[i] = ranges[i].0;
            }
        }
    }

    /// Vertices (counter-clockwise) of a planar polytope or box.
    pub fn polygon_vertices(&self) -> Result<Vec<[Q; 2]>> {
        match &self.shape {
            Shape::Polytope { faces } => {
                let mut pts = Vec::new();
                for (i, f) in faces.iter().enumerate() {
                    for g in &faces[i + 1..] {
                        let det = f.a[0] * g.a[1] - f.a[1] * g.a[0];
                        if det.is_zero() {
                            continue;
                        }
                        let x = (f.b * g.a[1] - f.a[1] * g.b) / det;
                        let y = (f.a[0] * g.b - f.b * g.a[0]) / det;
                        let p = [x, y];
                        if faces.iter().all(|h| h.value(&p) <= h.b) {
                            pts.push(p);
                        }
                    }
                }
                Ok(convex_hull(&pts))
            }
            Shape::AxisBox { lo, hi, .. } if self.dim == 2 => Ok(vec![
                [lo[0], lo[1]],
                [hi[0], lo[1]],
                [hi[0], hi[1]],
                [lo[0], hi[1]],
            ]),
            _ => Err(Error::Unsupported("vertex enumeration needs a planar polytope".into())),
        }
    }

    /// Euclidean distance from `x` to the boundary of the body.
    pub fn boundary_distance_f64(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::AxisBox { lo, hi, .. } => {
                let (lo, hi): (Vec<f64>, Vec<f64>) =
                    (lo.iter().map(q_to_f64).collect(), hi.iter().map(q_to_f64).collect());
                let inside = (0..self.dim).all(|i| x[i] >= lo[i] && x[i] <= hi[i]);
                if inside {
                    (0..self.dim)
                        .map(|i| (x[i] - lo[i]).min(hi[i] - x[i]))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    (0..self.dim)
                        .map(|i| (lo[i] - x[i]).max(x[i] - hi[i]).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            }
            Shape::Ball { center, radius, .. } => {
                let r: f64 = x
                    .iter()
                    .zip(center)
                    .map(|(a, c)| (a - q_to_f64(c)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                (r - q_to_f64(radius)).abs()
            }
            Shape::Polytope { faces } => {
                let inside = faces.iter().all(|f| {
                    f.a.iter().zip(x).map(|(a, x)| q_to_f64(a) * x).sum::<f64>() <= q_to_f64(&f.b)
                });
                if inside {
                    faces
                        .iter()
                        .map(|f| {
                            let a: Vec<f64> = f.a.iter().map(q_to_f64).collect();
                            let n = a[0].hypot(a[1]);
                            (q_to_f64(&f.b) - a[0] * x[0] - a[1] * x[1]) / n
                        })
                        .fold(f64::INFINITY, f64::min)
                } else {
                    let v: Vec<[f64; 2]> = self
                        .polygon_vertices()
                        .unwrap_or_default()
                        .iter()
                        .map(|p| [q_to_f64(&p[0]), q_to_f64(&p[1])])
                        .collect();
                    (0..v.len())
                        .map(|i| segment_distance([x[0], x[1]], v[i], v[(i + 1) % v.len()]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    /// Length of the longest chord parallel to the unit vector `u`.
    pub fn chord_length(&self, u: &[f64]) -> Result<f64> {
        self.check_dim(u.len())?;
        Ok(match &self.shape {
            Shape::AxisBox { lo, hi, .. } => (0..self.dim)
                .filter(|&i| u[i] != 0.0)
                .map(|i| q_to_f64(&(hi[i] - lo[i])) / u[i].abs())
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { radius, .. } => 2.0 * q_to_f64(radius),
            Shape::Polytope { .. } => {
                let delta = self.difference_body()?;
                let Shape::Polytope { faces } = delta.shape else {
                    unreachable!("difference of a polytope is a polytope")
                };
                faces
                    .iter()
                    .filter_map(|f| {
                        let au = q_to_f64(&f.a[0]) * u[0] + q_to_f64(&f.a[1]) * u[1];
                        (au > 0.0).then(|| q_to_f64(&f.b) / au)
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        })
    }

    fn parallel_to_boundary(&self, u: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        match &self.shape {
            Shape::AxisBox { .. } => self.dim > 1 && u.iter().any(|c| c.abs() < TOL),
            Shape::Ball { .. } => false,
            Shape::Polytope { .. } => {
                let v = self.polygon_vertices().unwrap_or_default();
                (0..v.len()).any(|i| {
                    let (p, q) = (v[i], v[(i + 1) % v.len()]);
                    let e = [q_to_f64(&(q[0] - p[0])), q_to_f64(&(q[1] - p[1]))];
                    let n = e[0].hypot(e[1]);
                    (u[0] * e[1] - u[1] * e[0]).abs() < TOL * n
                })
            }
        }
    }

    /// Direction `u` not parallel to a boundary segment, the longest chord
    /// `lambda` parallel to it, and `P = lambda u` on the boundary of the
    /// difference body.
    pub fn direction_and_length(&self) -> Result<DirectionInfo> {
        if matches!(self.shape, Shape::Ball { .. }) || self.dim == 1 {
            let mut u = vec![0.0; self.dim];
            u[0] = 1.0;
            return self.direction_and_length_with(&u);
        }
        for k in 1..10_000u32 {
            let u = scan_direction(self.dim, k);
            if !self.parallel_to_boundary(&u) {
                return self.direction_and_length_with(&u);
            }
        }
        Err(Error::Unsupported("no admissible direction found".into()))
    }

    pub fn direction_and_length_with(&self, u: &[f64]) -> Result<DirectionInfo> {
        self.check_dim(u.len())?;
        let n = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::InvalidArgument("zero direction".into()));
        }
        let u: Vec<f64> = u.iter().map(|c| c / n).collect();
        if self.parallel_to_boundary(&u) {
            return Err(Error::DirectionParallel);
        }
        let lambda = self.chord_length(&u)?;
        let p = u.iter().map(|c| c * lambda).collect();
        Ok(DirectionInfo { u, lambda, p })
    }

    /// A boundary point `t'` with `t' + l u` also on the boundary.
    pub fn chord_anchor(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
        let lambda = self.chord_length(u)?;
        if !(l > 0.0) || l > lambda * (1.0 + 1e-15) {
            return Err(Error::ChordTooLong {
                requested: l,
                max: lambda,
            });
        }
        let l = l.min(lambda);
        match &self.shape {
            Shape::Ball { center, radius, .. } => {
                let r = q_to_f64(radius);
                let h = (r * r - l * l / 4.0).max(0.0).sqrt();
                let w = orthonormal_complement(u);
                let w = w.first().cloned().unwrap_or_else(|| vec![0.0; self.dim]);
                Ok((0..self.dim)
                    .map(|i| q_to_f64(&center[i]) - 0.5 * l * u[i] - h * w[i])
                    .collect())
            }
            Shape::AxisBox { lo, hi, .. } => {
                // start from the corner the chord leaves, slide along the binding face
                let j = (0..self.dim)
                    .filter(|&i| u[i] != 0.0)
                    .min_by(|&a, &b| {
                        let la = q_to_f64(&(hi[a] - lo[a])) / u[a].abs();
                        let lb = q_to_f64(&(hi[b] - lo[b])) / u[b].abs();
                        la.total_cmp(&lb)
                    })
                    .ok_or(Error::InvalidArgument("zero direction".into()))?;
                let mut t: Vec<f64> = (0..self.dim)
                    .map(|i| {
                        if u[i] >= 0.0 {
                            q_to_f64(&lo[i])
                        } else {
                            q_to_f64(&hi[i])
                        }
                    })
                    .collect();
                let w = q_to_f64(&(hi[j] - lo[j]));
                let sigma = w - l * u[j].abs();
                t[j] += sigma * u[j].signum();
                Ok(t)
            }
            Shape::Polytope { .. } => self.polygon_chord_anchor(u, l),
        }
    }

    fn polygon_chord_anchor(&self, u: &[f64], l: f64) -> Result<Vec<f64>> {
        let Shape::Polytope { faces } = &self.shape else {
            unreachable!()
        };
        let faces: Vec<([f64; 2], f64)> = faces
            .iter()
            .map(|f| ([q_to_f64(&f.a[0]), q_to_f64(&f.a[1])], q_to_f64(&f.b)))
            .collect();
        let w = [-u[1], u[0]];
        // chord on the line s w + tau u
        let chord = |s: f64| -> Option<(f64, f64)> {
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for (a, b) in &faces {
                let au = a[0] * u[0] + a[1] * u[1];
                let rhs = b - s * (a[0] * w[0] + a[1] * w[1]);
                if au.abs() < 1e-300 {
                    if rhs < 0.0 {
                        return None;
                    }
                } else if au > 0.0 {
                    hi = hi.min(rhs / au);
                } else {
                    lo = lo.max(rhs / au);
                }
            }
            (hi >= lo).then_some((lo, hi))
        };
        let len = |s: f64| chord(s).map_or(0.0, |(a, b)| b - a);
        let verts = self.polygon_vertices()?;
        let proj: Vec<f64> = verts
            .iter()
            .map(|p| q_to_f64(&p[0]) * w[0] + q_to_f64(&p[1]) * w[1])
            .collect();
        let s_min = proj.iter().cloned().fold(f64::INFINITY, f64::min);
        let s_max = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        // concave chord length: ternary search for its maximiser
        let (mut a, mut b) = (s_min, s_max);
        for _ in 0..200 {
            let m1 = a + (b - a) / 3.0;
            let m2 = b - (b - a) / 3.0;
            if len(m1) < len(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        let s_star = 0.5 * (a + b);
        let (mut lo, mut hi) = (s_min, s_star);
        while hi - lo > 1e-15 * (1.0 + s_min.abs().max(s_star.abs())) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if len(mid) < l {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s = hi;
        let (tau0, _) = chord(s).ok_or_else(|| Error::Certification("chord bisection left the body".into()))?;
        Ok(vec![s * w[0] + tau0 * u[0], s * w[1] + tau0 * u[1]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionInfo {
    pub u: Vec<f64>,
    pub lambda: f64,
    pub p: Vec<f64>,
}

/// Deterministic direction sequence with irrational angular increments.
fn scan_direction(d: usize, k: u32) -> Vec<f64> {
    let k = f64::from(k);
    if d == 2 {
        let golden = 0.618_033_988_749_894_9;
        let ang = (k * golden).fract() * std::f64::consts::PI;
        return vec![ang.cos(), ang.sin()];
    }
    let roots = [2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt(), 7f64.sqrt()];
    let v: Vec<f64> = roots[..d].iter().map(|r| (k * r).fract() - 0.5).collect();
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / n).collect()
}

/// Orthonormal basis of the complement of the unit vector `u` (Gram-Schmidt).
pub fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    if d == 2 {
        return vec![vec![-u[1], u[0]]];
    }
    let mut basis: Vec<Vec<f64>> = vec![u.to_vec()];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for b in &basis {
            let p: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in e.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let n = e.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(e.into_iter().map(|c| c / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.split_off(1)
}

fn segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ax = [x[0] - a[0], x[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ax[0] * ab[0] + ax[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (ax[0] - t * ab[0]).hypot(ax[1] - t * ab[1])
}

fn centroid(v: &[[Q; 2]]) -> [Q; 2] {
    if v.is_empty() {
        return [Q::zero(), Q::zero()];
    }
    let n = Q::from_integer(v.len() as i128);
    [
        v.iter().map(|p| p[0]).sum::<Q>() / n,
        v.iter().map(|p| p[1]).sum::<Q>() / n,
    ]
}

fn cross(o: &[Q; 2], a: &[Q; 2], b: &[Q; 2]) -> Q {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Counter-clockwise convex hull without collinear points (monotone chain).
pub fn convex_hull(points: &[[Q; 2]]) -> Vec<[Q; 2]> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[Q; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[Q; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn faces_from_hull(hull: &[[Q; 2]], strict: bool) -> Vec<HalfSpace> {
    (0..hull.len())
        .map(|i| {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            let a = vec![q[1] - p[1], p[0] - q[0]];
            let b = a[0] * p[0] + a[1] * p[1];
            HalfSpace { a, b, strict }
        })
        .collect()
}
