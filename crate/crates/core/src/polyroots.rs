//! Real roots of univariate polynomials of moderate degree.
//!
//! Roots come from the eigenvalues of the companion matrix followed by a
//! Newton polish. Near-coincident eigenvalues (which is how a double root
//! shows up in floating point) are merged when the polynomial really has a
//! multiple root there.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix};

use crate::{Error, Result};

pub const MAX_DEGREE: usize = 64;

/// Roots closer than this (relative to `max(1, |x|)`) form one cluster.
const CLUSTER_TOL: f64 = 1e-8;
/// Imaginary parts below `IMAG_TOL * max(1, |z|)` are treated as rounding.
const IMAG_TOL: f64 = 1e-8;
/// Radius inside which eigenvalues are tested for a genuine multiple root.
const MULTIPLE_TOL: f64 = 1e-5;
/// Interval endpoint exclusion width.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// Polynomial with real coefficients in ascending order of degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    /// Builds a polynomial from ascending coefficients. Trailing zeros are
    /// trimmed; an all-zero input gives the zero polynomial.
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::DegreeTooLarge(coeffs.len() - 1));
        }
        Ok(Self { coeffs })
    }

    /// Trimmed polynomial without the degree cap, for internal arithmetic.
    fn raw(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self::raw(vec![c])
    }

    /// `c · x^k`.
    pub fn monomial(c: f64, k: usize) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        Self::raw(v)
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(1.0), |p, &r| &p * &Self::raw(vec![-r, 1.0]))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::raw(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, t: f64) -> Self {
        Self::raw(self.coeffs.iter().map(|c| c * t).collect())
    }

    /// `Σ |c_k| |x|^k`, the natural scale of rounding error in `eval`.
    pub fn abs_eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// All real roots with multiplicities.
    pub fn real_roots(&self) -> Result<RootSet> {
        real_roots(self)
    }

    pub fn roots_in_interval(&self, lo: f64, hi: f64) -> Result<RootSet> {
        roots_in_interval(self, lo, hi)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match k {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}x")?,
                _ => write!(f, "{a}x^{k}")?,
            }
        }
        Ok(())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::raw((0..len).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Poly::raw((0..len).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::raw(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RootSet {
    /// Sorted ascending.
    pub roots: Vec<Root>,
    /// Total real multiplicity equals the degree of the polynomial.
    pub all_real: bool,
    /// Roots dropped by [`roots_in_interval`] for sitting on an endpoint.
    pub boundary_roots: Vec<f64>,
}

impl RootSet {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.value).collect()
    }

    /// Number of distinct roots.
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Roots of odd multiplicity, i.e. those where the polynomial changes sign.
    pub fn sign_changes(&self) -> usize {
        self.roots.iter().filter(|r| r.multiplicity % 2 == 1).count()
    }
}

#[inline]
fn scale_of(x: f64) -> f64 {
    x.abs().max(1.0)
}

/// A few Newton steps on `p`, keeping the iterate only while `|p|` shrinks.
fn polish(p: &Poly, dp: &Poly, mut x: f64, steps: usize) -> f64 {
    let mut fx = p.eval(x).abs();
    for _ in 0..steps {
        if fx == 0.0 {
            break;
        }
        let d = dp.eval(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let y = x - p.eval(x) / d;
        let fy = p.eval(y).abs();
        if !(fy < fx) {
            break;
        }
        x = y;
        fx = fy;
    }
    x
}

/// Eigenvalues of the companion matrix of a polynomial with nonzero
/// constant term, after rescaling the variable by a power of two so the
/// roots have magnitude near one.
fn companion_roots(p: &Poly) -> Result<Vec<Complex<f64>>> {
    let d = p.degree();
    let lead = p.leading();
    let radius = (0..d)
        .map(|k| (p.coeff(k) / lead).abs().powf(1.0 / (d - k) as f64))
        .fold(0.0, f64::max);
    let s = if radius > 0.0 && radius.is_finite() {
        2f64.powi(radius.log2().round() as i32)
    } else {
        1.0
    };
    // q(y) = p(s y) / (lead s^d), monic
    let c: Vec<f64> = (0..d)
        .map(|k| p.coeff(k) / lead * s.powi(k as i32 - d as i32))
        .collect();
    if d == 1 {
        return Ok(vec![Complex::new(-c[0] * s, 0.0)]);
    }
    let q = Poly::raw(c.iter().copied().chain([1.0]).collect());
    // QR can stall on root sets symmetric about the origin; retry on a
    // shifted variable when it does.
    for shift in [0.0, 0.1, -0.23, 0.37, -0.5] {
        let shifted = taylor_shift(&q, shift);
        let lead = shifted.leading();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for i in 1..d {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..d {
            m[(i, d - 1)] = -shifted.coeff(i) / lead;
        }
        balance(&mut m);
        let Some(schur) = m.try_schur(f64::EPSILON, 100 * d) else {
            continue;
        };
        let ev = schur.complex_eigenvalues();
        if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Ok(ev.iter().map(|z| (z + shift) * s).collect());
        }
    }
    Err(Error::EigenFailure)
}

/// Diagonal similarity by powers of two that equalizes row and column
/// norms; leaves eigenvalues unchanged and greatly improves their accuracy
/// for companion matrices with widely varying coefficients.
fn balance(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    let radix = 2.0f64;
    let sqrdx = radix * radix;
    loop {
        let mut done = true;
        for i in 0..d {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..d {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / radix;
            let mut f = 1.0;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..d {
                    m[(i, j)] *= g;
                }
                for j in 0..d {
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// `p(y + t)` as a polynomial in `y`.
fn taylor_shift(p: &Poly, t: f64) -> Poly {
    if t == 0.0 {
        return p.clone();
    }
    let mut c = p.coeffs.clone();
    let d = c.len();
    for i in 0..d {
        for k in (i..d - 1).rev() {
            c[k] += t * c[k + 1];
        }
    }
    Poly::raw(c)
}

/// Tries to confirm that a tight cluster of `m` eigenvalues centred at `x0`
/// is a single root of multiplicity `m`: locate the nearby zero of the
/// `(m-1)`-th derivative and check `p` vanishes there to rounding accuracy.
fn confirm_multiple(p: &Poly, m: usize, x0: f64) -> Option<f64> {
    let mut d = p.clone();
    for _ in 0..(m - 1) {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut x = x0;
    for _ in 0..8 {
        let slope = dd.eval(x);
        if slope == 0.0 || !slope.is_finite() {
            break;
        }
        let step = d.eval(x) / slope;
        x -= step;
        if step.abs() <= f64::EPSILON * scale_of(x) {
            break;
        }
    }
    if !x.is_finite() || (x - x0).abs() > MULTIPLE_TOL * scale_of(x0) {
        return None;
    }
    let tol = 64.0 * f64::EPSILON * p.abs_eval(x);
    (p.eval(x).abs() <= tol).then_some(x)
}

/// All real roots of `p`, sorted, with multiplicities.
pub fn real_roots(p: &Poly) -> Result<RootSet> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    if p.degree() > MAX_DEGREE {
        return Err(Error::DegreeTooLarge(p.degree()));
    }
    let degree = p.degree();
    let mut found: Vec<Root> = Vec::new();

    // exact zero roots
    let zeros = p.coeffs.iter().take_while(|&&c| c == 0.0).count();
    if zeros > 0 {
        found.push(Root {
            value: 0.0,
            multiplicity: zeros,
        });
    }
    let q = Poly::raw(p.coeffs[zeros..].to_vec());
    let even = q.degree() >= 2 && q.coeffs.iter().skip(1).step_by(2).all(|&c| c == 0.0);
    if even {
        // q(x) = h(x²): take ±√y over the positive roots y of h
        let h = Poly::raw(q.coeffs.iter().step_by(2).copied().collect());
        let dq = q.derivative();
        for r in real_roots(&h)?.roots {
            if r.value > 0.0 {
                let x = polish(&q, &dq, r.value.sqrt(), 3);
                for v in [-x, x] {
                    found.push(Root {
                        value: v,
                        multiplicity: r.multiplicity,
                    });
                }
            }
        }
    } else if q.degree() >= 1 {
        let dq = q.derivative();
        let mut cands = companion_roots(&q)?;
        cands.retain(|z| z.im.abs() <= MULTIPLE_TOL * scale_of(z.norm()));
        cands.sort_by(|a, b| a.re.total_cmp(&b.re));

        // single-linkage clusters along the real axis
        let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
        for z in cands {
            match clusters.last_mut() {
                Some(c) if (z - *c.last().unwrap()).norm() <= MULTIPLE_TOL * scale_of(z.re) => {
                    c.push(z)
                }
                _ => clusters.push(vec![z]),
            }
        }

        let mut reals: Vec<Root> = Vec::new();
        for c in clusters {
            let m = c.len();
            let mean = c.iter().map(|z| z.re).sum::<f64>() / m as f64;
            if m >= 2 {
                if let Some(x) = confirm_multiple(&q, m, mean) {
                    reals.push(Root {
                        value: x,
                        multiplicity: m,
                    });
                    continue;
                }
            }
            for z in c {
                if z.im.abs() <= IMAG_TOL * scale_of(z.norm()) {
                    reals.push(Root {
                        value: polish(&q, &dq, z.re, 3),
                        multiplicity: 1,
                    });
                }
            }
        }
        reals.sort_by(|a, b| a.value.total_cmp(&b.value));
        for r in reals {
            match found.last_mut() {
                Some(last) if (r.value - last.value).abs() < CLUSTER_TOL * scale_of(r.value) => {
                    let total = last.multiplicity + r.multiplicity;
                    last.value = (last.value * last.multiplicity as f64
                        + r.value * r.multiplicity as f64)
                        / total as f64;
                    last.multiplicity = total;
                }
                _ => found.push(r),
            }
        }
    }
    found.sort_by(|a, b| a.value.total_cmp(&b.value));
    let total: usize = found.iter().map(|r| r.multiplicity).sum();
    Ok(RootSet {
        roots: found,
        all_real: total == degree,
        boundary_roots: Vec::new(),
    })
}

/// Real roots strictly inside `(lo, hi)`. Roots within `1e-10` of either
/// endpoint are moved to `boundary_roots`; `all_real` still describes the
/// whole polynomial.
pub fn roots_in_interval(p: &Poly, lo: f64, hi: f64) -> Result<RootSet> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "interval ({lo}, {hi}) is empty"
        )));
    }
    let all = real_roots(p)?;
    let mut out = RootSet {
        roots: Vec::new(),
        all_real: all.all_real,
        boundary_roots: Vec::new(),
    };
    for r in all.roots {
        let near = |e: f64| e.is_finite() && (r.value - e).abs() <= BOUNDARY_TOL;
        if near(lo) || near(hi) {
            out.boundary_roots.push(r.value);
        } else if r.value > lo && r.value < hi {
            out.roots.push(r);
        }
    }
    Ok(out)
}

/// Horner evaluation; free-function form of [`Poly::eval`].
pub fn eval(p: &Poly, x: f64) -> f64 {
    p.eval(x)
}
