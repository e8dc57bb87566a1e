//! Exact polynomials and polynomial differential forms in up to three variables.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combinatorics::{binomial, factorial, merge, merge_sign, subset_index, subsets};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Fallback for huge numerators/denominators.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub type Exp = [u8; 3];

/// Polynomial with rational coefficients, keyed by exponent triple.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Poly {
    terms: BTreeMap<Exp, Q>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial([0; 3], c)
    }

    pub fn monomial(e: Exp, c: Q) -> Self {
        let mut p = Self::zero();
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    /// The coordinate function `x_i`.
    pub fn var(i: usize) -> Self {
        let mut e = [0; 3];
        e[i] = 1;
        Self::monomial(e, Q::one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &Q)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn add_scaled(&mut self, c: &Q, other: &Poly) {
        if c.is_zero() {
            return;
        }
        for (e, v) in &other.terms {
            let entry = self.terms.entry(*e).or_insert_with(Q::zero);
            *entry += c * v;
            if entry.is_zero() {
                self.terms.remove(e);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_scaled(&Q::one(), other);
        p
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ea, va) in &self.terms {
            for (eb, vb) in &other.terms {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                let entry = out.terms.entry(e).or_insert_with(Q::zero);
                *entry += va * vb;
            }
        }
        out.terms.retain(|_, v| !v.is_zero());
        out
    }

    pub fn deriv(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (e, v) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                out.terms.insert(f, v * q(e[i] as i64));
            }
        }
        out
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (e, v) in &self.terms {
            let mut t = v.clone();
            for (i, &a) in e.iter().enumerate() {
                for _ in 0..a {
                    t *= &x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, v)| {
                let mut t = to_f64(v);
                for (i, &a) in e.iter().enumerate() {
                    if a > 0 {
                        t *= x[i].powi(a as i32);
                    }
                }
                t
            })
            .sum()
    }

    /// Substitute `x_i = offset_i + sum_j mat[i][j] t_j`.
    pub fn compose_affine(&self, offset: &[Q], mat: &[Vec<Q>]) -> Poly {
        let affine: Vec<Poly> = offset
            .iter()
            .zip(mat)
            .map(|(o, row)| {
                let mut p = Poly::constant(o.clone());
                for (j, c) in row.iter().enumerate() {
                    p.add_scaled(c, &Poly::var(j));
                }
                p
            })
            .collect();
        let mut out = Poly::zero();
        for (e, v) in &self.terms {
            let mut t = Poly::constant(v.clone());
            for (i, &a) in e.iter().enumerate() {
                for _ in 0..a {
                    t = t.mul(&affine[i]);
                }
            }
            out.add_scaled(&Q::one(), &t);
        }
        out
    }

    /// Exact integral over the reference `m`-simplex `{t_i >= 0, sum t_i <= 1}`.
    pub fn integrate_simplex(&self, m: usize) -> Q {
        let mut acc = Q::zero();
        for (e, v) in &self.terms {
            debug_assert!(e[m.min(3)..].iter().all(|&a| a == 0));
            let num: u128 = e.iter().map(|&a| factorial(a as usize)).product();
            let total: usize = e.iter().map(|&a| a as usize).sum();
            let den = factorial(total + m);
            acc += v * Q::new(BigInt::from(num), BigInt::from(den));
        }
        acc
    }

    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            terms: self.terms.iter().map(|(e, v)| (*e, to_f64(v))).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|v| v.abs()).max().unwrap_or_else(Q::zero)
    }
}

/// Floating-point copy of a polynomial for fast evaluation.
#[derive(Clone, Debug, Default)]
pub struct CompiledPoly {
    terms: Vec<(Exp, f64)>,
}

impl CompiledPoly {
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for i in 0..3 {
                for _ in 0..e[i] {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Polynomial `k`-form in `n` variables, components indexed by the
/// lexicographic `k`-subsets of `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyForm {
    pub n: usize,
    pub k: usize,
    pub comps: Vec<Poly>,
}

impl PolyForm {
    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            comps: vec![Poly::zero(); binomial(n, k)],
        }
    }

    /// `p dx_I` for a sorted index set `I`.
    pub fn from_component(n: usize, set: &[usize], p: Poly) -> Self {
        let mut f = Self::zero(n, set.len());
        f.comps[subset_index(n, set)] = p;
        f
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Poly::is_zero)
    }

    pub fn degree(&self) -> usize {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn add_scaled(&mut self, c: &Q, other: &PolyForm) {
        assert_eq!((self.n, self.k), (other.n, other.k));
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.add_scaled(c, b);
        }
    }

    pub fn scale(&self, c: &Q) -> PolyForm {
        PolyForm {
            n: self.n,
            k: self.k,
            comps: self.comps.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// Exterior derivative.
    pub fn d(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.n, self.k + 1);
        if self.k >= self.n {
            return out;
        }
        let sets = subsets(self.n, self.k);
        for (set, p) in sets.iter().zip(&self.comps) {
            if p.is_zero() {
                continue;
            }
            for i in 0..self.n {
                if let Some(sign) = merge_sign(&[i], set) {
                    let target = subset_index(self.n, &merge(&[i], set));
                    out.comps[target].add_scaled(&q(sign as i64), &p.deriv(i));
                }
            }
        }
        out
    }

    pub fn wedge(&self, other: &PolyForm) -> PolyForm {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = PolyForm::zero(n, self.k + other.k);
        if self.k + other.k > n {
            return out;
        }
        let sa = subsets(n, self.k);
        let sb = subsets(n, other.k);
        for (a, pa) in sa.iter().zip(&self.comps) {
            if pa.is_zero() {
                continue;
            }
            for (b, pb) in sb.iter().zip(&other.comps) {
                if pb.is_zero() {
                    continue;
                }
                if let Some(sign) = merge_sign(a, b) {
                    let t = subset_index(n, &merge(a, b));
                    out.comps[t].add_scaled(&q(sign as i64), &pa.mul(pb));
                }
            }
        }
        out
    }

    /// Koszul operator: contraction with the position vector field.
    pub fn koszul(&self) -> PolyForm {
        let mut out = PolyForm::zero(self.n, self.k.saturating_sub(1));
        if self.k == 0 {
            return out;
        }
        for (set, p) in subsets(self.n, self.k).iter().zip(&self.comps) {
            for (pos, &i) in set.iter().enumerate() {
                let rest: Vec<usize> = set.iter().copied().filter(|&j| j != i).collect();
                let sign = if pos % 2 == 0 { 1 } else { -1 };
                let t = subset_index(self.n, &rest);
                out.comps[t].add_scaled(&q(sign), &p.mul(&Poly::var(i)));
            }
        }
        out
    }

    /// Pullback by `x = offset + mat t`, `mat` of shape `n x m`.
    pub fn pullback_affine(&self, offset: &[Q], mat: &[Vec<Q>], m: usize) -> PolyForm {
        let mut out = PolyForm::zero(m, self.k);
        if self.k > m {
            return out;
        }
        let src = subsets(self.n, self.k);
        let dst = subsets(m, self.k);
        for (rows, p) in src.iter().zip(&self.comps) {
            if p.is_zero() {
                continue;
            }
            let composed = p.compose_affine(offset, mat);
            for (t, cols) in dst.iter().enumerate() {
                let det = minor_q(mat, rows, cols);
                if !det.is_zero() {
                    out.comps[t].add_scaled(&det, &composed);
                }
            }
        }
        out
    }

    /// Integral of a top-degree form over the reference `n`-simplex, with the
    /// standard orientation.
    pub fn integrate(&self) -> Q {
        assert_eq!(self.k, self.n, "only top forms integrate");
        self.comps[0].integrate_simplex(self.n)
    }

    /// Coefficients keyed by `(component, exponent)`.
    pub fn flatten(&self) -> BTreeMap<(usize, Exp), Q> {
        let mut m = BTreeMap::new();
        for (c, p) in self.comps.iter().enumerate() {
            for (e, v) in p.terms() {
                m.insert((c, *e), v.clone());
            }
        }
        m
    }

    pub fn compile(&self) -> Vec<CompiledPoly> {
        self.comps.iter().map(Poly::compile).collect()
    }
}

/// Determinant of the submatrix `mat[rows, cols]` (size at most 3).
pub fn minor_q(mat: &[Vec<Q>], rows: &[usize], cols: &[usize]) -> Q {
    let e = |i: usize, j: usize| &mat[rows[i]][cols[j]];
    match rows.len() {
        0 => Q::one(),
        1 => e(0, 0).clone(),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => unreachable!("minors of size > 3"),
    }
}

/// Floating-point minor, same conventions as [`minor_q`].
pub fn minor(mat: &[[f64; 3]; 3], rows: &[usize], cols: &[usize]) -> f64 {
    let e = |i: usize, j: usize| mat[rows[i]][cols[j]];
    match rows.len() {
        0 => 1.0,
        1 => e(0, 0),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)) - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => unreachable!("minors of size > 3"),
    }
}

/// All forms `x^alpha dx_I` with `|alpha| <= r` in `n` variables.
pub fn full_monomial_forms(n: usize, r: usize, k: usize) -> Vec<PolyForm> {
    if n == 0 {
        return if k == 0 {
            vec![PolyForm::from_component(0, &[], Poly::constant(Q::one()))]
        } else {
            Vec::new()
        };
    }
    let mut out = Vec::new();
    for deg in 0..=r {
        for alpha in crate::combinatorics::multi_indices(n, deg) {
            let mut e = [0u8; 3];
            for (i, &a) in alpha.iter().enumerate() {
                e[i] = a as u8;
            }
            for set in subsets(n, k) {
                out.push(PolyForm::from_component(n, &set, Poly::monomial(e, Q::one())));
            }
        }
    }
    out
}
