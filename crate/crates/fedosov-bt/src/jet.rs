//! Truncated Taylor expansions of smooth complex-valued functions at a chart
//! point ("chart jets").
//!
//! A jet of order `N` in complex dimension `n` stores coefficients `c_{A,B}`
//! for monomials `x^A xbar^B` with `|A| + |B| <= N`, where `x = z - z0` and
//! `xbar = conj(z) - conj(z0)` are the chart offsets. Jets form the
//! coefficient algebra of the Weyl bundle machinery; every geometric object
//! (metric, Christoffel symbols, curvature, flat-section data) is carried as
//! a jet so that the whole pipeline stays exact at jet level.
//!
//! Truncation discipline: a binary operation on jets of logical orders
//! `N1, N2` yields order `min(N1, N2)`; derivatives lower the order by one.
//! A jet flagged `exact` is a complete polynomial (all omitted coefficients
//! are genuinely zero), and keeps its order under differentiation. Reading a
//! derivative of an order-0 inexact jet is a programming error and panics.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::Scalar;

/// Maximum supported complex dimension.
pub const MAX_N: usize = 3;
const MAX_VARS: usize = 2 * MAX_N;

/// Exponent tuple: slots `0..MAX_N` are holomorphic, `MAX_N..` antiholomorphic.
pub type Exps = [u8; MAX_VARS];

const NO_INDEX: u32 = u32::MAX;
/// Product index tables are only built while they stay small.
const PROD_TABLE_LIMIT: usize = 700;

/// Monomial enumeration shared by all jets of a given `(n, order)`.
pub struct JetShape {
    pub n: usize,
    pub order: usize,
    pub exps: Vec<Exps>,
    index: HashMap<Exps, u32>,
    /// `down[v][i]`: index of `exps[i] - e_v`, or `NO_INDEX`.
    down: Vec<Vec<u32>>,
    /// `up[v][i]`: index of `exps[i] + e_v`, or `NO_INDEX` (order overflow).
    up: Vec<Vec<u32>>,
    /// Index of the conjugate monomial (holomorphic/antiholomorphic swap).
    conj: Vec<u32>,
    /// Flattened `len x len` product index table, if small enough.
    prod: Option<Vec<u32>>,
}

impl JetShape {
    /// Cached shape lookup.
    pub fn get(n: usize, order: usize) -> Arc<JetShape> {
        assert!(n >= 1 && n <= MAX_N, "dimension {n} out of range 1..={MAX_N}");
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetShape>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry((n, order))
            .or_insert_with(|| Arc::new(JetShape::build(n, order)))
            .clone()
    }

    fn build(n: usize, order: usize) -> JetShape {
        // Active variable slots: holomorphic at 0..n, antiholomorphic at
        // MAX_N..MAX_N+n.
        let vars: Vec<usize> = (0..n).chain(MAX_N..MAX_N + n).collect();
        let mut exps: Vec<Exps> = Vec::new();
        // Graded order: total degree ascending, lexicographic within a degree.
        for d in 0..=order {
            let mut cur = [0u8; MAX_VARS];
            enumerate_degree(&mut exps, &mut cur, &vars, 0, d as u8);
        }
        let mut index = HashMap::with_capacity(exps.len() * 2);
        for (i, e) in exps.iter().enumerate() {
            index.insert(*e, i as u32);
        }
        let lookup = |e: &Exps| index.get(e).copied().unwrap_or(NO_INDEX);

        let mut down = vec![vec![NO_INDEX; exps.len()]; MAX_VARS];
        let mut up = vec![vec![NO_INDEX; exps.len()]; MAX_VARS];
        for (i, e) in exps.iter().enumerate() {
            for &v in &vars {
                if e[v] > 0 {
                    let mut f = *e;
                    f[v] -= 1;
                    down[v][i] = lookup(&f);
                }
                let mut f = *e;
                f[v] += 1;
                up[v][i] = lookup(&f);
            }
        }
        let conj = exps
            .iter()
            .map(|e| {
                let mut f = [0u8; MAX_VARS];
                for k in 0..MAX_N {
                    f[k] = e[MAX_N + k];
                    f[MAX_N + k] = e[k];
                }
                lookup(&f)
            })
            .collect();

        let prod = if exps.len() <= PROD_TABLE_LIMIT {
            let m = exps.len();
            let mut t = vec![NO_INDEX; m * m];
            for i in 0..m {
                for j in 0..m {
                    let mut f = [0u8; MAX_VARS];
                    let mut tot = 0usize;
                    for v in 0..MAX_VARS {
                        f[v] = exps[i][v] + exps[j][v];
                        tot += f[v] as usize;
                    }
                    if tot <= order {
                        t[i * m + j] = lookup(&f);
                    }
                }
            }
            Some(t)
        } else {
            None
        };

        JetShape { n, order, exps, index, down, up, conj, prod }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn index_of(&self, e: &Exps) -> Option<usize> {
        self.index.get(e).map(|&i| i as usize)
    }

    fn degree(&self, i: usize) -> usize {
        self.exps[i].iter().map(|&x| x as usize).sum()
    }
}

fn enumerate_degree(out: &mut Vec<Exps>, cur: &mut Exps, vars: &[usize], pos: usize, rem: u8) {
    if pos == vars.len() - 1 {
        cur[vars[pos]] = rem;
        out.push(*cur);
        cur[vars[pos]] = 0;
        return;
    }
    for d in (0..=rem).rev() {
        cur[vars[pos]] = d;
        enumerate_degree(out, cur, vars, pos + 1, rem - d);
    }
    cur[vars[pos]] = 0;
}

/// Truncated Taylor expansion at a chart point.
#[derive(Clone)]
pub struct ChartJet<S: Scalar> {
    shape: Arc<JetShape>,
    coeffs: Vec<S>,
    /// Logical truncation order (<= ambient shape order).
    ord: usize,
    /// Complete polynomial: coefficients beyond `ord` are genuinely zero.
    exact: bool,
}

impl<S: Scalar> ChartJet<S> {
    pub fn zero(shape: &Arc<JetShape>) -> Self {
        ChartJet {
            shape: shape.clone(),
            coeffs: vec![S::zero(); shape.len()],
            ord: shape.order,
            exact: true,
        }
    }

    pub fn constant(shape: &Arc<JetShape>, c: S) -> Self {
        let mut j = Self::zero(shape);
        j.coeffs[0] = c;
        j
    }

    /// The chart function `z^i` expanded at base value `z0_i`: `z0_i + x_i`.
    pub fn variable_h(shape: &Arc<JetShape>, i: usize, base: S) -> Self {
        assert!(i < shape.n);
        let mut j = Self::constant(shape, base);
        let mut e = [0u8; MAX_VARS];
        e[i] = 1;
        let idx = shape.index_of(&e).expect("order >= 1 required for variables");
        j.coeffs[idx] = S::one();
        j
    }

    /// The chart function `conj(z^j)` expanded at its base value.
    pub fn variable_ah(shape: &Arc<JetShape>, j: usize, base: S) -> Self {
        assert!(j < shape.n);
        let mut jt = Self::constant(shape, base);
        let mut e = [0u8; MAX_VARS];
        e[MAX_N + j] = 1;
        let idx = shape.index_of(&e).expect("order >= 1 required for variables");
        jt.coeffs[idx] = S::one();
        jt
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    pub fn n(&self) -> usize {
        self.shape.n
    }

    pub fn ord(&self) -> usize {
        self.ord
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn mark_truncated(&mut self) {
        self.exact = false;
    }

    /// Value at the base point.
    pub fn value(&self) -> S {
        self.coeffs[0].clone()
    }

    /// Coefficient of `x^A xbar^B`. Panics when the monomial lies beyond the
    /// stored truncation order of an inexact jet ("access beyond N is an
    /// error"), and returns zero past the degree of an exact polynomial.
    pub fn coeff(&self, a: &[u8], b: &[u8]) -> S {
        assert!(a.len() == self.n() && b.len() == self.n());
        let mut e = [0u8; MAX_VARS];
        let mut deg = 0usize;
        for i in 0..self.n() {
            e[i] = a[i];
            e[MAX_N + i] = b[i];
            deg += (a[i] + b[i]) as usize;
        }
        if deg > self.ord {
            assert!(
                self.exact,
                "jet coefficient of degree {deg} requested beyond truncation order {}",
                self.ord
            );
            return S::zero();
        }
        match self.shape.index_of(&e) {
            Some(i) => self.coeffs[i].clone(),
            None => {
                assert!(self.exact, "monomial beyond ambient order on inexact jet");
                S::zero()
            }
        }
    }

    /// Largest total degree carrying a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let mut d = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                d = d.max(self.shape.degree(i));
            }
        }
        d
    }

    fn align(&self, other: &Self) -> (usize, bool) {
        assert!(
            Arc::ptr_eq(&self.shape, &other.shape)
                || (self.shape.n == other.shape.n && self.shape.order == other.shape.order),
            "jet shape mismatch"
        );
        match (self.exact, other.exact) {
            (true, true) => (self.shape.order, true),
            (true, false) => (other.ord, false),
            (false, true) => (self.ord, false),
            (false, false) => (self.ord.min(other.ord), false),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (ord, exact) = self.align(other);
        let mut out = self.clone();
        for (c, o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c = c.clone() + o.clone();
        }
        out.ord = ord;
        out.exact = exact;
        if !exact {
            out.clear_beyond(ord);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = c.clone() * s.clone();
        }
        out
    }

    fn clear_beyond(&mut self, ord: usize) {
        for i in 0..self.coeffs.len() {
            if self.shape.degree(i) > ord {
                self.coeffs[i] = S::zero();
            }
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (ord, mut exact) = self.align(other);
        if exact && self.degree() + other.degree() > self.shape.order {
            // The complete product does not fit in the ambient shape.
            exact = false;
        }
        let shape = &self.shape;
        let m = shape.len();
        let mut coeffs = vec![S::zero(); m];
        let nz_a: Vec<usize> = (0..m).filter(|&i| !self.coeffs[i].is_zero()).collect();
        let nz_b: Vec<usize> = (0..m).filter(|&i| !other.coeffs[i].is_zero()).collect();
        if let Some(prod) = &shape.prod {
            for &i in &nz_a {
                let row = &prod[i * m..(i + 1) * m];
                let ca = &self.coeffs[i];
                for &j in &nz_b {
                    let t = row[j];
                    if t != NO_INDEX {
                        let t = t as usize;
                        if shape.degree(t) <= ord || exact {
                            coeffs[t] =
                                coeffs[t].clone() + ca.clone() * other.coeffs[j].clone();
                        }
                    }
                }
            }
        } else {
            for &i in &nz_a {
                let ca = &self.coeffs[i];
                for &j in &nz_b {
                    let mut e = [0u8; MAX_VARS];
                    let mut deg = 0usize;
                    for v in 0..MAX_VARS {
                        e[v] = shape.exps[i][v] + shape.exps[j][v];
                        deg += e[v] as usize;
                    }
                    if deg <= ord || (exact && deg <= shape.order) {
                        if let Some(t) = shape.index_of(&e) {
                            coeffs[t] =
                                coeffs[t].clone() + ca.clone() * other.coeffs[j].clone();
                        }
                    }
                }
            }
        }
        ChartJet { shape: shape.clone(), coeffs, ord, exact }
    }

    /// Holomorphic derivative d/dz^i.
    pub fn d_h(&self, i: usize) -> Self {
        assert!(i < self.n());
        self.derive(i)
    }

    /// Antiholomorphic derivative d/dzbar^j.
    pub fn d_ah(&self, j: usize) -> Self {
        assert!(j < self.n());
        self.derive(MAX_N + j)
    }

    fn derive(&self, v: usize) -> Self {
        assert!(
            self.exact || self.ord > 0,
            "derivative of an order-0 truncated jet: jet order exhausted"
        );
        let shape = &self.shape;
        let mut coeffs = vec![S::zero(); shape.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = shape.exps[i][v];
            if e > 0 {
                let t = shape.down[v][i] as usize;
                coeffs[t] = c.clone() * S::from_int(e as i64);
            }
        }
        ChartJet {
            shape: shape.clone(),
            coeffs,
            ord: if self.exact { self.ord } else { self.ord - 1 },
            exact: self.exact,
        }
    }

    /// Complex conjugate jet: swaps holomorphic/antiholomorphic indices and
    /// conjugates coefficients.
    pub fn conj(&self) -> Self {
        let shape = &self.shape;
        let mut coeffs = vec![S::zero(); shape.len()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                coeffs[shape.conj[i] as usize] = c.conj();
            }
        }
        ChartJet { shape: shape.clone(), coeffs, ord: self.ord, exact: self.exact }
    }

    /// Reciprocal `1/f` as a truncated series; requires `f(0) != 0`.
    pub fn recip(&self) -> Self {
        let c0 = self.value();
        assert!(!c0.is_zero(), "reciprocal of a jet vanishing at the base point");
        let inv0 = c0.inv();
        // u = f/c0 - 1 has no constant term; 1/f = (1/c0) sum (-u)^k.
        let u = self.scale(&inv0).sub(&Self::constant(&self.shape, S::one()));
        let mut acc = Self::constant(&self.shape, S::one());
        let mut pow = Self::constant(&self.shape, S::one());
        let ord = if self.exact { self.shape.order } else { self.ord };
        for _ in 0..ord {
            pow = pow.mul(&u).neg();
            acc = acc.add(&pow);
        }
        let mut out = acc.scale(&inv0);
        out.ord = ord;
        out.exact = false;
        out
    }

    /// `log(f)` up to its (dropped) additive constant `log f(0)`.
    ///
    /// Only derivatives of potentials ever enter the geometry, so the
    /// constant term is deliberately omitted; this keeps the exact-scalar
    /// mode closed under the operation.
    pub fn log_normalized(&self) -> Self {
        let c0 = self.value();
        assert!(!c0.is_zero(), "log of a jet vanishing at the base point");
        let inv0 = c0.inv();
        let u = self.scale(&inv0).sub(&Self::constant(&self.shape, S::one()));
        let mut acc = Self::zero(&self.shape);
        let mut pow = Self::constant(&self.shape, S::one());
        let ord = if self.exact { self.shape.order } else { self.ord };
        for k in 1..=ord {
            pow = pow.mul(&u);
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc = acc.add(&pow.scale(&S::from_ratio(sign, k as i64)));
        }
        acc.ord = ord;
        acc.exact = false;
        acc
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut out = Self::constant(&self.shape, S::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn truncate_to(&self, ord: usize) -> Self {
        let mut out = self.clone();
        if ord < out.ord || (out.exact && ord < out.shape.order) {
            out.ord = ord;
            out.exact = false;
            out.clear_beyond(ord);
        }
        out
    }

    pub fn is_zero_jet(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Largest coefficient magnitude (diagnostics only).
    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.abs_sq().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn iter_nonzero(&self) -> impl Iterator<Item = (&Exps, &S)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (&self.shape.exps[i], c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{C64, QC};

    fn sh(n: usize, order: usize) -> Arc<JetShape> {
        JetShape::get(n, order)
    }

    #[test]
    fn shape_enumeration_counts() {
        // dim 1, order N: (N+1)(N+2)/2 monomials in (x, xbar).
        assert_eq!(sh(1, 4).len(), 15);
        assert_eq!(sh(2, 2).len(), 15); // C(2+4,4)
    }

    #[test]
    fn product_and_derivative() {
        let shape = sh(1, 5);
        let z = ChartJet::<C64>::variable_h(&shape, 0, C64::new(2.0, 0.0));
        let zb = ChartJet::<C64>::variable_ah(&shape, 0, C64::new(2.0, 0.0));
        let f = z.mul(&z).mul(&zb); // z^2 zbar
        assert_eq!(f.value(), C64::new(8.0, 0.0));
        assert_eq!(f.d_h(0).value(), C64::new(8.0, 0.0)); // 2 z zbar at z=2
        assert_eq!(f.d_ah(0).value(), C64::new(4.0, 0.0)); // z^2 at z=2
        assert_eq!(f.d_h(0).d_h(0).value(), C64::new(4.0, 0.0)); // 2 zbar
        assert!(f.is_exact());
    }

    #[test]
    fn truncation_order_propagates() {
        let shape = sh(1, 6);
        let z = ChartJet::<C64>::variable_h(&shape, 0, C64::new(1.0, 0.0));
        let mut a = z.pow(2);
        a.mark_truncated();
        let mut b = z.pow(3);
        b.mark_truncated();
        let a = a.truncate_to(4);
        let b = b.truncate_to(3);
        let p = a.mul(&b);
        assert_eq!(p.ord(), 3);
        // Derivatives drop the order for inexact jets.
        assert_eq!(p.d_h(0).ord(), 2);
    }

    #[test]
    #[should_panic(expected = "jet order exhausted")]
    fn derivative_past_order_panics() {
        let shape = sh(1, 3);
        let z = ChartJet::<C64>::variable_h(&shape, 0, C64::new(1.0, 0.0));
        let mut f = z.pow(2);
        f.mark_truncated();
        let f = f.truncate_to(0);
        let _ = f.d_h(0);
    }

    #[test]
    fn exact_product_of_polynomials_is_exact() {
        let shape = sh(1, 8);
        let z = ChartJet::<QC>::variable_h(&shape, 0, QC::from_ints(1, 1));
        let p = z.pow(2).mul(&z.pow(3));
        assert!(p.is_exact());
        // Degree 5+4 = 9 > 8 overflows the ambient shape: no longer exact.
        let q = p.mul(&z.pow(4));
        assert!(!q.is_exact());
    }

    #[test]
    fn reciprocal_inverts() {
        let shape = sh(1, 7);
        let z = ChartJet::<QC>::variable_h(&shape, 0, QC::from_ratios(1, 2, 1, 3));
        let zb = z.conj();
        let s = ChartJet::constant(&shape, QC::one()).add(&z.mul(&zb));
        let r = s.recip();
        let p = s.mul(&r);
        let one = ChartJet::constant(&shape, QC::one()).truncate_to(p.ord());
        assert!(p.sub(&one).is_zero_jet());
    }

    #[test]
    fn log_derivative_matches_quotient() {
        // d/dz log(1 + z zbar) = zbar / (1 + z zbar), exactly at jet level.
        let shape = sh(1, 7);
        let z = ChartJet::<QC>::variable_h(&shape, 0, QC::from_ratios(1, 3, -2, 5));
        let zb = z.conj();
        let s = ChartJet::constant(&shape, QC::one()).add(&z.mul(&zb));
        let lhs = s.log_normalized().d_h(0);
        let rhs = zb.mul(&s.recip());
        let diff = lhs.sub(&rhs);
        let trunc = diff.ord();
        assert!(lhs.truncate_to(trunc).sub(&rhs.truncate_to(trunc)).is_zero_jet());
    }

    #[test]
    fn conjugation_is_an_involution() {
        let shape = sh(2, 4);
        let z0 = ChartJet::<QC>::variable_h(&shape, 0, QC::from_ints(1, 2));
        let z1 = ChartJet::<QC>::variable_h(&shape, 1, QC::from_ints(-1, 1));
        let f = z0.mul(&z1).add(&z1.conj().scale(&QC::i()));
        assert!(f.conj().conj().sub(&f).is_zero_jet());
    }
}
