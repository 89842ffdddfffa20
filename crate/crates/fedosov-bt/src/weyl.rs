//! Truncated formal Weyl algebra over chart jets.
//!
//! A [`WeylElement`] is a finite sum of monomials `hbar^r y^I ybar^J` with
//! [`ChartJet`] coefficients, graded by the *polarized weight*
//! `w = r + |J|` (so `|hbar| = 1`, `|ybar| = 1`, `|y| = 0`). Elements carry
//! two truncation caps: `w_max` on the polarized weight and `d_max` on the
//! `y`-degree. Operations drop (never misplace) overflow terms and record
//! that truncation occurred, because the Fedosov recursion intrinsically
//! generates higher grades.
//!
//! [`WeylForm`] attaches antisymmetrized `dz`/`dzbar` slots (form degree
//! <= 2 is all the construction needs). The fiberwise Wick product, the
//! Koszul differential `delta` with its normalized homotopy inverse, the
//! symbol map and the weight grading all live here; everything that needs a
//! metric takes the inverse-metric jets `omega^{jbar i}` as input.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::jet::{ChartJet, JetShape, MAX_N};
use crate::scalar::Scalar;

/// Monomial key `hbar^r y^I ybar^J` (exponent vectors, symmetric convention:
/// combinatorial factors are absorbed into the coefficients).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct TermKey {
    pub hbar: u8,
    pub y: [u8; MAX_N],
    pub yb: [u8; MAX_N],
}

impl TermKey {
    pub fn scalar() -> Self {
        TermKey { hbar: 0, y: [0; MAX_N], yb: [0; MAX_N] }
    }

    pub fn y_degree(&self) -> usize {
        self.y.iter().map(|&e| e as usize).sum()
    }

    pub fn yb_degree(&self) -> usize {
        self.yb.iter().map(|&e| e as usize).sum()
    }

    /// Polarized weight `r + |J|`.
    pub fn weight(&self) -> usize {
        self.hbar as usize + self.yb_degree()
    }
}

/// Inverse-metric jets `omega^{jbar i}`, indexed `[j][i]`, satisfying
/// `omega^{jbar i} omega_{i kbar} = delta^jbar_kbar`. The opposite-order
/// convention is `omega^{i jbar} = -omega^{jbar i}`.
pub type InverseMetric<S> = Vec<Vec<ChartJet<S>>>;

/// Finite sum of `hbar^r y^I ybar^J` monomials with jet coefficients.
#[derive(Clone)]
pub struct WeylElement<S: Scalar> {
    n: usize,
    pub w_max: usize,
    pub d_max: usize,
    shape: Arc<JetShape>,
    terms: BTreeMap<TermKey, ChartJet<S>>,
    truncated: bool,
}

impl<S: Scalar> WeylElement<S> {
    pub fn zero(n: usize, w_max: usize, d_max: usize, shape: &Arc<JetShape>) -> Self {
        assert!(n >= 1 && n <= MAX_N && n == shape.n);
        WeylElement {
            n,
            w_max,
            d_max,
            shape: shape.clone(),
            terms: BTreeMap::new(),
            truncated: false,
        }
    }

    /// Embeds a jet as the scalar (y-, ybar-, hbar-free) part.
    pub fn from_jet(n: usize, w_max: usize, d_max: usize, c: ChartJet<S>) -> Self {
        let shape = c.shape().clone();
        let mut e = Self::zero(n, w_max, d_max, &shape);
        e.insert(TermKey::scalar(), c);
        e
    }

    pub fn one(n: usize, w_max: usize, d_max: usize, shape: &Arc<JetShape>) -> Self {
        Self::from_jet(n, w_max, d_max, ChartJet::constant(shape, S::one()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn set_truncated(&mut self) {
        self.truncated = true;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &ChartJet<S>)> {
        self.terms.iter()
    }

    /// Same caps and shape, no terms; keeps the truncation flag.
    pub fn clone_empty(&self) -> Self {
        let mut e = self.clone();
        e.terms.clear();
        e
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero_jet())
    }

    /// Adds `c * hbar^r y^I ybar^J`, dropping cap overflow (recorded in the
    /// truncation flag).
    pub fn insert(&mut self, key: TermKey, c: ChartJet<S>) {
        if c.is_zero_jet() {
            return;
        }
        if key.weight() > self.w_max || key.y_degree() > self.d_max {
            self.truncated = true;
            return;
        }
        match self.terms.get_mut(&key) {
            Some(existing) => *existing = existing.add(&c),
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compat(other);
        let mut out = self.clone();
        out.truncated |= other.truncated;
        for (k, c) in &other.terms {
            out.insert(*k, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.neg();
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.scale(s);
        }
        out
    }

    pub fn scale_jet(&self, j: &ChartJet<S>) -> Self {
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        out.truncated = self.truncated;
        for (k, c) in &self.terms {
            out.insert(*k, c.mul(j));
        }
        out
    }

    /// Multiplication by `hbar^dr` (weight shift by `dr`).
    pub fn hbar_shift(&self, dr: usize) -> Self {
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        out.truncated = self.truncated;
        for (k, c) in &self.terms {
            let mut key = *k;
            key.hbar += dr as u8;
            out.insert(key, c.clone());
        }
        out
    }

    fn check_compat(&self, other: &Self) {
        assert!(
            self.n == other.n && self.w_max == other.w_max && self.d_max == other.d_max,
            "Weyl element dimension/cap mismatch"
        );
    }

    /// Exact projection onto polarized weight `m`.
    pub fn weight_component(&self, m: usize) -> Self {
        assert!(m <= self.w_max, "weight {m} beyond cap {}", self.w_max);
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        for (k, c) in &self.terms {
            if k.weight() == m {
                out.insert(*k, c.clone());
            }
        }
        out
    }

    pub fn max_weight(&self) -> usize {
        self.terms
            .iter()
            .filter(|(_, c)| !c.is_zero_jet())
            .map(|(k, _)| k.weight())
            .max()
            .unwrap_or(0)
    }

    /// Restriction to `y`-degree `<= d` (used when comparing quantities that
    /// are only exact below the truncation grade).
    pub fn restrict_y_degree(&self, d: usize) -> Self {
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        for (k, c) in &self.terms {
            if k.y_degree() <= d {
                out.insert(*k, c.clone());
            }
        }
        out
    }

    /// Symbol in formal mode: the `(r, 0, 0)` coefficients as a vector of
    /// jets indexed by the hbar power.
    pub fn symbol_formal(&self) -> Vec<ChartJet<S>> {
        let mut out = vec![ChartJet::zero(&self.shape); self.w_max + 1];
        for (k, c) in &self.terms {
            if k.y_degree() == 0 && k.yb_degree() == 0 {
                out[k.hbar as usize] = out[k.hbar as usize].add(c);
            }
        }
        out
    }

    /// Symbol in level-k mode: sets `y, ybar` to zero and evaluates
    /// `hbar = sqrt(-1)/k` (well defined since stored elements are
    /// polynomial in hbar).
    pub fn symbol_at_level(&self, k: u32) -> ChartJet<S> {
        let ih = S::i() * S::from_ratio(1, k as i64);
        let mut out = ChartJet::zero(&self.shape);
        for (key, c) in &self.terms {
            if key.y_degree() == 0 && key.yb_degree() == 0 {
                let mut f = S::one();
                for _ in 0..key.hbar {
                    f = f * ih.clone();
                }
                out = out.add(&c.scale(&f));
            }
        }
        out
    }

    /// Substitutes `hbar = sqrt(-1)/k`. Meaningful on finite-weight data
    /// (anything this library stores is polynomial in hbar); callers working
    /// with truncated weight series must validate the dropped tail
    /// themselves.
    pub fn eval_hbar(&self, k: u32) -> Self {
        let ih = S::i() * S::from_ratio(1, k as i64);
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        out.truncated = self.truncated;
        for (key, c) in &self.terms {
            let mut f = S::one();
            for _ in 0..key.hbar {
                f = f * ih.clone();
            }
            let mut nk = *key;
            nk.hbar = 0;
            out.insert(nk, c.scale(&f));
        }
        out
    }

    /// Classical (commutative) product: the contraction-free part of the
    /// Wick product.
    pub fn mul_classical(&self, other: &Self) -> Self {
        self.check_compat(other);
        let mut out = Self::zero(self.n, self.w_max, self.d_max, &self.shape);
        out.truncated = self.truncated || other.truncated;
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut key = *ka;
                key.hbar += kb.hbar;
                for v in 0..MAX_N {
                    key.y[v] += kb.y[v];
                    key.yb[v] += kb.yb[v];
                }
                out.insert(key, ca.mul(cb));
            }
        }
        out
    }

    /// Fiberwise Wick product
    /// `a * b = sum_j (hbar^j / j!) omega^{i1 jbar1} ... d^j a / dy^{i...} x
    /// d^j b / dybar^{j...}`, truncated to the caps.
    pub fn wick(&self, other: &Self, om_up: &InverseMetric<S>) -> Self {
        self.wick_min(other, om_up, 0)
    }

    /// Wick product keeping only contraction layers `j >= min_j`. The
    /// graded bracket uses `min_j = 1`: its `j = 0` layers cancel
    /// structurally, and skipping them keeps the cancellation exact in
    /// floating arithmetic.
    fn wick_min(&self, other: &Self, om_up: &InverseMetric<S>, min_j: usize) -> Self {
        self.check_compat(other);
        let n = self.n;
        let mut out = Self::zero(n, self.w_max, self.d_max, &self.shape);
        out.truncated = self.truncated || other.truncated;
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                // Layer j of the contraction: remaining y-exponents of a,
                // remaining ybar-exponents of b, accumulated coefficient.
                // Iterating single derivatives enumerates ordered index
                // tuples, so dividing by j! at emission reproduces the
                // formula exactly.
                let mut layer: Vec<([u8; MAX_N], [u8; MAX_N], ChartJet<S>)> =
                    vec![(ka.y, kb.yb, ca.mul(cb))];
                let mut fact: i64 = 1;
                let mut j: usize = 0;
                loop {
                    if j >= min_j {
                        let inv_fact = S::from_ratio(1, fact);
                        for (ya, jb, c) in &layer {
                            let mut key = TermKey {
                                hbar: ka.hbar + kb.hbar + j as u8,
                                y: *ya,
                                yb: *jb,
                            };
                            for v in 0..MAX_N {
                                key.y[v] += kb.y[v];
                                key.yb[v] += ka.yb[v];
                            }
                            out.insert(key, c.scale(&inv_fact));
                        }
                    }
                    // Next contraction layer.
                    let mut next: Vec<([u8; MAX_N], [u8; MAX_N], ChartJet<S>)> = Vec::new();
                    for (ya, jb, c) in &layer {
                        for i in 0..n {
                            if ya[i] == 0 {
                                continue;
                            }
                            for l in 0..n {
                                if jb[l] == 0 {
                                    continue;
                                }
                                // omega^{i lbar} = -omega^{lbar i}
                                let factor =
                                    S::from_int((ya[i] as i64) * (jb[l] as i64));
                                let coeff = c
                                    .mul(&om_up[l][i])
                                    .neg()
                                    .scale(&factor);
                                let mut ya2 = *ya;
                                ya2[i] -= 1;
                                let mut jb2 = *jb;
                                jb2[l] -= 1;
                                next.push((ya2, jb2, coeff));
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    layer = next;
                    j += 1;
                    fact *= j as i64;
                }
            }
        }
        out
    }

    /// Level-k Wick product: the Wick product followed by the evaluation
    /// `hbar = sqrt(-1)/k`.
    pub fn wick_at_level(&self, other: &Self, om_up: &InverseMetric<S>, k: u32) -> Self {
        self.wick(other, om_up).eval_hbar(k)
    }

    /// Fiberwise de Rham differential, a derivation with
    /// `delta(y^i) = dz^i`, `delta(ybar^j) = dzbar^j`.
    pub fn delta(&self) -> WeylForm<S> {
        self.delta10().add(&self.delta01())
    }

    pub fn delta10(&self) -> WeylForm<S> {
        let mut out = WeylForm::zero_like(self);
        for (k, c) in &self.terms {
            for i in 0..self.n {
                if k.y[i] == 0 {
                    continue;
                }
                let mut nk = *k;
                nk.y[i] -= 1;
                let coeff = c.scale(&S::from_int(k.y[i] as i64));
                out.accumulate(FormKey::dz(i), nk, coeff, self);
            }
        }
        out
    }

    pub fn delta01(&self) -> WeylForm<S> {
        let mut out = WeylForm::zero_like(self);
        for (k, c) in &self.terms {
            for j in 0..self.n {
                if k.yb[j] == 0 {
                    continue;
                }
                let mut nk = *k;
                nk.yb[j] -= 1;
                let coeff = c.scale(&S::from_int(k.yb[j] as i64));
                out.accumulate(FormKey::dzb(j), nk, coeff, self);
            }
        }
        out
    }

    /// Largest coefficient magnitude across all terms (diagnostics).
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }
}

/// Ascending-index wedge basis key: bitmask over `dz^i` and `dzbar^j` slots.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct FormKey {
    pub dz: u8,
    pub dzb: u8,
}

impl FormKey {
    pub fn scalar() -> Self {
        FormKey { dz: 0, dzb: 0 }
    }
    pub fn dz(i: usize) -> Self {
        FormKey { dz: 1 << i, dzb: 0 }
    }
    pub fn dzb(j: usize) -> Self {
        FormKey { dz: 0, dzb: 1 << j }
    }
    pub fn degree(&self) -> usize {
        (self.dz.count_ones() + self.dzb.count_ones()) as usize
    }
    pub fn holo_degree(&self) -> usize {
        self.dz.count_ones() as usize
    }
    pub fn anti_degree(&self) -> usize {
        self.dzb.count_ones() as usize
    }

    /// `dz^i wedge self`: resulting key and permutation sign, or `None`.
    pub fn wedge_dz(&self, i: usize) -> Option<(FormKey, i32)> {
        let bit = 1u8 << i;
        if self.dz & bit != 0 {
            return None;
        }
        let below = (self.dz & (bit - 1)).count_ones();
        let sign = if below % 2 == 0 { 1 } else { -1 };
        Some((FormKey { dz: self.dz | bit, dzb: self.dzb }, sign))
    }

    /// `dzbar^j wedge self`: passes over all dz factors first.
    pub fn wedge_dzb(&self, j: usize) -> Option<(FormKey, i32)> {
        let bit = 1u8 << j;
        if self.dzb & bit != 0 {
            return None;
        }
        let passed = self.dz.count_ones() + (self.dzb & (bit - 1)).count_ones();
        let sign = if passed % 2 == 0 { 1 } else { -1 };
        Some((FormKey { dz: self.dz, dzb: self.dzb | bit }, sign))
    }

    /// Full wedge `self ^ other` with sign.
    pub fn wedge(&self, other: &FormKey) -> Option<(FormKey, i32)> {
        // Move other's factors into self one at a time, right to left.
        let mut key = *other;
        let mut sign = 1i32;
        for j in (0..MAX_N).rev() {
            if self.dzb & (1 << j) != 0 {
                match key.wedge_dzb(j) {
                    Some((k2, s)) => {
                        key = k2;
                        sign *= s;
                    }
                    None => return None,
                }
            }
        }
        for i in (0..MAX_N).rev() {
            if self.dz & (1 << i) != 0 {
                match key.wedge_dz(i) {
                    Some((k2, s)) => {
                        key = k2;
                        sign *= s;
                    }
                    None => return None,
                }
            }
        }
        Some((key, sign))
    }
}

/// Weyl-element-valued differential form (degree <= 2 in practice).
#[derive(Clone)]
pub struct WeylForm<S: Scalar> {
    pub comps: BTreeMap<FormKey, WeylElement<S>>,
    n: usize,
    w_max: usize,
    d_max: usize,
    shape: Arc<JetShape>,
}

impl<S: Scalar> WeylForm<S> {
    pub fn zero_like(e: &WeylElement<S>) -> Self {
        WeylForm {
            comps: BTreeMap::new(),
            n: e.n,
            w_max: e.w_max,
            d_max: e.d_max,
            shape: e.shape.clone(),
        }
    }

    pub fn from_element(e: WeylElement<S>) -> Self {
        let mut f = Self::zero_like(&e);
        f.comps.insert(FormKey::scalar(), e);
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zero_element(&self) -> WeylElement<S> {
        WeylElement::zero(self.n, self.w_max, self.d_max, &self.shape)
    }

    pub fn comp(&self, key: FormKey) -> WeylElement<S> {
        self.comps
            .get(&key)
            .cloned()
            .unwrap_or_else(|| self.zero_element())
    }

    fn accumulate(&mut self, key: FormKey, tk: TermKey, c: ChartJet<S>, like: &WeylElement<S>) {
        let entry = self
            .comps
            .entry(key)
            .or_insert_with(|| WeylElement::zero(like.n, like.w_max, like.d_max, &like.shape));
        entry.insert(tk, c);
    }

    pub fn add_component(&mut self, key: FormKey, e: WeylElement<S>) {
        match self.comps.get_mut(&key) {
            Some(existing) => *existing = existing.add(&e),
            None => {
                self.comps.insert(key, e);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, e) in &other.comps {
            out.add_component(*k, e.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for e in out.comps.values_mut() {
            *e = e.neg();
        }
        out
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = self.clone();
        for e in out.comps.values_mut() {
            *e = e.scale(s);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|e| e.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.values().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn truncated(&self) -> bool {
        self.comps.values().any(|e| e.truncated())
    }

    /// Projection onto pure (1,0)-form degree one.
    pub fn part_10(&self) -> Self {
        self.filter(|k| k.degree() == 1 && k.holo_degree() == 1)
    }

    /// Projection onto pure (0,1)-form degree one.
    pub fn part_01(&self) -> Self {
        self.filter(|k| k.degree() == 1 && k.anti_degree() == 1)
    }

    fn filter(&self, pred: impl Fn(&FormKey) -> bool) -> Self {
        let mut out = self.clone();
        out.comps.retain(|k, _| pred(k));
        out
    }

    /// delta extended to forms (left wedge of the produced covector).
    pub fn delta10(&self) -> Self {
        let mut out = self.clone();
        out.comps.clear();
        for (fk, e) in &self.comps {
            for (tk, c) in &e.terms {
                for i in 0..self.n {
                    if tk.y[i] == 0 {
                        continue;
                    }
                    if let Some((nk, sign)) = fk.wedge_dz(i) {
                        let mut t2 = *tk;
                        t2.y[i] -= 1;
                        let coeff = c.scale(&S::from_int(sign as i64 * tk.y[i] as i64));
                        out.accumulate(nk, t2, coeff, e);
                    }
                }
            }
        }
        out
    }

    pub fn delta01(&self) -> Self {
        let mut out = self.clone();
        out.comps.clear();
        for (fk, e) in &self.comps {
            for (tk, c) in &e.terms {
                for j in 0..self.n {
                    if tk.yb[j] == 0 {
                        continue;
                    }
                    if let Some((nk, sign)) = fk.wedge_dzb(j) {
                        let mut t2 = *tk;
                        t2.yb[j] -= 1;
                        let coeff = c.scale(&S::from_int(sign as i64 * tk.yb[j] as i64));
                        out.accumulate(nk, t2, coeff, e);
                    }
                }
            }
        }
        out
    }

    pub fn delta(&self) -> Self {
        self.delta10().add(&self.delta01())
    }

    /// Normalized contraction homotopy for `delta^{1,0}`: on a monomial with
    /// `p` y-factors and `q` dz-factors it contracts one dz into a y with
    /// factor `1/(p+q)`. Requires holomorphic form degree exactly one; an
    /// antiholomorphic slot may ride along (the dz block sits first in the
    /// canonical wedge order, so its contraction carries no sign).
    pub fn delta_inv10(&self) -> WeylElement<S> {
        let f = self.delta_inv10_form();
        assert!(
            f.comps.keys().all(|k| k.degree() == 0),
            "delta_inv10 on a form with antiholomorphic slots: use delta_inv10_form"
        );
        f.comp(FormKey::scalar())
    }

    /// `delta^{1,0}`-homotopy on forms of holomorphic degree one; dzbar
    /// factors are spectators.
    pub fn delta_inv10_form(&self) -> WeylForm<S> {
        let mut out = self.clone();
        out.comps.clear();
        for (fk, e) in &self.comps {
            if e.is_zero() {
                continue;
            }
            assert!(
                fk.holo_degree() == 1,
                "delta_inv10 requires holomorphic form degree one"
            );
            let i = fk.dz.trailing_zeros() as usize;
            let nk = FormKey { dz: 0, dzb: fk.dzb };
            let mut ne = e.clone_empty();
            for (tk, c) in &e.terms {
                let p = tk.y_degree();
                let mut t2 = *tk;
                t2.y[i] += 1;
                ne.insert(t2, c.scale(&S::from_ratio(1, (p + 1) as i64)));
            }
            out.add_component(nk, ne);
        }
        out
    }

    /// Homotopy inverse of `delta^{0,1}` (ybar/dzbar count normalization).
    pub fn delta_inv01(&self) -> WeylElement<S> {
        let mut out = self.zero_element();
        for (fk, e) in &self.comps {
            if e.is_zero() {
                continue;
            }
            assert!(
                fk.degree() == 1 && fk.anti_degree() == 1,
                "delta_inv01 requires a pure (0,1)-form of degree one"
            );
            let j = fk.dzb.trailing_zeros() as usize;
            out.truncated |= e.truncated;
            for (tk, c) in &e.terms {
                let q = tk.yb_degree();
                let mut nk = *tk;
                nk.yb[j] += 1;
                out.insert(nk, c.scale(&S::from_ratio(1, (q + 1) as i64)));
            }
        }
        out
    }

    /// Left wedge by `dz^i` with coefficients multiplied by `c`.
    pub fn wedge_mul_dz(&self, i: usize, c: &ChartJet<S>) -> Self {
        let mut out = self.clone();
        out.comps.clear();
        for (fk, e) in &self.comps {
            if let Some((nk, sign)) = fk.wedge_dz(i) {
                let mut ne = e.scale_jet(c);
                if sign < 0 {
                    ne = ne.neg();
                }
                out.add_component(nk, ne);
            }
        }
        out
    }

    /// Form-valued Wick product with Koszul signs on the wedge part (fiber
    /// elements are even, so no extra sign appears).
    pub fn wick(&self, other: &Self, om_up: &InverseMetric<S>) -> Self {
        self.wick_min(other, om_up, 0)
    }

    fn wick_min(&self, other: &Self, om_up: &InverseMetric<S>, min_j: usize) -> Self {
        let mut out = self.clone();
        out.comps.clear();
        for (fa, ea) in &self.comps {
            for (fb, eb) in &other.comps {
                if let Some((key, sign)) = fa.wedge(fb) {
                    let mut prod = ea.wick_min(eb, om_up, min_j);
                    if sign < 0 {
                        prod = prod.neg();
                    }
                    out.add_component(key, prod);
                }
            }
        }
        out
    }

    /// Graded bracket `[self, other]` for the Wick product. The
    /// contraction-free layer cancels structurally and is skipped, which
    /// keeps the cancellation exact in floating arithmetic.
    pub fn bracket(&self, other: &Self, om_up: &InverseMetric<S>) -> Self {
        let deg_a = self.comps.keys().map(|k| k.degree()).max().unwrap_or(0);
        let deg_b = other.comps.keys().map(|k| k.degree()).max().unwrap_or(0);
        let ab = self.wick_min(other, om_up, 1);
        let ba = other.wick_min(self, om_up, 1);
        if (deg_a * deg_b) % 2 == 0 {
            ab.sub(&ba)
        } else {
            ab.add(&ba)
        }
    }

    /// Divides every term by hbar; panics if a negative power would appear
    /// (which signals a malformed Fedosov one-form).
    pub fn div_hbar(&self) -> Self {
        let mut out = self.clone();
        out.comps.clear();
        for (fk, e) in &self.comps {
            let mut ne = e.clone();
            ne.terms.clear();
            for (tk, c) in &e.terms {
                if c.is_zero_jet() {
                    continue;
                }
                assert!(
                    tk.hbar >= 1,
                    "negative hbar power produced: malformed I_BT bracket"
                );
                let mut nk = *tk;
                nk.hbar -= 1;
                ne.insert(nk, c.clone());
            }
            out.comps.insert(*fk, ne);
        }
        out
    }
}
