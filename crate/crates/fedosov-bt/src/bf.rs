//! The level-k Bargmann-Fock action and the differential operators built
//! from it.
//!
//! A monomial `hbar^r y^I ybar^{j_1..j_l}` of the finite-weight subbundle
//! acts on the Fock fiber (y-polynomials tensored with the chart frame of
//! `L^k`) by the Wick-ordering formula
//!
//! ```text
//! (sqrt(-1)/k)^{l+r} omega^{jbar_1 p_1} ... omega^{jbar_l p_l}
//!     d^l/dy^{p_1}..dy^{p_l} o m_{y^I},
//! ```
//!
//! multiplication first, derivatives second. Composing with the symbol map
//! gives the higher Kostant-Souriau operators
//! `P_{f,k,m}(s) = sigma_{L^k}((O_f)_m (*)_k O_s)`, their partial sums, the
//! alternative operator defined through `delta^{0,1}(hbar O_f)_{m+1}` and
//! the `dbar`-image formula used by the norm estimates.

use std::collections::BTreeMap;

use crate::fedosov::{
    apply_d_bt_level_k, flat_section_of_formal, flat_section_of_section, FedosovData,
    FlatSection,
};
use crate::geometry::{GeometryModel, LineSectionJet, TensorField};
use crate::jet::{ChartJet, JetShape, MAX_N};
use crate::scalar::Scalar;
use crate::weyl::{FormKey, WeylElement, WeylForm};

/// Element of the Bargmann-Fock fiber `W_X (x) L^k` at a point: a
/// y-polynomial with jet coefficients in the chart frame of `L^k`.
#[derive(Clone)]
pub struct FockElement<S: Scalar> {
    pub k: u32,
    pub d_max: usize,
    shape: std::sync::Arc<JetShape>,
    terms: BTreeMap<[u8; MAX_N], ChartJet<S>>,
    truncated: bool,
}

impl<S: Scalar> FockElement<S> {
    pub fn scalar(k: u32, g: ChartJet<S>, d_max: usize) -> Self {
        let shape = g.shape().clone();
        let mut terms = BTreeMap::new();
        if !g.is_zero_jet() {
            terms.insert([0u8; MAX_N], g);
        }
        FockElement { k, d_max, shape, terms, truncated: false }
    }

    pub fn zero_like(&self) -> Self {
        FockElement {
            k: self.k,
            d_max: self.d_max,
            shape: self.shape.clone(),
            terms: BTreeMap::new(),
            truncated: self.truncated,
        }
    }

    pub fn insert(&mut self, e: [u8; MAX_N], c: ChartJet<S>) {
        if c.is_zero_jet() {
            return;
        }
        let deg: usize = e.iter().map(|&x| x as usize).sum();
        if deg > self.d_max {
            self.truncated = true;
            return;
        }
        match self.terms.get_mut(&e) {
            Some(t) => *t = t.add(&c),
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u8; MAX_N], &ChartJet<S>)> {
        self.terms.iter()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert!(self.k == o.k);
        let mut out = self.clone();
        out.truncated |= o.truncated;
        for (e, c) in &o.terms {
            out.insert(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
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

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| c.is_zero_jet())
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Symbol `sigma_{L^k}`: the y-free coefficient.
    pub fn symbol(&self) -> ChartJet<S> {
        match self.terms.get(&[0u8; MAX_N]) {
            Some(c) => c.clone(),
            None => ChartJet::zero(&self.shape),
        }
    }

    /// Chern-Levi-Civita covariant derivative in the holomorphic direction
    /// `i`: `chern_d` on coefficients plus the Gamma action on y-slots.
    pub fn nabla10_dir(&self, geom: &GeometryModel<S>, i: usize) -> Self {
        let n = geom.n;
        let mut out = self.zero_like();
        for (e, c) in &self.terms {
            out.insert(*e, geom.chern_d(c, i, self.k));
            for kappa in 0..n {
                if e[kappa] == 0 {
                    continue;
                }
                for lambda in 0..n {
                    let mut e2 = *e;
                    e2[kappa] -= 1;
                    e2[lambda] += 1;
                    let coeff = c
                        .mul(&geom.gamma[kappa][i][lambda])
                        .scale(&S::from_int(e[kappa] as i64))
                        .neg();
                    out.insert(e2, coeff);
                }
            }
        }
        out
    }

    /// `dbar_j` on coefficients (the Fock fiber has no ybar slots and the
    /// Chern connection is (1,0) in the holomorphic frame).
    pub fn nabla01_dir(&self, j: usize) -> Self {
        let mut out = self.zero_like();
        for (e, c) in &self.terms {
            out.insert(*e, c.d_ah(j));
        }
        out
    }

    /// `(delta^{1,0})^{-1} nabla^{1,0}`: one step of the holomorphic Taylor
    /// completion.
    pub fn nabla_tilde10(&self, geom: &GeometryModel<S>) -> Self {
        let n = geom.n;
        let mut out = self.zero_like();
        for i in 0..n {
            let d = self.nabla10_dir(geom, i);
            for (e, c) in &d.terms {
                let p: usize = e.iter().map(|&x| x as usize).sum();
                let mut e2 = *e;
                e2[i] += 1;
                out.insert(e2, c.scale(&S::from_ratio(1, (p + 1) as i64)));
            }
        }
        out
    }
}

/// Fock-valued differential form (for the Bargmann-Fock connection).
#[derive(Clone)]
pub struct FockForm<S: Scalar> {
    pub comps: BTreeMap<FormKey, FockElement<S>>,
}

impl<S: Scalar> FockForm<S> {
    pub fn new() -> Self {
        FockForm { comps: BTreeMap::new() }
    }

    pub fn add_component(&mut self, key: FormKey, e: FockElement<S>) {
        match self.comps.get_mut(&key) {
            Some(t) => *t = t.add(&e),
            None => {
                self.comps.insert(key, e);
            }
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (k, e) in &o.comps {
            out.add_component(*k, e.clone());
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.values().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    pub fn part_01(&self) -> Self {
        let mut out = self.clone();
        out.comps.retain(|k, _| k.degree() == 1 && k.anti_degree() == 1);
        out
    }
}

impl<S: Scalar> Default for FockForm<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn level_power<S: Scalar>(k: u32, exp: i32) -> S {
    let base = S::i() * S::from_ratio(1, k as i64);
    let b = if exp >= 0 { base } else { base.inv() };
    let mut out = S::one();
    for _ in 0..exp.unsigned_abs() {
        out = out * b.clone();
    }
    out
}

/// The level-k Bargmann-Fock action of a finite-weight Weyl element on a
/// Fock element. `hbar_shift` adds to the hbar exponent of every term
/// before taking the level power (the connection one-form enters as
/// `(1/hbar) gamma`, which is the shift `-1`).
pub fn bf_action<S: Scalar>(
    alpha: &WeylElement<S>,
    beta: &FockElement<S>,
    geom: &GeometryModel<S>,
    hbar_shift: i32,
) -> FockElement<S> {
    let n = geom.n;
    let k = beta.k;
    let mut out = beta.zero_like();
    out.truncated |= alpha.truncated();
    for (ak, ac) in alpha.terms() {
        let l = ak.yb_degree();
        let power = level_power::<S>(k, l as i32 + ak.hbar as i32 + hbar_shift);
        for (be, bc) in beta.terms() {
            // Multiply by y^I first.
            let mut e = *be;
            for v in 0..MAX_N {
                e[v] += ak.y[v];
            }
            // Then apply the omega-contracted derivatives, one ybar slot at
            // a time.
            let mut layer: Vec<([u8; MAX_N], ChartJet<S>)> =
                vec![(e, ac.mul(bc).scale(&power))];
            for j in 0..n {
                for _ in 0..ak.yb[j] {
                    let mut next: Vec<([u8; MAX_N], ChartJet<S>)> = Vec::new();
                    for (e, c) in &layer {
                        for p in 0..n {
                            if e[p] == 0 {
                                continue;
                            }
                            let mut e2 = *e;
                            e2[p] -= 1;
                            let coeff = c
                                .mul(&geom.om_up[j][p])
                                .scale(&S::from_int(e[p] as i64));
                            next.push((e2, coeff));
                        }
                    }
                    layer = next;
                    if layer.is_empty() {
                        break;
                    }
                }
            }
            for (e, c) in layer {
                out.insert(e, c);
            }
        }
    }
    out
}

/// Form-valued Bargmann-Fock action (the form slots of `alpha` ride along).
pub fn bf_action_form<S: Scalar>(
    alpha: &WeylForm<S>,
    beta: &FockElement<S>,
    geom: &GeometryModel<S>,
    hbar_shift: i32,
) -> FockForm<S> {
    let mut out = FockForm::new();
    for (fk, e) in &alpha.comps {
        out.add_component(*fk, bf_action(e, beta, geom, hbar_shift));
    }
    out
}

/// The Bargmann-Fock connection
/// `D_{BF,k} = nabla + ((1/hbar) gamma_BT) (*)_k -` with
/// `gamma_BT = gamma_delta + I_BT`.
pub fn apply_d_bf<S: Scalar>(
    fock: &FockElement<S>,
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
) -> FockForm<S> {
    let mut out = FockForm::new();
    for i in 0..geom.n {
        out.add_component(FormKey::dz(i), fock.nabla10_dir(geom, i));
    }
    for j in 0..geom.n {
        out.add_component(FormKey::dzb(j), fock.nabla01_dir(j));
    }
    let gamma_delta = crate::geometry::gamma_delta_form(geom, fed.w_max, fed.d_max);
    let gamma_bt = gamma_delta.add(&fed.i_bt);
    out.add(&bf_action_form(&gamma_bt, fock, geom, -1))
}

/// The per-point operator pipeline for one (formal) function: geometry,
/// Fedosov data and the flat section, ready to act on section jets.
pub struct KsPipeline<S: Scalar> {
    pub geom: GeometryModel<S>,
    pub fed: FedosovData<S>,
    pub of: FlatSection<S>,
}

impl<S: Scalar> KsPipeline<S> {
    /// `f_parts` are the hbar coefficients of the (formal) function; a plain
    /// smooth function is the single-element slice.
    pub fn new(
        geom: GeometryModel<S>,
        fed: FedosovData<S>,
        f_parts: &[ChartJet<S>],
    ) -> Self {
        let of = flat_section_of_formal(f_parts, &geom, &fed);
        KsPipeline { geom, fed, of }
    }

    pub fn o_s(&self, s: &LineSectionJet<S>) -> FockElement<S> {
        flat_section_of_section(s, &self.geom, self.fed.d_max)
    }

    /// `P_{f,k,m}(s) = sigma_{L^k}((O_f)_m (*)_k O_s)` as a jet.
    pub fn ks_operator(&self, k: u32, m: usize, s: &LineSectionJet<S>) -> ChartJet<S> {
        assert!(s.k == k);
        let os = self.o_s(s);
        bf_action(&self.of.weights[m], &os, &self.geom, 0).symbol()
    }

    /// `P_{f,k,<=m}(s)`.
    pub fn ks_partial_sum(&self, k: u32, m: usize, s: &LineSectionJet<S>) -> ChartJet<S> {
        let os = self.o_s(s);
        let mut acc = ChartJet::zero(self.geom.shape());
        for w in &self.of.weights[0..=m] {
            acc = acc.add(&bf_action(w, &os, &self.geom, 0).symbol());
        }
        acc
    }

    /// The alternative operator read off the (2n)-form identity
    /// `P~(s) omega^n = nabla^{1,0} sigma(delta^{0,1}(hbar O_f)_{m+1}
    /// (*)_k O_s) n omega^{n-1}` (one-dimensional geometries).
    pub fn tilde_ks(&self, k: u32, m: usize, s: &LineSectionJet<S>) -> ChartJet<S> {
        assert!(self.geom.n == 1, "tilde operator is implemented for n = 1");
        assert!(m >= 1);
        let os = self.o_s(s);
        // (hbar O_f)_{m+1} = hbar (O_f)_m
        let shifted = self.of.weights[m].hbar_shift(1);
        let dd = WeylForm::from_element(shifted).delta01();
        let acted = bf_action_form(&dd, &os, &self.geom, 0);
        let a_1bar = acted
            .comps
            .get(&FormKey::dzb(0))
            .map(|e| e.symbol())
            .unwrap_or_else(|| ChartJet::zero(self.geom.shape()));
        // nabla^{1,0} of the L^k-valued (0,1)-form, divided by omega_{1 1bar}.
        let num = self.geom.chern_d(&a_1bar, 0, k);
        num.mul(&self.geom.om_up[0][0])
    }

    /// `dbar(P_{f,k,<=m} s) = sigma_{L^k}(delta^{0,1}(O_f)_{m+1} (*)_k O_s)`
    /// as the vector of `dzbar^j` components.
    pub fn dbar_partial_sum(&self, _k: u32, m: usize, s: &LineSectionJet<S>) -> Vec<ChartJet<S>> {
        assert!(m + 1 <= self.fed.w_max, "needs the weight m+1 component");
        let os = self.o_s(s);
        let dd = WeylForm::from_element(self.of.weights[m + 1].clone()).delta01();
        let acted = bf_action_form(&dd, &os, &self.geom, 0);
        (0..self.geom.n)
            .map(|j| {
                acted
                    .comps
                    .get(&FormKey::dzb(j))
                    .map(|e| e.symbol())
                    .unwrap_or_else(|| ChartJet::zero(self.geom.shape()))
            })
            .collect()
    }
}

/// Kostant-Souriau pre-quantum operator
/// `H_k(f) s = f s + (sqrt(-1)/k) nabla_{X_f} s` (holomorphic `s`, so only
/// the (1,0) part of the Hamiltonian field acts).
pub fn kostant_souriau_prequantum<S: Scalar>(
    geom: &GeometryModel<S>,
    f: &ChartJet<S>,
    k: u32,
    s: &LineSectionJet<S>,
) -> ChartJet<S> {
    assert!(s.holomorphic);
    let x = geom.hamiltonian_field(f);
    let mut der = ChartJet::zero(geom.shape());
    for i in 0..geom.n {
        der = der.add(&x.comps[i].mul(&geom.chern_d(&s.g, i, k)));
    }
    f.mul(&s.g).add(&der.scale(&(S::i() * S::from_ratio(1, k as i64))))
}

/// Closed-form weight-1 operator
/// `(sqrt(-1)/k) nabla_{X_f^{1,0}} s + (1/k) (Delta f) s`.
pub fn ks_oracle_m1<S: Scalar>(
    geom: &GeometryModel<S>,
    f: &ChartJet<S>,
    k: u32,
    s: &LineSectionJet<S>,
) -> ChartJet<S> {
    let x = geom.hamiltonian_field(f);
    let mut der = ChartJet::zero(geom.shape());
    for i in 0..geom.n {
        der = der.add(&x.comps[i].mul(&geom.chern_d(&s.g, i, k)));
    }
    let lap = geom.laplacian(f).mul(&s.g);
    der.scale(&(S::i() * S::from_ratio(1, k as i64)))
        .add(&lap.scale(&S::from_ratio(1, k as i64)))
}

/// Closed-form weight-2 operator
/// `(1/k^2)(-nabla_{G_f} s + sqrt(-1) nabla_{X_{Delta f}^{1,0}} s
///  + (1/2)(Delta^2 f) s)`, with `G_f` the omega-raised second
/// antiholomorphic Hessian (one-dimensional geometries).
pub fn ks_oracle_m2<S: Scalar>(
    geom: &GeometryModel<S>,
    f: &ChartJet<S>,
    k: u32,
    s: &LineSectionJet<S>,
) -> ChartJet<S> {
    assert!(geom.n == 1, "weight-2 oracle is implemented for n = 1");
    let shape = geom.shape();
    // (nabla~^{0,1})^2 f: its ybar^2 coefficient B gives
    // G_f = B omega^{1bar 1} omega^{1bar 1} d_z (x) d_z.
    let e0 = WeylElement::from_jet(1, 2, 2, f.clone());
    let e1 = geom.nabla_tilde01(&e0);
    let e2 = geom.nabla_tilde01(&e1);
    let mut b = ChartJet::zero(shape);
    for (tk, c) in e2.terms() {
        if tk.yb[0] == 2 && tk.y_degree() == 0 && tk.hbar == 0 {
            b = b.add(c);
        }
    }
    let up = &geom.om_up[0][0];
    let g_comp = b.mul(up).mul(up);
    let g_f = TensorField { n: 1, degree: 2, comps: vec![g_comp] };
    let hcd = geom.higher_cov_derivative(&g_f, s).g;

    let lap = geom.laplacian(f);
    let x_lap = geom.hamiltonian_field(&lap);
    let der = x_lap.comps[0].mul(&geom.chern_d(&s.g, 0, k));
    let lap2 = geom.laplacian(&lap).mul(&s.g).scale(&S::from_ratio(1, 2));

    let inner = hcd.neg().add(&der.scale(&S::i())).add(&lap2);
    inner.scale(&S::from_ratio(1, (k as i64) * (k as i64)))
}

/// Flatness failure of a claimed quantizable section.
#[derive(Debug)]
pub struct NotFlat {
    pub residual: f64,
    pub tolerance: f64,
}

impl std::fmt::Display for NotFlat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "section is not D_BT,k-flat: residual {:.3e} exceeds {:.3e}",
            self.residual, self.tolerance
        )
    }
}

impl std::error::Error for NotFlat {}

/// `P_{alpha,k}(s) = sigma_{L^k}(alpha (*)_k O_s)` for a level-k
/// quantizable section `alpha` (hbar already evaluated), refusing inputs
/// whose `D_{BT,k}`-flatness residual exceeds the tolerance.
pub fn p_alpha_checked<S: Scalar>(
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
    alpha: &WeylElement<S>,
    k: u32,
    s: &LineSectionJet<S>,
    tol: f64,
) -> Result<ChartJet<S>, NotFlat> {
    let res = apply_d_bt_level_k(fed, geom, &WeylForm::from_element(alpha.clone()), k);
    let mut max: f64 = 0.0;
    for (_, e) in &res.comps {
        max = max.max(e.restrict_y_degree(fed.d_max - 1).max_abs());
    }
    if !(max <= tol) {
        return Err(NotFlat { residual: max, tolerance: tol });
    }
    Ok(p_alpha(geom, fed, alpha, k, s))
}

pub fn p_alpha<S: Scalar>(
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
    alpha: &WeylElement<S>,
    k: u32,
    s: &LineSectionJet<S>,
) -> ChartJet<S> {
    let os = flat_section_of_section(s, geom, fed.d_max);
    bf_action(alpha, &os, geom, 0).symbol()
}
