//! Model Kahler geometries and their jet data.
//!
//! Two models ship: flat C^n with the standard form, and CP^1 in the affine
//! chart with the Fubini-Study metric (the antipodal chart is available for
//! quadrature symmetry checks). Everything is derived from the real Kahler
//! potential `phi` at a chart point:
//!
//! * `omega_{i jbar} = sqrt(-1) d_i d_jbar phi` (so that `omega` is positive
//!   and the prequantum identity `sqrt(-1) F(Chern) = k omega` holds for the
//!   hermitian metric `h = exp(-phi)` on the chart frame of `L`);
//! * `Gamma^k_{ij} = omega^{lbar k} d_i omega_{j lbar}`;
//! * `R_{i jbar k}^p = d_jbar Gamma^p_{ik}` (the sign that makes
//!   `nabla - delta^{1,0} + sum_m R~_m^*` square to zero with
//!   `R_2^* = (1/2) R_{i jbar k}^p dzbar^j (y^i y^k) d_p`);
//! * `Ric_{i jbar} = -d_i d_jbar log det g`, as a form
//!   `Ric = sqrt(-1) Ric_{i jbar} dz^i dzbar^j`;
//! * a local Ricci potential `g_ric = -log det g`
//!   (`d_i d_jbar g_ric = Ric_{i jbar}`, the normalization in which the
//!   coefficient of the one-form matches the Kahler-form convention
//!   `omega_{i jbar} = d_i d_jbar (potential)`; for CP^1 this is twice the
//!   Fubini-Study potential). The normalization is pinned by the flatness
//!   of the Bargmann-Fock connection, not chosen.
//!
//! The class also exposes the Levi-Civita action on Weyl elements and the
//! degree-`l` covariant derivatives of tensor fields acting on sections of
//! `L^k` through the Chern connection `d_i - k (d_i phi)` in the chart frame.

use std::sync::Arc;

use crate::jet::{ChartJet, JetShape, MAX_N};
use crate::scalar::Scalar;
use crate::weyl::{FormKey, InverseMetric, TermKey, WeylElement, WeylForm};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModelKind {
    FlatCn,
    Cp1Fs,
}

/// All geometric jets at one chart point.
#[derive(Clone)]
pub struct GeometryModel<S: Scalar> {
    pub kind: ModelKind,
    pub n: usize,
    pub point: Vec<S>,
    shape: Arc<JetShape>,
    /// Real Kahler potential (normalized: its additive constant is dropped).
    pub phi: ChartJet<S>,
    /// `omega_{i jbar}`, indexed `[i][j]`.
    pub om_lo: Vec<Vec<ChartJet<S>>>,
    /// `omega^{jbar i}`, indexed `[j][i]`.
    pub om_up: InverseMetric<S>,
    /// `Gamma^k_{ij}`, indexed `[k][i][j]`.
    pub gamma: Vec<Vec<Vec<ChartJet<S>>>>,
    /// Conjugate Christoffel jets `Gammabar^kbar_{ibar jbar}`, `[k][i][j]`.
    pub gamma_bar: Vec<Vec<Vec<ChartJet<S>>>>,
    /// Curvature `R_{i jbar k}^p`, indexed `[p][i][j][k]`.
    pub curv: Vec<Vec<Vec<Vec<ChartJet<S>>>>>,
    /// Ricci coefficients `Ric_{i jbar}`, indexed `[i][j]`.
    pub ric: Vec<Vec<ChartJet<S>>>,
    /// Local potential for the Ricci form: `d_i d_jbar g_ric = Ric_{i jbar}`.
    pub ric_pot: ChartJet<S>,
}

impl<S: Scalar> GeometryModel<S> {
    /// Geometry jets of the model at a chart point, at ambient jet order
    /// `order`. For CP^1 the chart is the affine one; every finite point is
    /// inside it.
    pub fn at(kind: ModelKind, point: &[S], order: usize) -> Self {
        let n = point.len();
        assert!(n >= 1 && n <= MAX_N, "dimension out of range");
        if kind == ModelKind::Cp1Fs {
            assert!(n == 1, "CP^1 model is one dimensional");
        }
        let shape = JetShape::get(n, order);
        let phi = match kind {
            ModelKind::FlatCn => {
                // phi = sum_i z^i zbar^i, exact polynomial.
                let mut phi = ChartJet::zero(&shape);
                for i in 0..n {
                    let z = ChartJet::variable_h(&shape, i, point[i].clone());
                    phi = phi.add(&z.mul(&z.conj()));
                }
                phi
            }
            ModelKind::Cp1Fs => {
                // phi = log(1 + z zbar) up to its additive constant.
                let z = ChartJet::variable_h(&shape, 0, point[0].clone());
                let s = ChartJet::constant(&shape, S::one()).add(&z.mul(&z.conj()));
                s.log_normalized()
            }
        };
        Self::from_potential(kind, point.to_vec(), shape, phi)
    }

    /// CP^1 in the antipodal chart `w = 1/z` (for quadrature symmetry
    /// validation). The Fubini-Study potential has the same shape there.
    pub fn cp1_antipodal_at(w: &[S], order: usize) -> Self {
        let mut g = Self::at(ModelKind::Cp1Fs, w, order);
        g.kind = ModelKind::Cp1Fs;
        g
    }

    fn from_potential(
        kind: ModelKind,
        point: Vec<S>,
        shape: Arc<JetShape>,
        phi: ChartJet<S>,
    ) -> Self {
        let n = point.len();
        let i_unit = S::i();

        // omega_{i jbar} = i d_i d_jbar phi
        let om_lo: Vec<Vec<ChartJet<S>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| phi.d_h(i).d_ah(j).scale(&i_unit))
                    .collect()
            })
            .collect();

        // omega^{jbar i}: inverse of the matrix M[i][j] = omega_{i jbar},
        // with (M^{-1})[j][i] = omega^{jbar i}.
        let om_up = invert_matrix(&om_lo);

        // Gamma^k_{ij} = omega^{lbar k} d_i omega_{j lbar}
        let gamma: Vec<Vec<Vec<ChartJet<S>>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let mut acc = ChartJet::zero(&shape);
                                for l in 0..n {
                                    acc = acc.add(&om_up[l][k].mul(&om_lo[j][l].d_h(i)));
                                }
                                acc
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let gamma_bar: Vec<Vec<Vec<ChartJet<S>>>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| (0..n).map(|j| gamma[k][i][j].conj()).collect())
                    .collect()
            })
            .collect();

        // R_{i jbar k}^p = d_jbar Gamma^p_{ik}
        let curv: Vec<Vec<Vec<Vec<ChartJet<S>>>>> = (0..n)
            .map(|p| {
                (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                (0..n).map(|k| gamma[p][i][k].d_ah(j)).collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();

        // Ric_{i jbar} = -d_i d_jbar log det(g); det omega differs from
        // det g by a constant factor, which log_normalized drops anyway.
        let log_det = det_matrix(&om_lo).log_normalized();
        let ric: Vec<Vec<ChartJet<S>>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| log_det.d_h(i).d_ah(j).neg())
                    .collect()
            })
            .collect();
        let ric_pot = log_det.neg();

        GeometryModel {
            kind,
            n,
            point,
            shape,
            phi,
            om_lo,
            om_up,
            gamma,
            gamma_bar,
            curv,
            ric,
            ric_pot,
        }
    }

    pub fn shape(&self) -> &Arc<JetShape> {
        &self.shape
    }

    /// `log h` for the hermitian metric on the chart frame of `L`
    /// (up to the same additive constant as `phi`).
    pub fn log_h(&self) -> ChartJet<S> {
        self.phi.neg()
    }

    /// Chern-curvature coefficients of `(L^k, h^k)`:
    /// `F = F_{i jbar} dz^i dzbar^j` with `F = dbar d log h^k`.
    pub fn chern_curvature(&self, k: u32) -> Vec<Vec<ChartJet<S>>> {
        let kf = S::from_int(k as i64);
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        // dbar d u = -d_i d_jbar u dz^i dzbar^j
                        self.log_h().d_h(i).d_ah(j).neg().scale(&kf)
                    })
                    .collect()
            })
            .collect()
    }

    /// Covariant derivative of a Weyl element: `dz`/`dzbar` components with
    /// the Levi-Civita action on the fiber variables.
    pub fn nabla(&self, a: &WeylElement<S>) -> WeylForm<S> {
        self.nabla_form(&WeylForm::from_element(a.clone()))
    }

    pub fn nabla10(&self, a: &WeylElement<S>) -> WeylForm<S> {
        self.nabla10_form(&WeylForm::from_element(a.clone()))
    }

    /// Holomorphic part `nabla^{1,0}` on forms: coefficient d_i plus the
    /// Gamma action on y-slots.
    pub fn nabla10_form(&self, a: &WeylForm<S>) -> WeylForm<S> {
        self.nabla_dir_form(a, true)
    }

    pub fn nabla01_form(&self, a: &WeylForm<S>) -> WeylForm<S> {
        self.nabla_dir_form(a, false)
    }

    pub fn nabla_form(&self, a: &WeylForm<S>) -> WeylForm<S> {
        self.nabla10_form(a).add(&self.nabla01_form(a))
    }

    fn nabla_dir_form(&self, a: &WeylForm<S>, holo: bool) -> WeylForm<S> {
        let mut out = a.clone();
        out.comps.clear();
        for (fk, e) in &a.comps {
            for dir in 0..self.n {
                let wedge = if holo { fk.wedge_dz(dir) } else { fk.wedge_dzb(dir) };
                let Some((nk, sign)) = wedge else { continue };
                let mut contrib = self.covariant_dir(e, dir, holo);
                if sign < 0 {
                    contrib = contrib.neg();
                }
                out.add_component(nk, contrib);
            }
        }
        out
    }

    /// `nabla_dir` on the fiber polynomial (no form slot): coefficient
    /// derivative plus `-Gamma^k_{dir j} y^k -> y^j` on y-slots (resp. the
    /// conjugate action on ybar-slots).
    fn covariant_dir(&self, e: &WeylElement<S>, dir: usize, holo: bool) -> WeylElement<S> {
        let mut out = e.clone_empty();
        for (tk, c) in e.terms() {
            // Plain derivative of the coefficient.
            let dc = if holo { c.d_h(dir) } else { c.d_ah(dir) };
            out.insert(*tk, dc);
            if holo {
                for kvar in 0..self.n {
                    if tk.y[kvar] == 0 {
                        continue;
                    }
                    for jvar in 0..self.n {
                        let mut nk = *tk;
                        nk.y[kvar] -= 1;
                        nk.y[jvar] += 1;
                        let coeff = c
                            .mul(&self.gamma[kvar][dir][jvar])
                            .scale(&S::from_int(tk.y[kvar] as i64))
                            .neg();
                        out.insert(nk, coeff);
                    }
                }
            } else {
                for kvar in 0..self.n {
                    if tk.yb[kvar] == 0 {
                        continue;
                    }
                    for jvar in 0..self.n {
                        let mut nk = *tk;
                        nk.yb[kvar] -= 1;
                        nk.yb[jvar] += 1;
                        let coeff = c
                            .mul(&self.gamma_bar[kvar][dir][jvar])
                            .scale(&S::from_int(tk.yb[kvar] as i64))
                            .neg();
                        out.insert(nk, coeff);
                    }
                }
            }
        }
        out
    }

    /// `(delta^{1,0})^{-1} nabla^{1,0}`, the holomorphic Taylor-completion
    /// step.
    pub fn nabla_tilde10(&self, a: &WeylElement<S>) -> WeylElement<S> {
        self.nabla10(a).delta_inv10()
    }

    /// `(delta^{0,1})^{-1} nabla^{0,1}` (used by the Ricci one-form and the
    /// weight-2 oracle).
    pub fn nabla_tilde01(&self, a: &WeylElement<S>) -> WeylElement<S> {
        self.nabla01_form(&WeylForm::from_element(a.clone())).delta_inv01()
    }

    /// Hamiltonian vector field, (1,0)-part:
    /// `X_f^{1,0} = omega^{jbar i} (d_jbar f) d_i`.
    pub fn hamiltonian_field(&self, f: &ChartJet<S>) -> TensorField<S> {
        let comps = (0..self.n)
            .map(|i| {
                let mut acc = ChartJet::zero(&self.shape);
                for j in 0..self.n {
                    acc = acc.add(&self.om_up[j][i].mul(&f.d_ah(j)));
                }
                acc
            })
            .collect();
        TensorField { n: self.n, degree: 1, comps }
    }

    /// Dolbeault Laplacian `Delta f = sqrt(-1) omega^{jbar i} d_i d_jbar f`.
    pub fn laplacian(&self, f: &ChartJet<S>) -> ChartJet<S> {
        let mut acc = ChartJet::zero(&self.shape);
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc.add(&self.om_up[j][i].mul(&f.d_h(i).d_ah(j)));
            }
        }
        acc.scale(&S::i())
    }

    /// Chern-covariant holomorphic derivative on the local representative of
    /// a section of `L^k`: `d_i g - k (d_i phi) g`.
    pub fn chern_d(&self, g: &ChartJet<S>, i: usize, k: u32) -> ChartJet<S> {
        g.d_h(i)
            .sub(&self.phi.d_h(i).mul(g).scale(&S::from_int(k as i64)))
    }

    /// Covariant derivative of a (1,0)-tensor field in direction `d_i`:
    /// `d_i G^{j...} + sum_t Gamma^{j_t}_{i p} G^{... p ...}`.
    pub fn nabla_tensor_dir(&self, g: &TensorField<S>, i: usize) -> TensorField<S> {
        let l = g.degree;
        let mut out = TensorField::zero(self.n, l, &self.shape);
        for (idx, c) in g.comps.iter().enumerate() {
            if c.is_zero_jet() {
                continue;
            }
            let ids = g.unflatten(idx);
            out.comps[idx] = out.comps[idx].add(&c.d_h(i));
            for t in 0..l {
                for p in 0..self.n {
                    let mut jds = ids.clone();
                    jds[t] = p;
                    let target = g.flatten(&jds);
                    out.comps[target] =
                        out.comps[target].add(&c.mul(&self.gamma[p][i][ids[t]]));
                }
            }
        }
        out
    }

    /// Degree-`l` covariant derivative of a tensor field acting on a section
    /// of `L^k`: `nabla_G s` with the recursion
    /// `nabla_{X (x) G'} s = nabla_X (nabla_{G'} s) - nabla_{nabla_X G'} s`
    /// and base case `nabla_G s = G s` for `l = 0`.
    pub fn higher_cov_derivative(
        &self,
        g: &TensorField<S>,
        s: &LineSectionJet<S>,
    ) -> LineSectionJet<S> {
        if g.degree == 0 {
            return LineSectionJet {
                k: s.k,
                g: g.comps[0].mul(&s.g),
                holomorphic: false,
            };
        }
        let mut acc = ChartJet::zero(&self.shape);
        for i in 0..self.n {
            let slice = g.slice_first(i);
            let inner = self.higher_cov_derivative(&slice, s);
            let first = self.chern_d(&inner.g, i, s.k);
            let moved = self.higher_cov_derivative(&self.nabla_tensor_dir(&slice, i), s);
            acc = acc.add(&first).sub(&moved.g);
        }
        LineSectionJet { k: s.k, g: acc, holomorphic: false }
    }
}

/// Type-(1,0) tensor field `G^{i_1 ... i_l}` with jet components.
#[derive(Clone)]
pub struct TensorField<S: Scalar> {
    pub n: usize,
    pub degree: usize,
    /// Flattened components, index `sum_t i_t n^t`.
    pub comps: Vec<ChartJet<S>>,
}

impl<S: Scalar> TensorField<S> {
    pub fn zero(n: usize, degree: usize, shape: &Arc<JetShape>) -> Self {
        TensorField {
            n,
            degree,
            comps: vec![ChartJet::zero(shape); n.pow(degree as u32)],
        }
    }

    pub fn scalar(c: ChartJet<S>) -> Self {
        TensorField { n: c.n(), degree: 0, comps: vec![c] }
    }

    pub fn flatten(&self, ids: &[usize]) -> usize {
        ids.iter().rev().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.degree);
        for _ in 0..self.degree {
            ids.push(idx % self.n);
            idx /= self.n;
        }
        ids
    }

    /// The degree-(l-1) slice with first index fixed to `i`.
    pub fn slice_first(&self, i: usize) -> TensorField<S> {
        assert!(self.degree >= 1);
        let shape = self.comps[0].shape().clone();
        let mut out = TensorField::zero(self.n, self.degree - 1, &shape);
        for (idx, c) in self.comps.iter().enumerate() {
            let ids = self.unflatten(idx);
            if ids[0] == i {
                let rest = out.flatten(&ids[1..]);
                out.comps[rest] = c.clone();
            }
        }
        out
    }

    pub fn scale_jet(&self, f: &ChartJet<S>) -> Self {
        TensorField {
            n: self.n,
            degree: self.degree,
            comps: self.comps.iter().map(|c| c.mul(f)).collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        assert!(self.degree == o.degree);
        TensorField {
            n: self.n,
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    /// Tensor product `self (x) other`.
    pub fn tensor(&self, o: &Self) -> Self {
        let shape = self.comps[0].shape().clone();
        let mut out = TensorField::zero(self.n, self.degree + o.degree, &shape);
        for (ia, ca) in self.comps.iter().enumerate() {
            let ids_a = self.unflatten(ia);
            for (ib, cb) in o.comps.iter().enumerate() {
                let ids_b = o.unflatten(ib);
                let mut ids = ids_a.clone();
                ids.extend_from_slice(&ids_b);
                let t = out.flatten(&ids);
                out.comps[t] = out.comps[t].add(&ca.mul(cb));
            }
        }
        out
    }
}

/// Jet of the local representing function of a section `s = g e_L^{(x)k}`.
#[derive(Clone)]
pub struct LineSectionJet<S: Scalar> {
    pub k: u32,
    pub g: ChartJet<S>,
    pub holomorphic: bool,
}

impl<S: Scalar> LineSectionJet<S> {
    pub fn holomorphic(k: u32, g: ChartJet<S>) -> Self {
        LineSectionJet { k, g, holomorphic: true }
    }
}

/// Residuals of the structural invariants at this point (largest coefficient
/// magnitude across the relevant jets); all should vanish to rounding.
pub struct GeometryResiduals {
    pub metric_from_potential: f64,
    pub inverse_identity: f64,
    pub gamma_symmetry: f64,
    pub prequantum: f64,
}

pub fn geometry_residuals<S: Scalar>(g: &GeometryModel<S>, k: u32) -> GeometryResiduals {
    let n = g.n;
    // omega_{i jbar} = d_i d_jbar rho for rho = i phi.
    let rho = g.phi.scale(&S::i());
    let mut m1: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            m1 = m1.max(g.om_lo[i][j].sub(&rho.d_h(i).d_ah(j)).max_abs());
        }
    }
    // omega^{kbar i} omega_{i jbar} = delta^kbar_jbar.
    let shape = g.shape();
    let mut m2: f64 = 0.0;
    for kk in 0..n {
        for j in 0..n {
            let mut acc = ChartJet::zero(shape);
            for i in 0..n {
                acc = acc.add(&g.om_up[kk][i].mul(&g.om_lo[i][j]));
            }
            let expect = if kk == j {
                ChartJet::constant(shape, S::one())
            } else {
                ChartJet::zero(shape)
            };
            m2 = m2.max(acc.sub(&expect.truncate_to(acc.ord())).max_abs());
        }
    }
    // Gamma symmetry.
    let mut m3: f64 = 0.0;
    for kk in 0..n {
        for i in 0..n {
            for j in 0..n {
                m3 = m3.max(g.gamma[kk][i][j].sub(&g.gamma[kk][j][i]).max_abs());
            }
        }
    }
    // Prequantum identity: sqrt(-1) F = k omega.
    let f = g.chern_curvature(k);
    let mut m4: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lhs = f[i][j].scale(&S::i());
            let rhs = g.om_lo[i][j].scale(&S::from_int(k as i64));
            m4 = m4.max(lhs.sub(&rhs.truncate_to(lhs.ord())).max_abs());
        }
    }
    GeometryResiduals {
        metric_from_potential: m1,
        inverse_identity: m2,
        gamma_symmetry: m3,
        prequantum: m4,
    }
}

/// Builds a `delta`-style one-form `omega_{i jbar} (y^i dzbar^j - ybar^j dz^i)`
/// (the bracket presentation of `-delta`; recorded for reporting only).
pub fn gamma_delta_form<S: Scalar>(g: &GeometryModel<S>, w_max: usize, d_max: usize) -> WeylForm<S> {
    let shape = g.shape();
    let zero = WeylElement::zero(g.n, w_max, d_max, shape);
    let mut out = WeylForm::zero_like(&zero);
    for i in 0..g.n {
        for j in 0..g.n {
            let mut e_y = zero.clone();
            let mut key = TermKey::scalar();
            key.y[i] = 1;
            e_y.insert(key, g.om_lo[i][j].clone());
            out.add_component(FormKey::dzb(j), e_y);

            let mut e_yb = zero.clone();
            let mut key = TermKey::scalar();
            key.yb[j] = 1;
            e_yb.insert(key, g.om_lo[i][j].neg());
            out.add_component(FormKey::dz(i), e_yb);
        }
    }
    out
}

fn invert_matrix<S: Scalar>(m: &[Vec<ChartJet<S>>]) -> Vec<Vec<ChartJet<S>>> {
    let n = m.len();
    let shape = m[0][0].shape().clone();
    match n {
        1 => vec![vec![m[0][0].recip()]],
        2 => {
            let det = m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0]));
            let inv_det = det.recip();
            // (M^{-1})[j][i]: inverse with our index convention.
            let a = m[1][1].mul(&inv_det);
            let b = m[0][1].neg().mul(&inv_det);
            let c = m[1][0].neg().mul(&inv_det);
            let d = m[0][0].mul(&inv_det);
            vec![vec![a, c], vec![b, d]]
        }
        3 => {
            let det = det_matrix(m);
            let inv_det = det.recip();
            let mut out = vec![vec![ChartJet::zero(&shape); n]; n];
            for i in 0..n {
                for j in 0..n {
                    // Cofactor expansion: (M^{-1})[j][i] = C_{ij}/det.
                    let mut minor = Vec::new();
                    for r in 0..n {
                        if r == i {
                            continue;
                        }
                        let mut row = Vec::new();
                        for c in 0..n {
                            if c == j {
                                continue;
                            }
                            row.push(m[r][c].clone());
                        }
                        minor.push(row);
                    }
                    let cof = minor[0][0]
                        .mul(&minor[1][1])
                        .sub(&minor[0][1].mul(&minor[1][0]));
                    let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                    out[j][i] = cof.scale(&S::from_int(sign)).mul(&inv_det);
                }
            }
            out
        }
        _ => unreachable!("dimension capped at MAX_N"),
    }
}

fn det_matrix<S: Scalar>(m: &[Vec<ChartJet<S>>]) -> ChartJet<S> {
    match m.len() {
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        3 => {
            let c0 = m[1][1].mul(&m[2][2]).sub(&m[1][2].mul(&m[2][1]));
            let c1 = m[1][0].mul(&m[2][2]).sub(&m[1][2].mul(&m[2][0]));
            let c2 = m[1][0].mul(&m[2][1]).sub(&m[1][1].mul(&m[2][0]));
            m[0][0]
                .mul(&c0)
                .sub(&m[0][1].mul(&c1))
                .add(&m[0][2].mul(&c2))
        }
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{C64, QC};

    #[test]
    fn flat_geometry_is_standard() {
        let g = GeometryModel::<QC>::at(
            ModelKind::FlatCn,
            &[QC::from_ints(1, 2), QC::from_ints(-1, 0)],
            6,
        );
        assert!(g.om_lo[0][0].sub(&ChartJet::constant(g.shape(), QC::i())).is_zero_jet());
        assert!(g.om_lo[0][1].is_zero_jet());
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(g.gamma[k][i][j].is_zero_jet());
                    for p in 0..2 {
                        assert!(g.curv[p][i][j][k].is_zero_jet());
                    }
                }
            }
        }
        assert!(g.ric_pot.is_zero_jet());
        let r = geometry_residuals(&g, 3);
        assert!(r.metric_from_potential == 0.0);
        assert!(r.inverse_identity == 0.0);
        assert!(r.prequantum == 0.0);
    }

    #[test]
    fn cp1_at_origin() {
        let g = GeometryModel::<QC>::at(ModelKind::Cp1Fs, &[QC::from_ints(0, 0)], 8);
        // omega_{1 1bar}(0) = i, first derivatives vanish at 0.
        assert_eq!(g.om_lo[0][0].value(), QC::i());
        assert!(g.om_lo[0][0].d_h(0).value().is_zero());
        assert!(g.om_lo[0][0].d_ah(0).value().is_zero());
        // Gamma(0) = 0 but curvature is not.
        assert!(g.gamma[0][0][0].value().is_zero());
        assert!(!g.curv[0][0][0][0].value().is_zero());
    }

    #[test]
    fn cp1_invariants_at_random_points() {
        let pts = [
            C64::new(0.3, -0.7),
            C64::new(1.4, 0.2),
            C64::new(-0.5, 0.9),
            C64::new(2.0, -1.5),
        ];
        for z in pts {
            let g = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[z], 9);
            let r = geometry_residuals(&g, 7);
            assert!(r.metric_from_potential < 1e-10, "{}", r.metric_from_potential);
            assert!(r.inverse_identity < 1e-10, "{}", r.inverse_identity);
            assert!(r.gamma_symmetry < 1e-10);
            assert!(r.prequantum < 1e-10, "{}", r.prequantum);
        }
    }

    #[test]
    fn cp1_ricci_is_twice_omega() {
        // Exact check at a rational point, then float spot checks.
        let g = GeometryModel::<QC>::at(ModelKind::Cp1Fs, &[QC::from_ratios(1, 2, -1, 3)], 8);
        let lhs = g.ric[0][0].scale(&QC::i());
        let rhs = g.om_lo[0][0].scale(&QC::from_int(2));
        let t = lhs.ord().min(rhs.ord());
        assert!(lhs.truncate_to(t).sub(&rhs.truncate_to(t)).is_zero_jet());

        for re in [-1.3f64, 0.4, 2.2] {
            let g = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[C64::new(re, 0.5 * re)], 8);
            let lhs = g.ric[0][0].scale(&C64::new(0.0, 1.0));
            let rhs = g.om_lo[0][0].scale(&C64::new(2.0, 0.0));
            let t = lhs.ord().min(rhs.ord());
            assert!(lhs.truncate_to(t).sub(&rhs.truncate_to(t)).max_abs() < 1e-9);
        }
    }

    #[test]
    fn ric_potential_reproduces_ricci() {
        // d_i d_jbar g_ric = Ric_{i jbar}, and for CP^1 the potential is
        // twice the Fubini-Study potential.
        let g = GeometryModel::<QC>::at(ModelKind::Cp1Fs, &[QC::from_ratios(2, 5, 1, 2)], 8);
        let lhs = g.ric_pot.d_h(0).d_ah(0);
        let rhs = g.ric[0][0].clone();
        let t = lhs.ord().min(rhs.ord());
        assert!(lhs.truncate_to(t).sub(&rhs.truncate_to(t)).is_zero_jet());
        let twice_phi = g.phi.scale(&QC::from_int(2));
        let t = g.ric_pot.ord().min(twice_phi.ord());
        assert!(g
            .ric_pot
            .truncate_to(t)
            .sub(&twice_phi.truncate_to(t))
            .is_zero_jet());
    }

    #[test]
    fn nabla10_squares_to_zero() {
        let g = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[C64::new(0.4, -0.8)], 9);
        let shape = g.shape();
        let mut e = WeylElement::<C64>::zero(1, 4, 6, shape);
        let mut key = TermKey::scalar();
        key.y[0] = 2;
        key.yb[0] = 1;
        e.insert(key, g.om_lo[0][0].clone());
        let mut key2 = TermKey::scalar();
        key2.y[0] = 1;
        e.insert(key2, g.gamma[0][0][0].clone());
        let dd = g.nabla10_form(&g.nabla10(&e));
        assert!(dd.max_abs() < 1e-9, "{}", dd.max_abs());
    }

    #[test]
    fn nabla_commutes_with_delta10() {
        // [delta^{1,0}, nabla] = 0 by the Christoffel symmetry.
        let g = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[C64::new(-0.2, 0.6)], 9);
        let shape = g.shape();
        let mut e = WeylElement::<C64>::zero(1, 4, 6, shape);
        let mut key = TermKey::scalar();
        key.y[0] = 2;
        e.insert(key, g.om_lo[0][0].clone());
        // Both operators are odd, so the graded commutator is the
        // anticommutator.
        let a = g.nabla(&e).delta10();
        let b = g.nabla_form(&WeylForm::from_element(e).delta10());
        assert!(a.add(&b).max_abs() < 1e-9);
    }

    #[test]
    fn laplacian_examples() {
        // Flat C^1, f = |z|^2: Delta f = 1.
        let g = GeometryModel::<C64>::at(ModelKind::FlatCn, &[C64::new(0.7, -0.1)], 6);
        let shape = g.shape();
        let z = ChartJet::variable_h(shape, 0, C64::new(0.7, -0.1));
        let f = z.mul(&z.conj());
        let lap = g.laplacian(&f);
        assert!((lap.value() - C64::new(1.0, 0.0)).norm() < 1e-12);
        // Holomorphic f: Delta f = 0.
        let lap_h = g.laplacian(&z.pow(3));
        assert!(lap_h.max_abs() < 1e-12);
    }

    #[test]
    fn hcd_flat_reduces_to_iterated_derivatives() {
        // On flat C^1 with k = 0 (trivial twist), nabla_{d (x) d} s = d^2 s.
        let g = GeometryModel::<C64>::at(ModelKind::FlatCn, &[C64::new(0.2, 0.1)], 8);
        let shape = g.shape();
        let z = ChartJet::variable_h(shape, 0, C64::new(0.2, 0.1));
        let s = LineSectionJet { k: 0, g: z.pow(4), holomorphic: true };
        let one = ChartJet::constant(shape, C64::new(1.0, 0.0));
        let dz = TensorField { n: 1, degree: 1, comps: vec![one.clone()] };
        let g2 = dz.tensor(&dz);
        let out = g.higher_cov_derivative(&g2, &s);
        let expect = z.pow(4).d_h(0).d_h(0);
        assert!(out.g.sub(&expect.truncate_to(out.g.ord())).max_abs() < 1e-12);
    }

    #[test]
    fn hcd_is_tensorial() {
        // nabla_{f G} s = f nabla_G s, with a nonconstant f on CP^1.
        let g = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[C64::new(0.5, -0.3)], 9);
        let shape = g.shape();
        let z = ChartJet::variable_h(shape, 0, C64::new(0.5, -0.3));
        let f = z.mul(&z.conj()).add(&ChartJet::constant(shape, C64::new(0.3, 0.2)));
        let one = ChartJet::constant(shape, C64::new(1.0, 0.0));
        let x = TensorField { n: 1, degree: 1, comps: vec![z.mul(&z)] };
        let y = TensorField { n: 1, degree: 1, comps: vec![one] };
        let g2 = x.tensor(&y);
        let s = LineSectionJet { k: 3, g: z.pow(2), holomorphic: true };
        let lhs = g.higher_cov_derivative(&g2.scale_jet(&f), &s).g;
        let rhs = g.higher_cov_derivative(&g2, &s).g.mul(&f);
        let t = lhs.ord().min(rhs.ord());
        assert!(lhs.truncate_to(t).sub(&rhs.truncate_to(t)).max_abs() < 1e-9);
    }
}
