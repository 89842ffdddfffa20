//! The Fedosov connection for the Berezin-Toeplitz star product and its
//! flat-section recursions.
//!
//! The connection is `D_BT = nabla - delta + (1/hbar)[I_BT, -]` with
//! `I_BT = I + J_Ric`:
//!
//! * `I = sum_{m >= 2} I_m`, where `I_m` lowers the tangent index of the
//!   curvature data `R_m^*` (base case
//!   `R_2^* = (1/2) R_{i jbar k}^p dzbar^j (y^i y^k) d_p`, recursion
//!   `R_m^* = (delta^{1,0})^{-1} nabla^{1,0} R_{m-1}^*`);
//! * `J_Ric = hbar sum_{l >= 1} ((delta^{1,0})^{-1} nabla^{1,0})^l (dbar g)`
//!   for a local potential `g` of the Ricci form.
//!
//! Flat sections are solved weight by weight: the weight-0 part of `O_f` is
//! the holomorphic Taylor completion of `f`, and each next weight is the
//! `delta^{0,1}`-homotopy of the connection residual
//! (`delta^{0,1}(O_f)_{m+1} = D_BT (O_f)_{<=m}`). The same completion gives
//! the flat section `O_s = sum_m (nabla~^{1,0})^m s` of a holomorphic
//! section of `L^k`.

use crate::bf::FockElement;
use crate::geometry::{GeometryModel, LineSectionJet};
use crate::jet::ChartJet;
use crate::scalar::Scalar;
use crate::weyl::{FormKey, WeylElement, WeylForm};

/// Per-point Fedosov connection data.
#[derive(Clone)]
pub struct FedosovData<S: Scalar> {
    pub w_max: usize,
    pub d_max: usize,
    /// Curvature one-forms `I_m`, `m = 2..=m_cut` (index `m - 2`).
    pub i_ms: Vec<WeylForm<S>>,
    pub j_ric: WeylForm<S>,
    /// `I_BT = sum_m I_m + J_Ric`.
    pub i_bt: WeylForm<S>,
}

/// `R_m^*` as tangent-valued Weyl data: one (0,1)-form of y-polynomials per
/// tangent index `p`.
pub fn build_r_star<S: Scalar>(
    geom: &GeometryModel<S>,
    m: usize,
    w_max: usize,
    d_max: usize,
) -> Vec<WeylForm<S>> {
    assert!(m >= 2, "R_m^* starts at m = 2");
    let n = geom.n;
    let shape = geom.shape();
    let zero = WeylElement::zero(n, w_max, d_max, shape);
    let mut r2: Vec<WeylForm<S>> = (0..n).map(|_| WeylForm::zero_like(&zero)).collect();
    let half = S::from_ratio(1, 2);
    for p in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let c = geom.curv[p][i][j][k].scale(&half);
                    let mut e = zero.clone();
                    let mut key = crate::weyl::TermKey::scalar();
                    key.y[i] += 1;
                    key.y[k] += 1;
                    e.insert(key, c);
                    r2[p].add_component(FormKey::dzb(j), e);
                }
            }
        }
    }
    let mut cur = r2;
    for _ in 3..=m {
        cur = r_star_step(geom, &cur);
    }
    cur
}

/// One recursion step `(delta^{1,0})^{-1} nabla^{1,0}` on tangent-valued
/// data; the tangent slot transforms with `+Gamma^p_{iq}`.
fn r_star_step<S: Scalar>(geom: &GeometryModel<S>, r: &[WeylForm<S>]) -> Vec<WeylForm<S>> {
    let n = geom.n;
    (0..n)
        .map(|p| {
            let mut d = geom.nabla10_form(&r[p]);
            for q in 0..n {
                for i in 0..n {
                    d = d.add(&r[q].wedge_mul_dz(i, &geom.gamma[p][i][q]));
                }
            }
            d.delta_inv10_form()
        })
        .collect()
}

/// `I_m = L(R_m^*)`: lifts the last subscript with the Kahler form,
/// `I_m = R^j_{..., lbar} omega_{j kbar} dzbar^l (y ... ybar^k)`.
pub fn build_i<S: Scalar>(
    geom: &GeometryModel<S>,
    m: usize,
    w_max: usize,
    d_max: usize,
) -> WeylForm<S> {
    let r = build_r_star(geom, m, w_max, d_max);
    lower_tangent(geom, &r)
}

fn lower_tangent<S: Scalar>(geom: &GeometryModel<S>, r: &[WeylForm<S>]) -> WeylForm<S> {
    let n = geom.n;
    let mut out = r[0].clone();
    out.comps.clear();
    for (p, comp) in r.iter().enumerate() {
        for (fk, e) in &comp.comps {
            for kbar in 0..n {
                let mut ne = e.clone_empty();
                for (tk, c) in e.terms() {
                    let mut t2 = *tk;
                    t2.yb[kbar] += 1;
                    ne.insert(t2, c.mul(&geom.om_lo[p][kbar]));
                }
                out.add_component(*fk, ne);
            }
        }
    }
    out
}

/// `J_Ric = hbar sum_{l>=1} ((delta^{1,0})^{-1} nabla^{1,0})^l (dbar g)`,
/// truncated at the y-degree cap. `g` defaults to the geometry's Ricci
/// potential; a pluriharmonic change of `g` does not change the result.
pub fn build_j_ric<S: Scalar>(
    geom: &GeometryModel<S>,
    w_max: usize,
    d_max: usize,
) -> WeylForm<S> {
    build_j_of_potential(geom, &geom.ric_pot, w_max, d_max)
}

pub fn build_j_of_potential<S: Scalar>(
    geom: &GeometryModel<S>,
    g_pot: &ChartJet<S>,
    w_max: usize,
    d_max: usize,
) -> WeylForm<S> {
    let n = geom.n;
    let zero = WeylElement::zero(n, w_max, d_max, geom.shape());
    // dbar g as a (0,1)-form with scalar coefficients.
    let mut cur = WeylForm::zero_like(&zero);
    for j in 0..n {
        let mut e = zero.clone();
        e.insert(crate::weyl::TermKey::scalar(), g_pot.d_ah(j));
        cur.add_component(FormKey::dzb(j), e);
    }
    let mut acc = WeylForm::zero_like(&zero);
    for _ in 1..=d_max {
        cur = geom.nabla10_form(&cur).delta_inv10_form();
        if cur.is_zero() {
            break;
        }
        acc = acc.add(&cur);
    }
    // Multiply by hbar.
    let mut out = acc.clone();
    out.comps.clear();
    for (fk, e) in &acc.comps {
        out.add_component(*fk, e.hbar_shift(1));
    }
    out
}

/// Builds the full connection data with curvature cut `m_cut = w_max + 2`
/// (deeper terms cannot affect outputs of weight <= w_max after the symbol
/// map, since each `I_m` has ybar-degree one).
pub fn assemble_i_bt<S: Scalar>(
    geom: &GeometryModel<S>,
    w_max: usize,
    d_max: usize,
) -> FedosovData<S> {
    let m_cut = w_max + 2;
    let mut i_ms = Vec::new();
    let zero = WeylElement::zero(geom.n, w_max, d_max, geom.shape());
    let mut i_bt = WeylForm::zero_like(&zero);
    // The recursion only extends the y-part, so reuse R_{m-1} to build R_m.
    let mut r = build_r_star(geom, 2, w_max, d_max);
    for m in 2..=m_cut {
        if m > 2 {
            r = r_star_step(geom, &r);
        }
        let i_m = lower_tangent(geom, &r);
        i_bt = i_bt.add(&i_m);
        i_ms.push(i_m);
    }
    let j_ric = build_j_ric(geom, w_max, d_max);
    i_bt = i_bt.add(&j_ric);
    FedosovData { w_max, d_max, i_ms, j_ric, i_bt }
}

/// `D_BT = nabla - delta + (1/hbar)[I_BT, -]` on Weyl-valued forms.
pub fn apply_d_bt<S: Scalar>(
    fed: &FedosovData<S>,
    geom: &GeometryModel<S>,
    a: &WeylForm<S>,
) -> WeylForm<S> {
    let nabla = geom.nabla_form(a);
    let delta = a.delta();
    let bracket = fed.i_bt.bracket(a, &geom.om_up).div_hbar();
    nabla.sub(&delta).add(&bracket)
}

pub fn apply_d_bt_elem<S: Scalar>(
    fed: &FedosovData<S>,
    geom: &GeometryModel<S>,
    a: &WeylElement<S>,
) -> WeylForm<S> {
    apply_d_bt(fed, geom, &WeylForm::from_element(a.clone()))
}

/// Level-k connection `D_{BT,k} = nabla - delta +
/// (k/sqrt(-1)) [I_BT|_{hbar=sqrt(-1)/k}, -]_{star_k}` on the finite-weight
/// subbundle.
pub fn apply_d_bt_level_k<S: Scalar>(
    fed: &FedosovData<S>,
    geom: &GeometryModel<S>,
    a: &WeylForm<S>,
    k: u32,
) -> WeylForm<S> {
    // Everything is evaluated at hbar = sqrt(-1)/k (a no-op on sections of
    // the evaluated subbundle, and what makes the substitution commute with
    // the formal connection on hbar-polynomial inputs).
    let a_eval = eval_form(a, k);
    let nabla = geom.nabla_form(&a_eval);
    let delta = a_eval.delta();
    let i_eval = eval_form(&fed.i_bt, k);
    let bracket = eval_form(&i_eval.bracket(&a_eval, &geom.om_up), k);
    // (k/sqrt(-1)) = 1/(sqrt(-1)/k)
    let s = (S::i() * S::from_ratio(1, k as i64)).inv();
    nabla.sub(&delta).add(&bracket.scale(&s))
}

pub fn eval_form<S: Scalar>(f: &WeylForm<S>, k: u32) -> WeylForm<S> {
    let mut out = f.clone();
    out.comps.clear();
    for (fk, e) in &f.comps {
        out.add_component(*fk, e.eval_hbar(k));
    }
    out
}

/// A solved flat section with its provenance record.
pub struct FlatSection<S: Scalar> {
    /// Weight components `(O_f)_m`, index `m = 0..=w_max`.
    pub weights: Vec<WeylElement<S>>,
    /// Truncation occurred somewhere during the solve.
    pub truncated: bool,
    /// Largest `(nabla^{1,0} - delta^{1,0})` residual over the weight
    /// components, restricted below the y-degree cap (diagnostics).
    pub d10_residual: f64,
}

impl<S: Scalar> FlatSection<S> {
    pub fn total(&self) -> WeylElement<S> {
        let mut acc = self.weights[0].clone();
        for w in &self.weights[1..] {
            acc = acc.add(w);
        }
        acc
    }

    pub fn partial_sum(&self, m: usize) -> WeylElement<S> {
        let mut acc = self.weights[0].clone();
        for w in &self.weights[1..=m] {
            acc = acc.add(w);
        }
        acc
    }

    /// Evaluation `hbar = sqrt(-1)/k` of the total section (callers must
    /// have checked that the dropped weight tail is negligible).
    pub fn eval_hbar(&self, k: u32) -> WeylElement<S> {
        self.total().eval_hbar(k)
    }
}

/// Holomorphic Taylor completion `sum_l (nabla~^{1,0})^l (seed)` up to the
/// y-degree cap.
pub fn complete_holomorphic<S: Scalar>(
    geom: &GeometryModel<S>,
    seed: &WeylElement<S>,
    d_max: usize,
) -> WeylElement<S> {
    let mut acc = seed.clone();
    let mut cur = seed.clone();
    for _ in 0..d_max {
        cur = geom.nabla_tilde10(&cur);
        if cur.is_zero() {
            break;
        }
        acc = acc.add(&cur);
    }
    acc
}

/// The unique `D_BT`-flat section with symbol `f`, solved weight by weight
/// up to `w_max`.
pub fn flat_section_of_function<S: Scalar>(
    f: &ChartJet<S>,
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
) -> FlatSection<S> {
    let (w_max, d_max) = (fed.w_max, fed.d_max);
    let seed = WeylElement::from_jet(geom.n, w_max, d_max, f.clone());
    let mut weights = vec![complete_holomorphic(geom, &seed, d_max)];
    for m in 0..w_max {
        // delta^{0,1}((O_f)_{m+1}) = D_BT((O_f)_{<=m}); the homotopy
        // recovers the full next weight because its ybar-free part vanishes.
        let mut partial = weights[0].clone();
        for w in &weights[1..=m] {
            partial = partial.add(w);
        }
        let residual = apply_d_bt_elem(fed, geom, &partial).part_01();
        let next = residual.delta_inv01().weight_component(m + 1);
        weights.push(next);
    }
    let truncated = weights.iter().any(|w| w.truncated());
    let mut d10_residual: f64 = 0.0;
    let clean = w_max.min(d_max - 1);
    for w in &weights {
        let r = geom
            .nabla10(w)
            .sub(&WeylForm::from_element(w.clone()).delta10());
        for (_, e) in &r.comps {
            d10_residual = d10_residual.max(e.restrict_y_degree(clean).max_abs());
        }
    }
    FlatSection { weights, truncated, d10_residual }
}

/// Flat section of a formal function `f = sum_i hbar^i f_i`: solved per part
/// and combined with the weight shift of the hbar power.
pub fn flat_section_of_formal<S: Scalar>(
    parts: &[ChartJet<S>],
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
) -> FlatSection<S> {
    assert!(!parts.is_empty());
    let mut weights: Vec<WeylElement<S>> =
        vec![WeylElement::zero(geom.n, fed.w_max, fed.d_max, geom.shape()); fed.w_max + 1];
    let mut truncated = false;
    let mut d10 = 0.0f64;
    for (i, f_i) in parts.iter().enumerate() {
        let sec = flat_section_of_function(f_i, geom, fed);
        truncated |= sec.truncated;
        d10 = d10.max(sec.d10_residual);
        for (m, w) in sec.weights.iter().enumerate() {
            if m + i <= fed.w_max {
                weights[m + i] = weights[m + i].add(&w.hbar_shift(i));
            } else if !w.is_zero() {
                truncated = true;
            }
        }
    }
    FlatSection { weights, truncated, d10_residual: d10 }
}

/// Flat section `O_s = sum_m (nabla~^{1,0})^m (s)` of a holomorphic section
/// of `L^k`, truncated at the y-degree cap.
pub fn flat_section_of_section<S: Scalar>(
    s: &LineSectionJet<S>,
    geom: &GeometryModel<S>,
    d_max: usize,
) -> FockElement<S> {
    assert!(s.holomorphic, "flat sections exist for holomorphic sections only");
    let mut out = FockElement::scalar(s.k, s.g.clone(), d_max);
    let mut cur = out.clone();
    for _ in 0..d_max {
        cur = cur.nabla_tilde10(geom);
        if cur.is_zero() {
            break;
        }
        out = out.add(&cur);
    }
    out
}

/// Bi-differential coefficients `C_0..C_order` of the induced star product,
/// read off `sigma(O_f star O_g) = sum_l hbar^l C_l(f, g)`.
pub fn star_product<S: Scalar>(
    f: &ChartJet<S>,
    g: &ChartJet<S>,
    geom: &GeometryModel<S>,
    fed: &FedosovData<S>,
    order: usize,
) -> Vec<ChartJet<S>> {
    assert!(order <= fed.w_max, "star product order exceeds the weight cap");
    let of = flat_section_of_function(f, geom, fed);
    let og = flat_section_of_function(g, geom, fed);
    let prod = of.total().wick(&og.total(), &geom.om_up);
    let mut sym = prod.symbol_formal();
    sym.truncate(order + 1);
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelKind;
    use crate::scalar::QC;
    use crate::weyl::TermKey;

    const W: usize = 3;
    const D: usize = 6;

    fn cp1_exact() -> (GeometryModel<QC>, FedosovData<QC>) {
        let geom =
            GeometryModel::<QC>::at(ModelKind::Cp1Fs, &[QC::from_ratios(1, 2, -1, 3)], 13);
        let fed = assemble_i_bt(&geom, W, D);
        (geom, fed)
    }

    #[test]
    fn flat_space_has_no_curvature_terms() {
        let geom = GeometryModel::<QC>::at(ModelKind::FlatCn, &[QC::from_ints(1, 1)], 8);
        let fed = assemble_i_bt(&geom, W, D);
        assert!(fed.i_bt.is_zero());
        for i_m in &fed.i_ms {
            assert!(i_m.is_zero());
        }
        assert!(fed.j_ric.is_zero());
    }

    #[test]
    fn i_m_shape_invariants() {
        let (_, fed) = cp1_exact();
        for (idx, i_m) in fed.i_ms.iter().enumerate() {
            let m = idx + 2;
            for (fk, e) in &i_m.comps {
                assert_eq!(fk.anti_degree(), 1);
                assert_eq!(fk.holo_degree(), 0);
                for (tk, c) in e.terms() {
                    if !c.is_zero_jet() {
                        assert_eq!(tk.yb_degree(), 1, "I_m must have ybar-degree 1");
                        assert_eq!(tk.y_degree(), m);
                        assert_eq!(tk.hbar, 0);
                    }
                }
            }
        }
        // J_Ric: hbar times pure y-polynomial data.
        for (_, e) in &fed.j_ric.comps {
            for (tk, c) in e.terms() {
                if !c.is_zero_jet() {
                    assert_eq!(tk.hbar, 1);
                    assert_eq!(tk.yb_degree(), 0);
                    assert!(tk.y_degree() >= 1);
                }
            }
        }
    }

    #[test]
    fn r_star_recursion_consistency() {
        // delta^{1,0} R_3^* recovers nabla^{1,0} R_2^* (the homotopy is
        // exact here because the input is delta^{1,0}-closed).
        let (geom, _) = cp1_exact();
        let r2 = build_r_star(&geom, 2, W, D);
        let r3 = build_r_star(&geom, 3, W, D);
        for p in 0..geom.n {
            let mut rhs = geom.nabla10_form(&r2[p]);
            for q in 0..geom.n {
                for i in 0..geom.n {
                    rhs = rhs.add(&r2[q].wedge_mul_dz(i, &geom.gamma[p][i][q]));
                }
            }
            let lhs = r3[p].delta10();
            let diff = lhs.sub(&rhs);
            assert!(diff.max_abs() == 0.0, "residual {}", diff.max_abs());
        }
    }

    #[test]
    fn index_lowering_roundtrip() {
        let (geom, _) = cp1_exact();
        let r2 = build_r_star(&geom, 2, W, D);
        let i2 = lower_tangent(&geom, &r2);
        // Raise the ybar index back with omega^{kbar p}: recovers R_2^*.
        for p in 0..geom.n {
            let mut rec = r2[p].clone();
            rec.comps.clear();
            for (fk, e) in &i2.comps {
                let mut ne = e.clone_empty();
                for (tk, c) in e.terms() {
                    assert_eq!(tk.yb_degree(), 1);
                    let kbar = (0..geom.n).find(|&j| tk.yb[j] > 0).unwrap();
                    let mut t2 = *tk;
                    t2.yb[kbar] -= 1;
                    ne.insert(t2, c.mul(&geom.om_up[kbar][p]));
                }
                rec.add_component(*fk, ne);
            }
            let diff = rec.sub(&r2[p]);
            let mut max: f64 = 0.0;
            for (_, e) in &diff.comps {
                for (_, c) in e.terms() {
                    max = max.max(c.truncate_to(8).max_abs());
                }
            }
            assert!(max == 0.0, "roundtrip residual {max}");
        }
    }

    #[test]
    fn bracket_with_i_bt_has_weight_zero() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let mut a = WeylElement::<QC>::zero(1, W, D, shape);
        let mut key = TermKey::scalar();
        key.y[0] = 1;
        key.yb[0] = 1;
        a.insert(key, ChartJet::constant(shape, QC::from_ints(2, 1)));
        let br = fed
            .i_bt
            .bracket(&WeylForm::from_element(a.clone()), &geom.om_up)
            .div_hbar();
        for (_, e) in &br.comps {
            for (tk, c) in e.terms() {
                if !c.is_zero_jet() {
                    assert_eq!(tk.weight(), 1, "bracket must preserve the weight");
                }
            }
        }
    }

    #[test]
    fn d_bt_squares_to_zero_exactly() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let mut a = WeylElement::<QC>::zero(1, W, D, shape);
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        for (h, yd, ybd, re, im) in [
            (0u8, 2u8, 1u8, 3i64, -2i64),
            (1, 1, 0, 1, 5),
            (0, 0, 2, -4, 1),
            (2, 3, 1, 2, 2),
        ] {
            let key = TermKey { hbar: h, y: [yd, 0, 0], yb: [ybd, 0, 0] };
            a.insert(key, z.mul(&z.conj()).scale(&QC::from_ints(re, im)));
        }
        let d1 = apply_d_bt_elem(&fed, &geom, &a);
        let d2 = apply_d_bt(&fed, &geom, &d1);
        // Exact below the truncation grade: y-degree <= w_max (the
        // curvature series is cut at m_cut = w_max + 2) and weight
        // <= w_max - 1.
        let mut max: f64 = 0.0;
        for (_, e) in &d2.comps {
            let r = e.restrict_y_degree(W);
            for (tk, c) in r.terms() {
                if tk.weight() + 1 < W {
                    max = max.max(c.max_abs());
                }
            }
        }
        assert!(max == 0.0, "D_BT^2 residual {max}");
    }

    #[test]
    fn flat_section_of_zbar_on_flat_c1() {
        let geom = GeometryModel::<QC>::at(ModelKind::FlatCn, &[QC::from_ints(2, -1)], 8);
        let fed = assemble_i_bt(&geom, W, D);
        let shape = geom.shape();
        let zbar = ChartJet::variable_ah(shape, 0, QC::from_ints(2, 1));
        let sec = flat_section_of_function(&zbar, &geom, &fed);
        // O_{zbar} = zbar + ybar, exactly.
        assert_eq!(sec.d10_residual, 0.0);
        let mut expect = WeylElement::zero(1, W, D, shape);
        expect.insert(TermKey::scalar(), zbar);
        let mut key = TermKey::scalar();
        key.yb[0] = 1;
        expect.insert(key, ChartJet::constant(shape, QC::one()));
        assert!(sec.total().sub(&expect).is_zero());
    }

    #[test]
    fn flat_section_symbol_and_flatness() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        // f = |z|^2 / (1 + |z|^2).
        let s = ChartJet::constant(shape, QC::one()).add(&z.mul(&z.conj()));
        let f = z.mul(&z.conj()).mul(&s.recip());
        let sec = flat_section_of_function(&f, &geom, &fed);
        // sigma(O_f) = f exactly: weight components with m >= 1 carry ybar,
        // so the symbol sits in weight 0.
        let sym = sec.total().symbol_formal();
        let t = sym[0].ord().min(f.ord());
        assert!(sym[0].truncate_to(t).sub(&f.truncate_to(t)).is_zero_jet());
        for (r, s_r) in sym.iter().enumerate().skip(1) {
            assert!(s_r.is_zero_jet(), "hbar^{r} symbol contamination");
        }
        // D_BT(O_f) = 0 below the truncation grade.
        let res = apply_d_bt_elem(&fed, &geom, &sec.total());
        let mut max: f64 = 0.0;
        for (_, e) in &res.comps {
            let e = e.restrict_y_degree(W);
            for (tk, c) in e.terms() {
                if tk.weight() < W {
                    max = max.max(c.max_abs());
                }
            }
        }
        assert!(max == 0.0, "flatness residual {max}");
        assert_eq!(sec.d10_residual, 0.0);
    }

    #[test]
    fn weight_recursion_identity() {
        // delta^{0,1}((O_f)_{m+1}) = D_BT((O_f)_{<=m}) termwise.
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        let f = z.mul(&z.conj()).add(&z.conj().scale(&QC::from_ints(0, 2)));
        let sec = flat_section_of_function(&f, &geom, &fed);
        for m in 0..W - 1 {
            let lhs = WeylForm::from_element(sec.weights[m + 1].clone()).delta01();
            let rhs = apply_d_bt_elem(&fed, &geom, &sec.partial_sum(m));
            let diff = lhs.sub(&rhs);
            let mut max: f64 = 0.0;
            for (_, e) in &diff.comps {
                max = max.max(e.restrict_y_degree(W).max_abs());
            }
            assert!(max == 0.0, "weight recursion residual at m={m}: {max}");
        }
    }

    #[test]
    fn holomorphic_functions_have_weight_zero_sections() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        let f = z.pow(3).add(&z.scale(&QC::from_ints(2, -1)));
        let sec = flat_section_of_function(&f, &geom, &fed);
        for m in 1..=W {
            assert!(sec.weights[m].is_zero(), "weight {m} should vanish");
        }
        let seed = WeylElement::from_jet(1, W, D, f);
        let expect = complete_holomorphic(&geom, &seed, D);
        assert!(sec.weights[0].sub(&expect).is_zero());
    }

    #[test]
    fn j_ric_is_potential_independent() {
        // Perturbing the Ricci potential by Re(holomorphic) leaves J_Ric
        // unchanged.
        let (geom, _) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        let hol = z.pow(2).scale(&QC::from_ints(3, 1));
        let pert = hol.add(&hol.conj());
        let g2 = geom.ric_pot.add(&pert);
        let j1 = build_j_ric(&geom, W, D);
        let j2 = build_j_of_potential(&geom, &g2, W, D);
        let diff = j1.sub(&j2);
        let mut max: f64 = 0.0;
        for (_, e) in &diff.comps {
            max = max.max(e.max_abs());
        }
        assert!(max == 0.0, "J depends on the potential choice: {max}");
    }

    #[test]
    fn level_k_connection_agrees_with_evaluated_formal() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let mut a = WeylElement::<QC>::zero(1, W, D, shape);
        for (h, yd, ybd) in [(0u8, 1u8, 1u8), (1, 2, 0), (0, 0, 1)] {
            let key = TermKey { hbar: h, y: [yd, 0, 0], yb: [ybd, 0, 0] };
            a.insert(
                key,
                ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3))
                    .scale(&QC::from_ints(1 + h as i64, ybd as i64)),
            );
        }
        let k = 7;
        let formal = apply_d_bt_elem(&fed, &geom, &a);
        let lhs = eval_form(&formal, k);
        let rhs = apply_d_bt_level_k(&fed, &geom, &WeylForm::from_element(a), k);
        let diff = lhs.sub(&rhs);
        let mut max: f64 = 0.0;
        for (_, e) in &diff.comps {
            max = max.max(e.max_abs());
        }
        assert!(max == 0.0, "evaluation does not commute: {max}");
    }

    #[test]
    fn star_product_leading_orders() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        let f = z.mul(&z.conj());
        let g = z.add(&z.conj());
        let c = star_product(&f, &g, &geom, &fed, 2);
        // C_0 = fg.
        let t = c[0].ord();
        assert!(c[0].sub(&f.mul(&g).truncate_to(t)).is_zero_jet());
        // C_1(f,g) = omega^{i jbar} d_i f d_jbar g (Wick type).
        let expect = geom.om_up[0][0].neg().mul(&f.d_h(0)).mul(&g.d_ah(0));
        let t = c[1].ord().min(expect.ord());
        assert!(c[1].truncate_to(t).sub(&expect.truncate_to(t)).is_zero_jet());
        // Antisymmetrized C_1 is the Poisson bracket.
        let c_rev = star_product(&g, &f, &geom, &fed, 1);
        let poisson = {
            let a = geom.om_up[0][0].mul(&f.d_ah(0)).mul(&g.d_h(0));
            let b = geom.om_up[0][0].mul(&f.d_h(0)).mul(&g.d_ah(0));
            a.sub(&b)
        };
        let anti = c[1].sub(&c_rev[1]);
        let t = anti.ord().min(poisson.ord());
        assert!(anti.truncate_to(t).sub(&poisson.truncate_to(t)).is_zero_jet());
    }

    #[test]
    fn star_product_constant_absorbs() {
        let (geom, fed) = cp1_exact();
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, -1, 3));
        let f = ChartJet::constant(shape, QC::from_ints(3, -2));
        let g = z.mul(&z.conj());
        let c = star_product(&f, &g, &geom, &fed, 2);
        assert!(c[1].is_zero_jet() && c[2].is_zero_jet());
        let c2 = star_product(&g, &f, &geom, &fed, 2);
        assert!(c2[1].is_zero_jet() && c2[2].is_zero_jet());
    }

    #[test]
    fn star_product_associativity_flat_exact() {
        // sum_{i+j=l} C_i(C_j(f,g),h) = sum_{i+j=l} C_i(f,C_j(g,h)) for
        // l <= 2, exact mode on flat C^1 with polynomial inputs (the
        // completion terminates, so no jet depth is lost).
        let geom = GeometryModel::<QC>::at(ModelKind::FlatCn, &[QC::from_ratios(1, 2, 1, 3)], 10);
        let fed = assemble_i_bt(&geom, W, D);
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, QC::from_ratios(1, 2, 1, 3));
        let f = z.mul(&z.conj());
        let g = z.add(&z.conj());
        let h = z.mul(&z).add(&z.conj().scale(&QC::from_ints(0, 1)));
        let order = 2;
        let fg = star_product(&f, &g, &geom, &fed, order);
        let gh = star_product(&g, &h, &geom, &fed, order);
        for l in 0..=order {
            let mut lhs = ChartJet::zero(shape);
            let mut rhs = ChartJet::zero(shape);
            for i in 0..=l {
                let j = l - i;
                lhs = lhs.add(&star_product(&fg[j], &h, &geom, &fed, order)[i]);
                rhs = rhs.add(&star_product(&f, &gh[j], &geom, &fed, order)[i]);
            }
            let t = lhs.ord().min(rhs.ord()).min(4);
            let diff = lhs.truncate_to(t).sub(&rhs.truncate_to(t));
            assert!(diff.is_zero_jet(), "associativity fails at order {l}");
        }
    }

    #[test]
    fn star_product_associativity_cp1_float() {
        // Same identity on CP^1 in floating mode; the composed solves eat
        // jet depth, so a large ambient order is needed.
        use crate::scalar::C64;
        let pt = C64::new(0.5, -1.0 / 3.0);
        let geom = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[pt], 24);
        let fed = assemble_i_bt(&geom, 2, 4);
        let shape = geom.shape();
        let z = ChartJet::variable_h(shape, 0, pt);
        let f = z.mul(&z.conj());
        let g = z.add(&z.conj());
        let h = z.mul(&z).add(&z.conj().scale(&C64::new(0.0, 1.0)));
        let order = 2;
        let fg = star_product(&f, &g, &geom, &fed, order);
        let gh = star_product(&g, &h, &geom, &fed, order);
        for l in 0..=order {
            let mut lhs = C64::new(0.0, 0.0);
            let mut rhs = C64::new(0.0, 0.0);
            for i in 0..=l {
                let j = l - i;
                lhs += star_product(&fg[j], &h, &geom, &fed, order)[i].value();
                rhs += star_product(&f, &gh[j], &geom, &fed, order)[i].value();
            }
            assert!(
                (lhs - rhs).norm() < 1e-10,
                "associativity fails at order {l}: {} vs {}",
                lhs,
                rhs
            );
        }
    }
}
