use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;
use fedosov_bt::weyl::*;

fn main() {
    let w = 3usize;
    let d = 5usize;
    let pt = C64::new(0.4, -0.3);
    let geom = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[pt], 12);
    let fed = assemble_i_bt(&geom, w, d);
    let shape = geom.shape();

    // 1) D_BT on the completion of a holomorphic f: residual should vanish.
    let z = ChartJet::variable_h(shape, 0, pt);
    let f = z.pow(2);
    let sec = flat_section_of_function(&f, &geom, &fed);
    println!("== O_f weights for holomorphic f = z^2 ==");
    for (m, wgt) in sec.weights.iter().enumerate() {
        println!("  weight {m}: max_abs = {:.3e}", wgt.max_abs());
        if m >= 1 && wgt.max_abs() > 1e-13 {
            for (tk, c) in wgt.terms() {
                if c.max_abs() > 1e-13 {
                    println!(
                        "    term h^{} y^{:?} yb^{:?}: |c| = {:.3e} val {:?}",
                        tk.hbar, tk.y, tk.yb, c.max_abs(), c.value()
                    );
                }
            }
        }
    }

    // Decompose the residual D_BT((O_f)_0) by source.
    let o0 = &sec.weights[0];
    let nab = geom.nabla_form(&WeylForm::from_element(o0.clone()));
    let del = WeylForm::from_element(o0.clone()).delta();
    let br = fed.i_bt.bracket(&WeylForm::from_element(o0.clone()), &geom.om_up).div_hbar();
    let total = nab.sub(&del).add(&br);
    println!("== residual parts on (O_f)_0, (0,1) component ==");
    for (label, part) in [("nabla-delta", nab.sub(&del)), ("bracket", br), ("total", total)] {
        let p01 = part.part_01();
        let mut per_deg = vec![0.0f64; d + 1];
        for (_, e) in &p01.comps {
            for (tk, c) in e.terms() {
                let yd = tk.y_degree();
                per_deg[yd] = per_deg[yd].max(c.max_abs());
            }
        }
        println!("  {label}: per y-degree {per_deg:?}");
    }

    // 2) D^2 = 0 residual structure on a single monomial.
    let mut a = WeylElement::<C64>::zero(1, w, d, shape);
    let mut key = TermKey::scalar();
    key.yb[0] = 1;
    a.insert(key, ChartJet::constant(shape, C64::new(1.0, 0.0)));
    let d1 = apply_d_bt_elem(&fed, &geom, &a);
    let d2 = apply_d_bt(&fed, &geom, &d1);
    println!("== D^2 on ybar ==");
    for (fk, e) in &d2.comps {
        for (tk, c) in e.terms() {
            if c.max_abs() > 1e-13 {
                println!(
                    "  form(dz={:02b},dzb={:02b}) h^{} y{:?} yb{:?}: {:.3e}",
                    fk.dz, fk.dzb, tk.hbar, tk.y, tk.yb, c.max_abs()
                );
            }
        }
    }
}
