use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;
use fedosov_bt::weyl::*;

fn main() {
    let w = 3usize;
    let d = 6usize;
    let pt = C64::new(0.5, -1.0 / 3.0);
    let geom = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[pt], 12);
    let fed = assemble_i_bt(&geom, w, d);
    let shape = geom.shape();

    let mut a = WeylElement::<C64>::zero(1, w, d, shape);
    for (h, yd, ybd) in [(0u8, 1u8, 1u8), (1, 2, 0), (0, 0, 1)] {
        let key = TermKey { hbar: h, y: [yd, 0, 0], yb: [ybd, 0, 0] };
        a.insert(
            key,
            ChartJet::variable_h(shape, 0, pt).scale(&C64::new(1.0 + h as f64, ybd as f64)),
        );
    }
    let k = 7;
    let formal = apply_d_bt_elem(&fed, &geom, &a);
    let lhs = eval_form(&formal, k);
    let rhs = apply_d_bt_level_k(&fed, &geom, &WeylForm::from_element(a), k);
    let diff = lhs.sub(&rhs);
    println!("== eval-vs-level-k diff ==");
    for (fk, e) in &diff.comps {
        for (tk, c) in e.terms() {
            if c.max_abs() > 1e-13 {
                println!(
                    "  form(dz={:02b},dzb={:02b}) h^{} y{:?} yb{:?}: {:.3e}",
                    fk.dz, fk.dzb, tk.hbar, tk.y, tk.yb, c.max_abs()
                );
            }
        }
    }

    // Associativity at order 2, float mode, with diagnostics.
    let z = ChartJet::variable_h(shape, 0, pt);
    let f = z.mul(&z.conj());
    let g = z.add(&z.conj());
    let h = z.mul(&z).add(&z.conj().scale(&C64::new(0.0, 1.0)));
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
        println!(
            "assoc l={l}: lhs.ord={} rhs.ord={} diff max (trunc {t}) = {:.3e}, value diff {:.3e}",
            lhs.ord(),
            rhs.ord(),
            diff.max_abs(),
            (lhs.value() - rhs.value()).norm()
        );
    }
}
