use fedosov_bt::bf::*;
use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;

fn main() {
    let w = 3usize;
    let d = 6usize;
    for (kind, label) in [(ModelKind::FlatCn, "flat"), (ModelKind::Cp1Fs, "cp1")] {
        let pt = C64::new(0.5, 0.2);
        let geom = GeometryModel::<C64>::at(kind, &[pt], 12);
        let fed = assemble_i_bt(&geom, w, d);
        let shape = geom.shape();
        let k = 5;
        let z = ChartJet::variable_h(shape, 0, pt);
        let s = LineSectionJet::holomorphic(k, z.pow(3).add(&z.scale(&C64::new(1.0, -2.0))));
        let os = flat_section_of_section(&s, &geom, d);
        let res = apply_d_bf(&os, &geom, &fed);
        println!("== D_BF(O_s) on {label} ==");
        for (fk, e) in &res.comps {
            for (ee, c) in e.terms() {
                if c.max_abs() > 1e-12 {
                    println!(
                        "  form(dz={:02b},dzb={:02b}) y{:?}: {:.3e}",
                        fk.dz, fk.dzb, ee, c.max_abs()
                    );
                }
            }
        }
        // m=2 oracle comparison.
        let zb = z.conj();
        let f = z.mul(&zb).add(&zb.pow(2).scale(&C64::new(1.0, 1.0)));
        let pipe = KsPipeline::new(geom.clone(), fed.clone(), &[f.clone()]);
        let got = pipe.ks_operator(k, 2, &s);
        let expect = ks_oracle_m2(&geom, &f, k, &s);
        println!(
            "  m2: got {:?} expect {:?} (ratio {:?})",
            got.value(),
            expect.value(),
            got.value() / expect.value()
        );
        // dbar formula vs jet derivative at m = 0 (weight-1 only, no J).
        for m in 0..=1usize {
            let field = pipe.ks_partial_sum(k, m, &s);
            let direct = field.d_ah(0);
            let formula = pipe.dbar_partial_sum(k, m, &s)[0].clone();
            println!(
                "  dbar m={m}: direct {:?} formula {:?}",
                direct.value(),
                formula.value()
            );
        }
        // tilde comparison at m = 1.
        let p1 = pipe.ks_operator(k, 1, &s);
        let p1t = pipe.tilde_ks(k, 1, &s);
        println!(
            "  tilde m=1: P {:?} P~ {:?} ratio {:?}",
            p1.value(),
            p1t.value(),
            p1.value() / p1t.value()
        );
    }
}
