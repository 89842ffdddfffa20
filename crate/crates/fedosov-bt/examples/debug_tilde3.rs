use fedosov_bt::bf::*;
use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;
use fedosov_bt::weyl::{WeylElement, WeylForm, FormKey};

fn tilde_of(alpha: &WeylElement<C64>, geom: &GeometryModel<C64>, os: &FockElement<C64>, k: u32) -> C64 {
    let shifted = alpha.hbar_shift(1);
    let dd = WeylForm::from_element(shifted).delta01();
    let acted = bf_action_form(&dd, os, geom, 0);
    let a_1bar = acted
        .comps
        .get(&FormKey::dzb(0))
        .map(|e| e.symbol())
        .unwrap_or_else(|| ChartJet::zero(geom.shape()));
    geom.chern_d(&a_1bar, 0, k).mul(&geom.om_up[0][0]).value()
}

fn main() {
    let pt = C64::new(0.5, 1.0 / 3.0);
    let (w, d, amb) = (3usize, 6usize, 14usize);
    let geom = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[pt], amb);
    let fed = assemble_i_bt(&geom, w, d);
    let shape = geom.shape();
    let z = ChartJet::variable_h(shape, 0, pt);
    let zb = z.conj();
    let f = z.mul(&zb).add(&zb.scale(&C64::new(0.0, 1.0)));
    let k = 5;
    let s = LineSectionJet::holomorphic(
        k,
        z.pow(2).add(&ChartJet::constant(shape, C64::new(1.0, 1.0))),
    );
    let pipe = KsPipeline::new(geom.clone(), fed, &[f.clone()]);
    let os = pipe.o_s(&s);
    let w2 = &pipe.of.weights[2];

    // Reading B: P~_m from hbar * (O_f)_{m+1}.
    for m in 1..=2usize {
        let p = bf_action(&pipe.of.weights[m], &os, &geom, 0).symbol().value();
        let pt_b = tilde_of(&pipe.of.weights[m + 1].clone(), &geom, &os, k);
        println!("reading B m={m}: P {p:?}  P~_B {pt_b:?}  diff {:.3e}", (p - pt_b).norm());
    }

    // Split (O_f)_2 by (hbar, ybar-degree) sector.
    for (h, l) in [(0u8, 2usize), (1, 1)] {
        let mut sector = w2.clone_empty();
        for (tk, c) in w2.terms() {
            if tk.hbar == h && tk.yb_degree() == l {
                sector.insert(*tk, c.clone());
            }
        }
        let p = bf_action(&sector, &os, &geom, 0).symbol().value();
        let pt_ = tilde_of(&sector, &geom, &os, k);
        println!(
            "sector h^{h} yb^{l}: P {p:?}  P~ {pt_:?}  diff {:.3e}",
            (p - pt_).norm()
        );
    }
}

// second entry point via env var would be overkill; quick inline test in main is above
