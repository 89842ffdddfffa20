use fedosov_bt::bf::*;
use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;

fn main() {
    let pt = C64::new(0.5, 1.0 / 3.0);
    for (w, d, amb) in [(3usize, 6usize, 14usize), (4, 8, 18)] {
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
        let pipe = KsPipeline::new(geom, fed, &[f.clone()]);
        for m in 1..=2usize {
            let p = pipe.ks_operator(k, m, &s).value();
            let pt_ = pipe.tilde_ks(k, m, &s).value();
            println!("W={w} D={d}: m={m}: P {p:?}  P~ {pt_:?}  diff {:.3e}", (p - pt_).norm());
        }
    }
}
