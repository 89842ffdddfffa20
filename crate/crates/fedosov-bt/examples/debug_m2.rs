use fedosov_bt::fedosov::*;
use fedosov_bt::geometry::*;
use fedosov_bt::jet::ChartJet;
use fedosov_bt::scalar::C64;

fn main() {
    let w = 3usize;
    let d = 6usize;
    let pt = C64::new(0.5, 0.2);
    let geom = GeometryModel::<C64>::at(ModelKind::Cp1Fs, &[pt], 14);
    let fed = assemble_i_bt(&geom, w, d);
    let shape = geom.shape();
    let z = ChartJet::variable_h(shape, 0, pt);
    let zb = z.conj();
    let f = z.mul(&zb).add(&zb.pow(2).scale(&C64::new(1.0, 1.0)));
    let sec = flat_section_of_function(&f, &geom, &fed);
    let w2 = &sec.weights[2];

    println!("== (O_f)_2 sectors at y-degree 0 ==");
    for (tk, c) in w2.terms() {
        if tk.y_degree() <= 1 && c.max_abs() > 1e-13 {
            println!(
                "  h^{} y{:?} yb{:?}: value {:?}",
                tk.hbar, tk.y, tk.yb, c.value()
            );
        }
    }
    let lap = geom.laplacian(&f);
    let minus_i_dbar_lap = lap.d_ah(0).scale(&C64::new(0.0, -1.0));
    println!("  -i dbar(Delta f) = {:?}", minus_i_dbar_lap.value());
    let half_hess = {
        // (1/2)(dbar^2 f - Gammabar dbar f)
        let gb = geom.gamma_bar[0][0][0].clone();
        f.d_ah(0)
            .d_ah(0)
            .sub(&gb.mul(&f.d_ah(0)))
            .scale(&C64::new(0.5, 0.0))
    };
    println!("  (1/2) nabla-bar^2 f = {:?}", half_hess.value());
}
