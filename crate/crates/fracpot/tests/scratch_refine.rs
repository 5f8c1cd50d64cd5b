use fracpot::geometry::{Ball, Domain};
use fracpot::kernels::{FracParams, MuMeasure};
use fracpot::quadrature::{mu_mass, ExteriorQuadScheme, MuRegion};

#[test]
fn scan_resolutions() {
    let params = FracParams::calibrate(2, 0.5, 1e-9).unwrap();
    let m = MuMeasure::new(params, 1.0);
    let dom = Domain::BallUnion(vec![Ball::unit(2), Ball::new(vec![1.2, 0.0], 0.5)]);
    let region = MuRegion::ComplementOfDomain(&dom);
    for (rad, ang) in [(24usize, 64usize), (24, 128), (24, 256), (48, 64), (24, 512), (48, 1024)] {
        let sch = ExteriorQuadScheme::with_nodes(rad, ang);
        let res = mu_mass(&m, &region, &sch).unwrap();
        println!("radial {rad:3} angular {ang:4}: {:.10} err {:.3e}", res.value, res.err);
    }
}
