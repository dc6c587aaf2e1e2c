use phaselock_core::circle::{graph_transform, locate_eta_zero, Branch, GraphConfig, GraphSolution, Stability};
use phaselock_core::dynamics::{example_map, lyapunov, Direction};
use phaselock_core::frequency::{analyze, DetectOptions};
use phaselock_core::kam::{conjugate_to_rotation, KamConfig};
use phaselock_core::lindstedt::{lindstedt_expand, LindstedtConfig, LindstedtSeries};
use phaselock_core::normalform::{resonant_normal_form, NormalForm, NormalFormConfig};
use phaselock_core::sternberg::{constant_reduction, fiber_linearize, SkewProduct, SternbergConfig};

fn normal_form(order: usize) -> NormalForm {
    let map = example_map(0.3, 0.1, 0.5, 1.0, 0.0);
    let res = analyze(&map.omega, DetectOptions::default()).unwrap();
    resonant_normal_form(&map, &res, order, 0.02, &NormalFormConfig { band: 16, ..Default::default() }).unwrap()
}

#[test]
fn sternberg_around_repelling_circle() {
    let nf = normal_form(2);
    let eps = 0.02;
    let y = locate_eta_zero(&nf.eta_at(eps), Branch::PositiveSlope).unwrap().y_star;
    let sol = graph_transform(&nf, eps, 0.0, &[y], &GraphConfig::default()).unwrap();
    assert_eq!(sol.stability, Stability::Repelling);
    let sp = SkewProduct::from_circle(&nf, &sol, 10, 16).unwrap();
    let cfg = SternbergConfig::default();
    let c = fiber_linearize(&sp, &cfg).unwrap();
    eprintln!("{:?} iters {} rate {} res {} quad {}", c.pinching, c.iterations_used, c.measured_rate, c.residual, c.quadratic_residual);
    assert!(c.measured_rate <= c.pinching.predicted_rate() + 0.05);
    assert!(c.residual <= 10.0 * cfg.tol, "residual {}", c.residual);
    assert!(c.quadratic_residual <= 1e-8);
    assert!(c.tangency <= 1e-10);
}

fn circle(nf: &NormalForm, eps: f64, branch: Branch) -> GraphSolution {
    let y = locate_eta_zero(&nf.eta_at(eps), branch).unwrap().y_star;
    graph_transform(nf, eps, 0.0, &[y], &GraphConfig::default()).unwrap()
}

/// Graph distance from the Lindstedt embedding to a computed circle, in
/// normal-form coordinates.
fn lindstedt_gap(nf: &NormalForm, sol: &GraphSolution, series: &LindstedtSeries, eps: f64) -> f64 {
    let conj = nf.conjugacy(eps);
    let mut back = [0.0; 2];
    (0..256)
        .map(|i| {
            let p = series.embed(&[i as f64 / 256.0], eps);
            conj.inverse(&p, &mut back).unwrap();
            (back[1] - sol.y_star[0] - sol.w.eval1(&back[..1])).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn lindstedt_tracks_the_attracting_circle() {
    let nf = normal_form(3);
    let eta0 = nf.eta_at(0.0);
    let y0 = locate_eta_zero(&eta0, Branch::NegativeSlope).unwrap().y_star;
    let series = lindstedt_expand(&nf_map(), &nf.resonance, &[y0], 2, &LindstedtConfig { band: 16, ..Default::default() }).unwrap();
    let fitted: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&eps| {
            let sol = circle(&nf, eps, Branch::NegativeSlope);
            assert_eq!(sol.stability, Stability::Attracting);
            lindstedt_gap(&nf, &sol, &series, eps) / eps.powi(3)
        })
        .collect();
    eprintln!("fitted C' {fitted:?}");
    let (lo, hi) = fitted.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi <= 2.0 * lo, "{fitted:?}");
}

fn nf_map() -> phaselock_core::dynamics::MapFamily {
    example_map(0.3, 0.1, 0.5, 1.0, 0.0)
}

#[test]
fn exponent_along_omega_is_the_fiber_multiplier() {
    let nf = normal_form(2);
    let eps = 0.02;
    let sol = circle(&nf, eps, Branch::NegativeSlope);
    let sp = SkewProduct::from_circle(&nf, &sol, 1, 16).unwrap();
    // Conjugate the base circle map to its rotation, then reduce the
    // fiber derivative to a constant over that rotation.
    let f = sp.base_disp.add_constant(&sp.base_shift);
    let rc = conjugate_to_rotation(&f, &[1.0], &KamConfig { band: 16, ..Default::default() }, 8).unwrap();
    let cr = constant_reduction(&sp.a_sigma(), &rc.state.h, &[rc.rho], 16, 1e-9).unwrap();
    // Seed on the circle, in original coordinates.
    let seed = sol.polyline(&nf, 1).remove(0);
    let map = nf_map().with_params(1.0, eps);
    let orbit = lyapunov(&map, &seed, 100_000, Direction::Forward).unwrap();
    eprintln!("kappa {} along {} transverse {:?}", cr.kappa, orbit.lyapunov_along_omega, orbit.transverse_exponents);
    assert!((orbit.lyapunov_along_omega - cr.kappa.ln()).abs() <= 1e-3);
    assert!(orbit.transverse_exponents.iter().all(|v| v.abs() <= 1e-2));
}
