use arrayscat::bands::Domain;
use arrayscat::lattice::{LatticeSpec, Momentum2};
use arrayscat::propagator::PropagatorOptions;
use arrayscat::scattering::{IncomingState, Scattering};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn on_shell_dark_pairs_obey_unitarity_and_positivity() {
    let spec = LatticeSpec::square(0.2);
    let b = spec.reciprocal_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 4 {
        let total = Momentum2::new(rng.gen_range(-0.5 * b..0.5 * b), rng.gen_range(-0.5 * b..0.5 * b));
        let q = Momentum2::new(rng.gen_range(-0.5 * b..0.5 * b), rng.gen_range(-0.5 * b..0.5 * b));
        let sc = Scattering::new(&spec, total, PropagatorOptions::default()).unwrap();
        if sc.band().domain(q) != Domain::D0 {
            continue;
        }
        let Ok(rec) = sc.cross_section(&IncomingState::dark_pair(total, q)) else { continue };
        let s = sc.s_eigenvalue(rec.kinematics.energy).unwrap();
        assert!(s.magnitude2 <= 1.0 + 1e-6, "|s|² = {}", s.magnitude2);
        assert!(rec.densities.iter().all(|r| *r >= 0.0), "{:?}", rec.densities);
        assert!((rec.branching.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((rec.sigma.iter().sum::<f64>() - rec.sigma_tot).abs() <= 1e-12 * rec.sigma_tot);
        checked += 1;
    }
}

#[test]
fn loss_inside_the_dark_band_only() {
    let spec = LatticeSpec::square(0.2);
    let sc = Scattering::new(&spec, Momentum2::ZERO, PropagatorOptions::default()).unwrap();
    let s = sc.s_eigenvalue(0.6).unwrap();
    let p = sc.propagator().evaluate(0.6).unwrap();
    assert!(p.plus.densities()[0] > 0.0);
    assert!(s.magnitude2 < 1.0);
    let s_top = sc.s_eigenvalue(2.3).unwrap();
    assert!((s_top.magnitude2 - 1.0).abs() < 1e-6, "{}", s_top.magnitude2);
}
