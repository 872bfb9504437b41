use arrayscat::bands::CriticalPointOptions;
use arrayscat::lattice::{EwaldSum, LatticeSpec, Momentum2};
use arrayscat::oracle::{dispersion_direct_sum, propagator_grid_sum, OracleConfig};
use arrayscat::propagator::{LocalPropagator, PropagatorOptions};

#[test]
fn propagator_matches_grid_sum_below_the_saddle() {
    let prop = LocalPropagator::new(&LatticeSpec::square(0.2), Momentum2::ZERO, PropagatorOptions::default()).unwrap();
    let e_sadd = prop.band().find_critical_points(&CriticalPointOptions::default()).unwrap().saddle().unwrap().energy;
    let energy = e_sadd - 0.5;
    let l = prop.evaluate(energy).unwrap().plus.l;
    let oracle = propagator_grid_sum(prop.band(), energy, &OracleConfig::default()).unwrap();
    assert!((l - oracle.l).norm() < 1e-3 * l.norm(), "{l} vs {}", oracle.l);
}

#[test]
fn ewald_matches_damped_direct_sum() {
    let spec = LatticeSpec::square(0.2);
    let ewald = EwaldSum::new(&spec).unwrap();
    let p = Momentum2::new(1.7, 0.4);
    let e = ewald.dispersion(p).unwrap().as_complex();
    let d = dispersion_direct_sum(&spec, p, OracleConfig::default().realspace_cutoff, &[0.04, 0.02, 0.01, 0.005]).unwrap();
    assert!((e - d.value.as_complex()).norm() < 1e-4, "{e} vs {:?}", d.value);
}
