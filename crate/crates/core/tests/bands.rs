use arrayscat::bands::{CriticalKind, CriticalPointOptions, TwoExcitationBand};
use arrayscat::lattice::{LatticeSpec, Momentum2};

fn energies(band: &TwoExcitationBand, grid_n: usize) -> Vec<(CriticalKind, f64)> {
    let opts = CriticalPointOptions { grid_n, ..CriticalPointOptions::default() };
    let mut v: Vec<_> = band.find_critical_points(&opts).unwrap().points.iter().map(|c| (c.kind, c.energy)).collect();
    v.sort_by(|a, b| a.1.total_cmp(&b.1));
    v
}

#[test]
fn square_array_critical_points() {
    let band = TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::ZERO).unwrap();
    let report = band.find_critical_points(&CriticalPointOptions::default()).unwrap();
    let max = report.maximum().unwrap();
    let sadd = report.saddle().unwrap();
    assert!((max.energy - 2.189303620).abs() < 1e-6, "{}", max.energy);
    assert!((sadd.energy - 0.995690277).abs() < 1e-6, "{}", sadd.energy);
    assert_eq!(report.of_kind(CriticalKind::Minimum).count(), 0);
}

#[test]
fn critical_energies_stable_under_seed_refinement() {
    for total in [Momentum2::ZERO, Momentum2::new(0.2, 0.0)] {
        let band = TwoExcitationBand::new(&LatticeSpec::square(0.2), total).unwrap();
        let coarse = energies(&band, 128);
        let fine = energies(&band, 256);
        assert_eq!(coarse.len(), fine.len(), "P = {total:?}");
        for (c, f) in coarse.iter().zip(&fine) {
            assert_eq!(c.0, f.0);
            assert!((c.1 - f.1).abs() < 1e-3, "{c:?} vs {f:?}");
        }
    }
}

#[test]
fn orbits_share_energy() {
    let band = TwoExcitationBand::new(&LatticeSpec::square(0.2), Momentum2::new(0.2, 0.0)).unwrap();
    for cp in band.find_critical_points(&CriticalPointOptions::default()).unwrap().points {
        for q in &cp.symmetry_orbit {
            assert!((band.delta2(*q) - cp.energy).abs() < 1e-9);
        }
    }
}
