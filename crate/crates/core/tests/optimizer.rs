use eitlab::optimizer::{efficiency_vs_depth, optimal_pulse_duration, StorageSetup};
use eitlab::propagation::Grid;
use eitlab::spectrum::fitted_eit_fwhm;
use eitlab::{Envelope, MediumParams};

#[test]
fn converged_efficiency_does_not_depend_on_seed() {
    for d in [10.0, 25.0] {
        let medium = MediumParams::resonant(d).unwrap();
        let grid = Grid::auto(&medium, 1.0);
        let setup = StorageSetup::new(1.0);
        let w = setup.write_len(&medium, grid.dt);
        let n = (w / grid.dt).round() as usize + 1;
        let seeds = [
            setup.gaussian_seed(&medium, grid.dt).unwrap(),
            setup.square_seed(&medium, grid.dt).unwrap(),
            Envelope::gaussian(0.0, grid.dt, n, 0.4 * w, 0.1 * w).unwrap(),
        ];
        let etas: Vec<f64> = seeds
            .iter()
            .map(|s| setup.run(&medium, grid, Some(s)).unwrap().final_eta())
            .collect();
        let spread = etas.iter().cloned().fold(f64::MIN, f64::max) - etas.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-3, "d={d}: {etas:?}");
    }
}

#[test]
fn optimal_width_grows_linearly_and_tracks_bandwidth() {
    let width = |d: f64| {
        let medium = MediumParams::resonant(d).unwrap();
        let trace = StorageSetup::new(1.0).run(&medium, Grid::auto(&medium, 1.0), None).unwrap();
        let t = optimal_pulse_duration(&trace).unwrap();
        assert!(!t.equivalent_width, "d={d}");
        t.value
    };
    let (t50, t100) = (width(50.0), width(100.0));
    assert!((t100 / t50 / 2.0 - 1.0).abs() < 0.25, "{t50} -> {t100}");

    let gamma_eit = fitted_eit_fwhm(&MediumParams::resonant(50.0).unwrap(), 1.0).unwrap().1.fwhm;
    let ratio = 1.0 / (t50 * gamma_eit);
    assert!((0.15..=0.6).contains(&ratio), "{ratio}");
}

#[test]
fn efficiency_grows_with_depth() {
    let rows = efficiency_vs_depth(&[25.0, 100.0], 2.236, 0.0, &StorageSetup::new(1.0)).unwrap();
    assert!(rows[1].eta_opt > rows[0].eta_opt, "{rows:?}");
    assert!(rows.iter().all(|r| r.converged));
}

#[test]
fn depth_list_must_ascend() {
    assert!(efficiency_vs_depth(&[20.0, 10.0], 1.0, 0.0, &StorageSetup::new(1.0)).is_err());
    assert!(efficiency_vs_depth(&[0.0, 10.0], 1.0, 0.0, &StorageSetup::new(1.0)).is_err());
}
