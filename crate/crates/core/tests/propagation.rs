use eitlab::control::ControlSchedule;
use eitlab::optimizer::{slow_light_run, StorageSetup};
use eitlab::propagation::{evolve, refine_until_converged, store_and_retrieve, transmission_efficiency, Grid, Scenario};
use eitlab::scaling::absolute_delay;
use eitlab::{Envelope, MediumParams};
use num_complex::Complex64;

fn stored_eta(medium: &MediumParams, omega: f64, storage: f64) -> f64 {
    let grid = Grid::auto(medium, omega);
    let setup = StorageSetup {
        storage,
        ..StorageSetup::new(omega)
    };
    let input = setup.gaussian_seed(medium, grid.dt).unwrap();
    let control = setup.control(medium, grid.dt).unwrap();
    store_and_retrieve(&input, &control, medium, grid).unwrap().eta_total
}

#[test]
fn delay_at_d20_matches_group_delay() {
    let medium = MediumParams::resonant(20.0).unwrap();
    let grid = Grid::auto(&medium, 1.0);
    let t = 20.0;
    let pulse = Envelope::gaussian(0.0, grid.dt, (4.0 * t / grid.dt) as usize + 1, 2.0 * t, t).unwrap();
    let (delay, _) = slow_light_run(&pulse, &medium, 1.0, grid).unwrap();
    let expected = absolute_delay(&medium, 1.0).unwrap();
    assert!((delay / expected - 1.0).abs() < 0.1, "{delay} vs {expected}");
}

#[test]
fn spin_decay_is_exponential_in_storage_time() {
    let gamma_s = 1e-3;
    let medium = MediumParams::new(15.0, gamma_s, 0.0).unwrap();
    let taus = [20.0, 100.0, 200.0, 400.0];
    let logs: Vec<f64> = taus.iter().map(|&tau| stored_eta(&medium, 1.0, tau).ln()).collect();
    let n = taus.len() as f64;
    let mx = taus.iter().sum::<f64>() / n;
    let my = logs.iter().sum::<f64>() / n;
    let slope = taus.iter().zip(&logs).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / taus.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope / (-2.0 * gamma_s) - 1.0).abs() < 0.01, "{slope}");
}

#[test]
fn no_spin_decay_means_storage_time_is_free() {
    let medium = MediumParams::resonant(15.0).unwrap();
    let a = stored_eta(&medium, 1.0, 100.0);
    let b = stored_eta(&medium, 1.0, 200.0);
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
}

#[test]
fn output_is_causal() {
    let medium = MediumParams::resonant(10.0).unwrap();
    let grid = Grid::auto(&medium, 1.0);
    let on = 50.0;
    let pulse = Envelope::from_fn(0.0, grid.dt, (150.0 / grid.dt) as usize, |t| {
        if t < on {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((-((t - 90.0) / 15.0).powi(2)).exp(), 0.0)
        }
    })
    .unwrap();
    let state = evolve(&pulse, &ControlSchedule::continuous(250.0, 1.0).unwrap(), &medium, grid).unwrap();
    let out = state.transmitted.intensity();
    let peak = out.iter().cloned().fold(0.0, f64::max);
    let before = out
        .iter()
        .enumerate()
        .filter(|&(k, _)| state.transmitted.time(k) < on)
        .map(|(_, &v)| v)
        .fold(0.0, f64::max);
    assert!(before <= 1e-8 * peak, "{before} vs {peak}");
}

#[test]
fn dark_state_transmits_narrowband_pulse() {
    let medium = MediumParams::resonant(10.0).unwrap();
    let grid = Grid::auto(&medium, 1.0);
    let pulse = Envelope::gaussian(0.0, grid.dt, (600.0 / grid.dt) as usize, 300.0, 150.0).unwrap();
    let control = ControlSchedule::continuous(1000.0, 1.0).unwrap();
    let (eta, _) = transmission_efficiency(&pulse, &control, &medium, grid).unwrap();
    assert!(eta >= 0.99, "{eta}");
}

#[test]
fn empty_medium_transmits_everything() {
    let medium = MediumParams::resonant(0.0).unwrap();
    let grid = Grid::new(65, 0.05).unwrap();
    let pulse = Envelope::gaussian(0.0, 0.05, 400, 10.0, 4.0).unwrap();
    let (eta, _) = transmission_efficiency(&pulse, &ControlSchedule::off(30.0).unwrap(), &medium, grid).unwrap();
    assert!((eta - 1.0).abs() < 1e-9, "{eta}");
}

#[test]
fn smooth_pulse_converges_on_the_ladder_at_d10() {
    let medium = MediumParams::resonant(10.0).unwrap();
    let start = Grid::auto(&medium, 1.0);
    let setup = StorageSetup::new(1.0);
    let scenario = Scenario {
        input: setup.gaussian_seed(&medium, start.dt).unwrap(),
        control: setup.control(&medium, start.dt).unwrap(),
        medium,
    };
    let coarse = refine_until_converged(&scenario, 1e-3, start).unwrap();
    let fine = refine_until_converged(&scenario, 5e-4, start).unwrap();
    assert!(fine.n_z >= coarse.n_z && fine.dt <= coarse.dt);
}

#[test]
fn optimized_pulse_reproduces_its_efficiency() {
    let medium = MediumParams::resonant(25.0).unwrap();
    let grid = Grid::auto(&medium, 1.0);
    let setup = StorageSetup::new(1.0);
    let trace = setup.run(&medium, grid, None).unwrap();
    let report = store_and_retrieve(&trace.input, &setup.control(&medium, grid.dt).unwrap(), &medium, grid).unwrap();
    assert!((report.eta_total / trace.final_eta() - 1.0).abs() < 0.02);
}
