use phonon_stirap::dynamics::{propagator_oracle, MomentMatrix, B_1, B_2};
use phonon_stirap::model::{PulseSchedule, SystemParams};
use phonon_stirap::pipeline::{simulate, Scenario};
use phonon_stirap::sweep::{best_point, run_sweep, SweepAxis, SweepParam, DEFAULT_CELL_CAP};
use phonon_stirap::Error;

fn coarse(scenario: Scenario) -> Scenario {
    Scenario { n_points: 121, ..scenario }
}

#[test]
fn reference_run_matches_independent_integration() {
    // Eighth-order reference integration of the same flow at rtol 1e-12.
    let expected = [
        0.0004765717845718543,
        1.5331089272799593e-06,
        0.0028475687389772288,
        0.22587726190680607,
        0.009527249823876486,
    ];
    let sim = simulate(&Scenario::default()).unwrap();
    let last = sim.moments.occupancies.last().unwrap();
    for (got, want) in last.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
    }
    assert_eq!(sim.metrics.eta, last[B_2]);
}

#[test]
fn lossless_run_conserves_and_matches_oracle() {
    let scenario = Scenario { params: SystemParams::lossless(), ..Scenario::default() };
    let sim = simulate(&scenario).unwrap();
    for n in &sim.moments.moments {
        assert!((n.trace().re - 1.0).abs() <= 1e-8);
    }
    let n0 = MomentMatrix::from_occupancies(scenario.initial).unwrap();
    let oracle = propagator_oracle(&scenario.params, &scenario.schedule, &sim.mean_field, &n0, 4096).unwrap();
    for (a, b) in sim.moments.occupancies.iter().zip(&oracle.occupancies) {
        for k in 0..5 {
            assert!((a[k] - b[k]).abs() <= 1e-6);
        }
    }
}

#[test]
fn vacuum_flow_is_linear_in_initial_occupancy() {
    let one = simulate(&coarse(Scenario::default())).unwrap();
    let three = simulate(&coarse(Scenario { initial: [0.0, 0.0, 0.0, 3.0, 0.0], ..Scenario::default() })).unwrap();
    for (a, b) in one.moments.occupancies.iter().zip(&three.moments.occupancies) {
        for k in 0..5 {
            assert!((3.0 * a[k] - b[k]).abs() <= 1e-8);
        }
    }
    assert!((one.metrics.eta - three.metrics.eta).abs() <= 1e-9);
}

#[test]
fn warm_baths_feed_both_membranes() {
    let cold = simulate(&coarse(Scenario::default())).unwrap();
    let params = SystemParams { nbar1: 5.0, nbar2: 5.0, gamma_m1: 0.01, gamma_m2: 0.01, ..SystemParams::lossy() };
    let warm = simulate(&coarse(Scenario { params, ..Scenario::default() })).unwrap();
    let (c, w) = (cold.moments.occupancies.last().unwrap(), warm.moments.occupancies.last().unwrap());
    assert!(w[B_1] > c[B_1] && w[B_2] > c[B_2]);
}

#[test]
fn invalid_runs_are_rejected() {
    let bad_width = Scenario { schedule: PulseSchedule::new(350.0, -1.0, 1.0), ..Scenario::default() };
    assert!(matches!(simulate(&bad_width), Err(Error::InvalidInput(_))));

    let empty = Scenario { initial: [0.0; 5], ..coarse(Scenario::default()) };
    assert_eq!(simulate(&empty).unwrap_err(), Error::ZeroInitial);

    let negative = Scenario { initial: [0.0, 0.0, 0.0, -1.0, 0.0], ..Scenario::default() };
    assert!(matches!(simulate(&negative), Err(Error::InvalidInput(_))));
}

#[test]
fn stronger_coupling_transfers_more() {
    let axes = vec![SweepAxis::new(SweepParam::Coupling, vec![0.001, 0.003]).unwrap()];
    let result = run_sweep(&coarse(Scenario::default()), &axes, DEFAULT_CELL_CAP).unwrap();
    assert_eq!(result.failed(), 0);
    let eta: Vec<f64> = result.cells.iter().map(|c| c.metrics().unwrap().eta).collect();
    assert!(eta[1] > eta[0], "{eta:?}");
    assert_eq!(best_point(&result).unwrap().values, vec![0.003]);
}
