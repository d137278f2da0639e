use gamker_core::{
    bandwidth, density_estimate, estimate_on_grid, regression_estimate, sup_error,
    BandwidthSchedule, Curve, EvaluationGrid, ProcessSpec, RegressionFn, SeededRng,
};

const SEED: u64 = 42;

fn h_for(n: usize) -> f64 {
    bandwidth(BandwidthSchedule::new(1.0, 0.45).unwrap(), n as u64).unwrap()
}

#[test]
fn density_at_one_is_close_in_most_replications() {
    let spec = ProcessSpec::IidExponential { rate: 1.0 };
    let h = h_for(5000);
    let truth = (-1.0f64).exp();
    let hits = (0..200)
        .filter(|&r| {
            let s = spec.generate(&mut SeededRng::new(SEED, r), 5000).unwrap();
            (density_estimate(&s, 1.0, h).unwrap() - truth).abs() <= 0.03
        })
        .count();
    assert!(hits >= 190, "{hits}/200");
}

#[test]
fn regression_at_one_is_close_in_most_replications() {
    let spec = ProcessSpec::RegressionOver {
        base: Box::new(ProcessSpec::IidExponential { rate: 1.0 }),
        regfn: RegressionFn::Rational,
        noise_var: 0.25,
    };
    let h = h_for(5000);
    let hits = (0..200)
        .filter(|&r| {
            let s = spec.generate(&mut SeededRng::new(SEED, r), 5000).unwrap();
            let est = regression_estimate(&s, 1.0, h).unwrap();
            !est.starved && (est.value - 0.5).abs() <= 0.05
        })
        .count();
    assert!(hits >= 180, "{hits}/200");
}

#[test]
fn dense_grid_is_finite_and_non_negative() {
    let spec = ProcessSpec::IidExponential { rate: 1.0 };
    let s = spec.generate(&mut SeededRng::new(SEED, 0), 2000).unwrap();
    let grid = EvaluationGrid::linspace(0.2, 3.0, 401).unwrap();
    let series = estimate_on_grid(&s, &grid, h_for(2000), false).unwrap();
    assert_eq!(series.density.len(), 401);
    assert!(series.density.iter().all(|d| d.is_finite() && *d >= 0.0));
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

#[test]
fn median_sup_error_shrinks_with_n() {
    let spec = ProcessSpec::IidExponential { rate: 1.0 };
    let grid = EvaluationGrid::linspace(0.2, 3.0, 57).unwrap();
    let medians: Vec<f64> = [500, 2000, 8000]
        .iter()
        .map(|&n| {
            let errors = (0..50)
                .map(|r| {
                    let s = spec.generate(&mut SeededRng::new(SEED, r), n).unwrap();
                    let series = estimate_on_grid(&s, &grid, h_for(n), false).unwrap();
                    sup_error(&series, |x| (-x).exp(), Curve::Density).unwrap()
                })
                .collect();
            median(errors)
        })
        .collect();
    assert!(
        medians[0] > medians[1] && medians[1] > medians[2],
        "{medians:?}"
    );
}
