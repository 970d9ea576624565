mod common;

use common::quantile;
use imptrack::control::{BaselineParams, ControlLaw, Method};
use imptrack::harness::{
    compare_base, compare_methods, run_scenario, summarize, sweep_base, sweep_horizon, InitialLateral, Scenario,
};
use imptrack::path::{PathSpec, SegmentDescriptor, SegmentKind, StartPose};
use imptrack::presets::{self, Placement};
use imptrack::vehicle::ImplementConfig;

fn line(length: f64) -> PathSpec {
    PathSpec {
        start: StartPose { x_m: 0.0, y_m: 0.0, heading_rad: 0.0 },
        segments: vec![SegmentDescriptor { kind: SegmentKind::Line, length_m: length, curvature_per_m: 0.0, start: None }],
    }
}

fn arc(length: f64, c: f64) -> PathSpec {
    PathSpec {
        start: StartPose { x_m: 0.0, y_m: 0.0, heading_rad: 0.0 },
        segments: vec![SegmentDescriptor { kind: SegmentKind::Arc, length_m: length, curvature_per_m: c, start: None }],
    }
}

fn rear(method: Method, path: PathSpec, e0: f64) -> Scenario {
    let mut scn = Scenario::new("t", path, Placement::Rear.implement(), presets::table1_law(Placement::Rear, method));
    scn.initial.lateral = InitialLateral::ImplementError(e0);
    scn
}

#[test]
fn fixed_point_is_preserved_on_a_line() {
    for method in Method::ALL {
        let log = run_scenario(&rear(method, line(40.0), 0.0)).unwrap();
        let max = log.records.iter().map(|r| r.e_i_exact.abs()).fold(0.0, f64::max);
        assert!(max < 1e-3, "{method}: {max}");
        assert!(log.fault.is_none());
    }
}

#[test]
fn seeded_runs_are_bit_identical() {
    let mut scn = rear(Method::Optimal, PathSpec::exp1(), 0.5);
    scn.noise.enabled = true;
    scn.seed = 42;
    let a = run_scenario(&scn).unwrap();
    let b = run_scenario(&scn).unwrap();
    assert_eq!(a, b);
    assert_eq!(summarize(&a).unwrap(), summarize(&b).unwrap());
    scn.seed = 43;
    let c = run_scenario(&scn).unwrap();
    assert_ne!(a.records, c.records);
}

/// Local maxima of `|e_I|` between zero crossings.
fn half_wave_peaks(e: &[f64]) -> Vec<f64> {
    let mut peaks = Vec::new();
    let mut current: f64 = 0.0;
    for w in e.windows(2) {
        current = current.max(w[0].abs());
        if w[0].signum() != w[1].signum() {
            peaks.push(current);
            current = 0.0;
        }
    }
    peaks.push(current.max(e.last().unwrap().abs()));
    peaks
}

#[test]
fn backstepping_decays_on_a_line() {
    // front: monotone after the peak; rear: the implement swings past the
    // path, with every half-wave smaller than the previous one
    for placement in Placement::ALL {
        let mut scn = rear(Method::Backstepping, line(80.0), 0.5);
        scn.implement = placement.implement();
        scn.law = presets::table1_law(placement, Method::Backstepping);
        let log = run_scenario(&scn).unwrap();
        let e: Vec<f64> = log.records.iter().map(|r| r.e_i_exact).collect();
        let peaks = half_wave_peaks(&e);
        for w in peaks.windows(2) {
            assert!(w[1] < w[0], "{placement:?}: peaks {peaks:?}");
        }
        assert!(e.last().unwrap().abs() < 1e-3);
        if placement == Placement::Front {
            let abs: Vec<f64> = e.iter().map(|v| v.abs()).collect();
            assert_eq!(peaks.len(), 1);
            for w in abs.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn lateral_servoing_converges_on_a_line() {
    for placement in Placement::ALL {
        let mut scn = rear(Method::LateralServoing, line(60.0), 0.5);
        scn.implement = placement.implement();
        scn.law = presets::table1_law(placement, Method::LateralServoing);
        let log = run_scenario(&scn).unwrap();
        let tail = log.records.iter().filter(|r| r.s > 40.0).map(|r| r.e_i_exact.abs()).fold(0.0, f64::max);
        assert!(tail < 0.02, "{placement:?}: {tail}");
    }
}

#[test]
fn optimal_reaches_the_curvature_matched_steady_state() {
    let c = 0.1;
    let mut scn = rear(Method::Optimal, arc(60.0, c), 0.2);
    scn.implement = ImplementConfig::new(0.0, 0.0);
    let log = run_scenario(&scn).unwrap();
    let last = log.records.last().unwrap();
    assert!((last.theta_desired - last.theta_tilde).abs() < 1e-3);
    assert!((last.delta_cmd - (scn.vehicle.wheelbase * c).atan()).abs() < 1e-3, "{}", last.delta_cmd);

    // offset implement: the axle settles on the concentric circle that
    // puts the implement on the path
    let scn = rear(Method::Optimal, arc(60.0, c), 0.2);
    let log = run_scenario(&scn).unwrap();
    let last = log.records.last().unwrap();
    let imp = scn.implement;
    let r_axle = ((1.0 / c).powi(2) - imp.offset_s.powi(2)).sqrt() + imp.offset_y;
    assert!(last.e_i_exact.abs() < 1e-3);
    assert!((last.delta_cmd - (scn.vehicle.wheelbase / r_axle).atan()).abs() < 2e-3, "{}", last.delta_cmd);
}

#[test]
fn junction_transients_are_bounded_on_exp1() {
    for placement in Placement::ALL {
        let mut scn = compare_base();
        scn.implement = placement.implement();
        scn.law = presets::table1_law(placement, Method::Optimal);
        let log = run_scenario(&scn).unwrap();
        let s = summarize(&log).unwrap();
        assert!(log.fault.is_none());
        assert_eq!(s.overshoot.len(), 2);
        assert!(s.overshoot.iter().all(|o| o.max_abs_e_i > 0.0 && o.max_abs_e_i < 0.6), "{:?}", s.overshoot);
    }
}

#[test]
fn summary_matches_independent_statistics_on_exp2() {
    let scn = sweep_base();
    let log = run_scenario(&scn).unwrap();
    let s = summarize(&log).unwrap();
    let s0 = log.records[0].s;
    let kept: Vec<_> = log.records.iter().filter(|r| r.s - s0 >= 5.0).collect();
    let abs: Vec<f64> = kept.iter().map(|r| r.e_i_exact.abs()).collect();
    assert_eq!(s.samples, abs.len());
    for (got, q) in [(s.q25, 0.25), (s.median, 0.5), (s.q75, 0.75)] {
        assert!((got - quantile(&abs, q)).abs() < 1e-12);
    }
    assert!((s.max - abs.iter().cloned().fold(0.0, f64::max)).abs() < 1e-12);
    assert!(s.q25 <= s.median && s.median <= s.q75 && s.q75 <= s.max);

    let mut total = 0;
    for seg in &s.per_segment {
        let v: Vec<f64> = kept.iter().filter(|r| r.segment == seg.segment).map(|r| r.e_i_exact.abs()).collect();
        assert_eq!(seg.samples, v.len());
        assert!((seg.median_abs_e_i - quantile(&v, 0.5)).abs() < 1e-12);
        total += v.len();
    }
    assert_eq!(total, s.samples, "segments partition the samples");

    let half = 2.0 + 3.0;
    assert_eq!(s.overshoot_half_window, half);
    for o in &s.overshoot {
        let m = kept.iter().filter(|r| (r.s - o.s_junction).abs() <= half).map(|r| r.e_i_exact.abs()).fold(0.0, f64::max);
        assert!((o.max_abs_e_i - m).abs() < 1e-12);
    }
}

#[test]
fn single_row_sweep_equals_a_direct_run() {
    let base = sweep_base();
    let row = presets::table2_params()[2];
    let (sweep, _) = sweep_horizon(&base, &[row], 1).unwrap();
    let mut scn = base.clone();
    scn.law = ControlLaw::Optimal(row);
    let direct = summarize(&run_scenario(&scn).unwrap()).unwrap();
    assert_eq!(sweep.points.len(), 1);
    let point = &sweep.points[0].summary;
    assert_eq!((point.median, point.q25, point.q75, point.max), (direct.median, direct.q25, direct.q75, direct.max));
}

#[test]
fn full_sweep_is_ordered_and_parallel_safe() {
    let base = sweep_base();
    let mut rows = presets::table2_params();
    rows.reverse();
    let (serial, _) = sweep_horizon(&base, &rows, 1).unwrap();
    let (parallel, _) = sweep_horizon(&base, &rows, 4).unwrap();
    assert_eq!(serial, parallel);
    let hs: Vec<f64> = serial.points.iter().map(|p| p.s_h).collect();
    assert_eq!(hs, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]);
}

#[test]
fn comparison_has_six_rows_and_repeats_are_identical() {
    let (table, logs) = compare_methods(&compare_base(), &Placement::ALL, &Method::ALL, 2).unwrap();
    assert_eq!(table.rows.len(), 6);
    assert_eq!(logs.len(), 6);
    for placement in Placement::ALL {
        let opt = table.row(placement, Method::Optimal).unwrap();
        let bs = table.row(placement, Method::Backstepping).unwrap();
        let ratio = opt.overshoot_ratio_vs_backstepping.unwrap();
        assert!((ratio - opt.summary.max_overshoot / bs.summary.max_overshoot).abs() < 1e-15);
        assert!(ratio < 1.0, "{placement:?}: {ratio}");
        assert!(bs.reconstruction && !opt.reconstruction);
    }

    let (twice, _) = compare_methods(&compare_base(), &[Placement::Rear], &[Method::Optimal, Method::Optimal], 2).unwrap();
    assert_eq!(twice.rows[0], twice.rows[1]);
}

#[test]
fn invalid_scenarios_name_their_key() {
    let mut scn = rear(Method::Optimal, line(10.0), 0.0);
    scn.run_length = Some(50.0);
    assert_eq!(run_scenario(&scn).unwrap_err().key, "run.length_m");
    let mut scn = rear(Method::Optimal, line(10.0), 0.0);
    scn.control_period = 0.015;
    assert_eq!(run_scenario(&scn).unwrap_err().key, "run.control_period_s");
    let mut scn = rear(Method::Backstepping, line(10.0), 0.0);
    scn.law = ControlLaw::Backstepping(BaselineParams { k_y: -1.0, k_theta: 0.5 });
    assert!(run_scenario(&scn).unwrap_err().key.starts_with("controller"));
}
