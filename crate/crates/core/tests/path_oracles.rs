mod common;

use common::DenseSampler;
use imptrack::geometry::{wrap_angle, Vec2};
use imptrack::path::{build_experiment_path, PathSpec, ReferencePath, SegmentDescriptor, SegmentKind, StartPose};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn mixed_path() -> ReferencePath {
    let spec = PathSpec {
        start: StartPose { x_m: 1.0, y_m: -2.0, heading_rad: 0.3 },
        segments: vec![
            SegmentDescriptor { kind: SegmentKind::Line, length_m: 4.0, curvature_per_m: 0.0, start: None },
            SegmentDescriptor { kind: SegmentKind::Arc, length_m: 9.0, curvature_per_m: 0.2, start: None },
            SegmentDescriptor { kind: SegmentKind::Arc, length_m: 6.0, curvature_per_m: -0.125, start: None },
        ],
    };
    build_experiment_path(&spec).unwrap()
}

/// RK4 on x' = cos h, y' = sin h, h' = c(s) with the curvature of the
/// segment the step starts in.
fn integrate_path(path: &ReferencePath, s_end: f64, ds: f64) -> (Vec2, f64) {
    let seg0 = &path.segments()[0];
    let (mut x, mut y, mut h) = (seg0.start.x, seg0.start.y, seg0.start_heading);
    let mut s = 0.0;
    let mut bounds = Vec::new();
    let mut acc = 0.0;
    for seg in path.segments() {
        acc += seg.length;
        bounds.push((acc, seg.curvature));
    }
    let curvature = |s: f64| bounds.iter().find(|(end, _)| s < *end).map_or(bounds.last().unwrap().1, |b| b.1);
    while s < s_end - 1e-15 {
        // stop exactly on segment ends so the curvature is constant per step
        let next_bound = bounds.iter().map(|b| b.0).find(|&e| e > s + 1e-15).unwrap_or(f64::INFINITY);
        let h_step = ds.min(s_end - s).min(next_bound - s);
        let c = curvature(s + 0.5 * h_step);
        let f = |hh: f64| (hh.cos(), hh.sin());
        let k1 = f(h);
        let k2 = f(h + 0.5 * h_step * c);
        let k3 = k2;
        let k4 = f(h + h_step * c);
        x += h_step / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y += h_step / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        h += h_step * c;
        s += h_step;
    }
    (Vec2::new(x, y), h)
}

#[test]
fn point_at_matches_dense_ode_integration() {
    let path = mixed_path();
    for s in [2.0, 8.5, 13.0, 16.0, path.total_length()] {
        let (p, h) = integrate_path(&path, s, 1e-5);
        let pt = path.point_at(s).unwrap();
        assert!(pt.position.distance(p) < 1e-9, "s = {s}: {:?} vs {:?}", pt.position, p);
        assert!(wrap_angle(pt.heading - h).abs() < 1e-9, "s = {s}");
    }
}

fn check_projection_oracle(path: &ReferencePath, seed: u64, count: usize) {
    let sampler = DenseSampler::new(path, 1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = 0.45 * path.min_radius().min(8.0);
    let poses: Vec<(Vec2, f64)> = (0..count)
        .map(|_| {
            let s = rng.gen_range(0.0..path.total_length());
            let d = rng.gen_range(-band..band);
            let pt = path.point_at(s).unwrap();
            let pos = pt.position + Vec2::from_heading(pt.heading).perp() * d;
            (pos, rng.gen_range(-3.0..3.0))
        })
        .collect();
    let failures: Vec<String> = poses
        .par_iter()
        .filter_map(|&(pos, heading)| {
            let got = path.project(pos, heading);
            let (s_ref, d_ref) = sampler.project(path, pos);
            let pt = path.point_at(s_ref).unwrap();
            let y_ref = (pos - pt.position).dot(Vec2::from_heading(pt.heading).perp());
            let ds = (got.frenet.s - s_ref).abs();
            let dy = (got.frenet.y - y_ref).abs();
            // an equally close foot elsewhere is a tie, not a mismatch
            let tie = got.ambiguous && (got.distance - d_ref).abs() < 1e-9;
            if (ds < 1e-6 && dy < 1e-9) || tie {
                let th = wrap_angle(heading - pt.heading);
                if wrap_angle(got.frenet.theta_tilde - th).abs() > 1e-6 {
                    return Some(format!("{pos:?}: theta {} vs {th}", got.frenet.theta_tilde));
                }
                None
            } else {
                Some(format!("{pos:?}: s {} vs {s_ref}, y {} vs {y_ref}", got.frenet.s, got.frenet.y))
            }
        })
        .collect();
    assert!(failures.is_empty(), "{} mismatches, first: {}", failures.len(), failures[0]);
}

#[test]
fn projection_matches_dense_sampling_on_exp1() {
    let path = build_experiment_path(&PathSpec::exp1()).unwrap();
    check_projection_oracle(&path, 1, 1000);
}

#[test]
fn projection_matches_dense_sampling_on_exp2() {
    let path = build_experiment_path(&PathSpec::exp2()).unwrap();
    check_projection_oracle(&path, 2, 1000);
}

#[test]
fn projection_near_line_arc_junction_matches_oracle() {
    let path = build_experiment_path(&PathSpec::exp1()).unwrap();
    let sampler = DenseSampler::new(&path, 1e-4);
    for (x, y) in [(19.99, 0.3), (20.0, -0.4), (20.02, 0.7), (20.5, 1.5), (19.7, -1.0)] {
        let pos = Vec2::new(x, y);
        let got = path.project(pos, 0.0);
        let (s_ref, _) = sampler.project(&path, pos);
        let pt = path.point_at(s_ref).unwrap();
        let y_ref = (pos - pt.position).dot(Vec2::from_heading(pt.heading).perp());
        assert!((got.frenet.s - s_ref).abs() < 1e-6, "({x}, {y}): s {} vs {s_ref}", got.frenet.s);
        assert!((got.frenet.y - y_ref).abs() < 1e-9, "({x}, {y}): y {} vs {y_ref}", got.frenet.y);
    }
}
