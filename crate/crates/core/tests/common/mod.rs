#![allow(dead_code)]

use imptrack::geometry::Vec2;
use imptrack::path::ReferencePath;

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Path position at `s` from segment data only, by direct trigonometry.
fn position(path: &ReferencePath, s: f64) -> Vec2 {
    let mut start = 0.0;
    for seg in path.segments() {
        if s <= start + seg.length || std::ptr::eq(seg, path.segments().last().unwrap()) {
            let u = s - start;
            let h = seg.start_heading;
            return if seg.curvature == 0.0 {
                seg.start + Vec2::new(h.cos(), h.sin()) * u
            } else {
                let k = seg.curvature;
                let h1 = h + k * u;
                seg.start + Vec2::new((h1.sin() - h.sin()) / k, (h.cos() - h1.cos()) / k)
            };
        }
        start += seg.length;
    }
    unreachable!()
}

/// Dense-sampling projection: scan the path at `step` resolution, then
/// refine the best sample with golden-section search on its neighborhood.
/// Returns `(s, distance)`.
pub struct DenseSampler {
    samples: Vec<(f64, Vec2)>,
    step: f64,
    total: f64,
}

impl DenseSampler {
    pub fn new(path: &ReferencePath, step: f64) -> Self {
        let total = path.total_length();
        let n = (total / step).ceil() as usize;
        let samples = (0..=n)
            .map(|i| {
                let s = (i as f64 * step).min(total);
                (s, position(path, s))
            })
            .collect();
        Self { samples, step, total }
    }

    pub fn project(&self, path: &ReferencePath, p: Vec2) -> (f64, f64) {
        let mut best = (0.0, f64::INFINITY);
        for &(s, q) in &self.samples {
            let d = (q.x - p.x).powi(2) + (q.y - p.y).powi(2);
            if d < best.1 {
                best = (s, d);
            }
        }
        let lo = (best.0 - self.step).max(0.0);
        let hi = (best.0 + self.step).min(self.total);
        let dist = |s: f64| position(path, s).distance(p);
        let s = golden_section(lo, hi, 1e-12, dist);
        (s, dist(s))
    }
}

/// Linear-interpolation quantile, written independently of the library.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = q * (v.len() as f64 - 1.0);
    let i = pos as usize;
    if i + 1 >= v.len() {
        return v[v.len() - 1];
    }
    let frac = pos - i as f64;
    v[i] * (1.0 - frac) + v[i + 1] * frac
}
