//! Euclidean helpers: distances, ball volumes, ball-ball overlap and spherical rules.

use std::f64::consts::PI;

use crate::quad::GaussRule;

pub fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).sqrt()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Volume of the unit ball in `R^n` (`omega_0 = 1`).
pub fn unit_ball_volume(n: usize) -> f64 {
    let (mut even, mut odd) = (1.0, 2.0);
    for k in 2..=n {
        let next = 2.0 * PI / k as f64;
        if k % 2 == 0 {
            even *= next;
        } else {
            odd *= next;
        }
    }
    if n.is_multiple_of(2) {
        even
    } else {
        odd
    }
}

/// `int_0^theta sin^n(t) dt` for `theta` in `[0, pi]`.
pub fn sine_power_integral(n: usize, theta: f64) -> f64 {
    if theta <= 0.0 {
        return 0.0;
    }
    if theta < 0.5 {
        // the recurrence cancels catastrophically for small angles
        return GaussRule::new(16).integrate(0.0, theta, |t| t.sin().powi(n as i32));
    }
    let (s, c) = theta.sin_cos();
    let mut lo = theta; // J_0
    let mut hi = 2.0 * (0.5 * theta).sin().powi(2); // J_1
    if n == 0 {
        return lo;
    }
    for k in 2..=n {
        let kf = k as f64;
        let next = -s.powi(k as i32 - 1) * c / kf + (kf - 1.0) / kf * lo;
        lo = hi;
        hi = next;
    }
    hi
}

/// Volume of the cap of height `h` cut from a ball of radius `radius` in `R^n`.
fn cap_volume(n: usize, radius: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    let h = h.min(2.0 * radius);
    let theta = 2.0 * (h / (2.0 * radius)).sqrt().min(1.0).asin();
    radius.powi(n as i32) * unit_ball_volume(n - 1) * sine_power_integral(n, theta)
}

/// Fraction of the ball `B(c, rho)` lying inside the closed ball `B(x, r)`,
/// where `d = |x - c|`. Exact in every dimension.
pub fn ball_overlap_fraction(n: usize, d: f64, r: f64, rho: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if d + rho <= r {
        return 1.0;
    }
    if d >= r + rho {
        return 0.0;
    }
    if d + r <= rho {
        return (r / rho).powi(n as i32);
    }
    // radical plane at signed distance `a` from x along x -> c
    let a = (d * d + r * r - rho * rho) / (2.0 * d);
    let h_x = r - a;
    let h_c = rho - (d - a);
    let vol = cap_volume(n, r, h_x) + cap_volume(n, rho, h_c);
    (vol / (unit_ball_volume(n) * rho.powi(n as i32))).clamp(0.0, 1.0)
}

/// Product quadrature on the unit sphere `S^{n-1}`; weights sum to its surface area.
///
/// `resolution` controls the number of nodes per angle (`2*resolution` in the
/// azimuth, `resolution` Gauss nodes in each polar angle).
pub fn sphere_rule(n: usize, resolution: usize) -> Vec<(Vec<f64>, f64)> {
    assert!(n >= 1 && resolution >= 1);
    if n == 1 {
        return vec![(vec![-1.0], 1.0), (vec![1.0], 1.0)];
    }
    let n_phi = 2 * resolution;
    let polar = GaussRule::new(resolution);
    // sin(theta) d theta = d cos(theta): Gauss in cos(theta) is exact for polynomials
    let linear_nodes: Vec<(f64, f64)> = polar.on(-1.0, 1.0).map(|(t, w)| (t.acos(), w)).collect();
    let angle_nodes: Vec<(f64, f64)> = polar.on(0.0, PI).collect();
    // angles theta_1..theta_{n-2} then phi
    let mut rule: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for level in 0..(n - 2) {
        let power = (n - 2 - level) as i32;
        let mut next = Vec::with_capacity(rule.len() * resolution);
        for (angles, w) in &rule {
            if power == 1 {
                for &(t, wt) in &linear_nodes {
                    let mut a = angles.clone();
                    a.push(t);
                    next.push((a, w * wt));
                }
            } else {
                for &(t, wt) in &angle_nodes {
                    let mut a = angles.clone();
                    a.push(t);
                    next.push((a, w * wt * t.sin().powi(power)));
                }
            }
        }
        rule = next;
    }
    let dphi = 2.0 * PI / n_phi as f64;
    let mut out = Vec::with_capacity(rule.len() * n_phi);
    for (angles, w) in &rule {
        for k in 0..n_phi {
            let phi = (k as f64 + 0.5) * dphi;
            let mut dir = Vec::with_capacity(n);
            let mut sprod = 1.0;
            for &t in angles {
                dir.push(sprod * t.cos());
                sprod *= t.sin();
            }
            dir.push(sprod * phi.cos());
            dir.push(sprod * phi.sin());
            out.push((dir, w * dphi));
        }
    }
    let area = n as f64 * unit_ball_volume(n);
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in out.iter_mut() {
        *w *= area / total;
    }
    out
}
