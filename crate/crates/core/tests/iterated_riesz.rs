use std::f64::consts::PI;

use nlpot::measure::{Measure, Params};
use nlpot::potentials::{iterated_riesz_bound, iterated_riesz_bound_with, wolff, BoundQuadrature};
use statrs::function::gamma::gamma;

/// `int |x-y|^{a-n} |y|^{c-n} dy = K |x|^{a+c-n}` for `0 < a, c` and `a + c < n`.
fn composition_constant(n: f64, a: f64, c: f64) -> f64 {
    PI.powf(n / 2.0) * gamma(a / 2.0) * gamma(c / 2.0) * gamma((n - a - c) / 2.0)
        / (gamma((n - a) / 2.0) * gamma((n - c) / 2.0) * gamma((a + c) / 2.0))
}

/// `I_1((I_1 (w delta_0))^{1/(p-1)})(x)` in closed form.
fn single_atom_oracle(n: usize, p: f64, w: f64, r: f64) -> f64 {
    let nf = n as f64;
    let s = 1.0 / (p - 1.0);
    let c = nf - (nf - 1.0) * s;
    w.powf(s) * composition_constant(nf, 1.0, c) * r.powf(1.0 + c - nf)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn unit_atom_in_three_dimensions_gives_pi_cubed() {
    let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
    let prm = Params::new(3, 2.0, 0.5, 1.0).unwrap();
    let v = iterated_riesz_bound(&d0, &prm, &[1.0, 0.0, 0.0]).unwrap();
    assert!((single_atom_oracle(3, 2.0, 1.0, 1.0) - PI.powi(3)).abs() < 1e-12);
    assert!(rel(v, PI.powi(3)) < 1e-5, "{v} vs {}", PI.powi(3));
}

#[test]
fn single_atom_matches_composition_formula() {
    for &(n, p, w, r) in &[(3, 1.8, 2.0, 0.7), (3, 2.5, 0.5, 3.0), (4, 2.0, 1.0, 1.0), (4, 3.2, 1.5, 0.4), (2, 1.7, 1.0, 1.0)] {
        let mut x = vec![0.0; n];
        x[0] = r;
        let m = Measure::atomic(vec![vec![0.0; n]], vec![w]).unwrap();
        let prm = Params::new(n, p, 0.5 * (p - 1.0), 1.0).unwrap();
        let v = iterated_riesz_bound(&m, &prm, &x).unwrap();
        let o = single_atom_oracle(n, p, w, r);
        assert!(rel(v, o) < 1e-4, "n={n} p={p}: {v} vs {o}");
    }
}

#[test]
fn out_of_range_exponents_are_infinite() {
    let d0 = Measure::atomic(vec![vec![0.0; 3]], vec![1.0]).unwrap();
    let x = [1.0, 0.0, 0.0];
    for p in [1.5, 1.6, 3.0, 4.0] {
        let prm = Params::new(3, p, 0.25, 1.0).unwrap();
        assert_eq!(iterated_riesz_bound(&d0, &prm, &x).unwrap(), f64::INFINITY, "p={p}");
    }
    let prm = Params::new(3, 2.0, 0.5, 1.0).unwrap();
    assert_eq!(iterated_riesz_bound(&d0, &prm, &[0.0; 3]).unwrap(), f64::INFINITY);
}

#[test]
fn homogeneity_and_far_field_ratio() {
    let m = Measure::atomic(
        vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.5, 0.0], vec![-0.3, 0.8, 0.2]],
        vec![1.0, 0.5, 2.0],
    )
    .unwrap();
    let prm = Params::new(3, 1.8, 0.4, 1.0).unwrap();
    let x = [0.4, -0.6, 0.9];
    let base = iterated_riesz_bound(&m, &prm, &x).unwrap();
    let scaled = iterated_riesz_bound(&m.scaled(3.0), &prm, &x).unwrap();
    assert!(rel(scaled, 3f64.powf(1.0 / 0.8) * base) < 1e-10);
    let near = wolff(&m, &prm, &[10.0, 0.0, 0.0]) / iterated_riesz_bound(&m, &prm, &[10.0, 0.0, 0.0]).unwrap();
    let far = wolff(&m, &prm, &[100.0, 0.0, 0.0]) / iterated_riesz_bound(&m, &prm, &[100.0, 0.0, 0.0]).unwrap();
    assert!(rel(far, near) < 0.05, "{near} vs {far}");
}

#[test]
fn quadrature_refinement_is_stable_for_several_atoms() {
    let m = Measure::atomic(vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0]], vec![1.0, 1.0]).unwrap();
    let prm = Params::new(3, 2.0, 0.5, 1.0).unwrap();
    let x = [0.25, 0.1, 0.0];
    let coarse = iterated_riesz_bound(&m, &prm, &x).unwrap();
    let fine = iterated_riesz_bound_with(&m, &prm, &x, BoundQuadrature { angular: 32, radial_tol: 1e-9 }).unwrap();
    assert!(rel(coarse, fine) < 1e-3, "{coarse} vs {fine}");
}
