#![allow(dead_code)]

use rabi_chirp::Trajectory;
use std::f64::consts::PI;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Envelope written out from its definition, independent of the library.
pub fn envelope(name: &str, t: f64, duration: f64) -> f64 {
    if !(0.0..=duration).contains(&t) {
        return 0.0;
    }
    let s = (PI * t / duration).sin();
    match name {
        "square" => 1.0,
        "sine" => s,
        "sine_squared" => s * s,
        other => panic!("unknown shape {other}"),
    }
}

/// Largest population difference between two runs sampled on the same grid.
pub fn sup_population_diff(a: &Trajectory, b: &Trajectory) -> f64 {
    assert_eq!(a.times, b.times);
    a.states
        .iter()
        .zip(&b.states)
        .flat_map(|(x, y)| {
            x.populations()
                .into_iter()
                .zip(y.populations())
                .map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn simpson_polynomial_and_trig() {
    let cubic = simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
    assert!((cubic - 0.0).abs() < 1e-13);
    let s = simpson(&|x: f64| x.sin(), 0.0, PI, 1e-13);
    assert!((s - 2.0).abs() < 1e-12);
}
