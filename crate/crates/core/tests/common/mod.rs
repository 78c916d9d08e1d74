//! Reference computations shared by the integration tests.

#![allow(dead_code)]

use adc_planner::linalg::CMatrix;
use num_complex::Complex;

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

/// max over receive phases of |w_rᴴ H 1|²/Nt, first phase pinned to 0.
pub fn nocsit_grid_oracle(h: &CMatrix<f64>, points: usize) -> f64 {
    let nt = h.cols();
    let sums: Vec<Complex<f64>> = (0..h.rows()).map(|r| h.row(r).iter().sum()).collect();
    assert_eq!(sums.len(), 2);
    (0..points)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
            (sums[0] + Complex::from_polar(1.0, th) * sums[1]).norm_sqr() / nt as f64
        })
        .fold(0.0, f64::max)
}

/// max over two free receive phases of ‖Hᴴ w‖² on a 3 × 2 channel.
pub fn csit_grid_oracle(h: &CMatrix<f64>, points: usize) -> f64 {
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let mut best = 0.0f64;
    for i in 0..points {
        for j in 0..points {
            let w = [
                Complex::new(1.0, 0.0),
                Complex::from_polar(1.0, step * i as f64),
                Complex::from_polar(1.0, step * j as f64),
            ];
            let mut p = 0.0;
            for c in 0..h.cols() {
                let v: Complex<f64> = (0..3).map(|r| w[r].conj() * h[(r, c)]).sum();
                p += v.norm_sqr();
            }
            best = best.max(p);
        }
    }
    best
}
