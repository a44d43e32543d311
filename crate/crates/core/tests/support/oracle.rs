//! Reference implementations that share no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

/// Lanczos approximation (g = 7, 9 coefficients), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// ln of the noncentral t density from `T = (Z + λ)/√(V/ν)`:
/// `f(t) = ∫ χ²_ν(v) √(v/ν) φ(t√(v/ν) − λ) dv`, trapezoid rule in `w = ln v`.
pub fn nct_logpdf(t: f64, nu: f64, lambda: f64) -> f64 {
    let h = 0.002;
    let lo = -80.0;
    let hi = (20.0 * nu + 400.0).ln();
    let steps = ((hi - lo) / h) as usize;
    let norm = -(nu / 2.0) * 2f64.ln() - ln_gamma(nu / 2.0) - 0.5 * (2.0 * PI).ln();
    let terms: Vec<f64> = (0..=steps)
        .map(|i| {
            let w = lo + i as f64 * h;
            let v = w.exp();
            let s = (v / nu).sqrt();
            let z = t * s - lambda;
            // v·χ²(v)·s·φ(z) in logs
            w + (nu / 2.0 - 1.0) * w - v / 2.0 + s.ln() - 0.5 * z * z + norm
        })
        .collect();
    logsumexp(&terms) + h.ln()
}

/// Residual-route regression statistic: regress `x` and `y` on `z` by
/// normal equations, then `t = √(k−1)·c/√(1−c²)` with `c` the residual
/// correlation. `z` is row-major `n × d` and assumed full column rank.
pub fn residual_t(y: &[f64], x: &[f64], z: &[Vec<f64>]) -> f64 {
    let n = y.len();
    let d = z.first().map_or(0, |r| r.len());
    let resid = |v: &[f64]| -> Vec<f64> {
        if d == 0 {
            return v.to_vec();
        }
        // solve (ZᵀZ)β = Zᵀv by Gaussian elimination with partial pivoting
        let mut a = vec![vec![0.0; d + 1]; d];
        for i in 0..d {
            for j in 0..d {
                a[i][j] = (0..n).map(|r| z[r][i] * z[r][j]).sum();
            }
            a[i][d] = (0..n).map(|r| z[r][i] * v[r]).sum();
        }
        for c in 0..d {
            let p = (c..d).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            let pivot = a[c].clone();
            for row in a.iter_mut().skip(c + 1) {
                let f = row[c] / pivot[c];
                for (x, p) in row.iter_mut().zip(&pivot).skip(c) {
                    *x -= f * p;
                }
            }
        }
        let mut beta = vec![0.0; d];
        for c in (0..d).rev() {
            beta[c] = (a[c][d] - (c + 1..d).map(|k| a[c][k] * beta[k]).sum::<f64>()) / a[c][c];
        }
        (0..n).map(|r| v[r] - (0..d).map(|k| z[r][k] * beta[k]).sum::<f64>()).collect()
    };
    let (rx, ry) = (resid(x), resid(y));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let c = dot(&rx, &ry) / (dot(&rx, &rx) * dot(&ry, &ry)).sqrt();
    let k = (n - d) as f64;
    (k - 1.0).sqrt() * c / (1.0 - c * c).sqrt()
}
