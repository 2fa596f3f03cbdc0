//! Shared numeric kernels: FFT-backed spectra and autocorrelation,
//! Levinson-Durbin recursion and polynomial root finding.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// One-sided power spectrum |X[k]|^2 for k in 0..=n_fft/2 of a zero-padded frame.
pub fn power_spectrum(frame: &[f64], n_fft: usize) -> Vec<f64> {
    debug_assert!(n_fft.is_power_of_two() && n_fft >= frame.len());
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf[..=n_fft / 2].iter().map(|c| c.norm_sqr()).collect()
}

/// Biased autocorrelation r[0..=max_lag] computed via FFT of the zero-padded frame.
pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    let n = frame.len();
    debug_assert!(max_lag < n);
    let n_fft = next_pow2(n + max_lag + 1);
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = frame.iter().map(|&x| Complex::new(x, 0.0)).collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    planner.plan_fft_forward(n_fft).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n_fft).process(&mut buf);
    let scale = 1.0 / n_fft as f64;
    buf[..=max_lag].iter().map(|c| c.re * scale).collect()
}

/// Levinson-Durbin: solve for prediction coefficients a[1..=order] from
/// autocorrelation r[0..=order]. Returns (coeffs, prediction error).
/// The returned coefficients follow the A(z) = 1 - sum a_k z^-k convention.
pub fn levinson(r: &[f64], order: usize) -> (Vec<f64>, f64) {
    debug_assert!(r.len() > order);
    let mut a = vec![0.0; order + 1];
    let mut err = r[0];
    if err <= 0.0 {
        return (a[1..].to_vec(), 0.0);
    }
    for i in 1..=order {
        let mut acc = r[i];
        for j in 1..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        a[i] = k;
        for j in 1..=i / 2 {
            let tmp = a[j] - k * a[i - j];
            a[i - j] -= k * a[j];
            a[j] = tmp;
        }
        err *= 1.0 - k * k;
        if err <= 0.0 {
            break;
        }
    }
    (a[1..].to_vec(), err)
}

/// Durand-Kerner root finder for a monic polynomial
/// p(x) = x^n + c[0] x^(n-1) + ... + c[n-1].
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |x: Complex<f64>| -> Complex<f64> {
        let mut acc = Complex::new(1.0, 0.0);
        for &c in coeffs {
            acc = acc * x + Complex::new(c, 0.0);
        }
        acc
    };
    // spread initial guesses on a spiral, radius scaled to the coefficients
    let radius = 1.0
        + coeffs
            .iter()
            .fold(0.0f64, |m, &c| m.max(c.abs()))
            .powf(1.0 / n as f64);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..n)
        .map(|k| seed.powu(k as u32 + 1) * Complex::new(radius, 0.0) / seed.norm())
        .collect();
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let mut denom = Complex::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-30 {
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step < 1e-12 {
            break;
        }
    }
    roots
}
