//! Photon-assisted LZS transition rate between two diabatic states:
//!
//! ```text
//! W = (Δ²/2) Σ_n Γ₂ J_n(A/ω)² / ((ε - nω)² + Γ₂²)
//! ```
//!
//! with its own Bessel kernel (ascending series for small arguments,
//! normalised downward recurrence otherwise).

use crate::error::{Error, Result};
use crate::model::DriveParams;

/// Truncation controls for the photon sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateKernelParams {
    /// Extra photon orders kept beyond the Bessel support `|n| <= A/ω`.
    pub n_margin: usize,
    /// Drop terms with `|ε - nω| > tail_cutoff * Γ₂`. `None` keeps every term.
    pub tail_cutoff: Option<f64>,
}

impl Default for RateKernelParams {
    fn default() -> Self {
        Self {
            n_margin: 20,
            tail_cutoff: None,
        }
    }
}

impl RateKernelParams {
    pub fn validate(&self) -> Result<()> {
        match self.tail_cutoff {
            Some(c) if !(c.is_finite() && c > 0.0) => {
                Err(Error::InvalidArgument(format!("tail cutoff must be positive, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

/// Largest order kept for argument `x`. `J_n(x)` beyond it is below 1e-17 for
/// any margin >= 0 (the transition region around `n = x` has width ~ x^(1/3)).
fn support_limit(x: f64, margin: usize) -> usize {
    if x == 0.0 {
        return margin;
    }
    x.ceil() as usize + margin + (10.0 * x.cbrt()).ceil() as usize
}

const SERIES_CUTOVER: f64 = 2.0;

/// Ascending power series, accurate for small `x`.
fn bessel_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (n as f64 + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            return sum;
        }
        k += 1.0;
    }
}

/// Miller's algorithm: recur downward from well above the support, then
/// normalise with `J_0 + 2 Σ J_2k = 1`.
fn bessel_miller(x: f64, limit: usize) -> Vec<f64> {
    const BIG: f64 = 1e200;
    let start = (limit + 12 + x.cbrt().ceil() as usize) & !1;
    let mut f = vec![0.0; start + 2];
    f[start] = 1.0;
    let mut even_sum = 0.0;
    let two_over_x = 2.0 / x;
    for k in (1..=start).rev() {
        let next = k as f64 * two_over_x * f[k] - f[k + 1];
        f[k - 1] = next;
        if k % 2 == 0 {
            even_sum += f[k];
        }
        if next.abs() > BIG {
            for v in &mut f[k - 1..] {
                *v /= BIG;
            }
            even_sum /= BIG;
        }
    }
    let norm = f[0] + 2.0 * even_sum;
    f.truncate(limit + 1);
    for v in &mut f {
        *v /= norm;
    }
    f
}

/// `J_0(x) ..= J_S(x)` for `x >= 0`, where `S` is the support limit for the
/// given margin. Orders above `S` are treated as zero.
pub(crate) fn bessel_table(x: f64, margin: usize) -> Vec<f64> {
    let limit = support_limit(x, margin);
    if x == 0.0 {
        let mut t = vec![0.0; limit + 1];
        t[0] = 1.0;
        t
    } else if x < SERIES_CUTOVER {
        (0..=limit).map(|n| bessel_series(n, x)).collect()
    } else {
        bessel_miller(x, limit)
    }
}

/// Bessel function of the first kind `J_n(x)` for integer order.
pub fn bessel_jn(n: i64, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let ax = x.abs();
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x)
    let flip = (n < 0) != (x < 0.0) && order % 2 == 1;
    let value = if ax < SERIES_CUTOVER {
        bessel_series(order, ax)
    } else {
        let limit = support_limit(ax, 20);
        if order > limit {
            0.0
        } else {
            bessel_miller(ax, limit)[order]
        }
    };
    if flip {
        -value
    } else {
        value
    }
}

/// Rate evaluator for one drive setting: caches `J_n(A/ω)²` so that every
/// crossing and detuning at the same amplitude shares one Bessel pass.
#[derive(Debug, Clone)]
pub struct RateEvaluator {
    omega: f64,
    gamma2: f64,
    j_sq: Vec<f64>,
    tail_cutoff: Option<f64>,
}

impl RateEvaluator {
    pub fn new(drive: &DriveParams, kernel: &RateKernelParams) -> Self {
        let j_sq = bessel_table(drive.bessel_argument(), kernel.n_margin)
            .into_iter()
            .map(|j| j * j)
            .collect();
        Self {
            omega: drive.frequency(),
            gamma2: drive.dephasing(),
            j_sq,
            tail_cutoff: kernel.tail_cutoff,
        }
    }

    /// Highest photon order summed.
    pub fn max_order(&self) -> usize {
        self.j_sq.len() - 1
    }

    /// LZS rate for a crossing of size `delta` at local detuning `eps_local`.
    pub fn rate(&self, delta: f64, eps_local: f64) -> f64 {
        if delta == 0.0 {
            return 0.0;
        }
        let g = self.gamma2;
        let g2 = g * g;
        let cutoff = self.tail_cutoff.map(|c| c * g);
        let lorentz = |d: f64| match cutoff {
            Some(c) if d.abs() > c => 0.0,
            _ => g / (d * d + g2),
        };
        let mut sum = self.j_sq[0] * lorentz(eps_local);
        for (n, &w) in self.j_sq.iter().enumerate().skip(1) {
            if w == 0.0 {
                continue;
            }
            let shift = n as f64 * self.omega;
            sum += w * (lorentz(eps_local - shift) + lorentz(eps_local + shift));
        }
        delta * delta * (0.5 * sum)
    }
}

/// One-shot LZS rate `W(Δ, ε)`; see [`RateEvaluator`] for repeated use.
pub fn lzs_rate(delta: f64, eps_local: f64, drive: &DriveParams, kernel: &RateKernelParams) -> f64 {
    RateEvaluator::new(drive, kernel).rate(delta, eps_local)
}

/// Characteristic amplitude span of one resonance lobe, `δA ~ ω`.
pub fn rate_peak_span(drive: &DriveParams) -> f64 {
    drive.frequency()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(a: f64, w: f64, g: f64) -> DriveParams {
        DriveParams::new(a, w, g).unwrap()
    }

    /// Ascending series summed independently of the production routine.
    fn series_oracle(n: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..60u32 {
            let mut t = if k % 2 == 0 { 1.0 } else { -1.0 };
            t *= (x / 2.0).powi((n + 2 * k) as i32);
            for i in 1..=k {
                t /= i as f64;
            }
            for i in 1..=(n + k) {
                t /= i as f64;
            }
            sum += t;
        }
        sum
    }

    #[test]
    fn bessel_at_zero() {
        assert_eq!(bessel_jn(0, 0.0), 1.0);
        for n in [-3, -1, 1, 2, 7] {
            assert_eq!(bessel_jn(n, 0.0), 0.0);
        }
    }

    #[test]
    fn bessel_first_zeros_of_j0() {
        // 2.40 and 5.52 are the zeros rounded to two decimals: a sign change
        // must sit within half a unit of the last digit
        for z in [2.40, 5.52] {
            assert!(bessel_jn(0, z - 0.005) * bessel_jn(0, z + 0.005) < 0.0);
        }
        assert!((bessel_jn(0, 2.40) - 2.5077e-3).abs() < 1e-6);
        assert!(bessel_jn(0, 2.404_825_557_695_773).abs() < 1e-15);
    }

    #[test]
    fn bessel_matches_series() {
        assert!((bessel_jn(1, 1.0) - series_oracle(1, 1.0)).abs() < 1e-15);
        for n in 0..12u32 {
            for x in [0.3, 1.9, 2.0, 2.5, 4.0, 7.5] {
                let diff = (bessel_jn(n as i64, x) - series_oracle(n, x)).abs();
                assert!(diff < 1e-13, "n={n} x={x} diff={diff}");
            }
        }
    }

    #[test]
    fn bessel_reflection() {
        for n in 0..6 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(bessel_jn(-n, 3.3), sign * bessel_jn(n, 3.3));
            assert_eq!(bessel_jn(n, -3.3), sign * bessel_jn(n, 3.3));
        }
    }

    #[test]
    fn bessel_far_beyond_support_vanishes() {
        assert_eq!(bessel_jn(10_000, 5.0), 0.0);
        assert!(bessel_jn(300, 50.0).abs() < 1e-17);
    }

    #[test]
    fn bessel_large_argument_values() {
        // J_0(100) and J_1(100) reference values
        assert!((bessel_jn(0, 100.0) - 0.019_985_850_304_223_122).abs() < 1e-13);
        assert!((bessel_jn(1, 100.0) - (-0.077_145_352_014_112_16)).abs() < 1e-13);
    }

    #[test]
    fn rate_zero_delta() {
        assert_eq!(
            lzs_rate(0.0, 0.3, &drive(1.0, 1.0, 0.1), &RateKernelParams::default()),
            0.0
        );
    }

    #[test]
    fn rate_undriven_limit() {
        let k = RateKernelParams::default();
        let w = lzs_rate(0.01, 0.0, &drive(0.0, 1.0, 0.1), &k);
        assert!((w - 5.0e-4).abs() < 1e-18);
        for eps in [-3.0, -0.2, 0.05, 1.7] {
            let g = 0.07;
            let expected = 0.01 * 0.01 * g / (2.0 * (eps * eps + g * g));
            let w = lzs_rate(0.01, eps, &drive(0.0, 0.9, g), &k);
            assert!(((w - expected) / expected).abs() < 1e-13);
        }
    }

    #[test]
    fn rate_matches_wide_window_brute_force() {
        let (delta, eps, omega, amp, g) = (0.01, 1.0, 1.0, 2.0, 0.05);
        let x = amp / omega;
        let mut brute = 0.0;
        for n in -2000i64..=2000 {
            let j = if n.unsigned_abs() > 80 {
                0.0
            } else {
                let v = series_oracle(n.unsigned_abs() as u32, x);
                if n < 0 && n % 2 != 0 {
                    -v
                } else {
                    v
                }
            };
            let d = eps - n as f64 * omega;
            brute += g * j * j / (d * d + g * g);
        }
        brute *= delta * delta / 2.0;
        let w = lzs_rate(delta, eps, &drive(amp, omega, g), &RateKernelParams::default());
        assert!(((w - brute) / brute).abs() < 1e-12, "w={w} brute={brute}");
    }

    #[test]
    fn rate_tail_cutoff_drops_far_terms() {
        let d = drive(0.0, 1.0, 0.1);
        let k = RateKernelParams {
            n_margin: 20,
            tail_cutoff: Some(5.0),
        };
        assert_eq!(lzs_rate(0.1, 0.6, &d, &k), 0.0);
        assert_eq!(
            lzs_rate(0.1, 0.4, &d, &k),
            lzs_rate(0.1, 0.4, &d, &RateKernelParams::default())
        );
        assert!(RateKernelParams {
            n_margin: 0,
            tail_cutoff: Some(-1.0)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn peak_span_is_frequency() {
        for w in [0.1, 13.0, 5.0] {
            assert_eq!(rate_peak_span(&drive(1.0, w, 0.1)), w);
        }
    }
}
