//! Decay-rate extraction, the pulsed/continuous equivalence and binomial
//! error bars.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{ensure_finite, invalid, Result, ZenoError};

/// Single-exponential fit of a survival curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRateEstimate {
    /// Decay rate in 1/μs.
    pub rate: f64,
    /// (t_min, t_max) of the samples used, μs.
    pub fit_window: (f64, f64),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
}

/// Asymptotic decay rate 2(Γ/4 − h) of |A₀(t)|² on the overdamped branch.
///
/// Written as 2Ω²/(Γ/4 + h) to avoid cancellation at large Γ; tends to
/// 4Ω²/Γ as Γ → ∞.
pub fn continuous_decay_rate(omega: f64, gamma: f64) -> Result<f64> {
    ensure_finite("omega", omega)?;
    ensure_finite("gamma", gamma)?;
    if omega <= 0.0 || gamma < 0.0 {
        return Err(invalid(format!(
            "need omega > 0 and gamma >= 0, got omega = {omega}, gamma = {gamma}"
        )));
    }
    let g = gamma / 4.0;
    if g <= omega {
        return Err(ZenoError::Domain(format!(
            "decay rate needs the overdamped branch gamma/4 > omega, got gamma/4 = {g}, omega = {omega}"
        )));
    }
    let h = ((g - omega) * (g + omega)).sqrt();
    Ok(2.0 * omega * omega / (g + h))
}

/// Least-squares fit of ln p = c − rate·t.
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Result<DecayRateEstimate> {
    if samples.len() < 2 {
        return Err(invalid("need at least two samples to fit a decay rate"));
    }
    let mut pts = Vec::with_capacity(samples.len());
    for &(t, p) in samples {
        ensure_finite("t", t)?;
        if !(p > 0.0 && p.is_finite()) {
            return Err(invalid(format!("survival samples must be positive, got {p} at t = {t}")));
        }
        pts.push((t, p.ln()));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(invalid("sample times must not all coincide"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_t;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if slope > 0.0 {
        return Err(ZenoError::Domain(format!(
            "survival curve grows (slope {slope}); no decay rate"
        )));
    }
    let t_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(DecayRateEstimate {
        rate: -slope,
        fit_window: (t_min, t_max),
        residual,
    })
}

/// Side-by-side decay rates of the two schemes at matched parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equivalence {
    pub omega_pulsed: f64,
    /// Ω of the continuous scheme, half of `omega_pulsed`.
    pub omega_continuous: f64,
    pub dt: f64,
    /// Γ = 4/δt.
    pub gamma_matched: f64,
    /// Ω_pulsed²δt/4.
    pub rate_pulsed: f64,
    /// 2(Γ/4 − h) at (Ω_pulsed/2, 4/δt).
    pub rate_continuous: f64,
    pub relative_gap: f64,
}

/// Compares the pulsed decay rate at probe spacing `dt` with the continuous
/// rate at Γ = 4/δt.
///
/// The pulsed drive is written (Ω/2)σₓ and the continuous one Ωσₓ, so the
/// same physical drive has Ω_continuous = Ω_pulsed/2. The bridge is applied
/// here and nowhere else.
pub fn equivalence_check(omega_pulsed: f64, dt: f64) -> Result<Equivalence> {
    ensure_finite("omega_pulsed", omega_pulsed)?;
    ensure_finite("dt", dt)?;
    if !(omega_pulsed > 0.0 && dt > 0.0) {
        return Err(invalid(format!(
            "need omega_pulsed > 0 and dt > 0, got {omega_pulsed}, {dt}"
        )));
    }
    let omega_continuous = omega_pulsed / 2.0;
    let gamma = 4.0 / dt;
    if gamma / 4.0 <= omega_continuous {
        return Err(ZenoError::Domain(format!(
            "matched gamma = {gamma} is not overdamped for omega_continuous = {omega_continuous}"
        )));
    }
    let rate_pulsed = omega_pulsed * omega_pulsed * dt / 4.0;
    let rate_continuous = continuous_decay_rate(omega_continuous, gamma)?;
    Ok(Equivalence {
        omega_pulsed,
        omega_continuous,
        dt,
        gamma_matched: gamma,
        rate_pulsed,
        rate_continuous,
        relative_gap: (rate_continuous - rate_pulsed).abs() / rate_pulsed,
    })
}

/// Wilson score interval for `successes` out of `trials` at two-sided
/// `confidence`.
pub fn binomial_ci(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if successes > trials {
        return Err(invalid(format!(
            "successes ({successes}) exceed trials ({trials})"
        )));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // endpoints are exact at the extremes; avoid rounding just past them
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((low, high))
}

/// Binomial standard deviation √(p(1−p)/N) of a fraction.
pub fn binomial_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rate_vanishes_in_zeno_limit() {
        let omega = 2.0 * PI;
        let r = continuous_decay_rate(omega, 1e9).unwrap();
        assert!(r < 1e-6);
        assert!((r - 4.0 * omega * omega / 1e9).abs() < 1e-12);
    }

    #[test]
    fn rate_matches_direct_form() {
        let (omega, gamma) = (2.0 * PI, 500.0);
        let g: f64 = gamma / 4.0;
        let h = (g * g - omega * omega).sqrt();
        let r = continuous_decay_rate(omega, gamma).unwrap();
        assert!((r - 2.0 * (g - h)).abs() < 1e-12);
        assert!((r - 0.316).abs() < 1e-3);
    }

    #[test]
    fn underdamped_rate_is_domain_error() {
        let err = continuous_decay_rate(2.0 * PI, 10.0).unwrap_err();
        assert_eq!(err.category(), "domain");
        assert!(continuous_decay_rate(-1.0, 10.0).is_err());
    }

    #[test]
    fn rate_decreases_over_grid() {
        let mut prev = f64::INFINITY;
        for i in 0..10 {
            let gamma = 50.0 + 50.0 * i as f64;
            let r = continuous_decay_rate(2.0 * PI, gamma).unwrap();
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let samples: Vec<_> = (0..20).map(|i| {
            let t = 0.1 * i as f64;
            (t, 0.7 * (-1.3 * t).exp())
        }).collect();
        let est = fit_decay_rate(&samples).unwrap();
        assert!((est.rate - 1.3).abs() < 1e-12);
        assert!(est.residual < 1e-12);
        assert_eq!(est.fit_window, (0.0, 1.9000000000000001));
    }

    #[test]
    fn fit_errors() {
        assert!(fit_decay_rate(&[(0.0, 1.0)]).is_err());
        assert!(fit_decay_rate(&[(0.0, 1.0), (1.0, 0.0)]).is_err());
        assert!(fit_decay_rate(&[(1.0, 1.0), (1.0, 0.5)]).is_err());
        assert_eq!(
            fit_decay_rate(&[(0.0, 0.5), (1.0, 0.9)]).unwrap_err().category(),
            "domain"
        );
    }

    #[test]
    fn equivalence_example() {
        let e = equivalence_check(4.0 * PI, 0.02).unwrap();
        assert!((e.gamma_matched - 200.0).abs() < 1e-12);
        assert!((e.omega_continuous - 2.0 * PI).abs() < 1e-15);
        assert!(e.relative_gap < 0.05);
    }

    #[test]
    fn equivalence_small_dt_and_linearity() {
        let a = equivalence_check(2.0 * PI, 1e-6).unwrap();
        assert!(a.rate_pulsed < 1e-4 && a.rate_continuous < 1e-4);
        let b = equivalence_check(2.0 * PI, 0.02).unwrap();
        let c = equivalence_check(2.0 * PI, 0.01).unwrap();
        assert!((c.rate_pulsed - b.rate_pulsed / 2.0).abs() < 1e-15);
    }

    #[test]
    fn equivalence_domain_guard() {
        // Γ/4 = 1/δt must exceed Ω_pulsed/2
        assert_eq!(equivalence_check(4.0 * PI, 1.0).unwrap_err().category(), "domain");
        assert!(equivalence_check(0.0, 0.1).is_err());
    }

    #[test]
    fn wilson_extremes() {
        let (lo, hi) = binomial_ci(0, 1000, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = binomial_ci(1000, 1000, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
    }

    #[test]
    fn wilson_midpoint() {
        let (lo, hi) = binomial_ci(500, 1000, 0.95).unwrap();
        assert!((lo - 0.469_07).abs() < 1e-4, "{lo}");
        assert!((hi - 0.530_93).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn wilson_errors() {
        assert!(binomial_ci(1, 0, 0.95).is_err());
        assert!(binomial_ci(5, 4, 0.95).is_err());
        assert!(binomial_ci(1, 4, 1.0).is_err());
    }
}
