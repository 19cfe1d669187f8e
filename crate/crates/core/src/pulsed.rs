//! Pulsed selective-measurement scheme.
//!
//! The qubit starts in |0⟩ and is driven resonantly with Rabi angular
//! frequency Ω, so the undisturbed ground population is cos²(Ωt/2) and a
//! half period lasts π/Ω. `n` instantaneous probes are spread evenly over
//! the window at spacing δt = T/n. A probe that finds |1⟩ switches the
//! junction and ends the run; finding |0⟩ projects the qubit back to |0⟩.

use std::f64::consts::PI;

use crate::ensemble;
use crate::error::{ensure_finite, invalid, Result};
use crate::qmath::{Complex, Mat2, TwoLevelState};
use crate::rng::RngStream;

/// Tolerance on `t/δt` being an integer in [`survival_vs_time`].
const COMMENSURATE_TOL: f64 = 1e-9;
/// Above this value of Ωτ the small-angle form of the mean excited
/// population is flagged as unreliable.
const SMALL_ANGLE_LIMIT: f64 = 0.5;

/// Readout errors of a probe pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeImperfections {
    /// Probability ε₀ that a qubit found in |0⟩ still tunnels.
    pub false_switch_prob: f64,
    /// Probability η that a qubit found in |1⟩ fails to tunnel.
    pub miss_prob: f64,
}

impl ProbeImperfections {
    /// ε₀ = η = 0.02, i.e. a 96 % single-shot fidelity split evenly.
    pub const SUGGESTED: ProbeImperfections = ProbeImperfections {
        false_switch_prob: 0.02,
        miss_prob: 0.02,
    };

    pub fn new(false_switch_prob: f64, miss_prob: f64) -> Result<Self> {
        for (name, p) in [("epsilon0", false_switch_prob), ("eta", miss_prob)] {
            if !(0.0..1.0).contains(&p) {
                return Err(invalid(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        Ok(ProbeImperfections {
            false_switch_prob,
            miss_prob,
        })
    }

    pub fn fidelity(&self) -> f64 {
        1.0 - 0.5 * (self.false_switch_prob + self.miss_prob)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulsedProtocol {
    /// Rabi angular frequency Ω in rad/μs.
    pub omega: f64,
    pub n_probes: u32,
    /// Total window T in μs.
    pub window: f64,
    /// Probe pulse length τ in μs; informational only, never enters the dynamics.
    pub probe_duration: Option<f64>,
    pub imperfections: Option<ProbeImperfections>,
}

impl PulsedProtocol {
    /// `n` probes over half a Rabi period, T = π/Ω.
    pub fn half_period(omega: f64, n_probes: u32) -> Result<Self> {
        if omega.is_nan() || omega <= 0.0 {
            return Err(invalid(format!(
                "half-period window needs omega > 0, got {omega}"
            )));
        }
        Self::with_window(omega, n_probes, PI / omega)
    }

    pub fn with_window(omega: f64, n_probes: u32, window: f64) -> Result<Self> {
        let p = PulsedProtocol {
            omega,
            n_probes,
            window,
            probe_duration: None,
            imperfections: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn probe_duration(mut self, tau: f64) -> Result<Self> {
        self.probe_duration = Some(tau);
        self.validate()?;
        Ok(self)
    }

    pub fn imperfections(mut self, imperfections: ProbeImperfections) -> Self {
        self.imperfections = Some(imperfections);
        self
    }

    /// Inter-probe interval δt = T/n.
    pub fn interval(&self) -> f64 {
        self.window / self.n_probes as f64
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("omega", self.omega)?;
        if self.omega < 0.0 {
            return Err(invalid(format!("omega must be >= 0, got {}", self.omega)));
        }
        if self.n_probes == 0 {
            return Err(invalid("n_probes must be at least 1"));
        }
        ensure_finite("window", self.window)?;
        if self.window <= 0.0 {
            return Err(invalid(format!("window must be > 0, got {}", self.window)));
        }
        if let Some(tau) = self.probe_duration {
            if !(tau > 0.0 && tau < self.interval()) {
                return Err(invalid(format!(
                    "probe duration {tau} must lie in (0, δt = {})",
                    self.interval()
                )));
            }
        }
        if let Some(imp) = self.imperfections {
            ProbeImperfections::new(imp.false_switch_prob, imp.miss_prob)?;
        }
        Ok(())
    }
}

/// Outcome of one selective-measurement run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulsedRunResult {
    pub survived: bool,
    /// Probes that returned "no tunnel".
    pub probes_completed: u32,
    /// Zero-based index of the probe at which the junction switched.
    pub switch_index: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    /// Product of per-probe survival factors, cos^{2n}(Ωδt/2).
    Exact,
    /// Exponential envelope exp(-Ω²δt t/4).
    Approx,
}

fn ensure_probe_count(n: u64) -> Result<()> {
    if n == 0 {
        Err(invalid("number of probes must be at least 1"))
    } else {
        Ok(())
    }
}

/// `n·ln cos²(x)`, accurate for small `x` and large `n`.
fn log_survival(n: f64, x: f64) -> f64 {
    let s = (0.5 * x).sin();
    n * 2.0 * (-2.0 * s * s).ln_1p()
}

/// Survival probability after `n` probes over half a Rabi period,
/// [cos²(π/2n)]ⁿ.
pub fn survival_exact(n: u64) -> Result<f64> {
    ensure_probe_count(n)?;
    if n == 1 {
        // cos(π/2) is not exactly zero in floating point
        return Ok(0.0);
    }
    let x = PI / (2.0 * n as f64);
    Ok(log_survival(n as f64, x).exp())
}

/// Large-n approximation exp(-π²/4n).
pub fn survival_approx(n: u64) -> Result<f64> {
    ensure_probe_count(n)?;
    Ok((-PI * PI / (4.0 * n as f64)).exp())
}

/// Ground-state survival at time `t` under probes every `dt`.
pub fn survival_vs_time(omega: f64, dt: f64, t: f64, mode: CurveMode) -> Result<f64> {
    ensure_finite("omega", omega)?;
    ensure_finite("dt", dt)?;
    ensure_finite("t", t)?;
    if dt <= 0.0 {
        return Err(invalid(format!("dt must be > 0, got {dt}")));
    }
    if t < 0.0 {
        return Err(invalid(format!("t must be >= 0, got {t}")));
    }
    match mode {
        CurveMode::Exact => {
            let ratio = t / dt;
            let n = ratio.round();
            if (ratio - n).abs() > COMMENSURATE_TOL {
                return Err(invalid(format!(
                    "t = {t} is not an integer multiple of dt = {dt}"
                )));
            }
            let c = (0.5 * omega * dt).cos();
            Ok((c * c).powf(n))
        }
        CurveMode::Approx => Ok((-(omega * omega * dt / 4.0) * t).exp()),
    }
}

/// Effective decay time t_c = 4/(Ω²δt).
pub fn effective_decay_time(omega: f64, dt: f64) -> Result<f64> {
    ensure_finite("omega", omega)?;
    ensure_finite("dt", dt)?;
    if !(omega > 0.0 && dt > 0.0) {
        return Err(invalid(format!(
            "omega and dt must be > 0, got omega = {omega}, dt = {dt}"
        )));
    }
    Ok(4.0 / (omega * omega * dt))
}

/// Time-averaged excited population over one probe interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitedPopulation {
    /// (1/τ)∫₀^τ sin²(Ωt/2)dt = ½(1 − sin(Ωτ)/(Ωτ)).
    pub exact: f64,
    /// Ω²τ²/12.
    pub small_angle: f64,
    /// False when Ωτ ≥ 0.5 and the small-angle form should not be trusted.
    pub small_angle_valid: bool,
}

pub fn mean_excited_population(omega: f64, tau: f64) -> Result<ExcitedPopulation> {
    ensure_finite("omega", omega)?;
    ensure_finite("tau", tau)?;
    if tau <= 0.0 {
        return Err(invalid(format!("tau must be > 0, got {tau}")));
    }
    let x = omega * tau;
    // series for small x avoids cancellation in 1 - sin(x)/x
    let exact = if x.abs() < 1e-3 {
        let x2 = x * x;
        x2 / 12.0 - x2 * x2 / 240.0
    } else {
        0.5 * (1.0 - x.sin() / x)
    };
    Ok(ExcitedPopulation {
        exact,
        small_angle: x * x / 12.0,
        small_angle_valid: x.abs() < SMALL_ANGLE_LIMIT,
    })
}

/// Resonant drive (Ω/2)σₓ of the pulsed scheme.
pub fn drive_hamiltonian(omega: f64) -> Mat2 {
    let h = Complex::new(omega / 2.0, 0.0);
    let z = Complex::new(0.0, 0.0);
    Mat2::new(z, h, h, z)
}

/// Closed-form propagator of [`drive_hamiltonian`] over `dt`.
pub fn rabi_step(omega: f64, dt: f64) -> Mat2 {
    let (s, c) = (0.5 * omega * dt).sin_cos();
    let diag = Complex::new(c, 0.0);
    let off = Complex::new(0.0, -s);
    Mat2::new(diag, off, off, diag)
}

/// One stochastic realization of the selective-measurement protocol.
///
/// Between probes the qubit evolves under the drive for δt. Each probe draws
/// the projective outcome from the excited population; with imperfections
/// a second draw decides a false switch (ground outcome) or a missed
/// detection (excited outcome). A missed detection leaves the qubit in |1⟩
/// and the run continues.
pub fn simulate_pulsed_run(protocol: &PulsedProtocol, stream: RngStream) -> PulsedRunResult {
    let step = rabi_step(protocol.omega, protocol.interval());
    let mut rng = stream.generator();
    let mut psi = TwoLevelState::ground();

    for probe in 0..protocol.n_probes {
        psi = step.apply(&psi);
        let p_excited = psi.excited_population() / psi.norm_sqr();
        let excited = rng.uniform() < p_excited;

        let switched = match (excited, protocol.imperfections) {
            (true, None) => true,
            (false, None) => false,
            (true, Some(imp)) => rng.uniform() >= imp.miss_prob,
            (false, Some(imp)) => rng.uniform() < imp.false_switch_prob,
        };
        if switched {
            return PulsedRunResult {
                survived: false,
                probes_completed: probe,
                switch_index: Some(probe),
            };
        }
        psi = if excited {
            TwoLevelState::excited()
        } else {
            TwoLevelState::ground()
        };
    }

    PulsedRunResult {
        survived: true,
        probes_completed: protocol.n_probes,
        switch_index: None,
    }
}

/// Probability that every probe of `protocol` reports "no tunnel".
///
/// After each probe the qubit sits in a basis state, so the run is a
/// two-state Markov chain: the drive flips the state with probability
/// sin²(Ωδt/2), a ground outcome survives with 1 − ε₀ and an excited
/// outcome survives (is missed) with η.
pub fn expected_survival(protocol: &PulsedProtocol) -> Result<f64> {
    protocol.validate()?;
    let s = (0.5 * protocol.omega * protocol.interval()).sin().powi(2);
    let c = 1.0 - s;
    let (eps0, eta) = protocol
        .imperfections
        .map_or((0.0, 0.0), |i| (i.false_switch_prob, i.miss_prob));
    let (mut ground, mut excited) = (1.0, 0.0);
    for _ in 0..protocol.n_probes {
        let g = ground * c + excited * s;
        let e = ground * s + excited * c;
        ground = g * (1.0 - eps0);
        excited = e * eta;
    }
    Ok(ground + excited)
}

/// Aggregate of many independent pulsed runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PulsedEnsemble {
    pub runs: u64,
    pub survived: u64,
    /// `switches[k]` counts runs that switched at probe `k`.
    pub switches: Vec<u64>,
}

impl PulsedEnsemble {
    pub fn survival_fraction(&self) -> f64 {
        self.survived as f64 / self.runs as f64
    }
}

/// Runs `runs` independent realizations; run `i` uses stream `(seed, i)`.
pub fn simulate_pulsed_ensemble(
    protocol: &PulsedProtocol,
    runs: u64,
    seed: u64,
) -> Result<PulsedEnsemble> {
    protocol.validate()?;
    if runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    let outcomes = ensemble::map_indexed(runs, |i| {
        simulate_pulsed_run(protocol, RngStream::new(seed, i)).switch_index
    });
    let mut switches = vec![0u64; protocol.n_probes as usize];
    let mut survived = 0;
    for o in outcomes {
        match o {
            Some(k) => switches[k as usize] += 1,
            None => survived += 1,
        }
    }
    Ok(PulsedEnsemble {
        runs,
        survived,
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_small_n() {
        assert_eq!(survival_exact(1).unwrap(), 0.0);
        assert!((survival_exact(2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_probes_rejected() {
        assert!(survival_exact(0).is_err());
        assert!(survival_approx(0).is_err());
    }

    #[test]
    fn approx_limits() {
        assert!((survival_approx(1_000_000).unwrap() - 1.0).abs() < 1e-5);
        let one = survival_approx(1).unwrap();
        assert!((one - (-PI * PI / 4.0).exp()).abs() < 1e-15);
        assert!((one - 0.0848).abs() < 1e-3);
    }

    #[test]
    fn curve_starts_at_one() {
        for mode in [CurveMode::Exact, CurveMode::Approx] {
            assert_eq!(survival_vs_time(2.0 * PI, 0.01, 0.0, mode).unwrap(), 1.0);
        }
    }

    #[test]
    fn curve_rejects_bad_times() {
        assert!(survival_vs_time(1.0, 0.1, -0.1, CurveMode::Approx).is_err());
        assert!(survival_vs_time(1.0, 0.0, 1.0, CurveMode::Approx).is_err());
        assert!(survival_vs_time(1.0, 0.1, 0.15, CurveMode::Exact).is_err());
        // non-commensurate is fine for the envelope
        assert!(survival_vs_time(1.0, 0.1, 0.15, CurveMode::Approx).is_ok());
    }

    #[test]
    fn curve_modes_close_at_half_period() {
        let omega = 2.0 * PI;
        let dt = PI / (50.0 * omega);
        let t = PI / omega;
        let e = survival_vs_time(omega, dt, t, CurveMode::Exact).unwrap();
        let a = survival_vs_time(omega, dt, t, CurveMode::Approx).unwrap();
        assert!(((e - a) / e).abs() < 0.01);
    }

    #[test]
    fn decay_time_values() {
        let omega = 3.0;
        let tc = effective_decay_time(omega, PI / (50.0 * omega)).unwrap();
        assert!((tc - 200.0 / (PI * omega)).abs() < 1e-12 * tc);
        let tc2 = effective_decay_time(omega, 2.0 * PI / (50.0 * omega)).unwrap();
        assert!((tc2 - tc / 2.0).abs() < 1e-12 * tc);
        let tc3 = effective_decay_time(2.0 * PI, 0.01).unwrap();
        assert!((tc3 - 10.132_118_364_233_778).abs() < 1e-9);
        assert!(effective_decay_time(0.0, 1.0).is_err());
        assert!(effective_decay_time(1.0, -1.0).is_err());
    }

    #[test]
    fn excited_population_limits() {
        let p = mean_excited_population(1.0, 1e-9).unwrap();
        assert!(p.exact < 1e-18 && p.small_angle < 1e-18);
        assert!(mean_excited_population(1.0, 0.0).is_err());
        assert!(!mean_excited_population(1.0, 0.6).unwrap().small_angle_valid);
        assert!(mean_excited_population(1.0, 0.3).unwrap().small_angle_valid);
    }

    #[test]
    fn excited_population_series_branch_is_continuous() {
        let below = mean_excited_population(1.0, 0.999_999e-3).unwrap().exact;
        let above = mean_excited_population(1.0, 1.000_001e-3).unwrap().exact;
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn protocol_validation() {
        assert!(PulsedProtocol::half_period(0.0, 10).is_err());
        assert!(PulsedProtocol::half_period(1.0, 0).is_err());
        assert!(PulsedProtocol::with_window(0.0, 10, 1.0).is_ok());
        let p = PulsedProtocol::half_period(2.0 * PI, 10).unwrap();
        assert!((p.interval() - 0.05).abs() < 1e-15);
        assert!(p.probe_duration(0.003).is_ok());
        assert!(p.probe_duration(0.06).is_err());
        assert!(ProbeImperfections::new(1.0, 0.0).is_err());
        assert!(ProbeImperfections::new(0.0, -0.1).is_err());
        assert!((ProbeImperfections::SUGGESTED.fidelity() - 0.98).abs() < 1e-15);
    }

    #[test]
    fn undriven_ideal_always_survives() {
        let p = PulsedProtocol::with_window(0.0, 10, 1.0).unwrap();
        for i in 0..500 {
            let r = simulate_pulsed_run(&p, RngStream::new(3, i));
            assert!(r.survived);
            assert_eq!(r.probes_completed, 10);
            assert_eq!(r.switch_index, None);
        }
    }

    #[test]
    fn single_end_probe_always_switches() {
        let p = PulsedProtocol::half_period(2.0 * PI, 1).unwrap();
        for i in 0..500 {
            let r = simulate_pulsed_run(&p, RngStream::new(5, i));
            assert!(!r.survived);
            assert_eq!(r.switch_index, Some(0));
        }
    }

    #[test]
    fn run_result_invariant() {
        let p = PulsedProtocol::half_period(2.0 * PI, 7)
            .unwrap()
            .imperfections(ProbeImperfections::SUGGESTED);
        for i in 0..2000 {
            let r = simulate_pulsed_run(&p, RngStream::new(9, i));
            assert_eq!(r.survived, r.switch_index.is_none());
            assert_eq!(r.survived, r.probes_completed == 7);
            if let Some(k) = r.switch_index {
                assert_eq!(r.probes_completed, k);
            }
        }
    }

    #[test]
    fn ensemble_histogram_adds_up() {
        let p = PulsedProtocol::half_period(2.0 * PI, 5).unwrap();
        let e = simulate_pulsed_ensemble(&p, 3000, 1).unwrap();
        assert_eq!(e.survived + e.switches.iter().sum::<u64>(), e.runs);
        assert!(simulate_pulsed_ensemble(&p, 0, 1).is_err());
    }
}
