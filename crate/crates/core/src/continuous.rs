//! Continuous tunneling measurement.
//!
//! The excited state tunnels out at rate Γ while the drive couples the two
//! levels with strength Ω, giving the non-Hermitian generator
//!
//! ```text
//! H = ( 0    Ω      )
//!     ( Ω   -iΓ/2   )
//! ```
//!
//! Without tunneling the population transfer |0⟩ → |1⟩ completes at
//! t = π/(2Ω). The no-jump propagator e^{-iHt} has a closed form, and the
//! quantum-jump (Monte Carlo wave-function) engine samples tunneling events
//! step by step.

use crate::analysis::binomial_ci;
use crate::ensemble;
use crate::error::{ensure_finite, invalid, Result, ZenoError};
use crate::qmath::{mat_exp, Complex, Mat2, TwoLevelState};
use crate::rng::{RngStream, StreamRng};

/// Bound on Γ·δt and Ω·δt accepted by [`ContinuousParams`].
pub const MAX_STEP_PRODUCT: f64 = 0.01;
/// Per-step jump probability above which [`mcwf_step`] refuses to proceed.
pub const JUMP_PROBABILITY_GUARD: f64 = 0.1;
/// Minimum number of steps per window under the default step policy.
pub const MIN_STEPS_PER_WINDOW: f64 = 100.0;

const NORM_TOLERANCE: f64 = 1e-9;
/// Below this |q|t² the hyperbolic functions are evaluated by their series.
const SERIES_CUTOFF: f64 = 1e-4;
/// Relative threshold on |(Γ/4)² − Ω²| for labelling the critical branch.
const CRITICAL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// ψ ← (1 − iHδt)ψ, renormalized.
    FirstOrder,
    /// ψ ← e^{-iHδt}ψ, renormalized.
    ExactExponential,
}

impl Stepping {
    pub fn name(self) -> &'static str {
        match self {
            Stepping::FirstOrder => "first-order",
            Stepping::ExactExponential => "exact",
        }
    }
}

/// Coefficient of the damped sinh term in the survival amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientVariant {
    /// Γ/(4h), which follows from exponentiating the generator.
    Derived,
    /// Γ/(2h), as it appears in the printed closed form.
    Printed,
}

impl CoefficientVariant {
    pub fn name(self) -> &'static str {
        match self {
            CoefficientVariant::Derived => "gamma/(4h)",
            CoefficientVariant::Printed => "gamma/(2h)",
        }
    }

    fn factor(self, gamma: f64) -> f64 {
        match self {
            CoefficientVariant::Derived => gamma / 4.0,
            CoefficientVariant::Printed => gamma / 2.0,
        }
    }
}

/// Variant used by [`survival_amplitude`]. Cross-checked against both
/// numerical oracles in the tests and the `validate` report.
pub const SHIPPED_COEFFICIENT: CoefficientVariant = CoefficientVariant::Derived;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// δt = min(0.01/Γ, 0.01/Ω, T/100).
    Auto,
    Fixed(f64),
}

impl StepPolicy {
    pub fn resolve(self, omega: f64, gamma: f64, window: f64) -> f64 {
        match self {
            StepPolicy::Auto => default_step(omega, gamma, window),
            StepPolicy::Fixed(dt) => dt,
        }
    }
}

/// Default integration step min(0.01/Γ, 0.01/Ω, T/100).
pub fn default_step(omega: f64, gamma: f64, window: f64) -> f64 {
    let mut dt = window / MIN_STEPS_PER_WINDOW;
    if gamma > 0.0 {
        dt = dt.min(MAX_STEP_PRODUCT / gamma);
    }
    if omega > 0.0 {
        dt = dt.min(MAX_STEP_PRODUCT / omega);
    }
    dt
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuousParams {
    /// Coupling Ω in rad/μs.
    pub omega: f64,
    /// Tunneling rate Γ in 1/μs.
    pub gamma: f64,
    /// Observation window T in μs.
    pub window: f64,
    /// Integration step δt in μs.
    pub step: f64,
    pub stepping: Stepping,
}

impl ContinuousParams {
    pub fn new(omega: f64, gamma: f64, window: f64, step: f64, stepping: Stepping) -> Result<Self> {
        let p = ContinuousParams {
            omega,
            gamma,
            window,
            step,
            stepping,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with the step chosen by [`default_step`].
    pub fn with_auto_step(omega: f64, gamma: f64, window: f64, stepping: Stepping) -> Result<Self> {
        Self::new(omega, gamma, window, default_step(omega, gamma, window), stepping)
    }

    /// Window of a full undamped transfer, T = π/(2Ω).
    pub fn transfer_window(omega: f64) -> f64 {
        std::f64::consts::PI / (2.0 * omega)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("omega", self.omega),
            ("gamma", self.gamma),
            ("window", self.window),
            ("step", self.step),
        ] {
            ensure_finite(name, x)?;
        }
        if self.omega <= 0.0 {
            return Err(invalid(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.gamma < 0.0 {
            return Err(invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if self.window <= 0.0 || self.step <= 0.0 {
            return Err(invalid(format!(
                "window and step must be > 0, got window = {}, step = {}",
                self.window, self.step
            )));
        }
        // slack for products that land on the bound through rounding
        let bound = MAX_STEP_PRODUCT * (1.0 + 1e-12);
        if self.gamma * self.step > bound {
            return Err(ZenoError::Configuration(format!(
                "gamma*step = {} exceeds {MAX_STEP_PRODUCT}",
                self.gamma * self.step
            )));
        }
        if self.omega * self.step > bound {
            return Err(ZenoError::Configuration(format!(
                "omega*step = {} exceeds {MAX_STEP_PRODUCT}",
                self.omega * self.step
            )));
        }
        Ok(())
    }

    /// Number of steps covering the window; the last one may be shorter.
    pub fn step_count(&self) -> u64 {
        ((self.window / self.step) * (1.0 - 1e-12)).ceil().max(1.0) as u64
    }
}

/// Non-Hermitian generator with Ω off the diagonal and −iΓ/2 on the excited level.
pub fn hamiltonian(omega: f64, gamma: f64) -> Result<Mat2> {
    ensure_finite("omega", omega)?;
    ensure_finite("gamma", gamma)?;
    if omega <= 0.0 {
        return Err(invalid(format!("omega must be > 0, got {omega}")));
    }
    if gamma < 0.0 {
        return Err(invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    let z = Complex::new(0.0, 0.0);
    let w = Complex::new(omega, 0.0);
    Ok(Mat2::new(z, w, w, Complex::new(0.0, -gamma / 2.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Γ/4 > Ω: two decaying exponentials.
    Overdamped,
    Critical,
    /// Γ/4 < Ω: damped oscillation.
    Underdamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalAmplitude {
    /// ⟨0|e^{-iHt}|0⟩.
    pub value: Complex,
    /// √|(Γ/4)² − Ω²|.
    pub h: f64,
    pub branch: Branch,
}

impl SurvivalAmplitude {
    pub fn probability(&self) -> f64 {
        self.value.norm_sqr()
    }
}

fn branch_of(omega: f64, gamma: f64) -> Branch {
    let g = gamma / 4.0;
    let q = g * g - omega * omega;
    let scale = (g * g).max(omega * omega);
    if q.abs() <= CRITICAL_TOLERANCE * scale {
        Branch::Critical
    } else if q > 0.0 {
        Branch::Overdamped
    } else {
        Branch::Underdamped
    }
}

/// e^{-Γt/4}·cosh(ht) and e^{-Γt/4}·sinh(ht)/h, continued analytically to
/// the oscillatory and critical regimes.
fn damped_parts(omega: f64, gamma: f64, t: f64) -> (f64, f64) {
    let g = gamma / 4.0;
    let q = g * g - omega * omega;
    let x = q * t * t;
    if x.abs() < SERIES_CUTOFF {
        let d = (-g * t).exp();
        let c = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
        let s = t * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0);
        (d * c, d * s)
    } else if q > 0.0 {
        // split into exponentials so large Γt does not overflow cosh
        let h = q.sqrt();
        let slow = ((h - g) * t).exp();
        let fast = (-(h + g) * t).exp();
        (0.5 * (slow + fast), 0.5 * (slow - fast) / h)
    } else {
        let k = (-q).sqrt();
        let d = (-g * t).exp();
        let (s, c) = (k * t).sin_cos();
        (d * c, d * s / k)
    }
}

fn ensure_time(t: f64) -> Result<()> {
    ensure_finite("t", t)?;
    if t < 0.0 {
        Err(invalid(format!("t must be >= 0, got {t}")))
    } else {
        Ok(())
    }
}

/// Closed-form survival amplitude ⟨0|e^{-iHt}|0⟩ with the shipped coefficient.
pub fn survival_amplitude(omega: f64, gamma: f64, t: f64) -> Result<SurvivalAmplitude> {
    survival_amplitude_with(SHIPPED_COEFFICIENT, omega, gamma, t)
}

/// Survival amplitude e^{-Γt/4}[cosh(ht) + c·sinh(ht)] for either
/// coefficient variant `c`.
pub fn survival_amplitude_with(
    variant: CoefficientVariant,
    omega: f64,
    gamma: f64,
    t: f64,
) -> Result<SurvivalAmplitude> {
    hamiltonian(omega, gamma)?;
    ensure_time(t)?;
    let (dc, ds) = damped_parts(omega, gamma, t);
    let g = gamma / 4.0;
    Ok(SurvivalAmplitude {
        value: Complex::new(dc + variant.factor(gamma) * ds, 0.0),
        h: (g * g - omega * omega).abs().sqrt(),
        branch: branch_of(omega, gamma),
    })
}

/// Closed-form propagator e^{-iHt} = e^{-Γt/4}[cosh(ht) − iK sinh(ht)/h],
/// with K = H + iΓ/4·I.
pub fn propagator(omega: f64, gamma: f64, t: f64) -> Result<Mat2> {
    hamiltonian(omega, gamma)?;
    ensure_time(t)?;
    Ok(propagator_unchecked(omega, gamma, t))
}

fn propagator_unchecked(omega: f64, gamma: f64, t: f64) -> Mat2 {
    let (dc, ds) = damped_parts(omega, gamma, t);
    let g = gamma / 4.0;
    let off = Complex::new(0.0, -omega * ds);
    Mat2::new(
        Complex::new(dc + g * ds, 0.0),
        off,
        off,
        Complex::new(dc - g * ds, 0.0),
    )
}

/// Probability that no tunneling occurs before `t`, ‖e^{-iHt}|0⟩‖².
pub fn no_jump_probability(omega: f64, gamma: f64, t: f64) -> Result<f64> {
    let u = propagator(omega, gamma, t)?;
    Ok(u.get(0, 0).norm_sqr() + u.get(1, 0).norm_sqr())
}

/// Outcome of a single quantum-jump step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Jump,
    NoJump(TwoLevelState),
}

/// No-jump evolution operator over `dt` for the chosen stepping mode.
pub fn no_jump_operator(params: &ContinuousParams, dt: f64) -> Mat2 {
    match params.stepping {
        Stepping::ExactExponential => propagator_unchecked(params.omega, params.gamma, dt),
        Stepping::FirstOrder => {
            let g = Complex::new(0.0, -dt);
            let h = Mat2::new(
                Complex::new(0.0, 0.0),
                Complex::new(params.omega, 0.0),
                Complex::new(params.omega, 0.0),
                Complex::new(0.0, -params.gamma / 2.0),
            );
            Mat2::identity() + h.scale(g)
        }
    }
}

fn step_with(
    state: &TwoLevelState,
    gamma: f64,
    dt: f64,
    evolve: &Mat2,
    rng: &mut StreamRng,
) -> Result<StepOutcome> {
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(invalid(format!("state must be normalized, norm = {norm}")));
    }
    let p = gamma * dt * state.excited_population();
    if p >= JUMP_PROBABILITY_GUARD {
        return Err(ZenoError::Configuration(format!(
            "jump probability gamma*step*|a1|^2 = {p} is not below {JUMP_PROBABILITY_GUARD}"
        )));
    }
    if rng.uniform() < p {
        Ok(StepOutcome::Jump)
    } else {
        Ok(StepOutcome::NoJump(evolve.apply(state).normalized()?))
    }
}

/// One quantum-jump step of length `params.step`.
///
/// Jumps with probability P = Γδt|a₁|²; otherwise returns the renormalized
/// no-jump state.
pub fn mcwf_step(
    state: &TwoLevelState,
    params: &ContinuousParams,
    rng: &mut StreamRng,
) -> Result<StepOutcome> {
    let evolve = no_jump_operator(params, params.step);
    step_with(state, params.gamma, params.step, &evolve, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOutcome {
    pub jumped: bool,
    /// End of the step in which the jump was drawn, μs.
    pub jump_time: Option<f64>,
    /// Normalized state at the end of the window; only for runs without a jump.
    pub final_state: Option<TwoLevelState>,
    /// No jump, and a projective readout of `final_state` at the end of the
    /// window found |0⟩.
    pub survived: bool,
    pub stream_id: u64,
}

/// Runs one trajectory from |0⟩ until a jump or the end of the window.
pub fn run_trajectory(params: &ContinuousParams, stream: RngStream) -> Result<TrajectoryOutcome> {
    params.validate()?;
    let stepper = Stepper::new(params);
    stepper.run(stream)
}

/// Precomputed no-jump operators for a parameter set.
struct Stepper {
    params: ContinuousParams,
    steps: u64,
    last_dt: f64,
    evolve: Mat2,
    evolve_last: Mat2,
}

impl Stepper {
    fn new(params: &ContinuousParams) -> Self {
        let steps = params.step_count();
        let last_dt = params.window - (steps - 1) as f64 * params.step;
        Stepper {
            params: *params,
            steps,
            last_dt,
            evolve: no_jump_operator(params, params.step),
            evolve_last: no_jump_operator(params, last_dt),
        }
    }

    fn run(&self, stream: RngStream) -> Result<TrajectoryOutcome> {
        let mut rng = stream.generator();
        let mut psi = TwoLevelState::ground();
        let p = &self.params;
        for i in 0..self.steps {
            let last = i + 1 == self.steps;
            let (dt, evolve) = if last {
                (self.last_dt, &self.evolve_last)
            } else {
                (p.step, &self.evolve)
            };
            match step_with(&psi, p.gamma, dt, evolve, &mut rng)? {
                StepOutcome::Jump => {
                    let t = if last {
                        p.window
                    } else {
                        (i + 1) as f64 * p.step
                    };
                    return Ok(TrajectoryOutcome {
                        jumped: true,
                        jump_time: Some(t),
                        final_state: None,
                        survived: false,
                        stream_id: stream.stream_index,
                    });
                }
                StepOutcome::NoJump(next) => psi = next,
            }
        }
        let survived = rng.uniform() < psi.ground_population();
        Ok(TrajectoryOutcome {
            jumped: false,
            jump_time: None,
            final_state: Some(psi),
            survived,
            stream_id: stream.stream_index,
        })
    }
}

/// One Γ point of a tunneling-rate sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub step: f64,
    pub runs: u32,
    pub no_jump_count: u64,
    /// Runs with no jump whose final readout also found |0⟩.
    pub survived_count: u64,
    /// 95 % Wilson interval on the no-jump count, in counts.
    pub ci_low: f64,
    pub ci_high: f64,
    /// |A₀(T)|² from the closed form.
    pub analytic_probability: f64,
    /// |⟨0|e^{-iHT}|0⟩|² from the series exponential.
    pub oracle_probability: f64,
    /// ‖e^{-iHT}|0⟩‖² from the series exponential.
    pub no_jump_probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub omega: f64,
    pub window: f64,
    pub runs: u32,
    pub seed: u64,
    pub stepping: Stepping,
    pub step_policy: StepPolicy,
}

/// Confidence level of the interval reported by [`sweep_gamma`].
pub const SWEEP_CONFIDENCE: f64 = 0.95;

/// Runs `config.runs` trajectories per tunneling rate. Trajectory `i` at grid
/// index `g` uses stream `(seed, g << 32 | i)`.
pub fn sweep_gamma(config: &SweepConfig, gamma_grid: &[f64]) -> Result<Vec<SweepRow>> {
    if gamma_grid.is_empty() {
        return Err(invalid("gamma grid is empty"));
    }
    if config.runs == 0 {
        return Err(invalid("runs must be at least 1"));
    }
    if gamma_grid.len() > u32::MAX as usize {
        return Err(invalid("gamma grid too large"));
    }
    let steppers = gamma_grid
        .iter()
        .map(|&gamma| {
            let step = config.step_policy.resolve(config.omega, gamma, config.window);
            let params =
                ContinuousParams::new(config.omega, gamma, config.window, step, config.stepping)?;
            Ok(Stepper::new(&params))
        })
        .collect::<Result<Vec<_>>>()?;

    let runs = config.runs as u64;
    let total = runs * gamma_grid.len() as u64;
    let outcomes = ensemble::map_indexed(total, |k| {
        let g = (k / runs) as u32;
        let i = (k % runs) as u32;
        steppers[g as usize]
            .run(RngStream::nested(config.seed, g, i))
            .map(|o| (g, o.jumped, o.survived))
    });

    let mut no_jump = vec![0u64; gamma_grid.len()];
    let mut survived = vec![0u64; gamma_grid.len()];
    for o in outcomes {
        let (g, jumped, surv) = o?;
        if !jumped {
            no_jump[g as usize] += 1;
        }
        if surv {
            survived[g as usize] += 1;
        }
    }

    gamma_grid
        .iter()
        .enumerate()
        .map(|(g, &gamma)| {
            let (lo, hi) = binomial_ci(no_jump[g], runs, SWEEP_CONFIDENCE)?;
            let u = mat_exp(&hamiltonian(config.omega, gamma)?, config.window)?;
            Ok(SweepRow {
                gamma,
                step: steppers[g].params.step,
                runs: config.runs,
                no_jump_count: no_jump[g],
                survived_count: survived[g],
                ci_low: lo * runs as f64,
                ci_high: hi * runs as f64,
                analytic_probability: survival_amplitude(config.omega, gamma, config.window)?
                    .probability(),
                oracle_probability: u.get(0, 0).norm_sqr(),
                no_jump_probability: u.get(0, 0).norm_sqr() + u.get(1, 0).norm_sqr(),
            })
        })
        .collect()
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}
