//! Arrhenius retention math.
//!
//! A bit sits in one of two energy minima separated by a barrier `ΔE`. At
//! temperature `T` it escapes at rate `f0·exp(−ΔE/k_B·T)`, so after time `t`
//! the switching probability is `1 − exp(−t/τ)` with `τ = exp(ΔE/k_B·T)/f0`.
//! Everything else here (required barrier, accelerated test temperature,
//! equivalent storage time, cascades) is built from that law.
//!
//! All routines work with logarithms wherever the physical quantities run
//! past `f64` range (gigayear decay times at 70 k_BT are fine, 848 K test
//! extrapolations are not far off).

use thiserror::Error;

/// Boltzmann constant [J/K].
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, used for eV conversion [J/eV].
pub const ELECTRON_VOLT: f64 = 1.602176634e-19;
/// Julian year [s].
pub const SECONDS_PER_YEAR: f64 = 3.1557e7;
/// Reference temperature of the linear barrier model [K].
pub const REFERENCE_TEMPERATURE: f64 = 300.0;

/// Relative rate separation below which two cascade steps are merged into
/// an Erlang block.
const RATE_MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetentionError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("logarithm argument of {what} must exceed 1 (ln = {log_value})")]
    Domain { what: &'static str, log_value: f64 },
    #[error("{what} exceeds representable time (natural-log exponent {exponent:.3})")]
    Overflow { what: &'static str, exponent: f64 },
    #[error("barrier becomes negative at {temperature} K ({barrier:e} J)")]
    NegativeBarrier { temperature: f64, barrier: f64 },
}

pub type Result<T> = std::result::Result<T, RetentionError>;

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(RetentionError::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}

fn exp_checked(what: &'static str, exponent: f64) -> Result<f64> {
    let v = exponent.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RetentionError::Overflow { what, exponent })
    }
}

pub fn kelvin_to_joules(units_of_kt: f64, temperature: f64) -> f64 {
    units_of_kt * BOLTZMANN * temperature
}

pub fn joules_to_ev(joules: f64) -> f64 {
    joules / ELECTRON_VOLT
}

pub fn years_to_seconds(years: f64) -> f64 {
    years * SECONDS_PER_YEAR
}

pub fn seconds_to_years(seconds: f64) -> f64 {
    seconds / SECONDS_PER_YEAR
}

/// A single barrier at a fixed temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionModel {
    attempt_frequency: f64,
    barrier: f64,
    temperature: f64,
}

impl RetentionModel {
    pub fn new(attempt_frequency: f64, barrier: f64, temperature: f64) -> Result<Self> {
        require(
            "attempt_frequency",
            attempt_frequency,
            attempt_frequency > 0.0,
            "must be > 0",
        )?;
        require("barrier", barrier, barrier >= 0.0, "must be >= 0")?;
        require("temperature", temperature, temperature > 0.0, "must be > 0")?;
        Ok(Self {
            attempt_frequency,
            barrier,
            temperature,
        })
    }

    pub fn attempt_frequency(&self) -> f64 {
        self.attempt_frequency
    }

    pub fn barrier(&self) -> f64 {
        self.barrier
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `ΔE / k_B·T`.
    pub fn reduced_barrier(&self) -> f64 {
        self.barrier / (BOLTZMANN * self.temperature)
    }

    /// Escape rate `f0·exp(−ΔE/k_B·T)` [1/s]. Underflows to zero for huge
    /// barriers, never overflows.
    pub fn rate(&self) -> f64 {
        self.attempt_frequency * (-self.reduced_barrier()).exp()
    }

    /// Natural log of the decay time, always representable.
    pub fn ln_decay_time(&self) -> f64 {
        self.reduced_barrier() - self.attempt_frequency.ln()
    }

    /// `τ = f0⁻¹·exp(ΔE/k_B·T)` [s].
    pub fn decay_time(&self) -> Result<f64> {
        exp_checked("decay time", self.ln_decay_time())
    }

    /// `P_sw = 1 − exp(−t/τ)`, evaluated as `−expm1(−t·rate)` so that
    /// probabilities near 1e-6 keep full relative precision.
    pub fn switching_probability(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "time must be non-negative");
        hazard_to_probability(t * self.rate())
    }
}

/// Converts an accumulated hazard into a switching probability.
pub fn hazard_to_probability(hazard: f64) -> f64 {
    -(-hazard).exp_m1()
}

/// Minimum barrier, in units of `k_B·T`, for a fraction `alpha` of bits to
/// survive time `t`: `ln(t·f0/α)`.
pub fn required_barrier(t: f64, alpha: f64, attempt_frequency: f64) -> Result<f64> {
    require("t", t, t > 0.0, "must be > 0")?;
    require("alpha", alpha, alpha > 0.0 && alpha < 1.0, "must lie in (0, 1)")?;
    require(
        "attempt_frequency",
        attempt_frequency,
        attempt_frequency > 0.0,
        "must be > 0",
    )?;
    let log_value = t.ln() + attempt_frequency.ln() - alpha.ln();
    if log_value <= 0.0 {
        return Err(RetentionError::Domain {
            what: "t·f0/α",
            log_value,
        });
    }
    Ok(log_value)
}

/// Accelerated aging test parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestPlan {
    /// Storage time to prove [s].
    pub storage_time: f64,
    /// Storage temperature [K].
    pub storage_temperature: f64,
    /// Tolerable error fraction during storage.
    pub storage_error_fraction: f64,
    /// Duration of the oven test [s].
    pub test_time: f64,
    /// Error fraction observed during the test.
    pub test_error_fraction: f64,
    pub attempt_frequency: f64,
}

impl TestPlan {
    fn validate(&self) -> Result<()> {
        require(
            "storage_time",
            self.storage_time,
            self.storage_time > 0.0,
            "must be > 0",
        )?;
        require(
            "storage_temperature",
            self.storage_temperature,
            self.storage_temperature > 0.0,
            "must be > 0",
        )?;
        require("test_time", self.test_time, self.test_time > 0.0, "must be > 0")?;
        Ok(())
    }
}

/// Oven temperature at which a test of `test_time` with `test_error_fraction`
/// demonstrates the storage requirement:
/// `T_t = T·ln(t·f0/α) / ln(t_t·f0/α_t)`.
pub fn test_temperature(plan: &TestPlan) -> Result<f64> {
    plan.validate()?;
    let storage = required_barrier(
        plan.storage_time,
        plan.storage_error_fraction,
        plan.attempt_frequency,
    )?;
    let test = required_barrier(
        plan.test_time,
        plan.test_error_fraction,
        plan.attempt_frequency,
    )?;
    Ok(plan.storage_temperature * storage / test)
}

/// Storage time proven by surviving `test_time` at `test_temperature`; the
/// inverse of [`test_temperature`].
pub fn equivalent_storage_time(
    test_temperature: f64,
    test_time: f64,
    test_error_fraction: f64,
    storage_temperature: f64,
    storage_error_fraction: f64,
    attempt_frequency: f64,
) -> Result<f64> {
    let exponent = ln_equivalent_storage_time(
        test_temperature,
        test_time,
        test_error_fraction,
        storage_temperature,
        storage_error_fraction,
        attempt_frequency,
    )?;
    exp_checked("equivalent storage time", exponent)
}

/// Natural log of [`equivalent_storage_time`], usable when the time itself
/// overflows.
pub fn ln_equivalent_storage_time(
    test_temperature: f64,
    test_time: f64,
    test_error_fraction: f64,
    storage_temperature: f64,
    storage_error_fraction: f64,
    attempt_frequency: f64,
) -> Result<f64> {
    require(
        "test_temperature",
        test_temperature,
        test_temperature > 0.0,
        "must be > 0",
    )?;
    require(
        "storage_temperature",
        storage_temperature,
        storage_temperature > 0.0,
        "must be > 0",
    )?;
    require(
        "storage_error_fraction",
        storage_error_fraction,
        storage_error_fraction > 0.0 && storage_error_fraction < 1.0,
        "must lie in (0, 1)",
    )?;
    let test_log = required_barrier(test_time, test_error_fraction, attempt_frequency)?;
    let reduced = test_log * test_temperature / storage_temperature;
    let exponent = storage_error_fraction.ln() - attempt_frequency.ln() + reduced;
    // the storage-side log argument t·f0/α must also exceed 1
    if reduced <= 0.0 {
        return Err(RetentionError::Domain {
            what: "t·f0/α",
            log_value: reduced,
        });
    }
    Ok(exponent)
}

/// Linear temperature dependence of the barrier about 300 K:
/// `ΔE(T) = ΔE0 − slope·(T − 300 K)`.
pub fn barrier_temperature_model(barrier_at_reference: f64, slope: f64, temperature: f64) -> Result<f64> {
    require("temperature", temperature, temperature > 0.0, "must be > 0")?;
    let barrier = barrier_at_reference - slope * (temperature - REFERENCE_TEMPERATURE);
    if barrier < 0.0 || !barrier.is_finite() {
        return Err(RetentionError::NegativeBarrier {
            temperature,
            barrier,
        });
    }
    Ok(barrier)
}

/// One hop of a cascade through intermediate minima.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeStep {
    pub barrier: f64,
    pub attempt_frequency: f64,
}

/// Sequential chain of barriers; the bit is lost once the last one is
/// crossed. No back-transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    steps: Vec<CascadeStep>,
}

impl CascadeModel {
    pub fn new(steps: Vec<CascadeStep>) -> Result<Self> {
        if steps.is_empty() {
            return Err(RetentionError::InvalidParameter {
                name: "steps",
                value: 0.0,
                reason: "cascade needs at least one step",
            });
        }
        for s in &steps {
            require("barrier", s.barrier, s.barrier >= 0.0, "must be >= 0")?;
            require(
                "attempt_frequency",
                s.attempt_frequency,
                s.attempt_frequency > 0.0,
                "must be > 0",
            )?;
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[CascadeStep] {
        &self.steps
    }

    pub fn rates(&self, temperature: f64) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.attempt_frequency * (-s.barrier / (BOLTZMANN * temperature)).exp())
            .collect()
    }
}

/// Probability that the whole cascade completes within `t` at `temperature`.
pub fn cascade_switch_probability(cascade: &CascadeModel, temperature: f64, t: f64) -> f64 {
    assert!(temperature > 0.0, "temperature must be > 0");
    assert!(t >= 0.0, "time must be non-negative");
    hypoexponential_cdf(&cascade.rates(temperature), t)
}

/// CDF of a sum of independent exponentials with the given rates.
///
/// Rates closer than [`RATE_MERGE_TOLERANCE`] (relative) are merged into a
/// single pole of higher multiplicity, i.e. the Erlang limit. The density is
/// then expanded in partial fractions of its Laplace transform
/// `Π (λ_k/(s+λ_k))^{m_k}` and integrated term by term.
pub fn hypoexponential_cdf(rates: &[f64], t: f64) -> f64 {
    if t == 0.0 || rates.is_empty() {
        return if rates.is_empty() { 1.0 } else { 0.0 };
    }
    if rates.contains(&0.0) {
        return 0.0;
    }
    if rates.len() == 1 {
        return hazard_to_probability(rates[0] * t);
    }
    let poles = merge_rates(rates);

    // survival = Σ_k Σ_j c_kj/λ_k^j · e^{−λ_k t} · Σ_{i<j} (λ_k t)^i / i!
    let mut survival = 0.0;
    for (k, &(lambda, multiplicity)) in poles.iter().enumerate() {
        let g = taylor_of_other_factors(&poles, k, multiplicity);
        let decay = (-lambda * t).exp();
        if decay == 0.0 {
            continue;
        }
        let x = lambda * t;
        for j in 1..=multiplicity {
            // c_kj / λ^j = λ^{m−j} · g_{m−j}
            let q = multiplicity - j;
            let coeff = lambda.powi(q as i32) * g[q];
            let mut partial = 0.0;
            let mut term = 1.0;
            for i in 0..j {
                if i > 0 {
                    term *= x / i as f64;
                }
                partial += term;
            }
            survival += coeff * decay * partial;
        }
    }
    (1.0 - survival).clamp(0.0, 1.0)
}

/// Groups sorted rates into (mean rate, multiplicity) poles.
fn merge_rates(rates: &[f64]) -> Vec<(f64, usize)> {
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut poles: Vec<(f64, usize, f64)> = Vec::new(); // (sum, count, first)
    for r in sorted {
        match poles.last_mut() {
            Some((sum, count, first)) if (r - *first).abs() <= RATE_MERGE_TOLERANCE * r.abs() => {
                *sum += r;
                *count += 1;
            }
            _ => poles.push((r, 1, r)),
        }
    }
    poles
        .into_iter()
        .map(|(sum, count, _)| (sum / count as f64, count))
        .collect()
}

/// Taylor coefficients `g_0..g_{m−1}` about `s = −λ_k` of
/// `G(s) = Π_{l≠k} (λ_l/(s+λ_l))^{m_l}`, via the series of `ln G`.
fn taylor_of_other_factors(poles: &[(f64, usize)], k: usize, order: usize) -> Vec<f64> {
    let s0 = -poles[k].0;
    let mut g0 = 1.0;
    for (l, &(lambda, m)) in poles.iter().enumerate() {
        if l != k {
            g0 *= (lambda / (s0 + lambda)).powi(m as i32);
        }
    }
    // ln G = const − Σ m_l ln(s+λ_l);  coefficient q ≥ 1 of −ln(s0+λ+h) in h
    // is −(−1)^{q−1}/(q·(s0+λ)^q).
    let mut log_coeffs = vec![0.0; order];
    for (q, coeff) in log_coeffs.iter_mut().enumerate().skip(1) {
        let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
        *coeff = poles
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != k)
            .map(|(_, &(lambda, m))| sign * m as f64 / (q as f64 * (s0 + lambda).powi(q as i32)))
            .sum();
    }
    let mut g = vec![0.0; order];
    g[0] = g0;
    for q in 1..order {
        let acc: f64 = (1..=q).map(|i| i as f64 * log_coeffs[i] * g[q - i]).sum();
        g[q] = acc / q as f64;
    }
    g
}
