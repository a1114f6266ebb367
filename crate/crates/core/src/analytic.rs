//! Closed-form excited populations, Fisher information and probe-time
//! planning for the bichromatic thermometer.

use serde::{Deserialize, Serialize};

use crate::dynamics::TrapConfig;
use crate::error::{domain, Error, Result};
use crate::optim::bisect;

/// Largest ion count for which outcome enumeration is attempted.
pub const MAX_ENUMERATED_IONS: usize = 12;

fn half_area(eta: f64, omega: f64, t: f64) -> f64 {
    eta * omega * t / 2.0
}

/// Excited population including the leading Debye-Waller correction.
pub fn pe_extended(nbar: f64, eta: f64, omega: f64, t: f64) -> f64 {
    let x = (eta * omega * t).powi(2);
    let decay = (-x * (0.5 + nbar)).exp();
    0.5 * (1.0 - decay) - 0.5 * eta * eta * x * (nbar + 1.0) * (2.0 - x * (1.0 + nbar)) * decay
}

/// Excited population `½[1 − exp(−2a²(2n̄+1))]` with `a = ηΩt/2`.
pub fn pe_reduced(nbar: f64, eta: f64, omega: f64, t: f64) -> f64 {
    let a = half_area(eta, omega, t);
    -0.5 * (-2.0 * a * a * (1.0 + 2.0 * nbar)).exp_m1()
}

/// `∂P_e/∂n̄` of [`pe_reduced`].
pub fn pe_reduced_derivative(nbar: f64, eta: f64, omega: f64, t: f64) -> f64 {
    let a2 = half_area(eta, omega, t).powi(2);
    2.0 * a2 * (-2.0 * a2 * (1.0 + 2.0 * nbar)).exp()
}

/// Fisher information per shot about `n̄` of one bichromatic measurement.
pub fn fisher_bichromatic(nbar: f64, eta: f64, omega: f64, t: f64) -> f64 {
    let a2 = half_area(eta, omega, t).powi(2);
    if a2 == 0.0 {
        return 0.0;
    }
    let denom = (4.0 * a2 * (2.0 * nbar + 1.0)).exp_m1();
    if denom.is_infinite() {
        return 0.0;
    }
    16.0 * a2 * a2 / denom
}

/// Fisher information written in terms of the excited population.
pub fn fisher_vs_pe(nbar: f64, pe: f64) -> Result<f64> {
    if !(pe > 0.0 && pe < 0.5) {
        return Err(domain("fisher_vs_pe", format!("pe must lie in (0, 1/2), got {pe}")));
    }
    let u = 1.0 - 2.0 * pe;
    let l = u.ln();
    Ok(4.0 / (2.0 * nbar + 1.0).powi(2) * l * l / (u.powi(-2) - 1.0))
}

/// Fisher information `(∂p)²/(p(1−p))` of a single Bernoulli outcome.
pub fn binomial_fisher(p: f64, dp: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    dp * dp / (p * (1.0 - p))
}

/// Excited population that maximizes [`fisher_vs_pe`], independent of `n̄`.
///
/// With `u = 1 − 2P_e` the stationarity condition reduces to
/// `ln u + 1 − u² = 0`, whose root below `1/√2` is found by bisection.
pub fn pe_star() -> f64 {
    let u = bisect(|u| u.ln() + 1.0 - u * u, 1e-3, std::f64::consts::FRAC_1_SQRT_2);
    (1.0 - u) / 2.0
}

/// Target population and the probe time that reaches it for an `n̄` guess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub pe_star: f64,
    pub t_star: f64,
}

pub fn optimal_time(nbar_guess: f64, eta: f64, omega: f64) -> Result<ProbePlan> {
    if !(nbar_guess >= 0.0) || !nbar_guess.is_finite() {
        return Err(domain("optimal_time", format!("nbar must be >= 0, got {nbar_guess}")));
    }
    if !(eta > 0.0) || !(omega > 0.0) {
        return Err(domain("optimal_time", "eta and omega must be > 0"));
    }
    let pe_star = pe_star();
    Ok(ProbePlan {
        pe_star,
        t_star: time_for_population(pe_star, nbar_guess, eta, omega),
    })
}

/// Inverse of [`pe_reduced`] in `t`.
pub fn time_for_population(pe: f64, nbar: f64, eta: f64, omega: f64) -> f64 {
    let a = (-(1.0 - 2.0 * pe).ln() / (2.0 * (1.0 + 2.0 * nbar))).sqrt();
    2.0 * a / (eta * omega)
}

/// Bias and variance of the inversion estimator to first order in `1/N`.
pub fn estimator_moments(nbar: f64, pe: f64, n_shots: usize) -> Result<(f64, f64)> {
    if !(pe > 0.0 && pe < 0.5) {
        return Err(domain("estimator_moments", format!("pe must lie in (0, 1/2), got {pe}")));
    }
    if n_shots == 0 {
        return Err(domain("estimator_moments", "n_shots must be >= 1"));
    }
    let n = n_shots as f64;
    let u = 1.0 - 2.0 * pe;
    let l = u.ln();
    let q = pe * (1.0 - pe) / (n * u * u);
    let s = 2.0 * nbar + 1.0;
    Ok((-q * s / l, q * s * s / (l * l)))
}

/// Fisher information of the joint outcome of all ions, by enumerating the
/// `2^M` product outcomes.
pub fn multi_qubit_qfi(nbar: f64, t: f64, config: &TrapConfig) -> Result<f64> {
    let m = config.n_ions();
    if m > MAX_ENUMERATED_IONS {
        return Err(Error::Refused(format!(
            "{m} ions exceed the enumeration limit of {MAX_ENUMERATED_IONS}"
        )));
    }
    let p: Vec<f64> = config.eta.iter().map(|&e| pe_reduced(nbar, e, config.omega, t)).collect();
    let dp: Vec<f64> = config
        .eta
        .iter()
        .map(|&e| pe_reduced_derivative(nbar, e, config.omega, t))
        .collect();
    let mut total = 0.0;
    for k in 0..(1usize << m) {
        let mut prob = 1.0;
        let mut dprob_over = 0.0;
        for i in 0..m {
            let (pi, di) = if k >> i & 1 == 1 { (p[i], dp[i]) } else { (1.0 - p[i], -dp[i]) };
            prob *= pi;
            dprob_over += di / pi;
        }
        if prob > 0.0 {
            total += prob * dprob_over * dprob_over;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FisherAxis {
    Time,
    Pe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherCurve {
    pub axis: FisherAxis,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn fisher_curve_time(nbar: f64, eta: f64, omega: f64, times: &[f64]) -> FisherCurve {
    FisherCurve {
        axis: FisherAxis::Time,
        grid: times.to_vec(),
        values: times.iter().map(|&t| fisher_bichromatic(nbar, eta, omega, t)).collect(),
    }
}

pub fn fisher_curve_pe(nbar: f64, pes: &[f64]) -> Result<FisherCurve> {
    Ok(FisherCurve {
        axis: FisherAxis::Pe,
        grid: pes.to_vec(),
        values: pes.iter().map(|&p| fisher_vs_pe(nbar, p)).collect::<Result<_>>()?,
    })
}

/// `1/√(N F)`.
pub fn crb_std(fisher: f64, n_shots: usize) -> f64 {
    1.0 / (n_shots as f64 * fisher).sqrt()
}
