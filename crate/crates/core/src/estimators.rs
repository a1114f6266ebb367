//! Estimators of the mean phonon number and their uncertainties.

use serde::{Deserialize, Serialize};
use statrs::function::beta::inv_beta_reg;

use crate::analytic::{fisher_bichromatic, pe_reduced, pe_reduced_derivative};
use crate::dynamics::FockSweepLibrary;
use crate::error::{domain, Error, Result};
use crate::fock::DEFAULT_TAIL_TOL;
use crate::optim::scan_then_golden;

/// Default upper bound of the `n̄` search interval.
pub const DEFAULT_MAX_NBAR: f64 = 100.0;
/// Default F-distribution tail parameter of the sideband-fit variance.
pub const DEFAULT_BETA: f64 = 0.317;
const SEARCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    BichromaticPoint,
    Combined,
    Mle,
    SidebandFit,
}

/// Guards that fired while producing an estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    pub clipped: bool,
    pub truncation_warning: bool,
    pub boundary: bool,
}

impl Flags {
    fn union(self, other: Flags) -> Flags {
        Flags {
            clipped: self.clipped || other.clipped,
            truncation_warning: self.truncation_warning || other.truncation_warning,
            boundary: self.boundary || other.boundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// May be negative for the point estimator near the ground state.
    pub nbar_hat: f64,
    pub std: f64,
    pub method: Method,
    pub n_shots: usize,
    pub flags: Flags,
}

fn check_probe(op: &'static str, eta: f64, omega: f64, t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(op, format!("t must be > 0, got {t}")));
    }
    if !(eta > 0.0) || !(omega > 0.0) {
        return Err(domain(op, "eta and omega must be > 0"));
    }
    Ok(())
}

/// Standard deviation of the inversion estimator at population `p`,
/// `√(4p(1−p)/N) / ((1−2p)(ηΩt)²)`.
fn point_std(p: f64, n_shots: usize, x: f64) -> f64 {
    (4.0 * p * (1.0 - p) / n_shots as f64).sqrt() / ((1.0 - 2.0 * p) * x)
}

/// Invert the excited population measured at probe time `t`.
///
/// Populations within `1/(2N)` of ½ are clipped. The standard deviation is
/// the first-order propagation of binomial noise through the inversion,
/// evaluated at the (clipped) estimate; at `p̂ = 0` it is evaluated half a
/// count above zero.
pub fn estimate_point(pe_hat: f64, n_shots: usize, eta: f64, omega: f64, t: f64) -> Result<Estimate> {
    check_probe("estimate_point", eta, omega, t)?;
    if !(0.0..=1.0).contains(&pe_hat) {
        return Err(domain("estimate_point", format!("pe_hat must lie in [0, 1], got {pe_hat}")));
    }
    if n_shots == 0 {
        return Err(domain("estimate_point", "n_shots must be >= 1"));
    }
    let eps = 0.5 / n_shots as f64;
    let mut flags = Flags::default();
    let mut p = pe_hat;
    if p >= 0.5 - eps {
        p = 0.5 - eps;
        flags.clipped = true;
    }
    let x = (eta * omega * t).powi(2);
    let nbar_hat = -(-2.0 * p).ln_1p() / x - 0.5;
    let std = if p == 0.0 {
        flags.boundary = true;
        point_std(eps, n_shots, x)
    } else {
        point_std(p, n_shots, x)
    };
    Ok(Estimate {
        nbar_hat,
        std,
        method: Method::BichromaticPoint,
        n_shots,
        flags,
    })
}

/// Inverse-variance weighted mean of independent estimates.
pub fn combine_ions(estimates: &[Estimate]) -> Result<Estimate> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no estimates to combine".into()));
    }
    if let [single] = estimates {
        if !(single.std > 0.0) || !single.std.is_finite() {
            return Err(domain("combine_ions", format!("std must be finite and > 0, got {}", single.std)));
        }
        return Ok(Estimate {
            method: Method::Combined,
            ..*single
        });
    }
    let mut wsum = 0.0;
    let mut acc = 0.0;
    let mut flags = Flags::default();
    let mut shots = 0;
    for e in estimates {
        if !(e.std > 0.0) || !e.std.is_finite() {
            return Err(domain("combine_ions", format!("std must be finite and > 0, got {}", e.std)));
        }
        let w = 1.0 / (e.std * e.std);
        wsum += w;
        acc += w * e.nbar_hat;
        flags = flags.union(e.flags);
        shots += e.n_shots;
    }
    Ok(Estimate {
        nbar_hat: acc / wsum,
        std: wsum.sqrt().recip(),
        method: Method::Combined,
        n_shots: shots,
        flags,
    })
}

/// Maximum-likelihood estimate from `k` excitations in `n` shots, with the
/// population model `pe_reduced`, searched on `[0, max_nbar]`.
pub fn mle_point(k: usize, n: usize, eta: f64, omega: f64, t: f64, max_nbar: f64) -> Result<Estimate> {
    check_probe("mle_point", eta, omega, t)?;
    if n == 0 || k > n {
        return Err(domain("mle_point", format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    if !(max_nbar > 0.0) {
        return Err(domain("mle_point", "max_nbar must be > 0"));
    }
    let nf = n as f64;
    let kf = k as f64;
    let mut flags = Flags::default();
    let expected_std = |nbar: f64| (nf * fisher_bichromatic(nbar, eta, omega, t)).sqrt().recip();

    if 2 * k >= n {
        flags.boundary = true;
        return Ok(Estimate {
            nbar_hat: max_nbar,
            std: expected_std(max_nbar),
            method: Method::Mle,
            n_shots: n,
            flags,
        });
    }
    let neg_loglik = |nbar: f64| {
        let p = pe_reduced(nbar, eta, omega, t);
        let mut l = 0.0;
        if k > 0 {
            l -= kf * p.ln();
        }
        if k < n {
            l -= (nf - kf) * (-p).ln_1p();
        }
        l
    };
    let (nbar_hat, _) = scan_then_golden(neg_loglik, 0.0, max_nbar, 401, SEARCH_TOL);
    if nbar_hat <= SEARCH_TOL || nbar_hat >= max_nbar - SEARCH_TOL {
        flags.boundary = true;
    }
    let p = pe_reduced(nbar_hat, eta, omega, t);
    let d1 = pe_reduced_derivative(nbar_hat, eta, omega, t);
    let a2 = (eta * omega * t / 2.0).powi(2);
    let d2 = -4.0 * a2 * d1;
    let score_factor = kf / p - (nf - kf) / (1.0 - p);
    let observed = -(d2 * score_factor - d1 * d1 * (kf / (p * p) + (nf - kf) / ((1.0 - p) * (1.0 - p))));
    let std = if !flags.boundary && observed > 0.0 && observed.is_finite() {
        observed.sqrt().recip()
    } else {
        expected_std(nbar_hat)
    };
    Ok(Estimate {
        nbar_hat,
        std,
        method: Method::Mle,
        n_shots: n,
        flags,
    })
}

/// Measured excited populations of every ion on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub times_us: Vec<f64>,
    /// `x[i][j]`: population of ion `i` at time `j`.
    pub x: Vec<Vec<f64>>,
    /// Standard deviation of each `x[i][j]`.
    pub sigma: Vec<Vec<f64>>,
    /// Shots per point, 0 when unknown.
    pub n_shots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub beta: f64,
    pub max_nbar: f64,
    /// Grid points scanned before the golden-section refinement.
    pub scan_points: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            beta: DEFAULT_BETA,
            max_nbar: DEFAULT_MAX_NBAR,
            scan_points: 401,
        }
    }
}

/// Sideband fit result with the pieces of its variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandFit {
    pub estimate: Estimate,
    pub loss: f64,
    pub dof: usize,
    pub f_quantile: f64,
    /// `Σ (A_ij/σ_ij)²`.
    pub sensitivity: f64,
}

/// `p`-quantile of the F distribution with `(d1, d2)` degrees of freedom,
/// via the inverse regularized incomplete beta function.
pub fn f_quantile(d1: f64, d2: f64, p: f64) -> Result<f64> {
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(domain("f_quantile", "degrees of freedom must be > 0"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("f_quantile", format!("probability must lie in (0, 1), got {p}")));
    }
    let b = inv_beta_reg(d1 / 2.0, d2 / 2.0, p);
    Ok(d2 * b / (d1 * (1.0 - b)))
}

/// Library time index of every trace time.
fn align(trace: &EvolutionTrace, library: &FockSweepLibrary) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(trace.times_us.len());
    for &t in &trace.times_us {
        let idx = library
            .times_us
            .iter()
            .position(|&lt| (lt - t).abs() <= 1e-9 * lt.abs().max(1.0))
            .ok_or_else(|| domain("fit_sideband", format!("trace time {t} us is not on the library grid")))?;
        out.push(idx);
    }
    Ok(out)
}

fn check_trace(trace: &EvolutionTrace, library: &FockSweepLibrary) -> Result<()> {
    let m = library.n_ions();
    if trace.x.len() != m || trace.sigma.len() != m {
        return Err(domain(
            "fit_sideband",
            format!("trace has {} ions, library has {m}", trace.x.len()),
        ));
    }
    let nt = trace.times_us.len();
    for (xi, si) in trace.x.iter().zip(&trace.sigma) {
        if xi.len() != nt || si.len() != nt {
            return Err(domain("fit_sideband", "trace rows disagree with its time grid"));
        }
        if si.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(domain("fit_sideband", "every sigma must be finite and > 0"));
        }
    }
    if nt * m < 2 {
        return Err(Error::InsufficientData("need at least two data points".into()));
    }
    Ok(())
}

/// `loss(n̄)` of a trace against the thermal mixture of a library.
pub fn sideband_loss(trace: &EvolutionTrace, library: &FockSweepLibrary, nbar: f64) -> Result<f64> {
    check_trace(trace, library)?;
    let idx = align(trace, library)?;
    Ok(loss_at(trace, library, &idx, nbar))
}

fn loss_at(trace: &EvolutionTrace, library: &FockSweepLibrary, idx: &[usize], nbar: f64) -> f64 {
    let Ok((model, _)) = library.thermal_mixture(nbar) else {
        return f64::INFINITY;
    };
    let mut loss = 0.0;
    for (i, (xi, si)) in trace.x.iter().zip(&trace.sigma).enumerate() {
        for (j, &lj) in idx.iter().enumerate() {
            let r = (model[i][lj] - xi[j]) / si[j];
            loss += r * r;
        }
    }
    loss
}

/// Weighted least-squares fit of `n̄` to a sideband evolution trace.
pub fn fit_sideband(trace: &EvolutionTrace, library: &FockSweepLibrary, fitcfg: &FitConfig) -> Result<SidebandFit> {
    if !(fitcfg.beta > 0.0 && fitcfg.beta < 1.0) {
        return Err(domain("fit_sideband", format!("beta must lie in (0, 1), got {}", fitcfg.beta)));
    }
    check_trace(trace, library)?;
    let idx = align(trace, library)?;
    let (nbar_hat, loss) = scan_then_golden(
        |n| loss_at(trace, library, &idx, n),
        0.0,
        fitcfg.max_nbar,
        fitcfg.scan_points,
        SEARCH_TOL,
    );
    let deriv = library.thermal_mixture_derivative(nbar_hat)?;
    let mut sensitivity = 0.0;
    for (i, si) in trace.sigma.iter().enumerate() {
        for (j, &lj) in idx.iter().enumerate() {
            let a = deriv[i][lj] / si[j];
            sensitivity += a * a;
        }
    }
    if !(sensitivity > 0.0) {
        return Err(Error::DegenerateFit("the model does not depend on nbar at the data points".into()));
    }
    let points = trace.x.len() * idx.len();
    let dof = points - 1;
    let f_q = f_quantile(1.0, dof as f64, 1.0 - fitcfg.beta)?;
    let var = loss / dof as f64 * f_q / sensitivity;
    let (_, tail) = library.thermal_mixture(nbar_hat)?;
    let flags = Flags {
        clipped: false,
        truncation_warning: tail > DEFAULT_TAIL_TOL,
        boundary: nbar_hat <= SEARCH_TOL || nbar_hat >= fitcfg.max_nbar - SEARCH_TOL,
    };
    Ok(SidebandFit {
        estimate: Estimate {
            nbar_hat,
            std: var.sqrt(),
            method: Method::SidebandFit,
            n_shots: trace.n_shots * points,
            flags,
        },
        loss,
        dof,
        f_quantile: f_q,
        sensitivity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingPoint {
    pub delay_us: f64,
    pub nbar_hat: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HeatingSeries {
    pub points: Vec<HeatingPoint>,
}

/// Weighted straight-line fit `n̄(delay) = n̄₀ + rate · delay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatingFit {
    /// Phonons per μs.
    pub rate: f64,
    pub rate_std: f64,
    pub intercept: f64,
    pub intercept_std: f64,
    pub residuals: Vec<f64>,
}

/// Uncertainties come from `(XᵀWX)⁻¹` with `W = diag(1/σ²)`, without
/// rescaling by the residual scatter.
pub fn heating_rate(series: &HeatingSeries) -> Result<HeatingFit> {
    let pts = &series.points;
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a heating-rate fit needs at least 3 delays, got {}",
            pts.len()
        )));
    }
    if pts.windows(2).any(|w| !(w[1].delay_us > w[0].delay_us)) {
        return Err(domain("heating_rate", "delays must be strictly increasing"));
    }
    if pts.iter().any(|p| !(p.std > 0.0) || !p.std.is_finite() || !p.nbar_hat.is_finite()) {
        return Err(domain("heating_rate", "every point needs a finite estimate and std > 0"));
    }
    let (mut s, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in pts {
        let w = 1.0 / (p.std * p.std);
        s += w;
        sx += w * p.delay_us;
        sxx += w * p.delay_us * p.delay_us;
        sy += w * p.nbar_hat;
        sxy += w * p.delay_us * p.nbar_hat;
    }
    let det = s * sxx - sx * sx;
    let rate = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    Ok(HeatingFit {
        rate,
        rate_std: (s / det).sqrt(),
        intercept,
        intercept_std: (sxx / det).sqrt(),
        residuals: pts.iter().map(|p| p.nbar_hat - intercept - rate * p.delay_us).collect(),
    })
}
