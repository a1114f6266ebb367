//! Browser bindings for the interactive thermometry demo.
//!
//! Frequencies are given as `f` in kHz for an angular frequency `2π·f`, and
//! times in μs.

use std::f64::consts::TAU;

use ionthermo::analytic::{crb_std, fisher_bichromatic, optimal_time, pe_extended, pe_reduced};
use ionthermo::dynamics::{weak_coupling_evolution, WeakMode};
use ionthermo::estimators::{estimate_point, mle_point};
use ionthermo::fock::FockSpace;
use wasm_bindgen::prelude::*;

const TAIL_TOL: f64 = 1e-10;
const MAX_POINTS: usize = 2001;

fn domain(op: &'static str, detail: impl Into<String>) -> ionthermo::Error {
    ionthermo::Error::Domain {
        op,
        detail: detail.into(),
    }
}

fn rad_s(f_khz: f64) -> f64 {
    TAU * 1e3 * f_khz
}

fn grid_us(t_max_us: f64, points: usize) -> ionthermo::Result<Vec<f64>> {
    if !(t_max_us > 0.0) || !t_max_us.is_finite() {
        return Err(domain("grid", format!("t_max must be > 0, got {t_max_us}")));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(domain("grid", format!("points must lie in [2, {MAX_POINTS}], got {points}")));
    }
    let step = t_max_us / (points - 1) as f64;
    Ok((0..points).map(|k| k as f64 * step).collect())
}

fn check_drive(eta: f64, omega_khz: f64) -> ionthermo::Result<()> {
    if !(eta > 0.0 && eta < 1.0) || !(omega_khz > 0.0) || !omega_khz.is_finite() {
        return Err(domain("drive", format!("need 0 < eta < 1 and omega > 0, got eta={eta}, omega={omega_khz} kHz")));
    }
    Ok(())
}

fn js(e: ionthermo::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Excited population against time from the numeric displacement dynamics
/// and the two closed forms.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct PopulationCurves {
    times_us: Vec<f64>,
    numeric: Vec<f64>,
    reduced: Vec<f64>,
    extended: Vec<f64>,
}

#[wasm_bindgen]
impl PopulationCurves {
    #[wasm_bindgen(getter)]
    pub fn times_us(&self) -> Vec<f64> {
        self.times_us.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn numeric(&self) -> Vec<f64> {
        self.numeric.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn reduced(&self) -> Vec<f64> {
        self.reduced.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn extended(&self) -> Vec<f64> {
        self.extended.clone()
    }
}

pub fn compute_population_curves(
    nbar: f64,
    eta: f64,
    omega_khz: f64,
    t_max_us: f64,
    points: usize,
) -> ionthermo::Result<PopulationCurves> {
    check_drive(eta, omega_khz)?;
    let times_us = grid_us(t_max_us, points)?;
    let omega = rad_s(omega_khz);
    let times_s: Vec<f64> = times_us.iter().map(|t| t / 1e6).collect();
    let space = FockSpace::for_nbar(nbar, TAIL_TOL)?;
    let trace = weak_coupling_evolution(nbar, eta, omega, &times_s, WeakMode::Displacement, Some(space))?;
    Ok(PopulationCurves {
        numeric: trace.pe,
        reduced: times_s.iter().map(|&t| pe_reduced(nbar, eta, omega, t)).collect(),
        extended: times_s.iter().map(|&t| pe_extended(nbar, eta, omega, t)).collect(),
        times_us,
    })
}

#[wasm_bindgen(js_name = populationCurves)]
pub fn population_curves(nbar: f64, eta: f64, omega_khz: f64, t_max_us: f64, points: usize) -> Result<PopulationCurves, JsError> {
    compute_population_curves(nbar, eta, omega_khz, t_max_us, points).map_err(js)
}

/// Per-shot Fisher information against probe time, the Cramér-Rao bound
/// for `n_shots` repetitions and the optimal probe point.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct FisherView {
    times_us: Vec<f64>,
    fisher: Vec<f64>,
    crb: Vec<f64>,
    t_star_us: f64,
    pe_star: f64,
    crb_at_optimum: f64,
}

#[wasm_bindgen]
impl FisherView {
    #[wasm_bindgen(getter)]
    pub fn times_us(&self) -> Vec<f64> {
        self.times_us.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn fisher(&self) -> Vec<f64> {
        self.fisher.clone()
    }
    /// `n̄` standard deviation bound; infinite where the information vanishes.
    #[wasm_bindgen(getter)]
    pub fn crb(&self) -> Vec<f64> {
        self.crb.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn t_star_us(&self) -> f64 {
        self.t_star_us
    }
    #[wasm_bindgen(getter)]
    pub fn pe_star(&self) -> f64 {
        self.pe_star
    }
    #[wasm_bindgen(getter)]
    pub fn crb_at_optimum(&self) -> f64 {
        self.crb_at_optimum
    }
}

pub fn compute_fisher(
    nbar: f64,
    eta: f64,
    omega_khz: f64,
    t_max_us: f64,
    points: usize,
    n_shots: usize,
) -> ionthermo::Result<FisherView> {
    check_drive(eta, omega_khz)?;
    if n_shots == 0 {
        return Err(domain("fisher", "n_shots must be >= 1"));
    }
    let times_us = grid_us(t_max_us, points)?;
    let omega = rad_s(omega_khz);
    let plan = optimal_time(nbar, eta, omega)?;
    let fisher: Vec<f64> = times_us
        .iter()
        .map(|&t| fisher_bichromatic(nbar, eta, omega, t / 1e6))
        .collect();
    Ok(FisherView {
        crb: fisher.iter().map(|&f| crb_std(f, n_shots)).collect(),
        crb_at_optimum: crb_std(fisher_bichromatic(nbar, eta, omega, plan.t_star), n_shots),
        t_star_us: plan.t_star * 1e6,
        pe_star: plan.pe_star,
        times_us,
        fisher,
    })
}

#[wasm_bindgen(js_name = fisherCurve)]
pub fn fisher_curve(nbar: f64, eta: f64, omega_khz: f64, t_max_us: f64, points: usize, n_shots: usize) -> Result<FisherView, JsError> {
    compute_fisher(nbar, eta, omega_khz, t_max_us, points, n_shots).map_err(js)
}

/// Point and maximum-likelihood estimates from `k` excitations in `n` shots.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy)]
pub struct EstimateView {
    pub point_nbar: f64,
    pub point_std: f64,
    pub point_clipped: bool,
    pub mle_nbar: f64,
    pub mle_std: f64,
    pub mle_boundary: bool,
}

pub fn compute_estimate(
    k: usize,
    n: usize,
    eta: f64,
    omega_khz: f64,
    t_us: f64,
    max_nbar: f64,
) -> ionthermo::Result<EstimateView> {
    check_drive(eta, omega_khz)?;
    if n == 0 || k > n {
        return Err(domain("estimate", format!("need 0 <= k <= n and n >= 1, got k={k}, n={n}")));
    }
    let omega = rad_s(omega_khz);
    let t = t_us / 1e6;
    let point = estimate_point(k as f64 / n as f64, n, eta, omega, t)?;
    let mle = mle_point(k, n, eta, omega, t, max_nbar)?;
    Ok(EstimateView {
        point_nbar: point.nbar_hat,
        point_std: point.std,
        point_clipped: point.flags.clipped,
        mle_nbar: mle.nbar_hat,
        mle_std: mle.std,
        mle_boundary: mle.flags.boundary,
    })
}

#[wasm_bindgen]
pub fn estimate(k: usize, n: usize, eta: f64, omega_khz: f64, t_us: f64, max_nbar: f64) -> Result<EstimateView, JsError> {
    compute_estimate(k, n, eta, omega_khz, t_us, max_nbar).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_form_tracks_the_numeric_curve() {
        let c = compute_population_curves(1.0, 0.1, 20.0, 200.0, 51).unwrap();
        assert_eq!(c.times_us.len(), 51);
        assert_eq!(c.numeric[0], 0.0);
        for (a, b) in c.numeric.iter().zip(&c.reduced) {
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
        assert!(c.extended.iter().zip(&c.reduced).any(|(a, b)| a != b));
    }

    #[test]
    fn fisher_peaks_at_the_planned_time() {
        let f = compute_fisher(1.0, 0.1, 20.0, 200.0, 2001, 100).unwrap();
        let (j, _) = f
            .fisher
            .iter()
            .enumerate()
            .fold((0, 0.0), |best, (j, &v)| if v > best.1 { (j, v) } else { best });
        assert!((f.times_us[j] - f.t_star_us).abs() <= 0.1);
        assert!((f.pe_star - 0.27461817).abs() < 1e-7);
        assert!(f.crb[0].is_infinite());
        assert!(f.crb_at_optimum <= f.crb.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-12);
    }

    #[test]
    fn estimates_invert_the_population() {
        let t = optimal_time(2.0, 0.1, rad_s(20.0)).unwrap().t_star;
        let n = 10_000;
        let k = (pe_reduced(2.0, 0.1, rad_s(20.0), t) * n as f64).round() as usize;
        let e = compute_estimate(k, n, 0.1, 20.0, t * 1e6, 50.0).unwrap();
        assert!((e.point_nbar - 2.0).abs() < 2.0 * e.point_std);
        assert!((e.mle_nbar - e.point_nbar).abs() < 1e-3);
        assert!(!e.point_clipped && !e.mle_boundary);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(compute_population_curves(1.0, 0.1, 20.0, 200.0, 1).is_err());
        assert!(compute_fisher(1.0, 0.0, 20.0, 200.0, 10, 100).is_err());
        assert!(compute_estimate(5, 4, 0.1, 20.0, 50.0, 10.0).is_err());
        assert!(compute_estimate(1, 4, 0.1, 20.0, 0.0, 10.0).is_err());
    }
}
