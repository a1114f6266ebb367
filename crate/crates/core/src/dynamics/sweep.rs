use serde::{Deserialize, Serialize};

use super::hamiltonian::{build_fit_hamiltonian, weak_hamiltonian, WeakMode};
use super::{excited_from_populations, TrapConfig};
use crate::error::{domain, Error, Result};
use crate::fock::{thermal_prob_derivs, thermal_probs};
use crate::linalg::{CMatrix, Spectrum};
use crate::Complex;

/// Levels above the largest swept Fock state that must exist in the basis.
pub const SWEEP_MARGIN: usize = 15;

/// Hamiltonian a library was generated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibraryModel {
    #[default]
    FitHamiltonian,
    WeakSideband,
    WeakDisplacement,
}

/// Excited populations `p[n][i][j]` of ion `i` at time `j` for the initial
/// state `|g…g⟩|n⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockSweepLibrary {
    pub config: TrapConfig,
    #[serde(default)]
    pub model: LibraryModel,
    pub times_us: Vec<f64>,
    pub p: Vec<Vec<Vec<f64>>>,
}

impl FockSweepLibrary {
    pub fn n_sweep(&self) -> usize {
        self.p.len().saturating_sub(1)
    }

    pub fn n_ions(&self) -> usize {
        self.p.first().map_or(0, |v| v.len())
    }

    pub fn times_s(&self) -> Vec<f64> {
        self.times_us.iter().map(|t| t / 1e6).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let lib: Self = serde_json::from_str(text)?;
        lib.validate()?;
        Ok(lib)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(domain("FockSweepLibrary", msg));
        if self.p.is_empty() {
            return bad("no Fock states".into());
        }
        if self.times_us.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("times must be strictly ascending".into());
        }
        let m = self.config.n_ions();
        for (n, per_ion) in self.p.iter().enumerate() {
            if per_ion.len() != m {
                return bad(format!("state {n} has {} ions, config has {m}", per_ion.len()));
            }
            for (i, trace) in per_ion.iter().enumerate() {
                if trace.len() != self.times_us.len() {
                    return bad(format!("state {n} ion {i} has {} samples", trace.len()));
                }
                if trace.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
                    return bad(format!("state {n} ion {i} has a population outside [0, 1]"));
                }
            }
        }
        Ok(())
    }

    /// `Σ_n P_th(n) p[n][i][j]` over the swept states, together with the
    /// thermal weight not covered by the sweep.
    pub fn thermal_mixture(&self, nbar: f64) -> Result<(Vec<Vec<f64>>, f64)> {
        let th = thermal_probs(nbar, self.n_sweep())?;
        Ok((self.weighted(&th.probs), th.tail_deficit))
    }

    /// Derivative of [`thermal_mixture`](Self::thermal_mixture) in `nbar`.
    pub fn thermal_mixture_derivative(&self, nbar: f64) -> Result<Vec<Vec<f64>>> {
        thermal_probs(nbar, self.n_sweep())?;
        Ok(self.weighted(&thermal_prob_derivs(nbar, self.n_sweep())))
    }

    fn weighted(&self, w: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.times_us.len()]; self.n_ions()];
        for (wn, per_ion) in w.iter().zip(&self.p) {
            for (acc, trace) in out.iter_mut().zip(per_ion) {
                for (a, v) in acc.iter_mut().zip(trace) {
                    *a += wn * v;
                }
            }
        }
        out
    }
}

fn check_sweep(config: &TrapConfig, n_sweep: usize, times: &[f64]) -> Result<()> {
    config.validate()?;
    let n_max = config.fock.n_max();
    if n_max < n_sweep + SWEEP_MARGIN {
        return Err(Error::Refused(format!(
            "n_max = {n_max} leaves fewer than {SWEEP_MARGIN} levels above n_sweep = {n_sweep}"
        )));
    }
    if times.is_empty() || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(domain("fock_sweep", "times must be non-empty, finite and >= 0"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("fock_sweep", "times must be strictly ascending"));
    }
    Ok(())
}

/// Evolve every `|q=0⟩|n⟩`, `n ≤ n_sweep`, under `h` and return
/// `out[n][i][j]`.
fn sweep_static(h: &CMatrix, n_ions: usize, fock_dim: usize, n_sweep: usize, times: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let dim = h.nrows();
    let spec = Spectrum::new(h);
    let starts = CMatrix::from_fn(dim, n_sweep + 1, |r, c| {
        Complex::new(if r == c { 1.0 } else { 0.0 }, 0.0)
    });
    let coeffs = spec.to_eigenbasis(&starts);
    // per time: [n][i]
    let per_time: Vec<Vec<Vec<f64>>> = crate::par::map_indices(times.len(), |j| {
        let kets = if times[j] == 0.0 {
            starts.clone()
        } else {
            spec.evolve_coefficients(&coeffs, times[j])
        };
        (0..=n_sweep)
            .map(|n| {
                let pops: Vec<f64> = kets.column(n).iter().map(|z| z.norm_sqr()).collect();
                excited_from_populations(&pops, n_ions, fock_dim)
                    .into_iter()
                    .map(|v| v.clamp(0.0, 1.0))
                    .collect()
            })
            .collect()
    });
    (0..=n_sweep)
        .map(|n| {
            (0..n_ions)
                .map(|i| per_time.iter().map(|row| row[n][i]).collect())
                .collect()
        })
        .collect()
}

/// Library of the time-independent fitting Hamiltonian on the joint space.
pub fn fock_sweep(config: &TrapConfig, n_sweep: usize, times: &[f64]) -> Result<FockSweepLibrary> {
    check_sweep(config, n_sweep, times)?;
    let h = build_fit_hamiltonian(config)?;
    let p = sweep_static(&h, config.n_ions(), config.fock.dim(), n_sweep, times);
    Ok(FockSweepLibrary {
        config: config.clone(),
        model: LibraryModel::FitHamiltonian,
        times_us: times.iter().map(|t| t * 1e6).collect(),
        p,
    })
}

/// Library of the single-ion weak-coupling interaction, one ion at a time.
pub fn weak_sweep(config: &TrapConfig, n_sweep: usize, times: &[f64], mode: WeakMode) -> Result<FockSweepLibrary> {
    check_sweep(config, n_sweep, times)?;
    let mut p = vec![Vec::with_capacity(config.n_ions()); n_sweep + 1];
    for &eta in &config.eta {
        let h = weak_hamiltonian(eta, config.omega, config.fock, mode)?;
        let single = sweep_static(&h, 1, config.fock.dim(), n_sweep, times);
        for (slot, mut traces) in p.iter_mut().zip(single) {
            slot.push(traces.remove(0));
        }
    }
    Ok(FockSweepLibrary {
        config: config.clone(),
        model: match mode {
            WeakMode::Sideband => LibraryModel::WeakSideband,
            WeakMode::Displacement => LibraryModel::WeakDisplacement,
        },
        times_us: times.iter().map(|t| t * 1e6).collect(),
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{ground_thermal_ensemble, propagate, weak_coupling_evolution, Generator};
    use crate::fock::FockSpace;
    use std::f64::consts::TAU;

    const NU: f64 = TAU * 1.0e6;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn blue_sideband_ground_state_rabi() {
        let omega = TAU * 20e3;
        let eta: f64 = 0.1;
        let cfg = TrapConfig::resonant(omega, NU, vec![eta], FockSpace::new(20).unwrap());
        let times = grid(30, 5e-6);
        let lib = fock_sweep(&cfg, 3, &times).unwrap();
        let rate = eta * omega * (-eta * eta / 2.0).exp();
        for (j, t) in times.iter().enumerate() {
            let expect = (rate * t / 2.0).sin().powi(2);
            assert!((lib.p[0][0][j] - expect).abs() < 5e-3, "t {t}: {} vs {expect}", lib.p[0][0][j]);
        }
    }

    #[test]
    fn populations_bounded_and_start_at_zero() {
        let cfg = TrapConfig::resonant(TAU * 40e3, NU, vec![0.1, 0.08], FockSpace::new(20).unwrap());
        let lib = fock_sweep(&cfg, 5, &grid(12, 7e-6)).unwrap();
        for per_ion in &lib.p {
            for trace in per_ion {
                assert_eq!(trace[0], 0.0);
                assert!(trace.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn refuses_without_margin() {
        let cfg = TrapConfig::resonant(TAU * 40e3, NU, vec![0.1], FockSpace::new(20).unwrap());
        assert!(matches!(fock_sweep(&cfg, 6, &[0.0, 1e-6]), Err(Error::Refused(_))));
    }

    #[test]
    fn thermal_mixture_matches_direct_propagation() {
        let nbar = 0.8;
        let n_sweep = 25;
        let space = FockSpace::new(n_sweep + SWEEP_MARGIN).unwrap();
        let cfg = TrapConfig::resonant(TAU * 30e3, NU, vec![0.1], space);
        let times = grid(8, 9e-6);
        let lib = fock_sweep(&cfg, n_sweep, &times).unwrap();
        let (mix, _) = lib.thermal_mixture(nbar).unwrap();

        // thermal weights restricted to the swept states
        let th = thermal_probs(nbar, n_sweep).unwrap();
        let mut probs = th.probs.clone();
        probs.resize(space.dim(), 0.0);
        let h = build_fit_hamiltonian(&cfg).unwrap();
        let direct = propagate(Generator::Static(&h), &ground_thermal_ensemble(&probs, 1), &times).unwrap();
        for j in 0..times.len() {
            let pe = direct.excited(j, 1, space.dim())[0];
            assert!((pe - mix[0][j]).abs() < 1e-8);
        }
    }

    #[test]
    fn weak_library_mixture_matches_weak_evolution() {
        let n_sweep = 40;
        let space = FockSpace::new(n_sweep + SWEEP_MARGIN).unwrap();
        let cfg = TrapConfig::resonant(TAU * 50e3, NU, vec![0.1], space);
        let times = grid(10, 10e-6);
        let lib = weak_sweep(&cfg, n_sweep, &times, WeakMode::Sideband).unwrap();
        let (mix, tail) = lib.thermal_mixture(1.0).unwrap();
        assert!(tail < 1e-10);
        let tr = weak_coupling_evolution(1.0, 0.1, cfg.omega, &times, WeakMode::Sideband, Some(space)).unwrap();
        for j in 0..times.len() {
            assert!((tr.pe[j] - mix[0][j]).abs() < 1e-9);
        }
    }

    #[test]
    fn mixture_derivative_matches_finite_difference() {
        let space = FockSpace::new(45).unwrap();
        let cfg = TrapConfig::resonant(TAU * 50e3, NU, vec![0.1], space);
        let lib = weak_sweep(&cfg, 30, &grid(6, 15e-6), WeakMode::Sideband).unwrap();
        let nbar: f64 = 1.3;
        let h = 1e-6 * nbar.max(1.0);
        let up = lib.thermal_mixture(nbar + h).unwrap().0;
        let dn = lib.thermal_mixture(nbar - h).unwrap().0;
        let d = lib.thermal_mixture_derivative(nbar).unwrap();
        for j in 0..6 {
            let fd = (up[0][j] - dn[0][j]) / (2.0 * h);
            assert!((fd - d[0][j]).abs() < 1e-7);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let cfg = TrapConfig::resonant(TAU * 50e3, NU, vec![0.1, 0.07], FockSpace::new(20).unwrap());
        let lib = weak_sweep(&cfg, 5, &grid(7, 3.3e-6), WeakMode::Sideband).unwrap();
        let text = lib.to_json().unwrap();
        let back = FockSweepLibrary::from_json(&text).unwrap();
        assert_eq!(back, lib);
        for (a, b) in back.p.iter().flatten().flatten().zip(lib.p.iter().flatten().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["config", "times_us", "p"] {
            assert!(v.get(key).is_some());
        }
    }

    #[test]
    fn rejects_malformed_library() {
        let cfg = TrapConfig::resonant(TAU * 50e3, NU, vec![0.1], FockSpace::new(20).unwrap());
        let mut lib = weak_sweep(&cfg, 2, &grid(3, 1e-6), WeakMode::Sideband).unwrap();
        lib.times_us.swap(0, 1);
        assert!(FockSweepLibrary::from_json(&lib.to_json().unwrap()).is_err());
    }
}
