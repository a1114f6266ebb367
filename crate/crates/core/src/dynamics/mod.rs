//! Hamiltonians and time evolution of ions coupled to one motional mode.
//!
//! All angular frequencies are in rad/s and all times in seconds.
//! Multi-ion operators act on `qubit_{M-1} ⊗ … ⊗ qubit_0 ⊗ phonon`, so the
//! basis index of `|q⟩|n⟩` is `q · (n_max + 1) + n` with bit `i` of `q` set
//! when ion `i` is excited.

mod floquet;
mod hamiltonian;
mod propagate;
mod sweep;

pub use floquet::{
    stroboscopic_evolution, stroboscopic_exact, vanvleck_components, vanvleck_effective,
    DriveTerm, EffectiveEvolution, FourierComponents, PeriodicGenerator, StroboscopicTrace,
};
pub use hamiltonian::{
    bichromatic_generator, build_bichromatic_hamiltonian, build_fit_hamiltonian, embed,
    weak_hamiltonian, WeakMode,
};
pub use propagate::{
    propagate, propagate_unitary, propagate_with, weak_coupling_evolution, Generator,
    Propagation, StepControl, TimeDependent, WeakTrace,
};
pub use sweep::{fock_sweep, weak_sweep, FockSweepLibrary, LibraryModel, SWEEP_MARGIN};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fock::FockSpace;
use crate::linalg::{CMatrix, Ensemble};
use crate::Complex;

/// Largest joint qubit-phonon dimension any multi-ion operator may reach.
pub const MAX_JOINT_DIM: usize = 4096;

/// Physical parameters of the driven ion chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Carrier Rabi frequency Ω.
    pub omega: f64,
    /// Motional mode frequency ν.
    pub nu: f64,
    /// Laser detuning Δ_i from the carrier, per ion.
    pub delta_laser: Vec<f64>,
    /// Qubit frequency offset δ_i, per ion.
    pub delta_zeeman: Vec<f64>,
    /// Lamb-Dicke parameter η_i, per ion.
    pub eta: Vec<f64>,
    pub fock: FockSpace,
}

impl TrapConfig {
    /// Ions driven on the first sideband (`Δ_i = ν`) with `δ_i = 0`.
    pub fn resonant(omega: f64, nu: f64, eta: Vec<f64>, fock: FockSpace) -> Self {
        let m = eta.len();
        Self {
            omega,
            nu,
            delta_laser: vec![nu; m],
            delta_zeeman: vec![0.0; m],
            eta,
            fock,
        }
    }

    pub fn n_ions(&self) -> usize {
        self.eta.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.eta.len();
        if m == 0 {
            return Err(domain("TrapConfig", "at least one ion is required"));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(domain("TrapConfig", format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(domain("TrapConfig", format!("nu must be > 0, got {}", self.nu)));
        }
        if self.delta_laser.len() != m || self.delta_zeeman.len() != m {
            return Err(domain(
                "TrapConfig",
                format!(
                    "per-ion vectors disagree: eta {m}, delta_laser {}, delta_zeeman {}",
                    self.delta_laser.len(),
                    self.delta_zeeman.len()
                ),
            ));
        }
        for &e in &self.eta {
            crate::fock::check_eta("TrapConfig", e)?;
        }
        if self
            .delta_laser
            .iter()
            .chain(&self.delta_zeeman)
            .any(|v| !v.is_finite())
        {
            return Err(domain("TrapConfig", "detunings must be finite"));
        }
        Ok(())
    }

    /// The single-ion configuration of ion `i`.
    pub fn ion(&self, i: usize) -> TrapConfig {
        Self {
            omega: self.omega,
            nu: self.nu,
            delta_laser: vec![self.delta_laser[i]],
            delta_zeeman: vec![self.delta_zeeman[i]],
            eta: vec![self.eta[i]],
            fock: self.fock,
        }
    }

    pub fn with_fock(mut self, fock: FockSpace) -> Self {
        self.fock = fock;
        self
    }

    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.delta_laser = vec![delta; self.n_ions()];
        self
    }

    /// Joint dimension `2^M (n_max + 1)`.
    pub fn joint_dim(&self) -> usize {
        (1usize << self.n_ions()) * self.fock.dim()
    }
}

/// `|g⟩⟨g|^{⊗M} ⊗ ρ_thermal` as a weighted ensemble of `|g…g⟩|n⟩` kets.
pub fn ground_thermal_ensemble(probs: &[f64], n_ions: usize) -> Ensemble {
    let fock_dim = probs.len();
    let dim = (1usize << n_ions) * fock_dim;
    Ensemble::diagonal(dim, probs.iter().copied().enumerate())
}

/// Excited-state population of every ion for an ensemble on the joint space.
pub fn excited_populations(state: &Ensemble, n_ions: usize, fock_dim: usize) -> Vec<f64> {
    let pops = state.populations();
    excited_from_populations(&pops, n_ions, fock_dim)
}

pub(crate) fn excited_from_populations(pops: &[f64], n_ions: usize, fock_dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_ions];
    for (idx, p) in pops.iter().enumerate() {
        let q = idx / fock_dim;
        for (i, slot) in out.iter_mut().enumerate() {
            if q >> i & 1 == 1 {
                *slot += p;
            }
        }
    }
    out
}

/// Reduced single-qubit density matrix of a one-ion state, ordered `(g, e)`.
pub fn reduced_qubit(state: &Ensemble, fock_dim: usize) -> [[Complex; 2]; 2] {
    let mut rho = [[Complex::new(0.0, 0.0); 2]; 2];
    for (k, w) in state.weights.iter().enumerate() {
        for n in 0..fock_dim {
            let amp = [state.kets[(n, k)], state.kets[(fock_dim + n, k)]];
            for a in 0..2 {
                for b in 0..2 {
                    rho[a][b] += amp[a] * amp[b].conj() * *w;
                }
            }
        }
    }
    rho
}

pub(crate) fn qubit_sigma_x() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(0, 1)] = Complex::new(1.0, 0.0);
    s[(1, 0)] = Complex::new(1.0, 0.0);
    s
}

pub(crate) fn qubit_excited_projector() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(1, 1)] = Complex::new(1.0, 0.0);
    s
}

/// `|e⟩⟨g|`
pub(crate) fn qubit_raising() -> CMatrix {
    let mut s = CMatrix::zeros(2, 2);
    s[(1, 0)] = Complex::new(1.0, 0.0);
    s
}
