use serde::{Deserialize, Serialize};

use super::floquet::{DriveTerm, PeriodicGenerator};
use super::{qubit_excited_projector, qubit_raising, qubit_sigma_x, TrapConfig, MAX_JOINT_DIM};
use crate::error::{Error, Result};
use crate::fock::{build_lamb_dicke_ops, displacement_matrix, quadrature, FockSpace};
use crate::linalg::{identity, kron, to_complex, CMatrix};
use crate::Complex;

/// Interaction used for weak-coupling propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeakMode {
    /// `(ηΩ/2) σ_x (â + â†)`
    Displacement,
    /// `(Ω/2) σ_x (M̂ + M̂†)`
    Sideband,
}

/// Place `qubit_op` on ion `ion` of `n_ions` and tensor with `phonon_op`.
pub fn embed(ion: usize, n_ions: usize, qubit_op: &CMatrix, phonon_op: &CMatrix) -> CMatrix {
    let hi = identity(1 << (n_ions - 1 - ion));
    let lo = identity(1 << ion);
    kron(&kron(&kron(&hi, qubit_op), &lo), phonon_op)
}

/// Red and blue tones on ion `ion` as Fourier terms on its own qubit ⊗
/// phonon space: a static detuning, the carrier at `±Δ_i` and the
/// sideband pair at `±(ν − Δ_i)`.
pub fn bichromatic_generator(config: &TrapConfig, ion: usize) -> Result<PeriodicGenerator> {
    config.validate()?;
    drive_terms(config, ion)
}

fn drive_terms(config: &TrapConfig, ion: usize) -> Result<PeriodicGenerator> {
    let space = config.fock;
    let ops = build_lamb_dicke_ops(config.eta[ion], space.n_max())?;
    let carrier = to_complex(&ops.carrier());
    let m = to_complex(&ops.sideband());
    let md = m.adjoint();
    let sx = qubit_sigma_x();
    let half = Complex::new(config.omega / 2.0, 0.0);
    let phonon_id = identity(space.dim());

    let delta = config.delta_laser[ion];
    let side = config.nu - delta;
    let static_part = kron(&qubit_excited_projector(), &phonon_id) * Complex::new(-config.delta_zeeman[ion], 0.0);
    let carrier_op = kron(&sx, &carrier) * half;
    let terms = vec![
        DriveTerm::new(0.0, static_part),
        DriveTerm::new(delta, carrier_op.clone()),
        DriveTerm::new(-delta, carrier_op),
        DriveTerm::new(side, kron(&sx, &m) * half),
        DriveTerm::new(-side, kron(&sx, &md) * half),
    ];
    Ok(PeriodicGenerator::new(2 * space.dim(), terms))
}

/// Per-ion bichromatic Hamiltonians `h_i(t)`.
pub fn build_bichromatic_hamiltonian(config: &TrapConfig, t: f64) -> Result<Vec<CMatrix>> {
    (0..config.n_ions())
        .map(|i| bichromatic_generator(config, i).map(|g| g.at(t)))
        .collect()
}

/// Time-independent fitting Hamiltonian on the joint space of all ions:
/// `ν â†â − Σ_i Δ_i |e⟩_i⟨e| + Σ_i (Ω/2)(|e⟩_i⟨g| e^{iη_i(â+â†)} + h.c.)`.
pub fn build_fit_hamiltonian(config: &TrapConfig) -> Result<CMatrix> {
    config.validate()?;
    let dim = config.joint_dim();
    if dim > MAX_JOINT_DIM {
        return Err(Error::Refused(format!(
            "joint dimension {dim} exceeds {MAX_JOINT_DIM}"
        )));
    }
    let space = config.fock;
    let m = config.n_ions();
    let number = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(space.dim(), |n, _| {
        Complex::new(n as f64, 0.0)
    }));
    let mut h = kron(&identity(1 << m), &number) * Complex::new(config.nu, 0.0);
    let phonon_id = identity(space.dim());
    let raise = qubit_raising();
    for i in 0..m {
        h -= embed(i, m, &qubit_excited_projector(), &phonon_id)
            * Complex::new(config.delta_laser[i], 0.0);
        let disp = displacement_matrix(config.eta[i], space);
        let coupling = embed(i, m, &raise, &disp) * Complex::new(config.omega / 2.0, 0.0);
        h += &coupling + coupling.adjoint();
    }
    Ok(h)
}

/// Single-ion weak-coupling interaction on qubit ⊗ phonon.
pub fn weak_hamiltonian(eta: f64, omega: f64, space: FockSpace, mode: WeakMode) -> Result<CMatrix> {
    crate::fock::check_eta("weak_hamiltonian", eta)?;
    let sx = qubit_sigma_x();
    let h = match mode {
        WeakMode::Displacement => {
            kron(&sx, &to_complex(&quadrature(space))) * Complex::new(eta * omega / 2.0, 0.0)
        }
        WeakMode::Sideband => {
            let m = build_lamb_dicke_ops(eta, space.n_max())?.sideband();
            let b = &m + m.transpose();
            kron(&sx, &to_complex(&b)) * Complex::new(omega / 2.0, 0.0)
        }
    };
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm_hermitian, hermiticity_defect, max_abs_diff};

    const NU: f64 = 2.0 * std::f64::consts::PI * 1.0e6;

    fn cfg(omega: f64, eta: f64, n_max: usize) -> TrapConfig {
        TrapConfig::resonant(omega, NU, vec![eta], FockSpace::new(n_max).unwrap())
    }

    #[test]
    fn coupling_off_leaves_detuning() {
        let mut c = cfg(0.0, 0.1, 6);
        c.delta_zeeman = vec![2.5e3];
        let h = drive_terms(&c, 0).unwrap().at(0.3e-6);
        let expect = kron(&qubit_excited_projector(), &identity(7)) * Complex::new(-2.5e3, 0.0);
        assert!(max_abs_diff(&h, &expect) < 1e-12);
    }

    #[test]
    fn bichromatic_is_hermitian() {
        let mut c = cfg(2.0 * std::f64::consts::PI * 50e3, 0.1, 15);
        c.delta_laser = vec![0.93 * NU];
        c.delta_zeeman = vec![1e3];
        let h = build_bichromatic_hamiltonian(&c, 0.37 / NU).unwrap().remove(0);
        assert!(hermiticity_defect(&h) <= 1e-14 * c.omega);
    }

    #[test]
    fn resonant_period_average_is_sideband_term() {
        // With Δ = ν the sideband terms are static; averaging over one period
        // removes the carrier and leaves (Ω/2) σ_x (M + M†).
        let omega = 2.0 * std::f64::consts::PI * 20e3;
        let c = cfg(omega, 0.1, 10);
        let steps = 64;
        let period = 2.0 * std::f64::consts::PI / NU;
        let mut avg = CMatrix::zeros(22, 22);
        for k in 0..steps {
            let t = period * k as f64 / steps as f64;
            avg += build_bichromatic_hamiltonian(&c, t).unwrap().remove(0);
        }
        avg /= Complex::new(steps as f64, 0.0);
        let expect = weak_hamiltonian(0.1, omega, c.fock, WeakMode::Sideband).unwrap();
        assert!(max_abs_diff(&avg, &expect) < 1e-9 * omega);
    }

    #[test]
    fn fit_hamiltonian_diagonal_readoff() {
        let mut c = cfg(2.0 * std::f64::consts::PI * 40e3, 0.1, 8);
        c.delta_laser = vec![0.99 * NU];
        let h = build_fit_hamiltonian(&c).unwrap();
        let f = 9;
        assert!(h[(0, 0)].norm() < 1e-9);
        assert!((h[(f, f)].re + 0.99 * NU).abs() < 1e-6);
        assert!((h[(3, 3)].re - 3.0 * NU).abs() < 1e-6);
        assert!(hermiticity_defect(&h) < 1e-6);
    }

    #[test]
    fn fit_hamiltonian_zero_lamb_dicke_limit() {
        let omega = 2.0 * std::f64::consts::PI * 40e3;
        let mut c = cfg(omega, 1e-12, 6);
        c.delta_laser = vec![0.0];
        let h = build_fit_hamiltonian(&c).unwrap();
        let number = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(7, |n, _| Complex::new(n as f64, 0.0)));
        let expect = kron(&identity(2), &number) * Complex::new(NU, 0.0)
            + kron(&qubit_sigma_x(), &identity(7)) * Complex::new(omega / 2.0, 0.0);
        assert!(max_abs_diff(&h, &expect) < 1e-6);
    }

    #[test]
    fn displacement_elements_match_matrix_exponential() {
        let eta = 0.1;
        // expm of the quadrature on a larger space converges on the low block
        let big = FockSpace::new(80).unwrap();
        let x = to_complex(&quadrature(big));
        let u = expm_hermitian(&x, -eta);
        let d = displacement_matrix(eta, FockSpace::new(30).unwrap());
        let mut worst = 0.0f64;
        for r in 0..=30 {
            for c in 0..=30 {
                worst = worst.max((u[(r, c)] - d[(r, c)]).norm());
            }
        }
        assert!(worst < 1e-10, "{worst}");
        // columns far from the cutoff are orthonormal
        let g = d.adjoint() * &d;
        for r in 0..=15 {
            for c in 0..=15 {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((g[(r, c)] - Complex::new(target, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn embed_places_ion_bits() {
        let proj = qubit_excited_projector();
        let id = identity(2);
        let e1 = embed(1, 2, &proj, &id);
        // ion 1 excited <=> bit 1 of q
        for q in 0..4 {
            for n in 0..2 {
                let idx = q * 2 + n;
                let expect = if q >> 1 & 1 == 1 { 1.0 } else { 0.0 };
                assert_eq!(e1[(idx, idx)].re, expect);
            }
        }
    }
}
