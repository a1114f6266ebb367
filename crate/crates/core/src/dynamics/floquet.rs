use std::collections::BTreeMap;

use super::hamiltonian::bichromatic_generator;
use super::propagate::{propagate_unitary, StepControl, TimeDependent};
use super::{ground_thermal_ensemble, TrapConfig};
use crate::error::{domain, Error, Result};
use crate::fock::ThermalState;
use crate::linalg::{commutator, CMatrix, Ensemble, Spectrum};
use crate::Complex;

/// One Fourier term `C e^{-iωt}` of a periodic Hamiltonian.
#[derive(Debug, Clone)]
pub struct DriveTerm {
    pub freq: f64,
    pub op: CMatrix,
}

impl DriveTerm {
    pub fn new(freq: f64, op: CMatrix) -> Self {
        Self { freq, op }
    }
}

/// `H(t) = Σ_j C_j e^{-iω_j t}` with a known, finite set of frequencies.
///
/// Hermiticity of `H(t)` requires every term to come with its `(-ω, C†)`
/// partner; constructors in this crate always add both.
#[derive(Debug, Clone)]
pub struct PeriodicGenerator {
    dim: usize,
    terms: Vec<DriveTerm>,
}

impl PeriodicGenerator {
    pub fn new(dim: usize, terms: Vec<DriveTerm>) -> Self {
        for t in &terms {
            assert_eq!(t.op.shape(), (dim, dim), "drive term has the wrong shape");
        }
        Self { dim, terms }
    }

    pub fn terms(&self) -> &[DriveTerm] {
        &self.terms
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for term in &self.terms {
            h += &term.op * Complex::from_polar(1.0, -term.freq * t);
        }
        h
    }
}

impl TimeDependent for PeriodicGenerator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> CMatrix {
        PeriodicGenerator::at(self, t)
    }

    fn step_hint(&self) -> Option<f64> {
        let fastest = self.terms.iter().map(|t| t.freq.abs()).fold(0.0, f64::max);
        (fastest > 0.0).then(|| std::f64::consts::TAU / fastest / 16.0)
    }
}

/// Harmonics of a periodic operator, `X(t) = Σ_n X_n e^{-inωt}`.
#[derive(Debug, Clone)]
pub struct FourierComponents {
    pub omega: f64,
    pub dim: usize,
    pub harmonics: BTreeMap<i64, CMatrix>,
}

impl FourierComponents {
    /// `X_n`, zero when absent.
    pub fn get(&self, n: i64) -> CMatrix {
        self.harmonics
            .get(&n)
            .cloned()
            .unwrap_or_else(|| CMatrix::zeros(self.dim, self.dim))
    }

    pub fn at(&self, t: f64) -> CMatrix {
        let mut x = CMatrix::zeros(self.dim, self.dim);
        for (n, op) in &self.harmonics {
            x += op * Complex::from_polar(1.0, -(*n as f64) * self.omega * t);
        }
        x
    }

    fn nonzero(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        self.harmonics.iter().filter(|(n, _)| **n != 0).map(|(n, m)| (*n, m))
    }

    fn add(&mut self, n: i64, op: CMatrix) {
        match self.harmonics.get_mut(&n) {
            Some(slot) => *slot += op,
            None => {
                self.harmonics.insert(n, op);
            }
        }
    }
}

/// Collect the drive terms into harmonics of `omega_base`.
///
/// Every frequency must be an integer multiple `nω` (relative tolerance
/// 1e-9) with `|n| ≤ n_range`.
pub fn vanvleck_components(
    generator: &PeriodicGenerator,
    omega_base: f64,
    n_range: usize,
) -> Result<FourierComponents> {
    if !(omega_base > 0.0) || !omega_base.is_finite() {
        return Err(domain("vanvleck_components", "omega_base must be > 0"));
    }
    let mut out = FourierComponents {
        omega: omega_base,
        dim: generator.dim,
        harmonics: BTreeMap::new(),
    };
    for term in &generator.terms {
        let ratio = term.freq / omega_base;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-9 * ratio.abs().max(1.0) {
            return Err(domain(
                "vanvleck_components",
                format!("frequency {} is not a multiple of {omega_base}", term.freq),
            ));
        }
        if n.abs() > n_range as f64 {
            return Err(domain(
                "vanvleck_components",
                format!("harmonic {n} outside ±{n_range}"),
            ));
        }
        out.add(n as i64, term.op.clone());
    }
    Ok(out)
}

/// `U(t_f, t_i) = e^{-iK(t_f)} e^{-i(t_f - t_i) H_eff} e^{iK(t_i)}`.
#[derive(Debug, Clone)]
pub struct EffectiveEvolution {
    pub h_eff: CMatrix,
    pub kick: FourierComponents,
    pub order: usize,
    spectrum: Spectrum,
}

impl EffectiveEvolution {
    pub fn kick_at(&self, t: f64) -> CMatrix {
        self.kick.at(t)
    }

    pub fn propagator(&self, t_f: f64, t_i: f64) -> CMatrix {
        let inner = self.spectrum.unitary(t_f - t_i);
        let k_f = Spectrum::new(&self.kick_at(t_f)).unitary(1.0);
        let k_i = Spectrum::new(&self.kick_at(t_i)).unitary(-1.0);
        k_f * inner * k_i
    }
}

fn scale(m: &CMatrix, s: f64) -> CMatrix {
    m * Complex::new(s, 0.0)
}

/// High-frequency expansion of a periodic Hamiltonian up to `order` in
/// `1/ω`.
pub fn vanvleck_effective(
    components: &FourierComponents,
    omega_base: f64,
    order: usize,
) -> Result<EffectiveEvolution> {
    if order > 2 {
        return Err(Error::Unsupported(format!(
            "expansion order {order} (at most 2 is implemented)"
        )));
    }
    if !(omega_base > 0.0) {
        return Err(domain("vanvleck_effective", "omega_base must be > 0"));
    }
    let w = omega_base;
    let h0 = components.get(0);
    let mut h_eff = h0.clone();
    let mut kick = FourierComponents {
        omega: w,
        dim: components.dim,
        harmonics: BTreeMap::new(),
    };
    let ms: Vec<(i64, CMatrix)> = components.nonzero().map(|(n, m)| (n, m.clone())).collect();

    if order >= 1 {
        for (m, hm) in &ms {
            let mf = *m as f64;
            let hmm = components.get(-m);
            h_eff += scale(&commutator(&hmm, hm), 1.0 / (2.0 * mf * w));
            kick.add(*m, hm * Complex::new(0.0, 1.0 / (mf * w)));
        }
    }
    if order >= 2 {
        for (m, hm) in &ms {
            let mf = *m as f64;
            let hmm = components.get(-m);
            let inner = commutator(&hmm, &h0);
            h_eff += scale(&commutator(&inner, hm), 1.0 / (2.0 * mf * mf * w * w));
            kick.add(*m, commutator(hm, &h0) * Complex::new(0.0, -1.0 / (mf * mf * w * w)));
        }
        for (n, hn) in &ms {
            let nf = *n as f64;
            for (m, _) in &ms {
                if m == n {
                    continue;
                }
                let mf = *m as f64;
                let hmm = components.get(-m);
                let hmn = components.get(m - n);
                let inner = commutator(&hmm, &hmn);
                h_eff += scale(&commutator(&inner, hn), 1.0 / (3.0 * mf * nf * w * w));
            }
        }
        // K⁽²⁾ harmonic m collects [H_n, H_{m-n}] over n ≠ 0, m
        let mut targets: Vec<i64> = Vec::new();
        for (a, _) in &ms {
            for (b, _) in &ms {
                let m = a + b;
                if m != 0 && !targets.contains(&m) {
                    targets.push(m);
                }
            }
        }
        for m in targets {
            let mf = m as f64;
            for (n, hn) in &ms {
                if *n == m {
                    continue;
                }
                let hmn = components.get(m - n);
                let nf = *n as f64;
                kick.add(
                    m,
                    commutator(hn, &hmn) * Complex::new(0.0, -1.0 / (2.0 * mf * nf * w * w)),
                );
            }
        }
    }
    let h_eff = (&h_eff + h_eff.adjoint()) * Complex::new(0.5, 0.0);
    let spectrum = Spectrum::new(&h_eff);
    Ok(EffectiveEvolution {
        h_eff,
        kick,
        order,
        spectrum,
    })
}

/// Per-ion excited populations at multiples of the trap period.
#[derive(Debug, Clone)]
pub struct StroboscopicTrace {
    /// `t_k = k · 2π/ν` in seconds.
    pub times: Vec<f64>,
    /// `pe[i][k]` for ion `i`.
    pub pe: Vec<Vec<f64>>,
    pub tail_deficit: f64,
}

fn check_resonant(config: &TrapConfig) -> Result<()> {
    config.validate()?;
    for (i, d) in config.delta_laser.iter().enumerate() {
        if (d - config.nu).abs() > 1e-9 * config.nu {
            return Err(domain(
                "stroboscopic_evolution",
                format!("ion {i} is not driven on the sideband (Δ = {d}, ν = {})", config.nu),
            ));
        }
    }
    Ok(())
}

fn excited(state: &Ensemble, fock_dim: usize) -> f64 {
    state.populations()[fock_dim..].iter().sum()
}

fn stroboscopic_run(
    config: &TrapConfig,
    nbar: f64,
    k_max: usize,
    period_unitary: impl Fn(usize) -> Result<(CMatrix, Option<(CMatrix, CMatrix)>)> + Sync,
) -> Result<StroboscopicTrace> {
    check_resonant(config)?;
    let thermal = ThermalState::new(nbar, config.fock)?;
    let fock_dim = config.fock.dim();
    let period = std::f64::consts::TAU / config.nu;
    let initial = ground_thermal_ensemble(&thermal.probs, 1);
    let per_ion = crate::par::map_indices(config.n_ions(), |i| -> Result<Vec<f64>> {
        let (step, frame) = period_unitary(i)?;
        let mut out = Vec::with_capacity(k_max + 1);
        out.push(0.0);
        // carry the state inside the effective frame and rotate out at each sample
        let mut state = match &frame {
            Some((_, enter)) => initial.apply(enter),
            None => initial.clone(),
        };
        for _ in 1..=k_max {
            state = state.apply(&step);
            let observed = match &frame {
                Some((leave, _)) => state.apply(leave),
                None => state.clone(),
            };
            out.push(excited(&observed, fock_dim));
        }
        Ok(out)
    });
    Ok(StroboscopicTrace {
        times: (0..=k_max).map(|k| k as f64 * period).collect(),
        pe: per_ion.into_iter().collect::<Result<_>>()?,
        tail_deficit: thermal.tail_deficit,
    })
}

/// Populations from the van Vleck sandwich at `t_k = k·2π/ν`, starting from
/// `|g⟩⟨g| ⊗ ρ_thermal(nbar)` at `t = 0`.
pub fn stroboscopic_evolution(
    config: &TrapConfig,
    nbar: f64,
    k_max: usize,
    order: usize,
) -> Result<StroboscopicTrace> {
    let period = std::f64::consts::TAU / config.nu;
    stroboscopic_run(config, nbar, k_max, |i| {
        let gen = bichromatic_generator(config, i)?;
        let comps = vanvleck_components(&gen, config.nu, 1)?;
        let eff = vanvleck_effective(&comps, config.nu, order)?;
        let step = eff.spectrum.unitary(period);
        // K is periodic, so K(t_k) = K(0) for every sample
        let k0 = eff.kick_at(0.0);
        let spec = Spectrum::new(&k0);
        Ok((step, Some((spec.unitary(1.0), spec.unitary(-1.0)))))
    })
}

/// Populations at `t_k = k·2π/ν` from powers of the numerically integrated
/// one-period propagator of the full driven Hamiltonian.
pub fn stroboscopic_exact(config: &TrapConfig, nbar: f64, k_max: usize) -> Result<StroboscopicTrace> {
    let period = std::f64::consts::TAU / config.nu;
    let control = StepControl {
        tol: 1e-11,
        ..StepControl::default()
    };
    stroboscopic_run(config, nbar, k_max, |i| {
        let gen = bichromatic_generator(config, i)?;
        Ok((propagate_unitary(&gen, 0.0, period, &control)?, None))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_lamb_dicke_ops, FockSpace};
    use crate::linalg::{hermiticity_defect, kron, max_abs_diff, to_complex};
    use crate::dynamics::{qubit_sigma_x, weak_hamiltonian, WeakMode};
    use rand::{Rng, SeedableRng};
    use std::f64::consts::TAU;

    fn random_matrix(d: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(d, d, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn hermitian(m: CMatrix) -> CMatrix {
        (&m + m.adjoint()) * Complex::new(0.5, 0.0)
    }

    #[test]
    fn static_hamiltonian_has_only_dc_component() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = hermitian(random_matrix(3, &mut rng));
        let g = PeriodicGenerator::new(3, vec![DriveTerm::new(0.0, h.clone())]);
        let c = vanvleck_components(&g, 2.0, 3).unwrap();
        assert_eq!(max_abs_diff(&c.get(0), &h), 0.0);
        assert_eq!(max_abs_diff(&c.get(1), &CMatrix::zeros(3, 3)), 0.0);
    }

    #[test]
    fn cosine_splits_into_two_halves() {
        let v = qubit_sigma_x();
        let half = &v * Complex::new(0.5, 0.0);
        let g = PeriodicGenerator::new(2, vec![DriveTerm::new(3.0, half.clone()), DriveTerm::new(-3.0, half.clone())]);
        let c = vanvleck_components(&g, 3.0, 1).unwrap();
        assert_eq!(c.get(1), half);
        assert_eq!(c.get(-1), half);
        // and the sum reproduces V cos(ωt)
        assert!(max_abs_diff(&c.at(0.4), &(&v * Complex::new((3.0f64 * 0.4).cos(), 0.0))) < 1e-15);
    }

    #[test]
    fn incommensurate_frequency_is_rejected() {
        let g = PeriodicGenerator::new(2, vec![DriveTerm::new(1.5, qubit_sigma_x())]);
        assert!(vanvleck_components(&g, 1.0, 3).is_err());
        let g = PeriodicGenerator::new(2, vec![DriveTerm::new(4.0, qubit_sigma_x())]);
        assert!(vanvleck_components(&g, 1.0, 3).is_err());
    }

    #[test]
    fn order_three_is_unsupported() {
        let g = PeriodicGenerator::new(2, vec![DriveTerm::new(0.0, qubit_sigma_x())]);
        let c = vanvleck_components(&g, 1.0, 1).unwrap();
        assert!(matches!(vanvleck_effective(&c, 1.0, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn commuting_harmonics_give_no_first_order_shift() {
        let v = qubit_sigma_x();
        let g = PeriodicGenerator::new(
            2,
            vec![
                DriveTerm::new(0.0, &v * Complex::new(0.3, 0.0)),
                DriveTerm::new(1.0, v.clone()),
                DriveTerm::new(-1.0, v.clone()),
            ],
        );
        let c = vanvleck_components(&g, 1.0, 1).unwrap();
        let e = vanvleck_effective(&c, 1.0, 2).unwrap();
        assert!(max_abs_diff(&e.h_eff, &c.get(0)) < 1e-15);
    }

    const NU: f64 = TAU * 1.0e6;

    fn resonant(omega: f64, n_max: usize) -> TrapConfig {
        TrapConfig::resonant(omega, NU, vec![0.1], FockSpace::new(n_max).unwrap())
    }

    #[test]
    fn bichromatic_components_and_first_order_frame() {
        let omega = TAU * 20e3;
        let cfg = resonant(omega, 12);
        let g = bichromatic_generator(&cfg, 0).unwrap();
        let c = vanvleck_components(&g, NU, 1).unwrap();
        let ops = build_lamb_dicke_ops(0.1, 12).unwrap();
        let sx = qubit_sigma_x();
        let sideband = weak_hamiltonian(0.1, omega, cfg.fock, WeakMode::Sideband).unwrap();
        let carrier = kron(&sx, &to_complex(&ops.carrier())) * Complex::new(omega / 2.0, 0.0);
        assert!(max_abs_diff(&c.get(0), &sideband) <= 1e-12 * omega);
        assert!(max_abs_diff(&c.get(1), &carrier) <= 1e-12 * omega);
        assert!(max_abs_diff(&c.get(-1), &carrier) <= 1e-12 * omega);

        let e = vanvleck_effective(&c, NU, 1).unwrap();
        assert!(max_abs_diff(&e.h_eff, &sideband) <= 1e-12 * omega);
        // K(t) = (Ω/ν) σ_x Â sin(νt)
        let base = kron(&sx, &to_complex(&ops.carrier())) * Complex::new(omega / NU, 0.0);
        for t in [0.0, 0.13e-6, 0.37e-6, 0.9e-6] {
            let k = e.kick_at(t);
            let expect = &base * Complex::new((NU * t).sin(), 0.0);
            assert!(max_abs_diff(&k, &expect) <= 1e-12 * omega / NU);
            assert!(hermiticity_defect(&k) <= 1e-15);
            let later = e.kick_at(t + TAU / NU);
            assert!(max_abs_diff(&k, &later) <= 1e-12 * omega / NU);
        }
    }

    #[test]
    fn kick_has_zero_average_and_effective_is_hermitian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let c = generic_components(0.3, &mut rng);
        let e = vanvleck_effective(&c, 1.0, 2).unwrap();
        assert!(e.kick.harmonics.get(&0).is_none());
        assert!(hermiticity_defect(&e.h_eff) < 1e-14);
        for t in [0.0, 0.7, 2.1] {
            assert!(hermiticity_defect(&e.kick_at(t)) < 1e-14);
        }
    }

    /// Random Hermitian periodic Hamiltonian with harmonics up to ±2,
    /// every component scaled by `eps`.
    fn generic_components(eps: f64, rng: &mut impl Rng) -> FourierComponents {
        let d = 3;
        let h0 = hermitian(random_matrix(d, rng)) * Complex::new(eps, 0.0);
        let h1 = random_matrix(d, rng) * Complex::new(eps, 0.0);
        let h2 = random_matrix(d, rng) * Complex::new(eps, 0.0);
        let mut terms = vec![DriveTerm::new(0.0, h0)];
        terms.push(DriveTerm::new(1.0, h1.clone()));
        terms.push(DriveTerm::new(-1.0, h1.adjoint()));
        terms.push(DriveTerm::new(2.0, h2.clone()));
        terms.push(DriveTerm::new(-2.0, h2.adjoint()));
        vanvleck_components(&PeriodicGenerator::new(d, terms), 1.0, 2).unwrap()
    }

    fn sandwich_error(c: &FourierComponents, order: usize, t: f64) -> f64 {
        let terms: Vec<DriveTerm> = c
            .harmonics
            .iter()
            .map(|(n, m)| DriveTerm::new(*n as f64 * c.omega, m.clone()))
            .collect();
        let g = PeriodicGenerator::new(c.dim, terms);
        let control = StepControl { tol: 1e-11, ..StepControl::default() };
        let exact = propagate_unitary(&g, 0.2, t, &control).unwrap();
        let e = vanvleck_effective(c, c.omega, order).unwrap();
        max_abs_diff(&e.propagator(t, 0.2), &exact)
    }

    #[test]
    fn sandwich_error_scales_with_order() {
        // Fixed evolution time of a few periods: the first-order error is
        // dominated by the kick at O(ε²) and the second-order one at O(ε³).
        let t = 4.7 * TAU;
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        for eps in [0.04, 0.02] {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            let c = generic_components(eps, &mut rng);
            r1.push(sandwich_error(&c, 1, t));
            r2.push(sandwich_error(&c, 2, t));
        }
        let s1 = r1[0] / r1[1];
        let s2 = r2[0] / r2[1];
        assert!(s1 > 3.3 && s1 < 5.0, "first order ratio {s1} ({r1:?})");
        assert!(s2 > 6.5, "second order ratio {s2} ({r2:?})");
        assert!(r2[1] < r1[1]);
    }

    #[test]
    fn bichromatic_second_order_improves_on_first() {
        let mut errs = Vec::new();
        for omega in [TAU * 40e3, TAU * 20e3] {
            let mut cfg = resonant(omega, 6);
            cfg.delta_zeeman = vec![0.3 * omega];
            let g = bichromatic_generator(&cfg, 0).unwrap();
            let c = vanvleck_components(&g, NU, 1).unwrap();
            let t = 3.3 * TAU / NU;
            let control = StepControl { tol: 1e-11, ..StepControl::default() };
            let exact = propagate_unitary(&g, 0.0, t, &control).unwrap();
            let e1 = vanvleck_effective(&c, NU, 1).unwrap();
            let e2 = vanvleck_effective(&c, NU, 2).unwrap();
            errs.push((max_abs_diff(&e1.propagator(t, 0.0), &exact), max_abs_diff(&e2.propagator(t, 0.0), &exact)));
        }
        assert!(errs[0].1 < errs[0].0 && errs[1].1 < errs[1].0, "{errs:?}");
        assert!(errs[0].1 / errs[1].1 > 6.5, "{errs:?}");
    }

    #[test]
    fn stroboscopic_start_is_ground() {
        let cfg = resonant(TAU * 20e3, 20);
        let s = stroboscopic_evolution(&cfg, 0.5, 3, 1).unwrap();
        assert_eq!(s.pe[0][0], 0.0);
        assert_eq!(s.times.len(), 4);
    }

    #[test]
    fn stroboscopic_tracks_weak_coupling_at_small_ratio() {
        let omega = 0.02 * NU;
        let space = FockSpace::for_nbar(0.5, crate::fock::DEFAULT_TAIL_TOL).unwrap();
        let cfg = TrapConfig::resonant(omega, NU, vec![0.1], space);
        let exact = stroboscopic_exact(&cfg, 0.5, 50).unwrap();
        let weak = crate::dynamics::weak_coupling_evolution(0.5, 0.1, omega, &exact.times, WeakMode::Sideband, Some(space)).unwrap();
        let worst = exact.pe[0].iter().zip(&weak.pe).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= 4e-4, "{worst}");
        let vv = stroboscopic_evolution(&cfg, 0.5, 50, 2).unwrap();
        let worst2 = exact.pe[0].iter().zip(&vv.pe[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst2 <= worst, "{worst2} vs {worst}");
    }

    #[test]
    fn off_resonant_drive_is_rejected() {
        let cfg = resonant(TAU * 20e3, 10).with_detuning(0.9 * NU);
        assert!(stroboscopic_evolution(&cfg, 0.5, 2, 1).is_err());
    }
}
