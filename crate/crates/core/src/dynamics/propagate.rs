use serde::{Deserialize, Serialize};

use super::hamiltonian::{weak_hamiltonian, WeakMode};
use super::{excited_from_populations, ground_thermal_ensemble, reduced_qubit};
use crate::error::{domain, Error, Result};
use crate::fock::{FockSpace, ThermalState, DEFAULT_TAIL_TOL};
use crate::linalg::{expm_hermitian, CMatrix, Ensemble, Spectrum};
use crate::Complex;

/// A Hamiltonian with explicit time dependence.
pub trait TimeDependent: Sync {
    fn dim(&self) -> usize;
    fn at(&self, t: f64) -> CMatrix;
    /// A first guess for the integrator step.
    fn step_hint(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy)]
pub enum Generator<'a> {
    Static(&'a CMatrix),
    Driven(&'a dyn TimeDependent),
}

impl Generator<'_> {
    fn dim(&self) -> usize {
        match self {
            Generator::Static(h) => h.nrows(),
            Generator::Driven(g) => g.dim(),
        }
    }
}

/// Error control of the time-dependent integrator.
///
/// Each output interval is integrated with `n` and `2n` fourth-order
/// commutator-free steps; `n` doubles until no population differs by more
/// than `tol` between the two.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub tol: f64,
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub max_halvings: u32,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            initial_step: None,
            min_step: 0.0,
            max_halvings: 20,
        }
    }
}

/// States at the requested times, starting from `t = 0`.
#[derive(Debug, Clone)]
pub struct Propagation {
    pub times: Vec<f64>,
    pub states: Vec<Ensemble>,
}

impl Propagation {
    pub fn density_matrix(&self, j: usize) -> CMatrix {
        self.states[j].density_matrix()
    }

    pub fn excited(&self, j: usize, n_ions: usize, fock_dim: usize) -> Vec<f64> {
        excited_from_populations(&self.states[j].populations(), n_ions, fock_dim)
    }
}

pub fn propagate(gen: Generator<'_>, initial: &Ensemble, times: &[f64]) -> Result<Propagation> {
    let states = propagate_with(gen, initial, times, &StepControl::default(), |_, s| s.clone())?;
    Ok(Propagation {
        times: times.to_vec(),
        states,
    })
}

/// Propagates `initial` from `t = 0` and hands each requested state to
/// `observe` instead of storing it.
pub fn propagate_with<T>(
    gen: Generator<'_>,
    initial: &Ensemble,
    times: &[f64],
    control: &StepControl,
    mut observe: impl FnMut(f64, &Ensemble) -> T,
) -> Result<Vec<T>> {
    if initial.dim() != gen.dim() {
        return Err(domain(
            "propagate",
            format!("state dimension {} vs generator {}", initial.dim(), gen.dim()),
        ));
    }
    check_times(times)?;
    let mut out = Vec::with_capacity(times.len());
    match gen {
        Generator::Static(h) => {
            let spec = Spectrum::new(h);
            let coeffs = spec.to_eigenbasis(&initial.kets);
            for &t in times {
                if t == 0.0 {
                    out.push(observe(t, initial));
                } else {
                    let state = Ensemble {
                        weights: initial.weights.clone(),
                        kets: spec.evolve_coefficients(&coeffs, t),
                    };
                    out.push(observe(t, &state));
                }
            }
        }
        Generator::Driven(g) => {
            let mut state = initial.clone();
            let mut now = 0.0;
            let mut step = control.initial_step.or(g.step_hint());
            for &t in times {
                if t > now {
                    let h = step.unwrap_or(t - now).min(t - now);
                    let (next, used) = advance(g, &state, now, t, h, control)?;
                    state = next;
                    step = Some(used);
                    now = t;
                }
                out.push(observe(t, &state));
            }
        }
    }
    Ok(out)
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(domain("propagate", "times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("propagate", "times must be ascending"));
    }
    Ok(())
}

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// One commutator-free fourth-order step `U(t + h, t)`.
fn cf4_step(g: &dyn TimeDependent, t: f64, h: f64) -> CMatrix {
    let a1 = (3.0 - 2.0 * SQRT3) / 12.0;
    let a2 = (3.0 + 2.0 * SQRT3) / 12.0;
    let h1 = g.at(t + (0.5 - SQRT3 / 6.0) * h);
    let h2 = g.at(t + (0.5 + SQRT3 / 6.0) * h);
    let early = &h1 * Complex::new(a2, 0.0) + &h2 * Complex::new(a1, 0.0);
    let late = &h1 * Complex::new(a1, 0.0) + &h2 * Complex::new(a2, 0.0);
    expm_hermitian(&late, h) * expm_hermitian(&early, h)
}

fn steps_unitary(g: &dyn TimeDependent, a: f64, b: f64, n: usize) -> CMatrix {
    let h = (b - a) / n as f64;
    let mut u = CMatrix::identity(g.dim(), g.dim());
    for s in 0..n {
        u = cf4_step(g, a + s as f64 * h, h) * u;
    }
    u
}

fn steps_state(g: &dyn TimeDependent, state: &Ensemble, a: f64, b: f64, n: usize) -> Ensemble {
    let h = (b - a) / n as f64;
    let mut kets = state.kets.clone();
    for s in 0..n {
        kets = cf4_step(g, a + s as f64 * h, h) * kets;
    }
    Ensemble {
        weights: state.weights.clone(),
        kets,
    }
}

fn max_pop_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Refinement no longer helps once rounding dominates the step error.
fn stalled(previous: f64, current: f64) -> bool {
    previous.is_finite() && current >= previous
}

fn advance(
    g: &dyn TimeDependent,
    state: &Ensemble,
    a: f64,
    b: f64,
    h: f64,
    control: &StepControl,
) -> Result<(Ensemble, f64)> {
    let len = b - a;
    let mut n = ((len / h).ceil() as usize).max(1);
    let mut coarse = steps_state(g, state, a, b, n);
    let mut coarse_pops = coarse.populations();
    let mut mismatch = f64::INFINITY;
    for halving in 0..=control.max_halvings {
        let fine = steps_state(g, state, a, b, 2 * n);
        let fine_pops = fine.populations();
        let previous = mismatch;
        mismatch = max_pop_diff(&coarse_pops, &fine_pops);
        if mismatch < control.tol {
            let used = len / n as f64;
            let next = if halving == 0 { 2.0 * used } else { used };
            return Ok((fine, next));
        }
        if stalled(previous, mismatch) {
            break;
        }
        n *= 2;
        if len / (n as f64) < control.min_step {
            break;
        }
        coarse = fine;
        coarse_pops = fine_pops;
    }
    drop(coarse);
    Err(Error::IntegrationFailure {
        t: a,
        step: len / n as f64,
        mismatch,
        halvings: control.max_halvings,
    })
}

/// Propagator `U(b, a)` of a driven Hamiltonian.
///
/// Refinement stops once every transition probability `|U_ij|²` agrees to
/// `control.tol` between `n` and `2n` steps.
pub fn propagate_unitary(
    g: &dyn TimeDependent,
    a: f64,
    b: f64,
    control: &StepControl,
) -> Result<CMatrix> {
    if !(b >= a) {
        return Err(domain("propagate_unitary", "end time precedes start time"));
    }
    if b == a {
        return Ok(CMatrix::identity(g.dim(), g.dim()));
    }
    let len = b - a;
    let h = control.initial_step.or(g.step_hint()).unwrap_or(len).min(len);
    let mut n = ((len / h).ceil() as usize).max(1);
    let mut coarse = steps_unitary(g, a, b, n);
    let mut mismatch = f64::INFINITY;
    for _ in 0..=control.max_halvings {
        let fine = steps_unitary(g, a, b, 2 * n);
        let previous = mismatch;
        mismatch = coarse
            .iter()
            .zip(fine.iter())
            .map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs())
            .fold(0.0, f64::max);
        if mismatch < control.tol {
            return Ok(fine);
        }
        if stalled(previous, mismatch) {
            break;
        }
        n *= 2;
        if len / (n as f64) < control.min_step {
            break;
        }
        coarse = fine;
    }
    Err(Error::IntegrationFailure {
        t: a,
        step: len / n as f64,
        mismatch,
        halvings: control.max_halvings,
    })
}

/// Excited population and qubit coherence of a single ion under a
/// weak-coupling interaction, starting from `|g⟩⟨g| ⊗ ρ_thermal`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakTrace {
    pub times: Vec<f64>,
    pub pe: Vec<f64>,
    /// `⟨e|ρ_qubit|g⟩` at each time.
    pub coherence: Vec<(f64, f64)>,
    pub tail_deficit: f64,
    pub truncation_warning: bool,
}

pub fn weak_coupling_evolution(
    nbar: f64,
    eta: f64,
    omega: f64,
    times: &[f64],
    mode: WeakMode,
    space: Option<FockSpace>,
) -> Result<WeakTrace> {
    let space = match space {
        Some(s) => s,
        None => FockSpace::for_nbar(nbar, DEFAULT_TAIL_TOL)?,
    };
    let thermal = ThermalState::new(nbar, space)?;
    let h = weak_hamiltonian(eta, omega, space, mode)?;
    let initial = ground_thermal_ensemble(&thermal.probs, 1);
    let fock_dim = space.dim();
    let samples = propagate_with(
        Generator::Static(&h),
        &initial,
        times,
        &StepControl::default(),
        |_, state| {
            let rho = reduced_qubit(state, fock_dim);
            (rho[1][1].re, rho[1][0])
        },
    )?;
    Ok(WeakTrace {
        times: times.to_vec(),
        pe: samples.iter().map(|s| s.0).collect(),
        coherence: samples.iter().map(|s| (s.1.re, s.1.im)).collect(),
        tail_deficit: thermal.tail_deficit,
        truncation_warning: thermal.truncation_warning(DEFAULT_TAIL_TOL),
    })
}
