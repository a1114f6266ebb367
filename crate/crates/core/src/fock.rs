//! Truncated harmonic-oscillator space, thermal phonon states and the
//! Lamb-Dicke operator matrix elements used by every Hamiltonian.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::Complex;

/// Default bound on the thermal probability mass discarded by truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;

/// Phonon number states `|0⟩ ..= |n_max⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(domain("FockSpace::new", "n_max must be at least 1"));
        }
        Ok(Self { n_max })
    }

    /// Smallest space that holds a thermal state of mean `nbar`.
    ///
    /// Uses `ceil(nbar + 10 sqrt(nbar + 1) + 10)`, widened where needed so the
    /// geometric tail `(nbar / (nbar + 1))^(n_max + 1)` stays below `tail_tol`.
    pub fn for_nbar(nbar: f64, tail_tol: f64) -> Result<Self> {
        if !(nbar >= 0.0) || !nbar.is_finite() {
            return Err(domain("FockSpace::for_nbar", format!("nbar = {nbar}")));
        }
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(domain("FockSpace::for_nbar", format!("tail_tol = {tail_tol}")));
        }
        let heuristic = (nbar + 10.0 * (nbar + 1.0).sqrt() + 10.0).ceil() as usize;
        let by_tail = if nbar == 0.0 {
            1
        } else {
            let ratio = nbar / (nbar + 1.0);
            // r^(n+1) <= tol  <=>  n + 1 >= ln(tol) / ln(r)
            ((tail_tol.ln() / ratio.ln()).ceil() as usize).saturating_sub(1)
        };
        Self::new(heuristic.max(by_tail).max(1))
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of basis states, `n_max + 1`.
    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Thermal phonon distribution truncated to a [`FockSpace`].
///
/// The probabilities are the untruncated values; the discarded mass is kept
/// in `tail_deficit` rather than renormalized away.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub nbar: f64,
    pub probs: Vec<f64>,
    pub tail_deficit: f64,
}

impl ThermalState {
    pub fn new(nbar: f64, space: FockSpace) -> Result<Self> {
        thermal_probs(nbar, space.n_max())
    }

    pub fn truncation_warning(&self, tail_tol: f64) -> bool {
        self.tail_deficit > tail_tol
    }

    /// Mean phonon number of the truncated vector.
    pub fn truncated_mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `∂p_n/∂n̄` for every retained level.
    pub fn derivative(&self) -> Vec<f64> {
        thermal_prob_derivs(self.nbar, self.probs.len() - 1)
    }
}

/// `p_n = n̄^n / (n̄ + 1)^(n + 1)` for `n = 0 ..= n_max`.
pub fn thermal_probs(nbar: f64, n_max: usize) -> Result<ThermalState> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(domain("thermal_probs", format!("nbar must be >= 0, got {nbar}")));
    }
    if n_max < 1 {
        return Err(domain("thermal_probs", "n_max must be at least 1"));
    }
    let ratio = nbar / (nbar + 1.0);
    let p0 = 1.0 / (nbar + 1.0);
    let probs: Vec<f64> = (0..=n_max).map(|n| p0 * ratio.powi(n as i32)).collect();
    let tail_deficit = ratio.powi(n_max as i32 + 1);
    Ok(ThermalState {
        nbar,
        probs,
        tail_deficit,
    })
}

/// Closed-form derivative of the thermal probabilities with respect to `n̄`.
pub fn thermal_prob_derivs(nbar: f64, n_max: usize) -> Vec<f64> {
    let denom = (nbar + 1.0).powi(3);
    let ratio = nbar / (nbar + 1.0);
    (0..=n_max)
        .map(|n| {
            if n == 0 {
                -1.0 / ((nbar + 1.0) * (nbar + 1.0))
            } else {
                ratio.powi(n as i32 - 1) * (n as f64 - nbar) / denom
            }
        })
        .collect()
}

/// Generalized Laguerre polynomial `L^α_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: usize, x: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + a - x) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `L^α_0(x) ..= L^α_n_max(x)` in one pass.
pub fn laguerre_table(n_max: usize, alpha: usize, x: f64) -> Vec<f64> {
    let a = alpha as f64;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + a - x);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * out[k] - (kf + a) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

/// Carrier and first-sideband operator elements for one ion.
///
/// `a_diag[n] = ⟨n|Â|n⟩` and `m_upper[n] = ⟨n|M̂|n+1⟩`; both are the
/// magnitudes of the corresponding elements of `exp(iη(â + â†))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambDickeOps {
    pub eta: f64,
    pub a_diag: Vec<f64>,
    pub m_upper: Vec<f64>,
}

impl LambDickeOps {
    pub fn dim(&self) -> usize {
        self.a_diag.len()
    }

    pub fn carrier(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.a_diag))
    }

    /// The lowering-type sideband operator `M̂`.
    pub fn sideband(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (n, v) in self.m_upper.iter().enumerate() {
            m[(n, n + 1)] = *v;
        }
        m
    }
}

pub fn build_lamb_dicke_ops(eta: f64, n_max: usize) -> Result<LambDickeOps> {
    check_eta("build_lamb_dicke_ops", eta)?;
    if n_max < 1 {
        return Err(domain("build_lamb_dicke_ops", "n_max must be at least 1"));
    }
    let x = eta * eta;
    let dw = (-x / 2.0).exp();
    let l0 = laguerre_table(n_max, 0, x);
    let l1 = laguerre_table(n_max - 1, 1, x);
    let a_diag = l0.iter().map(|l| dw * l).collect();
    let m_upper = l1
        .iter()
        .enumerate()
        .map(|(n, l)| eta * dw * l / ((n + 1) as f64).sqrt())
        .collect();
    Ok(LambDickeOps {
        eta,
        a_diag,
        m_upper,
    })
}

/// Low-order approximation to the sideband element `⟨n|M̂|n+1⟩`.
pub fn f_approx(n: usize, eta: f64) -> f64 {
    let np1 = (n + 1) as f64;
    eta * np1.sqrt() - eta.powi(3) / 2.0 * (n as f64) * np1 / np1.sqrt()
}

/// Quantum Fisher information of `n̄` for a projective phonon-number readout.
pub fn qfi_thermal(nbar: f64) -> Result<f64> {
    if !(nbar > 0.0) || !nbar.is_finite() {
        return Err(domain("qfi_thermal", format!("nbar must be > 0, got {nbar}")));
    }
    let inv = 1.0 / nbar;
    let l = inv.ln_1p();
    Ok(nbar * (inv + 1.0).sqrt() / 2.0 * l * l)
}

/// Truncated annihilation operator `â`.
pub fn annihilation(space: FockSpace) -> DMatrix<f64> {
    let d = space.dim();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = (n as f64).sqrt();
    }
    a
}

/// Truncated `â + â†`.
pub fn quadrature(space: FockSpace) -> DMatrix<f64> {
    let a = annihilation(space);
    &a + a.transpose()
}

/// Fock-basis matrix of `exp(iη(â + â†))` from its exact elements,
/// `(iη)^d e^{-η²/2} sqrt(n_<!/n_>!) L^d_{n_<}(η²)` with `d = |m - n|`.
///
/// Every sideband order is kept; the matrix is the top-left block of the
/// infinite-dimensional unitary.
pub fn displacement_matrix(eta: f64, space: FockSpace) -> DMatrix<Complex> {
    let d = space.dim();
    let x = eta * eta;
    let dw = (-x / 2.0).exp();
    // ln n! for the factorial ratios
    let mut ln_fact = vec![0.0; d];
    for n in 1..d {
        ln_fact[n] = ln_fact[n - 1] + (n as f64).ln();
    }
    let i_pow = [
        Complex::new(1.0, 0.0),
        Complex::new(0.0, 1.0),
        Complex::new(-1.0, 0.0),
        Complex::new(0.0, -1.0),
    ];
    let mut out = DMatrix::zeros(d, d);
    for order in 0..d {
        let lag = laguerre_table(d - 1 - order, order, x);
        let phase = i_pow[order % 4];
        for (lo, l) in lag.iter().enumerate() {
            let hi = lo + order;
            let mag = if eta == 0.0 {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (order as f64 * eta.ln() + 0.5 * (ln_fact[lo] - ln_fact[hi])).exp() * dw * l
            };
            let v = phase * mag;
            out[(hi, lo)] = v;
            out[(lo, hi)] = v;
        }
    }
    out
}

pub(crate) fn check_eta(op: &'static str, eta: f64) -> Result<()> {
    if eta > 0.0 && eta < 1.0 {
        Ok(())
    } else {
        Err(domain(op, format!("Lamb-Dicke parameter must lie in (0, 1), got {eta}")))
    }
}
