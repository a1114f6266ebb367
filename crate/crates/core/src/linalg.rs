//! Dense Hermitian matrix utilities: spectral decomposition, unitary
//! exponentials, Kronecker products and pure-state ensembles.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::Complex;

pub type CMatrix = DMatrix<Complex>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex::new(v, 0.0))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Largest absolute entry of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

#[derive(Debug, Clone)]
enum Basis {
    Real(DMatrix<f64>),
    Complex(CMatrix),
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix.
///
/// Real symmetric input keeps a real eigenbasis so evolution can run on
/// real matrix products.
#[derive(Debug, Clone)]
pub struct Spectrum {
    values: DVector<f64>,
    basis: Basis,
}

impl Spectrum {
    pub fn new(h: &CMatrix) -> Self {
        let d = h.nrows();
        assert_eq!(d, h.ncols(), "spectrum of a non-square matrix");
        let is_real = h.iter().all(|z| z.im == 0.0);
        if is_real {
            let re = h.map(|z| z.re);
            // symmetrize against rounding in the caller's construction
            let re = (&re + re.transpose()) * 0.5;
            let eig = SymmetricEigen::new(re);
            Self {
                values: eig.eigenvalues,
                basis: Basis::Real(eig.eigenvectors),
            }
        } else {
            let herm = (h + h.adjoint()) * Complex::new(0.5, 0.0);
            let eig = SymmetricEigen::new(herm);
            Self {
                values: eig.eigenvalues,
                basis: Basis::Complex(eig.eigenvectors),
            }
        }
    }

    pub fn from_real(h: &DMatrix<f64>) -> Self {
        let re = (h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(re);
        Self {
            values: eig.eigenvalues,
            basis: Basis::Real(eig.eigenvectors),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `V† X`.
    pub fn to_eigenbasis(&self, x: &CMatrix) -> CMatrix {
        match &self.basis {
            Basis::Real(v) => real_t_times(v, x),
            Basis::Complex(v) => v.adjoint() * x,
        }
    }

    /// `V diag(exp(-i λ τ)) C` for coefficients already in the eigenbasis.
    pub fn evolve_coefficients(&self, coeffs: &CMatrix, tau: f64) -> CMatrix {
        let mut c = coeffs.clone();
        for (r, lambda) in self.values.iter().enumerate() {
            let ph = Complex::from_polar(1.0, -lambda * tau);
            for k in 0..c.ncols() {
                c[(r, k)] *= ph;
            }
        }
        match &self.basis {
            Basis::Real(v) => real_times(v, &c),
            Basis::Complex(v) => v * c,
        }
    }

    /// `exp(-i H τ)` as a dense unitary.
    pub fn unitary(&self, tau: f64) -> CMatrix {
        let d = self.dim();
        let mut scaled = match &self.basis {
            Basis::Real(v) => to_complex(v),
            Basis::Complex(v) => v.clone(),
        };
        let adj = scaled.adjoint();
        for c in 0..d {
            let ph = Complex::from_polar(1.0, -self.values[c] * tau);
            for r in 0..d {
                scaled[(r, c)] *= ph;
            }
        }
        scaled * adj
    }
}

/// `exp(-i H τ)` for Hermitian `H`.
pub fn expm_hermitian(h: &CMatrix, tau: f64) -> CMatrix {
    Spectrum::new(h).unitary(tau)
}

fn split(x: &CMatrix) -> (DMatrix<f64>, DMatrix<f64>) {
    (x.map(|z| z.re), x.map(|z| z.im))
}

fn join(re: DMatrix<f64>, im: DMatrix<f64>) -> CMatrix {
    re.zip_map(&im, Complex::new)
}

fn real_times(v: &DMatrix<f64>, x: &CMatrix) -> CMatrix {
    let (re, im) = split(x);
    join(v * re, v * im)
}

fn real_t_times(v: &DMatrix<f64>, x: &CMatrix) -> CMatrix {
    let (re, im) = split(x);
    join(v.tr_mul(&re), v.tr_mul(&im))
}

/// Mixed state `ρ = Σ_k w_k |ψ_k⟩⟨ψ_k|` stored as weighted kets (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub kets: CMatrix,
}

impl Ensemble {
    pub fn pure(ket: DVector<Complex>) -> Self {
        let d = ket.len();
        Self {
            weights: vec![1.0],
            kets: CMatrix::from_column_slice(d, 1, ket.as_slice()),
        }
    }

    /// Diagonal state with the given populations on basis vectors.
    /// Entries with zero weight are dropped.
    pub fn diagonal(dim: usize, populations: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let entries: Vec<(usize, f64)> = populations.into_iter().filter(|(_, w)| *w > 0.0).collect();
        let mut kets = CMatrix::zeros(dim, entries.len());
        let mut weights = Vec::with_capacity(entries.len());
        for (k, (idx, w)) in entries.into_iter().enumerate() {
            kets[(idx, k)] = Complex::new(1.0, 0.0);
            weights.push(w);
        }
        Self { weights, kets }
    }

    /// Purification of an arbitrary density matrix through its eigenbasis.
    /// Eigenvalues below `-1e-12` are reported as an error string.
    pub fn from_density(rho: &CMatrix) -> Result<Self, String> {
        let eig = SymmetricEigen::new((rho + rho.adjoint()) * Complex::new(0.5, 0.0));
        let d = rho.nrows();
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        for (k, w) in eig.eigenvalues.iter().enumerate() {
            if *w < -1e-12 {
                return Err(format!("density matrix has eigenvalue {w:e}"));
            }
            if *w > 0.0 {
                weights.push(*w);
                cols.push(eig.eigenvectors.column(k).into_owned());
            }
        }
        let kets = if cols.is_empty() {
            CMatrix::zeros(d, 0)
        } else {
            CMatrix::from_columns(&cols)
        };
        Ok(Self { weights, kets })
    }

    pub fn dim(&self) -> usize {
        self.kets.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.weights.len())
            .map(|k| self.weights[k] * self.kets.column(k).norm_squared())
            .sum()
    }

    pub fn density_matrix(&self) -> CMatrix {
        let d = self.dim();
        let mut rho = CMatrix::zeros(d, d);
        for (k, w) in self.weights.iter().enumerate() {
            let col = self.kets.column(k);
            rho += col * col.adjoint() * Complex::new(*w, 0.0);
        }
        rho
    }

    /// Diagonal of ρ in the computational basis.
    pub fn populations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (k, w) in self.weights.iter().enumerate() {
            for (r, slot) in out.iter_mut().enumerate() {
                *slot += w * self.kets[(r, k)].norm_sqr();
            }
        }
        out
    }

    pub fn apply(&self, u: &CMatrix) -> Self {
        Self {
            weights: self.weights.clone(),
            kets: u * &self.kets,
        }
    }
}
