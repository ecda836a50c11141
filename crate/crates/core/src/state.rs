//! Generalized Werner states and their entanglement.
//!
//! The two-qubit state lives in the idler ⊗ signal space with basis order
//! `(H_I H_S, H_I V_S, V_I H_S, V_I V_S)`:
//!
//! ```text
//!        ⎡ ηI_H+(1-η)/4        0          0     η𝓘√(I_H I_V) e^{-iφ} ⎤
//!    ρ = ⎢      0          (1-η)/4        0              0           ⎥
//!        ⎢      0              0      (1-η)/4            0           ⎥
//!        ⎣ η𝓘√(I_H I_V) e^{iφ}  0         0        ηI_V+(1-η)/4      ⎦
//! ```
//!
//! Every quantity here is available twice: as a closed form in the state
//! parameters, and as a generic numeric computation on an arbitrary 4×4
//! density matrix. The numeric routes are the oracles for the closed forms.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, c, expi, CMatrix, ZERO};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
/// Half-width of the band around α₁ = 0 reported as [`Verdict::Boundary`].
pub const EXACT_VERDICT_BAND: f64 = 1e-9;
/// Negative eigenvalues of ρρ̃ smaller than this are rounding noise.
const SPIN_FLIP_CLAMP: f64 = 1e-12;

pub const TWO_QUBIT_LABELS: [&str; 4] = ["H_I H_S", "H_I V_S", "V_I H_S", "V_I V_S"];

/// The four parameters (η, 𝓘, I_H, φ) of a generalized Werner state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedWernerParams {
    eta: f64,
    i_coh: f64,
    i_h: f64,
    phi: f64,
}

fn unit_interval(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::param(name, format!("{value} is not in [0, 1]")));
    }
    Ok(())
}

impl GeneralizedWernerParams {
    pub fn new(eta: f64, i_coh: f64, i_h: f64, phi: f64) -> Result<Self> {
        unit_interval("eta", eta)?;
        unit_interval("icoh", i_coh)?;
        unit_interval("ih", i_h)?;
        if !phi.is_finite() {
            return Err(Error::param("phi", "must be finite"));
        }
        Ok(Self { eta, i_coh, i_h, phi })
    }

    /// Werner state: 𝓘 = 1, I_H = 1/2.
    pub fn werner(eta: f64) -> Result<Self> {
        Self::new(eta, 1.0, 0.5, 0.0)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn i_coh(&self) -> f64 {
        self.i_coh
    }
    pub fn i_h(&self) -> f64 {
        self.i_h
    }
    pub fn i_v(&self) -> f64 {
        1.0 - self.i_h
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(self, phi: f64) -> Result<Self> {
        Self::new(self.eta, self.i_coh, self.i_h, phi)
    }

    /// η𝓘√(I_H I_V), the magnitude of the HH–VV coherence.
    pub fn coherence(&self) -> f64 {
        self.eta * self.i_coh * (self.i_h * self.i_v()).sqrt()
    }

    /// Population (1 - η)/4 contributed by the white-noise part to every diagonal entry.
    pub fn noise_floor(&self) -> f64 {
        (1.0 - self.eta) / 4.0
    }
}

/// A Hermitian, unit-trace, positive semidefinite matrix with labelled basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    labels: Vec<String>,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix, labels: Vec<String>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidDensityMatrix(format!(
                "not square: {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix("empty matrix".into()));
        }
        if labels.len() != entries.nrows() {
            return Err(Error::InvalidDensityMatrix(format!(
                "{} basis labels for dimension {}",
                labels.len(),
                entries.nrows()
            )));
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = linalg::trace(&entries);
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}, not 1")));
        }
        let min_eig = linalg::hermitian_eigenvalues(&entries)?[0];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { entries, labels })
    }

    /// Projector onto a (normalized on the fly) pure state.
    pub fn from_pure(ket: &[Complex64], labels: Vec<String>) -> Result<Self> {
        let norm = ket.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-15 {
            return Err(Error::InvalidDensityMatrix("zero state vector".into()));
        }
        let v = CMatrix::from_iterator(ket.len(), 1, ket.iter().map(|a| a / norm));
        Self::new(&v * v.adjoint(), labels)
    }

    pub fn maximally_mixed(labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        Self::new(CMatrix::identity(n, n) * c(1.0 / n as f64, 0.0), labels)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }
    pub fn labels(&self) -> &[String] {
        &self.labels
    }
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::hermitian_eigenvalues(&self.entries)
    }
}

pub fn two_qubit_labels() -> Vec<String> {
    TWO_QUBIT_LABELS.iter().map(|s| s.to_string()).collect()
}

/// Eigenvalues of the partial transpose; only `alpha1` can be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptSpectrum {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl PptSpectrum {
    pub fn as_array(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.alpha3, self.alpha4]
    }

    pub fn sorted(&self) -> [f64; 4] {
        let mut a = self.as_array();
        a.sort_by(f64::total_cmp);
        a
    }

    pub fn verdict(&self) -> Verdict {
        Verdict::from_alpha1(self.alpha1, EXACT_VERDICT_BAND)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Entangled,
    Separable,
    /// |α₁| inside the uncertainty band; the state sits on (or is
    /// indistinguishable from) the separability boundary.
    Boundary,
}

impl Verdict {
    pub fn from_alpha1(alpha1: f64, band: f64) -> Self {
        if alpha1 < -band {
            Verdict::Entangled
        } else if alpha1 > band {
            Verdict::Separable
        } else {
            Verdict::Boundary
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Entangled => "entangled",
            Verdict::Separable => "separable",
            Verdict::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn build_state(params: &GeneralizedWernerParams) -> DensityMatrix {
    let n = params.noise_floor();
    let x = params.coherence();
    let mut m = CMatrix::zeros(4, 4);
    m[(0, 0)] = c(params.eta() * params.i_h() + n, 0.0);
    m[(1, 1)] = c(n, 0.0);
    m[(2, 2)] = c(n, 0.0);
    m[(3, 3)] = c(params.eta() * params.i_v() + n, 0.0);
    m[(0, 3)] = expi(-params.phi()) * x;
    m[(3, 0)] = expi(params.phi()) * x;
    DensityMatrix::new(m, two_qubit_labels())
        .expect("generalized Werner state with validated parameters is a density matrix")
}

/// Transpose on the idler (first) factor of a 4×4 two-qubit matrix.
pub fn partial_transpose_matrix(m: &CMatrix) -> Result<CMatrix> {
    if m.shape() != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: m.nrows(),
        });
    }
    // index = 2·idler + signal; swap idler indices between row and column.
    Ok(CMatrix::from_fn(4, 4, |row, col| {
        let (ri, rs) = (row / 2, row % 2);
        let (ci, cs) = (col / 2, col % 2);
        m[(2 * ci + rs, 2 * ri + cs)]
    }))
}

pub fn partial_transpose(rho: &DensityMatrix) -> Result<CMatrix> {
    partial_transpose_matrix(rho.entries())
}

pub fn ppt_spectrum_closed(params: &GeneralizedWernerParams) -> PptSpectrum {
    let eta = params.eta();
    let four_x = 4.0 * params.coherence();
    PptSpectrum {
        alpha1: (1.0 - eta - four_x) / 4.0,
        alpha2: (1.0 - eta + four_x) / 4.0,
        alpha3: (1.0 + 3.0 * eta - 4.0 * eta * params.i_h()) / 4.0,
        alpha4: (1.0 - eta + 4.0 * eta * params.i_h()) / 4.0,
    }
}

/// Ascending eigenvalues of the partial transpose of any 4×4 density matrix.
pub fn ppt_spectrum_numeric(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let vals = linalg::hermitian_eigenvalues(&partial_transpose(rho)?)?;
    Ok([vals[0], vals[1], vals[2], vals[3]])
}

pub fn concurrence_closed(params: &GeneralizedWernerParams) -> f64 {
    let eta = params.eta();
    ((eta - 1.0 + 4.0 * params.coherence()) / 2.0).max(0.0)
}

/// (λ₁², λ₂², λ₃², λ₄²): the spectrum of ρρ̃ in closed form.
pub fn lambda_spectrum_closed(params: &GeneralizedWernerParams) -> [f64; 4] {
    let eta = params.eta();
    let ihv = params.i_h() * params.i_v();
    let ic = params.i_coh();
    let base = (1.0 - eta).powi(2) / 16.0;
    let c1 = eta / 4.0 * (1.0 - eta) + eta * eta * ihv * (1.0 + ic * ic);
    let radicand = ihv * (1.0 + 2.0 * eta - eta * eta * (3.0 - 16.0 * ihv));
    let c2 = eta * ic / 2.0 * radicand.max(0.0).sqrt();
    [base, base, base + c1 - c2, base + c1 + c2]
}

/// Spin-flipped matrix (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
pub fn spin_flip(rho: &DensityMatrix) -> Result<CMatrix> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    let yy = linalg::kron(&linalg::sigma_y(), &linalg::sigma_y());
    Ok(&yy * rho.entries().map(|z| z.conj()) * &yy)
}

/// Descending square roots of the spectrum of ρρ̃.
///
/// ρρ̃ is not Hermitian, but it is similar to √ρ ρ̃ √ρ, which is; the
/// latter is diagonalized instead.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let flipped = spin_flip(rho)?;
    let root = linalg::psd_sqrt(rho.entries())?;
    let vals = linalg::hermitian_eigenvalues(&(&root * flipped * &root))?;
    let mut lambdas = [0.0; 4];
    for (slot, &v) in lambdas.iter_mut().zip(vals.iter().rev()) {
        if v < -SPIN_FLIP_CLAMP {
            return Err(Error::Numeric(format!(
                "spin-flip product has eigenvalue {v:e} < 0"
            )));
        }
        *slot = v.max(0.0).sqrt();
    }
    Ok(lambdas)
}

pub fn concurrence_wootters_numeric(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_lambdas(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Bell state (|HH⟩ + e^{iφ}|VV⟩)/√2 as a density matrix.
pub fn bell_phi(phase: f64) -> DensityMatrix {
    let amp = std::f64::consts::FRAC_1_SQRT_2;
    let ket = [c(amp, 0.0), ZERO, ZERO, expi(phase) * amp];
    DensityMatrix::from_pure(&ket, two_qubit_labels()).expect("Bell state")
}
