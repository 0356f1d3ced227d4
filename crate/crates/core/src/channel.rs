//! State evolution of separable initial states, the environment's reduced
//! density matrix by partial trace and by Kraus reconstruction, completeness
//! accounting and entanglement entropy.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::{hermitian_eig, AlgebraError, ComplexMatrix};
use crate::analytic::{AnalyticError, BackActionKernel};
use crate::hilbert::{HilbertError, ProductSpace, StateVector, TOP_POPULATION_WARN};
use crate::model::TCParams;
use crate::propagator::{BlockPropagators, PropagatorError};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("density matrix is not Hermitian: defect {0:.3e}")]
    NotHermitian(f64),
    #[error("density matrix trace {0} is not 1 within 1e-10")]
    BadTrace(f64),
    #[error("density matrix has eigenvalue {0:.3e} below -1e-10")]
    NotPositive(f64),
    #[error("Kraus completeness defect {0:.3e} exceeds {1:.3e}: truncation too tight")]
    CompletenessDefect(f64, f64),
    #[error("state norm {0} not preserved within 1e-10")]
    NormDrift(f64),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

/// Completeness defects above this are treated as hard truncation failures.
pub const COMPLETENESS_FLAG: f64 = 1e-6;

/// Hermitian, positive semidefinite, unit trace (all within tolerances).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self, ChannelError> {
        let defect = mat.hermiticity_defect();
        if defect > 1e-12 {
            return Err(ChannelError::NotHermitian(defect));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(ChannelError::BadTrace(tr.re));
        }
        let eig = hermitian_eig(&mat)?;
        if let Some(&min) = eig.eigenvalues.first() {
            if min < -1e-10 {
                return Err(ChannelError::NotPositive(min));
            }
        }
        Ok(DensityMatrix { mat })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn purity(&self) -> f64 {
        self.mat.matmul(&self.mat).trace().re
    }
}

/// Which propagator route to evolve with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Factorized,
}

/// Evolution result with the truncation canary attached.
#[derive(Debug, Clone)]
pub struct Evolved {
    pub state: StateVector,
    pub top_population: f64,
}

impl Evolved {
    pub fn truncation_warning(&self) -> bool {
        self.top_population > TOP_POPULATION_WARN
    }
}

/// U(t)·ψ0 with norm preservation checked and the top-two-Fock-level
/// population reported.
pub fn evolve(
    blocks: &BlockPropagators,
    kernel: &BackActionKernel,
    psi0: &StateVector,
    t: f64,
    method: Method,
) -> Result<Evolved, ChannelError> {
    let state = match method {
        Method::Exact => blocks.exact_apply(psi0, t)?,
        Method::Factorized => blocks.factorized_apply(kernel, psi0, t, false)?,
    };
    let norm = state.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(ChannelError::NormDrift(norm));
    }
    let top_population = state.top_fock_population(blocks.space());
    Ok(Evolved { state, top_population })
}

/// Factorized evolution with the back-action factor removed (for the
/// ablation comparison).
pub fn evolve_ablated(
    blocks: &BlockPropagators,
    kernel: &BackActionKernel,
    psi0: &StateVector,
    t: f64,
) -> Result<Evolved, ChannelError> {
    let state = blocks.factorized_apply(kernel, psi0, t, true)?;
    let top_population = state.top_fock_population(blocks.space());
    Ok(Evolved { state, top_population })
}

/// Effective free evolution of the environment:
/// exp(g²G(t)·S⁺S⁻)·exp(-ihtSᶻ)·ξ0, both factors diagonal in m.
pub fn tilde_xi(
    xi0: &StateVector,
    p: &TCParams,
    kernel: &BackActionKernel,
    t: f64,
) -> Result<StateVector, ChannelError> {
    let s = p.s;
    let gb = kernel.g_backaction(t)? * p.g * p.g;
    let dim = xi0.dim();
    let mut amps = Vec::with_capacity(dim);
    for (k, &a) in xi0.amplitudes().iter().enumerate() {
        let m = k as f64 - s;
        let spsm = s * (s + 1.0) - m * (m - 1.0);
        let phase = (gb * spsm).exp() * C64::from_polar(1.0, -p.h * t * m);
        amps.push(a * phase);
    }
    Ok(StateVector::new_unchecked(amps))
}

/// Free boson evolution |Γ(t)⟩ = exp(-iω·a†a·t)|Γ⟩ on the Fock factor.
pub fn gamma_free(gamma0: &StateVector, omega: f64, t: f64) -> StateVector {
    let amps = gamma0
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, &c)| c * C64::from_polar(1.0, -omega * t * n as f64))
        .collect();
    StateVector::new_unchecked(amps)
}

/// ρ_Ξ[m,m'] = Σ_n ψ*(n,m')·ψ(n,m): trace over the boson factor.
pub fn partial_trace_env(psi: &StateVector, sp: &ProductSpace) -> Result<DensityMatrix, ChannelError> {
    let ds = sp.spin.dim();
    let db = sp.fock.dim();
    let amps = psi.amplitudes();
    let mut rho = ComplexMatrix::zeros(ds, ds);
    for m in 0..ds {
        for mp in 0..ds {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..db {
                acc += amps[sp.index(n, m)] * amps[sp.index(n, mp)].conj();
            }
            rho.set(m, mp, acc);
        }
    }
    DensityMatrix::new(rho)
}

/// One Kraus operator per retained Fock index γ, built from the interaction
/// factor and the freely-evolved boson state. Near-zero operators are kept
/// for completeness accounting.
#[derive(Debug, Clone)]
pub struct KrausSet {
    pub ops: Vec<ComplexMatrix>,
    pub completeness_defect: f64,
}

impl KrausSet {
    /// Frobenius norm of each operator, for reporting.
    pub fn operator_norms(&self) -> Vec<f64> {
        self.ops.iter().map(|o| o.frobenius_norm()).collect()
    }
}

/// O^γ[m,m'] = Σ_n ⟨γ,m|W_int(t)|n,m'⟩·c_n(t), where c_n are the amplitudes
/// of the freely-evolved |Γ(t)⟩ supplied by the caller.
pub fn kraus_set(
    blocks: &BlockPropagators,
    kernel: &BackActionKernel,
    t: f64,
    gamma_t: &StateVector,
) -> Result<KrausSet, ChannelError> {
    let sp = *blocks.space();
    let ds = sp.spin.dim();
    let db = sp.fock.dim();
    let w = blocks.interaction_matrix(kernel, t)?;
    let c = gamma_t.amplitudes();
    let mut ops = Vec::with_capacity(db);
    for gamma in 0..db {
        let mut o = ComplexMatrix::zeros(ds, ds);
        for m in 0..ds {
            for mp in 0..ds {
                let mut acc = C64::new(0.0, 0.0);
                for n in 0..db {
                    acc += w.get(sp.index(gamma, m), sp.index(n, mp)) * c[n];
                }
                o.set(m, mp, acc);
            }
        }
        ops.push(o);
    }
    let mut sum = ComplexMatrix::zeros(ds, ds);
    for o in &ops {
        sum = sum.add(&o.adjoint().matmul(o));
    }
    let completeness_defect = sum.sub(&ComplexMatrix::identity(ds)).frobenius_norm();
    if completeness_defect > COMPLETENESS_FLAG {
        return Err(ChannelError::CompletenessDefect(completeness_defect, COMPLETENESS_FLAG));
    }
    Ok(KrausSet { ops, completeness_defect })
}

/// Σ_γ O|ξ̃⟩⟨ξ̃|O†: the environment's reduced state from the Kraus form.
pub fn rho_from_kraus(ks: &KrausSet, xi_t: &StateVector) -> Result<DensityMatrix, ChannelError> {
    let ds = xi_t.dim();
    let mut rho = ComplexMatrix::zeros(ds, ds);
    for o in &ks.ops {
        let v = o.apply(xi_t.amplitudes());
        for i in 0..ds {
            for j in 0..ds {
                let cur = rho.get(i, j);
                rho.set(i, j, cur + v[i] * v[j].conj());
            }
        }
    }
    DensityMatrix::new(rho)
}

/// Von Neumann entropy -Σ λ ln λ (nats); eigenvalues below 1e-14 dropped.
pub fn entanglement_entropy(rho: &DensityMatrix) -> Result<f64, ChannelError> {
    let eig = hermitian_eig(rho.matrix())?;
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l >= 1e-14)
        .map(|&l| -l * l.ln())
        .sum())
}
