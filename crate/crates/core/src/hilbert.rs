//! Spin, Fock and product spaces; collective spin and boson ladder operators;
//! coherent initial states; excitation-number block structure.
//!
//! Conventions fixed here and relied on everywhere else:
//! * spin basis ordered by m ascending, m = -S first;
//! * product basis boson-major, |n⟩⊗|m⟩ at index n·(2S+1) + m_idx;
//! * spin coherent states are rotations of the lowest-weight state |S,-S⟩,
//!   so ⟨Sᶻ⟩ = -S·cosθ.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::algebra::{expm_skew, kron, AlgebraError, ComplexMatrix};

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("2S must be a non-negative integer, got S = {0}")]
    BadSpin(f64),
    #[error("{0} spin-1/2 particles can carry at most S = N/2; got S = {1}")]
    TooFewParticles(u64, f64),
    #[error("operator dimension {0} does not match the {1} factor dimension {2}")]
    LiftMismatch(usize, &'static str, usize),
    #[error(
        "coherent state leakage {0:.3e} exceeds {1:.3e}; increase n_max"
    )]
    CoherentLeakage(f64, f64),
    #[error("state vector norm {0} is not 1 within {1}")]
    NotNormalized(f64, f64),
    #[error("polar angle must satisfy 0 <= theta <= pi, got {0}")]
    BadPolarAngle(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Default bound on the probability weight a coherent state may lose to
/// truncation before construction is refused.
pub const LEAKAGE_THRESHOLD: f64 = 1e-8;

/// Populations in the top two Fock levels above this are reported as a
/// truncation warning during evolution.
pub const TOP_POPULATION_WARN: f64 = 1e-6;

/// Collective-spin space of fixed total spin S, dimension 2S+1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinSpace {
    two_s: u32,
    /// Optional metadata: number of underlying spin-1/2 particles.
    pub n_particles: Option<u64>,
}

impl SpinSpace {
    pub fn new(s: f64) -> Result<Self, HilbertError> {
        let two_s = 2.0 * s;
        if two_s < 0.0 || (two_s - two_s.round()).abs() > 1e-9 {
            return Err(HilbertError::BadSpin(s));
        }
        Ok(SpinSpace { two_s: two_s.round() as u32, n_particles: None })
    }

    pub fn with_particles(s: f64, n: u64) -> Result<Self, HilbertError> {
        let mut sp = Self::new(s)?;
        if (n as f64) < 2.0 * sp.s() {
            return Err(HilbertError::TooFewParticles(n, sp.s()));
        }
        sp.n_particles = Some(n);
        Ok(sp)
    }

    pub fn s(&self) -> f64 {
        self.two_s as f64 / 2.0
    }

    pub fn dim(&self) -> usize {
        self.two_s as usize + 1
    }

    /// m value of basis index k (m ascending, k = 0 ↦ m = -S).
    pub fn m_of(&self, k: usize) -> f64 {
        k as f64 - self.s()
    }
}

/// Truncated boson mode, Fock levels 0..=n_max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub n_max: u32,
}

impl FockSpace {
    pub fn new(n_max: u32) -> Self {
        FockSpace { n_max }
    }

    pub fn dim(&self) -> usize {
        self.n_max as usize + 1
    }
}

/// Tensor product of a truncated boson mode and a collective spin,
/// boson-major ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductSpace {
    pub spin: SpinSpace,
    pub fock: FockSpace,
}

impl ProductSpace {
    pub fn new(spin: SpinSpace, fock: FockSpace) -> Self {
        ProductSpace { spin, fock }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim() * self.fock.dim()
    }

    /// Flat index of |n⟩⊗|m_idx⟩.
    pub fn index(&self, n: usize, m_idx: usize) -> usize {
        debug_assert!(n < self.fock.dim() && m_idx < self.spin.dim());
        n * self.spin.dim() + m_idx
    }

    /// Inverse of `index`.
    pub fn unindex(&self, idx: usize) -> (usize, usize) {
        (idx / self.spin.dim(), idx % self.spin.dim())
    }
}

/// Complex amplitudes on a declared space, unit norm unless explicitly
/// constructed unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self, HilbertError> {
        let v = StateVector { amps };
        let n = v.norm();
        if (n - 1.0).abs() > 1e-10 {
            return Err(HilbertError::NotNormalized(n, 1e-10));
        }
        Ok(v)
    }

    /// Construct without the norm check (for intermediate amplitudes).
    pub fn new_unchecked(amps: Vec<C64>) -> Self {
        StateVector { amps }
    }

    /// Basis state |k⟩ of an n-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[k] = C64::new(1.0, 0.0);
        StateVector { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for z in &mut self.amps {
                *z /= n;
            }
        }
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// ⟨ψ|op|ψ⟩.
    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        let w = op.apply(&self.amps);
        self.amps.iter().zip(&w).map(|(a, b)| a.conj() * b).sum()
    }

    /// |Γ⟩⊗|Ξ⟩ in the boson-major product ordering.
    pub fn product(boson: &StateVector, spin: &StateVector) -> Self {
        let mut amps = Vec::with_capacity(boson.dim() * spin.dim());
        for b in &boson.amps {
            for s in &spin.amps {
                amps.push(b * s);
            }
        }
        StateVector { amps }
    }

    /// Total population in the top two Fock levels; the truncation canary.
    pub fn top_fock_population(&self, space: &ProductSpace) -> f64 {
        let ds = space.spin.dim();
        let nmax = space.fock.dim() - 1;
        let mut pop = 0.0;
        for n in nmax.saturating_sub(1)..=nmax {
            for m in 0..ds {
                pop += self.amps[space.index(n, m)].norm_sqr();
            }
        }
        pop
    }
}

/// Partition of the product basis by total excitation e = n + m + S.
#[derive(Debug, Clone)]
pub struct ExcitationBlocks {
    /// (excitation value, product-basis indices with that excitation),
    /// excitation ascending, indices ordered by n ascending within a block.
    pub blocks: Vec<(u32, Vec<usize>)>,
}

impl ExcitationBlocks {
    pub fn total_indices(&self) -> usize {
        self.blocks.iter().map(|(_, ix)| ix.len()).sum()
    }
}

/// Collective spin operators (Sᶻ, S⁺, S⁻) in the m-ascending basis.
pub fn spin_ops(s: &SpinSpace) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let d = s.dim();
    let sval = s.s();
    let mut sz = ComplexMatrix::zeros(d, d);
    let mut sp = ComplexMatrix::zeros(d, d);
    for k in 0..d {
        let m = s.m_of(k);
        sz.set(k, k, C64::new(m, 0.0));
        if k + 1 < d {
            // S⁺|S,m⟩ = sqrt(S(S+1) - m(m+1)) |S,m+1⟩
            let amp = (sval * (sval + 1.0) - m * (m + 1.0)).sqrt();
            sp.set(k + 1, k, C64::new(amp, 0.0));
        }
    }
    let sm = sp.adjoint();
    (sz, sp, sm)
}

/// Boson ladder operators (a, a†) on the truncated Fock space.
pub fn boson_ops(f: &FockSpace) -> (ComplexMatrix, ComplexMatrix) {
    let d = f.dim();
    let mut a = ComplexMatrix::zeros(d, d);
    for n in 1..d {
        a.set(n - 1, n, C64::new((n as f64).sqrt(), 0.0));
    }
    let adag = a.adjoint();
    (a, adag)
}

/// Which tensor factor an operator lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Boson,
    Spin,
}

/// Embed a single-factor operator into the product space.
pub fn lift(
    op: &ComplexMatrix,
    which: Factor,
    space: &ProductSpace,
) -> Result<ComplexMatrix, HilbertError> {
    match which {
        Factor::Boson => {
            if op.rows() != space.fock.dim() {
                return Err(HilbertError::LiftMismatch(op.rows(), "boson", space.fock.dim()));
            }
            Ok(kron(op, &ComplexMatrix::identity(space.spin.dim()))?)
        }
        Factor::Spin => {
            if op.rows() != space.spin.dim() {
                return Err(HilbertError::LiftMismatch(op.rows(), "spin", space.spin.dim()));
            }
            Ok(kron(&ComplexMatrix::identity(space.fock.dim()), op)?)
        }
    }
}

/// Partition the product basis into blocks of constant excitation
/// e = n + m + S = n + m_idx. The interaction conserves e, so every operator
/// built from {aS⁺, a†S⁻, a†a, Sᶻ} is block-diagonal in this partition.
pub fn excitation_blocks(space: &ProductSpace) -> ExcitationBlocks {
    let ds = space.spin.dim();
    let db = space.fock.dim();
    let e_max = (db - 1) + (ds - 1);
    let mut blocks = Vec::with_capacity(e_max + 1);
    for e in 0..=e_max {
        let mut idx = Vec::new();
        for n in 0..db {
            if e >= n && e - n < ds {
                idx.push(space.index(n, e - n));
            }
        }
        blocks.push((e as u32, idx));
    }
    ExcitationBlocks { blocks }
}

/// Truncated boson coherent state with amplitude α, renormalized, together
/// with the probability weight lost to truncation.
pub fn coherent_boson(alpha: C64, f: &FockSpace) -> Result<(StateVector, f64), HilbertError> {
    let d = f.dim();
    let mut amps = Vec::with_capacity(d);
    // alpha^n / sqrt(n!) built recursively to avoid overflow
    let mut term = C64::new(1.0, 0.0);
    amps.push(term);
    for n in 1..d {
        term *= alpha / C64::new((n as f64).sqrt(), 0.0);
        amps.push(term);
    }
    let weight: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let total = (alpha.norm_sqr()).exp();
    let leakage = (1.0 - weight / total).max(0.0);
    if !leakage.is_finite() || leakage > LEAKAGE_THRESHOLD {
        return Err(HilbertError::CoherentLeakage(leakage, LEAKAGE_THRESHOLD));
    }
    let norm = weight.sqrt();
    for z in &mut amps {
        *z /= norm;
    }
    Ok((StateVector { amps }, leakage))
}

/// Spin coherent state: exp(ξS⁺ - ξ*S⁻)|S,-S⟩ with ξ = (θ/2)e^{-iφ}.
pub fn spin_coherent(theta: f64, phi: f64, s: &SpinSpace) -> Result<StateVector, HilbertError> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(HilbertError::BadPolarAngle(theta));
    }
    let (_, sp, sm) = spin_ops(s);
    let xi = C64::from_polar(theta / 2.0, -phi);
    let gen = sp.scale(xi).sub(&sm.scale(xi.conj()));
    let u = expm_skew(&gen)?;
    let mut v = StateVector::new_unchecked(u.apply(StateVector::basis(s.dim(), 0).amplitudes()));
    v.normalize();
    Ok(v)
}
