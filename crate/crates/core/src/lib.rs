//! Numerical engine for a quantum oscillator exchanging energy with a large
//! collective spin. Provides an exact propagator oracle on truncated product
//! spaces, the large-S factorized propagator with its analytically derived
//! back-action functions, a symbolic engine verifying the factorization order
//! by order, and Kraus-channel extraction for the environment's reduced
//! dynamics.
//!
//! Module map:
//! * [`algebra`] — dense complex kernel (kron, Hermitian eigen, skew expm);
//! * [`hilbert`] — spaces, ladder operators, coherent states, blocks;
//! * [`model`] — the Hamiltonian pieces X, Y, Ȳ and identity checks;
//! * [`zassenhaus`] — exact symbolic factorization terms and pruning;
//! * [`analytic`] — the scalar kernel family f, K₁..K₃, ζ, M, G, A, ε;
//! * [`propagator`] — exact vs factorized propagators and error metrics;
//! * [`channel`] — state evolution, partial trace, Kraus sets, entropy.

pub mod algebra;
pub mod analytic;
pub mod channel;
pub mod hilbert;
pub mod model;
pub mod propagator;
pub mod zassenhaus;

pub use algebra::{commutator, expm_skew, hermitian_eig, kron, ComplexMatrix, HermitianEigen};
pub use analytic::BackActionKernel;
pub use channel::{
    entanglement_entropy, evolve, gamma_free, kraus_set, partial_trace_env, rho_from_kraus,
    tilde_xi, DensityMatrix, KrausSet, Method,
};
pub use hilbert::{
    boson_ops, coherent_boson, excitation_blocks, lift, spin_coherent, spin_ops, Factor,
    FockSpace, ProductSpace, SpinSpace, StateVector,
};
pub use model::{
    build_h, build_x, build_y, build_ybar, verify_commutator_identities, CommutatorReport,
    TCParams,
};
pub use propagator::{
    exact_propagator, factorized_propagator, h_xi_eff, propagator_error, within_validity_window,
    x_eff_consistency, BlockPropagators, EffectiveForm, PropagatorPair,
};
pub use zassenhaus::{
    enumerate_tuples, large_s_prune, normal_order_commute, surviving_commutator_forms,
    zassenhaus_term, Gen, Monomial, OperatorPoly, ZassenhausTuple,
};
