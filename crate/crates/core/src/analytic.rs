//! The scalar function family behind the factorized propagator: the
//! interaction envelope f, the factorization coefficients K₁, K₂, ζ, K₃, the
//! double series M, the back-action coefficient G (pure imaginary), the real
//! anisotropy strength A and the energy shift ε = A·S(S+1).
//!
//! All series are entire; truncation stops once two consecutive terms fall
//! below `series_tol` relative to the running sum, with a hard cap as a bug
//! guard. Near resonance the closed forms suffer 0/0 cancellation, so small
//! |δ·t| switches to explicit Taylor branches in powers of δ.

use num_complex::Complex64 as C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("series failed to converge within {0} terms (|t·δ| = {1:.3e})")]
    SeriesCap(usize, f64),
}

/// Hard cap on series terms; reaching it signals a bug, not a physics limit.
pub const SERIES_CAP: usize = 200;

/// Evaluator for the back-action function family at fixed (δ, g, S).
#[derive(Debug, Clone, Copy)]
pub struct BackActionKernel {
    pub delta: f64,
    pub coupling: f64,
    pub spin: f64,
    pub series_tol: f64,
    pub resonance_threshold: f64,
}

/// The four factorization coefficients of the three-step rearrangement.
#[derive(Debug, Clone, Copy)]
pub struct KFunctions {
    pub k1: C64,
    pub k2: C64,
    pub zeta: C64,
    pub k3: C64,
}

impl BackActionKernel {
    pub fn new(delta: f64, coupling: f64, spin: f64) -> Self {
        BackActionKernel {
            delta,
            coupling,
            spin,
            series_tol: 1e-15,
            resonance_threshold: 1e-8,
        }
    }

    /// Kernel matching a parameter set (δ, g, S taken from it).
    pub fn from_params(p: &crate::model::TCParams) -> Self {
        Self::new(p.delta(), p.g, p.s)
    }

    fn near_resonance(&self, t: f64) -> bool {
        (t * self.delta).abs() < self.resonance_threshold
    }

    /// f(t) = (e^{-itδ} - 1)/δ, with the limit branch -it(1 - itδ/2 + …).
    pub fn f(&self, t: f64) -> C64 {
        if self.near_resonance(t) {
            let x = C64::new(0.0, -t * self.delta);
            // -it (1 + x/2 + x²/6 + x³/24)
            let poly = C64::new(1.0, 0.0)
                + x * 0.5
                + x * x * (1.0 / 6.0)
                + x * x * x * (1.0 / 24.0);
            return C64::new(0.0, -t) * poly;
        }
        (C64::from_polar(1.0, -t * self.delta) - 1.0) / self.delta
    }

    /// K₁(t) = i(sin tδ - tδ·cos tδ)/δ², pure imaginary.
    pub fn k1(&self, t: f64) -> C64 {
        if self.near_resonance(t) {
            // i(t³δ/3 - t⁵δ³/30)
            let im = t.powi(3) * self.delta / 3.0 - t.powi(5) * self.delta.powi(3) / 30.0;
            return C64::new(0.0, im);
        }
        let u = t * self.delta;
        C64::new(0.0, (u.sin() - u * u.cos()) / (self.delta * self.delta))
    }

    /// d/dt K₁ = i·t·sin(tδ); entire, no branch needed.
    fn k1_dot(&self, t: f64) -> C64 {
        C64::new(0.0, t * (t * self.delta).sin())
    }

    /// (K₁, K₂, ζ, K₃) with K₂ = K₁ - ¼Σ t^{2n}δ^{2n-2}/(n!)²,
    /// ζ the double series of the reordering step, K₃ = -2K₂ + ζ.
    pub fn k_functions(&self, t: f64) -> Result<KFunctions, AnalyticError> {
        let k1 = self.k1(t);
        if self.near_resonance(t) {
            let d = self.delta;
            let k2 = k1
                - C64::new(
                    0.25 * (t * t + t.powi(4) * d * d / 4.0 + t.powi(6) * d.powi(4) / 36.0),
                    0.0,
                );
            let zeta = C64::new(
                t.powi(4) * d * d / 12.0,
                t.powi(3) * d / 2.0 - t.powi(5) * d.powi(3) / 24.0,
            );
            let k3 = zeta - k2 * 2.0;
            return Ok(KFunctions { k1, k2, zeta, k3 });
        }

        // K₂ correction: ¼ Σ_{n≥1} t^{2n} δ^{2n-2} / (n!)², real.
        let mut corr = 0.0f64;
        let mut term = t * t; // n = 1
        let mut below = 0;
        let mut n = 1usize;
        loop {
            corr += term;
            if term.abs() <= self.series_tol * corr.abs().max(f64::MIN_POSITIVE) {
                below += 1;
                if below >= 2 {
                    break;
                }
            } else {
                below = 0;
            }
            n += 1;
            if n > SERIES_CAP {
                return Err(AnalyticError::SeriesCap(SERIES_CAP, t * self.delta));
            }
            // t^{2n} δ^{2n-2}/(n!)² from the previous term
            term *= (t * self.delta) * (t * self.delta) / ((n * n) as f64);
        }
        let k2 = k1 - C64::new(0.25 * corr, 0.0);

        // ζ = (1/δ²) Σ_{ℓ≥2} ((-x)^ℓ/ℓ!) Σ_{1≤j<ℓ} x^j/j!, x = -itδ
        let x = C64::new(0.0, -t * self.delta);
        // prefix[j] = Σ_{k=1..j} x^k/k!
        let mut prefixes: Vec<C64> = Vec::with_capacity(SERIES_CAP + 2);
        prefixes.push(C64::new(0.0, 0.0));
        let mut xpow = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for j in 1..SERIES_CAP + 2 {
            xpow *= x / (j as f64);
            acc += xpow;
            prefixes.push(acc);
        }
        let mut zeta = C64::new(0.0, 0.0);
        let mut nxl = -x; // (-x)^ℓ/ℓ! at ℓ = 1
        let mut running = 0.0f64;
        below = 0;
        let mut l = 1usize;
        loop {
            l += 1;
            if l > SERIES_CAP {
                return Err(AnalyticError::SeriesCap(SERIES_CAP, t * self.delta));
            }
            nxl *= -x / (l as f64);
            let term = nxl * prefixes[l - 1];
            zeta += term;
            running = running.max(zeta.norm());
            if term.norm() <= self.series_tol * running.max(f64::MIN_POSITIVE) {
                below += 1;
                if below >= 2 {
                    break;
                }
            } else {
                below = 0;
            }
        }
        zeta /= self.delta * self.delta;
        let k3 = zeta - k2 * 2.0;
        Ok(KFunctions { k1, k2, zeta, k3 })
    }

    /// M(t) = Q - Q̄ with Q = -(1/2δ²) Σ_{n≥2} (xⁿ/n!) Σ_{1≤ℓ<n} (x̄^ℓ/ℓ!),
    /// x = -itδ; pure imaginary by construction.
    pub fn m(&self, t: f64) -> Result<C64, AnalyticError> {
        if self.near_resonance(t) {
            let d = self.delta;
            let im = t.powi(3) * d / 2.0 + t.powi(5) * d.powi(3) / 24.0;
            return Ok(C64::new(0.0, im));
        }
        let q = self.q_series(t, false)?;
        Ok(q - q.conj())
    }

    /// dM/dt by term-wise differentiation of the same double series.
    fn m_dot(&self, t: f64) -> Result<C64, AnalyticError> {
        if self.near_resonance(t) {
            let d = self.delta;
            let im = 3.0 * t * t * d / 2.0 + 5.0 * t.powi(4) * d.powi(3) / 24.0;
            return Ok(C64::new(0.0, im));
        }
        let qd = self.q_series(t, true)?;
        Ok(qd - qd.conj())
    }

    /// Σ over the (n,ℓ) grid of -(1/2δ²) xⁿ x̄^ℓ/(n!ℓ!), optionally with the
    /// ∂/∂t factor (n+ℓ)/t applied term-wise.
    fn q_series(&self, t: f64, differentiate: bool) -> Result<C64, AnalyticError> {
        let x = C64::new(0.0, -t * self.delta);
        let xb = x.conj();
        // conjugate-power prefix sums: prefix[m] = Σ_{ℓ=1..m} x̄^ℓ/ℓ!
        let mut prefixes: Vec<C64> = Vec::with_capacity(SERIES_CAP + 2);
        prefixes.push(C64::new(0.0, 0.0));
        let mut xbl = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for l in 1..SERIES_CAP + 2 {
            xbl *= xb / (l as f64);
            acc += xbl;
            prefixes.push(acc);
        }
        // weighted prefixes for the derivative: Σ ℓ·x̄^ℓ/ℓ! = x̄·Σ x̄^{ℓ-1}/(ℓ-1)!
        let mut wprefixes: Vec<C64> = Vec::with_capacity(SERIES_CAP + 2);
        if differentiate {
            wprefixes.push(C64::new(0.0, 0.0));
            let mut xbl = C64::new(1.0, 0.0);
            let mut acc = C64::new(0.0, 0.0);
            for l in 1..SERIES_CAP + 2 {
                xbl *= xb / (l as f64);
                acc += xbl * (l as f64);
                wprefixes.push(acc);
            }
        }
        let mut q = C64::new(0.0, 0.0);
        let mut xn = x; // xⁿ/n! at n = 1
        let mut below = 0;
        let mut running = 0.0f64;
        let mut n = 1usize;
        loop {
            n += 1;
            if n > SERIES_CAP {
                return Err(AnalyticError::SeriesCap(SERIES_CAP, t * self.delta));
            }
            xn *= x / (n as f64);
            let term = if differentiate {
                // d/dt [xⁿ x̄^ℓ] = (n+ℓ)/t · xⁿ x̄^ℓ for x ∝ t
                (xn * (n as f64) * prefixes[n - 1] + xn * wprefixes[n - 1]) / t
            } else {
                xn * prefixes[n - 1]
            };
            q += term;
            running = q.norm().max(running);
            if term.norm() <= self.series_tol * running.max(f64::MIN_POSITIVE) {
                below += 1;
                if below >= 2 {
                    break;
                }
            } else {
                below = 0;
            }
        }
        Ok(q * (-0.5 / (self.delta * self.delta)))
    }

    /// Back-action coefficient G(t) = -2K₁(t) + M(t); pure imaginary,
    /// vanishes identically at resonance, independent of g and S.
    pub fn g_backaction(&self, t: f64) -> Result<C64, AnalyticError> {
        if self.delta == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        Ok(self.m(t)? - self.k1(t) * 2.0)
    }

    /// Anisotropy strength A(t) = i·g²·dG/dt, real; the derivative is taken
    /// term-wise on the series, never by finite differences.
    pub fn anisotropy(&self, t: f64) -> Result<f64, AnalyticError> {
        if self.delta == 0.0 || t == 0.0 {
            return Ok(0.0);
        }
        if self.near_resonance(t) {
            let d = self.delta;
            return Ok(self.coupling * self.coupling
                * (t * t * d / 2.0 - 13.0 * t.powi(4) * d.powi(3) / 24.0));
        }
        let g_dot = self.m_dot(t)? - self.k1_dot(t) * 2.0;
        let a = C64::new(0.0, 1.0) * g_dot * self.coupling * self.coupling;
        Ok(a.re)
    }

    /// ε(t) = A(t)·S(S+1).
    pub fn epsilon(&self, t: f64) -> Result<f64, AnalyticError> {
        Ok(self.anisotropy(t)? * self.spin * (self.spin + 1.0))
    }
}
