//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! with the measured quantity before asserting it.

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tcspin::algebra::{expm_skew, hermitian_eig, ComplexMatrix};
use tcspin::analytic::BackActionKernel;
use tcspin::channel::{
    entanglement_entropy, evolve, evolve_ablated, gamma_free, kraus_set, partial_trace_env,
    rho_from_kraus, tilde_xi, Method,
};
use tcspin::hilbert::{coherent_boson, spin_coherent, FockSpace, StateVector};
use tcspin::model::{build_h, verify_commutator_identities, TCParams};
use tcspin::propagator::BlockPropagators;
use tcspin::zassenhaus::{surviving_commutator_forms, zassenhaus_term, OperatorPoly};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Least-squares slope of ln(err) against ln(t).
fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in points {
        let (x, y) = (t.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

#[test]
fn criterion_1_algebraic_identity_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20240817);
    let mut worst_rel = 0.0f64;
    for draw in 0..20 {
        let two_s = rng.gen_range(1..=10u32); // S ≤ 5
        let s = two_s as f64 / 2.0;
        let n_max = rng.gen_range(4..=16u32);
        let omega = rng.gen_range(0.5..1.5);
        let h = rng.gen_range(0.0..2.0);
        let g = rng.gen_range(0.01..1.0);
        let p = TCParams::new(omega, h, g, s, n_max).unwrap();
        let rep = verify_commutator_identities(&p, &p.space()).unwrap();
        let rel = rep.max_residual() / rep.scale.max(1.0);
        worst_rel = worst_rel.max(rel);
        assert!(
            rep.passes(1e-11),
            "draw {draw} (S={s}, n_max={n_max}): residuals {rep:?}"
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_rel <= 1e-11 && elapsed < 10.0;
    report(
        "1 (commutator identities)",
        pass,
        &format!("worst relative residual {worst_rel:.3e}, runtime {elapsed:.2}s"),
    );
    assert!(elapsed < 10.0, "runtime {elapsed:.2}s exceeds 10s");
}

#[test]
fn criterion_2_zassenhaus_order_check() {
    let start = Instant::now();
    let p = TCParams::detuned(3.0, -0.5, 10).unwrap();
    let sp = p.space();
    let x_sym = OperatorPoly::free_part();
    let y_sym = OperatorPoly::interaction();
    let c2 = zassenhaus_term(2, &x_sym, &y_sym).unwrap().materialize(&p, &sp);
    let c3 = zassenhaus_term(3, &x_sym, &y_sym).unwrap().materialize(&p, &sp);
    let h = build_h(&p, &sp).unwrap();
    let eig = hermitian_eig(&h).unwrap();
    let y = tcspin::model::build_y(&p, &sp).unwrap();
    let x = tcspin::model::build_x(&p, &sp).unwrap();

    // Every factor is block-diagonal; the symbolic terms represent the
    // untruncated algebra exactly on complete excitation blocks
    // (e = n + m + S ≤ n_max), so the residual is measured there.
    let complete = |mat: &ComplexMatrix| {
        ComplexMatrix::from_fn(mat.rows(), mat.cols(), |i, j| {
            let (ni, mi) = sp.unindex(i);
            let (nj, mj) = sp.unindex(j);
            if ni + mi > p.n_max as usize || nj + mj > p.n_max as usize {
                C64::new(0.0, 0.0)
            } else {
                mat.get(i, j)
            }
        })
    };

    let mut points = Vec::new();
    for &t in &[1e-3, 2e-3, 3.16e-3, 5e-3, 1e-2] {
        // λ = -it: factors exp(λ³C̃₃)·exp(λ²C̃₂)·exp(λY)·exp(λX)
        let lam3 = C64::new(0.0, t) * t * t; // λ³ = i t³
        let exact = eig.map_spectrum(|l| C64::from_polar(1.0, -l * t));
        let f3 = expm_skew(&c3.scale(lam3)).unwrap();
        let f2 = expm_skew(&c2.scale(C64::new(-t * t, 0.0))).unwrap();
        let fy = expm_skew(&y.scale(C64::new(0.0, -t))).unwrap();
        let fx = expm_skew(&x.scale(C64::new(0.0, -t))).unwrap();
        let prod = f3.matmul(&f2).matmul(&fy).matmul(&fx);
        let resid = complete(&exact.sub(&prod)).frobenius_norm();
        points.push((t, resid));
    }
    let slope = loglog_slope(&points);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = slope >= 3.9 && elapsed < 30.0;
    report(
        "2 (factorization order)",
        pass,
        &format!("log-log slope {slope:.3}, runtime {elapsed:.2}s"),
    );
    assert!(slope >= 3.9, "slope {slope}");
    assert!(elapsed < 30.0, "runtime {elapsed:.2}s exceeds 30s");
}

#[test]
fn criterion_3_symbolic_survival_check() {
    let mut all = true;
    for n in 1..=4u32 {
        let forms = surviving_commutator_forms(n).unwrap();
        all &= forms.ad_x_match && forms.ad_y_match;
        assert!(
            forms.ad_x_match,
            "order {n}: engine ad_X^n Y differs from closed form:\n{}",
            forms.ad_x_engine
        );
        assert!(
            forms.ad_y_match,
            "order {n}: engine ad_Y ad_X^(n-1) Y differs from closed form:\n{}",
            forms.ad_y_engine
        );
    }
    report("3 (symbolic survival)", all, "orders 1..=4 match closed forms exactly");
}

#[test]
fn criterion_4_analytic_function_suite() {
    let start = Instant::now();
    let mut pass = true;

    // G pure imaginary, G ≡ 0 at resonance
    let k0 = BackActionKernel::new(0.0, 0.1, 10.0);
    for i in 0..=100 {
        let t = 0.05 * i as f64;
        assert_eq!(k0.g_backaction(t).unwrap(), C64::new(0.0, 0.0), "G₀({t}) ≠ 0");
    }
    let mut worst_re_g = 0.0f64;
    for &delta in &[-0.5, -0.1, 0.3, 1.0] {
        let k = BackActionKernel::new(delta, 0.1, 10.0);
        for i in 1..=100 {
            let t = 0.05 * i as f64;
            let g = k.g_backaction(t).unwrap();
            worst_re_g = worst_re_g.max(g.re.abs());
        }
    }
    pass &= worst_re_g <= 1e-13;
    assert!(worst_re_g <= 1e-13, "|Re G| = {worst_re_g:.3e}");

    // A real and odd in δ
    let mut worst_odd = 0.0f64;
    for &d in &[0.1, 0.25, 0.5, 1.0] {
        for i in 1..=40 {
            let t = 0.1 * i as f64;
            let ap = BackActionKernel::new(d, 0.1, 10.0).anisotropy(t).unwrap();
            let am = BackActionKernel::new(-d, 0.1, 10.0).anisotropy(t).unwrap();
            assert!(ap.is_finite() && am.is_finite());
            worst_odd = worst_odd.max((ap + am).abs());
        }
    }
    pass &= worst_odd <= 1e-12;
    assert!(worst_odd <= 1e-12, "A_δ + A_(-δ) = {worst_odd:.3e}");

    // small-t law: A = c·t² with O(t⁴) residual
    let k = BackActionKernel::new(-0.5, 1.0, 10.0);
    let c = k.anisotropy(1e-3).unwrap() / 1e-6;
    assert!(c.abs() > 1e-3, "leading quadratic coefficient vanishes");
    let mut worst_ratio = 0.0f64;
    for &t in &[2e-3, 5e-3, 1e-2] {
        let resid = (k.anisotropy(t).unwrap() - c * t * t).abs();
        worst_ratio = worst_ratio.max(resid / t.powi(4));
    }
    pass &= worst_ratio < 10.0;
    assert!(worst_ratio < 10.0, "residual/t⁴ = {worst_ratio:.3}");

    // route consistency K₃ - |f|²/2 = -2K₁ + M
    let mut worst_chain = 0.0f64;
    for &(d, t) in &[(-0.5, 1.0), (-0.5, 2.0), (0.7, 2.0), (1.2, 3.3), (-0.1, 4.9)] {
        let k = BackActionKernel::new(d, 0.1, 10.0);
        let kf = k.k_functions(t).unwrap();
        let lhs = kf.k3 - k.f(t).norm_sqr() / 2.0;
        let rhs = k.m(t).unwrap() - k.k1(t) * 2.0;
        worst_chain = worst_chain.max((lhs - rhs).norm());
    }
    pass &= worst_chain <= 1e-13;
    assert!(worst_chain <= 1e-13, "route gap {worst_chain:.3e}");

    let elapsed = start.elapsed().as_secs_f64();
    pass &= elapsed < 5.0;
    report(
        "4 (analytic functions)",
        pass,
        &format!(
            "|Re G| ≤ {worst_re_g:.1e}, oddness ≤ {worst_odd:.1e}, chain ≤ {worst_chain:.1e}, runtime {elapsed:.2}s"
        ),
    );
    assert!(elapsed < 5.0);
}

#[test]
fn criterion_5_anisotropy_phenomenology() {
    // minima over the valid window t < S/4 at S = 10
    let g10 = 0.1;
    let window = 2.5;
    let min_over_window = |delta: f64| -> f64 {
        let k = BackActionKernel::new(delta, g10, 10.0);
        let mut min = f64::INFINITY;
        for i in 1..=2500 {
            let t = window * i as f64 / 2500.0;
            min = min.min(k.anisotropy(t).unwrap());
        }
        min
    };
    let min_01 = min_over_window(-0.1);
    let min_05 = min_over_window(-0.5);
    let deeper = min_01 < min_05;

    // exactly one sign change in t ∈ [1, 4] for δ = -0.5
    let k = BackActionKernel::new(-0.5, g10, 10.0);
    let mut changes = 0;
    let mut prev = k.anisotropy(1.0).unwrap();
    for i in 1..=3000 {
        let t = 1.0 + 3.0 * i as f64 / 3000.0;
        let cur = k.anisotropy(t).unwrap();
        if prev.signum() != cur.signum() {
            changes += 1;
        }
        prev = cur;
    }

    // |A| at (δ=-0.5, t=1) strictly decreasing over S with gS = 1
    let mut mags = Vec::new();
    for &s in &[3.0, 5.0, 10.0, 20.0] {
        let k = BackActionKernel::new(-0.5, 1.0 / s, s);
        mags.push(k.anisotropy(1.0).unwrap().abs());
    }
    let monotone = mags.windows(2).all(|w| w[0] > w[1]);

    let pass = deeper && changes == 1 && monotone;
    report(
        "5 (anisotropy phenomenology)",
        pass,
        &format!(
            "min A: {min_01:.4e} (δ=-0.1) vs {min_05:.4e} (δ=-0.5); sign changes in [1,4]: {changes}; |A| over S: {mags:?}"
        ),
    );
    assert!(deeper, "minimum not deeper for smaller |δ|: {min_01} vs {min_05}");
    assert_eq!(changes, 1, "expected exactly one sign change in [1,4]");
    assert!(monotone, "|A| not strictly decreasing in S: {mags:?}");
}

#[test]
fn criterion_6_propagator_agreement() {
    let start = Instant::now();
    let e_max = 12u32;

    // unitarity of both routes across the S scan
    let mut worst_unit = 0.0f64;
    let mut errors_at_1 = Vec::new();
    for &s in &[5.0, 10.0, 20.0, 40.0] {
        let p = TCParams::detuned(s, -0.5, e_max).unwrap();
        let blocks = BlockPropagators::new(&p).unwrap();
        let kernel = BackActionKernel::from_params(&p);
        let dim = p.space().dim() as f64;
        let (ue, uf) = blocks.unitarity_defects(&kernel, 1.0).unwrap();
        assert!(ue <= 1e-9 * dim, "exact route unitarity {ue:.3e} at S={s}");
        assert!(uf <= 1e-9 * dim, "factorized route unitarity {uf:.3e} at S={s}");
        worst_unit = worst_unit.max(ue.max(uf));
        errors_at_1.push(blocks.sector_error(&kernel, 1.0, e_max).unwrap());
    }
    let monotone = errors_at_1.windows(2).all(|w| w[0] > w[1]);

    // small-t slope at S = 10
    let p = TCParams::detuned(10.0, -0.5, e_max).unwrap();
    let blocks = BlockPropagators::new(&p).unwrap();
    let kernel = BackActionKernel::from_params(&p);
    let mut points = Vec::new();
    for &t in &[1e-3, 2e-3, 3.16e-3, 5e-3, 1e-2] {
        points.push((t, blocks.sector_error(&kernel, t, e_max).unwrap()));
    }
    let slope = loglog_slope(&points);

    // full-matrix unitarity at desk scale, both routes
    let dim_full = p.space().dim() as f64;
    for t in [0.5, 1.0] {
        let ue = blocks.exact_matrix(t).unwrap();
        let uf = blocks.factorized_matrix(&kernel, t).unwrap();
        assert!(ue.unitarity_defect() <= 1e-9 * dim_full);
        assert!(uf.unitarity_defect() <= 1e-9 * dim_full);
    }

    let elapsed = start.elapsed().as_secs_f64();
    let pass = monotone && slope >= 2.0 && elapsed < 300.0;
    report(
        "6 (propagator agreement)",
        pass,
        &format!(
            "slope {slope:.3}, errors over S {errors_at_1:?}, worst unitarity {worst_unit:.2e}, runtime {elapsed:.2}s"
        ),
    );
    assert!(slope >= 2.0, "small-t slope {slope}");
    assert!(monotone, "error not strictly decreasing in S: {errors_at_1:?}");
    assert!(elapsed < 300.0, "runtime {elapsed:.2}s exceeds 5 min");
}

#[test]
fn criterion_7_channel_suite() {
    let p = TCParams::detuned(3.0, -0.5, 20).unwrap();
    let sp = p.space();
    let blocks = BlockPropagators::new(&p).unwrap();
    let kernel = BackActionKernel::from_params(&p);
    let (gamma, _) = coherent_boson(C64::new(1.0, 0.0), &FockSpace::new(20)).unwrap();
    let xi = spin_coherent(std::f64::consts::FRAC_PI_2, 0.0, &sp.spin).unwrap();
    let psi0 = StateVector::product(&gamma, &xi);

    let mut worst_defect = 0.0f64;
    let mut worst_gap = 0.0f64;
    let mut worst_ablation_coherent = 0.0f64;
    let mut worst_ablation_eigen = 0.0f64;

    let xi_eigen = StateVector::basis(sp.spin.dim(), 2);
    let psi0_eigen = StateVector::product(&gamma, &xi_eigen);

    for i in 1..=4 {
        let t = 0.5 * i as f64;
        let gamma_t = gamma_free(&gamma, p.omega, t);
        let ks = kraus_set(&blocks, &kernel, t, &gamma_t).unwrap();
        worst_defect = worst_defect.max(ks.completeness_defect);

        let xi_t = tilde_xi(&xi, &p, &kernel, t).unwrap();
        let rho_k = rho_from_kraus(&ks, &xi_t).unwrap();
        let ev = evolve(&blocks, &kernel, &psi0, t, Method::Factorized).unwrap();
        let rho_pt = partial_trace_env(&ev.state, &sp).unwrap();
        worst_gap = worst_gap.max(rho_k.matrix().sub(rho_pt.matrix()).max_abs());

        // ablation comparison, spin-coherent environment
        let ev_abl = evolve_ablated(&blocks, &kernel, &psi0, t).unwrap();
        let s_full = entanglement_entropy(&rho_pt).unwrap();
        let s_abl =
            entanglement_entropy(&partial_trace_env(&ev_abl.state, &sp).unwrap()).unwrap();
        worst_ablation_coherent = worst_ablation_coherent.max((s_full - s_abl).abs());

        // ablation comparison, Sᶻ-eigenstate environment (back-action factor
        // reduces to a global phase there)
        let ev_e = evolve(&blocks, &kernel, &psi0_eigen, t, Method::Factorized).unwrap();
        let ev_ea = evolve_ablated(&blocks, &kernel, &psi0_eigen, t).unwrap();
        let se = entanglement_entropy(&partial_trace_env(&ev_e.state, &sp).unwrap()).unwrap();
        let sea = entanglement_entropy(&partial_trace_env(&ev_ea.state, &sp).unwrap()).unwrap();
        worst_ablation_eigen = worst_ablation_eigen.max((se - sea).abs());
    }

    let pass_defect = worst_defect <= 1e-8;
    let pass_gap = worst_gap <= 1e-10;
    let pass_ablation = worst_ablation_coherent <= 1e-12;
    report(
        "7 (channel suite)",
        pass_defect && pass_gap && pass_ablation,
        &format!(
            "completeness defect {worst_defect:.3e}; dual-route gap {worst_gap:.3e}; \
             ablation entropy shift {worst_ablation_coherent:.3e} (spin-coherent Ξ), \
             {worst_ablation_eigen:.3e} (Sᶻ-eigenstate Ξ)"
        ),
    );
    assert!(pass_defect, "completeness defect {worst_defect:.3e}");
    assert!(pass_gap, "dual-route gap {worst_gap:.3e}");
    assert!(
        worst_ablation_eigen <= 1e-12,
        "eigenstate-environment ablation shift {worst_ablation_eigen:.3e}"
    );
    // Literal form of the criterion: for a generic (spin-coherent)
    // environment the back-action factor sits between the free factor and
    // the entangling factor, so removing it changes the product state fed
    // into the interaction and shifts the entropy at order g²|G|. The
    // invariance holds only for Sᶻ-eigenstate environments (asserted above)
    // or at resonance, where the factor degenerates to a phase.
    assert!(
        pass_ablation,
        "ablation entropy shift {worst_ablation_coherent:.3e} exceeds 1e-12: the back-action \
         factor is a local unitary applied before the entangling factor, not after it, so \
         generic-input entropy invariance does not hold (see decisions ledger)"
    );
}
