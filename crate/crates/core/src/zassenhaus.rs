//! Symbolic algebra over normal-ordered words in {a†, a, S⁺, Sᶻ, S⁻} with
//! exact rational coefficients carrying explicit powers of the coupling g and
//! the detuning δ. Implements the left-oriented Zassenhaus recursion with its
//! tuple constraints, the large-S pruning rule, and the closed forms of the
//! two commutator families that survive it.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::algebra::ComplexMatrix;
use crate::hilbert::{boson_ops, lift, spin_ops, Factor, ProductSpace};
use crate::model::TCParams;

/// Orders above this are refused: the tuple sets grow factorially and the
/// closed forms make them unnecessary.
pub const ORDER_CAP: u32 = 8;

#[derive(Debug, Error)]
pub enum ZassenhausError {
    #[error("order {0} exceeds the configured cap {1}")]
    CapExceeded(u32, u32),
    #[error("Zassenhaus terms start at order 2, got {0}")]
    BadOrder(u32),
}

/// Generator labels, ranked in normal order: bosons before spins, a† before
/// a, then S⁺, Sᶻ, S⁻.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Gen {
    ADag,
    A,
    SPlus,
    SZ,
    SMinus,
}

impl Gen {
    fn is_spin(self) -> bool {
        matches!(self, Gen::SPlus | Gen::SZ | Gen::SMinus)
    }

    fn label(self) -> &'static str {
        match self {
            Gen::ADag => "a†",
            Gen::A => "a",
            Gen::SPlus => "S+",
            Gen::SZ => "Sz",
            Gen::SMinus => "S-",
        }
    }
}

/// One normal-ordered product: coeff · g^g_power · δ^delta_power · ops.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coeff: BigRational,
    pub g_power: u32,
    pub delta_power: u32,
    pub ops: Vec<Gen>,
}

impl Monomial {
    pub fn new(coeff: BigRational, g_power: u32, delta_power: u32, ops: Vec<Gen>) -> Self {
        debug_assert!(is_normal_ordered(&ops));
        Monomial { coeff, g_power, delta_power, ops }
    }

    pub fn spin_order(&self) -> usize {
        self.ops.iter().filter(|g| g.is_spin()).count()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        if self.g_power > 0 {
            write!(f, " * g^{}", self.g_power)?;
        }
        if self.delta_power > 0 {
            write!(f, " * d^{}", self.delta_power)?;
        }
        if self.ops.is_empty() {
            write!(f, " * 1")?;
        } else {
            for op in &self.ops {
                write!(f, " {}", op.label())?;
            }
        }
        Ok(())
    }
}

fn rank(g: Gen) -> u8 {
    match g {
        Gen::ADag => 0,
        Gen::A => 1,
        Gen::SPlus => 2,
        Gen::SZ => 3,
        Gen::SMinus => 4,
    }
}

fn is_normal_ordered(ops: &[Gen]) -> bool {
    ops.windows(2).all(|w| rank(w[0]) <= rank(w[1]))
}

type Key = (u32, u32, Vec<Gen>);

/// Sum of monomials with merged like terms; zero coefficients removed.
/// Stored sorted by (δ-power, g-power, word) so equality is structural.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorPoly {
    terms: Vec<Monomial>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly { terms: Vec::new() }
    }

    pub fn from_monomials(monos: impl IntoIterator<Item = Monomial>) -> Self {
        let mut map: BTreeMap<Key, BigRational> = BTreeMap::new();
        for m in monos {
            let key = (m.delta_power, m.g_power, m.ops);
            *map.entry(key).or_insert_with(BigRational::zero) += m.coeff;
        }
        let terms = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((dp, gp, ops), coeff)| Monomial { coeff, g_power: gp, delta_power: dp, ops })
            .collect();
        OperatorPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_monomials(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_monomials(
            self.terms.iter().cloned().chain(other.terms.iter().map(|m| Monomial {
                coeff: -m.coeff.clone(),
                ..m.clone()
            })),
        )
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::from_monomials(self.terms.iter().map(|m| Monomial {
            coeff: &m.coeff * c,
            ..m.clone()
        }))
    }

    /// The free generator in default units: ω = 1, h = 1 + δ, so that
    /// X = a†a + Sᶻ + δ·Sᶻ. On the excitation-conserving algebra only the
    /// δ part survives commutation.
    pub fn free_part() -> Self {
        Self::from_monomials([
            Monomial::new(BigRational::one(), 0, 0, vec![Gen::ADag, Gen::A]),
            Monomial::new(BigRational::one(), 0, 0, vec![Gen::SZ]),
            Monomial::new(BigRational::one(), 0, 1, vec![Gen::SZ]),
        ])
    }

    /// The interaction g(aS⁺ + a†S⁻).
    pub fn interaction() -> Self {
        Self::from_monomials([
            Monomial::new(BigRational::one(), 1, 0, vec![Gen::A, Gen::SPlus]),
            Monomial::new(BigRational::one(), 1, 0, vec![Gen::ADag, Gen::SMinus]),
        ])
    }

    /// g(aS⁺ - a†S⁻), the anti-Hermitian partner of the interaction.
    pub fn interaction_bar() -> Self {
        Self::from_monomials([
            Monomial::new(BigRational::one(), 1, 0, vec![Gen::A, Gen::SPlus]),
            Monomial::new(-BigRational::one(), 1, 0, vec![Gen::ADag, Gen::SMinus]),
        ])
    }

    /// Commutator of two polynomials, fully normal-ordered.
    pub fn commutator(&self, other: &Self) -> Self {
        let mut acc: Vec<Monomial> = Vec::new();
        for m1 in &self.terms {
            for m2 in &other.terms {
                acc.extend(commute_words(m1, m2));
            }
        }
        Self::from_monomials(acc)
    }

    /// Evaluate to a dense matrix on the given space with numeric g and δ.
    pub fn materialize(&self, p: &TCParams, sp: &ProductSpace) -> ComplexMatrix {
        let (a, ad) = boson_ops(&sp.fock);
        let (sz, splus, sminus) = spin_ops(&sp.spin);
        let lifted = |gen: Gen| -> ComplexMatrix {
            match gen {
                Gen::ADag => lift(&ad, Factor::Boson, sp).unwrap(),
                Gen::A => lift(&a, Factor::Boson, sp).unwrap(),
                Gen::SPlus => lift(&splus, Factor::Spin, sp).unwrap(),
                Gen::SZ => lift(&sz, Factor::Spin, sp).unwrap(),
                Gen::SMinus => lift(&sminus, Factor::Spin, sp).unwrap(),
            }
        };
        let dim = sp.dim();
        let delta = p.delta();
        let mut out = ComplexMatrix::zeros(dim, dim);
        for m in &self.terms {
            let scalar = m.coeff.to_f64().expect("rational fits f64")
                * p.g.powi(m.g_power as i32)
                * delta.powi(m.delta_power as i32);
            if scalar == 0.0 {
                continue;
            }
            let mut word = ComplexMatrix::identity(dim);
            for &gen in &m.ops {
                word = word.matmul(&lifted(gen));
            }
            out = out.add(&word.scale(C64::new(scalar, 0.0)));
        }
        out
    }

    /// Plain-text dump, one monomial per line.
    pub fn dump(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms.iter().map(|m| m.to_string()).collect::<Vec<_>>().join("\n")
    }
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dump())
    }
}

/// Commutator [m1, m2] of two monomials as a normal-ordered polynomial,
/// using [a,a†] = 1, [Sᶻ,S±] = ±S±, [S⁺,S⁻] = 2Sᶻ.
pub fn normal_order_commute(m1: &Monomial, m2: &Monomial) -> OperatorPoly {
    OperatorPoly::from_monomials(commute_words(m1, m2))
}

fn commute_words(m1: &Monomial, m2: &Monomial) -> Vec<Monomial> {
    let coeff = &m1.coeff * &m2.coeff;
    let gp = m1.g_power + m2.g_power;
    let dp = m1.delta_power + m2.delta_power;
    let mut fwd: Vec<Gen> = m1.ops.clone();
    fwd.extend_from_slice(&m2.ops);
    let mut rev: Vec<Gen> = m2.ops.clone();
    rev.extend_from_slice(&m1.ops);
    let mut out = normal_order_word(coeff.clone(), fwd);
    out.extend(normal_order_word(-coeff, rev));
    out.into_iter()
        .map(|(c, ops)| Monomial { coeff: c, g_power: gp, delta_power: dp, ops })
        .collect()
}

/// Rewrite an arbitrary word into a sum of normal-ordered words.
fn normal_order_word(coeff: BigRational, word: Vec<Gen>) -> Vec<(BigRational, Vec<Gen>)> {
    let mut done: Vec<(BigRational, Vec<Gen>)> = Vec::new();
    let mut work: Vec<(BigRational, Vec<Gen>)> = vec![(coeff, word)];
    while let Some((c, w)) = work.pop() {
        let bad = w.windows(2).position(|p| rank(p[0]) > rank(p[1]));
        let Some(i) = bad else {
            done.push((c, w));
            continue;
        };
        let (x, y) = (w[i], w[i + 1]);
        let swapped = {
            let mut v = w.clone();
            v.swap(i, i + 1);
            v
        };
        match (x, y) {
            // different sectors commute freely
            (a, b) if a.is_spin() != b.is_spin() => work.push((c, swapped)),
            // a a† = a†a + 1
            (Gen::A, Gen::ADag) => {
                let mut contracted = w.clone();
                contracted.drain(i..=i + 1);
                work.push((c.clone(), swapped));
                work.push((c, contracted));
            }
            // Sᶻ S⁺ = S⁺Sᶻ + S⁺
            (Gen::SZ, Gen::SPlus) => {
                let mut shorter = w.clone();
                shorter.remove(i + 1);
                shorter[i] = Gen::SPlus;
                work.push((c.clone(), swapped));
                work.push((c, shorter));
            }
            // S⁻ S⁺ = S⁺S⁻ - 2Sᶻ
            (Gen::SMinus, Gen::SPlus) => {
                let mut shorter = w.clone();
                shorter.remove(i + 1);
                shorter[i] = Gen::SZ;
                work.push((c.clone(), swapped));
                work.push((-c * BigRational::from_integer(BigInt::from(2)), shorter));
            }
            // S⁻ Sᶻ = SᶻS⁻ + S⁻
            (Gen::SMinus, Gen::SZ) => {
                let mut shorter = w.clone();
                shorter.remove(i + 1);
                shorter[i] = Gen::SMinus;
                work.push((c.clone(), swapped));
                work.push((c, shorter));
            }
            _ => unreachable!("pair ({x:?},{y:?}) cannot be out of order"),
        }
    }
    done
}

/// Tuple (i₀,…,i_n) entering the Zassenhaus sum, with weights
/// i₀ + i₁ + 2i₂ + … + n·i_n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZassenhausTuple(pub Vec<u32>);

impl ZassenhausTuple {
    fn weight(j: usize) -> u32 {
        (j as u32).max(1)
    }

    pub fn weighted_sum(&self) -> u32 {
        self.0.iter().enumerate().map(|(j, &i)| Self::weight(j) * i).sum()
    }

    /// Partial sums i₀ + i₁ + 2i₂ + … + j·i_j ≥ j+1 for j = 0..n-1.
    pub fn satisfies_partial_sums(&self) -> bool {
        let n = self.0.len() - 1;
        let mut acc = 0u32;
        for j in 0..n {
            acc += Self::weight(j) * self.0[j];
            if acc < j as u32 + 1 {
                return false;
            }
        }
        true
    }
}

/// All (n+1)-tuples with weighted sum n and valid partial sums, in
/// lexicographic order.
pub fn enumerate_tuples(n: u32) -> Result<Vec<ZassenhausTuple>, ZassenhausError> {
    if n > ORDER_CAP {
        return Err(ZassenhausError::CapExceeded(n, ORDER_CAP));
    }
    let len = n as usize + 1;
    let mut out = Vec::new();
    let mut cur = vec![0u32; len];
    fn recurse(
        j: usize,
        remaining: u32,
        partial: u32,
        n: u32,
        cur: &mut Vec<u32>,
        out: &mut Vec<ZassenhausTuple>,
    ) {
        let len = cur.len();
        if j == len {
            if remaining == 0 {
                out.push(ZassenhausTuple(cur.clone()));
            }
            return;
        }
        let w = ZassenhausTuple::weight(j);
        let max_i = remaining / w;
        for i in 0..=max_i {
            cur[j] = i;
            let new_partial = partial + w * i;
            // partial-sum constraint applies for j = 0..n-1
            if j < n as usize && new_partial < j as u32 + 1 {
                continue;
            }
            recurse(j + 1, remaining - w * i, new_partial, n, cur, out);
        }
        cur[j] = 0;
    }
    recurse(0, n, 0, n, &mut cur, &mut out);
    Ok(out)
}

fn factorial(k: u32) -> BigInt {
    (1..=k as u64).fold(BigInt::one(), |acc, v| acc * v)
}

/// C̃_n = (-1)^{n+1} C_n for the pair (X, Y), built recursively from the
/// nested-adjoint sum over the constrained tuples. No pruning is applied;
/// the result is the exact Zassenhaus operator of the full algebra.
pub fn zassenhaus_term(
    n: u32,
    x: &OperatorPoly,
    y: &OperatorPoly,
) -> Result<OperatorPoly, ZassenhausError> {
    if n < 2 {
        return Err(ZassenhausError::BadOrder(n));
    }
    if n > ORDER_CAP {
        return Err(ZassenhausError::CapExceeded(n, ORDER_CAP));
    }
    let mut c_terms: Vec<OperatorPoly> = Vec::new(); // c_terms[k] = C_{k+2}
    for order in 2..=n {
        let m = order - 1; // C_{m+1}
        let tuples = enumerate_tuples(m)?;
        let mut sum = OperatorPoly::zero();
        for tup in &tuples {
            let idx = &tup.0;
            let total: u32 = idx.iter().sum();
            let mut denom = BigInt::one();
            for &i in idx {
                denom *= factorial(i);
            }
            let mut sign = BigRational::new(BigInt::one(), denom);
            if total % 2 == 1 {
                sign = -sign;
            }
            // ad_{C_m}^{i_m} … ad_{C_2}^{i_2} ad_Y^{i_1} ad_X^{i_0} Y
            let mut operand = y.clone();
            for _ in 0..idx[0] {
                operand = x.commutator(&operand);
            }
            for _ in 0..idx[1] {
                operand = y.commutator(&operand);
            }
            for (k, &count) in idx.iter().enumerate().skip(2) {
                for _ in 0..count {
                    operand = c_terms[k - 2].commutator(&operand);
                }
            }
            sum = sum.add(&operand.scale(&sign));
        }
        let c = sum.scale(&BigRational::new(BigInt::one(), BigInt::from(order)));
        c_terms.push(c);
    }
    let c_n = c_terms.last().unwrap().clone();
    // C̃_n = (-1)^{n+1} C_n
    Ok(if n % 2 == 0 { c_n.scale(&(-BigRational::one())) } else { c_n })
}

/// Drop every monomial carrying more powers of g than spin operators.
/// With gS held fixed those terms vanish in the large-S regime.
pub fn large_s_prune(p: &OperatorPoly) -> OperatorPoly {
    OperatorPoly::from_monomials(
        p.terms
            .iter()
            .filter(|m| m.g_power as usize <= m.spin_order())
            .cloned(),
    )
}

/// Engine-vs-closed-form comparison for the two commutator families that
/// survive pruning: ad_X^n Y and (for even n) ad_Y ad_X^{n-1} Y.
#[derive(Debug, Clone)]
pub struct SurvivingForms {
    pub ad_x_engine: OperatorPoly,
    pub ad_x_closed: OperatorPoly,
    pub ad_x_match: bool,
    pub ad_y_engine: OperatorPoly,
    pub ad_y_closed: OperatorPoly,
    pub ad_y_match: bool,
}

/// Closed form g·δⁿ(aS⁺ + (-1)ⁿ a†S⁻).
pub fn ad_x_closed_form(n: u32) -> OperatorPoly {
    let minus_one = if n % 2 == 0 { BigRational::one() } else { -BigRational::one() };
    OperatorPoly::from_monomials([
        Monomial::new(BigRational::one(), 1, n, vec![Gen::A, Gen::SPlus]),
        Monomial::new(minus_one, 1, n, vec![Gen::ADag, Gen::SMinus]),
    ])
}

/// Closed form -2g²δ^{n-1} S⁺S⁻ (even n); the odd-n family vanishes.
pub fn ad_y_closed_form(n: u32) -> OperatorPoly {
    if n % 2 == 1 {
        return OperatorPoly::zero();
    }
    OperatorPoly::from_monomials([Monomial::new(
        BigRational::from_integer(BigInt::from(-2)),
        2,
        n - 1,
        vec![Gen::SPlus, Gen::SMinus],
    )])
}

pub fn surviving_commutator_forms(n: u32) -> Result<SurvivingForms, ZassenhausError> {
    if n > ORDER_CAP {
        return Err(ZassenhausError::CapExceeded(n, ORDER_CAP));
    }
    let x = OperatorPoly::free_part();
    let y = OperatorPoly::interaction();
    let mut ad_x = y.clone();
    for _ in 0..n {
        ad_x = x.commutator(&ad_x);
    }
    let mut ad_x_prev = y.clone();
    for _ in 0..n.saturating_sub(1) {
        ad_x_prev = x.commutator(&ad_x_prev);
    }
    let ad_y = large_s_prune(&y.commutator(&ad_x_prev));
    let ad_x = large_s_prune(&ad_x);

    let ad_x_closed = ad_x_closed_form(n);
    let ad_y_closed = ad_y_closed_form(n);
    Ok(SurvivingForms {
        ad_x_match: ad_x == ad_x_closed,
        ad_y_match: ad_y == ad_y_closed,
        ad_x_engine: ad_x,
        ad_x_closed,
        ad_y_engine: ad_y,
        ad_y_closed,
    })
}
