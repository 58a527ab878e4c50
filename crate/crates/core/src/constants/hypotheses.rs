//! The smallness conditions on `(a₁, a₂)` and the constants they involve.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constants::estimate::EmbeddingConstants;
use crate::error::{Error, Result};
use crate::intrinsic::IntrinsicCertificate;
use crate::scalar::{count, lit, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    H2,
    T2,
    T3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HypothesisReport<T> {
    pub condition: Condition,
    pub value: T,
    pub margin: T,
    pub pass: bool,
    pub constants: BTreeMap<String, T>,
}

/// `a₁·K₁·S₁ + a₂·K₂·S₂`; every checker goes through this one expression.
fn smallness<T: Real>(a1: T, k1: T, s1: T, a2: T, k2: T, s2: T) -> T {
    a1 * k1 * s1 + a2 * k2 * s2
}

fn report<T: Real>(
    condition: Condition,
    value: T,
    constants: BTreeMap<String, T>,
) -> HypothesisReport<T> {
    HypothesisReport {
        condition,
        value,
        margin: T::one() - value,
        pass: value < T::one(),
        constants,
    }
}

fn entries<T: Real>(pairs: &[(&str, T)]) -> BTreeMap<String, T> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `a₁K₁S_{p̂/(p̂−α)} + a₂K₂S_{p/(p−β)} < 1`.
pub fn check_h2<T: Real>(
    a1: T,
    a2: T,
    cert: &IntrinsicCertificate<T>,
    constants: &EmbeddingConstants<T>,
    alpha: T,
    beta: T,
) -> Result<HypothesisReport<T>> {
    let (p, p_hat) = (constants.p, constants.p_hat);
    let r1 = p_hat / (p_hat - alpha);
    let r2 = p / (p - beta);
    let s1 = constants.get(r1)?;
    let s2 = constants.get(r2)?;
    let value = smallness(a1, cert.k1, s1, a2, cert.k2, s2);
    Ok(report(
        Condition::H2,
        value,
        entries(&[
            ("a1", a1),
            ("a2", a2),
            ("K1", cert.k1),
            ("K2", cert.k2),
            ("K3", cert.k3),
            ("alpha", alpha),
            ("beta", beta),
            ("r_alpha", r1),
            ("r_beta", r2),
            ("S_r_alpha", s1),
            ("S_r_beta", s2),
        ]),
    ))
}

/// `max{2^{p−2},1}(a₁S_{p̂}^{p−1}S_{p̂/(p̂−p+1)} + a₂S₁) < 1`, as printed
/// for the boundary-lift problem.
pub fn check_t2<T: Real>(
    a1: T,
    a2: T,
    p: T,
    constants: &EmbeddingConstants<T>,
) -> Result<HypothesisReport<T>> {
    let p_hat = constants.p_hat;
    let pm1 = p - T::one();
    let m = crate::intrinsic::lift_factor(p);
    let s_hat = constants.s_hat()?;
    let r1 = p_hat / (p_hat - pm1);
    let s1 = constants.get(r1)?;
    let s_one = constants.get(T::one())?;
    let k1 = m * s_hat.powf(pm1);
    let value = smallness(a1, k1, s1, a2, m, s_one);
    Ok(report(
        Condition::T2,
        value,
        entries(&[
            ("a1", a1),
            ("a2", a2),
            ("max(2^(p-2),1)", m),
            ("S_phat", s_hat),
            ("r_alpha", r1),
            ("S_r_alpha", s1),
            ("S_1", s_one),
        ]),
    ))
}

/// `N^{p−1}‖ρ‖₁^{p−1}(a₁S^{p−1}S_{p̂/(p̂−p+1)} + a₂S₁) < 1`, with the
/// whole-space `S` replaced by `S_{p̂}`.
pub fn check_t3<T: Real>(
    a1: T,
    a2: T,
    p: T,
    dim: usize,
    kernel_l1: T,
    constants: &EmbeddingConstants<T>,
) -> Result<HypothesisReport<T>> {
    if !(kernel_l1 > T::zero()) {
        return Err(Error::Precondition(format!(
            "kernel L1 norm must be positive, got {kernel_l1}"
        )));
    }
    let p_hat = constants.p_hat;
    let pm1 = p - T::one();
    let s = constants.s_hat()?;
    let r1 = p_hat / (p_hat - pm1);
    let s1 = constants.get(r1)?;
    let s_one = constants.get(T::one())?;
    let k2 = count::<T>(dim).powf(pm1) * kernel_l1.powf(pm1);
    let k1 = s.powf(pm1) * k2;
    let value = smallness(a1, k1, s1, a2, k2, s_one);
    Ok(report(
        Condition::T3,
        value,
        entries(&[
            ("a1", a1),
            ("a2", a2),
            ("N", count(dim)),
            ("rho_l1", kernel_l1),
            ("S_whole_space_surrogate", s),
            ("r_alpha", r1),
            ("S_r_alpha", s1),
            ("S_1", s_one),
        ]),
    ))
}

/// The exponents whose `S_r` the checks and the coercivity radius read.
pub fn required_exponents<T: Real>(
    p: T,
    p_hat: T,
    alpha: T,
    beta: T,
    r: T,
    lifted_or_convolved: bool,
) -> Vec<T> {
    let mut out = vec![p_hat, p, r, p_hat / (p_hat - alpha), p / (p - beta)];
    if lifted_or_convolved {
        out.push(T::one());
        out.push(p_hat / (p_hat - (p - T::one())));
    }
    let tol = lit::<T>(1e-9);
    let mut uniq: Vec<T> = Vec::new();
    for x in out {
        if !uniq
            .iter()
            .any(|&y| (x - y).abs() <= tol * T::one().max(y.abs()))
        {
            uniq.push(x);
        }
    }
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    uniq
}
