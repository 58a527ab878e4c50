//! Radius of the sphere on which `⟨Aₙ(v), v⟩ ≥ 0`.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// `g(t) = (1−κ)t^{p−1} − |Ω|^{(p−q)/p}t^{q−1} − c₀`
pub fn coercivity_function<T: Real>(kappa: T, omega_measure: T, p: T, q: T, c0: T, t: T) -> T {
    let m = omega_measure.powf((p - q) / p);
    (T::one() - kappa) * t.powf(p - T::one()) - m * t.powf(q - T::one()) - c0
}

/// Largest root of [`coercivity_function`]. The root is unique on
/// `t > 0` because `g(t)/t^{q−1}` is increasing there.
pub fn coercivity_radius<T: Real>(kappa: T, omega_measure: T, p: T, q: T, c0: T) -> Result<T> {
    if !(kappa < T::one()) {
        return Err(Error::HypothesisViolated(
            kappa.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if !(kappa >= T::zero())
        || !(c0 >= T::zero())
        || !(omega_measure > T::zero())
        || !(T::one() < q && q < p)
    {
        return Err(Error::Precondition(format!(
            "coercivity radius needs 0 <= kappa < 1, c0 >= 0, |Omega| > 0, 1 < q < p; got \
             kappa = {kappa}, c0 = {c0}, |Omega| = {omega_measure}, p = {p}, q = {q}"
        )));
    }
    let g = |t: T| coercivity_function(kappa, omega_measure, p, q, c0, t);
    let scaled = |t: T| g(t) / t.powf(q - T::one());
    let mut hi = T::one();
    while scaled(hi) < T::zero() {
        hi = hi + hi;
        if !hi.is_finite() {
            return Err(Error::Solver("coercivity bracket diverged".into()));
        }
    }
    let mut lo = hi * lit(0.5);
    while lo > T::min_positive_value() && scaled(lo) >= T::zero() {
        lo = lo * lit(0.5);
    }
    for _ in 0..200 {
        let mid = lit::<T>(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if scaled(mid) >= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for k in 1..=60 {
        let t = hi * lit::<T>(10.0).powf(lit::<T>(k as f64 / 10.0));
        if g(t) < T::zero() {
            return Err(Error::Solver(format!(
                "g({t}) < 0 beyond the computed radius {hi}"
            )));
        }
    }
    Ok(hi)
}
