//! Finite proxies for the strong-generalized-solution conditions, and
//! error norms against closed-form solutions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{FEFunction, SpaceHierarchy};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::operators::{assemble_residual, competing_pairing, source_integral};
use crate::problem::Problem;
use crate::scalar::{abs_pow, count, lit, norm2, Real};
use crate::solver::level::LevelSolve;

/// Diagnostics of one level `n < n_max`; all four values are signed
/// except the maxima (a) and (b).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct D1Row<T> {
    pub level: usize,
    /// `maxⱼ |∫φⱼ(uₙ − u)| / ‖φⱼ‖₂`
    pub a: T,
    /// `maxⱼ |⟨A(uₙ), φⱼ⟩| / ‖∇φⱼ‖ₚ` on the finest level
    pub b: T,
    /// `⟨−Δₚuₙ + Δ_q uₙ, uₙ − u⟩`
    pub c_strong: T,
    /// `c_strong − ∫ f(x, T(uₙ), ∇T(uₙ))(uₙ − u)`
    pub c_full: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct D1Diagnostics<T> {
    pub rows: Vec<D1Row<T>>,
    pub test_functions: usize,
    /// `‖∇(uₙ − uₙ₊₁)‖ₚ` for consecutive levels.
    pub steps: Vec<T>,
    /// More than one step grew: the sequence may be switching between
    /// solutions.
    pub non_cauchy: bool,
}

/// The fixed dual set on the finest level: the first `hats` nodal hats,
/// then interpolated `sin(kπx)` (products of sines over the bounding box in
/// 2D) for `k = 1..4`.
pub fn test_set<T: Real>(h: &SpaceHierarchy<T>, hats: usize) -> Vec<FEFunction<T>> {
    let n = h.finest();
    let lv = h.level(n);
    let mut out: Vec<FEFunction<T>> = (0..hats.min(lv.num_dofs())).map(|i| h.hat(n, i)).collect();
    let (mut lo, mut hi) = ([T::infinity(); 2], [T::neg_infinity(); 2]);
    for c in lv.coords() {
        for d in 0..2 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let pi = lit::<T>(std::f64::consts::PI);
    let dim = h.dim();
    for k in 1..=4 {
        let kk = count::<T>(k);
        out.push(h.interpolate(n, |x| {
            let mut v = T::one();
            for d in 0..dim {
                v = v * (kk * pi * (x[d] - lo[d]) / (hi[d] - lo[d])).sin();
            }
            v
        }));
    }
    out.retain(|f| f.coeffs.iter().any(|&c| c != T::zero()));
    out
}

/// Diagnostics for every solve below the finest level, with `u` standing
/// in for the weak limit.
pub fn d1_diagnostics<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    solves: &[LevelSolve<T>],
    u: &FEFunction<T>,
    test_set_size: usize,
) -> Result<D1Diagnostics<T>> {
    let n = h.finest();
    if u.level != n {
        return Err(Error::LevelMismatch {
            expected: n,
            found: u.level,
        });
    }
    let (p, q) = (problem.p(), problem.q());
    let op = problem.operator();
    let lift = op.lift_field(h, n);
    let tests = test_set(h, test_set_size);
    let l2: Vec<T> = tests
        .iter()
        .map(|f| h.l2_inner(f, f).map(|s| s.sqrt()))
        .collect::<Result<_>>()?;
    let grad: Vec<T> = tests.iter().map(|f| h.grad_norm_p(f, p)).collect();

    let rows = solves
        .par_iter()
        .filter(|s| s.level < n)
        .map(|s| -> Result<D1Row<T>> {
            let un = h.prolongate(&s.solution, n)?;
            let d = un.axpy(-T::one(), u)?;
            let image = op.apply(h, &un)?;
            let res = assemble_residual(h, &un, &image, &*problem.source, p, q, lift.as_ref())?;
            let mut a = T::zero();
            let mut b = T::zero();
            for (j, f) in tests.iter().enumerate() {
                a = a.max(h.l2_inner(f, &d)?.abs() / l2[j]);
                b = b.max(dot(&res.values, &f.coeffs).abs() / grad[j]);
            }
            let c_strong = competing_pairing(h, &un, &d, p, q, lift.as_ref())?;
            let c_full = c_strong - source_integral(h, &image, &*problem.source, &d)?;
            Ok(D1Row {
                level: s.level,
                a,
                b,
                c_strong,
                c_full,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut steps = Vec::new();
    for pair in solves.windows(2) {
        let coarse = h.prolongate(&pair[0].solution, pair[1].level)?;
        steps.push(h.grad_norm_p(&coarse.axpy(-T::one(), &pair[1].solution)?, p));
    }
    let non_cauchy = steps.windows(2).filter(|w| w[1] > w[0]).count() > 1;
    Ok(D1Diagnostics {
        rows,
        test_functions: tests.len(),
        steps,
        non_cauchy,
    })
}

/// `(Σ ∫_e |∇u − ∇u*|^p)^{1/p}` by the level quadrature.
pub fn w1p_error<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    exact_gradient: impl Fn([T; 2]) -> [T; 2],
    p: T,
) -> T {
    let lv = h.level(u.level);
    let nodal = h.nodal_values(u);
    let mut acc = T::zero();
    for e in 0..lv.elements().len() {
        let g = lv.element_gradient(e, &nodal);
        for k in 0..lv.rule().len() {
            let (x, w) = lv.quad_point(e, k);
            let ge = exact_gradient(x);
            acc = acc + w * abs_pow(norm2([g[0] - ge[0], g[1] - ge[1]]), p);
        }
    }
    acc.powf(T::one() / p)
}

/// `‖u − u*‖_r` by the level quadrature.
pub fn lebesgue_error<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    exact: impl Fn([T; 2]) -> T,
    r: T,
) -> T {
    let lv = h.level(u.level);
    let nodal = h.nodal_values(u);
    let mut acc = T::zero();
    for e in 0..lv.elements().len() {
        for k in 0..lv.rule().len() {
            let (x, w) = lv.quad_point(e, k);
            acc = acc + w * abs_pow(lv.element_value(e, k, &nodal) - exact(x), r);
        }
    }
    acc.powf(T::one() / r)
}
