//! Elementwise assembly of the competing operator and the convection term.

use rayon::prelude::*;

use crate::discretization::{
    check_level, FEFunction, Level, NodalField, QuadratureSamples, SpaceHierarchy,
};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::operators::convection::SourceTerm;
use crate::operators::envelope::GrowthEnvelope;
use crate::scalar::{conjugate, lit, Real};

/// How the convection term enters the Jacobian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceCoupling {
    /// `T(u)` moves with `u` one-for-one; `f` is differentiated.
    Local,
    /// `f(x, T(u), ∇T(u))` is held fixed (chord rule).
    Frozen,
}

/// `⟨A(u), φᵢ⟩` for every free basis function of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualVector<T> {
    pub level: usize,
    pub values: Vec<T>,
}

/// Worst sample of an envelope check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck<T> {
    /// `max |f| − envelope`; nonpositive when the envelope holds.
    pub worst_margin: T,
    pub worst_index: Option<usize>,
}

fn check_exponents<T: Real>(p: T, q: T) -> Result<()> {
    if !(T::one() < q && q < p) {
        return Err(Error::Precondition(format!(
            "exponents must satisfy 1 < q < p, got p = {p}, q = {q}"
        )));
    }
    Ok(())
}

/// `|g|^{p−2} g`, zero at `g = 0`.
fn flux<T: Real>(g: [T; 2], p: T) -> [T; 2] {
    let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if n == T::zero() {
        return [T::zero(); 2];
    }
    let c = n.powf(p - lit(2.0));
    [c * g[0], c * g[1]]
}

fn competing_flux<T: Real>(g: [T; 2], p: T, q: T, q_weight: T) -> [T; 2] {
    let a = flux(g, p);
    let b = flux(g, q);
    [a[0] - q_weight * b[0], a[1] - q_weight * b[1]]
}

/// Derivative of `g ↦ |g|^{p−2} g` with `|g|²` replaced by `|g|² + ε²`.
fn flux_derivative<T: Real>(g: [T; 2], p: T, eps: T, element: usize) -> Result<[[T; 2]; 2]> {
    let two = lit::<T>(2.0);
    let s = g[0] * g[0] + g[1] * g[1] + eps * eps;
    if s == T::zero() {
        return if p == two {
            Ok([[T::one(), T::zero()], [T::zero(), T::one()]])
        } else if p > two {
            Ok([[T::zero(); 2]; 2])
        } else {
            Err(Error::SingularElement {
                element,
                exponent: p.to_f64().unwrap_or(f64::NAN),
            })
        };
    }
    let a = s.powf((p - two) / two);
    let b = (p - two) * s.powf((p - lit(4.0)) / two);
    Ok([
        [a + b * g[0] * g[0], b * g[0] * g[1]],
        [b * g[1] * g[0], a + b * g[1] * g[1]],
    ])
}

fn lifted_nodal<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    lift: Option<&NodalField<T>>,
) -> Result<Vec<T>> {
    let mut w = h.nodal_values(u);
    if let Some(l) = lift {
        check_level(u.level, l.level)?;
        for (wi, li) in w.iter_mut().zip(&l.values) {
            *wi = *wi + *li;
        }
    }
    Ok(w)
}

fn check_samples<T: Real>(lv: &Level<T>, level: usize, t: &QuadratureSamples<T>) -> Result<()> {
    check_level(level, t.level)?;
    if t.per_element != lv.rule().len() || t.points.len() != lv.elements().len() * t.per_element {
        return Err(Error::Precondition(format!(
            "T-image has {} points ({} per element), level {} expects {} per element",
            t.points.len(),
            t.per_element,
            level,
            lv.rule().len()
        )));
    }
    Ok(())
}

/// `∫ (|∇w|^{p−2} − |∇w|^{q−2}) ∇w·∇v` with `w = u + lift`.
pub fn competing_pairing<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    v: &FEFunction<T>,
    p: T,
    q: T,
    lift: Option<&NodalField<T>>,
) -> Result<T> {
    check_exponents(p, q)?;
    check_level(u.level, v.level)?;
    let lv = h.level(u.level);
    let w = lifted_nodal(h, u, lift)?;
    let vn = h.nodal_values(v);
    let terms: Vec<T> = (0..lv.elements().len())
        .into_par_iter()
        .map(|e| {
            let fl = competing_flux(lv.element_gradient(e, &w), p, q, T::one());
            let gv = lv.element_gradient(e, &vn);
            (fl[0] * gv[0] + fl[1] * gv[1]) * lv.elements()[e].measure
        })
        .collect();
    Ok(terms.into_iter().sum())
}

/// Per-element contributions to the residual, one entry per local vertex.
fn local_residuals<T: Real>(
    lv: &Level<T>,
    w: &[T],
    t: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    p: T,
    q: T,
    q_weight: T,
) -> Vec<[T; 3]> {
    let slots = lv.dim() + 1;
    let nq = lv.rule().len();
    (0..lv.elements().len())
        .into_par_iter()
        .map(|e| {
            let el = &lv.elements()[e];
            let fl = competing_flux(lv.element_gradient(e, w), p, q, q_weight);
            let mut out = [T::zero(); 3];
            for (s, slot) in out.iter_mut().enumerate().take(slots) {
                *slot = (fl[0] * el.grads[s][0] + fl[1] * el.grads[s][1]) * el.measure;
            }
            for k in 0..nq {
                let (x, wt) = lv.quad_point(e, k);
                let sp = &t.points[e * nq + k];
                let fv = f.eval(x, sp.value, sp.grad) * wt;
                let bary = lv.rule().barycentric[k];
                for (s, slot) in out.iter_mut().enumerate().take(slots) {
                    *slot = *slot - fv * bary[s];
                }
            }
            out
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn residual_weighted<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    t_image: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    p: T,
    q: T,
    lift: Option<&NodalField<T>>,
    q_weight: T,
) -> Result<ResidualVector<T>> {
    let lv = h.level(u.level);
    check_samples(lv, u.level, t_image)?;
    let w = lifted_nodal(h, u, lift)?;
    let local = local_residuals(lv, &w, t_image, f, p, q, q_weight);
    let mut values = vec![T::zero(); lv.num_dofs()];
    for (e, contrib) in local.iter().enumerate() {
        for (s, &node) in lv.element_nodes(e).iter().enumerate() {
            if let Some(d) = lv.dof_of(node) {
                values[d] = values[d] + contrib[s];
            }
        }
    }
    Ok(ResidualVector {
        level: u.level,
        values,
    })
}

/// `⟨−Δₚw + Δ_q w, φᵢ⟩ − ∫ f(x, T(u), ∇T(u)) φᵢ` with `w = u + lift`.
pub fn assemble_residual<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    t_image: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    p: T,
    q: T,
    lift: Option<&NodalField<T>>,
) -> Result<ResidualVector<T>> {
    check_exponents(p, q)?;
    residual_weighted(h, u, t_image, f, p, q, lift, T::one())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn jacobian_weighted<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    t_image: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    p: T,
    q: T,
    eps_reg: T,
    lift: Option<&NodalField<T>>,
    coupling: SourceCoupling,
    q_weight: T,
) -> Result<SparseMatrix<T>> {
    let lv = h.level(u.level);
    check_samples(lv, u.level, t_image)?;
    let w = lifted_nodal(h, u, lift)?;
    let slots = lv.dim() + 1;
    let nq = lv.rule().len();
    let local: Vec<[[T; 3]; 3]> = (0..lv.elements().len())
        .into_par_iter()
        .map(|e| -> Result<[[T; 3]; 3]> {
            let el = &lv.elements()[e];
            let g = lv.element_gradient(e, &w);
            let dp = flux_derivative(g, p, eps_reg, e)?;
            let dq = if q_weight == T::zero() {
                [[T::zero(); 2]; 2]
            } else {
                flux_derivative(g, q, eps_reg, e)?
            };
            let mut d = [[T::zero(); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    d[a][b] = dp[a][b] - q_weight * dq[a][b];
                }
            }
            let mut m = [[T::zero(); 3]; 3];
            for i in 0..slots {
                let gi = el.grads[i];
                for j in 0..slots {
                    let gj = el.grads[j];
                    let dgj = [
                        d[0][0] * gj[0] + d[0][1] * gj[1],
                        d[1][0] * gj[0] + d[1][1] * gj[1],
                    ];
                    m[i][j] = (gi[0] * dgj[0] + gi[1] * dgj[1]) * el.measure;
                }
            }
            if coupling == SourceCoupling::Local {
                for k in 0..nq {
                    let (x, wt) = lv.quad_point(e, k);
                    let sp = &t_image.points[e * nq + k];
                    let (fs, fxi) = f.partials(x, sp.value, sp.grad);
                    let bary = lv.rule().barycentric[k];
                    for i in 0..slots {
                        for j in 0..slots {
                            let dj =
                                fs * bary[j] + fxi[0] * el.grads[j][0] + fxi[1] * el.grads[j][1];
                            m[i][j] = m[i][j] - wt * dj * bary[i];
                        }
                    }
                }
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut tb = TripletBuilder::new(lv.num_dofs());
    for (e, m) in local.iter().enumerate() {
        let nodes = lv.element_nodes(e);
        for (i, &ni) in nodes.iter().enumerate() {
            let Some(di) = lv.dof_of(ni) else { continue };
            for (j, &nj) in nodes.iter().enumerate() {
                if let Some(dj) = lv.dof_of(nj) {
                    tb.push(di, dj, m[i][j]);
                }
            }
        }
    }
    Ok(tb.build())
}

/// Newton linearization of [`assemble_residual`]. Only the Jacobian sees
/// `eps_reg`; it must be positive when an exponent is below 2 and some
/// element gradient vanishes.
#[allow(clippy::too_many_arguments)]
pub fn assemble_jacobian<T: Real>(
    h: &SpaceHierarchy<T>,
    u: &FEFunction<T>,
    t_image: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    p: T,
    q: T,
    eps_reg: T,
    lift: Option<&NodalField<T>>,
    coupling: SourceCoupling,
) -> Result<SparseMatrix<T>> {
    check_exponents(p, q)?;
    if eps_reg < T::zero() {
        return Err(Error::Precondition(format!(
            "eps_reg must be >= 0, got {eps_reg}"
        )));
    }
    jacobian_weighted(h, u, t_image, f, p, q, eps_reg, lift, coupling, T::one())
}

/// `∫ f(x, T(u), ∇T(u)) v` by the level quadrature.
pub fn source_integral<T: Real>(
    h: &SpaceHierarchy<T>,
    t_image: &QuadratureSamples<T>,
    f: &dyn SourceTerm<T>,
    v: &FEFunction<T>,
) -> Result<T> {
    let lv = h.level(v.level);
    check_samples(lv, v.level, t_image)?;
    let vn = h.nodal_values(v);
    let nq = lv.rule().len();
    let mut acc = T::zero();
    for e in 0..lv.elements().len() {
        for k in 0..nq {
            let (x, wt) = lv.quad_point(e, k);
            let sp = &t_image.points[e * nq + k];
            acc = acc + wt * f.eval(x, sp.value, sp.grad) * lv.element_value(e, k, &vn);
        }
    }
    Ok(acc)
}

/// Largest `|f(x,s,ξ)| − (σ(x) + a₁|s|^α + a₂|ξ|^β)` over the samples.
pub fn growth_envelope_check<T: Real>(
    f: &dyn SourceTerm<T>,
    samples: &[([T; 2], T, [T; 2])],
) -> EnvelopeCheck<T> {
    let env = f.envelope();
    let mut out = EnvelopeCheck {
        worst_margin: T::neg_infinity(),
        worst_index: None,
    };
    for (i, &(x, s, xi)) in samples.iter().enumerate() {
        let m = f.eval(x, s, xi).abs() - env.bound(x, s, xi);
        if m > out.worst_margin || out.worst_index.is_none() {
            out.worst_margin = m;
            out.worst_index = Some(i);
        }
    }
    out
}

/// Hölder bound on `|∫ f(·,T(u),∇T(u)) v|` under the envelope:
/// `‖σ‖_{r′}‖v‖_r + a₁‖T(u)‖_{p̂}^α‖v‖_{p̂/(p̂−α)} + a₂‖∇T(u)‖_p^β‖v‖_{p/(p−β)}`.
pub fn lemma_l1_bound<T: Real>(
    h: &SpaceHierarchy<T>,
    v: &FEFunction<T>,
    t_image: &QuadratureSamples<T>,
    env: &GrowthEnvelope<T>,
    p: T,
    p_hat: T,
) -> Result<T> {
    check_samples(h.level(v.level), v.level, t_image)?;
    let mut bound = env.sigma.norm(h, v.level, conjugate(env.r)) * h.lebesgue_norm(v, env.r);
    if env.a1 > T::zero() {
        bound = bound
            + env.a1
                * t_image.value_norm(p_hat).powf(env.alpha)
                * h.lebesgue_norm(v, p_hat / (p_hat - env.alpha));
    }
    if env.a2 > T::zero() {
        bound = bound
            + env.a2 * t_image.grad_norm(p).powf(env.beta) * h.lebesgue_norm(v, p / (p - env.beta));
    }
    Ok(bound)
}
