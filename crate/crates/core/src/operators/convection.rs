//! Convection terms `f(x, s, ξ)`: a closed catalog plus the `SourceTerm`
//! extension point for custom evaluators.

use serde::{Deserialize, Serialize};

use crate::operators::envelope::{default_r, GrowthEnvelope, Weight};
use crate::scalar::{abs_pow, lit, norm2, signed_pow, Real};

/// A Carathéodory right-hand side together with the (H1) envelope it
/// claims to satisfy.
pub trait SourceTerm<T: Real>: Send + Sync {
    fn eval(&self, x: [T; 2], s: T, xi: [T; 2]) -> T;

    /// `(∂f/∂s, ∂f/∂ξ)`; central differences unless overridden.
    fn partials(&self, x: [T; 2], s: T, xi: [T; 2]) -> (T, [T; 2]) {
        let d = T::epsilon().cbrt();
        let ds = d * (T::one() + s.abs());
        let fs = (self.eval(x, s + ds, xi) - self.eval(x, s - ds, xi)) / (ds + ds);
        let mut fxi = [T::zero(); 2];
        for (k, slot) in fxi.iter_mut().enumerate() {
            let dk = d * (T::one() + xi[k].abs());
            let mut xp = xi;
            let mut xm = xi;
            xp[k] = xp[k] + dk;
            xm[k] = xm[k] - dk;
            *slot = (self.eval(x, s, xp) - self.eval(x, s, xm)) / (dk + dk);
        }
        (fs, fxi)
    }

    fn envelope(&self) -> &GrowthEnvelope<T>;
}

/// Catalog entries, addressed by `"kind"` in problem files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum ConvectionKind<T> {
    Zero,
    Constant {
        value: T,
    },
    /// `f = σ(x)`
    Weight {
        sigma: Weight<T>,
    },
    /// `f = a₁ sign(s)|s|^α`
    SignedPower {
        a1: T,
        alpha: T,
    },
    /// `f = a₂|ξ|^β`, optionally times `sign(ξ₁)`
    GradientPower {
        a2: T,
        beta: T,
        #[serde(default)]
        signed: bool,
    },
    /// `f = σ(x) + a₁ sign(s)|s|^α + a₂|ξ|^β`
    Growth {
        sigma: Weight<T>,
        a1: T,
        alpha: T,
        a2: T,
        beta: T,
    },
    /// `f = 4|1−2x| − 2`, for which `u = x(1−x)` solves the p = 3, q = 2
    /// problem on (0, 1).
    #[serde(rename = "manufactured_p3q2")]
    ManufacturedP3Q2,
    /// `f = 2(p−1)|1−2x|^{p−2} − 2(q−1)|1−2x|^{q−2}`, exact solution
    /// `u = x(1−x)` on (0, 1).
    ManufacturedQuadratic {
        p: T,
        q: T,
    },
}

/// Closed-form solution attached to a manufactured entry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactSolution;

impl ExactSolution {
    /// `u(x) = x(1 − x)`
    pub fn value<T: Real>(&self, x: [T; 2]) -> T {
        x[0] * (T::one() - x[0])
    }

    pub fn gradient<T: Real>(&self, x: [T; 2]) -> [T; 2] {
        [T::one() - x[0] - x[0], T::zero()]
    }
}

/// Smallest `|s|` at which derivatives of `|s|^e` with `e < 1` are taken.
const DERIVATIVE_FLOOR: f64 = 1e-8;

/// A catalog convection term plus its envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvectionTerm<T> {
    pub kind: ConvectionKind<T>,
    pub envelope: GrowthEnvelope<T>,
}

impl<T: Real> ConvectionTerm<T> {
    /// Uses `envelope` when given, otherwise the entry's own envelope.
    pub fn new(
        kind: ConvectionKind<T>,
        envelope: Option<GrowthEnvelope<T>>,
        p: T,
        p_hat: T,
    ) -> Self {
        let envelope = envelope.unwrap_or_else(|| kind.default_envelope(p, p_hat));
        Self { kind, envelope }
    }

    pub fn exact_solution(&self) -> Option<ExactSolution> {
        match self.kind {
            ConvectionKind::ManufacturedP3Q2 | ConvectionKind::ManufacturedQuadratic { .. } => {
                Some(ExactSolution)
            }
            _ => None,
        }
    }
}

impl<T: Real> ConvectionKind<T> {
    pub fn default_envelope(&self, p: T, p_hat: T) -> GrowthEnvelope<T> {
        let mut env = GrowthEnvelope::weight_only(Weight::Zero, p, p_hat);
        match self {
            ConvectionKind::Zero => {}
            ConvectionKind::Constant { value } => {
                env.sigma = Weight::Constant { value: value.abs() }
            }
            ConvectionKind::Weight { sigma } => {
                env.sigma = Weight::Abs {
                    of: Box::new(sigma.clone()),
                }
            }
            ConvectionKind::SignedPower { a1, alpha } => {
                env.a1 = *a1;
                env.alpha = *alpha;
            }
            ConvectionKind::GradientPower { a2, beta, .. } => {
                env.a2 = *a2;
                env.beta = *beta;
            }
            ConvectionKind::Growth {
                sigma,
                a1,
                alpha,
                a2,
                beta,
            } => {
                env = GrowthEnvelope {
                    a1: *a1,
                    a2: *a2,
                    alpha: *alpha,
                    beta: *beta,
                    r: default_r(p_hat),
                    sigma: Weight::Abs {
                        of: Box::new(sigma.clone()),
                    },
                };
            }
            ConvectionKind::ManufacturedP3Q2 => {
                env.sigma = Weight::VShape {
                    offset: lit(2.0),
                    slope: lit(8.0),
                    center: lit(0.5),
                };
            }
            ConvectionKind::ManufacturedQuadratic { p, q } => {
                let two = lit::<T>(2.0);
                let term = |e: T| Weight::Power {
                    coef: two * (e - T::one()) * two.powf(e - two),
                    center: lit(0.5),
                    exponent: e - two,
                };
                env.sigma = Weight::Sum {
                    terms: vec![term(*p), term(*q)],
                };
            }
        }
        env
    }
}

impl<T: Real> SourceTerm<T> for ConvectionTerm<T> {
    fn eval(&self, x: [T; 2], s: T, xi: [T; 2]) -> T {
        match &self.kind {
            ConvectionKind::Zero => T::zero(),
            ConvectionKind::Constant { value } => *value,
            ConvectionKind::Weight { sigma } => sigma.eval(x),
            ConvectionKind::SignedPower { a1, alpha } => *a1 * signed_pow(s, *alpha),
            ConvectionKind::GradientPower { a2, beta, signed } => {
                let m = *a2 * abs_pow(norm2(xi), *beta);
                if *signed {
                    m * sign_or_zero(xi[0])
                } else {
                    m
                }
            }
            ConvectionKind::Growth {
                sigma,
                a1,
                alpha,
                a2,
                beta,
            } => sigma.eval(x) + *a1 * signed_pow(s, *alpha) + *a2 * abs_pow(norm2(xi), *beta),
            ConvectionKind::ManufacturedP3Q2 => {
                lit::<T>(4.0) * (T::one() - x[0] - x[0]).abs() - lit(2.0)
            }
            ConvectionKind::ManufacturedQuadratic { p, q } => {
                let two = lit::<T>(2.0);
                let g = (T::one() - two * x[0]).abs();
                two * (*p - T::one()) * g.powf(*p - two) - two * (*q - T::one()) * g.powf(*q - two)
            }
        }
    }

    fn partials(&self, _x: [T; 2], s: T, xi: [T; 2]) -> (T, [T; 2]) {
        let zero = (T::zero(), [T::zero(); 2]);
        match &self.kind {
            ConvectionKind::Zero
            | ConvectionKind::Constant { .. }
            | ConvectionKind::Weight { .. }
            | ConvectionKind::ManufacturedP3Q2
            | ConvectionKind::ManufacturedQuadratic { .. } => zero,
            ConvectionKind::SignedPower { a1, alpha } => {
                (power_slope(*a1, *alpha, s), [T::zero(); 2])
            }
            ConvectionKind::GradientPower { a2, beta, signed } => {
                let mut g = gradient_power_slope(*a2, *beta, xi);
                if *signed {
                    let sg = sign_or_zero(xi[0]);
                    g = [g[0] * sg, g[1] * sg];
                }
                (T::zero(), g)
            }
            ConvectionKind::Growth {
                a1,
                alpha,
                a2,
                beta,
                ..
            } => (
                power_slope(*a1, *alpha, s),
                gradient_power_slope(*a2, *beta, xi),
            ),
        }
    }

    fn envelope(&self) -> &GrowthEnvelope<T> {
        &self.envelope
    }
}

fn sign_or_zero<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.signum()
    }
}

/// `d/ds [a sign(s)|s|^e] = a e |s|^{e−1}`, with `|s|` floored when `e < 1`.
fn power_slope<T: Real>(a: T, e: T, s: T) -> T {
    let mut m = s.abs();
    if e < T::one() {
        m = m.max(lit(DERIVATIVE_FLOOR));
    }
    a * e * abs_pow(m, e - T::one())
}

/// `∇_ξ [a|ξ|^e] = a e |ξ|^{e−2} ξ`, zero at `ξ = 0`.
fn gradient_power_slope<T: Real>(a: T, e: T, xi: [T; 2]) -> [T; 2] {
    let n = norm2(xi);
    if n == T::zero() {
        return [T::zero(); 2];
    }
    let c = a * e * n.powf(e - lit(2.0));
    [c * xi[0], c * xi[1]]
}
