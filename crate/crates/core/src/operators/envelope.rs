//! The growth envelope `|f(x,s,ξ)| ≤ σ(x) + a₁|s|^α + a₂|ξ|^β` and its
//! weight function σ.

use serde::{Deserialize, Serialize};

use crate::discretization::SpaceHierarchy;
use crate::scalar::{abs_pow, conjugate, lit, Real};

/// Closed-form weight functions of `x` (1D profiles use the first
/// coordinate).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum Weight<T> {
    Zero,
    Constant {
        value: T,
    },
    /// `offset + slope·|x − center|`
    VShape {
        offset: T,
        slope: T,
        center: T,
    },
    /// `coef·|x − center|^exponent`
    Power {
        coef: T,
        center: T,
        exponent: T,
    },
    Abs {
        of: Box<Weight<T>>,
    },
    Sum {
        terms: Vec<Weight<T>>,
    },
}

impl<T: Real> Weight<T> {
    pub fn eval(&self, x: [T; 2]) -> T {
        match self {
            Weight::Zero => T::zero(),
            Weight::Constant { value } => *value,
            Weight::VShape {
                offset,
                slope,
                center,
            } => *offset + *slope * (x[0] - *center).abs(),
            Weight::Power {
                coef,
                center,
                exponent,
            } => *coef * (x[0] - *center).abs().powf(*exponent),
            Weight::Abs { of } => of.eval(x).abs(),
            Weight::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
        }
    }

    /// `‖σ‖_s` over level `level` by its quadrature (`s = ∞`: maximum over
    /// the quadrature points).
    pub fn norm(&self, h: &SpaceHierarchy<T>, level: usize, s: T) -> T {
        let lv = h.level(level);
        let nq = lv.rule().len();
        let mut acc = T::zero();
        for e in 0..lv.elements().len() {
            for k in 0..nq {
                let (x, w) = lv.quad_point(e, k);
                let v = self.eval(x).abs();
                if s.is_infinite() {
                    acc = acc.max(v);
                } else {
                    acc = acc + w * abs_pow(v, s);
                }
            }
        }
        if s.is_infinite() {
            acc
        } else {
            acc.powf(T::one() / s)
        }
    }
}

/// Parameter of (H1) that left its admissible range.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeViolation {
    pub parameter: &'static str,
    pub value: f64,
    pub range: String,
}

impl std::fmt::Display for RangeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} = {} outside {}",
            self.parameter, self.value, self.range
        )
    }
}

/// Constants of the growth condition (H1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GrowthEnvelope<T> {
    pub a1: T,
    pub a2: T,
    pub alpha: T,
    pub beta: T,
    pub r: T,
    pub sigma: Weight<T>,
}

impl<T: Real> GrowthEnvelope<T> {
    /// Envelope with no `s`/`ξ` growth; α = β = p − 1 are admissible for
    /// every `p̂ > p`.
    pub fn weight_only(sigma: Weight<T>, p: T, p_hat: T) -> Self {
        Self {
            a1: T::zero(),
            a2: T::zero(),
            alpha: p - T::one(),
            beta: p - T::one(),
            r: default_r(p_hat),
            sigma,
        }
    }

    pub fn r_conjugate(&self) -> T {
        conjugate(self.r)
    }

    /// Pointwise right-hand side of (H1).
    pub fn bound(&self, x: [T; 2], s: T, xi: [T; 2]) -> T {
        let xi_norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        self.sigma.eval(x).abs()
            + self.a1 * abs_pow(s, self.alpha)
            + self.a2 * abs_pow(xi_norm, self.beta)
    }

    /// Open/closed ranges of (H1) relative to the critical surrogate `p̂`:
    /// α ∈ (0, p̂−1), β ∈ (0, p/p̂′), r ∈ [1, p̂), a₁, a₂ ≥ 0.
    pub fn check_ranges(&self, p: T, p_hat: T) -> Result<(), RangeViolation> {
        let f = |x: T| x.to_f64().unwrap_or(f64::NAN);
        let beta_max = p / conjugate(p_hat);
        if !(self.a1 >= T::zero()) {
            return Err(RangeViolation {
                parameter: "a1",
                value: f(self.a1),
                range: "[0, inf)".into(),
            });
        }
        if !(self.a2 >= T::zero()) {
            return Err(RangeViolation {
                parameter: "a2",
                value: f(self.a2),
                range: "[0, inf)".into(),
            });
        }
        if !(self.alpha > T::zero() && self.alpha < p_hat - T::one()) {
            return Err(RangeViolation {
                parameter: "alpha",
                value: f(self.alpha),
                range: format!("(0, p_hat - 1) = (0, {})", f(p_hat - T::one())),
            });
        }
        if !(self.beta > T::zero() && self.beta < beta_max) {
            return Err(RangeViolation {
                parameter: "beta",
                value: f(self.beta),
                range: format!("(0, p / p_hat') = (0, {})", f(beta_max)),
            });
        }
        if !(self.r >= T::one() && self.r < p_hat) {
            return Err(RangeViolation {
                parameter: "r",
                value: f(self.r),
                range: format!("[1, p_hat) = [1, {})", f(p_hat)),
            });
        }
        Ok(())
    }
}

/// `r = 2` when admissible, otherwise `r = 1`.
pub(crate) fn default_r<T: Real>(p_hat: T) -> T {
    let two = lit::<T>(2.0);
    if two < p_hat {
        two
    } else {
        T::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_hierarchy, DomainMesh};

    #[test]
    fn ranges_are_open_where_required() {
        let mut env = GrowthEnvelope::weight_only(Weight::Zero, 3.0_f64, 6.0);
        assert!(env.check_ranges(3.0, 6.0).is_ok());
        env.alpha = 5.0;
        assert_eq!(env.check_ranges(3.0, 6.0).unwrap_err().parameter, "alpha");
        env.alpha = 1.0;
        env.beta = 2.5;
        assert_eq!(env.check_ranges(3.0, 6.0).unwrap_err().parameter, "beta");
        env.beta = 1.0;
        env.r = 6.0;
        assert_eq!(env.check_ranges(3.0, 6.0).unwrap_err().parameter, "r");
        env.r = 1.0;
        assert!(env.check_ranges(3.0, 6.0).is_ok());
    }

    #[test]
    fn weight_norms() {
        let h = build_hierarchy(&DomainMesh::<f64>::unit_interval(2).unwrap(), 6, 4).unwrap();
        let one = Weight::Constant { value: 1.0 };
        assert!((one.norm(&h, 5, 2.0) - 1.0).abs() < 1e-14);
        let v = Weight::VShape {
            offset: 2.0,
            slope: 8.0,
            center: 0.5,
        };
        // ∫(2 + 8|x − 1/2|) = 4; maximum 6 at the ends
        assert!((v.norm(&h, 5, 1.0) - 4.0).abs() < 1e-12);
        assert!((v.norm(&h, 5, f64::INFINITY) - 6.0).abs() < 0.1);
    }
}
