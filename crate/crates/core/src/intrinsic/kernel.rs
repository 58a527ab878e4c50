//! Closed-form convolution kernels with exact L¹ norms.

use serde::{Deserialize, Serialize};

use crate::scalar::{lit, Real};

fn one<T: Real>() -> T {
    T::one()
}

/// Even kernels `ρ` on ℝ with compact support. `scale` is `‖ρ‖₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", bound = "T: Real")]
pub enum Kernel<T> {
    /// `scale / width` on `[−width/2, width/2]`.
    Box {
        width: T,
        #[serde(default = "one")]
        scale: T,
    },
    /// Triangle of base `width` centered at 0.
    Hat {
        width: T,
        #[serde(default = "one")]
        scale: T,
    },
    /// Gaussian of deviation `sigma` cut off at `|z| = radius` and
    /// renormalized.
    Gaussian {
        sigma: T,
        radius: T,
        #[serde(default = "one")]
        scale: T,
    },
}

impl<T: Real> Kernel<T> {
    pub fn validate(&self) -> Result<(), String> {
        let ok = match self {
            Kernel::Box { width, scale } | Kernel::Hat { width, scale } => {
                *width > T::zero() && *scale > T::zero()
            }
            Kernel::Gaussian {
                sigma,
                radius,
                scale,
            } => *sigma > T::zero() && *radius > T::zero() && *scale > T::zero(),
        };
        if ok && self.l1_norm().is_finite() {
            Ok(())
        } else {
            Err(format!(
                "kernel parameters must be positive and finite: {self:?}"
            ))
        }
    }

    /// Half-width of the support.
    pub fn radius(&self) -> T {
        match self {
            Kernel::Box { width, .. } | Kernel::Hat { width, .. } => *width * lit(0.5),
            Kernel::Gaussian { radius, .. } => *radius,
        }
    }

    pub fn l1_norm(&self) -> T {
        match self {
            Kernel::Box { scale, .. }
            | Kernel::Hat { scale, .. }
            | Kernel::Gaussian { scale, .. } => *scale,
        }
    }

    pub fn eval(&self, z: T) -> T {
        let a = z.abs();
        let rad = self.radius();
        if a > rad {
            return T::zero();
        }
        match self {
            Kernel::Box { width, scale } => *scale / *width,
            Kernel::Hat { width, scale } => {
                let height = lit::<T>(2.0) * *scale / *width;
                height * (T::one() - a / rad)
            }
            Kernel::Gaussian {
                sigma,
                radius,
                scale,
            } => {
                let s = sigma.to_f64().unwrap_or(f64::NAN);
                let r = radius.to_f64().unwrap_or(f64::NAN);
                let mass = s
                    * (2.0 * std::f64::consts::PI).sqrt()
                    * libm::erf(r / (s * std::f64::consts::SQRT_2));
                let c = *scale / lit::<T>(mass);
                c * (-(z * z) / (lit::<T>(2.0) * *sigma * *sigma)).exp()
            }
        }
    }

    /// Points where `ρ` or one of its derivatives jumps.
    pub fn breakpoints(&self) -> Vec<T> {
        let r = self.radius();
        match self {
            Kernel::Hat { .. } => vec![-r, T::zero(), r],
            _ => vec![-r, r],
        }
    }

    /// Whether `ρ` is a polynomial between breakpoints.
    pub fn piecewise_polynomial(&self) -> bool {
        !matches!(self, Kernel::Gaussian { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mass(k: &Kernel<f64>) -> f64 {
        let r = k.radius();
        let n = 200_000;
        let dz = 2.0 * r / n as f64;
        (0..n)
            .map(|i| k.eval(-r + (i as f64 + 0.5) * dz) * dz)
            .sum()
    }

    #[test]
    fn l1_norms_are_exact() {
        for k in [
            Kernel::Box {
                width: 0.25,
                scale: 1.0,
            },
            Kernel::Hat {
                width: 0.3,
                scale: 2.0,
            },
            Kernel::Gaussian {
                sigma: 0.05,
                radius: 0.12,
                scale: 1.0,
            },
        ] {
            assert!((mass(&k) - k.l1_norm()).abs() < 1e-6, "{k:?}");
        }
    }

    #[test]
    fn parses_with_default_scale() {
        let k: Kernel<f64> = serde_json::from_str(r#"{"shape":"box","width":0.25}"#).unwrap();
        assert_eq!(
            k,
            Kernel::Box {
                width: 0.25,
                scale: 1.0
            }
        );
        assert!(Kernel::Box {
            width: 0.0,
            scale: 1.0
        }
        .validate()
        .is_err());
    }
}
