//! Intrinsic operators `T: W₀^{1,p} → W^{1,p}` composed inside the
//! convection term: the identity, the boundary lift `w ↦ w + u₀` and
//! convolution with a compactly supported kernel.
//!
//! Each operator carries growth constants `(K₁, K₂, K₃)` with
//! `‖T(u)‖_{p̂}^α ≤ K₁‖∇u‖ₚ^{p−1} + K₃` and
//! `‖∇T(u)‖ₚ^β ≤ K₂‖∇u‖ₚ^{p−1} + K₃`.
//!
//! For the identity with `α, β ≤ p − 1` the constants come from
//! `t^a ≤ t^{p−1} + 1` (valid for `0 < a ≤ p − 1`, `t ≥ 0`):
//! `‖u‖_{p̂}^α ≤ S_{p̂}^α ‖∇u‖ₚ^α ≤ S_{p̂}^α(‖∇u‖ₚ^{p−1} + 1)` and likewise for
//! the gradient, so `K₁ = S_{p̂}^α`, `K₂ = 1`, `K₃ = K₁ + 1`.

mod certificate;
mod kernel;

pub(crate) use certificate::lift_factor;
pub use certificate::{certificate, certificate_check, CertificateCheck, IntrinsicCertificate};
pub use kernel::Kernel;

use serde::{Deserialize, Serialize};

use crate::discretization::{
    gauss_legendre_nodes, FEFunction, NodalField, QuadratureSamples, SamplePoint, SpaceHierarchy,
};
use crate::error::{Error, Result};
use crate::operators::SourceCoupling;
use crate::scalar::{lit, Real};

fn default_refine() -> usize {
    4
}

/// Boundary data `u₀`, given in closed form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum LiftSpec<T> {
    /// `u₀(x) = a + b·x₁ + c·x₂`
    Affine {
        a: T,
        b: T,
        #[serde(default = "T::zero")]
        c: T,
    },
}

impl<T: Real> LiftSpec<T> {
    pub fn eval(&self, x: [T; 2]) -> T {
        match self {
            LiftSpec::Affine { a, b, c } => *a + *b * x[0] + *c * x[1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum IntrinsicOperator<T> {
    Identity,
    BoundaryLift {
        u0: LiftSpec<T>,
    },
    /// `T(v) = ρ ∗ v` with `v` extended by zero; 1D only.
    Convolution {
        kernel: Kernel<T>,
        /// Gauss subdivisions per smooth piece for kernels that are not
        /// piecewise polynomial.
        #[serde(default = "default_refine")]
        refine: usize,
        /// Largest admissible kernel half-width.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<T>,
    },
}

impl<T: Real> IntrinsicOperator<T> {
    pub fn validate(&self, dim: usize) -> Result<(), String> {
        match self {
            IntrinsicOperator::Identity | IntrinsicOperator::BoundaryLift { .. } => Ok(()),
            IntrinsicOperator::Convolution {
                kernel,
                refine,
                window,
            } => {
                if dim != 1 {
                    return Err("convolution is implemented for 1D domains only".into());
                }
                if *refine == 0 {
                    return Err("convolution refine must be at least 1".into());
                }
                kernel.validate()?;
                if let Some(w) = window {
                    if kernel.radius() > *w {
                        return Err(format!(
                            "kernel half-width {} exceeds evaluation window {}",
                            kernel.radius(),
                            w
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            IntrinsicOperator::Identity => "identity",
            IntrinsicOperator::BoundaryLift { .. } => "boundary_lift",
            IntrinsicOperator::Convolution { .. } => "convolution",
        }
    }

    /// Interpolated `u₀` on `level` for the boundary lift.
    pub fn lift_field(&self, h: &SpaceHierarchy<T>, level: usize) -> Option<NodalField<T>> {
        match self {
            IntrinsicOperator::BoundaryLift { u0 } => {
                Some(h.interpolate_nodal(level, |x| u0.eval(x)))
            }
            _ => None,
        }
    }

    /// How Newton treats `f(x, T(u), ∇T(u))`.
    pub fn coupling(&self) -> SourceCoupling {
        match self {
            IntrinsicOperator::Convolution { .. } => SourceCoupling::Frozen,
            _ => SourceCoupling::Local,
        }
    }

    /// Values and gradients of `T(u)` at the quadrature points of `u`'s level.
    pub fn apply(&self, h: &SpaceHierarchy<T>, u: &FEFunction<T>) -> Result<QuadratureSamples<T>> {
        match self {
            IntrinsicOperator::Identity => Ok(h.sample(u)),
            IntrinsicOperator::BoundaryLift { .. } => {
                let lift = self
                    .lift_field(h, u.level)
                    .expect("lift operator has a field");
                h.sample(u).shifted_by(&h.sample_field(&lift))
            }
            IntrinsicOperator::Convolution { .. } => self.convolve_gradient(h, u),
        }
    }

    /// `ρ ∗ u` and `ρ ∗ u′` at every quadrature point of `u`'s level.
    pub fn convolve_gradient(
        &self,
        h: &SpaceHierarchy<T>,
        u: &FEFunction<T>,
    ) -> Result<QuadratureSamples<T>> {
        let conv = self.convolver(h, u)?;
        let lv = h.level(u.level);
        let nq = lv.rule().len();
        let mut points = Vec::with_capacity(nq * lv.elements().len());
        for e in 0..lv.elements().len() {
            for k in 0..nq {
                let (x, weight) = lv.quad_point(e, k);
                let (value, slope) = conv.at(x[0]);
                points.push(SamplePoint {
                    x,
                    weight,
                    value,
                    grad: [slope, T::zero()],
                });
            }
        }
        Ok(QuadratureSamples {
            level: u.level,
            per_element: nq,
            points,
        })
    }

    /// `((ρ ∗ u)(x), (ρ ∗ u′)(x))` at one point.
    pub fn convolve_at(&self, h: &SpaceHierarchy<T>, u: &FEFunction<T>, x: T) -> Result<(T, T)> {
        Ok(self.convolver(h, u)?.at(x))
    }

    fn convolver<'a>(
        &'a self,
        h: &SpaceHierarchy<T>,
        u: &FEFunction<T>,
    ) -> Result<Convolver<'a, T>> {
        let IntrinsicOperator::Convolution { kernel, refine, .. } = self else {
            return Err(Error::Unsupported(format!(
                "{} is not a convolution",
                self.name()
            )));
        };
        self.validate(h.dim()).map_err(Error::Unsupported)?;
        let lv = h.level(u.level);
        let (nodes, weights) = gauss_legendre_nodes::<T>(3);
        Ok(Convolver {
            kernel,
            pieces: if kernel.piecewise_polynomial() {
                1
            } else {
                *refine
            },
            xs: lv.coords().iter().map(|c| c[0]).collect(),
            us: h.nodal_values(u),
            gauss: nodes
                .into_iter()
                .zip(weights)
                .map(|(t, w)| (lit::<T>(0.5) * (t + T::one()), lit::<T>(0.5) * w))
                .collect(),
        })
    }
}

struct Convolver<'a, T> {
    kernel: &'a Kernel<T>,
    pieces: usize,
    xs: Vec<T>,
    us: Vec<T>,
    /// Gauss–Legendre points on [0, 1] with weights summing to 1.
    gauss: Vec<(T, T)>,
}

impl<T: Real> Convolver<'_, T> {
    /// Integrates `ρ(x − y)u(y)` and `ρ(x − y)u′(y)` exactly on every piece
    /// where both `u` and `ρ(x − ·)` are polynomial.
    fn at(&self, x: T) -> (T, T) {
        let rad = self.kernel.radius();
        let a = self.xs[0];
        let b = self.xs[self.xs.len() - 1];
        let lo = (x - rad).max(a);
        let hi = (x + rad).min(b);
        if !(lo < hi) {
            return (T::zero(), T::zero());
        }
        let mut cuts: Vec<T> = vec![lo, hi];
        let first = self.xs.partition_point(|&t| t <= lo);
        cuts.extend(self.xs[first..].iter().copied().take_while(|&t| t < hi));
        cuts.extend(
            self.kernel
                .breakpoints()
                .into_iter()
                .map(|bp| x - bp)
                .filter(|&y| y > lo && y < hi),
        );
        cuts.sort_by(|p, q| p.partial_cmp(q).expect("finite cut points"));
        cuts.dedup();
        let mut value = T::zero();
        let mut slope = T::zero();
        let np = lit::<T>(self.pieces as f64);
        for w in cuts.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if !(s1 > s0) {
                continue;
            }
            let mid = lit::<T>(0.5) * (s0 + s1);
            let i = self
                .xs
                .partition_point(|&t| t <= mid)
                .clamp(1, self.xs.len() - 1)
                - 1;
            let (x0, x1) = (self.xs[i], self.xs[i + 1]);
            let du = (self.us[i + 1] - self.us[i]) / (x1 - x0);
            let len = (s1 - s0) / np;
            for piece in 0..self.pieces {
                let start = s0 + len * lit(piece as f64);
                for &(t, wt) in &self.gauss {
                    let y = start + len * t;
                    let rho = self.kernel.eval(x - y) * wt * len;
                    let uy = self.us[i] + du * (y - x0);
                    value = value + rho * uy;
                    slope = slope + rho * du;
                }
            }
        }
        (value, slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_hierarchy, DomainMesh};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(levels: usize) -> SpaceHierarchy<f64> {
        build_hierarchy(&DomainMesh::unit_interval(1).unwrap(), levels, 4).unwrap()
    }

    fn boxed(width: f64) -> IntrinsicOperator<f64> {
        IntrinsicOperator::Convolution {
            kernel: Kernel::Box { width, scale: 1.0 },
            refine: 4,
            window: None,
        }
    }

    #[test]
    fn box_average_of_parabola() {
        let h = unit(5);
        let u = h.interpolate(4, |x| x[0] * (1.0 - x[0]));
        let (v, g) = boxed(0.25).convolve_at(&h, &u, 0.5).unwrap();
        // mesh nodes at multiples of 1/16 resolve the parabola only up to
        // interpolation error
        let u_fine = unit(11);
        let uf = u_fine.interpolate(10, |x| x[0] * (1.0 - x[0]));
        let (vf, _) = boxed(0.25).convolve_at(&u_fine, &uf, 0.5).unwrap();
        // 4 ∫_{3/8}^{5/8} t(1 − t) dt = 47/192
        let exact = 47.0 / 192.0;
        assert!((vf - exact).abs() < 1e-6, "{vf}");
        assert!((v - exact).abs() < 1e-3);
        assert!(g.abs() < 1e-14);
    }

    #[test]
    fn identity_and_zero_lift_sample_exactly() {
        let h = unit(4);
        let u = h.interpolate(3, |x| (5.0 * x[0]).sin());
        assert_eq!(
            IntrinsicOperator::Identity.apply(&h, &u).unwrap(),
            h.sample(&u)
        );
        let lift = IntrinsicOperator::BoundaryLift {
            u0: LiftSpec::Affine {
                a: 0.0,
                b: 0.0,
                c: 0.0,
            },
        };
        assert_eq!(lift.apply(&h, &u).unwrap(), h.sample(&u));
    }

    #[test]
    fn lift_shift_is_u0() {
        let h = unit(4);
        let u = h.interpolate(3, |x| (5.0 * x[0]).sin());
        let lift = IntrinsicOperator::BoundaryLift {
            u0: LiftSpec::Affine {
                a: 1.0,
                b: -2.0,
                c: 0.0,
            },
        };
        let t = lift.apply(&h, &u).unwrap();
        for (a, b) in t.points.iter().zip(&h.sample(&u).points) {
            assert!((a.value - b.value - (1.0 - 2.0 * a.x[0])).abs() < 1e-14);
            assert!((a.grad[0] - b.grad[0] + 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_is_homogeneous_and_preserves_slopes() {
        let h = unit(6);
        let u = h.interpolate(5, |x| if x[0] < 0.5 { x[0] } else { 1.0 - x[0] });
        let op = IntrinsicOperator::Convolution {
            kernel: Kernel::Hat {
                width: 0.2,
                scale: 1.0,
            },
            refine: 4,
            window: Some(0.5),
        };
        let (_, g) = op.convolve_at(&h, &u, 0.25).unwrap();
        assert!((g - 1.0).abs() < 1e-13);
        let a = op.apply(&h, &u).unwrap();
        let b = op.apply(&h, &u.scaled(2.5)).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((2.5 * p.value - q.value).abs() < 1e-13);
        }
        let zero = op.apply(&h, &h.zero(5)).unwrap();
        assert!(zero
            .points
            .iter()
            .all(|p| p.value == 0.0 && p.grad[0] == 0.0));
    }

    #[test]
    fn derivative_formula_matches_differences() {
        let h = unit(8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ops = [
            boxed(0.25),
            IntrinsicOperator::Convolution {
                kernel: Kernel::Hat {
                    width: 0.3,
                    scale: 1.0,
                },
                refine: 4,
                window: None,
            },
            IntrinsicOperator::Convolution {
                kernel: Kernel::Gaussian {
                    sigma: 0.05,
                    radius: 0.15,
                    scale: 1.0,
                },
                refine: 8,
                window: None,
            },
        ];
        let u = h.interpolate(7, |x| (std::f64::consts::PI * x[0]).sin() * (1.0 + x[0]));
        for op in &ops {
            for _ in 0..20 {
                let x = rng.gen_range(0.05..0.95);
                let d = 1e-3;
                let (vp, _) = op.convolve_at(&h, &u, x + d).unwrap();
                let (vm, _) = op.convolve_at(&h, &u, x - d).unwrap();
                let (_, g) = op.convolve_at(&h, &u, x).unwrap();
                assert!(((vp - vm) / (2.0 * d) - g).abs() < 1e-3, "{op:?} at {x}");
            }
        }
    }

    #[test]
    fn window_and_dimension_are_enforced() {
        let op = IntrinsicOperator::Convolution {
            kernel: Kernel::Box {
                width: 0.5,
                scale: 1.0,
            },
            refine: 4,
            window: Some(0.1),
        };
        assert!(op.validate(1).unwrap_err().contains("window"));
        assert!(boxed(0.2).validate(2).is_err());
        let h = unit(3);
        assert!(op.apply(&h, &h.zero(2)).is_err());
        assert!(IntrinsicOperator::Identity
            .convolve_gradient(&h, &h.zero(2))
            .is_err());
    }
}
