//! Finite-element functions, their norms and quadrature samples.

use serde::{Deserialize, Serialize};

use crate::discretization::hierarchy::SpaceHierarchy;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};
use crate::scalar::{abs_pow, dot2, norm2, Real};

/// Element of `X_n`: coefficients over the free nodes of level `level`
/// (boundary values are zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FEFunction<T> {
    pub level: usize,
    pub coeffs: Vec<T>,
}

impl<T: Real> FEFunction<T> {
    pub fn scaled(&self, c: T) -> Self {
        Self {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&x| c * x).collect(),
        }
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        check_level(self.level, other.level)?;
        Ok(Self {
            level: self.level,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| a + c * b)
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// P1 function on all nodes of a level, boundary included; used for the
/// boundary datum `u₀ ∈ W^{1,p}(Ω)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NodalField<T> {
    pub level: usize,
    pub values: Vec<T>,
}

/// Values and gradients at the quadrature points of a level, element-major.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSamples<T> {
    pub level: usize,
    pub per_element: usize,
    pub points: Vec<SamplePoint<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePoint<T> {
    pub x: [T; 2],
    pub weight: T,
    pub value: T,
    pub grad: [T; 2],
}

impl<T: Real> QuadratureSamples<T> {
    /// `(Σ w |value|^r)^{1/r}`; the maximum for `r = ∞`.
    pub fn value_norm(&self, r: T) -> T {
        if r.is_infinite() {
            return self
                .points
                .iter()
                .fold(T::zero(), |m, s| m.max(s.value.abs()));
        }
        let s: T = self
            .points
            .iter()
            .map(|s| s.weight * abs_pow(s.value, r))
            .sum();
        s.powf(T::one() / r)
    }

    /// `(Σ w |grad|^p)^{1/p}`.
    pub fn grad_norm(&self, p: T) -> T {
        let s: T = self
            .points
            .iter()
            .map(|s| s.weight * abs_pow(norm2(s.grad), p))
            .sum();
        s.powf(T::one() / p)
    }

    /// Adds a field sampled on the same points.
    pub fn shifted_by(&self, other: &Self) -> Result<Self> {
        check_level(self.level, other.level)?;
        let points = self
            .points
            .iter()
            .zip(&other.points)
            .map(|(a, b)| SamplePoint {
                x: a.x,
                weight: a.weight,
                value: a.value + b.value,
                grad: [a.grad[0] + b.grad[0], a.grad[1] + b.grad[1]],
            })
            .collect();
        Ok(Self {
            level: self.level,
            per_element: self.per_element,
            points,
        })
    }
}

pub(crate) fn check_level(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::LevelMismatch { expected, found })
    }
}

impl<T: Real> SpaceHierarchy<T> {
    pub fn zero(&self, level: usize) -> FEFunction<T> {
        FEFunction {
            level,
            coeffs: vec![T::zero(); self.level(level).num_dofs()],
        }
    }

    /// Nodal interpolant restricted to the free nodes.
    pub fn interpolate(&self, level: usize, f: impl Fn([T; 2]) -> T) -> FEFunction<T> {
        let lv = self.level(level);
        FEFunction {
            level,
            coeffs: (0..lv.num_dofs())
                .map(|d| f(lv.coords()[lv.node_of(d)]))
                .collect(),
        }
    }

    /// Nodal interpolant on all nodes, boundary included.
    pub fn interpolate_nodal(&self, level: usize, f: impl Fn([T; 2]) -> T) -> NodalField<T> {
        NodalField {
            level,
            values: self.level(level).coords().iter().map(|&x| f(x)).collect(),
        }
    }

    /// The `dof`-th nodal hat of `level`.
    pub fn hat(&self, level: usize, dof: usize) -> FEFunction<T> {
        let mut u = self.zero(level);
        u.coeffs[dof] = T::one();
        u
    }

    pub fn nodal_values(&self, u: &FEFunction<T>) -> Vec<T> {
        self.level(u.level).expand(&u.coeffs)
    }

    /// Rewrites `u` as an element of `X_target`; the function is unchanged.
    pub fn prolongate(&self, u: &FEFunction<T>, target: usize) -> Result<FEFunction<T>> {
        if target < u.level {
            return Err(Error::Precondition(format!(
                "cannot prolongate from level {} down to level {target}",
                u.level
            )));
        }
        if target >= self.num_levels() {
            return Err(Error::Precondition(format!(
                "target level {target} does not exist"
            )));
        }
        let mut nodal = self.nodal_values(u);
        for n in u.level..target {
            nodal = self.prolongate_nodal(n, &nodal);
        }
        Ok(FEFunction {
            level: target,
            coeffs: self.level(target).restrict(&nodal),
        })
    }

    pub fn prolongate_field(&self, f: &NodalField<T>, target: usize) -> Result<NodalField<T>> {
        if target < f.level || target >= self.num_levels() {
            return Err(Error::Precondition(format!(
                "cannot move nodal field from level {} to level {target}",
                f.level
            )));
        }
        let mut nodal = f.values.clone();
        for n in f.level..target {
            nodal = self.prolongate_nodal(n, &nodal);
        }
        Ok(NodalField {
            level: target,
            values: nodal,
        })
    }

    /// P1 stiffness matrix `∫∇φᵢ·∇φⱼ` on the free nodes of `level`.
    pub fn stiffness(&self, level: usize) -> SparseMatrix<T> {
        let lv = self.level(level);
        let mut tb = TripletBuilder::new(lv.num_dofs());
        for (e, el) in lv.elements().iter().enumerate() {
            let nodes = lv.element_nodes(e);
            for (i, &ni) in nodes.iter().enumerate() {
                let Some(di) = lv.dof_of(ni) else { continue };
                for (j, &nj) in nodes.iter().enumerate() {
                    if let Some(dj) = lv.dof_of(nj) {
                        let g = dot2(el.grads[i], el.grads[j]);
                        tb.push(di, dj, g * el.measure);
                    }
                }
            }
        }
        tb.build()
    }

    /// Piecewise-constant gradients of `u`, one per element.
    pub fn gradients(&self, u: &FEFunction<T>) -> Vec<[T; 2]> {
        self.nodal_gradients(u.level, &self.nodal_values(u))
    }

    pub fn nodal_gradients(&self, level: usize, nodal: &[T]) -> Vec<[T; 2]> {
        let lv = self.level(level);
        (0..lv.elements().len())
            .map(|e| lv.element_gradient(e, nodal))
            .collect()
    }

    /// `‖∇u‖_p`, exact for P1 since `|∇u|^p` is elementwise constant.
    pub fn grad_norm_p(&self, u: &FEFunction<T>, p: T) -> T {
        self.nodal_grad_norm(u.level, &self.nodal_values(u), p)
    }

    pub fn nodal_grad_norm(&self, level: usize, nodal: &[T], p: T) -> T {
        let lv = self.level(level);
        let s: T = lv
            .elements()
            .iter()
            .enumerate()
            .map(|(e, el)| el.measure * abs_pow(norm2(lv.element_gradient(e, nodal)), p))
            .sum();
        s.powf(T::one() / p)
    }

    /// `‖u‖_r` by the level quadrature; `r = ∞` gives the nodal maximum.
    pub fn lebesgue_norm(&self, u: &FEFunction<T>, r: T) -> T {
        self.nodal_lebesgue_norm(u.level, &self.nodal_values(u), r)
    }

    pub fn nodal_lebesgue_norm(&self, level: usize, nodal: &[T], r: T) -> T {
        if r.is_infinite() {
            return nodal.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        }
        let lv = self.level(level);
        let nq = lv.rule().len();
        let mut s = T::zero();
        for e in 0..lv.elements().len() {
            for k in 0..nq {
                let (_, w) = lv.quad_point(e, k);
                s = s + w * abs_pow(lv.element_value(e, k, nodal), r);
            }
        }
        s.powf(T::one() / r)
    }

    /// `∫ u v` by quadrature.
    pub fn l2_inner(&self, u: &FEFunction<T>, v: &FEFunction<T>) -> Result<T> {
        check_level(u.level, v.level)?;
        let lv = self.level(u.level);
        let (nu, nv) = (self.nodal_values(u), self.nodal_values(v));
        let mut s = T::zero();
        for e in 0..lv.elements().len() {
            for k in 0..lv.rule().len() {
                let (_, w) = lv.quad_point(e, k);
                s = s + w * lv.element_value(e, k, &nu) * lv.element_value(e, k, &nv);
            }
        }
        Ok(s)
    }

    /// Values and gradients of `u` at every quadrature point of its level.
    pub fn sample(&self, u: &FEFunction<T>) -> QuadratureSamples<T> {
        self.sample_nodal(u.level, &self.nodal_values(u))
    }

    pub fn sample_field(&self, f: &NodalField<T>) -> QuadratureSamples<T> {
        self.sample_nodal(f.level, &f.values)
    }

    pub fn sample_nodal(&self, level: usize, nodal: &[T]) -> QuadratureSamples<T> {
        let lv = self.level(level);
        let nq = lv.rule().len();
        let mut points = Vec::with_capacity(nq * lv.elements().len());
        for e in 0..lv.elements().len() {
            let grad = lv.element_gradient(e, nodal);
            for k in 0..nq {
                let (x, weight) = lv.quad_point(e, k);
                points.push(SamplePoint {
                    x,
                    weight,
                    value: lv.element_value(e, k, nodal),
                    grad,
                });
            }
        }
        QuadratureSamples {
            level,
            per_element: nq,
            points,
        }
    }

    /// Point evaluation of `u`; `None` outside the domain.
    pub fn evaluate(&self, u: &FEFunction<T>, x: [T; 2]) -> Option<T> {
        let lv = self.level(u.level);
        let nodal = self.nodal_values(u);
        let (e, bary) = lv.locate(x)?;
        Some(
            lv.element_nodes(e)
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (slot, &v)| acc + bary[slot] * nodal[v]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_hierarchy, DomainMesh};
    use proptest::prelude::*;

    fn line(levels: usize) -> SpaceHierarchy<f64> {
        build_hierarchy(&DomainMesh::unit_interval(2).unwrap(), levels, 4).unwrap()
    }

    #[test]
    fn hat_prolongates_to_interpolated_values() {
        let h = line(2);
        let hat = h.hat(0, 0);
        let fine = h.prolongate(&hat, 1).unwrap();
        assert_eq!(fine.coeffs, vec![0.5, 1.0, 0.5]);
        let zero = h.prolongate(&h.zero(0), 1).unwrap();
        assert!(zero.coeffs.iter().all(|&c| c == 0.0));
        assert!(h.prolongate(&fine, 0).is_err());
    }

    #[test]
    fn hat_norms() {
        let h = line(1);
        let hat = h.hat(0, 0);
        for p in [1.5, 2.0, 3.0, 7.25] {
            assert!((h.grad_norm_p(&hat, p) - 2.0).abs() < 1e-14);
        }
        assert!((h.lebesgue_norm(&hat, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(h.grad_norm_p(&h.zero(0), 3.0), 0.0);
        assert_eq!(h.lebesgue_norm(&h.zero(0), 2.0), 0.0);
    }

    #[test]
    fn interpolant_norms_converge() {
        let h = line(9);
        let u = h.interpolate(8, |x| x[0] * (1.0 - x[0]));
        // ∫|1-2x|^3 = 1/4, ∫x²(1-x)² = 1/30
        assert!((h.grad_norm_p(&u, 3.0) - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-4);
        assert!((h.lebesgue_norm(&u, 2.0) - (1.0f64 / 30.0).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn sample_of_hat_and_identity() {
        let h = line(1);
        let s = h.sample(&h.hat(0, 0));
        for (i, pt) in s.points.iter().enumerate() {
            let expected = if i < s.per_element { 2.0 } else { -2.0 };
            assert_eq!(pt.grad[0], expected);
        }
        let h = line(3);
        let lin = h.interpolate_nodal(2, |x| x[0]);
        let s = h.sample_field(&lin);
        for pt in &s.points {
            assert!((pt.value - pt.x[0]).abs() < 1e-15);
            assert!((pt.grad[0] - 1.0).abs() < 1e-13);
        }
        let zs = h.sample(&h.zero(2));
        assert!(zs
            .points
            .iter()
            .all(|p| p.value == 0.0 && p.grad == [0.0, 0.0]));
    }

    #[test]
    fn weights_sum_to_element_measure() {
        for mesh in [
            DomainMesh::<f64>::unit_interval(3).unwrap(),
            DomainMesh::unit_square(),
        ] {
            let h = build_hierarchy(&mesh, 2, 4).unwrap();
            let lv = h.level(1);
            for (e, el) in lv.elements().iter().enumerate() {
                let total: f64 = (0..lv.rule().len()).map(|k| lv.quad_point(e, k).1).sum();
                assert!((total - el.measure).abs() <= 4.0 * f64::EPSILON * el.measure);
            }
        }
    }

    #[test]
    fn single_precision_norms() {
        let h = build_hierarchy(&DomainMesh::<f32>::unit_interval(2).unwrap(), 1, 4).unwrap();
        let hat = h.hat(0, 0);
        assert!((h.grad_norm_p(&hat, 3.0) - 2.0).abs() < 1e-5);
        assert!((h.lebesgue_norm(&hat, 1.0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn two_dimensional_prolongation_is_exact() {
        let h = build_hierarchy(&DomainMesh::<f64>::unit_square(), 4, 4).unwrap();
        let u = h.interpolate(1, |x| (x[0] * 3.0).sin() * x[1]);
        let fine = h.prolongate(&u, 3).unwrap();
        for &pt in &[[0.3, 0.2], [0.71, 0.55], [0.12, 0.9]] {
            let a = h.evaluate(&u, pt).unwrap();
            let b = h.evaluate(&fine, pt).unwrap();
            assert!((a - b).abs() < 1e-14);
        }
        let p = 2.5;
        let rel = (h.grad_norm_p(&u, p) - h.grad_norm_p(&fine, p)).abs() / h.grad_norm_p(&u, p);
        assert!(rel < 1e-12);
    }

    proptest! {
        #[test]
        fn prolongation_preserves_norms(coeffs in proptest::collection::vec(-5.0f64..5.0, 7), k in 3usize..6) {
            let h = line(6);
            let u = FEFunction { level: 2, coeffs };
            let v = h.prolongate(&u, k).unwrap();
            let g0 = h.grad_norm_p(&u, 3.0);
            let g1 = h.grad_norm_p(&v, 3.0);
            prop_assert!((g0 - g1).abs() <= 1e-12 * g0.max(1e-300));
            // |u|^r is a polynomial per element only for even r
            for r in [2.0, 4.0] {
                let a = h.lebesgue_norm(&u, r);
                let b = h.lebesgue_norm(&v, r);
                prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
            }
            for &x in &[0.1, 0.33, 0.5, 0.87] {
                let a = h.evaluate(&u, [x, 0.0]).unwrap();
                let b = h.evaluate(&v, [x, 0.0]).unwrap();
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn gradient_norm_is_homogeneous(coeffs in proptest::collection::vec(-5.0f64..5.0, 7), c in -10.0f64..10.0) {
            let h = line(3);
            let u = FEFunction { level: 2, coeffs };
            let lhs = h.grad_norm_p(&u.scaled(c), 2.5);
            let rhs = c.abs() * h.grad_norm_p(&u, 2.5);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn holder_consistency(coeffs in proptest::collection::vec(-5.0f64..5.0, 15), q in 1.1f64..2.9) {
            let h = build_hierarchy(&DomainMesh::interval(0.0, 2.5, 2).unwrap(), 4, 4).unwrap();
            let u = FEFunction { level: 3, coeffs };
            let p = 3.0;
            let omega = h.level(3).measure();
            let lhs = h.lebesgue_norm(&u, q);
            let rhs = omega.powf((p - q) / (p * q)) * h.lebesgue_norm(&u, p);
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}
