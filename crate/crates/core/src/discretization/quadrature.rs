//! Reference quadrature rules in barycentric form.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Quadrature on the reference simplex. Points are barycentric coordinates
/// (the third coordinate is unused in 1D); weights sum to one, so element
/// weights are `weight * measure`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    pub barycentric: Vec<[T; 3]>,
    pub weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `n`-point Gauss–Legendre rule on a segment, exact to degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition(
                "quadrature order must be positive".into(),
            ));
        }
        let (nodes, weights) = gauss_legendre_nodes::<T>(n);
        let half = lit::<T>(0.5);
        let barycentric = nodes
            .iter()
            .map(|&xi| {
                let t = half * (xi + T::one());
                [T::one() - t, t, T::zero()]
            })
            .collect();
        let weights = weights.into_iter().map(|w| w * half).collect();
        Ok(Self {
            barycentric,
            weights,
        })
    }

    /// Symmetric triangle rule exact to polynomial degree `degree` (1..=5).
    pub fn triangle(degree: usize) -> Result<Self> {
        let mut bary = Vec::new();
        let mut w = Vec::new();
        let orbit3 = |a: f64, b: f64, weight: f64, bary: &mut Vec<[T; 3]>, w: &mut Vec<T>| {
            for perm in [[a, b, b], [b, a, b], [b, b, a]] {
                bary.push([lit(perm[0]), lit(perm[1]), lit(perm[2])]);
                w.push(lit(weight));
            }
        };
        match degree {
            1 => {
                let c = 1.0 / 3.0;
                bary.push([lit(c), lit(c), lit(c)]);
                w.push(T::one());
            }
            2 => orbit3(2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0, &mut bary, &mut w),
            3 | 4 => {
                orbit3(
                    0.108_103_018_168_070,
                    0.445_948_490_915_965,
                    0.223_381_589_678_011,
                    &mut bary,
                    &mut w,
                );
                orbit3(
                    0.816_847_572_980_459,
                    0.091_576_213_509_771,
                    0.109_951_743_655_322,
                    &mut bary,
                    &mut w,
                );
            }
            5 => {
                let c = 1.0 / 3.0;
                bary.push([lit(c), lit(c), lit(c)]);
                w.push(lit(0.225));
                orbit3(
                    0.059_715_871_789_770,
                    0.470_142_064_105_115,
                    0.132_394_152_788_506,
                    &mut bary,
                    &mut w,
                );
                orbit3(
                    0.797_426_985_353_087,
                    0.101_286_507_323_456,
                    0.125_939_180_544_827,
                    &mut bary,
                    &mut w,
                );
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "triangle quadrature of degree {degree}; supported degrees are 1..=5"
                )))
            }
        }
        // renormalize so the weights sum to one to rounding precision
        let total: T = w.iter().copied().sum();
        let w = w.into_iter().map(|x| x / total).collect();
        Ok(Self {
            barycentric: bary,
            weights: w,
        })
    }
}

/// Nodes and weights on [-1, 1] via Newton iteration on Legendre polynomials.
pub fn gauss_legendre_nodes<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = lit(-x);
        nodes[n - 1 - i] = lit(x);
        weights[i] = lit(w);
        weights[n - 1 - i] = lit(w);
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
