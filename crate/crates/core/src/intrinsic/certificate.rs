use serde::{Deserialize, Serialize};

use crate::constants::EmbeddingConstants;
use crate::discretization::{FEFunction, SpaceHierarchy};
use crate::error::{Error, Result};
use crate::intrinsic::IntrinsicOperator;
use crate::scalar::{count, lit, Real};

/// Growth constants of an intrinsic operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct IntrinsicCertificate<T> {
    pub k1: T,
    pub k2: T,
    pub k3: T,
    pub alpha: T,
    pub beta: T,
    pub provenance: String,
}

/// Largest violations of the two certified inequalities over a trial set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct CertificateCheck<T> {
    /// `max ‖T(u)‖_{p̂}^α − K₁‖∇u‖ₚ^{p−1} − K₃`
    pub value_margin: T,
    /// `max ‖∇T(u)‖ₚ^β − K₂‖∇u‖ₚ^{p−1} − K₃`
    pub gradient_margin: T,
    pub worst_trial: Option<usize>,
}

impl<T: Real> CertificateCheck<T> {
    pub fn holds(&self) -> bool {
        self.value_margin <= T::zero() && self.gradient_margin <= T::zero()
    }
}

fn close<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= lit::<T>(1e-9) * T::one().max(b.abs())
}

/// `max{2^{p−2}, 1}`
pub(crate) fn lift_factor<T: Real>(p: T) -> T {
    lit::<T>(2.0).powf(p - lit(2.0)).max(T::one())
}

fn unsupported<T: Real>(op: &IntrinsicOperator<T>, p: T, alpha: T, beta: T) -> Error {
    Error::Unsupported(format!(
        "no certificate for {} with p = {p}, alpha = {alpha}, beta = {beta}; supported: \
         identity with alpha, beta <= p - 1; boundary_lift and convolution with alpha = beta = p - 1",
        op.name()
    ))
}

/// Analytic `(K₁, K₂, K₃)` for the operator. `h` supplies the finest level
/// on which the norms of `u₀` are measured.
pub fn certificate<T: Real>(
    op: &IntrinsicOperator<T>,
    h: &SpaceHierarchy<T>,
    p: T,
    alpha: T,
    beta: T,
    constants: &EmbeddingConstants<T>,
) -> Result<IntrinsicCertificate<T>> {
    let pm1 = p - T::one();
    let slack = lit::<T>(1e-12);
    match op {
        IntrinsicOperator::Identity => {
            if alpha > pm1 + slack || beta > pm1 + slack {
                return Err(unsupported(op, p, alpha, beta));
            }
            let k1 = constants.s_hat()?.powf(alpha);
            Ok(IntrinsicCertificate {
                k1,
                k2: T::one(),
                k3: k1 + T::one(),
                alpha,
                beta,
                provenance:
                    "identity: K1 = S_phat^alpha, K2 = 1, K3 = K1 + 1 via t^a <= t^(p-1) + 1".into(),
            })
        }
        IntrinsicOperator::BoundaryLift { .. } => {
            if !close(alpha, pm1) || !close(beta, pm1) {
                return Err(unsupported(op, p, alpha, beta));
            }
            let m = lift_factor(p);
            let s = constants.s_hat()?;
            let n = h.finest();
            let u0 = op.lift_field(h, n).expect("lift field");
            let u0_value = h.nodal_lebesgue_norm(n, &u0.values, constants.p_hat);
            let u0_grad = h.nodal_grad_norm(n, &u0.values, p);
            Ok(IntrinsicCertificate {
                k1: m * s.powf(pm1),
                k2: m,
                k3: m * u0_value.powf(pm1).max(u0_grad.powf(pm1)),
                alpha,
                beta,
                provenance: "boundary_lift: m = max(2^(p-2), 1), K1 = m S_phat^(p-1), K2 = m, \
                             K3 = m max(|u0|_phat^(p-1), |grad u0|_p^(p-1))"
                    .into(),
            })
        }
        IntrinsicOperator::Convolution { kernel, .. } => {
            if !close(alpha, pm1) || !close(beta, pm1) {
                return Err(unsupported(op, p, alpha, beta));
            }
            let n = count::<T>(h.dim());
            let rho = kernel.l1_norm();
            let s = constants.s_hat()?;
            let k2 = n.powf(pm1) * rho.powf(pm1);
            Ok(IntrinsicCertificate {
                k1: s.powf(pm1) * k2,
                k2,
                k3: T::zero(),
                alpha,
                beta,
                provenance:
                    "convolution: K1 = S^(p-1) N^(p-1) |rho|_1^(p-1), K2 = N^(p-1) |rho|_1^(p-1), \
                             K3 = 0; whole-space S replaced by the domain constant S_phat"
                        .into(),
            })
        }
    }
}

/// Evaluates both certified inequalities on each trial function.
pub fn certificate_check<T: Real>(
    op: &IntrinsicOperator<T>,
    cert: &IntrinsicCertificate<T>,
    h: &SpaceHierarchy<T>,
    trials: &[FEFunction<T>],
    p: T,
    p_hat: T,
) -> Result<CertificateCheck<T>> {
    let pm1 = p - T::one();
    let mut out = CertificateCheck {
        value_margin: T::neg_infinity(),
        gradient_margin: T::neg_infinity(),
        worst_trial: None,
    };
    let mut worst = T::neg_infinity();
    for (i, u) in trials.iter().enumerate() {
        let t = h.grad_norm_p(u, p).powf(pm1);
        let image = op.apply(h, u)?;
        let mv = image.value_norm(p_hat).powf(cert.alpha) - cert.k1 * t - cert.k3;
        let mg = image.grad_norm(p).powf(cert.beta) - cert.k2 * t - cert.k3;
        out.value_margin = out.value_margin.max(mv);
        out.gradient_margin = out.gradient_margin.max(mg);
        if mv.max(mg) > worst {
            worst = mv.max(mg);
            out.worst_trial = Some(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_hierarchy, DomainMesh};
    use crate::intrinsic::{Kernel, LiftSpec};

    fn setup() -> (SpaceHierarchy<f64>, EmbeddingConstants<f64>) {
        let h = build_hierarchy(&DomainMesh::unit_interval(1).unwrap(), 4, 4).unwrap();
        let mut c = EmbeddingConstants::new(3.0, 1, 6.0, 1.1);
        c.insert_exact(6.0, 1.0);
        (h, c)
    }

    #[test]
    fn worked_examples() {
        let (h, c) = setup();
        let conv = IntrinsicOperator::Convolution {
            kernel: Kernel::Box {
                width: 0.25,
                scale: 1.0,
            },
            refine: 4,
            window: None,
        };
        let k = certificate(&conv, &h, 3.0, 2.0, 2.0, &c).unwrap();
        assert_eq!((k.k2, k.k3), (1.0, 0.0));
        let lift = IntrinsicOperator::BoundaryLift {
            u0: LiftSpec::Affine {
                a: 0.0,
                b: 0.0,
                c: 0.0,
            },
        };
        let k = certificate(&lift, &h, 3.0, 2.0, 2.0, &c).unwrap();
        assert_eq!((k.k2, k.k3), (2.0, 0.0));
        let k = certificate(&IntrinsicOperator::Identity, &h, 3.0, 1.0, 1.0, &c).unwrap();
        assert_eq!(k.k1, 1.0);
    }

    #[test]
    fn unsupported_combinations_list_alternatives() {
        let (h, c) = setup();
        let err = certificate(&IntrinsicOperator::Identity, &h, 3.0, 2.5, 1.0, &c).unwrap_err();
        assert!(err.to_string().contains("supported"));
        let lift = IntrinsicOperator::BoundaryLift {
            u0: LiftSpec::Affine {
                a: 1.0,
                b: 0.0,
                c: 0.0,
            },
        };
        assert!(certificate(&lift, &h, 3.0, 1.0, 2.0, &c).is_err());
    }

    #[test]
    fn zero_trial_gives_minus_k3() {
        let (h, c) = setup();
        let op = IntrinsicOperator::Identity;
        let k = certificate(&op, &h, 3.0, 1.5, 1.0, &c).unwrap();
        let r = certificate_check(&op, &k, &h, &[h.zero(3)], 3.0, 6.0).unwrap();
        assert_eq!(r.value_margin, -k.k3);
        assert_eq!(r.gradient_margin, -k.k3);
    }
}
