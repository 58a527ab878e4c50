//! Zeros of continuous maps on a ball whose boundary sphere satisfies
//! `⟨F(v), v⟩ ≥ 0`: damped Newton with a Levenberg–Marquardt fallback,
//! then arclength continuation of the homotopy to a linear anchor map.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, euclid_norm, sup_norm, SparseMatrix};
use crate::scalar::{lit, Real};

/// A square nonlinear system on a normed coefficient space.
pub trait ZeroProblem<T: Real> {
    fn dim(&self) -> usize;

    fn residual(&self, v: &[T]) -> Result<Vec<T>>;

    fn jacobian(&self, v: &[T]) -> Result<SparseMatrix<T>>;

    /// Norm of the ball; must be positively homogeneous.
    fn norm(&self, v: &[T]) -> T {
        euclid_norm(v)
    }

    /// Linear map with `⟨anchor(v), v⟩ > 0` for `v ≠ 0`, the starting point
    /// of continuation.
    fn anchor(&self) -> SparseMatrix<T> {
        SparseMatrix::identity(self.dim())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct BrouwerOptions<T> {
    /// Acceptance threshold on `max |Fᵢ(v)|`.
    pub tol: T,
    pub max_newton: usize,
    /// Number of step halvings allowed during continuation.
    pub max_depth: usize,
    pub initial_step: T,
    /// Budget of continuation steps.
    pub max_steps: usize,
}

impl<T: Real> Default for BrouwerOptions<T> {
    fn default() -> Self {
        Self {
            tol: lit(1e-10),
            max_newton: 100,
            max_depth: 20,
            initial_step: lit(0.1),
            max_steps: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrouwerSolution<T> {
    pub v: Vec<T>,
    pub residual_sup: T,
    pub newton_iters: usize,
    pub continuation_steps: usize,
    /// `max |Fᵢ|` after every accepted Newton step.
    pub history: Vec<T>,
}

/// No zero found; carries the best iterate seen.
#[derive(Clone, Debug, PartialEq)]
pub struct BrouwerFailure<T> {
    pub message: String,
    pub best: Vec<T>,
    pub best_residual: T,
    pub history: Vec<T>,
    pub newton_iters: usize,
    pub continuation_steps: usize,
}

impl<T: Real> std::fmt::Display for BrouwerFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (best residual {:e} after {} Newton steps, {} continuation steps)",
            self.message,
            self.best_residual.to_f64().unwrap_or(f64::NAN),
            self.newton_iters,
            self.continuation_steps
        )
    }
}

impl<T: Real> std::error::Error for BrouwerFailure<T> {}

impl<T: Real> From<BrouwerFailure<T>> for Error {
    fn from(f: BrouwerFailure<T>) -> Self {
        Error::Solver(f.to_string())
    }
}

struct Tracker<T> {
    best: Vec<T>,
    best_residual: T,
    history: Vec<T>,
    newton_iters: usize,
    continuation_steps: usize,
}

impl<T: Real> Tracker<T> {
    fn offer(&mut self, v: &[T], res: T) {
        if res < self.best_residual {
            self.best_residual = res;
            self.best = v.to_vec();
        }
    }

    fn fail(self, message: impl Into<String>) -> BrouwerFailure<T> {
        BrouwerFailure {
            message: message.into(),
            best: self.best,
            best_residual: self.best_residual,
            history: self.history,
            newton_iters: self.newton_iters,
            continuation_steps: self.continuation_steps,
        }
    }
}

enum Outcome<T> {
    Converged(Vec<T>),
    Stalled,
}

/// Map `H(v) = s·F(v) + (1 − s)·K v` for one continuation parameter `s`.
struct Blend<'a, T, P: ?Sized> {
    problem: &'a P,
    anchor: &'a SparseMatrix<T>,
    s: T,
}

impl<T: Real, P: ZeroProblem<T> + ?Sized> Blend<'_, T, P> {
    fn eval(&self, v: &[T]) -> Result<Vec<T>> {
        let f = self.problem.residual(v)?;
        if self.s == T::one() {
            return Ok(f);
        }
        let k = self.anchor.mul_vec(v);
        let c = T::one() - self.s;
        Ok(f.iter()
            .zip(&k)
            .map(|(&a, &b)| self.s * a + c * b)
            .collect())
    }

    fn jacobian(&self, v: &[T]) -> Result<SparseMatrix<T>> {
        let j = self.problem.jacobian(v)?;
        if self.s == T::one() {
            return Ok(j);
        }
        Ok(j.combine(self.s, self.anchor, T::one() - self.s))
    }
}

fn finite<T: Real>(v: &[T]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn project<T: Real, P: ZeroProblem<T> + ?Sized>(problem: &P, radius: T, mut v: Vec<T>) -> Vec<T> {
    if radius.is_finite() {
        let n = problem.norm(&v);
        if n > radius {
            let c = radius / n;
            for x in v.iter_mut() {
                *x = *x * c;
            }
        }
    }
    v
}

/// Levenberg–Marquardt direction `−(JᵀJ + μI)⁻¹ JᵀH`.
fn lm_direction<T: Real>(j: &SparseMatrix<T>, h: &[T]) -> Option<Vec<T>> {
    let g = j.transpose_mul_vec(h);
    let n = j.dim();
    let normal = j.normal_matrix(T::zero());
    let diag = (0..n).fold(T::zero(), |m, i| m.max(normal.get(i, i)));
    let mu = lit::<T>(1e-6) * diag.max(T::min_positive_value()) + dot(h, h).sqrt();
    let shifted = j.normal_matrix(mu);
    let d = shifted.solve(&g).ok()?;
    let d: Vec<T> = d.into_iter().map(|x| -x).collect();
    finite(&d).then_some(d)
}

/// Damped Newton on `map` from `start`, every iterate projected to the ball.
fn newton<T: Real, P: ZeroProblem<T> + ?Sized>(
    blend: &Blend<'_, T, P>,
    radius: T,
    start: Vec<T>,
    tol: T,
    max_iters: usize,
    track: &mut Tracker<T>,
) -> std::result::Result<Outcome<T>, String> {
    let problem = blend.problem;
    let mut v = project(problem, radius, start);
    let mut h = blend.eval(&v).map_err(|e| e.to_string())?;
    if !finite(&h) {
        return Ok(Outcome::Stalled);
    }
    let final_stage = blend.s == T::one();
    for _ in 0..max_iters {
        let res = sup_norm(&h);
        if final_stage {
            track.offer(&v, res);
        }
        if res <= tol {
            return Ok(Outcome::Converged(v));
        }
        let j = blend.jacobian(&v).map_err(|e| e.to_string())?;
        let phi = dot(&h, &h);
        let minus_h: Vec<T> = h.iter().map(|&x| -x).collect();
        let newton_dir = j.solve(&minus_h).ok().filter(|d| finite(d));
        let mut candidates = Vec::with_capacity(2);
        if let Some(d) = newton_dir {
            candidates.push(d);
        }
        if let Some(d) = lm_direction(&j, &h) {
            candidates.push(d);
        }
        let mut accepted = None;
        for d in candidates {
            let slope = lit::<T>(2.0) * dot(&j.transpose_mul_vec(&h), &d);
            if !(slope < T::zero()) {
                continue;
            }
            let mut t = T::one();
            for _ in 0..40 {
                let trial: Vec<T> = v.iter().zip(&d).map(|(&a, &b)| a + t * b).collect();
                let trial = project(problem, radius, trial);
                if let Ok(ht) = blend.eval(&trial) {
                    if finite(&ht) && dot(&ht, &ht) <= phi + lit::<T>(1e-4) * t * slope {
                        accepted = Some((trial, ht));
                        break;
                    }
                }
                t = t * lit(0.5);
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((nv, nh)) = accepted else {
            return Ok(Outcome::Stalled);
        };
        v = nv;
        h = nh;
        track.newton_iters += 1;
        if final_stage {
            track.history.push(sup_norm(&h));
        }
    }
    if sup_norm(&h) <= tol {
        Ok(Outcome::Converged(v))
    } else {
        Ok(Outcome::Stalled)
    }
}

/// Finds `v` with `max |Fᵢ(v)| ≤ tol` and `‖v‖ ≤ radius`. Newton starts from
/// `initial`, then from zero; if both stall, the homotopy
/// `s·F + (1 − s)·K` is followed by arclength from `s = 0`, where `v = 0`
/// is the zero.
pub fn brouwer_zero<T: Real, P: ZeroProblem<T> + ?Sized>(
    problem: &P,
    radius: T,
    initial: Option<&[T]>,
    opts: &BrouwerOptions<T>,
) -> std::result::Result<BrouwerSolution<T>, BrouwerFailure<T>> {
    let n = problem.dim();
    let mut track = Tracker {
        best: vec![T::zero(); n],
        best_residual: T::infinity(),
        history: Vec::new(),
        newton_iters: 0,
        continuation_steps: 0,
    };
    if !(radius > T::zero()) {
        return Err(track.fail(format!("radius must be positive, got {radius}")));
    }
    let anchor = problem.anchor();
    let done = |v: Vec<T>, track: Tracker<T>| {
        let res = sup_norm(&problem.residual(&v).unwrap_or_default());
        BrouwerSolution {
            v,
            residual_sup: res,
            newton_iters: track.newton_iters,
            continuation_steps: track.continuation_steps,
            history: track.history,
        }
    };
    let full = Blend {
        problem,
        anchor: &anchor,
        s: T::one(),
    };
    let start = initial
        .map(|v| v.to_vec())
        .unwrap_or_else(|| vec![T::zero(); n]);
    match newton(&full, radius, start, opts.tol, opts.max_newton, &mut track) {
        Ok(Outcome::Converged(v)) => return Ok(done(v, track)),
        Ok(Outcome::Stalled) => {}
        Err(msg) => return Err(track.fail(msg)),
    }

    if initial.is_some() && n > 0 {
        match newton(
            &full,
            radius,
            vec![T::zero(); n],
            opts.tol,
            opts.max_newton,
            &mut track,
        ) {
            Ok(Outcome::Converged(v)) => return Ok(done(v, track)),
            Ok(Outcome::Stalled) => {}
            Err(msg) => return Err(track.fail(msg)),
        }
    }
    match continuation(problem, &anchor, radius, opts, &mut track) {
        Ok(v) => Ok(done(v, track)),
        Err(msg) => Err(track.fail(msg)),
    }
}

/// A point `(v, s)` on the homotopy path, or a tangent to it.
#[derive(Clone, Debug)]
struct PathPoint<T> {
    v: Vec<T>,
    s: T,
}

/// Solves `[J b; θcᵀ d][x; y] = [r; ρ]` by block elimination, falling back
/// to the assembled bordered matrix when `J` is (nearly) singular.
fn bordered_solve<T: Real>(
    j: &SparseMatrix<T>,
    b: &[T],
    c: &[T],
    theta: T,
    d: T,
    r: &[T],
    rho: T,
) -> Option<(Vec<T>, T)> {
    let n = j.dim();
    let check = |x: &[T], y: T| {
        let jx = j.mul_vec(x);
        let mut worst = (theta * dot(c, x) + d * y - rho).abs();
        let mut scale = rho.abs();
        for i in 0..n {
            worst = worst.max((jx[i] + b[i] * y - r[i]).abs());
            scale = scale.max(r[i].abs());
        }
        finite(x) && y.is_finite() && worst <= lit::<T>(1e-8) * (T::one() + scale)
    };
    if let Ok(lu) = j.factor() {
        let yb = lu.solve(b);
        let yr = lu.solve(r);
        let denom = d - theta * dot(c, &yb);
        if denom != T::zero() {
            let y = (rho - theta * dot(c, &yr)) / denom;
            let x: Vec<T> = yr.iter().zip(&yb).map(|(&a, &bb)| a - bb * y).collect();
            if check(&x, y) {
                return Some((x, y));
            }
        }
    }
    let mut tb = crate::linalg::TripletBuilder::new(n + 1);
    for i in 0..n {
        for (k, v) in j.row(i) {
            tb.push(i, k, v);
        }
        tb.push(i, n, b[i]);
        tb.push(n, i, theta * c[i]);
    }
    tb.push(n, n, d);
    let mut rhs = r.to_vec();
    rhs.push(rho);
    let mut x = tb.build().solve(&rhs).ok()?;
    let y = x.pop()?;
    (finite(&x) && y.is_finite()).then_some((x, y))
}

/// `H`, `∂H/∂v` and `∂H/∂s` at `(v, s)`.
fn homotopy<T: Real, P: ZeroProblem<T> + ?Sized>(
    problem: &P,
    anchor: &SparseMatrix<T>,
    pt: &PathPoint<T>,
) -> Result<(Vec<T>, SparseMatrix<T>, Vec<T>)> {
    let f = problem.residual(&pt.v)?;
    let k = anchor.mul_vec(&pt.v);
    let c = T::one() - pt.s;
    let h = f.iter().zip(&k).map(|(&a, &b)| pt.s * a + c * b).collect();
    let hs = f.iter().zip(&k).map(|(&a, &b)| a - b).collect();
    let j = problem.jacobian(&pt.v)?.combine(pt.s, anchor, c);
    Ok((h, j, hs))
}

/// Unit tangent at `pt`, oriented along `previous` (or towards growing `s`).
fn tangent<T: Real, P: ZeroProblem<T> + ?Sized>(
    problem: &P,
    anchor: &SparseMatrix<T>,
    pt: &PathPoint<T>,
    previous: Option<&PathPoint<T>>,
    theta: T,
) -> std::result::Result<PathPoint<T>, String> {
    let n = pt.v.len();
    let (_, j, hs) = homotopy(problem, anchor, pt).map_err(|e| e.to_string())?;
    let zeros = vec![T::zero(); n];
    let (c, d) = match previous {
        Some(t) => (t.v.clone(), t.s),
        None => (zeros.clone(), T::one()),
    };
    let (x, y) = bordered_solve(&j, &hs, &c, theta, d, &zeros, T::one())
        .ok_or_else(|| format!("singular path at s = {}", pt.s))?;
    let norm = (theta * dot(&x, &x) + y * y).sqrt();
    Ok(PathPoint {
        v: x.iter().map(|&a| a / norm).collect(),
        s: y / norm,
    })
}

/// Newton on `H = 0` plus the arclength condition through `pred`.
fn corrector<T: Real, P: ZeroProblem<T> + ?Sized>(
    problem: &P,
    anchor: &SparseMatrix<T>,
    pred: &PathPoint<T>,
    tan: &PathPoint<T>,
    theta: T,
    tol: T,
) -> Option<(PathPoint<T>, usize)> {
    let mut pt = pred.clone();
    for it in 0..12 {
        let (h, j, hs) = homotopy(problem, anchor, &pt).ok()?;
        if !finite(&h) {
            return None;
        }
        let dv: Vec<T> = pt.v.iter().zip(&pred.v).map(|(&a, &b)| a - b).collect();
        let g = theta * dot(&tan.v, &dv) + tan.s * (pt.s - pred.s);
        if sup_norm(&h) <= tol && g.abs() <= tol {
            return Some((pt, it));
        }
        let minus_h: Vec<T> = h.iter().map(|&x| -x).collect();
        let (x, y) = bordered_solve(&j, &hs, &tan.v, theta, tan.s, &minus_h, -g)?;
        for (a, &b) in pt.v.iter_mut().zip(&x) {
            *a = *a + b;
        }
        pt.s = pt.s + y;
    }
    None
}

/// Pseudo-arclength continuation of `H(v, s) = s·F(v) + (1 − s)·K v` from
/// `(0, 0)`, where `K` is positive definite, to `s = 1`; turning points in
/// `s` are passed. Ends with Newton on `F` from the crossing of `s = 1`.
fn continuation<T: Real, P: ZeroProblem<T> + ?Sized>(
    problem: &P,
    anchor: &SparseMatrix<T>,
    radius: T,
    opts: &BrouwerOptions<T>,
    track: &mut Tracker<T>,
) -> std::result::Result<Vec<T>, String> {
    let n = problem.dim();
    let theta = T::one() / crate::scalar::count::<T>(n.max(1));
    let corrector_tol = opts.tol.max(lit(1e-9));
    let full = Blend {
        problem,
        anchor,
        s: T::one(),
    };
    let mut pt = PathPoint {
        v: vec![T::zero(); n],
        s: T::zero(),
    };
    let mut tan = tangent(problem, anchor, &pt, None, theta)?;
    let mut step = opts.initial_step;
    let mut halvings = 0;
    for _ in 0..opts.max_steps {
        let pred = PathPoint {
            v: pt
                .v
                .iter()
                .zip(&tan.v)
                .map(|(&a, &b)| a + step * b)
                .collect(),
            s: pt.s + step * tan.s,
        };
        let mut accepted = false;
        if let Some((next, iters)) = corrector(problem, anchor, &pred, &tan, theta, corrector_tol) {
            track.newton_iters += iters;
            let next_tan = tangent(problem, anchor, &next, Some(&tan), theta)?;
            let turn = theta * dot(&tan.v, &next_tan.v) + tan.s * next_tan.s;
            if turn > lit(0.8) {
                accepted = true;
                track.continuation_steps += 1;
                if next.s >= T::one() {
                    let w = (T::one() - pt.s) / (next.s - pt.s);
                    let guess: Vec<T> =
                        pt.v.iter()
                            .zip(&next.v)
                            .map(|(&a, &b)| a + w * (b - a))
                            .collect();
                    for start in [guess, next.v.clone()] {
                        if let Outcome::Converged(v) =
                            newton(&full, radius, start, opts.tol, opts.max_newton, track)?
                        {
                            return Ok(v);
                        }
                    }
                    accepted = false;
                } else if next.s < T::zero() {
                    return Err("continuation path returned to s = 0 without reaching s = 1".into());
                } else if radius.is_finite() && problem.norm(&next.v) > radius + radius {
                    return Err(format!("continuation path left the ball at s = {}", next.s));
                } else {
                    pt = next;
                    tan = next_tan;
                    halvings = 0;
                    if iters <= 3 {
                        step = (step + step).min(T::one());
                    } else if iters >= 7 {
                        step = step * lit(0.5);
                    }
                }
            }
        }
        if !accepted {
            halvings += 1;
            if halvings > opts.max_depth {
                return Err(format!(
                    "continuation stalled at s = {} after {} step halvings",
                    pt.s, opts.max_depth
                ));
            }
            step = step * lit(0.5);
        }
    }
    Err(format!(
        "continuation used all {} steps, s = {}",
        opts.max_steps, pt.s
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::TripletBuilder;

    struct Scalar<F>(F, fn(f64) -> f64);

    impl<F: Fn(f64) -> f64> ZeroProblem<f64> for Scalar<F> {
        fn dim(&self) -> usize {
            1
        }
        fn residual(&self, v: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![(self.0)(v[0])])
        }
        fn jacobian(&self, v: &[f64]) -> Result<SparseMatrix<f64>> {
            let mut t = TripletBuilder::new(1);
            t.push(0, 0, (self.1)(v[0]));
            Ok(t.build())
        }
    }

    #[test]
    fn identity_map() {
        let p = Scalar(|v| v, |_| 1.0);
        let s = brouwer_zero(&p, 1.0, None, &BrouwerOptions::default()).unwrap();
        assert_eq!(s.v, vec![0.0]);
    }

    #[test]
    fn cubic_root_on_sphere() {
        let p = Scalar(|v| v * v * v - v - 6.0, |v| 3.0 * v * v - 1.0);
        let s = brouwer_zero(&p, 2.0, None, &BrouwerOptions::default()).unwrap();
        assert!((s.v[0] - 2.0).abs() < 1e-10, "{:?}", s.v);
        assert!(s.v[0].abs() <= 2.0 * (1.0 + 1e-6));
    }

    #[test]
    fn translation_in_plane() {
        struct Shift;
        impl ZeroProblem<f64> for Shift {
            fn dim(&self) -> usize {
                2
            }
            fn residual(&self, v: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![v[0] - 1.0, v[1]])
            }
            fn jacobian(&self, _: &[f64]) -> Result<SparseMatrix<f64>> {
                Ok(SparseMatrix::identity(2))
            }
        }
        let s = brouwer_zero(&Shift, 2.0, None, &BrouwerOptions::default()).unwrap();
        assert!((s.v[0] - 1.0).abs() < 1e-12 && s.v[1].abs() < 1e-12);
    }

    #[test]
    fn continuation_rescues_a_stalled_newton() {
        // v³ − v − 6 has a flat spot at v = 1/√3 where Newton from there
        // stalls; the homotopy from zero still reaches the root
        let p = Scalar(|v| v * v * v - v - 6.0, |v| 3.0 * v * v - 1.0);
        let start = [1.0 / 3f64.sqrt()];
        let s = brouwer_zero(&p, 2.0, Some(&start), &BrouwerOptions::default()).unwrap();
        assert!((s.v[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn failure_reports_best_iterate() {
        // no zero: F(v) = v² + 1
        let p = Scalar(|v| v * v + 1.0, |v| 2.0 * v);
        let opts = BrouwerOptions {
            max_depth: 4,
            ..Default::default()
        };
        let f = brouwer_zero(&p, 1.0, None, &opts).unwrap_err();
        assert!(f.best_residual >= 1.0);
        assert_eq!(f.best.len(), 1);
        assert!(!f.to_string().is_empty());
    }
}
