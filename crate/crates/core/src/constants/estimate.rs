//! Embedding constants `S_r` and the first eigenvalue `λ₁,ₚ`, estimated by
//! preconditioned descent on scale-invariant quotients over the hierarchy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::SpaceHierarchy;
use crate::error::{Error, Result};
use crate::linalg::{dot, BandLu};
use crate::scalar::{abs_pow, count, lit, norm2, Real};

/// Where a constant came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    Rayleigh,
    Maximization,
}

/// One `S_r`: the raw subspace maximum and the inflated value used in
/// hypothesis checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ConstantEntry<T> {
    pub r: T,
    pub raw: T,
    pub value: T,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LambdaEstimate<T> {
    pub value: T,
    /// Quotient reached on each level that has free nodes, coarse to fine.
    pub per_level: Vec<T>,
    pub converged: bool,
}

/// `p̂ = Np/(N−p)` when `p < N`, otherwise `override_value` (default `2p`).
pub fn critical_surrogate<T: Real>(p: T, dim: usize, override_value: Option<T>) -> T {
    let n = count::<T>(dim);
    if p < n {
        n * p / (n - p)
    } else {
        override_value.unwrap_or(p + p)
    }
}

/// The table of constants entering (H1), (H2) and the coercivity radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EmbeddingConstants<T> {
    pub p: T,
    pub dim: usize,
    pub p_hat: T,
    pub safety: T,
    pub entries: Vec<ConstantEntry<T>>,
    pub lambda1p: Option<LambdaEstimate<T>>,
    /// Set once the whole-space constant has been read; it is replaced by
    /// the domain constant `S_{p̂}`.
    pub whole_space_surrogate: bool,
}

fn same_exponent<T: Real>(a: T, b: T) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= lit::<T>(1e-9) * T::one().max(a.abs())
}

impl<T: Real> EmbeddingConstants<T> {
    pub fn new(p: T, dim: usize, p_hat: T, safety: T) -> Self {
        Self {
            p,
            dim,
            p_hat,
            safety,
            entries: Vec::new(),
            lambda1p: None,
            whole_space_surrogate: false,
        }
    }

    pub fn entry(&self, r: T) -> Option<&ConstantEntry<T>> {
        self.entries.iter().find(|e| same_exponent(e.r, r))
    }

    /// Inflated `S_r`.
    pub fn get(&self, r: T) -> Result<T> {
        self.entry(r)
            .map(|e| e.value)
            .ok_or_else(|| Error::MissingConstant(r.to_f64().unwrap_or(f64::NAN)))
    }

    /// Records an estimate; the stored value is `raw · safety`.
    pub fn insert(&mut self, r: T, raw: T, provenance: Provenance) {
        self.put(ConstantEntry {
            r,
            raw,
            value: raw * self.safety,
            provenance,
        });
    }

    /// Records a known value, used as is.
    pub fn insert_exact(&mut self, r: T, value: T) {
        self.put(ConstantEntry {
            r,
            raw: value,
            value,
            provenance: Provenance::Analytic,
        });
    }

    fn put(&mut self, entry: ConstantEntry<T>) {
        match self
            .entries
            .iter_mut()
            .find(|e| same_exponent(e.r, entry.r))
        {
            Some(slot) => *slot = entry,
            None => self.entries.push(entry),
        }
        self.entries
            .sort_by(|a, b| a.r.partial_cmp(&b.r).unwrap_or(std::cmp::Ordering::Equal));
    }

    /// `S_{p̂}`.
    pub fn s_hat(&self) -> Result<T> {
        self.get(self.p_hat)
    }

    /// Surrogate for the whole-space constant `S(p, N)`: `S_{p̂}` of the
    /// domain.
    pub fn whole_space(&mut self) -> Result<T> {
        let s = self.s_hat()?;
        self.whole_space_surrogate = true;
        Ok(s)
    }
}

/// Knobs of the multi-start estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct EstimatorOptions<T> {
    pub starts: usize,
    pub iters: usize,
    pub tol: T,
    pub safety: T,
    pub seed: u64,
}

impl<T: Real> Default for EstimatorOptions<T> {
    fn default() -> Self {
        Self {
            starts: 8,
            iters: 400,
            tol: lit(1e-10),
            safety: lit(1.1),
            seed: 0,
        }
    }
}

fn stiffness<T: Real>(h: &SpaceHierarchy<T>, level: usize) -> Result<BandLu<T>> {
    h.stiffness(level).factor()
}

/// `(∫|∇u|^p, [∫|∇u|^{p−2}∇u·∇φᵢ]ᵢ)`.
fn gradient_power<T: Real>(h: &SpaceHierarchy<T>, level: usize, nodal: &[T], p: T) -> (T, Vec<T>) {
    let lv = h.level(level);
    let mut total = T::zero();
    let mut d = vec![T::zero(); lv.num_dofs()];
    for (e, el) in lv.elements().iter().enumerate() {
        let g = lv.element_gradient(e, nodal);
        let n = norm2(g);
        total = total + el.measure * abs_pow(n, p);
        if n == T::zero() {
            continue;
        }
        let c = n.powf(p - lit(2.0)) * el.measure;
        for (s, &node) in lv.element_nodes(e).iter().enumerate() {
            if let Some(i) = lv.dof_of(node) {
                d[i] = d[i] + c * (g[0] * el.grads[s][0] + g[1] * el.grads[s][1]);
            }
        }
    }
    (total, d)
}

/// `(∫|u|^r, [∫|u|^{r−2}u φᵢ]ᵢ)` by the level quadrature.
fn value_power<T: Real>(h: &SpaceHierarchy<T>, level: usize, nodal: &[T], r: T) -> (T, Vec<T>) {
    let lv = h.level(level);
    let nq = lv.rule().len();
    let mut total = T::zero();
    let mut d = vec![T::zero(); lv.num_dofs()];
    for e in 0..lv.elements().len() {
        let nodes = lv.element_nodes(e);
        for k in 0..nq {
            let (_, w) = lv.quad_point(e, k);
            let u = lv.element_value(e, k, nodal);
            total = total + w * abs_pow(u, r);
            if u == T::zero() {
                continue;
            }
            let c = w * u.signum() * u.abs().powf(r - T::one());
            let bary = lv.rule().barycentric[k];
            for (s, &node) in nodes.iter().enumerate() {
                if let Some(i) = lv.dof_of(node) {
                    d[i] = d[i] + c * bary[s];
                }
            }
        }
    }
    (total, d)
}

/// Minimizes `F(u) = μ log ∫|∇u|^p − ν log ∫|u|^r`, which is invariant
/// under scaling of `u`, by `K⁻¹`-preconditioned descent with Armijo
/// backtracking. Returns the final coefficients, `F` and a convergence flag.
struct Quotient<T> {
    p: T,
    r: T,
    mu: T,
    nu: T,
}

impl<T: Real> Quotient<T> {
    fn eval(&self, h: &SpaceHierarchy<T>, level: usize, c: &[T]) -> (T, Vec<T>) {
        let nodal = h.level(level).expand(c);
        let (a, da) = gradient_power(h, level, &nodal, self.p);
        let (b, db) = value_power(h, level, &nodal, self.r);
        if !(a > T::zero() && b > T::zero()) {
            return (T::infinity(), vec![T::zero(); c.len()]);
        }
        let ca = self.mu * self.p / a;
        let cb = self.nu * self.r / b;
        let g = da.iter().zip(&db).map(|(&x, &y)| ca * x - cb * y).collect();
        (self.mu * a.ln() - self.nu * b.ln(), g)
    }

    fn normalize(&self, h: &SpaceHierarchy<T>, level: usize, c: &mut [T]) {
        let n = h.nodal_grad_norm(level, &h.level(level).expand(c), self.p);
        if n > T::zero() && n.is_finite() {
            for x in c.iter_mut() {
                *x = *x / n;
            }
        }
    }

    fn minimize(
        &self,
        h: &SpaceHierarchy<T>,
        level: usize,
        mut c: Vec<T>,
        iters: usize,
        tol: T,
    ) -> Result<(Vec<T>, T, bool)> {
        let lu = stiffness(h, level)?;
        self.normalize(h, level, &mut c);
        let (mut f, mut g) = self.eval(h, level, &c);
        let mut step = T::one();
        let mut quiet = 0;
        for _ in 0..iters {
            let d: Vec<T> = lu.solve(&g).into_iter().map(|x| -x).collect();
            let slope = dot(&g, &d);
            if !(slope < T::zero()) {
                return Ok((c, f, true));
            }
            step = (step + step).min(lit(16.0));
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<T> = c.iter().zip(&d).map(|(&x, &y)| x + step * y).collect();
                let (ft, gt) = self.eval(h, level, &trial);
                if ft <= f + lit::<T>(1e-4) * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step = step * lit(0.5);
            }
            let Some((mut trial, ft, _)) = accepted else {
                return Ok((c, f, true));
            };
            self.normalize(h, level, &mut trial);
            let (ft2, gt2) = self.eval(h, level, &trial);
            let decrease = f - ft.min(ft2);
            c = trial;
            f = ft2;
            g = gt2;
            if decrease <= tol * (T::one() + f.abs()) {
                quiet += 1;
                if quiet >= 3 {
                    return Ok((c, f, true));
                }
            } else {
                quiet = 0;
            }
        }
        Ok((c, f, false))
    }
}

fn first_level_with_dofs<T: Real>(h: &SpaceHierarchy<T>, min_dofs: usize) -> usize {
    (0..h.num_levels())
        .find(|&n| h.level(n).num_dofs() >= min_dofs)
        .unwrap_or(h.finest())
}

/// Product of `sin(π t)` over the coordinates, `t` the position in the
/// bounding box.
fn sine_bump<T: Real>(h: &SpaceHierarchy<T>, level: usize) -> Vec<T> {
    let coords = h.level(h.finest()).coords();
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for c in coords {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let dim = h.dim();
    h.interpolate(level, |x| {
        (0..dim)
            .map(|k| (T::PI() * (x[k] - lo[k]) / (hi[k] - lo[k])).sin())
            .fold(T::one(), |a, b| a * b)
    })
    .coeffs
}

/// Cascades a minimization from `start` up to the finest level, returning
/// the quotient value on each visited level.
fn cascade<T: Real>(
    h: &SpaceHierarchy<T>,
    quotient: &Quotient<T>,
    start: usize,
    init: Vec<T>,
    iters: usize,
    tol: T,
) -> Result<(Vec<T>, bool)> {
    let mut c = init;
    let mut values = Vec::new();
    let mut converged = true;
    for level in start..h.num_levels() {
        if level > start {
            let prev = crate::discretization::FEFunction {
                level: level - 1,
                coeffs: c,
            };
            c = h.prolongate(&prev, level)?.coeffs;
        }
        let (cn, f, ok) = quotient.minimize(h, level, c, iters, tol)?;
        c = cn;
        converged &= ok;
        values.push(f);
    }
    Ok((values, converged))
}

/// Upper estimate of `λ₁,ₚ = inf ‖∇u‖ₚᵖ / ‖u‖ₚᵖ`, minimized level by level
/// from the interpolated `sin(πx)`.
pub fn estimate_lambda1p<T: Real>(
    h: &SpaceHierarchy<T>,
    p: T,
    iters: usize,
    tol: T,
) -> Result<LambdaEstimate<T>> {
    if !(p > T::one()) {
        return Err(Error::Precondition(format!("p must exceed 1, got {p}")));
    }
    let start = first_level_with_dofs(h, 1);
    if h.level(start).num_dofs() == 0 {
        return Err(Error::Precondition("hierarchy has no free nodes".into()));
    }
    let q = Quotient {
        p,
        r: p,
        mu: T::one(),
        nu: T::one(),
    };
    let (logs, converged) = cascade(h, &q, start, sine_bump(h, start), iters, tol)?;
    let per_level: Vec<T> = logs.iter().map(|f| f.exp()).collect();
    Ok(LambdaEstimate {
        value: *per_level.last().expect("at least one level"),
        per_level,
        converged,
    })
}

/// Lower estimate of the best `S_r` in `‖u‖_r ≤ S_r‖∇u‖ₚ` over the finest
/// level, maximized from `opts.starts` starts; the entry stores the raw
/// maximum and `raw · safety`.
pub fn estimate_embedding_constant<T: Real>(
    h: &SpaceHierarchy<T>,
    r: T,
    p: T,
    opts: &EstimatorOptions<T>,
) -> Result<ConstantEntry<T>> {
    if !(r >= T::one()) || !(p > T::one()) {
        return Err(Error::Precondition(format!(
            "need r >= 1 and p > 1, got r = {r}, p = {p}"
        )));
    }
    let start = first_level_with_dofs(h, 4);
    let n = h.level(start).num_dofs();
    if n == 0 {
        return Err(Error::Precondition("hierarchy has no free nodes".into()));
    }
    let q = Quotient {
        p,
        r,
        mu: T::one() / p,
        nu: T::one() / r,
    };
    let smoother = stiffness(h, start)?;
    let starts = opts.starts.max(1);
    let results: Vec<Result<T>> = (0..starts)
        .into_par_iter()
        .map(|k| {
            let init = if k == 0 {
                sine_bump(h, start)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
                let raw: Vec<T> = (0..n).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
                smoother.solve(&raw)
            };
            let (logs, _) = cascade(h, &q, start, init, opts.iters, opts.tol)?;
            Ok((-*logs.last().expect("at least one level")).exp())
        })
        .collect();
    let mut best = T::zero();
    for v in results {
        let v = v?;
        if v > best {
            best = v;
        }
    }
    Ok(ConstantEntry {
        r,
        raw: best,
        value: best * opts.safety,
        provenance: Provenance::Maximization,
    })
}
