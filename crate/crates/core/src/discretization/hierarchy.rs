//! Nested P1 spaces `X_1 ⊂ X_2 ⊂ …` obtained by uniform refinement.

use std::collections::BTreeMap;

use crate::discretization::mesh::{signed_area, DomainMesh};
use crate::discretization::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// One simplex of a level: vertex ids, measure and the constant gradients of
/// its barycentric basis functions. Only the first `dim + 1` slots are used.
#[derive(Clone, Debug, PartialEq)]
pub struct Element<T> {
    pub vertices: [usize; 3],
    pub measure: T,
    pub grads: [[T; 2]; 3],
}

/// How a node of level `n + 1` is obtained from nodes of level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parent {
    Node(usize),
    Midpoint(usize, usize),
}

/// A single mesh level together with its free (interior) basis indexing.
#[derive(Clone, Debug)]
pub struct Level<T> {
    dim: usize,
    coords: Vec<[T; 2]>,
    elements: Vec<Element<T>>,
    node_to_dof: Vec<Option<usize>>,
    dof_to_node: Vec<usize>,
    rule: QuadratureRule<T>,
    measure: T,
}

impl<T: Real> Level<T> {
    fn new(
        dim: usize,
        coords: Vec<[T; 2]>,
        cells: Vec<[usize; 3]>,
        rule: QuadratureRule<T>,
    ) -> Result<Self> {
        let mut elements = Vec::with_capacity(cells.len());
        let mut on_boundary = vec![false; coords.len()];
        if dim == 1 {
            for c in &cells {
                let h = coords[c[1]][0] - coords[c[0]][0];
                if !(h > T::zero()) {
                    return Err(Error::Mesh("degenerate 1D element".into()));
                }
                let g = T::one() / h;
                elements.push(Element {
                    vertices: *c,
                    measure: h,
                    grads: [[-g, T::zero()], [g, T::zero()], [T::zero(); 2]],
                });
            }
            on_boundary[0] = true;
            on_boundary[coords.len() - 1] = true;
        } else {
            let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            for c in &cells {
                for (a, b) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])] {
                    *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
                }
                let [a, b, cc] = [coords[c[0]], coords[c[1]], coords[c[2]]];
                let area = signed_area(a, b, cc);
                if !(area > T::zero()) {
                    return Err(Error::Mesh("degenerate or inverted triangle".into()));
                }
                let two_a = area + area;
                let grad = |p: [T; 2], q: [T; 2]| [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a];
                elements.push(Element {
                    vertices: *c,
                    measure: area,
                    grads: [grad(b, cc), grad(cc, a), grad(a, b)],
                });
            }
            for ((a, b), n) in edge_count {
                if n == 1 {
                    on_boundary[a] = true;
                    on_boundary[b] = true;
                }
            }
        }
        let mut free: Vec<usize> = (0..coords.len()).filter(|&i| !on_boundary[i]).collect();
        if dim == 2 {
            // row-major coordinate order keeps matrix bandwidth small
            free.sort_by(|&i, &j| {
                let (a, b) = (coords[i], coords[j]);
                a[1].partial_cmp(&b[1])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a[0].partial_cmp(&b[0]).unwrap_or(std::cmp::Ordering::Equal))
                    .then(i.cmp(&j))
            });
        }
        let mut node_to_dof = vec![None; coords.len()];
        for (d, &n) in free.iter().enumerate() {
            node_to_dof[n] = Some(d);
        }
        let measure = elements.iter().map(|e| e.measure).sum();
        Ok(Self {
            dim,
            coords,
            elements,
            node_to_dof,
            dof_to_node: free,
            rule,
            measure,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of free basis functions, `dim(X_n)`.
    pub fn num_dofs(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[T; 2]] {
        &self.coords
    }

    pub fn elements(&self) -> &[Element<T>] {
        &self.elements
    }

    /// Vertex ids of element `e` (2 in 1D, 3 in 2D).
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e].vertices[..self.dim + 1]
    }

    pub fn rule(&self) -> &QuadratureRule<T> {
        &self.rule
    }

    pub fn dof_of(&self, node: usize) -> Option<usize> {
        self.node_to_dof[node]
    }

    pub fn node_of(&self, dof: usize) -> usize {
        self.dof_to_node[dof]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.node_to_dof[node].is_none()
    }

    /// |Ω| as the sum of element measures.
    pub fn measure(&self) -> T {
        self.measure
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> T {
        self.elements
            .iter()
            .map(|el| {
                let vs = &el.vertices[..self.dim + 1];
                let mut d = T::zero();
                for (k, &a) in vs.iter().enumerate() {
                    for &b in &vs[k + 1..] {
                        let (pa, pb) = (self.coords[a], self.coords[b]);
                        let dx = pa[0] - pb[0];
                        let dy = pa[1] - pb[1];
                        d = d.max((dx * dx + dy * dy).sqrt());
                    }
                }
                d
            })
            .fold(T::zero(), T::max)
    }

    /// Location and weight of quadrature point `k` on element `e`.
    pub fn quad_point(&self, e: usize, k: usize) -> ([T; 2], T) {
        let el = &self.elements[e];
        let bary = self.rule.barycentric[k];
        let mut x = [T::zero(); 2];
        for (slot, &v) in el.vertices[..self.dim + 1].iter().enumerate() {
            x[0] = x[0] + bary[slot] * self.coords[v][0];
            x[1] = x[1] + bary[slot] * self.coords[v][1];
        }
        (x, self.rule.weights[k] * el.measure)
    }

    /// Gradient on element `e` of the P1 function with the given nodal values.
    pub fn element_gradient(&self, e: usize, nodal: &[T]) -> [T; 2] {
        let el = &self.elements[e];
        let mut g = [T::zero(); 2];
        for (slot, &v) in el.vertices[..self.dim + 1].iter().enumerate() {
            g[0] = g[0] + nodal[v] * el.grads[slot][0];
            g[1] = g[1] + nodal[v] * el.grads[slot][1];
        }
        g
    }

    /// Value at quadrature point `k` of element `e`.
    pub fn element_value(&self, e: usize, k: usize, nodal: &[T]) -> T {
        let el = &self.elements[e];
        let bary = self.rule.barycentric[k];
        el.vertices[..self.dim + 1]
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (slot, &v)| acc + bary[slot] * nodal[v])
    }

    /// Nodal vector with zero boundary values from free coefficients.
    pub fn expand(&self, coeffs: &[T]) -> Vec<T> {
        let mut nodal = vec![T::zero(); self.coords.len()];
        for (d, &n) in self.dof_to_node.iter().enumerate() {
            nodal[n] = coeffs[d];
        }
        nodal
    }

    /// Free coefficients of a nodal vector (boundary values dropped).
    pub fn restrict(&self, nodal: &[T]) -> Vec<T> {
        self.dof_to_node.iter().map(|&n| nodal[n]).collect()
    }

    /// Element containing `x` and the barycentric coordinates of `x` in it.
    pub fn locate(&self, x: [T; 2]) -> Option<(usize, [T; 3])> {
        let tol = lit::<T>(1e3) * T::epsilon();
        if self.dim == 1 {
            let xs = x[0];
            let first = self.coords[0][0];
            let last = self.coords[self.coords.len() - 1][0];
            if xs < first - tol || xs > last + tol {
                return None;
            }
            let idx = self.coords.partition_point(|c| c[0] <= xs);
            let e = idx.saturating_sub(1).min(self.elements.len() - 1);
            let el = &self.elements[e];
            let (a, b) = (
                self.coords[el.vertices[0]][0],
                self.coords[el.vertices[1]][0],
            );
            let t = (xs - a) / (b - a);
            return Some((e, [T::one() - t, t, T::zero()]));
        }
        for (e, el) in self.elements.iter().enumerate() {
            let [a, b, c] = [
                self.coords[el.vertices[0]],
                self.coords[el.vertices[1]],
                self.coords[el.vertices[2]],
            ];
            let area = el.measure;
            let l0 = signed_area(x, b, c) / area;
            let l1 = signed_area(a, x, c) / area;
            let l2 = T::one() - l0 - l1;
            if l0 >= -tol && l1 >= -tol && l2 >= -tol {
                return Some((e, [l0, l1, l2]));
            }
        }
        None
    }

    fn cells(&self) -> Vec<[usize; 3]> {
        self.elements.iter().map(|e| e.vertices).collect()
    }
}

/// The Galerkin basis: levels of nested conforming P1 spaces with the
/// prolongation maps between consecutive levels.
#[derive(Clone, Debug)]
pub struct SpaceHierarchy<T> {
    levels: Vec<Level<T>>,
    prolongations: Vec<Vec<Parent>>,
    quad_order: usize,
}

impl<T: Real> SpaceHierarchy<T> {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &Level<T> {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[Level<T>] {
        &self.levels
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Parents of the nodes of level `n + 1`.
    pub fn prolongation(&self, n: usize) -> &[Parent] {
        &self.prolongations[n]
    }

    /// Applies one prolongation step to a full nodal vector of level `n`.
    pub fn prolongate_nodal(&self, n: usize, nodal: &[T]) -> Vec<T> {
        let half = lit::<T>(0.5);
        self.prolongations[n]
            .iter()
            .map(|p| match *p {
                Parent::Node(i) => nodal[i],
                Parent::Midpoint(a, b) => half * (nodal[a] + nodal[b]),
            })
            .collect()
    }
}

/// Builds `levels` nested P1 spaces by uniform refinement of `domain`
/// (midpoint bisection in 1D, red refinement in 2D).
pub fn build_hierarchy<T: Real>(
    domain: &DomainMesh<T>,
    levels: usize,
    quad_order: usize,
) -> Result<SpaceHierarchy<T>> {
    if levels == 0 {
        return Err(Error::Precondition(
            "hierarchy needs at least one level".into(),
        ));
    }
    domain.validate()?;
    let (dim, rule) = match domain {
        DomainMesh::Interval { .. } => (1, QuadratureRule::gauss_legendre(quad_order)?),
        DomainMesh::Triangulation { .. } => (2, QuadratureRule::triangle(quad_order)?),
    };
    let (coords, cells): (Vec<[T; 2]>, Vec<[usize; 3]>) = match domain {
        DomainMesh::Interval { nodes } => (
            nodes.iter().map(|&x| [x, T::zero()]).collect(),
            (0..nodes.len() - 1).map(|i| [i, i + 1, i + 1]).collect(),
        ),
        DomainMesh::Triangulation {
            vertices,
            triangles,
        } => (vertices.clone(), triangles.clone()),
    };
    let mut out = vec![Level::new(dim, coords, cells, rule.clone())?];
    let mut prolongations = Vec::with_capacity(levels - 1);
    for _ in 1..levels {
        let coarse = out.last().expect("at least one level");
        let (coords, cells, parents) = if dim == 1 {
            refine_1d(coarse)
        } else {
            refine_2d(coarse)
        };
        out.push(Level::new(dim, coords, cells, rule.clone())?);
        prolongations.push(parents);
    }
    Ok(SpaceHierarchy {
        levels: out,
        prolongations,
        quad_order,
    })
}

type Refined<T> = (Vec<[T; 2]>, Vec<[usize; 3]>, Vec<Parent>);

fn refine_1d<T: Real>(coarse: &Level<T>) -> Refined<T> {
    let n = coarse.coords.len();
    let half = lit::<T>(0.5);
    let mut coords = Vec::with_capacity(2 * n - 1);
    let mut parents = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        coords.push(coarse.coords[i]);
        parents.push(Parent::Node(i));
        if i + 1 < n {
            coords.push([
                half * (coarse.coords[i][0] + coarse.coords[i + 1][0]),
                T::zero(),
            ]);
            parents.push(Parent::Midpoint(i, i + 1));
        }
    }
    let cells = (0..coords.len() - 1).map(|i| [i, i + 1, i + 1]).collect();
    (coords, cells, parents)
}

fn refine_2d<T: Real>(coarse: &Level<T>) -> Refined<T> {
    let half = lit::<T>(0.5);
    let mut coords = coarse.coords.clone();
    let mut parents: Vec<Parent> = (0..coords.len()).map(Parent::Node).collect();
    let mut midpoints: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, coords: &mut Vec<[T; 2]>, parents: &mut Vec<Parent>| {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let (pa, pb) = (coords[a], coords[b]);
            coords.push([half * (pa[0] + pb[0]), half * (pa[1] + pb[1])]);
            parents.push(Parent::Midpoint(key.0, key.1));
            coords.len() - 1
        })
    };
    let mut cells = Vec::with_capacity(4 * coarse.elements.len());
    for [a, b, c] in coarse.cells() {
        let ab = mid(a, b, &mut coords, &mut parents);
        let bc = mid(b, c, &mut coords, &mut parents);
        let ca = mid(c, a, &mut coords, &mut parents);
        cells.push([a, ab, ca]);
        cells.push([ab, b, bc]);
        cells.push([ca, bc, c]);
        cells.push([ab, bc, ca]);
    }
    (coords, cells, parents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_free_dims() {
        let m = DomainMesh::<f64>::unit_interval(2).unwrap();
        let h = build_hierarchy(&m, 3, 4).unwrap();
        let dims: Vec<usize> = h.levels().iter().map(|l| l.num_dofs()).collect();
        assert_eq!(dims, vec![1, 3, 7]);
        let one = build_hierarchy(&m, 1, 4).unwrap();
        assert_eq!(one.level(0).num_dofs(), 1);
        assert_eq!(one.level(0).coords()[one.level(0).node_of(0)][0], 0.5);
    }

    #[test]
    fn square_interior_counts_match_euler_enumeration() {
        let h = build_hierarchy(&DomainMesh::<f64>::unit_square(), 4, 4).unwrap();
        for (l, level) in h.levels().iter().enumerate() {
            // combinatorial oracle: F faces, Eb boundary edges, E = (3F + Eb)/2,
            // V = 1 + E - F (Euler, disk), interior = V - Eb
            let f = 2 * 4usize.pow(l as u32);
            let eb = 4 * 2usize.pow(l as u32);
            let e = (3 * f + eb) / 2;
            let v = 1 + e - f;
            assert_eq!(level.elements().len(), f);
            assert_eq!(level.num_nodes(), v);
            assert_eq!(level.num_dofs(), v - eb);
        }
    }

    #[test]
    fn element_measures_sum_to_domain() {
        let h = build_hierarchy(&DomainMesh::<f64>::unit_square(), 3, 4).unwrap();
        for level in h.levels() {
            assert!((level.measure() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_levels_rejected() {
        let m = DomainMesh::<f64>::unit_interval(2).unwrap();
        assert!(build_hierarchy(&m, 0, 4).is_err());
    }

    #[test]
    fn triangle_basis_gradients_sum_to_zero() {
        let h = build_hierarchy(&DomainMesh::<f64>::unit_square(), 2, 4).unwrap();
        for el in h.level(1).elements() {
            let sx: f64 = el.grads.iter().map(|g| g[0]).sum();
            let sy: f64 = el.grads.iter().map(|g| g[1]).sum();
            assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12);
        }
    }
}
