//! Base meshes and their JSON exchange format.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, lit, Real};

/// A bounded Lipschitz domain, triangulated.
///
/// JSON form: `{"dim":1,"nodes":[...]}` or
/// `{"dim":2,"vertices":[[x,y],...],"triangles":[[i,j,k],...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshJson<T>", into = "MeshJson<T>")]
#[serde(bound = "T: Real")]
pub enum DomainMesh<T> {
    Interval {
        nodes: Vec<T>,
    },
    Triangulation {
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct MeshJson<T> {
    dim: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vertices: Option<Vec<[T; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    triangles: Option<Vec<[usize; 3]>>,
}

impl<T: Real> TryFrom<MeshJson<T>> for DomainMesh<T> {
    type Error = Error;

    fn try_from(raw: MeshJson<T>) -> Result<Self> {
        let mesh = match raw.dim {
            1 => DomainMesh::Interval {
                nodes: raw
                    .nodes
                    .ok_or_else(|| Error::Mesh("1D mesh requires \"nodes\"".into()))?,
            },
            2 => DomainMesh::Triangulation {
                vertices: raw
                    .vertices
                    .ok_or_else(|| Error::Mesh("2D mesh requires \"vertices\"".into()))?,
                triangles: raw
                    .triangles
                    .ok_or_else(|| Error::Mesh("2D mesh requires \"triangles\"".into()))?,
            },
            d => return Err(Error::Mesh(format!("dimension {d} not supported (1 or 2)"))),
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

impl<T: Real> From<DomainMesh<T>> for MeshJson<T> {
    fn from(mesh: DomainMesh<T>) -> Self {
        match mesh {
            DomainMesh::Interval { nodes } => MeshJson {
                dim: 1,
                nodes: Some(nodes),
                vertices: None,
                triangles: None,
            },
            DomainMesh::Triangulation {
                vertices,
                triangles,
            } => MeshJson {
                dim: 2,
                nodes: None,
                vertices: Some(vertices),
                triangles: Some(triangles),
            },
        }
    }
}

pub(crate) fn signed_area<T: Real>(a: [T; 2], b: [T; 2], c: [T; 2]) -> T {
    lit::<T>(0.5) * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl<T: Real> DomainMesh<T> {
    /// Uniform partition of `(a, b)` into `elements` cells.
    pub fn interval(a: T, b: T, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::Mesh("interval needs at least one element".into()));
        }
        let n = count::<T>(elements);
        let nodes = (0..=elements)
            .map(|i| a + (b - a) * count::<T>(i) / n)
            .collect();
        let mesh = DomainMesh::Interval { nodes };
        mesh.validate()?;
        Ok(mesh)
    }

    /// `(0, 1)` split into `elements` equal cells.
    pub fn unit_interval(elements: usize) -> Result<Self> {
        Self::interval(T::zero(), T::one(), elements)
    }

    /// Unit square cut along the diagonal into two triangles.
    pub fn unit_square() -> Self {
        let (z, o) = (T::zero(), T::one());
        DomainMesh::Triangulation {
            vertices: vec![[z, z], [o, z], [o, o], [z, o]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainMesh::Interval { .. } => 1,
            DomainMesh::Triangulation { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DomainMesh::Interval { nodes } => {
                if nodes.len() < 2 {
                    return Err(Error::Mesh("1D mesh needs at least two nodes".into()));
                }
                if nodes.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Mesh("non-finite node coordinate".into()));
                }
                if let Some(i) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
                    return Err(Error::Mesh(format!(
                        "nodes not strictly increasing at index {}",
                        i + 1
                    )));
                }
            }
            DomainMesh::Triangulation {
                vertices,
                triangles,
            } => {
                if triangles.is_empty() {
                    return Err(Error::Mesh("2D mesh has no triangles".into()));
                }
                if vertices.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::Mesh("non-finite vertex coordinate".into()));
                }
                for (t, tri) in triangles.iter().enumerate() {
                    if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                        return Err(Error::Mesh(format!(
                            "triangle {t} references missing vertex {v}"
                        )));
                    }
                    let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
                    if !(area > T::zero()) {
                        return Err(Error::Mesh(format!(
                            "triangle {t} is degenerate or negatively oriented (signed area {area})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Lebesgue measure |Ω| as the sum of element measures.
    pub fn measure(&self) -> T {
        match self {
            DomainMesh::Interval { nodes } => nodes.windows(2).map(|w| w[1] - w[0]).sum(),
            DomainMesh::Triangulation {
                vertices,
                triangles,
            } => triangles
                .iter()
                .map(|t| signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
                .sum(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialization is infallible")
    }
}
