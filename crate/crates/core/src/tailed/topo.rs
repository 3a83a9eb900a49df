//! Closed and partially closed diagrams of Choi-state vertices joined by
//! Bell segments, evaluated as exact postselected overlaps.

use std::collections::{HashMap, HashSet};

use crate::duality::choi::ebit;
use crate::error::{Error, Result};
use crate::qkernel::linalg::{kron_vec, permute_wires};
use crate::qkernel::measure::project_out;
use crate::qkernel::state::{PureState, UnitaryOp};
use crate::scalar::{re, CVector, Real, C};
use crate::tailed::circuit::{parts_of, simulate, Endpoint, TailedCircuit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TopoEndpoint {
    pub vertex: usize,
    pub end: Endpoint,
}

impl std::fmt::Display for TopoEndpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.vertex, self.end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoVertex<R: Real> {
    pub gate: UnitaryOp<R>,
    pub ebits: usize,
    pub local_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopoDiagram<R: Real> {
    vertices: Vec<TopoVertex<R>>,
    segments: Vec<(TopoEndpoint, TopoEndpoint)>,
    open: Option<Vec<TopoEndpoint>>,
    postselected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopoValue<R: Real> {
    Closed(C<R>),
    /// Unnormalised amplitudes over the open endpoints, in order.
    Open {
        amplitudes: CVector<R>,
        endpoints: Vec<TopoEndpoint>,
    },
}

impl<R: Real> TopoValue<R> {
    pub fn closed(&self) -> Option<C<R>> {
        match self {
            Self::Closed(z) => Some(*z),
            Self::Open { .. } => None,
        }
    }
}

impl<R: Real> Default for TopoDiagram<R> {
    fn default() -> Self {
        Self::new()
    }
}

impl<R: Real> TopoDiagram<R> {
    pub fn new() -> Self {
        Self {
            vertices: Vec::new(),
            segments: Vec::new(),
            open: None,
            postselected: true,
        }
    }

    /// Adds the Choi state of `gate` on qubit ebits; returns its index.
    pub fn vertex(&mut self, gate: UnitaryOp<R>) -> Result<usize> {
        self.vertex_with_dim(gate, 2)
    }

    pub fn vertex_with_dim(&mut self, gate: UnitaryOp<R>, local_dim: usize) -> Result<usize> {
        let ebits = parts_of(gate.dim(), local_dim)?;
        self.vertices.push(TopoVertex {
            gate,
            ebits,
            local_dim,
        });
        Ok(self.vertices.len() - 1)
    }

    pub fn segment(&mut self, a: TopoEndpoint, b: TopoEndpoint) -> &mut Self {
        self.segments.push((a, b));
        self
    }

    /// Fixes the order of the open endpoints in the result.
    pub fn set_open(&mut self, open: Vec<TopoEndpoint>) -> &mut Self {
        self.open = Some(open);
        self
    }

    /// Sampling mode forbids cyclic time flow.
    pub fn set_postselected(&mut self, flag: bool) -> &mut Self {
        self.postselected = flag;
        self
    }

    pub fn vertices(&self) -> &[TopoVertex<R>] {
        &self.vertices
    }

    pub fn segments(&self) -> &[(TopoEndpoint, TopoEndpoint)] {
        &self.segments
    }

    fn endpoint_dim(&self, ep: TopoEndpoint) -> Result<usize> {
        let v = self
            .vertices
            .get(ep.vertex)
            .ok_or_else(|| Error::Validation(format!("endpoint {ep}: no such vertex")))?;
        match ep.end {
            Endpoint::Head(i) | Endpoint::Tail(i) if i < v.ebits => Ok(v.local_dim),
            _ => Err(Error::Validation(format!("endpoint {ep} does not exist"))),
        }
    }

    fn all_endpoints(&self) -> Vec<TopoEndpoint> {
        let mut out = Vec::new();
        for (vi, v) in self.vertices.iter().enumerate() {
            for e in 0..v.ebits {
                out.push(TopoEndpoint {
                    vertex: vi,
                    end: Endpoint::Head(e),
                });
                out.push(TopoEndpoint {
                    vertex: vi,
                    end: Endpoint::Tail(e),
                });
            }
        }
        out
    }

    /// Endpoints not joined by a segment, in the declared or canonical order.
    pub fn open_endpoints(&self) -> Vec<TopoEndpoint> {
        if let Some(o) = &self.open {
            return o.clone();
        }
        let used: HashSet<TopoEndpoint> = self.segments.iter().flat_map(|&(a, b)| [a, b]).collect();
        self.all_endpoints()
            .into_iter()
            .filter(|e| !used.contains(e))
            .collect()
    }

    pub(crate) fn validate_segments(&self) -> Result<HashSet<TopoEndpoint>> {
        let mut used = HashSet::new();
        for &(a, b) in &self.segments {
            let (da, db) = (self.endpoint_dim(a)?, self.endpoint_dim(b)?);
            if da != db {
                return Err(Error::Validation(format!(
                    "segment ({a}, {b}) joins dimensions {da} and {db}"
                )));
            }
            if a == b || !used.insert(a) || !used.insert(b) {
                return Err(Error::Validation(format!(
                    "segment ({a}, {b}) reuses an endpoint"
                )));
            }
        }
        Ok(used)
    }

    pub fn validate(&self) -> Result<()> {
        let used = self.validate_segments()?;
        if let Some(open) = &self.open {
            let mut seen = HashSet::new();
            for &e in open {
                self.endpoint_dim(e)?;
                if used.contains(&e) || !seen.insert(e) {
                    return Err(Error::Validation(format!(
                        "open endpoint {e} is also joined or repeated"
                    )));
                }
            }
            let free = self
                .all_endpoints()
                .into_iter()
                .filter(|e| !used.contains(e))
                .count();
            if free != open.len() {
                return Err(Error::Validation("open endpoint list is incomplete".into()));
            }
        }
        if !self.postselected && self.has_cycle() {
            return Err(Error::Validation(
                "diagram has cyclic time flow outside postselected mode".into(),
            ));
        }
        Ok(())
    }

    fn has_cycle(&self) -> bool {
        let mut edges: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in &self.segments {
            let (from, to) = match (a.end, b.end) {
                (Endpoint::Head(_), Endpoint::Tail(_)) => (a.vertex, b.vertex),
                (Endpoint::Tail(_), Endpoint::Head(_)) => (b.vertex, a.vertex),
                _ => continue,
            };
            if from == to {
                return true;
            }
            edges.entry(from).or_default().push(to);
        }
        let mut colour = vec![0u8; self.vertices.len()];
        fn visit(n: usize, edges: &HashMap<usize, Vec<usize>>, colour: &mut [u8]) -> bool {
            colour[n] = 1;
            for &m in edges.get(&n).map_or(&[][..], |v| v.as_slice()) {
                if colour[m] == 1 || (colour[m] == 0 && visit(m, edges, colour)) {
                    return true;
                }
            }
            colour[n] = 2;
            false
        }
        (0..self.vertices.len()).any(|n| colour[n] == 0 && visit(n, &edges, &mut colour))
    }

    /// Choi state of one vertex on its endpoints `[h0, t0, h1, t1, …]`.
    pub fn vertex_state(&self, v: usize) -> Result<PureState<R>> {
        let vx = &self.vertices[v];
        simulate(&TailedCircuit::program(vx.gate.clone(), vx.local_dim)?)
    }

    pub fn vertex_endpoints(&self, v: usize) -> Vec<TopoEndpoint> {
        (0..self.vertices[v].ebits)
            .flat_map(|e| {
                [
                    TopoEndpoint {
                        vertex: v,
                        end: Endpoint::Head(e),
                    },
                    TopoEndpoint {
                        vertex: v,
                        end: Endpoint::Tail(e),
                    },
                ]
            })
            .collect()
    }
}

/// `⟨⊗ segments ω| ⊗ vertices⟩`, contracted vertex by vertex so that
/// segments are projected out as soon as both ends exist.
pub fn eval_topological<R: Real>(diagram: &TopoDiagram<R>) -> Result<TopoValue<R>> {
    diagram.validate()?;
    let mut state = CVector::from_element(1, re(R::one()));
    let mut labels: Vec<TopoEndpoint> = Vec::new();
    let mut dims: Vec<usize> = Vec::new();
    let mut done = vec![false; diagram.segments.len()];
    for v in 0..diagram.vertices.len() {
        let vs = diagram.vertex_state(v)?;
        state = kron_vec(&state, vs.amplitudes());
        labels.extend(diagram.vertex_endpoints(v));
        dims.extend_from_slice(vs.dims());
        for (si, &(a, b)) in diagram.segments.iter().enumerate() {
            if done[si] {
                continue;
            }
            let (Some(pa), Some(pb)) = (
                labels.iter().position(|&l| l == a),
                labels.iter().position(|&l| l == b),
            ) else {
                continue;
            };
            let ps = PureState::from_parts_unchecked(state, dims.clone());
            state = project_out(&ps, &[pa, pb], &ebit(dims[pa]))?;
            let (hi, lo) = (pa.max(pb), pa.min(pb));
            for p in [hi, lo] {
                labels.remove(p);
                dims.remove(p);
            }
            done[si] = true;
        }
    }
    if labels.is_empty() {
        return Ok(TopoValue::Closed(state[0]));
    }
    let open = diagram.open_endpoints();
    let perm: Vec<usize> = open
        .iter()
        .map(|e| {
            labels
                .iter()
                .position(|l| l == e)
                .expect("validated open endpoint")
        })
        .collect();
    let amplitudes = permute_wires(&state, &dims, &perm)?;
    Ok(TopoValue::Open {
        amplitudes,
        endpoints: open,
    })
}

/// Single vertex whose head is joined to its own tail.
pub fn circle<R: Real>(gate: UnitaryOp<R>) -> Result<TopoDiagram<R>> {
    let local_dim = gate.dim();
    let mut d = TopoDiagram::new();
    let v = d.vertex_with_dim(gate, local_dim)?;
    d.segment(
        TopoEndpoint {
            vertex: v,
            end: Endpoint::Head(0),
        },
        TopoEndpoint {
            vertex: v,
            end: Endpoint::Tail(0),
        },
    );
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qkernel::gates;
    use crate::qkernel::linalg::trace;
    use crate::qkernel::random::haar_unitary;
    use crate::qkernel::rng::RngStream;
    use crate::scalar::c;

    fn ep(vertex: usize, end: Endpoint) -> TopoEndpoint {
        TopoEndpoint { vertex, end }
    }

    #[test]
    fn circles() {
        let one = eval_topological(&circle(UnitaryOp::<f64>::identity(2)).unwrap()).unwrap();
        assert!((one.closed().unwrap() - c::<f64>(1., 0.)).norm() < 1e-12);
        let z =
            eval_topological(&circle(UnitaryOp::new(gates::z::<f64>()).unwrap()).unwrap()).unwrap();
        assert!(z.closed().unwrap().norm() < 1e-12);
        let t =
            eval_topological(&circle(UnitaryOp::new(gates::t::<f64>()).unwrap()).unwrap()).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((t.closed().unwrap() - c::<f64>((1.0 + s) / 2.0, s / 2.0)).norm() < 1e-12);
        let mut rng = RngStream::new(2, 2);
        for d in [2, 3, 4] {
            let u = haar_unitary::<f64>(d, &mut rng);
            let want = trace(u.matrix()) / c::<f64>(d as f64, 0.);
            let got = eval_topological(&circle(u).unwrap())
                .unwrap()
                .closed()
                .unwrap();
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn multi_qubit_vertex_circle() {
        let mut rng = RngStream::new(5, 1);
        let u = haar_unitary::<f64>(4, &mut rng);
        let mut d = TopoDiagram::new();
        let v = d.vertex(u.clone()).unwrap();
        d.segment(ep(v, Endpoint::Head(0)), ep(v, Endpoint::Tail(0)));
        d.segment(ep(v, Endpoint::Head(1)), ep(v, Endpoint::Tail(1)));
        let got = eval_topological(&d).unwrap().closed().unwrap();
        assert!((got - trace(u.matrix()) / c::<f64>(4., 0.)).norm() < 1e-12);
    }

    #[test]
    fn disjoint_circles_multiply() {
        let s = UnitaryOp::new(gates::s::<f64>()).unwrap();
        let t = UnitaryOp::new(gates::t::<f64>()).unwrap();
        let mut d = TopoDiagram::new();
        let a = d.vertex(s.clone()).unwrap();
        let b = d.vertex(t.clone()).unwrap();
        d.segment(ep(a, Endpoint::Head(0)), ep(a, Endpoint::Tail(0)));
        d.segment(ep(b, Endpoint::Tail(0)), ep(b, Endpoint::Head(0)));
        let got = eval_topological(&d).unwrap().closed().unwrap();
        let want = (trace(s.matrix()) / c::<f64>(2., 0.)) * (trace(t.matrix()) / c::<f64>(2., 0.));
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn open_chain_is_composed_program() {
        let mut rng = RngStream::new(6, 1);
        let u1 = haar_unitary::<f64>(2, &mut rng);
        let u2 = haar_unitary::<f64>(2, &mut rng);
        let mut d = TopoDiagram::new();
        let a = d.vertex(u1.clone()).unwrap();
        let b = d.vertex(u2.clone()).unwrap();
        d.segment(ep(a, Endpoint::Head(0)), ep(b, Endpoint::Tail(0)));
        d.set_open(vec![ep(b, Endpoint::Head(0)), ep(a, Endpoint::Tail(0))]);
        match eval_topological(&d).unwrap() {
            TopoValue::Open { amplitudes, .. } => {
                let want = crate::duality::choi::vectorize_single(&(u2.matrix() * u1.matrix()));
                assert!((amplitudes.scale(2.0) - want).norm() < 1e-12);
            }
            TopoValue::Closed(_) => panic!("expected open value"),
        }
    }

    #[test]
    fn validation() {
        let mut d = TopoDiagram::<f64>::new();
        let v = d.vertex(UnitaryOp::identity(2)).unwrap();
        d.segment(ep(v, Endpoint::Head(0)), ep(v, Endpoint::Tail(0)));
        d.set_postselected(false);
        assert!(eval_topological(&d).is_err());
        let mut e = TopoDiagram::<f64>::new();
        let v = e.vertex(UnitaryOp::identity(2)).unwrap();
        e.segment(ep(v, Endpoint::Head(0)), ep(v, Endpoint::Head(1)));
        assert!(eval_topological(&e).is_err());
    }
}
