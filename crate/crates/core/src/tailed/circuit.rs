//! Tailed-circuit IR: gates act on qubit wires and ebit heads; tails are
//! reserved for injection and contraction.

use std::collections::{HashMap, HashSet};

use crate::duality::choi::ebit;
use crate::error::{Error, Result};
use crate::qkernel::linalg::{apply_on_wires, kron_vec};
use crate::qkernel::state::{Observable, PureState, UnitaryOp};
use crate::scalar::{re, CVector, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Endpoint {
    Head(usize),
    Tail(usize),
    Qubit(usize),
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Head(e) => write!(f, "h{e}"),
            Self::Tail(e) => write!(f, "t{e}"),
            Self::Qubit(q) => write!(f, "q{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionMode {
    /// One `n`-fold Toffoli onto a single ancilla.
    Monolithic,
    /// A chain of Toffolis through `n − 1` work ancillas, uncomputed afterwards.
    Cascade,
}

/// Binary measurement `{P0, P1}` with `P1 = |b⟩⟨b|` on the listed tails.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    pub tails: Vec<Endpoint>,
    pub bits: Vec<bool>,
    pub mode: InjectionMode,
}

impl InjectionSpec {
    /// All-ones input on the tails of ebits `0..n`.
    pub fn all_ones(n: usize) -> Self {
        Self {
            tails: (0..n).map(Endpoint::Tail).collect(),
            bits: vec![true; n],
            mode: InjectionMode::Monolithic,
        }
    }

    pub fn with_bits(n: usize, bits: Vec<bool>) -> Self {
        Self {
            tails: (0..n).map(Endpoint::Tail).collect(),
            bits,
            mode: InjectionMode::Monolithic,
        }
    }

    pub fn mode(mut self, mode: InjectionMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutSpec<R: Real> {
    pub observable: Observable<R>,
    pub heads: Vec<Endpoint>,
    /// `tr O`, supplied by the caller.
    pub trace: R,
}

impl<R: Real> ReadoutSpec<R> {
    pub fn new(observable: Observable<R>, heads: Vec<Endpoint>) -> Self {
        let trace = observable.trace();
        Self {
            observable,
            heads,
            trace,
        }
    }

    /// Readout on the heads of ebits `0..n`.
    pub fn on_heads(observable: Observable<R>, n: usize) -> Self {
        Self::new(observable, (0..n).map(Endpoint::Head).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGate<R: Real> {
    pub unitary: UnitaryOp<R>,
    pub targets: Vec<Endpoint>,
}

/// Wire layout of the simulated state: `[h0, t0, h1, t1, …, q0, q1, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailedCircuit<R: Real> {
    ebits: usize,
    qubits: usize,
    local_dim: usize,
    gates: Vec<CircuitGate<R>>,
    injection: Option<InjectionSpec>,
    readout: Option<ReadoutSpec<R>>,
    contractions: Vec<(Endpoint, Endpoint)>,
    topological: bool,
}

impl<R: Real> TailedCircuit<R> {
    /// Qubit ebits and qubit wires.
    pub fn new(ebits: usize, qubits: usize) -> Self {
        Self::with_local_dim(ebits, qubits, 2)
    }

    pub fn with_local_dim(ebits: usize, qubits: usize, local_dim: usize) -> Self {
        Self {
            ebits,
            qubits,
            local_dim,
            gates: Vec::new(),
            injection: None,
            readout: None,
            contractions: Vec::new(),
            topological: false,
        }
    }

    /// Program circuit: `U` on the heads of `n` ebits.
    pub fn program(u: UnitaryOp<R>, local_dim: usize) -> Result<Self> {
        let n = parts_of(u.dim(), local_dim)?;
        let mut c = Self::with_local_dim(n, 0, local_dim);
        c.gate(u, (0..n).map(Endpoint::Head).collect())?;
        Ok(c)
    }

    pub fn gate(&mut self, unitary: UnitaryOp<R>, targets: Vec<Endpoint>) -> Result<&mut Self> {
        let g = CircuitGate { unitary, targets };
        self.check_gate(&g)?;
        self.gates.push(g);
        Ok(self)
    }

    pub fn contract(&mut self, a: Endpoint, b: Endpoint) -> Result<&mut Self> {
        self.contractions.push((a, b));
        if let Err(e) = self.validate() {
            self.contractions.pop();
            return Err(e);
        }
        Ok(self)
    }

    pub fn set_injection(&mut self, spec: InjectionSpec) -> Result<&mut Self> {
        let old = self.injection.replace(spec);
        if let Err(e) = self.validate() {
            self.injection = old;
            return Err(e);
        }
        Ok(self)
    }

    pub fn set_readout(&mut self, spec: ReadoutSpec<R>) -> Result<&mut Self> {
        let old = self.readout.replace(spec);
        if let Err(e) = self.validate() {
            self.readout = old;
            return Err(e);
        }
        Ok(self)
    }

    /// Allows cyclic time flow; contractions are then evaluated by postselection.
    pub fn set_topological(&mut self, flag: bool) -> &mut Self {
        self.topological = flag;
        self
    }

    pub fn ebits(&self) -> usize {
        self.ebits
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn gates(&self) -> &[CircuitGate<R>] {
        &self.gates
    }

    pub fn injection(&self) -> Option<&InjectionSpec> {
        self.injection.as_ref()
    }

    pub fn readout(&self) -> Option<&ReadoutSpec<R>> {
        self.readout.as_ref()
    }

    pub fn contractions(&self) -> &[(Endpoint, Endpoint)] {
        &self.contractions
    }

    pub fn is_topological(&self) -> bool {
        self.topological
    }

    pub fn wire_count(&self) -> usize {
        2 * self.ebits + self.qubits
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.local_dim; 2 * self.ebits];
        dims.extend(std::iter::repeat_n(2, self.qubits));
        dims
    }

    /// Position of an endpoint in the simulated state.
    pub fn wire(&self, ep: Endpoint) -> Result<usize> {
        match ep {
            Endpoint::Head(e) if e < self.ebits => Ok(2 * e),
            Endpoint::Tail(e) if e < self.ebits => Ok(2 * e + 1),
            Endpoint::Qubit(q) if q < self.qubits => Ok(2 * self.ebits + q),
            _ => Err(Error::Validation(format!("endpoint {ep} does not exist"))),
        }
    }

    fn check_gate(&self, g: &CircuitGate<R>) -> Result<()> {
        let mut dim = 1usize;
        for (n, &t) in g.targets.iter().enumerate() {
            if let Endpoint::Tail(_) = t {
                return Err(Error::Validation(format!(
                    "gate targets tail {t}; tails are reserved"
                )));
            }
            self.wire(t)?;
            if g.targets[..n].contains(&t) {
                return Err(Error::Validation(format!("gate targets {t} twice")));
            }
            dim *= if matches!(t, Endpoint::Qubit(_)) {
                2
            } else {
                self.local_dim
            };
        }
        if dim != g.unitary.dim() {
            return Err(Error::Validation(format!(
                "gate of dimension {} on targets of dimension {dim}",
                g.unitary.dim()
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            self.check_gate(g)?;
        }
        let mut seen = HashSet::new();
        for &(a, b) in &self.contractions {
            self.wire(a)?;
            self.wire(b)?;
            if a == b || !seen.insert(a) || !seen.insert(b) {
                return Err(Error::Validation(format!(
                    "contraction ({a}, {b}) reuses an endpoint"
                )));
            }
            let directed = matches!(
                (a, b),
                (Endpoint::Head(_), Endpoint::Tail(_)) | (Endpoint::Tail(_), Endpoint::Head(_))
            );
            if !directed && !self.topological {
                return Err(Error::Validation(format!(
                    "contraction ({a}, {b}) has no time direction; only head–tail pairs are allowed outside topological mode"
                )));
            }
        }
        if !self.topological && self.has_cycle() {
            return Err(Error::Validation(
                "contractions close a cycle in the time flow".into(),
            ));
        }
        if let Some(inj) = &self.injection {
            if inj.tails.len() != inj.bits.len() {
                return Err(Error::Validation(
                    "injection bitstring length differs from tail count".into(),
                ));
            }
            if self.local_dim != 2 {
                return Err(Error::Validation("injection needs qubit tails".into()));
            }
            for (n, &t) in inj.tails.iter().enumerate() {
                if !matches!(t, Endpoint::Tail(_)) {
                    return Err(Error::Validation(format!(
                        "injection target {t} is not a tail"
                    )));
                }
                self.wire(t)?;
                if inj.tails[..n].contains(&t) || seen.contains(&t) {
                    return Err(Error::Validation(format!(
                        "injection target {t} is used twice"
                    )));
                }
            }
        }
        if let Some(ro) = &self.readout {
            let mut dim = 1;
            for (n, &h) in ro.heads.iter().enumerate() {
                if matches!(h, Endpoint::Tail(_)) {
                    return Err(Error::Validation(format!("readout target {h} is a tail")));
                }
                self.wire(h)?;
                if ro.heads[..n].contains(&h) || seen.contains(&h) {
                    return Err(Error::Validation(format!(
                        "readout target {h} is used twice"
                    )));
                }
                dim *= if matches!(h, Endpoint::Qubit(_)) {
                    2
                } else {
                    self.local_dim
                };
            }
            if dim != ro.observable.dim() {
                return Err(Error::Validation(format!(
                    "observable of dimension {} on targets of dimension {dim}",
                    ro.observable.dim()
                )));
            }
        }
        Ok(())
    }

    /// Ebits joined by gates form one block; a head–tail contraction orders
    /// the head's block before the tail's block.
    fn has_cycle(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.ebits).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        for g in &self.gates {
            let heads: Vec<usize> = g
                .targets
                .iter()
                .filter_map(|t| {
                    if let Endpoint::Head(e) = t {
                        Some(*e)
                    } else {
                        None
                    }
                })
                .collect();
            for w in heads.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let mut edges: HashMap<usize, Vec<usize>> = HashMap::new();
        for &(a, b) in &self.contractions {
            let (from, to) = match (a, b) {
                (Endpoint::Head(x), Endpoint::Tail(y)) | (Endpoint::Tail(y), Endpoint::Head(x)) => {
                    (x, y)
                }
                _ => continue,
            };
            let (f, t) = (find(&mut parent, from), find(&mut parent, to));
            if f == t {
                return true;
            }
            edges.entry(f).or_default().push(t);
        }
        // depth-first search with colours
        let mut colour = vec![0u8; self.ebits];
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
        (0..self.ebits).any(|n| colour[n] == 0 && visit(n, &edges, &mut colour))
    }
}

pub(crate) fn parts_of(total: usize, local: usize) -> Result<usize> {
    let mut n = 0;
    let mut acc = 1;
    while acc < total {
        acc *= local;
        n += 1;
    }
    if acc != total || local < 2 {
        return Err(Error::Dimension(format!(
            "dimension {total} is not a power of {local}"
        )));
    }
    Ok(n)
}

/// Gates applied to `|ω⟩^{⊗ebits} ⊗ |0⟩^{⊗qubits}`; contractions, injection
/// and readout are left to the executor.
pub fn simulate<R: Real>(circuit: &TailedCircuit<R>) -> Result<PureState<R>> {
    circuit.validate()?;
    let w = ebit::<R>(circuit.local_dim);
    let mut v = CVector::from_element(1, re(R::one()));
    for _ in 0..circuit.ebits {
        v = kron_vec(&v, &w);
    }
    if circuit.qubits > 0 {
        let mut z = CVector::zeros(1 << circuit.qubits);
        z[0] = re(R::one());
        v = kron_vec(&v, &z);
    }
    let dims = circuit.dims();
    for g in &circuit.gates {
        let wires: Vec<usize> = g
            .targets
            .iter()
            .map(|&t| circuit.wire(t))
            .collect::<Result<_>>()?;
        v = apply_on_wires(&v, &dims, g.unitary.matrix(), &wires)?;
    }
    Ok(PureState::from_parts_unchecked(v, dims))
}
