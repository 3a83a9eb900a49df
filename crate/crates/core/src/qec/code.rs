//! Codes given by encoding isometries, error sets, and their text form.

use crate::error::{Error, Result};
use crate::memory::description::{
    format_complex_list, logical_lines, parse_complex_list, parse_error, parse_num, tokenize,
    Fields,
};
use crate::qkernel::gates;
use crate::qkernel::linalg::{hermiticity_residual, identity, kron_all, max_abs, max_abs_diff};
use crate::scalar::{c, CMatrix, Real};

/// An `[[n, k, d]]` code `V: C^{2^k} → C^{2^n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Code<R: Real> {
    name: String,
    n: usize,
    k: usize,
    v: CMatrix<R>,
    p: CMatrix<R>,
    distance: usize,
}

impl<R: Real> Code<R> {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        k: usize,
        v: CMatrix<R>,
        distance: usize,
    ) -> Result<Self> {
        Self::with_tolerance(
            name,
            n,
            k,
            v,
            distance,
            R::default_tolerance() * R::of(10.0),
        )
    }

    pub fn with_tolerance(
        name: impl Into<String>,
        n: usize,
        k: usize,
        v: CMatrix<R>,
        distance: usize,
        tol: R,
    ) -> Result<Self> {
        if k > n || v.shape() != (1 << n, 1 << k) {
            return Err(Error::Dimension(format!(
                "isometry of shape {:?} for an [[{n},{k}]] code",
                v.shape()
            )));
        }
        let res = max_abs_diff(&(v.adjoint() * &v), &identity(1 << k));
        if res > tol {
            return Err(Error::Validation(format!(
                "V†V deviates from I by {:e}",
                res.as_f64()
            )));
        }
        let p = &v * v.adjoint();
        Ok(Self {
            name: name.into(),
            n,
            k,
            v,
            p,
            distance,
        })
    }

    /// `V = I` on one qubit.
    pub fn trivial() -> Self {
        Self::new("trivial", 1, 1, identity(2), 1).expect("identity is an isometry")
    }

    /// `|b⟩ ↦ |bbb⟩`.
    pub fn repetition() -> Self {
        let mut v = CMatrix::zeros(8, 2);
        v[(0, 0)] = c(1.0, 0.0);
        v[(7, 1)] = c(1.0, 0.0);
        Self::new("repetition", 3, 1, v, 1).expect("valid code")
    }

    /// `|0⟩ ↦ |+++⟩`, `|1⟩ ↦ |−−−⟩`: the repetition code in the Hadamard frame.
    pub fn phase_flip() -> Self {
        let h = gates::h::<R>();
        let v = kron_all(&[h.clone(), h.clone(), h]) * Self::repetition().v;
        Self::new("phase-flip", 3, 1, v, 1).expect("valid code")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn isometry(&self) -> &CMatrix<R> {
        &self.v
    }

    pub fn projector(&self) -> &CMatrix<R> {
        &self.p
    }

    pub fn physical_dim(&self) -> usize {
        1 << self.n
    }

    pub fn logical_dim(&self) -> usize {
        1 << self.k
    }

    /// Idempotence and Hermiticity residual of `P`.
    pub fn projector_residual(&self) -> R {
        let idem = max_abs_diff(&(&self.p * &self.p), &self.p);
        idem.max(hermiticity_residual(&self.p))
    }

    /// `V† U V` when `U` maps the code space to itself.
    pub fn logical_action(&self, u: &CMatrix<R>, tol: R) -> Result<CMatrix<R>> {
        if u.nrows() != self.physical_dim() {
            return Err(Error::Dimension(format!(
                "operator of dimension {} on a {}-qubit code",
                u.nrows(),
                self.n
            )));
        }
        let ul = self.v.adjoint() * u * &self.v;
        let res = max_abs(&(u * &self.v - &self.v * &ul));
        if res > tol {
            return Err(Error::Validation(format!(
                "operator leaves the code space (residual {:e})",
                res.as_f64()
            )));
        }
        Ok(ul)
    }

    /// `V σ V† + (I − P)`: the logical operator extended unitarily.
    pub fn encode_operator(&self, logical: &CMatrix<R>) -> CMatrix<R> {
        &self.v * logical * self.v.adjoint() + identity::<R>(self.physical_dim()) - &self.p
    }
}

/// Error operators on a code's physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSet<R: Real> {
    ops: Vec<CMatrix<R>>,
    labels: Vec<String>,
}

impl<R: Real> ErrorSet<R> {
    pub fn new(ops: Vec<CMatrix<R>>) -> Result<Self> {
        let labels = (0..ops.len()).map(|i| format!("E{i}")).collect();
        Self::labelled(ops, labels)
    }

    pub fn labelled(ops: Vec<CMatrix<R>>, labels: Vec<String>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::Argument("empty error set".into()));
        };
        let d = first.nrows();
        if labels.len() != ops.len() || ops.iter().any(|e| e.shape() != (d, d)) {
            return Err(Error::Dimension(
                "error operators must share one square shape".into(),
            ));
        }
        Ok(Self { ops, labels })
    }

    /// Pauli strings such as `["III", "XII"]`, qubit 1 first.
    pub fn paulis(strings: &[&str]) -> Result<Self> {
        let ops = strings
            .iter()
            .map(|s| {
                gates::pauli_string(s)
                    .ok_or_else(|| Error::Argument(format!("bad Pauli string {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::labelled(ops, strings.iter().map(|s| s.to_string()).collect())
    }

    pub fn ops(&self) -> &[CMatrix<R>] {
        &self.ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].nrows()
    }

    pub(crate) fn check_code(&self, code: &Code<R>) -> Result<()> {
        if self.dim() != code.physical_dim() {
            return Err(Error::Dimension(format!(
                "errors of dimension {} on a {}-qubit code",
                self.dim(),
                code.n()
            )));
        }
        Ok(())
    }

    /// Linear recombinations `A_i = Σ_j m_ij E_j`.
    pub fn recombined(&self, m: &CMatrix<R>) -> Result<Self> {
        if m.ncols() != self.len() {
            return Err(Error::Dimension(
                "mixing matrix does not match the error count".into(),
            ));
        }
        let ops = (0..m.nrows())
            .map(|i| {
                self.ops
                    .iter()
                    .enumerate()
                    .fold(CMatrix::zeros(self.dim(), self.dim()), |acc, (j, e)| {
                        acc + e * m[(i, j)]
                    })
            })
            .collect();
        Self::new(ops)
    }

    /// Kraus operators `√w_i E_i`.
    pub fn weighted(&self, weights: &[f64]) -> Result<Self> {
        if weights.len() != self.len() || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::Argument(
                "one non-negative weight per error is required".into(),
            ));
        }
        let ops = self
            .ops
            .iter()
            .zip(weights)
            .map(|(e, w)| e * c::<R>(w.sqrt(), 0.0))
            .collect();
        Self::labelled(ops, self.labels.clone())
    }
}

/// A code together with an optional error set, as read from a `QVNC1` file.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeFile<R: Real> {
    pub code: Code<R>,
    pub errors: Option<ErrorSet<R>>,
}

fn matrix_data<R: Real>(m: &CMatrix<R>) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push((m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()));
        }
    }
    out
}

impl<R: Real> CodeFile<R> {
    /// Header `QVNC1 name=<text> n=<int> k=<int> distance=<int>`, an
    /// `isometry rows=<r> cols=<c> data=<re,im;...>` line, then optional
    /// `error pauli=<string>` or `error rows=<d> data=<...>` lines.
    pub fn serialize(&self) -> String {
        let c = &self.code;
        let mut out = format!(
            "QVNC1 name={} n={} k={} distance={}\n",
            c.name, c.n, c.k, c.distance
        );
        out.push_str(&format!(
            "isometry rows={} cols={} data={}\n",
            c.v.nrows(),
            c.v.ncols(),
            format_complex_list(&matrix_data(&c.v))
        ));
        if let Some(e) = &self.errors {
            for (op, label) in e.ops.iter().zip(&e.labels) {
                match gates::pauli_string::<R>(label) {
                    Some(p) if p == *op => out.push_str(&format!("error pauli={label}\n")),
                    _ => out.push_str(&format!(
                        "error rows={} data={}\n",
                        op.nrows(),
                        format_complex_list(&matrix_data(op))
                    )),
                }
            }
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = logical_lines(text);
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_error(1, 1, "empty code file"))?;
        let toks = tokenize(header);
        if toks.first().map(|t| t.text) != Some("QVNC1") {
            return Err(parse_error(
                hl,
                toks.first().map_or(1, |t| t.column),
                "expected QVNC1 header",
            ));
        }
        let mut f = Fields::new(hl, &toks[1..])?;
        let name = f.take("name")?.value.to_string();
        let kv = f.take("n")?;
        let n: usize = parse_num(hl, &kv.token, kv.value)?;
        let kv = f.take("k")?;
        let k: usize = parse_num(hl, &kv.token, kv.value)?;
        let kv = f.take("distance")?;
        let distance: usize = parse_num(hl, &kv.token, kv.value)?;
        f.finish()?;
        if n > 12 || k > n {
            return Err(parse_error(
                hl,
                1,
                format!("unsupported code size n={n}, k={k}"),
            ));
        }

        let (il, iline) = lines
            .next()
            .ok_or_else(|| parse_error(hl + 1, 1, "missing isometry line"))?;
        let toks = tokenize(iline);
        if toks[0].text != "isometry" {
            return Err(parse_error(il, toks[0].column, "expected isometry line"));
        }
        let mut f = Fields::new(il, &toks[1..])?;
        let kv = f.take("rows")?;
        let rows: usize = parse_num(il, &kv.token, kv.value)?;
        let kv = f.take("cols")?;
        let cols: usize = parse_num(il, &kv.token, kv.value)?;
        let kv = f.take("data")?;
        let data = parse_complex_list(il, &kv.token, kv.value)?;
        f.finish()?;
        if data.len() != rows * cols {
            return Err(parse_error(
                il,
                kv.token.column,
                format!("expected {} entries", rows * cols),
            ));
        }
        let v = CMatrix::from_fn(rows, cols, |i, j| {
            let (a, b) = data[i * cols + j];
            c(a, b)
        });
        let code =
            Code::new(name, n, k, v, distance).map_err(|e| parse_error(il, 1, e.to_string()))?;

        let mut ops = Vec::new();
        let mut labels = Vec::new();
        for (ln, line) in lines {
            let toks = tokenize(line);
            if toks[0].text != "error" {
                return Err(parse_error(
                    ln,
                    toks[0].column,
                    format!("unexpected {:?}", toks[0].text),
                ));
            }
            let mut f = Fields::new(ln, &toks[1..])?;
            let (op, label) = if f.peek_key() == Some("pauli") {
                let kv = f.take("pauli")?;
                let op = gates::pauli_string(kv.value)
                    .filter(|_| kv.value.len() == n)
                    .ok_or_else(|| {
                        parse_error(
                            ln,
                            kv.token.column,
                            format!("bad {n}-qubit Pauli string {:?}", kv.value),
                        )
                    })?;
                (op, kv.value.to_string())
            } else {
                let kv = f.take("rows")?;
                let d: usize = parse_num(ln, &kv.token, kv.value)?;
                let kv = f.take("data")?;
                let data = parse_complex_list(ln, &kv.token, kv.value)?;
                if d != code.physical_dim() || data.len() != d * d {
                    return Err(parse_error(
                        ln,
                        kv.token.column,
                        "error matrix has the wrong size",
                    ));
                }
                let op = CMatrix::from_fn(d, d, |i, j| {
                    let (a, b) = data[i * d + j];
                    c(a, b)
                });
                (op, format!("E{}", ops.len()))
            };
            f.finish()?;
            ops.push(op);
            labels.push(label);
        }
        let errors = if ops.is_empty() {
            None
        } else {
            Some(ErrorSet::labelled(ops, labels)?)
        };
        Ok(Self { code, errors })
    }
}
