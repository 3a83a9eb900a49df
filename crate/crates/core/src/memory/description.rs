//! Classical gate-sequence descriptions of programs and their `QVN1` text form.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::qkernel::gates;
use crate::qkernel::linalg::{embed_on_wires, identity, unitarity_residual};
use crate::qkernel::state::UnitaryOp;
use crate::scalar::{c, CMatrix, Real};

const CUSTOM_TOLERANCE: f64 = 1e-9;

/// Row-major complex matrix carried verbatim in a description.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomGate {
    pub rows: usize,
    pub data: Vec<(f64, f64)>,
}

impl CustomGate {
    pub fn from_matrix<R: Real>(m: &CMatrix<R>) -> Self {
        let rows = m.nrows();
        let mut data = Vec::with_capacity(rows * rows);
        for i in 0..rows {
            for j in 0..rows {
                data.push((m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()));
            }
        }
        Self { rows, data }
    }

    pub fn matrix<R: Real>(&self) -> CMatrix<R> {
        CMatrix::from_fn(self.rows, self.rows, |i, j| {
            let (a, b) = self.data[i * self.rows + j];
            c(a, b)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateTag {
    H,
    T,
    Tdg,
    X,
    Z,
    CX,
    CZ,
    CCX,
    Custom(CustomGate),
}

impl GateTag {
    pub fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "H" => Self::H,
            "T" => Self::T,
            "Tdg" => Self::Tdg,
            "X" => Self::X,
            "Z" => Self::Z,
            "CX" => Self::CX,
            "CZ" => Self::CZ,
            "CCX" => Self::CCX,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::H => "H",
            Self::T => "T",
            Self::Tdg => "Tdg",
            Self::X => "X",
            Self::Z => "Z",
            Self::CX => "CX",
            Self::CZ => "CZ",
            Self::CCX => "CCX",
            Self::Custom(_) => "custom",
        }
    }

    /// Number of qubits the gate acts on; `None` for a custom matrix whose
    /// size is not a power of two.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Self::H | Self::T | Self::Tdg | Self::X | Self::Z => Some(1),
            Self::CX | Self::CZ => Some(2),
            Self::CCX => Some(3),
            Self::Custom(g) => {
                (g.rows.is_power_of_two() && g.rows > 1).then(|| g.rows.trailing_zeros() as usize)
            }
        }
    }

    pub fn matrix<R: Real>(&self) -> CMatrix<R> {
        match self {
            Self::H => gates::h(),
            Self::T => gates::t(),
            Self::Tdg => gates::tdg(),
            Self::X => gates::x(),
            Self::Z => gates::z(),
            Self::CX => gates::cx(),
            Self::CZ => gates::cz(),
            Self::CCX => gates::ccx(),
            Self::Custom(g) => g.matrix(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub slot: u64,
    pub tag: GateTag,
    pub targets: Vec<usize>,
}

/// Gate sequence over `qubits` wires; qubit 0 is the most significant factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramDescription {
    name: String,
    qubits: usize,
    gates: Vec<GateRecord>,
}

impl ProgramDescription {
    pub fn new(name: impl Into<String>, qubits: usize, gates: Vec<GateRecord>) -> Result<Self> {
        let desc = Self {
            name: name.into(),
            qubits,
            gates,
        };
        desc.validate()?;
        Ok(desc)
    }

    /// Empty gate list on `qubits` wires.
    pub fn identity(name: impl Into<String>, qubits: usize) -> Result<Self> {
        Self::new(name, qubits, Vec::new())
    }

    /// One gate per time slot, in order.
    pub fn sequence(
        name: impl Into<String>,
        qubits: usize,
        gates: Vec<(GateTag, Vec<usize>)>,
    ) -> Result<Self> {
        let records = gates
            .into_iter()
            .enumerate()
            .map(|(t, (tag, targets))| GateRecord {
                slot: t as u64,
                tag,
                targets,
            })
            .collect();
        Self::new(name, qubits, records)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn gates(&self) -> &[GateRecord] {
        &self.gates
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.chars().any(char::is_whitespace) {
            return Err(Error::Validation(format!(
                "program name {:?} must be non-empty without whitespace",
                self.name
            )));
        }
        if self.qubits == 0 {
            return Err(Error::Validation(
                "a program needs at least one qubit".into(),
            ));
        }
        let mut last = 0;
        for (i, g) in self.gates.iter().enumerate() {
            if g.slot < last {
                return Err(Error::Validation(format!(
                    "gate {i}: time slot {} precedes {last}",
                    g.slot
                )));
            }
            last = g.slot;
            let arity = g.tag.arity().ok_or_else(|| {
                Error::Validation(format!(
                    "gate {i}: custom matrix size is not a power of two"
                ))
            })?;
            if g.targets.len() != arity {
                return Err(Error::Validation(format!(
                    "gate {i}: {} acts on {arity} qubits, given {}",
                    g.tag.name(),
                    g.targets.len()
                )));
            }
            for (n, &q) in g.targets.iter().enumerate() {
                if q >= self.qubits {
                    return Err(Error::Validation(format!(
                        "gate {i}: qubit {q} out of range"
                    )));
                }
                if g.targets[..n].contains(&q) {
                    return Err(Error::Validation(format!("gate {i}: qubit {q} repeated")));
                }
            }
            if let GateTag::Custom(cg) = &g.tag {
                if cg.data.len() != cg.rows * cg.rows
                    || cg
                        .data
                        .iter()
                        .any(|(a, b)| !a.is_finite() || !b.is_finite())
                {
                    return Err(Error::Validation(format!(
                        "gate {i}: malformed custom matrix"
                    )));
                }
                let r = unitarity_residual(&cg.matrix::<f64>());
                if r > CUSTOM_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "gate {i}: custom matrix not unitary (residual {r:.3e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Ordered product of the gates (later gates act last).
    pub fn unitary<R: Real>(&self) -> Result<UnitaryOp<R>> {
        let dims = vec![2; self.qubits];
        let mut u = identity::<R>(self.dim());
        for g in &self.gates {
            let full = embed_on_wires(&dims, &g.tag.matrix::<R>(), &g.targets)?;
            u = full * u;
        }
        UnitaryOp::with_tolerance(
            u,
            R::default_tolerance().max(R::of(CUSTOM_TOLERANCE)) * R::of(10.0),
        )
    }

    /// `self` followed by `after`, with the second sequence shifted to later
    /// time slots.
    pub fn then(&self, after: &Self) -> Result<Self> {
        if self.qubits != after.qubits {
            return Err(Error::Dimension(format!(
                "cannot concatenate programs on {} and {} qubits",
                self.qubits, after.qubits
            )));
        }
        let offset = self.gates.last().map_or(0, |g| g.slot + 1);
        let mut gates = self.gates.clone();
        gates.extend(after.gates.iter().map(|g| GateRecord {
            slot: g.slot + offset,
            ..g.clone()
        }));
        Self::new(format!("{}+{}", self.name, after.name), self.qubits, gates)
    }

    /// Canonical `QVN1` text.
    pub fn serialize(&self) -> String {
        let mut out = format!("QVN1 name={} n={}\n", self.name, self.qubits);
        for g in &self.gates {
            let q: Vec<String> = g.targets.iter().map(usize::to_string).collect();
            write!(out, "t={} g={} q={}", g.slot, g.tag.name(), q.join(",")).unwrap();
            if let GateTag::Custom(cg) = &g.tag {
                write!(
                    out,
                    " rows={} data={}",
                    cg.rows,
                    format_complex_list(&cg.data)
                )
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut lines = logical_lines(text);
        let (hline, header) = lines
            .next()
            .ok_or_else(|| parse_error(1, 1, "empty document"))?;
        let fields = tokenize(header);
        let mut it = fields.iter();
        match it.next() {
            Some(t) if t.text == "QVN1" => {}
            Some(t) => {
                return Err(parse_error(
                    hline,
                    t.column,
                    format!("expected QVN1 header, found {:?}", t.text),
                ))
            }
            None => return Err(parse_error(hline, 1, "missing header")),
        }
        let name_tok = it
            .next()
            .ok_or_else(|| parse_error(hline, header.len() + 1, "missing name="))?;
        let name = expect_key(hline, name_tok, "name")?.to_string();
        let n_tok = it
            .next()
            .ok_or_else(|| parse_error(hline, header.len() + 1, "missing n="))?;
        let qubits: usize = parse_num(hline, n_tok, expect_key(hline, n_tok, "n")?)?;
        if let Some(extra) = it.next() {
            return Err(parse_error(
                hline,
                extra.column,
                format!("unexpected token {:?}", extra.text),
            ));
        }
        let mut gates = Vec::new();
        for (ln, line) in lines {
            gates.push(parse_gate_line(ln, line)?);
        }
        Self::new(name, qubits, gates).map_err(|e| match e {
            Error::Validation(m) => parse_error(hline, 1, m),
            other => other,
        })
    }
}

/// No-op boundary where descriptions would be encrypted or signed before
/// leaving the machine.
pub trait DescriptionCipher {
    fn seal(&self, text: &str) -> String;
    fn open(&self, sealed: &str) -> Result<String>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlainText;

impl DescriptionCipher for PlainText {
    fn seal(&self, text: &str) -> String {
        text.to_string()
    }

    fn open(&self, sealed: &str) -> Result<String> {
        Ok(sealed.to_string())
    }
}

pub(crate) fn format_complex_list(data: &[(f64, f64)]) -> String {
    let parts: Vec<String> = data.iter().map(|(a, b)| format!("{a},{b}")).collect();
    parts.join(";")
}

pub(crate) fn parse_complex_list(
    line: usize,
    tok: &Token<'_>,
    value: &str,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::new();
    for pair in value.split(';') {
        let (a, b) = pair.split_once(',').ok_or_else(|| {
            parse_error(
                line,
                tok.column,
                format!("expected re,im pair, found {pair:?}"),
            )
        })?;
        let a: f64 = a
            .parse()
            .map_err(|_| parse_error(line, tok.column, format!("bad number {a:?}")))?;
        let b: f64 = b
            .parse()
            .map_err(|_| parse_error(line, tok.column, format!("bad number {b:?}")))?;
        out.push((a, b));
    }
    Ok(out)
}

pub(crate) fn parse_gate_line(ln: usize, line: &str) -> Result<GateRecord> {
    let toks = tokenize(line);
    let mut fields = Fields::new(ln, &toks)?;
    let slot_tok = fields.take("t")?;
    let slot: u64 = parse_num(ln, &slot_tok.token, slot_tok.value)?;
    let tag_tok = fields.take("g")?;
    let q_tok = fields.take("q")?;
    let targets = parse_index_list(ln, &q_tok)?;
    let tag = if tag_tok.value == "custom" {
        let rows_tok = fields.take("rows")?;
        let rows: usize = parse_num(ln, &rows_tok.token, rows_tok.value)?;
        let data_tok = fields.take("data")?;
        let data = parse_complex_list(ln, &data_tok.token, data_tok.value)?;
        if data.len() != rows * rows {
            return Err(parse_error(
                ln,
                data_tok.token.column,
                format!(
                    "custom matrix needs {} entries, found {}",
                    rows * rows,
                    data.len()
                ),
            ));
        }
        GateTag::Custom(CustomGate { rows, data })
    } else {
        GateTag::parse(tag_tok.value).ok_or_else(|| {
            parse_error(
                ln,
                tag_tok.token.column,
                format!("unknown gate tag {:?}", tag_tok.value),
            )
        })?
    };
    fields.finish()?;
    Ok(GateRecord { slot, tag, targets })
}

pub(crate) fn parse_index_list(ln: usize, kv: &KeyValue<'_>) -> Result<Vec<usize>> {
    if kv.value.is_empty() {
        return Ok(Vec::new());
    }
    kv.value
        .split(',')
        .map(|s| {
            s.parse()
                .map_err(|_| parse_error(ln, kv.token.column, format!("bad index {s:?}")))
        })
        .collect()
}

pub(crate) fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Non-blank lines with 1-based line numbers; `\r\n` is normalised and
/// `#` starts a comment line.
pub(crate) fn logical_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n').enumerate().filter_map(|(i, l)| {
        let l = l.strip_suffix('\r').unwrap_or(l);
        let trimmed = l.trim();
        (!trimmed.is_empty() && !trimmed.starts_with('#')).then_some((i + 1, l))
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub text: &'a str,
    pub column: usize,
}

pub(crate) fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: line[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: line[..s].chars().count() + 1,
        });
    }
    out
}

fn expect_key<'a>(line: usize, tok: &Token<'a>, key: &str) -> Result<&'a str> {
    match tok.text.split_once('=') {
        Some((k, v)) if k == key => Ok(v),
        _ => Err(parse_error(
            line,
            tok.column,
            format!("expected {key}=, found {:?}", tok.text),
        )),
    }
}

pub(crate) fn parse_num<T: std::str::FromStr>(
    line: usize,
    tok: &Token<'_>,
    value: &str,
) -> Result<T> {
    value.parse().map_err(|_| {
        parse_error(
            line,
            tok.column,
            format!("bad number {value:?} in {:?}", tok.text),
        )
    })
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct KeyValue<'a> {
    pub token: Token<'a>,
    pub value: &'a str,
}

/// `key=value` tokens of one line, consumed in a fixed order.
pub(crate) struct Fields<'a> {
    line: usize,
    items: Vec<(&'a str, KeyValue<'a>)>,
    pos: usize,
    end_column: usize,
}

impl<'a> Fields<'a> {
    pub fn new(line: usize, toks: &[Token<'a>]) -> Result<Self> {
        let mut items = Vec::with_capacity(toks.len());
        for t in toks {
            let (k, v) = t.text.split_once('=').ok_or_else(|| {
                parse_error(
                    line,
                    t.column,
                    format!("expected key=value, found {:?}", t.text),
                )
            })?;
            items.push((
                k,
                KeyValue {
                    token: *t,
                    value: v,
                },
            ));
        }
        let end_column = toks.last().map_or(1, |t| t.column + t.text.chars().count());
        Ok(Self {
            line,
            items,
            pos: 0,
            end_column,
        })
    }

    pub fn take(&mut self, key: &str) -> Result<KeyValue<'a>> {
        match self.items.get(self.pos) {
            Some((k, kv)) if *k == key => {
                self.pos += 1;
                Ok(*kv)
            }
            Some((_, kv)) => Err(parse_error(
                self.line,
                kv.token.column,
                format!("expected {key}=, found {:?}", kv.token.text),
            )),
            None => Err(parse_error(
                self.line,
                self.end_column,
                format!("missing {key}="),
            )),
        }
    }

    pub fn peek_key(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|(k, _)| *k)
    }

    pub fn finish(&self) -> Result<()> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some((_, kv)) => Err(parse_error(
                self.line,
                kv.token.column,
                format!("unexpected token {:?}", kv.token.text),
            )),
        }
    }
}
