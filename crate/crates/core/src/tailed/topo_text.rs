//! `QVNT1` text form of topological diagrams.
//!
//! ```text
//! QVNT1 name=<text> [postselected=true|false]
//! vertex id=<i> n=<qubits> [local=<dim>]
//! t=<slot> g=<tag> q=<wires>        # gate lines of the vertex, as in QVN1
//! segment a=<v>.<h|t><e> b=<v>.<h|t><e>
//! open ends=<endpoint>,<endpoint>,...
//! ```
//! Vertex ids must be consecutive from 0; `local` defaults to 2.

use crate::error::Result;
use crate::memory::description::{
    logical_lines, parse_error, parse_gate_line, parse_num, tokenize, Fields,
};
use crate::memory::ProgramDescription;
use crate::scalar::Real;
use crate::tailed::circuit::Endpoint;
use crate::tailed::topo::{TopoDiagram, TopoEndpoint};

fn parse_endpoint(s: &str) -> Option<TopoEndpoint> {
    let (v, e) = s.split_once('.')?;
    let vertex = v.parse().ok()?;
    let (kind, idx) = e.split_at(1);
    let i = idx.parse().ok()?;
    let end = match kind {
        "h" => Endpoint::Head(i),
        "t" => Endpoint::Tail(i),
        _ => return None,
    };
    Some(TopoEndpoint { vertex, end })
}

struct PendingVertex {
    line: usize,
    qubits: usize,
    local: usize,
    gates: Vec<crate::memory::GateRecord>,
}

pub fn parse_diagram<R: Real>(text: &str) -> Result<TopoDiagram<R>> {
    let mut lines = logical_lines(text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_error(1, 1, "empty diagram"))?;
    let toks = tokenize(header);
    if toks.first().map(|t| t.text) != Some("QVNT1") {
        return Err(parse_error(
            hl,
            toks.first().map_or(1, |t| t.column),
            "expected QVNT1 header",
        ));
    }
    let mut f = Fields::new(hl, &toks[1..])?;
    let name = f.take("name")?.value.to_string();
    let postselected = if f.peek_key() == Some("postselected") {
        let kv = f.take("postselected")?;
        match kv.value {
            "true" => true,
            "false" => false,
            v => {
                return Err(parse_error(
                    hl,
                    kv.token.column,
                    format!("expected true or false, found {v:?}"),
                ))
            }
        }
    } else {
        true
    };
    f.finish()?;

    let mut diagram = TopoDiagram::new();
    diagram.set_postselected(postselected);
    let mut current: Option<PendingVertex> = None;
    let mut segments = Vec::new();
    let mut open = None;
    let flush = |diagram: &mut TopoDiagram<R>, v: Option<PendingVertex>| -> Result<()> {
        if let Some(v) = v {
            let id = diagram.vertices().len();
            let desc = ProgramDescription::new(format!("{name}.v{id}"), v.qubits, v.gates)
                .map_err(|e| parse_error(v.line, 1, format!("vertex {id}: {e}")))?;
            let gate = desc.unitary()?;
            diagram
                .vertex_with_dim(gate, v.local)
                .map_err(|e| parse_error(v.line, 1, format!("vertex {id}: {e}")))?;
        }
        Ok(())
    };
    for (ln, line) in lines {
        let toks = tokenize(line);
        match toks[0].text {
            "vertex" => {
                flush(&mut diagram, current.take())?;
                let mut f = Fields::new(ln, &toks[1..])?;
                let kv = f.take("id")?;
                let id: usize = parse_num(ln, &kv.token, kv.value)?;
                if id != diagram.vertices().len() {
                    return Err(parse_error(
                        ln,
                        kv.token.column,
                        format!("expected vertex id {}", diagram.vertices().len()),
                    ));
                }
                let kv = f.take("n")?;
                let qubits: usize = parse_num(ln, &kv.token, kv.value)?;
                let local = if f.peek_key() == Some("local") {
                    let kv = f.take("local")?;
                    parse_num(ln, &kv.token, kv.value)?
                } else {
                    2
                };
                f.finish()?;
                current = Some(PendingVertex {
                    line: ln,
                    qubits,
                    local,
                    gates: Vec::new(),
                });
            }
            "segment" => {
                flush(&mut diagram, current.take())?;
                let mut f = Fields::new(ln, &toks[1..])?;
                let mut ends = [None; 2];
                for (slot, key) in ends.iter_mut().zip(["a", "b"]) {
                    let kv = f.take(key)?;
                    *slot = Some(parse_endpoint(kv.value).ok_or_else(|| {
                        parse_error(
                            ln,
                            kv.token.column,
                            format!("segment {}: bad endpoint {:?}", segments.len(), kv.value),
                        )
                    })?);
                }
                f.finish()?;
                segments.push((ln, ends[0].unwrap(), ends[1].unwrap()));
            }
            "open" => {
                flush(&mut diagram, current.take())?;
                let mut f = Fields::new(ln, &toks[1..])?;
                let kv = f.take("ends")?;
                let eps = kv
                    .value
                    .split(',')
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        parse_endpoint(s).ok_or_else(|| {
                            parse_error(ln, kv.token.column, format!("bad open endpoint {s:?}"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                f.finish()?;
                open = Some(eps);
            }
            _ => match current.as_mut() {
                Some(v) => v.gates.push(parse_gate_line(ln, line)?),
                None => {
                    return Err(parse_error(
                        ln,
                        toks[0].column,
                        format!("unexpected {:?} outside a vertex", toks[0].text),
                    ))
                }
            },
        }
    }
    flush(&mut diagram, current.take())?;
    for (i, (ln, a, b)) in segments.into_iter().enumerate() {
        diagram.segment(a, b);
        // validate incrementally so the error names the offending segment
        if let Err(e) = diagram.validate_segments() {
            return Err(parse_error(ln, 1, format!("segment {i} ({a}, {b}): {e}")));
        }
    }
    if let Some(o) = open {
        diagram.set_open(o);
    }
    diagram
        .validate()
        .map_err(|e| parse_error(hl, 1, e.to_string()))?;
    Ok(diagram)
}
