//! Plain-text model files.
//!
//! ```text
//! # symsample model v1
//! n1 = 30
//! n2 = 32
//! beta = 8.0000000000000004e-1
//! nodes = 960
//! # index field neighbor:weight ...
//! 0 -9.3333333333333335e-1 1:1.0000000000000000e0 30:1.0000000000000000e0
//! ```
//!
//! Header keys may appear in any order before the node lines; `n1`/`n2` are
//! optional for non-lattice models. Floats use 17 significant digits so a
//! round trip is exact.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::QuadraticModel;
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "# symsample model v1";

pub fn write_model<W: Write>(model: &QuadraticModel, mut out: W) -> Result<()> {
    writeln!(out, "{MODEL_MAGIC}")?;
    if let Some((n1, n2)) = model.shape() {
        writeln!(out, "n1 = {n1}")?;
        writeln!(out, "n2 = {n2}")?;
    }
    writeln!(out, "beta = {:.16e}", model.beta())?;
    writeln!(out, "nodes = {}", model.len())?;
    writeln!(out, "# index field neighbor:weight ...")?;
    for (i, h) in model.field().iter().enumerate() {
        write!(out, "{i} {h:.16e}")?;
        for c in model.couplings(i) {
            write!(out, " {}:{:.16e}", c.neighbor, c.weight)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(input: R) -> Result<QuadraticModel> {
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut rows: Vec<BTreeMap<usize, f64>> = Vec::new();
    let mut field: Vec<f64> = Vec::new();
    let mut nodes: Option<usize> = None;
    let mut in_body = false;

    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            if in_body {
                return Err(Error::parse(lineno, "header key after node lines"));
            }
            let key = key.trim().to_string();
            match key.as_str() {
                "n1" | "n2" | "beta" | "nodes" => {}
                other => {
                    return Err(Error::parse(
                        lineno,
                        format!("unknown header key `{other}`"),
                    ))
                }
            }
            if key == "nodes" {
                let n: usize = parse_num(lineno, value.trim())?;
                nodes = Some(n);
                rows = vec![BTreeMap::new(); n];
                field = vec![f64::NAN; n];
            }
            header.insert(key, value.trim().to_string());
            continue;
        }
        let n = nodes.ok_or_else(|| Error::parse(lineno, "node line before `nodes` header"))?;
        in_body = true;
        let mut tokens = line.split_whitespace();
        let index: usize = parse_num(lineno, tokens.next().unwrap_or_default())?;
        if index >= n {
            return Err(Error::parse(
                lineno,
                format!("node index {index} out of range"),
            ));
        }
        if !field[index].is_nan() {
            return Err(Error::parse(lineno, format!("duplicate node {index}")));
        }
        let h_token = tokens
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing field value"))?;
        field[index] = parse_num(lineno, h_token)?;
        for tok in tokens {
            let (j, w) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(lineno, format!("bad coupling token `{tok}`")))?;
            let j: usize = parse_num(lineno, j)?;
            let w: f64 = parse_num(lineno, w)?;
            if j >= n {
                return Err(Error::parse(lineno, format!("neighbor {j} out of range")));
            }
            rows[index].insert(j, w);
        }
    }

    let n = nodes.ok_or_else(|| Error::parse(0, "missing `nodes` header"))?;
    if let Some(i) = field.iter().position(|h| h.is_nan()) {
        return Err(Error::parse(0, format!("missing line for node {i}")));
    }
    let beta: f64 = header
        .get("beta")
        .ok_or_else(|| Error::parse(0, "missing `beta` header"))
        .and_then(|v| parse_num(0, v))?;
    let model = QuadraticModel::from_rows(rows, field, beta)?;
    match (header.get("n1"), header.get("n2")) {
        (Some(a), Some(b)) => {
            let n1: usize = parse_num(0, a)?;
            let n2: usize = parse_num(0, b)?;
            if n1 * n2 != n {
                return Err(Error::parse(
                    0,
                    format!("n1*n2 = {} but nodes = {n}", n1 * n2),
                ));
            }
            Ok(model.with_shape(n1, n2))
        }
        (None, None) => Ok(model),
        _ => Err(Error::parse(0, "n1 and n2 must be given together")),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, token: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| Error::parse(line, format!("cannot parse `{token}`")))
}
