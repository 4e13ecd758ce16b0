//! Plain-text MATPOWER case subset: bus count from `mpc.bus`, edges from the
//! in-service rows of `mpc.branch` with `b = 1/x`. Everything else in the
//! case file is tolerated and ignored.

use std::collections::HashMap;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::netmodel::types::{IoMap, NetworkModel};
use crate::scalar::{lit, Real};

#[derive(Debug, Clone)]
pub struct BusOverride<T> {
    pub inertia: Option<T>,
    pub damping: Option<T>,
}

/// Swing coefficients MATPOWER cases do not carry, plus I/O selection.
/// Overrides are keyed by the original bus id from the case file.
#[derive(Debug, Clone)]
pub struct MatpowerDefaults<T: Real> {
    pub inertia: T,
    pub damping: T,
    pub overrides: HashMap<usize, BusOverride<T>>,
    /// `None` selects the identity map.
    pub input_nodes: Option<Vec<usize>>,
    pub output_nodes: Option<Vec<usize>>,
}

impl<T: Real> Default for MatpowerDefaults<T> {
    fn default() -> Self {
        Self {
            inertia: T::one(),
            damping: T::one(),
            overrides: HashMap::new(),
            input_nodes: None,
            output_nodes: None,
        }
    }
}

struct NumericTable {
    rows: Vec<(usize, Vec<f64>)>, // (line number, values)
}

/// Parse the bus/branch tables of a MATPOWER case into a network model.
pub fn parse_matpower_case<T: Real>(
    text: &str,
    defaults: &MatpowerDefaults<T>,
) -> Result<NetworkModel<T>> {
    let tables = scan_tables(text)?;
    let bus = tables
        .get("bus")
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: "no mpc.bus table found".into(),
        })?;
    let branch = tables.get("branch").ok_or_else(|| Error::Parse {
        line: 0,
        msg: "no mpc.branch table found".into(),
    })?;

    // Bus ids may be arbitrary; map them to 0-based indices in table order.
    let mut index_of: HashMap<usize, usize> = HashMap::new();
    for (line, row) in &bus.rows {
        let id = row.first().copied().ok_or_else(|| Error::Parse {
            line: *line,
            msg: "empty bus row".into(),
        })?;
        if id <= 0.0 || id.fract() != 0.0 {
            return Err(Error::Parse {
                line: *line,
                msg: format!("bus id {id} is not a positive integer"),
            });
        }
        let id = id as usize;
        if index_of.insert(id, index_of.len()).is_some() {
            return Err(Error::Parse {
                line: *line,
                msg: format!("duplicate bus id {id}"),
            });
        }
    }
    let n = index_of.len();

    // Merge parallel branches by summing susceptances.
    let mut merged: HashMap<(usize, usize), T> = HashMap::new();
    for (line, row) in &branch.rows {
        if row.len() < 4 {
            return Err(Error::Parse {
                line: *line,
                msg: format!("branch row has {} columns, need at least 4 (fbus tbus r x)", row.len()),
            });
        }
        let status = row.get(10).copied().unwrap_or(1.0);
        if status == 0.0 {
            continue;
        }
        let from = lookup_bus(&index_of, row[0], *line)?;
        let to = lookup_bus(&index_of, row[1], *line)?;
        let x = row[3];
        if x <= 0.0 {
            log::warn!("line {line}: branch ({}, {}) has reactance x = {x} <= 0; skipped", row[0], row[1]);
            continue;
        }
        if from == to {
            log::warn!("line {line}: branch ({}, {}) is a self-loop; skipped", row[0], row[1]);
            continue;
        }
        let key = (from.min(to), from.max(to));
        let b = lit::<T>(1.0 / x);
        merged
            .entry(key)
            .and_modify(|acc| *acc = *acc + b)
            .or_insert(b);
    }
    let mut edges: Vec<(usize, usize, T)> = merged
        .into_iter()
        .map(|((i, j), b)| (i, j, b))
        .collect();
    edges.sort_by_key(|&(i, j, _)| (i, j));

    let mut inertia = Array1::from_elem(n, defaults.inertia);
    let mut damping = Array1::from_elem(n, defaults.damping);
    for (&bus_id, ov) in &defaults.overrides {
        if let Some(&idx) = index_of.get(&bus_id) {
            if let Some(m) = ov.inertia {
                inertia[idx] = m;
            }
            if let Some(d) = ov.damping {
                damping[idx] = d;
            }
        } else {
            log::warn!("override for unknown bus id {bus_id} ignored");
        }
    }

    let input = match &defaults.input_nodes {
        Some(sel) => IoMap::selector(sel.clone()),
        None => IoMap::identity(n),
    };
    let output = match &defaults.output_nodes {
        Some(sel) => IoMap::selector(sel.clone()),
        None => IoMap::identity(n),
    };

    NetworkModel::new(n, edges, inertia, damping, input, output)
}

fn lookup_bus(index_of: &HashMap<usize, usize>, raw: f64, line: usize) -> Result<usize> {
    if raw <= 0.0 || raw.fract() != 0.0 {
        return Err(Error::Parse {
            line,
            msg: format!("branch references malformed bus id {raw}"),
        });
    }
    index_of.get(&(raw as usize)).copied().ok_or_else(|| Error::Parse {
        line,
        msg: format!("branch references unknown bus id {raw}"),
    })
}

/// Pull out every `mpc.<name> = [ ... ];` matrix literal.
fn scan_tables(text: &str) -> Result<HashMap<String, NumericTable>> {
    let mut tables = HashMap::new();
    let mut current: Option<(String, NumericTable)> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let code = match raw.find('%') {
            Some(idx) => &raw[..idx],
            None => raw,
        };
        let code = code.trim();
        if code.is_empty() {
            continue;
        }
        if let Some((name, mut table)) = current.take() {
            // inside a matrix literal; rows end at `];`
            let (body, done) = match code.find(']') {
                Some(idx) => (&code[..idx], true),
                None => (code, false),
            };
            parse_rows(body, line, &mut table.rows)?;
            if done {
                tables.insert(name, table);
            } else {
                current = Some((name, table));
            }
            continue;
        }
        if let Some(rest) = code.strip_prefix("mpc.") {
            let Some(eq) = rest.find('=') else {
                continue;
            };
            let name = rest[..eq].trim().to_string();
            let after = rest[eq + 1..].trim_start();
            if let Some(body_start) = after.strip_prefix('[') {
                let (body, done) = match body_start.find(']') {
                    Some(idx) => (&body_start[..idx], true),
                    None => (body_start, false),
                };
                let mut table = NumericTable { rows: Vec::new() };
                parse_rows(body, line, &mut table.rows)?;
                if done {
                    tables.insert(name, table);
                } else {
                    current = Some((name, table));
                }
            } else {
                // scalar or string assignment (version, baseMVA, ...): ignore
                if !matches!(name.as_str(), "version" | "baseMVA") {
                    log::warn!("line {line}: ignoring mpc.{name}");
                }
            }
        } else if code.starts_with("function") || code.ends_with(';') && code.contains('=') {
            // function header or non-mpc assignments: ignore
        }
    }
    if let Some((name, _)) = current {
        return Err(Error::Parse {
            line: text.lines().count(),
            msg: format!("unterminated matrix literal mpc.{name}"),
        });
    }
    Ok(tables)
}

fn parse_rows(body: &str, line: usize, rows: &mut Vec<(usize, Vec<f64>)>) -> Result<()> {
    for chunk in body.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let mut vals = Vec::new();
        for tok in chunk.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("malformed numeric entry '{tok}'"),
            })?;
            vals.push(v);
        }
        rows.push((line, vals));
    }
    Ok(())
}

/// Write the subset case format this parser consumes. Branch reactance is the
/// reciprocal susceptance; rows carry explicit status 1.
pub fn to_matpower_case<T: Real>(model: &NetworkModel<T>) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = exported");
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = 100;");
    let _ = writeln!(s, "mpc.bus = [");
    for i in 0..model.node_count() {
        let _ = writeln!(s, "\t{}\t1\t0\t0\t0\t0\t1\t1\t0\t345\t1\t1.1\t0.9;", i + 1);
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "mpc.branch = [");
    for &(i, j, b) in model.edges() {
        let x = T::one() / b;
        let _ = writeln!(
            s,
            "\t{}\t{}\t0\t{x}\t0\t0\t0\t0\t0\t0\t1\t-360\t360;",
            i + 1,
            j + 1
        );
    }
    let _ = writeln!(s, "];");
    s
}
