//! MRMC `.tra` / `.lab` export and import, and steady-state vector files.
//!
//! Grammar (MRMC 1.5, DTMC mode):
//!
//! ```text
//! STATES <n>
//! TRANSITIONS <m>
//! <from> <to> <prob>        one line per nonzero, 1-indexed, ascending
//! ```
//!
//! ```text
//! #DECLARATION
//! <label> <label> ...
//! #END
//! <state> <label> ...       only states with at least one label
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use spinmc_core::explore::INIT_LABEL;
use spinmc_core::SparseDtmc;

use crate::{io_err, Error, Result};

/// Shortest decimal that parses back to the same `f64`, never in exponent
/// form and always with a fractional part.
pub fn fmt_prob(p: f64) -> String {
    let s = format!("{p}");
    if s.contains('.') {
        s
    } else {
        s + ".0"
    }
}

pub fn write_tra<W: Write>(d: &SparseDtmc<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "STATES {}", d.num_states)?;
    writeln!(w, "TRANSITIONS {}", d.num_transitions())?;
    for i in 0..d.num_states {
        let (cols, vals) = d.row(i);
        for (&c, &p) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {}", i + 1, c + 1, fmt_prob(p))?;
        }
    }
    w.flush()
}

pub fn write_lab<W: Write>(d: &SparseDtmc<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "#DECLARATION")?;
    let names: Vec<&str> = d.labels.iter().map(|(n, _)| n.as_str()).collect();
    writeln!(w, "{}", names.join(" "))?;
    writeln!(w, "#END")?;
    // Merge the per-label sorted lists into per-state lines.
    let mut cursor = vec![0usize; d.labels.len()];
    let mut line = String::new();
    for s in 0..d.num_states as u32 {
        line.clear();
        for (k, (name, states)) in d.labels.iter().enumerate() {
            if states.get(cursor[k]) == Some(&s) {
                cursor[k] += 1;
                line.push(' ');
                line.push_str(name);
            }
        }
        if !line.is_empty() {
            writeln!(w, "{}{line}", s + 1)?;
        }
    }
    w.flush()
}

/// Writes `<base>.tra` and `<base>.lab`.
pub fn export_mrmc(d: &SparseDtmc<f64>, base: &Path) -> Result<(PathBuf, PathBuf)> {
    let tra = base.with_extension("tra");
    let lab = base.with_extension("lab");
    let f = fs::File::create(&tra).map_err(io_err(&tra))?;
    write_tra(d, BufWriter::new(f)).map_err(io_err(&tra))?;
    let f = fs::File::create(&lab).map_err(io_err(&lab))?;
    write_lab(d, BufWriter::new(f)).map_err(io_err(&lab))?;
    Ok((tra, lab))
}

struct Lines<'a> {
    path: &'a Path,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Lines { path, inner: text.lines().enumerate() }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { path: self.path.to_path_buf(), line, msg: msg.into() }
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        self.inner.by_ref().map(|(i, l)| (i + 1, l.trim())).find(|(_, l)| !l.is_empty())
    }

    fn header(&mut self, key: &str) -> Result<usize> {
        let (no, l) = self.next_line().ok_or_else(|| self.err(0, format!("missing {key} header")))?;
        let value = l
            .strip_prefix(key)
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| self.err(no, format!("expected `{key} <count>`")))?;
        Ok(value)
    }
}

fn parse_index(s: Option<&str>, n: usize) -> Option<u32> {
    let i: usize = s?.parse().ok()?;
    (1..=n).contains(&i).then(|| (i - 1) as u32)
}

/// Parses a `.tra` document into a matrix with no labels and the first
/// state as initial state.
pub fn parse_tra(text: &str, path: &Path) -> Result<SparseDtmc<f64>> {
    let mut lines = Lines::new(path, text);
    let n = lines.header("STATES")?;
    let m = lines.header("TRANSITIONS")?;
    let mut row_offsets = vec![0usize];
    let mut col_indices = Vec::with_capacity(m);
    let mut values = Vec::with_capacity(m);
    let mut last: Option<(u32, u32)> = None;
    while let Some((no, l)) = lines.next_line() {
        let mut it = l.split_whitespace();
        let from = parse_index(it.next(), n).ok_or_else(|| lines.err(no, "bad source state"))?;
        let to = parse_index(it.next(), n).ok_or_else(|| lines.err(no, "bad target state"))?;
        let p: f64 = it.next().and_then(|p| p.parse().ok()).ok_or_else(|| lines.err(no, "bad probability"))?;
        if it.next().is_some() {
            return Err(lines.err(no, "trailing fields"));
        }
        if last.is_some_and(|l| l >= (from, to)) {
            return Err(lines.err(no, "transitions not in ascending (from, to) order"));
        }
        last = Some((from, to));
        while row_offsets.len() <= from as usize {
            row_offsets.push(col_indices.len());
        }
        col_indices.push(to);
        values.push(p);
    }
    if col_indices.len() != m {
        return Err(lines.err(0, format!("header announces {m} transitions, found {}", col_indices.len())));
    }
    while row_offsets.len() <= n {
        row_offsets.push(col_indices.len());
    }
    Ok(SparseDtmc {
        num_states: n,
        row_offsets,
        col_indices,
        values,
        initial: if n > 0 { vec![(0, 1.0)] } else { Vec::new() },
        labels: Vec::new(),
        states: None,
    })
}

pub fn parse_lab(text: &str, num_states: usize, path: &Path) -> Result<Vec<(String, Vec<u32>)>> {
    let mut lines = Lines::new(path, text);
    match lines.next_line() {
        Some((_, "#DECLARATION")) => {}
        Some((no, _)) => return Err(lines.err(no, "expected #DECLARATION")),
        None => return Err(lines.err(0, "empty label file")),
    }
    let mut labels: Vec<(String, Vec<u32>)> = Vec::new();
    loop {
        let (no, l) = lines.next_line().ok_or_else(|| lines.err(0, "missing #END"))?;
        if l == "#END" {
            break;
        }
        for name in l.split_whitespace() {
            if labels.iter().any(|(n, _)| n == name) {
                return Err(lines.err(no, format!("label `{name}` declared twice")));
            }
            labels.push((name.to_string(), Vec::new()));
        }
    }
    let mut last = None;
    while let Some((no, l)) = lines.next_line() {
        let mut it = l.split_whitespace();
        let s = parse_index(it.next(), num_states).ok_or_else(|| lines.err(no, "bad state index"))?;
        if last.is_some_and(|p| p >= s) {
            return Err(lines.err(no, "states not in ascending order"));
        }
        last = Some(s);
        for name in it {
            let slot = labels.iter_mut().find(|(n, _)| n == name).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: no,
                msg: format!("undeclared label `{name}`"),
            })?;
            slot.1.push(s);
        }
    }
    Ok(labels)
}

/// Reads `<base>.tra` and `<base>.lab`. The initial distribution is uniform
/// over the `init` label, or the first state when that label is absent.
pub fn import_mrmc(base: &Path) -> Result<SparseDtmc<f64>> {
    let tra = base.with_extension("tra");
    let lab = base.with_extension("lab");
    let mut d = parse_tra(&fs::read_to_string(&tra).map_err(io_err(&tra))?, &tra)?;
    d.labels = parse_lab(&fs::read_to_string(&lab).map_err(io_err(&lab))?, d.num_states, &lab)?;
    if let Some((_, init)) = d.labels.iter().find(|(n, _)| n == INIT_LABEL) {
        if !init.is_empty() {
            let p = 1.0 / init.len() as f64;
            d.initial = init.iter().map(|&s| (s, p)).collect();
        }
    }
    Ok(d)
}

/// Writes `<state> <prob>` lines for the nonzero entries, 1-indexed.
pub fn write_steady<W: Write>(pi: &[f64], mut w: W) -> std::io::Result<()> {
    for (i, &p) in pi.iter().enumerate() {
        if p != 0.0 {
            writeln!(w, "{} {}", i + 1, fmt_prob(p))?;
        }
    }
    w.flush()
}

pub fn parse_steady(text: &str, num_states: usize, path: &Path) -> Result<Vec<f64>> {
    let mut lines = Lines::new(path, text);
    let mut pi = vec![0.0; num_states];
    while let Some((no, l)) = lines.next_line() {
        let mut it = l.split_whitespace();
        let s = parse_index(it.next(), num_states).ok_or_else(|| lines.err(no, "bad or out-of-range state index"))?;
        let p: f64 = it
            .next()
            .and_then(|p| p.parse().ok())
            .filter(|p: &f64| p.is_finite() && *p >= 0.0)
            .ok_or_else(|| lines.err(no, "bad probability"))?;
        if it.next().is_some() {
            return Err(lines.err(no, "trailing fields"));
        }
        pi[s as usize] = p;
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(lines.err(0, format!("probabilities sum to {total}")));
    }
    Ok(pi)
}

pub fn import_steady(path: &Path, num_states: usize) -> Result<Vec<f64>> {
    parse_steady(&fs::read_to_string(path).map_err(io_err(path))?, num_states, path)
}
