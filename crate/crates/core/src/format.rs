//! The `.mcp` instance file.
//!
//! ```text
//! MCP 1
//! model mnl                 | model nested <L>
//! mu <mu_1> ... <mu_L>      (nested only)
//! nest <l_1> ... <l_m>      (nested only; 1-based nest of each location)
//! m <m>
//! zones <|I|>
//! q <q_1> ... <q_|I|>
//! Y
//! <|I| lines of m attractions>
//! ```
//!
//! UTF-8 with LF line endings. Lines starting with `#` and blank lines are
//! ignored. Reals are written with 17 significant digits in scientific
//! notation, which reads back to the identical `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::choice::{AttractionVector, ChoiceModelSpec, NestedLogit};
use crate::error::{Error, Result};
use crate::objective::{Instance, Zone};

pub const FORMAT_VERSION: u32 = 1;

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn join_reals<'a>(vals: impl IntoIterator<Item = &'a f64>) -> String {
    vals.into_iter().map(|&v| real(v)).collect::<Vec<_>>().join(" ")
}

pub fn to_string(inst: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "MCP {FORMAT_VERSION}").unwrap();
    match inst.spec() {
        ChoiceModelSpec::Mnl => writeln!(out, "model mnl").unwrap(),
        ChoiceModelSpec::Nested(nl) => {
            writeln!(out, "model nested {}", nl.nest_count()).unwrap();
            writeln!(out, "mu {}", join_reals(nl.mu())).unwrap();
            let nests: Vec<String> = nl.nest_of().iter().map(|l| (l + 1).to_string()).collect();
            writeln!(out, "nest {}", nests.join(" ")).unwrap();
        }
    }
    writeln!(out, "m {}", inst.locations()).unwrap();
    writeln!(out, "zones {}", inst.zones().len()).unwrap();
    writeln!(out, "q {}", join_reals(inst.zones().iter().map(|z| &z.q))).unwrap();
    writeln!(out, "Y").unwrap();
    for z in inst.zones() {
        writeln!(out, "{}", join_reals(z.y.iter())).unwrap();
    }
    out
}

pub fn write_instance(inst: &Instance, path: &Path) -> Result<()> {
    fs::write(path, to_string(inst)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next meaningful line with its 1-based number, or a parse error naming
    /// the section that was expected.
    fn expect(&mut self, section: &str) -> Result<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            self.last = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line));
        }
        Err(Error::Parse {
            line: self.last + 1,
            message: format!("unexpected end of file: missing section '{section}'"),
        })
    }

    fn rest(&mut self) -> Option<(usize, &'a str)> {
        self.expect("").ok()
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits `key v1 v2 ...`, checking the key.
fn keyed<'a>(line_no: usize, line: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(k) if k == key => Ok(parts.collect()),
        other => Err(err(
            line_no,
            format!("expected section '{key}', found '{}'", other.unwrap_or("")),
        )),
    }
}

fn one_count(line_no: usize, line: &str, key: &str) -> Result<usize> {
    let vals = keyed(line_no, line, key)?;
    match vals.as_slice() {
        [v] => v
            .parse()
            .map_err(|_| err(line_no, format!("'{key}' needs a non-negative integer, found '{v}'"))),
        _ => Err(err(line_no, format!("'{key}' takes exactly one value"))),
    }
}

fn reals(line_no: usize, vals: &[&str], expected: usize, what: &str) -> Result<Vec<f64>> {
    if vals.len() != expected {
        return Err(err(
            line_no,
            format!("{what}: expected {expected} values, found {}", vals.len()),
        ));
    }
    vals.iter()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| err(line_no, format!("{what}: '{v}' is not a number")))
        })
        .collect()
}

pub fn parse(text: &str) -> Result<Instance> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };

    let (n, header) = lines.expect("MCP")?;
    let version = keyed(n, header, "MCP")?;
    match version.as_slice() {
        [v] if *v == FORMAT_VERSION.to_string() => {}
        [v] => {
            return Err(Error::Version {
                found: v.to_string(),
                expected: FORMAT_VERSION,
            })
        }
        _ => return Err(err(n, "header must be 'MCP <version>'")),
    }

    let (n, model_line) = lines.expect("model")?;
    let model = keyed(n, model_line, "model")?;
    let nested = match model.as_slice() {
        ["mnl"] => None,
        ["nested", l] => {
            let nests: usize = l
                .parse()
                .map_err(|_| err(n, format!("nest count '{l}' is not an integer")))?;
            let (n, mu_line) = lines.expect("mu")?;
            let mu = reals(n, &keyed(n, mu_line, "mu")?, nests, "mu")?;
            let (n, nest_line) = lines.expect("nest")?;
            let nest_of = keyed(n, nest_line, "nest")?
                .iter()
                .map(|v| match v.parse::<usize>() {
                    Ok(l) if l >= 1 => Ok(l - 1),
                    _ => Err(err(n, format!("nest index '{v}' must be a positive integer"))),
                })
                .collect::<Result<Vec<_>>>()?;
            Some((n, nest_of, mu))
        }
        ["nested"] => return Err(err(n, "'model nested' needs a nest count")),
        [tag, ..] => return Err(Error::UnsupportedModel(tag.to_string())),
        [] => return Err(err(n, "missing model tag")),
    };

    let (n, m_line) = lines.expect("m")?;
    let m = one_count(n, m_line, "m")?;
    let spec = match nested {
        None => ChoiceModelSpec::Mnl,
        Some((line, nest_of, mu)) => {
            if nest_of.len() != m {
                return Err(err(
                    line,
                    format!("nest: expected {m} values, found {}", nest_of.len()),
                ));
            }
            ChoiceModelSpec::Nested(
                NestedLogit::new(nest_of, mu).map_err(|e| err(line, e.to_string()))?,
            )
        }
    };

    let (n, zones_line) = lines.expect("zones")?;
    let count = one_count(n, zones_line, "zones")?;
    let (n, q_line) = lines.expect("q")?;
    let q = reals(n, &keyed(n, q_line, "q")?, count, "q")?;
    let (n, y_line) = lines.expect("Y")?;
    if y_line != "Y" {
        return Err(err(n, format!("expected section 'Y', found '{y_line}'")));
    }

    let mut zones = Vec::with_capacity(count);
    for (i, &qi) in q.iter().enumerate() {
        let (n, row) = lines.expect("Y")?;
        let vals: Vec<&str> = row.split_whitespace().collect();
        let y = reals(n, &vals, m, &format!("Y row {}", i + 1))?;
        let y = AttractionVector::new(y).map_err(|e| err(n, e.to_string()))?;
        zones.push(Zone::new(qi, y).map_err(|e| err(n, e.to_string()))?);
    }
    if let Some((n, _)) = lines.rest() {
        return Err(err(n, "unexpected content after the last Y row"));
    }
    Instance::new(m, zones, spec).map_err(|e| err(lines.last, e.to_string()))
}
