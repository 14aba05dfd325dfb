//! CSV dump and reload of states: columns `k1..kd, re, im`, with `ħ` and the
//! tail bound in comment lines.

use std::collections::BTreeMap;

use super::FockState;
use crate::csvout::{self, Table};
use crate::error::{Error, Result};
use crate::spectral::FockIndex;
use crate::C64;

impl FockState {
    pub fn to_csv(&self, comments: &[String]) -> Result<String> {
        let mut lines = comments.to_vec();
        lines.push(format!("hbar = {}", csvout::num(self.hbar)));
        lines.push(format!("tail = {}", csvout::num(self.tail)));
        let mut columns: Vec<String> = (1..=self.dim()).map(|j| format!("k{j}")).collect();
        columns.push("re".into());
        columns.push("im".into());
        let mut table = Table::new(&lines, &columns);
        for (k, c) in self.entries()? {
            let mut cells: Vec<String> = k.0.iter().map(|v| v.to_string()).collect();
            cells.push(csvout::num(c.re));
            cells.push(csvout::num(c.im));
            table.row(cells);
        }
        Ok(table.finish())
    }

    pub fn from_csv(text: &str) -> Result<FockState> {
        let mut hbar = None;
        let mut tail = 0.0;
        let mut dim = None;
        let mut map = BTreeMap::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once('=') {
                    let parse = |v: &str| -> Result<f64> {
                        v.trim()
                            .parse()
                            .map_err(|_| Error::parse(lineno, 1, format!("bad number '{}'", v.trim())))
                    };
                    match key.trim() {
                        "hbar" => hbar = Some(parse(value)?),
                        "tail" => tail = parse(value)?,
                        _ => {}
                    }
                }
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                header_seen = true;
                if cells.len() < 3 || cells[cells.len() - 2] != "re" || cells[cells.len() - 1] != "im" {
                    return Err(Error::parse(lineno, 1, "expected header k1..kd,re,im"));
                }
                dim = Some(cells.len() - 2);
                continue;
            }
            let d = dim.expect("header parsed");
            if cells.len() != d + 2 {
                return Err(Error::parse(lineno, 1, format!("expected {} cells", d + 2)));
            }
            let k = cells[..d]
                .iter()
                .map(|c| c.parse::<u32>().map_err(|_| Error::parse(lineno, 1, format!("bad index '{c}'"))))
                .collect::<Result<Vec<_>>>()?;
            let num = |c: &str| c.parse::<f64>().map_err(|_| Error::parse(lineno, 1, format!("bad number '{c}'")));
            map.insert(FockIndex(k), C64::new(num(cells[d])?, num(cells[d + 1])?));
        }
        let hbar = hbar.ok_or_else(|| Error::parse(1, 1, "missing '# hbar = ...' line"))?;
        let d = dim.ok_or_else(|| Error::parse(1, 1, "missing column header"))?;
        if map.is_empty() {
            return Err(Error::parse(1, 1, "state file has no coefficients"));
        }
        Ok(FockState::from_sparse(d, hbar, map, tail))
    }
}
