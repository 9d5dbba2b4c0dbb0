//! Plain-text exports (CSV tables and key=value reports) and their readers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::dynamics::Trajectory;
use crate::error::{Error, ParseErrorKind, Result};

/// Significant digits in every numeric export.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with 12 significant digits, like C's `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub const TRAJECTORY_HEADER: &str = "t,phi,nxe,Bx,By,Bz,bhat_z,n_x,n_y,n_z,re0,im0,re1,im1";

/// Writes a trajectory as CSV. Fields are in μeV; amplitude columns are
/// empty for Bloch-only runs.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for k in 0..traj.len() {
        let cp = traj.controls[k];
        let b = traj.field_uev(k);
        let bhat_z = match b.magnitude() {
            m if m > 0.0 => b.bz / m,
            _ => f64::NAN,
        };
        let n = traj.bloch[k];
        let cells = [
            traj.times[k],
            cp.flux,
            cp.gate_charge,
            b.bx,
            b.by,
            b.bz,
            bhat_z,
            n.nx,
            n.ny,
            n.nz,
        ];
        let mut row: Vec<String> = cells.iter().map(|&v| fmt_sig(v)).collect();
        match &traj.states {
            Some(states) => {
                let s = states[k];
                row.extend([s.amp0.re, s.amp0.im, s.amp1.re, s.amp1.im].iter().map(|&v| fmt_sig(v)));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Reads a numeric CSV with the given header. Empty cells become NaN.
pub fn parse_csv(text: &str, header: &str) -> Result<Vec<Vec<f64>>> {
    let columns = header.split(',').count();
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let header_ok = lines
        .next()
        .map(|(_, l)| l.split(',').map(str::trim).eq(header.split(',')))
        .unwrap_or(false);
    if !header_ok {
        return Err(Error::Parse {
            line: 1,
            kind: ParseErrorKind::Header {
                expected: header.into(),
            },
        });
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let cells: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if cells.len() != columns {
            return Err(Error::Parse {
                line: idx + 1,
                kind: ParseErrorKind::ColumnCount {
                    expected: columns,
                    found: cells.len(),
                },
            });
        }
        let row = cells
            .iter()
            .map(|c| {
                let c = c.trim();
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>().map_err(|_| Error::Parse {
                        line: idx + 1,
                        kind: ParseErrorKind::NonNumeric { cell: c.into() },
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Ordered key=value report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn number(mut self, key: &str, value: f64) -> Self {
        self.entries.push((key.into(), fmt_sig(value)));
        self
    }

    pub fn text(mut self, key: &str, value: impl ToString) -> Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Parsed key=value report.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    values: BTreeMap<String, (usize, String)>,
}

impl ParsedReport {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse {
                line: idx + 1,
                kind: ParseErrorKind::MalformedLine,
            })?;
            values.insert(k.trim().to_string(), (idx + 1, v.trim().to_string()));
        }
        Ok(Self { values })
    }

    /// Reads `# key=value` lines, the form used when a report annotates a
    /// numeric table. Other lines are ignored.
    pub fn parse_comments(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .filter_map(|l| l.trim().strip_prefix('#'))
            .filter(|l| l.contains('='))
            .map(|l| format!("{}\n", l.trim()))
            .collect();
        Self::parse(&body)
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                line: 0,
                kind: ParseErrorKind::MissingKey { key: key.into() },
            })
    }

    pub fn number(&self, key: &str) -> Result<f64> {
        let (line, v) = self.values.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            kind: ParseErrorKind::MissingKey { key: key.into() },
        })?;
        v.parse().map_err(|_| Error::Parse {
            line: *line,
            kind: ParseErrorKind::NonNumeric { cell: v.clone() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-2.5), "-2.5");
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(1234567.0), "1234567");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(6.02e23), "6.02e23");
        assert_eq!(fmt_sig(0.000123456789012345), "0.000123456789012");
    }

    proptest! {
        #[test]
        fn sig_round_trip(x in -1e30f64..1e30) {
            let y: f64 = fmt_sig(x).parse().unwrap();
            prop_assert!((x - y).abs() <= 5e-12 * x.abs());
        }
    }

    #[test]
    fn report_round_trip() {
        let r = Report::new().number("total", -1.25).text("method", "line-integral");
        let text = r.render();
        assert_eq!(text, "total=-1.25\nmethod=line-integral\n");
        let p = ParsedReport::parse(&text).unwrap();
        assert_eq!(p.number("total").unwrap(), -1.25);
        assert_eq!(p.text("method").unwrap(), "line-integral");
        assert!(matches!(p.number("method"), Err(Error::Parse { line: 2, .. })));
        assert!(p.number("dynamic").is_err());
        assert!(ParsedReport::parse("no equals sign").is_err());
    }

    #[test]
    fn commented_report_beside_table() {
        let text = "1 0 0 0\n0 0 1 0\n# gate=identity\n# defect=0\n# a note\n";
        let p = ParsedReport::parse_comments(text).unwrap();
        assert_eq!(p.text("gate").unwrap(), "identity");
        assert_eq!(p.number("defect").unwrap(), 0.0);
    }

    #[test]
    fn csv_errors() {
        assert!(parse_csv("a,b\n1,2\n", "a,c").is_err());
        let e = parse_csv("a,b\n1,2\n3\n", "a,b").unwrap_err();
        assert!(matches!(
            e,
            Error::Parse {
                line: 3,
                kind: ParseErrorKind::ColumnCount { .. }
            }
        ));
        let rows = parse_csv("a,b\n1,\n", "a,b").unwrap();
        assert!(rows[0][1].is_nan());
    }
}
