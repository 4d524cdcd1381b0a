//! Text formats: sites files and diagram dumps.
//!
//! Sites file: a header line `d n`, then `n` lines of `d` coordinates and a weight.
//!
//! Dump:
//! ```text
//! AWVD v1 d=<d> frac_bits=<B> root=<o_1>,…,<o_d>,<side>
//! params eps=<eps> mode=<full|reduced>
//! sites <n>
//! <x_1> … <x_d> <w>        (n lines, rank order)
//! cells <m>
//! <level> <a_1> … <a_d> <label>   (m lines, pre-order)
//! ```
//! Floats are written with 17 significant digits, which round-trips exactly.

use std::fmt::Write as _;

use crate::cube::{CanonicalCube, CompressedQuadTree, GridConfig};
use crate::diagram::{Amwvd, CoverMode};
use crate::error::{Error, Result};
use crate::geom::{derive_params, SiteSet};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value {tok:?}")));
    }
    Ok(v)
}

fn parse_usize(tok: &str, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad {what} {tok:?}")))
}

/// Parses a sites file into `(d, [(coords, weight)])` in file order.
pub fn parse_sites(text: &str) -> Result<(usize, Vec<(Vec<f64>, f64)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(Error::Parse(format!("header must be `d n`, got {header:?}")));
    }
    let d = parse_usize(head[0], "dimension")?;
    let n = parse_usize(head[1], "site count")?;
    let mut points = Vec::with_capacity(n);
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: toks.len(),
            });
        }
        let vals = toks
            .iter()
            .map(|t| parse_f64(t, ln))
            .collect::<Result<Vec<_>>>()?;
        points.push((vals[..d].to_vec(), vals[d]));
    }
    if points.len() != n {
        return Err(Error::Parse(format!(
            "header announces {n} sites, found {}",
            points.len()
        )));
    }
    Ok((d, points))
}

pub fn read_sites(text: &str) -> Result<SiteSet> {
    let (d, points) = parse_sites(text)?;
    SiteSet::new(d, points)
}

pub fn write_sites(d: usize, points: &[(Vec<f64>, f64)]) -> String {
    let mut s = format!("{d} {}\n", points.len());
    for (c, w) in points {
        for x in c {
            s.push_str(&fmt_f64(*x));
            s.push(' ');
        }
        s.push_str(&fmt_f64(*w));
        s.push('\n');
    }
    s
}

/// Parses whitespace-separated points, one per line.
pub fn parse_points(text: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(k, l)| {
            let vals = l
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(t, k + 1))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: vals.len(),
                });
            }
            Ok(vals)
        })
        .collect()
}

pub fn dump(dgm: &Amwvd) -> String {
    let d = dgm.dim();
    let g = &dgm.grid;
    let mut s = String::new();
    let root: Vec<String> = g.origin.iter().map(|x| fmt_f64(*x)).collect();
    let _ = writeln!(
        s,
        "AWVD v1 d={d} frac_bits={} root={},{}",
        g.frac_bits,
        root.join(","),
        fmt_f64(g.side)
    );
    let _ = writeln!(s, "params eps={} mode={}", fmt_f64(dgm.params.eps), dgm.mode);
    let _ = writeln!(s, "sites {}", dgm.sites.len());
    for site in dgm.sites.iter() {
        for x in &site.coords {
            s.push_str(&fmt_f64(*x));
            s.push(' ');
        }
        s.push_str(&fmt_f64(site.weight));
        s.push('\n');
    }
    let nodes = dgm.tree.nodes();
    let _ = writeln!(s, "cells {}", nodes.len());
    for node in nodes {
        let _ = write!(s, "{}", node.cube.level);
        for a in node.cube.anchor() {
            let _ = write!(s, " {a}");
        }
        let _ = writeln!(s, " {}", node.label.unwrap_or(0));
    }
    s
}

fn field<'a>(tok: &'a str, key: &str) -> Result<&'a str> {
    tok.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected `{key}=…`, got {tok:?}")))
}

pub fn load(text: &str) -> Result<Amwvd> {
    let mut lines = text.lines();
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("unexpected end of dump, expected {what}")))
    };
    let header: Vec<&str> = next("header")?.split_whitespace().collect();
    if header.len() != 5 || header[0] != "AWVD" || header[1] != "v1" {
        return Err(Error::Parse("not an AWVD v1 dump".into()));
    }
    let d = parse_usize(field(header[2], "d")?, "dimension")?;
    let frac_bits = parse_usize(field(header[3], "frac_bits")?, "frac_bits")? as u32;
    let root = field(header[4], "root")?
        .split(',')
        .map(|t| parse_f64(t, 1))
        .collect::<Result<Vec<_>>>()?;
    if root.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            found: root.len(),
        });
    }
    let grid = GridConfig::new(d, frac_bits, root[..d].to_vec(), root[d])?;

    let params_line: Vec<&str> = next("params")?.split_whitespace().collect();
    if params_line.len() != 3 || params_line[0] != "params" {
        return Err(Error::Parse("malformed params line".into()));
    }
    let eps = parse_f64(field(params_line[1], "eps")?, 2)?;
    let mode: CoverMode = field(params_line[2], "mode")?.parse()?;
    let params = derive_params(eps)?;

    let count_line = |line: &str, key: &str| -> Result<usize> {
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(k), Some(v), None) if k == key => parse_usize(v, key),
            _ => Err(Error::Parse(format!("expected `{key} <count>`, got {line:?}"))),
        }
    };
    let n = count_line(next("sites")?, "sites")?;
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let vals = next("site")?
            .split_whitespace()
            .map(|t| parse_f64(t, k + 4))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: d + 1,
                found: vals.len(),
            });
        }
        points.push((vals[..d].to_vec(), vals[d]));
    }
    let sites = SiteSet::new(d, points)?;

    let m = count_line(next("cells")?, "cells")?;
    let mut entries = Vec::with_capacity(m);
    for _ in 0..m {
        let toks: Vec<&str> = next("cell")?.split_whitespace().collect();
        if toks.len() != d + 2 {
            return Err(Error::DimensionMismatch {
                expected: d + 2,
                found: toks.len(),
            });
        }
        let level = parse_usize(toks[0], "level")? as u32;
        let anchor = toks[1..=d]
            .iter()
            .map(|t| t.parse::<u64>().map_err(|_| Error::Parse(format!("bad anchor {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let label = parse_usize(toks[d + 1], "label")?;
        if label == 0 || label > n {
            return Err(Error::Parse(format!("label {label} outside [1, {n}]")));
        }
        if level > 63 || anchor.iter().any(|&a| level < 64 && a >> level != 0) {
            return Err(Error::CubeOutsideRoot);
        }
        entries.push((CanonicalCube::new(level, &anchor), Some(label as u32)));
    }
    let tree = CompressedQuadTree::from_preorder(d, frac_bits, entries)?;
    Ok(Amwvd {
        sites,
        params,
        grid,
        mode,
        tree,
        core_stats: Vec::new(),
        cover_summary: None,
        build_seconds: 0.0,
    })
}
