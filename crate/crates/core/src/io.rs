//! Line-based text formats for plans, message lists, and point sets.
//!
//! Every file opens with a magic line naming the format and version. Numbers
//! are written with Rust's shortest round-trip `f64` formatting, so write
//! followed by read reproduces values bit for bit. Parse errors carry
//! one-based line numbers.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;
use thiserror::Error;

use crate::stego::{PayloadMessage, StegoError, StegoPlan};

pub const PLAN_MAGIC: &str = "polystego-plan v1";
pub const MESSAGES_MAGIC: &str = "polystego-messages v1";
pub const POINTS_MAGIC: &str = "polystego-points v1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported version: expected `{expected}`, found `{found}`")]
    VersionMismatch {
        expected: &'static str,
        found: String,
    },
    #[error(transparent)]
    Invalid(#[from] StegoError),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Line-by-line cursor with one-based positions.
struct Lines<'a> {
    iter: std::str::Lines<'a>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            iter: text.lines(),
            pos: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str, IoError> {
        self.pos += 1;
        self.iter
            .next()
            .ok_or_else(|| parse_err(self.pos, format!("unexpected end of file, expected {what}")))
    }

    fn expect_done(&mut self) -> Result<(), IoError> {
        loop {
            match self.iter.next() {
                None => return Ok(()),
                Some(l) => {
                    self.pos += 1;
                    if !l.trim().is_empty() {
                        return Err(parse_err(self.pos, "trailing data after document"));
                    }
                }
            }
        }
    }

    /// `keyword <value>` line.
    fn keyed<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<T, IoError> {
        let line = self.next(&format!("`{keyword} <value>`"))?;
        let mut tokens = line.split_whitespace();
        match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(k), Some(v), None) if k == keyword => v
                .parse()
                .map_err(|_| parse_err(self.pos, format!("cannot parse `{v}` after `{keyword}`"))),
            _ => Err(parse_err(
                self.pos,
                format!("expected `{keyword} <value>`, found `{line}`"),
            )),
        }
    }

    fn magic(&mut self, expected: &'static str) -> Result<(), IoError> {
        let line = self.next("a format header")?;
        if line.trim_end() == expected {
            return Ok(());
        }
        let family = expected.split(' ').next().unwrap_or(expected);
        if line.split_whitespace().next() == Some(family) {
            return Err(IoError::VersionMismatch {
                expected,
                found: line.trim_end().to_string(),
            });
        }
        Err(parse_err(self.pos, format!("expected header `{expected}`")))
    }

    fn floats(&mut self, count: usize, what: &str) -> Result<Vec<f64>, IoError> {
        let line = self.next(what)?;
        let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let vals =
            vals.map_err(|_| parse_err(self.pos, format!("non-numeric value in {what}")))?;
        if vals.len() != count {
            return Err(parse_err(
                self.pos,
                format!("expected {count} values in {what}, found {}", vals.len()),
            ));
        }
        Ok(vals)
    }
}

fn push_floats(out: &mut String, v: &DVector<f64>) {
    for (k, x) in v.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x}");
    }
    out.push('\n');
}

pub fn plan_to_string(plan: &StegoPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PLAN_MAGIC}");
    let _ = writeln!(out, "dim {}", plan.dim());
    let _ = writeln!(out, "tau {}", plan.carrier_threshold());
    let _ = writeln!(out, "polytopes {}", plan.polytopes().len());
    for poly in plan.polytopes() {
        let _ = writeln!(out, "poly {}", poly.len());
        for v in poly {
            push_floats(&mut out, v);
        }
    }
    out
}

pub fn plan_from_str(text: &str) -> Result<StegoPlan, IoError> {
    let mut lines = Lines::new(text);
    lines.magic(PLAN_MAGIC)?;
    let dim: usize = lines.keyed("dim")?;
    let tau: f64 = lines.keyed("tau")?;
    let count: usize = lines.keyed("polytopes")?;
    let mut polytopes = Vec::with_capacity(count);
    for _ in 0..count {
        let verts: usize = lines.keyed("poly")?;
        let mut poly = Vec::with_capacity(verts);
        for _ in 0..verts {
            poly.push(DVector::from_vec(lines.floats(dim, "a vertex line")?));
        }
        polytopes.push(poly);
    }
    lines.expect_done()?;
    Ok(StegoPlan::new(dim, tau, polytopes)?)
}

pub fn write_plan(path: &Path, plan: &StegoPlan) -> Result<(), IoError> {
    Ok(std::fs::write(path, plan_to_string(plan))?)
}

pub fn read_plan(path: &Path) -> Result<StegoPlan, IoError> {
    plan_from_str(&std::fs::read_to_string(path)?)
}

pub fn messages_to_string(messages: &[PayloadMessage]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MESSAGES_MAGIC}");
    let _ = writeln!(out, "count {}", messages.len());
    for m in messages {
        let _ = write!(out, "{}", m.index());
        for x in m.payload().iter() {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    out
}

pub fn messages_from_str(text: &str) -> Result<Vec<PayloadMessage>, IoError> {
    let mut lines = Lines::new(text);
    lines.magic(MESSAGES_MAGIC)?;
    let count: usize = lines.keyed("count")?;
    let mut messages = Vec::with_capacity(count);
    let mut payload_len = None;
    for _ in 0..count {
        let line = lines.next("a message line")?;
        let mut tokens = line.split_whitespace();
        let index: u64 = tokens
            .next()
            .ok_or_else(|| parse_err(lines.pos, "empty message line"))?
            .parse()
            .map_err(|_| parse_err(lines.pos, "message line must start with an integer index"))?;
        let payload: Result<Vec<f64>, _> = tokens.map(str::parse).collect();
        let payload =
            payload.map_err(|_| parse_err(lines.pos, "non-numeric payload coordinate"))?;
        match payload_len {
            None => payload_len = Some(payload.len()),
            Some(expected) if expected != payload.len() => {
                return Err(parse_err(
                    lines.pos,
                    format!(
                        "payload length {} does not match earlier length {expected}",
                        payload.len()
                    ),
                ));
            }
            _ => {}
        }
        messages.push(
            PayloadMessage::new(index, DVector::from_vec(payload))
                .map_err(IoError::Invalid)?,
        );
    }
    lines.expect_done()?;
    Ok(messages)
}

pub fn write_messages(path: &Path, messages: &[PayloadMessage]) -> Result<(), IoError> {
    Ok(std::fs::write(path, messages_to_string(messages))?)
}

pub fn read_messages(path: &Path) -> Result<Vec<PayloadMessage>, IoError> {
    messages_from_str(&std::fs::read_to_string(path)?)
}

pub fn points_to_string(points: &[DVector<f64>]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{POINTS_MAGIC}");
    let dim = points.first().map_or(0, |p| p.len());
    let _ = writeln!(out, "dim {dim}");
    let _ = writeln!(out, "points {}", points.len());
    for p in points {
        push_floats(&mut out, p);
    }
    out
}

pub fn points_from_str(text: &str) -> Result<Vec<DVector<f64>>, IoError> {
    let mut lines = Lines::new(text);
    lines.magic(POINTS_MAGIC)?;
    let dim: usize = lines.keyed("dim")?;
    let count: usize = lines.keyed("points")?;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        points.push(DVector::from_vec(lines.floats(dim, "a point line")?));
    }
    lines.expect_done()?;
    Ok(points)
}

pub fn read_points(path: &Path) -> Result<Vec<DVector<f64>>, IoError> {
    points_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_points(path: &Path, points: &[DVector<f64>]) -> Result<(), IoError> {
    Ok(std::fs::write(path, points_to_string(points))?)
}
