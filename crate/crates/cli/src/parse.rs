//! Literal syntax accepted on the command line.

use std::fmt;

use elliptic_tail::kernels::{Branch, LatticePoint};
use elliptic_tail::Complex64;

/// A malformed literal, with the character offset of the first bad input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiteralError {
    pub input: String,
    pub position: usize,
    pub reason: String,
}

impl fmt::Display for LiteralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "malformed literal {:?} at position {}: {}", self.input, self.position, self.reason)
    }
}

impl std::error::Error for LiteralError {}

fn fail(input: &str, position: usize, reason: impl Into<String>) -> LiteralError {
    LiteralError { input: input.to_string(), position, reason: reason.into() }
}

fn number(input: &str, part: &str, offset: usize) -> Result<f64, LiteralError> {
    if part.is_empty() {
        return Err(fail(input, offset, "expected a number"));
    }
    if let Some(bad) = part.find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))) {
        return Err(fail(input, offset + bad, "unexpected character"));
    }
    match part.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(fail(input, offset, "number out of range")),
        Err(_) => Err(fail(input, offset, "not a number")),
    }
}

/// Parses `re`, `imi`, `re+imi`, `re-imi` or the JSON form `[re, im]`.
pub fn complex(input: &str) -> Result<Complex64, LiteralError> {
    let lead = input.len() - input.trim_start().len();
    let s = input.trim();
    if s.starts_with('[') {
        return match serde_json::from_str::<[f64; 2]>(s) {
            Ok([re, im]) => Ok(Complex64::new(re, im)),
            Err(e) => {
                let pos = s.lines().take(e.line().saturating_sub(1)).map(|l| l.len() + 1).sum::<usize>() + e.column();
                Err(fail(input, lead + pos.saturating_sub(1), "expected [re, im]"))
            }
        };
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(number(input, s, lead)?, 0.0));
    };
    // the imaginary part starts at the last sign that is not an exponent sign
    let split = body
        .char_indices()
        .rev()
        .find(|&(k, c)| matches!(c, '+' | '-') && k > 0 && !matches!(body.as_bytes()[k - 1], b'e' | b'E'))
        .map(|(k, _)| k);
    let (re, im_part, im_at) = match split {
        Some(k) => (number(input, &body[..k], lead)?, &body[k..], lead + k),
        None => (0.0, body, lead),
    };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        p => number(input, p, im_at)?,
    };
    Ok(Complex64::new(re, im))
}

/// Parses `+k` or `-k` (the point `ζ±q^k`); `k` may itself be negative, as
/// in `+-2`.
pub fn lattice_point(input: &str) -> Result<LatticePoint, LiteralError> {
    let s = input.trim();
    let branch = match s.chars().next() {
        Some('+') => Branch::Plus,
        Some('-') => Branch::Minus,
        _ => return Err(fail(input, 0, "expected a branch sign, + or -")),
    };
    let k = s[1..].parse::<i64>().map_err(|_| fail(input, 1, "expected an integer exponent"))?;
    Ok(LatticePoint { branch, k })
}

pub fn branch(input: &str) -> Result<Branch, LiteralError> {
    match input.trim() {
        "+" | "plus" => Ok(Branch::Plus),
        "-" | "minus" => Ok(Branch::Minus),
        _ => Err(fail(input, 0, "expected +, -, plus or minus")),
    }
}

/// An inclusive exponent range `lo..hi`.
pub fn range(input: &str) -> Result<(i64, i64), LiteralError> {
    let Some(at) = input.find("..") else {
        return Err(fail(input, 0, "expected lo..hi"));
    };
    let lo = input[..at].trim().parse::<i64>().map_err(|_| fail(input, 0, "expected an integer"))?;
    let hi = input[at + 2..].trim().parse::<i64>().map_err(|_| fail(input, at + 2, "expected an integer"))?;
    if lo > hi {
        return Err(fail(input, 0, "empty range"));
    }
    Ok((lo, hi))
}
