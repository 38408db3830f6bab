//! Byte scanners, number parsers and the Matrix Market header reader.
//!
//! Everything here works on plain byte slices with explicit `[from, to)`
//! bounds and never allocates. Any byte that is not a digit, a sign or a
//! decimal point is treated as a separator, so tabs, repeated spaces and CR
//! before LF are all accepted.

use crate::error::{Error, FormatErrorKind, Result};

#[inline(always)]
fn is_digit(b: u8) -> bool {
    b.wrapping_sub(b'0') < 10
}

#[inline(always)]
fn starts_number(data: &[u8], i: usize, to: usize) -> bool {
    let c = data[i];
    if is_digit(c) {
        return true;
    }
    matches!(c, b'-' | b'+' | b'.') && i + 1 < to && is_digit(data[i + 1])
}

/// Smallest offset in `[from, to)` holding a digit, or a sign / decimal point
/// directly followed by a digit. Returns `to` if there is none.
#[inline]
pub fn find_next_digit(data: &[u8], from: usize, to: usize) -> usize {
    let mut i = from;
    while i < to {
        if starts_number(data, i, to) {
            return i;
        }
        i += 1;
    }
    to
}

/// One past the first `\n` at or after `from`, clamped to `to`.
#[inline]
pub fn find_next_line(data: &[u8], from: usize, to: usize) -> usize {
    match data[from.min(to)..to].iter().position(|&c| c == b'\n') {
        Some(p) => from + p + 1,
        None => to,
    }
}

/// Like [`find_next_digit`] but refuses to leave the current line.
#[inline]
fn find_field_on_line(data: &[u8], from: usize, to: usize) -> Result<usize> {
    let mut i = from;
    while i < to {
        let c = data[i];
        if c == b'\n' {
            break;
        }
        if starts_number(data, i, to) {
            return Ok(i);
        }
        i += 1;
    }
    Err(Error::format(i, FormatErrorKind::MissingField))
}

/// Parses the run of ASCII digits starting at `from`.
///
/// Returns the value and the offset of the first byte after the digits.
#[inline]
pub fn parse_whole_number(data: &[u8], from: usize, to: usize) -> Result<(u64, usize)> {
    let mut i = from;
    let mut value: u64 = 0;
    if i >= to || !is_digit(data[i]) {
        return Err(Error::format(from, FormatErrorKind::MalformedNumber));
    }
    while i < to {
        let d = data[i].wrapping_sub(b'0');
        if d >= 10 {
            break;
        }
        value = value
            .checked_mul(10)
            .and_then(|v| v.checked_add(d as u64))
            .ok_or_else(|| Error::format(from, FormatErrorKind::IntegerOverflow))?;
        i += 1;
    }
    Ok((value, i))
}

const EXACT_POW10: [f64; 23] = [
    1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15, 1e16,
    1e17, 1e18, 1e19, 1e20, 1e21, 1e22,
];

const MAX_SIGNIFICANT: u32 = 19;

#[inline]
fn scale_pow10(mantissa: u64, exp: i32) -> f64 {
    let m = mantissa as f64;
    let e = exp.unsigned_abs() as usize;
    if e < EXACT_POW10.len() {
        if exp >= 0 {
            m * EXACT_POW10[e]
        } else {
            m / EXACT_POW10[e]
        }
    } else if exp > 0 {
        m * 10f64.powi(exp)
    } else if exp >= -300 {
        m / 10f64.powi(-exp)
    } else {
        // Split so the divisor stays finite.
        m / 1e300 / 10f64.powi(-exp - 300)
    }
}

/// Parses a decimal floating-point token starting at `from`: optional sign,
/// integer digits, optional fraction, optional `e`/`E` exponent.
///
/// Accuracy is within a couple of f64 ulps, well inside one f32 ulp; weights
/// are stored as `f32`.
#[inline]
pub fn parse_float(data: &[u8], from: usize, to: usize) -> Result<(f64, usize)> {
    let malformed = || Error::format(from, FormatErrorKind::MalformedNumber);
    let mut i = from;
    let mut negative = false;
    if i < to && (data[i] == b'-' || data[i] == b'+') {
        negative = data[i] == b'-';
        i += 1;
    }

    let mut mantissa: u64 = 0;
    let mut significant: u32 = 0;
    let mut exp10: i32 = 0;
    let mut any_digit = false;

    while i < to {
        let d = data[i].wrapping_sub(b'0');
        if d >= 10 {
            break;
        }
        any_digit = true;
        if significant < MAX_SIGNIFICANT {
            mantissa = mantissa * 10 + d as u64;
            if mantissa != 0 {
                significant += 1;
            }
        } else {
            exp10 += 1;
        }
        i += 1;
    }
    if i < to && data[i] == b'.' {
        i += 1;
        while i < to {
            let d = data[i].wrapping_sub(b'0');
            if d >= 10 {
                break;
            }
            any_digit = true;
            if significant < MAX_SIGNIFICANT {
                mantissa = mantissa * 10 + d as u64;
                if mantissa != 0 {
                    significant += 1;
                }
                exp10 -= 1;
            }
            i += 1;
        }
    }
    if !any_digit {
        return Err(malformed());
    }
    if i < to && (data[i] | 0x20) == b'e' {
        i += 1;
        let mut exp_negative = false;
        if i < to && (data[i] == b'-' || data[i] == b'+') {
            exp_negative = data[i] == b'-';
            i += 1;
        }
        if i >= to || !is_digit(data[i]) {
            return Err(malformed());
        }
        let mut e: i32 = 0;
        while i < to {
            let d = data[i].wrapping_sub(b'0');
            if d >= 10 {
                break;
            }
            e = (e * 10 + d as i32).min(100_000);
            i += 1;
        }
        exp10 += if exp_negative { -e } else { e };
    }

    let magnitude = if mantissa == 0 {
        0.0
    } else {
        scale_pow10(mantissa, exp10)
    };
    Ok((if negative { -magnitude } else { magnitude }, i))
}

/// One edge line as read from text, before basing and range checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawEdge {
    pub source: u64,
    pub target: u64,
    pub weight: f32,
    /// Byte offset of the source token.
    pub source_at: usize,
    /// Byte offset of the target token.
    pub target_at: usize,
}

#[inline(always)]
fn parse_vertex_id(data: &[u8], at: usize, to: usize) -> Result<(u64, usize)> {
    match data[at] {
        b'-' => Err(Error::format(at, FormatErrorKind::SignedVertexId)),
        b'+' => parse_whole_number(data, at + 1, to),
        _ => parse_whole_number(data, at, to),
    }
}

/// Reads the next edge line from `[from, to)`.
///
/// Returns `None` when no further number starts before `to`; otherwise the
/// parsed edge and the offset of the next line. Target and weight must sit on
/// the same line as the source. Trailing tokens on the line are ignored.
/// Unweighted edges carry weight 1.
#[inline(always)]
pub fn parse_edge_line<const WEIGHTED: bool>(
    data: &[u8],
    from: usize,
    to: usize,
) -> Result<Option<(RawEdge, usize)>> {
    let source_at = find_next_digit(data, from, to);
    if source_at == to {
        return Ok(None);
    }
    let (source, b) = parse_vertex_id(data, source_at, to)?;
    let target_at = find_field_on_line(data, b, to)?;
    let (target, mut b) = parse_vertex_id(data, target_at, to)?;
    let mut weight = 1.0f32;
    if WEIGHTED {
        let w_at = find_field_on_line(data, b, to)?;
        let (w, next) = parse_float(data, w_at, to)?;
        weight = w as f32;
        b = next;
    }
    let next = if b < to && data[b] == b'\n' {
        b + 1
    } else {
        find_next_line(data, b, to)
    };
    Ok(Some((
        RawEdge {
            source,
            target,
            weight,
            source_at,
            target_at,
        },
        next,
    )))
}

/// Runtime-flag front end to [`parse_edge_line`].
pub fn parse_edge_line_dyn(
    data: &[u8],
    from: usize,
    to: usize,
    weighted: bool,
) -> Result<Option<(RawEdge, usize)>> {
    if weighted {
        parse_edge_line::<true>(data, from, to)
    } else {
        parse_edge_line::<false>(data, from, to)
    }
}

/// Matrix Market banner and size line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MtxHeader {
    pub rows: u64,
    pub cols: u64,
    pub entries: u64,
    pub symmetric: bool,
    pub weighted: bool,
}

impl MtxHeader {
    /// Header for a headerless edge list with known sizes.
    pub fn edgelist(vertices: u64, entries: u64, symmetric: bool, weighted: bool) -> Self {
        MtxHeader {
            rows: vertices,
            cols: vertices,
            entries,
            symmetric,
            weighted,
        }
    }

    pub fn vertices(&self) -> u64 {
        self.rows
    }

    /// Number of edges stored after symmetric duplication.
    pub fn stored_edges(&self) -> u64 {
        if self.symmetric {
            self.entries * 2
        } else {
            self.entries
        }
    }
}

/// Largest vertex count representable by 32-bit vertex ids.
pub const MAX_VERTICES: u64 = u32::MAX as u64;

/// Parses the `%%MatrixMarket` banner, comment lines and the size line.
///
/// Returns the header and the offset of the first body byte.
pub fn parse_mtx_header(data: &[u8]) -> Result<(MtxHeader, usize)> {
    const BANNER: &[u8] = b"%%MatrixMarket";
    let len = data.len();
    if !data.starts_with(BANNER) {
        return Err(Error::format(0, FormatErrorKind::MissingBanner));
    }
    let banner_end = find_next_line(data, 0, len);
    let banner = std::str::from_utf8(&data[BANNER.len()..banner_end])
        .map_err(|_| Error::format(0, FormatErrorKind::MalformedBanner))?;
    let tokens: Vec<String> = banner
        .split_ascii_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() < 4 {
        return Err(Error::format(0, FormatErrorKind::MalformedBanner));
    }
    let (object, format, field, symmetry) = (&tokens[0], &tokens[1], &tokens[2], &tokens[3]);
    if object != "matrix" {
        return Err(Error::format(
            0,
            FormatErrorKind::UnsupportedObject(object.clone()),
        ));
    }
    if format != "coordinate" {
        return Err(Error::format(
            0,
            FormatErrorKind::NotCoordinate(format.clone()),
        ));
    }
    let weighted = match field.as_str() {
        "pattern" => false,
        "real" | "double" | "integer" => true,
        _ => {
            return Err(Error::format(
                0,
                FormatErrorKind::UnsupportedField(field.clone()),
            ))
        }
    };
    let symmetric = match symmetry.as_str() {
        "general" => false,
        "symmetric" | "skew-symmetric" => true,
        _ => {
            return Err(Error::format(
                0,
                FormatErrorKind::UnsupportedSymmetry(symmetry.clone()),
            ))
        }
    };

    let mut line_start = banner_end;
    loop {
        if line_start >= len {
            return Err(Error::format(len, FormatErrorKind::MalformedDimensions));
        }
        let line_end = find_next_line(data, line_start, len);
        let line = &data[line_start..line_end];
        let blank = line.iter().all(|c| c.is_ascii_whitespace());
        if line[0] == b'%' || blank {
            line_start = line_end;
            continue;
        }
        let dims = parse_dimension_line(line)
            .ok_or_else(|| Error::format(line_start, FormatErrorKind::MalformedDimensions))?;
        let (rows, cols, entries) = dims;
        if rows != cols {
            return Err(Error::format(
                line_start,
                FormatErrorKind::NonSquare { rows, cols },
            ));
        }
        if rows > MAX_VERTICES {
            return Err(Error::format(
                line_start,
                FormatErrorKind::TooManyVertices(rows),
            ));
        }
        let header = MtxHeader {
            rows,
            cols,
            entries,
            symmetric,
            weighted,
        };
        return Ok((header, line_end));
    }
}

fn parse_dimension_line(line: &[u8]) -> Option<(u64, u64, u64)> {
    let text = std::str::from_utf8(line).ok()?;
    let mut it = text.split_ascii_whitespace().map(|t| t.parse::<u64>().ok());
    let dims = (it.next()??, it.next()??, it.next()??);
    match it.next() {
        None => Some(dims),
        Some(_) => None,
    }
}
