//! Bounding box of SVG path data from coordinate extremes.
//!
//! Curve control points are included, so curved paths get a box that may be
//! larger than the drawn outline. Arcs contribute their end points only.

use super::BBox;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Command(char),
    Number(f64),
}

fn tokenize(d: &str) -> Option<Vec<Token>> {
    let bytes = d.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() || c == ',' {
            i += 1;
        } else if c.is_ascii_alphabetic() && c != 'e' && c != 'E' {
            out.push(Token::Command(c));
            i += 1;
        } else {
            let start = i;
            if c == '+' || c == '-' {
                i += 1;
            }
            let mut seen_dot = false;
            let mut seen_digit = false;
            while i < bytes.len() {
                let b = bytes[i] as char;
                if b.is_ascii_digit() {
                    seen_digit = true;
                    i += 1;
                } else if b == '.' && !seen_dot {
                    seen_dot = true;
                    i += 1;
                } else {
                    break;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') && seen_digit {
                i += 1;
                if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                    i += 1;
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if !seen_digit {
                return None;
            }
            out.push(Token::Number(d[start..i].parse().ok()?));
        }
    }
    Some(out)
}

/// Returns `None` for unparseable or empty path data.
pub fn path_bbox(d: &str) -> Option<BBox> {
    let tokens = tokenize(d)?;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let (mut cx, mut cy) = (0.0_f64, 0.0_f64);
    let (mut sx, mut sy) = (0.0_f64, 0.0_f64);
    let mut i = 0;
    let mut cmd = ' ';

    let take = |i: &mut usize, n: usize| -> Option<Vec<f64>> {
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            match tokens.get(*i) {
                Some(Token::Number(x)) => {
                    v.push(*x);
                    *i += 1;
                }
                _ => return None,
            }
        }
        Some(v)
    };

    while i < tokens.len() {
        if let Token::Command(c) = tokens[i] {
            cmd = c;
            i += 1;
            if c == 'z' || c == 'Z' {
                cx = sx;
                cy = sy;
                continue;
            }
        } else if cmd == ' ' {
            return None;
        }
        let rel = cmd.is_ascii_lowercase();
        let (ox, oy) = if rel { (cx, cy) } else { (0.0, 0.0) };
        match cmd.to_ascii_uppercase() {
            'M' | 'L' | 'T' => {
                let v = take(&mut i, 2)?;
                cx = ox + v[0];
                cy = oy + v[1];
                if cmd.eq_ignore_ascii_case(&'m') {
                    sx = cx;
                    sy = cy;
                    // Subsequent pairs are implicit line-tos.
                    cmd = if rel { 'l' } else { 'L' };
                }
                pts.push((cx, cy));
            }
            'H' => {
                let v = take(&mut i, 1)?;
                cx = ox + v[0];
                pts.push((cx, cy));
            }
            'V' => {
                let v = take(&mut i, 1)?;
                cy = oy + v[0];
                pts.push((cx, cy));
            }
            'C' => {
                let v = take(&mut i, 6)?;
                pts.push((ox + v[0], oy + v[1]));
                pts.push((ox + v[2], oy + v[3]));
                cx = ox + v[4];
                cy = oy + v[5];
                pts.push((cx, cy));
            }
            'S' | 'Q' => {
                let v = take(&mut i, 4)?;
                pts.push((ox + v[0], oy + v[1]));
                cx = ox + v[2];
                cy = oy + v[3];
                pts.push((cx, cy));
            }
            'A' => {
                let v = take(&mut i, 7)?;
                cx = ox + v[5];
                cy = oy + v[6];
                pts.push((cx, cy));
            }
            _ => return None,
        }
    }
    if pts.is_empty() {
        return None;
    }
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        min_x = min_x.min(x);
        min_y = min_y.min(y);
        max_x = max_x.max(x);
        max_y = max_y.max(y);
    }
    Some(BBox::from_extents(min_x, min_y, max_x, max_y))
}
