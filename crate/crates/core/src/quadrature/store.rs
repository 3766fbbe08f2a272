//! On-disk J-table format.
//!
//! One text header line
//! `wellgrav-jtable <version> delta=<δ, 12 decimals> pmax=<pmax> accuracy=<acc>`
//! followed by the upper triangle (`p ≤ q`, row-major) as little-endian `f64`.

use std::io::{BufRead, Write};

use super::{delta_key, JTable, TABLE_VERSION};
use crate::error::{Error, Result};

pub const TABLE_MAGIC: &str = "wellgrav-jtable";

pub fn write_table<W: Write>(table: &JTable, mut w: W) -> Result<()> {
    writeln!(
        w,
        "{TABLE_MAGIC} {} delta={} pmax={} accuracy={:e}",
        table.version,
        delta_key(table.delta),
        table.pmax,
        table.accuracy
    )?;
    for p in 0..=table.pmax {
        for q in p..=table.pmax {
            w.write_all(&table.at(p, q).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Header fields of a stored table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableHeader {
    pub version: u32,
    pub delta: f64,
    pub pmax: usize,
    pub accuracy: f64,
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCache(msg.into())
}

fn parse_header(line: &str) -> Result<TableHeader> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(TABLE_MAGIC) {
        return Err(corrupt("bad magic"));
    }
    let version = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt("bad version"))?;
    let mut field = |name: &str| -> Result<String> {
        let tok = parts.next().ok_or_else(|| corrupt(format!("missing {name}")))?;
        tok.strip_prefix(name)
            .and_then(|t| t.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| corrupt(format!("expected {name}=..., got {tok}")))
    };
    let delta = field("delta")?.parse().map_err(|_| corrupt("bad delta"))?;
    let pmax = field("pmax")?.parse().map_err(|_| corrupt("bad pmax"))?;
    let accuracy = field("accuracy")?.parse().map_err(|_| corrupt("bad accuracy"))?;
    Ok(TableHeader {
        version,
        delta,
        pmax,
        accuracy,
    })
}

pub fn read_header<R: BufRead>(r: &mut R) -> Result<TableHeader> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(corrupt("truncated header"));
    }
    parse_header(line.trim_end())
}

pub fn read_table<R: BufRead>(mut r: R) -> Result<JTable> {
    let h = read_header(&mut r)?;
    if h.version != TABLE_VERSION {
        return Err(corrupt(format!(
            "version {} (expected {TABLE_VERSION})",
            h.version
        )));
    }
    if h.pmax < 2 || h.pmax > 100_000 {
        return Err(corrupt(format!("implausible pmax {}", h.pmax)));
    }
    let np = h.pmax + 1;
    let mut values = vec![0.0; np * np];
    let mut buf = [0u8; 8];
    for p in 0..np {
        for q in p..np {
            r.read_exact(&mut buf)
                .map_err(|_| corrupt("payload shorter than header promises"))?;
            let v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(corrupt(format!("non-finite entry at ({p}, {q})")));
            }
            values[p * np + q] = v;
            values[q * np + p] = v;
        }
    }
    if r.read(&mut buf)? != 0 {
        return Err(corrupt("trailing bytes after payload"));
    }
    Ok(JTable::from_values(h.delta, h.pmax, h.accuracy, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_table;

    #[test]
    fn round_trip_is_exact() {
        let t = build_table(0.02, 12, 1e-10).unwrap();
        let mut bytes = Vec::new();
        write_table(&t, &mut bytes).unwrap();
        let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes[..header_end]).unwrap(),
            "wellgrav-jtable 1 delta=0.020000000000 pmax=12 accuracy=1e-10"
        );
        assert_eq!(bytes.len() - header_end - 1, 13 * 14 / 2 * 8);
        let back = read_table(&bytes[..]).unwrap();
        assert_eq!(back.pmax, 12);
        assert_eq!(back.values(), t.values());
    }

    #[test]
    fn detects_corruption() {
        let t = build_table(0.5, 6, 1e-10).unwrap();
        let mut bytes = Vec::new();
        write_table(&t, &mut bytes).unwrap();
        assert!(matches!(read_table(&bytes[..bytes.len() - 3]), Err(Error::CorruptCache(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(read_table(&extra[..]), Err(Error::CorruptCache(_))));
        assert!(matches!(read_table(&b"garbage\n"[..]), Err(Error::CorruptCache(_))));
        let bumped = String::from_utf8_lossy(&bytes).replacen("jtable 1", "jtable 9", 1);
        assert!(read_table(bumped.as_bytes()).is_err());
    }
}
