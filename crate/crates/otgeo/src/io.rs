//! Point cloud ingestion and export.
//!
//! Two formats:
//! - CSV: one row per point, no header, decimal floats.
//! - Raw binary, little-endian: header `u32 n, u32 d`, then `n * d` f64 values.

use crate::error::{Error, Result};
use crate::measure::PointCloud;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub fn read_csv(path: &Path) -> Result<PointCloud> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let path_str = path.display().to_string();
    let mut data = Vec::new();
    let mut d = None;
    let mut rows = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut width = 0usize;
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line: lineno + 1,
                msg: format!("'{}' is not a decimal float", field.trim()),
            })?;
            data.push(v);
            width += 1;
        }
        match d {
            None => d = Some(width),
            Some(expect) if expect != width => {
                return Err(Error::Parse {
                    path: path_str,
                    line: lineno + 1,
                    msg: format!("row has {} fields, expected {}", width, expect),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty("csv point cloud"));
    }
    PointCloud::new(data, d.unwrap())
}

pub fn write_csv(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for p in cloud.iter_points() {
        let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<PointCloud> {
    let mut file = BufReader::new(File::open(path)?);
    let mut header = [0u8; 8];
    file.read_exact(&mut header)?;
    let n = u32::from_le_bytes(header[0..4].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    if n == 0 || d == 0 {
        return Err(Error::Empty("binary point cloud"));
    }
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::invalid("binary header overflows n*d"))?;
    let mut bytes = vec![0u8; count * 8];
    file.read_exact(&mut bytes)?;
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    PointCloud::new(data, d)
}

pub fn write_binary(cloud: &PointCloud, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(&(cloud.n() as u32).to_le_bytes())?;
    out.write_all(&(cloud.d() as u32).to_le_bytes())?;
    for &v in cloud.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read either format by extension: `.bin` is binary, everything else CSV.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_binary(path),
        _ => read_csv(path),
    }
}
