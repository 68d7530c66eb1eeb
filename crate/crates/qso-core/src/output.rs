//! Machine-readable output: CSV with 17 significant digits (lossless f64
//! round-trips), LF line endings and '.' decimals; JSON through serde with
//! struct-declaration key order.

use std::io::Write;

use crate::cdf::DensityOrbit;
use crate::error::{Error, Result};

/// Formats one value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err<'a>(action: &'static str, path: &'a str) -> impl FnOnce(std::io::Error) -> Error + 'a {
    move |source| Error::Io {
        action,
        path: path.to_string(),
        source,
    }
}

/// Density grid dump: `x,g_n,f_n,log_f_n` rows over an even grid on `[0,1]`.
pub fn write_density_csv(
    w: &mut (impl Write + ?Sized),
    orbit: &DensityOrbit,
    grid: u32,
) -> Result<()> {
    if grid < 2 {
        return Err(Error::GridTooSmall(grid));
    }
    let mut buf = String::new();
    buf.push_str("x,g_n,f_n,log_f_n\n");
    for i in 0..grid {
        let x = i as f64 / (grid - 1) as f64;
        let g = orbit.cdf_at(x)?;
        let d = orbit.density_at(x)?;
        buf.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(x),
            fmt_f64(g),
            fmt_f64(d.value),
            fmt_f64(d.log_value)
        ));
    }
    w.write_all(buf.as_bytes())
        .map_err(io_err("write", "<stream>"))?;
    Ok(())
}

/// Distance trace dump: `step,value` rows.
pub fn write_trace_csv(w: &mut (impl Write + ?Sized), distances: &[(u32, f64)]) -> Result<()> {
    let mut buf = String::from("step,value\n");
    for (step, value) in distances {
        buf.push_str(&format!("{step},{}\n", fmt_f64(*value)));
    }
    w.write_all(buf.as_bytes())
        .map_err(io_err("write", "<stream>"))?;
    Ok(())
}

/// Single-column ensemble dump.
pub fn write_ensemble_csv(w: &mut (impl Write + ?Sized), points: &[f64]) -> Result<()> {
    let mut buf = String::from("x\n");
    for x in points {
        buf.push_str(&fmt_f64(*x));
        buf.push('\n');
    }
    w.write_all(buf.as_bytes())
        .map_err(io_err("write", "<stream>"))?;
    Ok(())
}

/// Serializes any report as JSON with a trailing newline.
pub fn write_json(w: &mut (impl Write + ?Sized), value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    w.write_all(text.as_bytes())
        .map_err(io_err("write", "<stream>"))?;
    Ok(())
}

/// Reads a two-or-more-column CSV of (x, g) nodes; a non-numeric first line
/// is treated as a header. Extra columns are ignored, so a density dump can
/// be fed straight back in as a CDF grid.
pub fn read_grid_csv(path: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(io_err("read", path))?;
    let mut nodes = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let x = cols.next().map(str::trim).unwrap_or("");
        let g = cols.next().map(str::trim).unwrap_or("");
        match (x.parse::<f64>(), g.parse::<f64>()) {
            (Ok(x), Ok(g)) => nodes.push((x, g)),
            _ if lineno == 0 => continue, // header row
            _ => {
                return Err(Error::BadInitialMeasure {
                    input: format!("grid:{path}"),
                    reason: format!("line {} is not `x,g` numeric data", lineno + 1),
                })
            }
        }
    }
    Ok(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdf::CdfMeasure;
    use crate::kernel::KernelParams;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.352, 1.0 / 3.0, 0.123_456_789_012_345_67, 4.096] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn density_csv_shape() {
        let orbit =
            DensityOrbit::new(KernelParams::new(0.8).unwrap(), CdfMeasure::uniform(), 3).unwrap();
        let mut out = Vec::new();
        write_density_csv(&mut out, &orbit, 3).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,g_n,f_n,log_f_n");
        assert_eq!(lines.len(), 4);
        let first: Vec<f64> = lines[1].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(first[0], 0.0);
        assert!((first[2] - 0.064).abs() < 1e-15);
        let last: Vec<f64> = lines[3].split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(last[0], 1.0);
        assert!((last[2] - 4.096).abs() < 1e-14);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn grid_csv_round_trip() {
        let dir = std::env::temp_dir().join("qso-output-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("grid.csv");
        let orbit =
            DensityOrbit::new(KernelParams::new(0.8).unwrap(), CdfMeasure::uniform(), 3).unwrap();
        {
            let mut f = std::fs::File::create(&path).unwrap();
            write_density_csv(&mut f, &orbit, 11).unwrap();
        }
        let nodes = read_grid_csv(path.to_str().unwrap()).unwrap();
        assert_eq!(nodes.len(), 11);
        let grid = CdfMeasure::from_grid(nodes.clone()).unwrap();
        for (x, g) in nodes {
            assert_eq!(grid.cdf(x).unwrap().to_bits(), g.to_bits());
        }
    }
}
