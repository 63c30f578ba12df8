//! Deterministic CSV emission: a provenance comment, a header row, then data
//! rows. Identical configuration and seed always produce identical bytes.

use std::io;
use std::path::Path;

/// Shortest round-trip decimal, switching to scientific notation outside
/// [1e-4, 1e7) so columns stay readable without losing precision.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let a = x.abs();
    if a < 1e-4 || a >= 1e7 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Writes `# config=<hash> seed=<seed>`, the header, then the rows.
pub fn write_csv(
    path: &Path,
    config_hash: &str,
    seed: u64,
    header: &[&str],
    rows: &[Vec<String>],
) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# config={config_hash} seed={seed}\n"));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
}
