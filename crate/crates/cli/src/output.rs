//! Artifact writers. Every file is written to a temporary sibling and then
//! renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use liftdescent::{GridDensity, PiecewiseConstantControl};

pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// `t_start,u_1,...,u_m`, one row per window.
pub fn control_csv(u: &PiecewiseConstantControl) -> String {
    let mut s = String::from("t_start");
    for i in 1..=u.dim() {
        let _ = write!(s, ",u_{i}");
    }
    s.push('\n');
    for (k, v) in u.values().iter().enumerate() {
        let _ = write!(s, "{}", u.window_start(k));
        for x in v {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

pub fn cost_history_csv(history: &[f64]) -> String {
    let mut s = String::from("iter,cost\n");
    for (k, c) in history.iter().enumerate() {
        let _ = writeln!(s, "{k},{c}");
    }
    s
}

pub fn density_csv(rho: &GridDensity) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    rho.write_csv(&mut buf)?;
    Ok(buf)
}

/// `density_t<time>.csv` with the shortest round-trip rendering of `time`.
pub fn snapshot_name(time: f64) -> String {
    format!("density_t{time}.csv")
}
