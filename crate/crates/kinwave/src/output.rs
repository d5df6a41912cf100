//! CSV and JSON emission with atomic writes.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::profile::WaveProfile;
use crate::reconstruction::{species_density, PhaseDistribution, Species};

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("json: {e}")))?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns X, Phi, dPhi, V, rho_plus, rho_minus; metadata as leading comments.
pub fn profile_csv(p: &WaveProfile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# kind={}", p.kind);
    let _ = writeln!(s, "# amplitude={}", num(p.amplitude));
    if let Some(g) = p.period {
        let _ = writeln!(s, "# period={}", num(g));
    }
    if let Some(l) = p.truncation {
        let _ = writeln!(s, "# truncation={}", num(l));
        let _ = writeln!(s, "# eps_tail={}", num(p.eps_tail));
    }
    s.push_str("X,Phi,dPhi,V,rho_plus,rho_minus\n");
    let sag = p.pot.as_sagdeev();
    for i in 0..p.x.len() {
        let phi = p.phi[i];
        let (rp, rm) = match sag {
            Some(pot) => (
                species_density(pot, Species::Plus, phi),
                species_density(pot, Species::Minus, phi),
            ),
            None => (f64::NAN, f64::NAN),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(p.x[i]),
            num(phi),
            num(p.dphi[i]),
            num(p.pot.v(phi)),
            num(rp),
            num(rm)
        );
    }
    s
}

/// Columns X, xi1, F.
pub fn phase_csv(d: &PhaseDistribution) -> String {
    let mut s = String::with_capacity(d.values.len() * 72);
    let species = match d.species {
        Species::Plus => "plus",
        Species::Minus => "minus",
    };
    let _ = writeln!(s, "# species={species}");
    s.push_str("X,xi1,F\n");
    for (i, x) in d.x.iter().enumerate() {
        for (xi, f) in d.xi.iter().zip(d.slice(i)) {
            let _ = writeln!(s, "{},{},{}", num(*x), num(*xi), num(*f));
        }
    }
    s
}

/// Reads the X and Phi columns back from a profile CSV.
pub fn read_profile_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = Vec::new();
    let mut phi = Vec::new();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    match rows.next() {
        Some(h) if h.starts_with("X,Phi") => {}
        _ => return Err(Error::Input("profile CSV header missing".into())),
    }
    for (k, line) in rows.enumerate() {
        let mut cols = line.split(',');
        let mut next = || -> Result<f64> {
            cols.next()
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| Error::Input(format!("profile CSV row {}: bad number", k + 1)))
        };
        x.push(next()?);
        phi.push(next()?);
    }
    Ok((x, phi))
}
