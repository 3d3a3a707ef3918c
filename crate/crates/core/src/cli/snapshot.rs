//! Binary field snapshots.
//!
//! Header (little endian): magic `ACNS`, format version u32, dimension u32,
//! field kind u32, cell counts 3×u64, spacing 3×f64, ε f64 (NaN for the
//! incompressible reference), time f64, step u64, geometry fingerprint u64.
//! The payload is f64 values, row-major, face components first and cell
//! values after them.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{AcnsError, Result};
use crate::fields::{ScalarField, StaggeredField};
use crate::geometry::DomainGeometry;
use crate::trajectory::Snapshot;

pub const MAGIC: &[u8; 4] = b"ACNS";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 24 + 24 + 8 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum FieldKind {
    Scalar = 0,
    Staggered = 1,
    /// Velocity faces followed by pressure cells.
    State = 2,
}

impl FieldKind {
    fn from_u32(v: u32) -> Option<Self> {
        match v {
            0 => Some(Self::Scalar),
            1 => Some(Self::Staggered),
            2 => Some(Self::State),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Header {
    pub dim: u32,
    pub kind: FieldKind,
    pub cells: [u64; 3],
    pub spacing: [f64; 3],
    pub epsilon: Option<f64>,
    pub time: f64,
    pub step: u64,
    pub fingerprint: u64,
}

impl Header {
    fn for_geometry(
        geo: &DomainGeometry,
        kind: FieldKind,
        epsilon: Option<f64>,
        time: f64,
        step: usize,
    ) -> Self {
        let n = geo.cells();
        Self {
            dim: geo.dim() as u32,
            kind,
            cells: [n[0] as u64, n[1] as u64, n[2] as u64],
            spacing: geo.spacing(),
            epsilon,
            time,
            step: step as u64,
            fingerprint: geo.fingerprint(),
        }
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&(self.kind as u32).to_le_bytes());
        for c in self.cells {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for s in self.spacing {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out.extend_from_slice(&self.epsilon.unwrap_or(f64::NAN).to_le_bytes());
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.fingerprint.to_le_bytes());
    }

    fn decode(buf: &[u8]) -> std::result::Result<Self, String> {
        if buf.len() < HEADER_LEN {
            return Err(format!(
                "file has {} bytes, header needs {HEADER_LEN}",
                buf.len()
            ));
        }
        if &buf[..4] != MAGIC {
            return Err("bad magic".into());
        }
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != FORMAT_VERSION {
            return Err(format!("unsupported format version {version}"));
        }
        let kind = FieldKind::from_u32(u32_at(12)).ok_or("unknown field kind")?;
        let eps = f64_at(64);
        Ok(Self {
            dim: u32_at(8),
            kind,
            cells: [u64_at(16), u64_at(24), u64_at(32)],
            spacing: [f64_at(40), f64_at(48), f64_at(56)],
            epsilon: if eps.is_nan() { None } else { Some(eps) },
            time: f64_at(72),
            step: u64_at(80),
            fingerprint: u64_at(88),
        })
    }
}

pub fn encode_state(snap: &Snapshot, epsilon: Option<f64>) -> Vec<u8> {
    let geo = snap.velocity.geometry();
    let h = Header::for_geometry(geo, FieldKind::State, epsilon, snap.time, snap.step);
    let n: usize = (0..geo.dim()).map(|a| geo.num_faces(a)).sum::<usize>() + geo.num_cells();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n);
    h.encode(&mut out);
    for comp in snap.velocity.components() {
        for v in comp {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    for v in snap.pressure.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_state(path: &Path, snap: &Snapshot, epsilon: Option<f64>) -> Result<()> {
    let bytes = encode_state(snap, epsilon);
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Decodes a state snapshot against `geo`.
pub fn decode_state(
    bytes: &[u8],
    geo: &Arc<DomainGeometry>,
    path: &Path,
) -> Result<(Header, Snapshot)> {
    let corrupt = |reason: String| AcnsError::CorruptSnapshot {
        path: path.to_path_buf(),
        reason,
    };
    let h = Header::decode(bytes).map_err(corrupt)?;
    let n = geo.cells();
    let expect_cells = [n[0] as u64, n[1] as u64, n[2] as u64];
    if h.dim as usize != geo.dim() || h.cells != expect_cells || h.fingerprint != geo.fingerprint()
    {
        return Err(corrupt(
            "snapshot was written for a different geometry".into(),
        ));
    }
    if h.kind != FieldKind::State {
        return Err(corrupt(format!(
            "expected a state snapshot, found {:?}",
            h.kind
        )));
    }
    let face_counts: Vec<usize> = (0..geo.dim()).map(|a| geo.num_faces(a)).collect();
    let total = face_counts.iter().sum::<usize>() + geo.num_cells();
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != 8 * total {
        return Err(corrupt(format!(
            "payload has {} bytes, header declares {}",
            payload.len(),
            8 * total
        )));
    }
    let mut vals = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let comps: Vec<Vec<f64>> = face_counts
        .iter()
        .map(|&k| vals.by_ref().take(k).collect())
        .collect();
    let cells: Vec<f64> = vals.collect();
    let velocity = StaggeredField::from_components(geo, comps)?;
    let pressure = ScalarField::from_values(geo, cells)?;
    Ok((
        h.clone(),
        Snapshot {
            step: h.step as usize,
            time: h.time,
            velocity,
            pressure,
        },
    ))
}

pub fn read_snapshot(path: &Path, geo: &Arc<DomainGeometry>) -> Result<(Header, Snapshot)> {
    let bytes = fs::read(path).map_err(|e| AcnsError::CorruptSnapshot {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    decode_state(&bytes, geo, path)
}

pub fn read_state(path: &Path, geo: &Arc<DomainGeometry>) -> Result<(StaggeredField, ScalarField)> {
    let (_, s) = read_snapshot(path, geo).map_err(|e| match e {
        AcnsError::CorruptSnapshot { reason, .. } => {
            AcnsError::BadInitialData(format!("{}: {reason}", path.display()))
        }
        other => other,
    })?;
    Ok((s.velocity, s.pressure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GeometrySpec, Obstacle};

    #[test]
    fn round_trip_is_bitwise() {
        let geo = Arc::new(
            DomainGeometry::new(GeometrySpec::boxed(
                &[4.0, 4.0],
                &[32, 32],
                Obstacle::Ball {
                    center: vec![1.0, 2.0],
                    radius: 0.3,
                },
            ))
            .unwrap(),
        );
        let u = crate::ac_solver::initial_velocity(&geo, &Default::default()).unwrap();
        let p = ScalarField::from_fn(&geo, |x| x[0].sin() + 1e-300 * x[1]);
        let snap = Snapshot {
            step: 7,
            time: 0.125,
            velocity: u,
            pressure: p,
        };
        let bytes = encode_state(&snap, Some(0.01));
        let (h, back) = decode_state(&bytes, &geo, Path::new("mem")).unwrap();
        assert_eq!(h.epsilon, Some(0.01));
        assert_eq!(back.step, 7);
        assert_eq!(back.velocity.components(), snap.velocity.components());
        assert_eq!(back.pressure.values(), snap.pressure.values());
        assert_eq!(encode_state(&back, Some(0.01)), bytes);

        let truncated = &bytes[..bytes.len() - 8];
        assert!(matches!(
            decode_state(truncated, &geo, Path::new("mem")),
            Err(AcnsError::CorruptSnapshot { .. })
        ));
    }
}
