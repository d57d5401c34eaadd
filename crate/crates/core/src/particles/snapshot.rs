//! Binary state dumps: magic "SOHKIT1", N and d as little-endian u64, then
//! positions (N x d) and velocities (N x d) or attitudes (N x 9, row-major),
//! all little-endian f64.

use std::io::{Read, Write};

use super::{BodyEnsemble, ParticleEnsemble};
use crate::error::{invalid, Result};
use crate::geometry::RotationMatrix;

pub const MAGIC: &[u8; 7] = b"SOHKIT1";

#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotState {
    Velocities(Vec<f64>),
    Attitudes(Vec<[f64; 9]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub d: usize,
    pub x: Vec<f64>,
    pub state: SnapshotState,
}

impl From<&ParticleEnsemble> for Snapshot {
    fn from(e: &ParticleEnsemble) -> Self {
        Snapshot { n: e.len(), d: e.d, x: e.x.clone(), state: SnapshotState::Velocities(e.v.clone()) }
    }
}

impl From<&BodyEnsemble> for Snapshot {
    fn from(e: &BodyEnsemble) -> Self {
        let a = e.a.iter().map(row_major).collect();
        Snapshot { n: e.len(), d: 3, x: e.x.clone(), state: SnapshotState::Attitudes(a) }
    }
}

fn row_major(r: &RotationMatrix) -> [f64; 9] {
    let m = r.matrix();
    std::array::from_fn(|k| m[(k / 3, k % 3)])
}

pub fn write_snapshot(w: &mut impl Write, s: &Snapshot) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(s.n as u64).to_le_bytes())?;
    w.write_all(&(s.d as u64).to_le_bytes())?;
    for v in &s.x {
        w.write_all(&v.to_le_bytes())?;
    }
    match &s.state {
        SnapshotState::Velocities(v) => {
            for a in v {
                w.write_all(&a.to_le_bytes())?;
            }
        }
        SnapshotState::Attitudes(a) => {
            for m in a {
                for e in m {
                    w.write_all(&e.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a snapshot; the state kind is inferred from the payload length.
pub fn read_snapshot(r: &mut impl Read) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| invalid(format!("read failed: {e}")))?;
    if bytes.len() < 23 || &bytes[..7] != MAGIC {
        return Err(invalid("not a snapshot file"));
    }
    let n = u64::from_le_bytes(bytes[7..15].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[15..23].try_into().unwrap()) as usize;
    let floats: Vec<f64> = bytes[23..]
        .chunks(8)
        .map(|c| c.try_into().map(f64::from_le_bytes))
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| invalid("truncated snapshot"))?;
    let nx = n * d;
    if floats.len() == 2 * nx {
        Ok(Snapshot { n, d, x: floats[..nx].to_vec(), state: SnapshotState::Velocities(floats[nx..].to_vec()) })
    } else if d == 3 && floats.len() == nx + 9 * n {
        let a = floats[nx..].chunks(9).map(|c| c.try_into().unwrap()).collect();
        Ok(Snapshot { n, d, x: floats[..nx].to_vec(), state: SnapshotState::Attitudes(a) })
    } else {
        Err(invalid("snapshot payload does not match N and d"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::particles::{InitialCondition, SimConfig};

    #[test]
    fn round_trip() {
        let cfg = SimConfig {
            n: 5,
            l: 4.0,
            r: 1.0,
            nu: 1.0,
            tau: 1.0,
            dt: 0.01,
            d: 3,
            seed: 3,
            initial: InitialCondition::Uniform,
        };
        for s in [
            Snapshot::from(&ParticleEnsemble::initialize(&cfg).unwrap()),
            Snapshot::from(&BodyEnsemble::initialize(&cfg).unwrap()),
        ] {
            let mut buf = Vec::new();
            write_snapshot(&mut buf, &s).unwrap();
            assert_eq!(&buf[..7], b"SOHKIT1");
            assert_eq!(read_snapshot(&mut buf.as_slice()).unwrap(), s);
        }
        assert!(read_snapshot(&mut &b"SOHKIT2xxxxxxxxxxxxxxxx"[..]).is_err());
    }
}
