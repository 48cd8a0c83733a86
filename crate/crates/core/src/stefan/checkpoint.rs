//! Binary checkpoints, little-endian:
//!
//! ```text
//! "FAVZ1" | topology u8 (0 strip, 1 torus) | M u32 | k u64
//! | z: M² f64 | u: M² f64 | activated: M² u8
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::multigrid::{GridField, Topology};

const MAGIC: &[u8; 5] = b"FAVZ1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub k: u64,
    pub z: GridField,
    pub u: GridField,
    pub activated: Vec<bool>,
}

pub fn write_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let m = ck.z.m();
    if ck.u.m() != m || ck.activated.len() != m * m {
        return Err(Error::Checkpoint("inconsistent field sizes".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&[match ck.z.topology() {
        Topology::Strip => 0,
        Topology::Torus => 1,
    }])?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&ck.k.to_le_bytes())?;
    for field in [&ck.z, &ck.u] {
        for v in field.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    let flags: Vec<u8> = ck.activated.iter().map(|&a| a as u8).collect();
    w.write_all(&flags)?;
    w.flush()?;
    Ok(())
}

fn read_exact<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_field(r: &mut impl Read, m: usize, topology: Topology) -> Result<GridField> {
    let mut bytes = vec![0u8; m * m * 8];
    r.read_exact(&mut bytes).map_err(|e| Error::Checkpoint(format!("truncated field: {e}")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    GridField::from_vec(m, topology, data)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    if &read_exact::<5>(&mut r)? != MAGIC {
        return Err(Error::Checkpoint("missing FAVZ1 header".into()));
    }
    let topology = match read_exact::<1>(&mut r)?[0] {
        0 => Topology::Strip,
        1 => Topology::Torus,
        t => return Err(Error::Checkpoint(format!("unknown topology tag {t}"))),
    };
    let m = u32::from_le_bytes(read_exact(&mut r)?) as usize;
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::Checkpoint(format!("bad grid size {m}")));
    }
    let k = u64::from_le_bytes(read_exact(&mut r)?);
    let z = read_field(&mut r, m, topology)?;
    let u = read_field(&mut r, m, topology)?;
    let mut flags = vec![0u8; m * m];
    r.read_exact(&mut flags).map_err(|e| Error::Checkpoint(format!("truncated flags: {e}")))?;
    let activated = flags
        .into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Checkpoint(format!("bad activation flag {other}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok(Checkpoint { k, z, u, activated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoefficientField;
    use crate::stefan::{BbrSolver, RunParams};

    #[test]
    fn resume_matches_uninterrupted_run() {
        let g = CoefficientField::from_spec("g1").unwrap().rescaled(0.25).unwrap();
        let p = RunParams::new(32, -0.8);
        let mut straight = BbrSolver::strip(p.clone(), g.clone()).unwrap();
        for _ in 0..40 {
            straight.step().unwrap();
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.favz");
        let mut first = BbrSolver::strip(p.clone(), g.clone()).unwrap();
        for _ in 0..17 {
            first.step().unwrap();
        }
        write_checkpoint(&first.checkpoint(), &path).unwrap();
        let ck = read_checkpoint(&path).unwrap();
        assert_eq!(ck, first.checkpoint());

        let mut resumed = BbrSolver::strip(p, g).unwrap();
        resumed.restore(ck).unwrap();
        for _ in 17..40 {
            resumed.step().unwrap();
        }
        assert_eq!(resumed.state().z, straight.state().z);
        assert_eq!(resumed.state().u, straight.state().u);
        assert_eq!(resumed.state().k, 40);
    }

    #[test]
    fn corrupt_files_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad");
        std::fs::write(&path, b"FAVZ2xxxxxxxx").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
        std::fs::write(&path, b"FAVZ1\x00\x08\x00\x00\x00").unwrap();
        assert!(matches!(read_checkpoint(&path), Err(Error::Checkpoint(_))));
    }
}
