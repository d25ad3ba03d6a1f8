//! On-disk field snapshots.
//!
//! Layout (little-endian, stable across versions):
//!
//! ```text
//! offset  size  content
//! 0       4     magic "EMRX"
//! 4       4     format version (u32, currently 1)
//! 8       4     dim (u32)
//! 12      4     points_per_dim (u32)
//! 16      4     component count (u32)
//! 20      8     domain length per dimension (f64)
//! 28      ...   components, each points_per_dim^dim f64 samples,
//!               row-major (last axis contiguous), component-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, SimError};
use crate::field::{ScalarField, VectorField};
use crate::grid::PeriodicGrid;

pub const MAGIC: &[u8; 4] = b"EMRX";
pub const VERSION: u32 = 1;

/// A snapshot payload: one or more scalar components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: PeriodicGrid,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn from_scalar(f: &ScalarField) -> Self {
        Self {
            grid: f.grid().clone(),
            components: vec![f.values().to_vec()],
        }
    }

    pub fn from_vector(v: &VectorField) -> Self {
        Self {
            grid: v.grid().clone(),
            components: v.components().iter().map(|c| c.values().to_vec()).collect(),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        if self.components.len() != 1 {
            return Err(SimError::SnapshotFormat(format!(
                "expected 1 component, found {}",
                self.components.len()
            )));
        }
        let mut comps = self.components;
        ScalarField::from_values(&self.grid, comps.pop().unwrap())
    }

    pub fn into_vector(self) -> Result<VectorField> {
        let fields = self
            .components
            .into_iter()
            .map(|c| ScalarField::from_values(&self.grid, c))
            .collect::<Result<Vec<_>>>()?;
        VectorField::from_components(fields)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_dim() as u32).to_le_bytes())?;
        w.write_all(&(self.components.len() as u32).to_le_bytes())?;
        w.write_all(&self.grid.domain_length().to_le_bytes())?;
        for comp in &self.components {
            for v in comp {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SimError::SnapshotFormat("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(SimError::SnapshotFormat(format!(
                "unsupported version {version}"
            )));
        }
        let dim = read_u32(&mut r)? as usize;
        let n = read_u32(&mut r)? as usize;
        let ncomp = read_u32(&mut r)? as usize;
        let length = read_f64(&mut r)?;
        let grid = PeriodicGrid::with_length(dim, n, length)?;
        let total = grid.total_points();
        let mut components = Vec::with_capacity(ncomp);
        for _ in 0..ncomp {
            let mut comp = Vec::with_capacity(total);
            for _ in 0..total {
                comp.push(read_f64(&mut r)?);
            }
            components.push(comp);
        }
        Ok(Self { grid, components })
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_scalar_and_vector() {
        let dir = std::env::temp_dir().join(format!("emrx-snap-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = PeriodicGrid::new(2, 8).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() + 0.5 * x[1].cos());
        let p = dir.join("f.field");
        Snapshot::from_scalar(&f).write(&p).unwrap();
        let back = Snapshot::read(&p).unwrap().into_scalar().unwrap();
        assert_eq!(back, f);

        let v = VectorField::from_fn(&g, |x, c| if c == 0 { x[1].sin() } else { -x[0].cos() });
        let pv = dir.join("v.field");
        Snapshot::from_vector(&v).write(&pv).unwrap();
        let backv = Snapshot::read(&pv).unwrap().into_vector().unwrap();
        assert_eq!(backv, v);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn header_layout_is_stable() {
        let dir = std::env::temp_dir().join(format!("emrx-hdr-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let g = PeriodicGrid::new(1, 8).unwrap();
        let f = ScalarField::constant(&g, 1.0);
        let p = dir.join("h.field");
        Snapshot::from_scalar(&f).write(&p).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(&bytes[0..4], b"EMRX");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 1);
        assert_eq!(bytes.len(), 28 + 8 * 8);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_truncated_files() {
        let dir = std::env::temp_dir().join(format!("emrx-trunc-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("bad.field");
        std::fs::write(&p, b"EMRX\x01\x00\x00").unwrap();
        assert!(Snapshot::read(&p).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
