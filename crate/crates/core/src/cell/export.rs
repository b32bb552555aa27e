//! Export of voxel fields: flat little-endian binary over the bounding box, CSV
//! slices and JSON far-field reports.
//!
//! Binary layout: three `u64` dimensions `(n1, n2, n3)`, the voxel size and the
//! origin (centre of the first voxel) as `f64`, then `n1 n2 n3` values in row-major
//! order (last index fastest). Voxels outside the domain hold NaN.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::mesh::VoxelMesh;
use super::operator::FarFieldReport;

/// Field resampled on the bounding box of a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseField {
    pub dims: [usize; 3],
    pub hv: f64,
    pub origin: [f64; 3],
    pub values: Vec<f64>,
}

impl DenseField {
    pub fn from_mesh(mesh: &VoxelMesh, u: &[f64]) -> Result<Self> {
        if u.len() != mesh.n_voxels() {
            return Err(Error::InvalidInput("field length does not match the mesh".into()));
        }
        Self::from_lattice(&mesh.index, -mesh.spec.ell0, mesh.hv(), u, |_| true)
    }

    /// Resamples the voxels selected by `keep` on their bounding box. Lattice index
    /// `q` has its centre at `corner + (q + 1/2) hv` along every axis.
    pub fn from_lattice(
        index: &[[i64; 3]],
        corner: f64,
        hv: f64,
        u: &[f64],
        keep: impl Fn(usize) -> bool,
    ) -> Result<Self> {
        if u.len() != index.len() {
            return Err(Error::InvalidInput("field length does not match the lattice".into()));
        }
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for q in index.iter().enumerate().filter(|(v, _)| keep(*v)).map(|(_, q)| q) {
            for a in 0..3 {
                lo[a] = lo[a].min(q[a]);
                hi[a] = hi[a].max(q[a]);
            }
        }
        if lo[0] > hi[0] {
            return Err(Error::InvalidInput("no voxels selected for export".into()));
        }
        let dims = [0, 1, 2].map(|a| (hi[a] - lo[a] + 1) as usize);
        let mut values = vec![f64::NAN; dims[0] * dims[1] * dims[2]];
        for (v, (q, x)) in index.iter().zip(u).enumerate() {
            if !keep(v) {
                continue;
            }
            let i = [0, 1, 2].map(|a| (q[a] - lo[a]) as usize);
            values[(i[0] * dims[1] + i[1]) * dims[2] + i[2]] = *x;
        }
        let origin = lo.map(|l| corner + (l as f64 + 0.5) * hv);
        Ok(Self { dims, hv, origin, values })
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        for d in self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        w.write_all(&self.hv.to_le_bytes())?;
        for o in self.origin {
            w.write_all(&o.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut u = || -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let dims = [u()? as usize, u()? as usize, u()? as usize];
        let hv = f64::from_bits(u()?);
        let origin = [f64::from_bits(u()?), f64::from_bits(u()?), f64::from_bits(u()?)];
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidInput("corrupt field header".into()))?;
        let values = (0..n).map(|_| u().map(f64::from_bits)).collect::<Result<_>>()?;
        Ok(Self { dims, hv, origin, values })
    }
}

/// Writes a voxel field in the flat binary layout.
pub fn write_field_binary(path: &Path, mesh: &VoxelMesh, u: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    DenseField::from_mesh(mesh, u)?.write(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Writes the voxels whose centre lies in the plane `x_axis = coordinate` (nearest
/// voxel layer) as `x1,x2,x3,value`.
pub fn write_field_slice_csv(
    path: &Path,
    mesh: &VoxelMesh,
    u: &[f64],
    axis: usize,
    coordinate: f64,
) -> Result<()> {
    if axis > 2 {
        return Err(Error::InvalidInput(format!("axis {axis} outside 0..=2")));
    }
    let hv = mesh.hv();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x1", "x2", "x3", "value"])?;
    for (c, v) in mesh.centers.iter().zip(u) {
        if (c[axis] - coordinate).abs() <= 0.5 * hv + 1e-12 && c[axis] - coordinate < 0.5 * hv {
            w.write_record([c[0], c[1], c[2], *v].map(|x| x.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_far_field_json(path: &Path, report: &FarFieldReport) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}
