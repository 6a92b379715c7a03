//! Ensemble checkpoints.
//!
//! Layout, all little-endian:
//! magic `OATWENS1` (8 bytes), version u32,
//! grid kind u8 (0 line, 1 cylinder), n_axial u64, z_min f64, z_max f64,
//! then for cylinders n_radial u64, r_max f64,
//! frame u8 (0 lab, 1 co-moving), time f64, n_traj u64, seed_root u64,
//! then per trajectory: stream id u64, component 1 as (re, im) f64 pairs, component 2 likewise.

use super::TrajectoryEnsemble;
use crate::error::{Error, Result};
use crate::grid::{CylGrid, Geometry, Grid1D};
use crate::state::{FieldState2, Frame};
use num_complex::Complex64;
use std::io::{Read, Write};

const MAGIC: &[u8; 8] = b"OATWENS1";
const VERSION: u32 = 1;

fn bad(msg: &str) -> Error {
    Error::Checkpoint(msg.to_string())
}

pub fn write_checkpoint<W: Write>(ens: &TrajectoryEnsemble, mut w: W) -> Result<()> {
    ens.check()?;
    let first = &ens.samples[0];
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let ax = first.geometry.axial();
    let kind: u8 = if matches!(first.geometry, Geometry::Line(_)) { 0 } else { 1 };
    w.write_all(&[kind])?;
    w.write_all(&(ax.n_points as u64).to_le_bytes())?;
    w.write_all(&ax.z_min.to_le_bytes())?;
    w.write_all(&ax.z_max.to_le_bytes())?;
    if let Geometry::Cylinder(g) = &first.geometry {
        w.write_all(&(g.n_radial as u64).to_le_bytes())?;
        w.write_all(&g.r_max.to_le_bytes())?;
    }
    w.write_all(&[u8::from(first.frame == Frame::CoMoving)])?;
    w.write_all(&first.time.to_le_bytes())?;
    w.write_all(&(ens.n_traj() as u64).to_le_bytes())?;
    w.write_all(&ens.seed_root.to_le_bytes())?;
    for (s, id) in ens.samples.iter().zip(&ens.stream_ids) {
        w.write_all(&id.to_le_bytes())?;
        for c in s.psi1.iter().chain(&s.psi2) {
            w.write_all(&c.re.to_le_bytes())?;
            w.write_all(&c.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

struct Rd<R>(R);

impl<R: Read> Rd<R> {
    fn bytes<const K: usize>(&mut self) -> Result<[u8; K]> {
        let mut b = [0u8; K];
        self.0.read_exact(&mut b).map_err(|_| bad("truncated file"))?;
        Ok(b)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_checkpoint<R: Read>(r: R) -> Result<TrajectoryEnsemble> {
    let mut r = Rd(r);
    if &r.bytes::<8>()? != MAGIC {
        return Err(bad("not an ensemble checkpoint"));
    }
    let version = u32::from_le_bytes(r.bytes()?);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let kind = r.bytes::<1>()?[0];
    let nz = r.u64()? as usize;
    let (z0, z1) = (r.f64()?, r.f64()?);
    let axial = Grid1D::new(nz, z0, z1).map_err(|e| bad(&e.to_string()))?;
    let geometry = match kind {
        0 => Geometry::line(axial),
        1 => {
            let nr = r.u64()? as usize;
            let rmax = r.f64()?;
            Geometry::cylinder(CylGrid::new(nr, rmax, axial).map_err(|e| bad(&e.to_string()))?)
        }
        _ => return Err(bad("unknown grid kind")),
    };
    let frame = if r.bytes::<1>()?[0] == 1 { Frame::CoMoving } else { Frame::Lab };
    let time = r.f64()?;
    let n_traj = r.u64()? as usize;
    let seed_root = r.u64()?;
    let len = geometry.len();
    let mut samples = Vec::with_capacity(n_traj);
    let mut ids = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        ids.push(r.u64()?);
        let mut read_field = || -> Result<Vec<Complex64>> {
            (0..len).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect()
        };
        let psi1 = read_field()?;
        let psi2 = read_field()?;
        let mut s = FieldState2::vacuum(geometry.clone());
        s.psi1 = psi1;
        s.psi2 = psi2;
        s.frame = frame;
        s.time = time;
        samples.push(s);
    }
    let ens = TrajectoryEnsemble { samples, stream_ids: ids, seed_root };
    ens.check()?;
    Ok(ens)
}
