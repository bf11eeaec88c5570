//! Binary container and CSV export for grid forms.
//!
//! Container layout (all integers and floats little-endian):
//!
//! | bytes            | content                                         |
//! |------------------|-------------------------------------------------|
//! | 4                | magic `HDGF`                                    |
//! | 4                | format version `u32` (= 1)                      |
//! | 4 × 3            | `n`, `k`, `N` as `u32`                           |
//! | 4                | kind `u32`: 0 box, 1 half-ball, 2 ball          |
//! | 8 × n            | shape (nodes per axis) as `u64`                 |
//! | 8 × n            | spacing `h` per axis as `f64`                   |
//! | 8 × n            | origin (coordinates of lattice index 0) `f64`   |
//! | 8 + 8 × n        | radius and centre (`f64`; zeros for boxes)      |
//! | ⌈L/8⌉            | mask bits for the `L` lattice points, LSB first |
//! | 8 × A × N·C(n,k) | coefficients of the `A` active nodes, row-major |
//!
//! Coefficients are stored node by node in lattice order, each node's
//! `N·C(n,k)` values component-major over lexicographic multi-indices.

use std::io::{Read, Write};
use std::sync::Arc;

use super::domain::{DomainKind, GridDomain};
use super::field::DiscreteForm;
use super::GridError;
use crate::forms::Signature;

const MAGIC: &[u8; 4] = b"HDGF";
const VERSION: u32 = 1;

pub fn write_container(u: &DiscreteForm, mut w: impl Write) -> Result<(), GridError> {
    let d = u.domain();
    let sig = u.signature();
    let n = d.dim();
    w.write_all(MAGIC)?;
    for v in [VERSION, n as u32, sig.degree as u32, sig.multiplicity as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    let (kind, radius, center) = match d.kind() {
        DomainKind::Box => (0u32, 0.0, vec![0.0; n]),
        DomainKind::HalfBall { radius, center } => (1, *radius, center.clone()),
        DomainKind::Ball { radius, center } => (2, *radius, center.clone()),
    };
    w.write_all(&kind.to_le_bytes())?;
    for &m in d.shape() {
        w.write_all(&(m as u64).to_le_bytes())?;
    }
    for &x in d.spacing().iter().chain(d.origin()).chain(std::iter::once(&radius)).chain(center.iter()) {
        w.write_all(&x.to_le_bytes())?;
    }
    let mut bits = vec![0u8; d.lattice_len().div_ceil(8)];
    for (g, &m) in d.mask().iter().enumerate() {
        if m {
            bits[g / 8] |= 1 << (g % 8);
        }
    }
    w.write_all(&bits)?;
    for v in u.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, GridError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64, GridError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64, GridError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_container(mut r: impl Read) -> Result<DiscreteForm, GridError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(GridError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(GridError::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let k = read_u32(&mut r)? as usize;
    let mult = read_u32(&mut r)? as usize;
    let kind = read_u32(&mut r)?;
    if n == 0 || n > crate::forms::basis::MAX_DIM {
        return Err(GridError::Format(format!("dimension {n} out of range")));
    }
    let shape = (0..n).map(|_| read_u64(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
    let spacing = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
    let origin = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
    let radius = read_f64(&mut r)?;
    let center = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
    let cells = |axis: usize| shape[axis] - 1;
    let domain = match kind {
        0 => {
            let upper: Vec<f64> = (0..n).map(|a| origin[a] + spacing[a] * cells(a) as f64).collect();
            GridDomain::boxed(&origin, &upper, &shape)?
        }
        1 => GridDomain::half_ball(n, radius, cells(0))?,
        2 => GridDomain::ball(n, radius, cells(0))?,
        other => return Err(GridError::Format(format!("unknown domain kind {other}"))),
    };
    if kind != 0 && center.iter().any(|&c| c != 0.0) {
        return Err(GridError::Format("only origin-centred balls are supported".into()));
    }
    let mut bits = vec![0u8; domain.lattice_len().div_ceil(8)];
    r.read_exact(&mut bits)?;
    let mask_ok = domain.mask().iter().enumerate().all(|(g, &m)| (bits[g / 8] >> (g % 8) & 1 == 1) == m);
    if !mask_ok {
        return Err(GridError::Format("mask does not match the domain geometry".into()));
    }
    let sig = Signature::new(n, k, mult);
    let count = domain.len() * sig.len();
    let values = (0..count).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>, _>>()?;
    DiscreteForm::from_values(Arc::new(domain), sig, values)
}

/// CSV of a 2-D slice through axes `(row_axis, col_axis)` with the other axes
/// fixed at lattice indices `fixed`. Columns: `x_<row>,x_<col>,c0,c1,…`.
pub fn write_csv_slice(
    u: &DiscreteForm,
    axes: (usize, usize),
    fixed: &[usize],
    mut w: impl Write,
) -> Result<(), GridError> {
    let d = u.domain();
    let n = d.dim();
    let l = u.signature().len();
    write!(w, "x{},x{}", axes.0, axes.1)?;
    for c in 0..l {
        write!(w, ",c{c}")?;
    }
    writeln!(w)?;
    for p in 0..d.len() {
        let idx = d.multi_index(p);
        let on_slice = (0..n).filter(|&a| a != axes.0 && a != axes.1).all(|a| fixed.get(a).copied().unwrap_or(0) == idx[a]);
        if !on_slice {
            continue;
        }
        let x = d.coords(p);
        write!(w, "{:.12e},{:.12e}", x[axes.0], x[axes.1])?;
        for v in u.node_slice(p) {
            write!(w, ",{v:.12e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_roundtrip() {
        for d in [GridDomain::unit_box(2, 5).unwrap(), GridDomain::half_ball(2, 1.0, 8).unwrap()] {
            let d = Arc::new(d);
            let u = DiscreteForm::from_fn(d, Signature::new(2, 1, 2), |x| vec![x[0], x[1], x[0] * x[1], 1.0]);
            let mut buf = Vec::new();
            write_container(&u, &mut buf).unwrap();
            let v = read_container(buf.as_slice()).unwrap();
            assert_eq!(u.values(), v.values());
            assert!(u.domain().same_lattice(v.domain()));
        }
    }

    #[test]
    fn corrupt_magic_rejected() {
        assert!(read_container(&b"XXXX"[..]).is_err());
    }

    #[test]
    fn csv_slice_rows() {
        let d = Arc::new(GridDomain::unit_box(3, 3).unwrap());
        let u = DiscreteForm::zeros(d, Signature::new(3, 0, 1));
        let mut buf = Vec::new();
        write_csv_slice(&u, (0, 1), &[0, 0, 1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
    }
}
