//! Surface mesh export of the r = 1 pipe surface.
//!
//! OBJ output welds the θ seam always and the ω seam when the pipe is
//! periodic, producing quad faces wound counter-clockwise seen from outside.
//! VTK output is a legacy ASCII structured grid of (M+1)×(N+1) points with
//! optional point scalars, which viewers handle without connectivity tricks.

use std::io::Write;

use super::{surface_point, BoundaryMode, PipeGeometry};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Vtk,
}

fn omega_nodes(pipe: &PipeGeometry, n: usize) -> Vec<f64> {
    let (wl, wr) = pipe.centerline().domain();
    (0..=n)
        .map(|j| wl + (wr - wl) * j as f64 / n as f64)
        .collect()
}

/// Writes the surface mesh of `surface_point(1, θ_i, ω_j)` on an M×N grid.
pub fn export_mesh(
    pipe: &PipeGeometry,
    m: usize,
    n: usize,
    format: MeshFormat,
    out: &mut dyn Write,
) -> Result<()> {
    export_mesh_impl(pipe, m, n, format, None, out)
}

/// Same mesh with one scalar field sampled at the unwelded nodes
/// `(θ_i, ω_j)`, i = 0..=M, j = 0..=N. Only VTK carries point data; for OBJ
/// the field is ignored.
pub fn export_mesh_with_scalar(
    pipe: &PipeGeometry,
    m: usize,
    n: usize,
    format: MeshFormat,
    field_name: &str,
    value_at: &dyn Fn(usize, usize) -> f64,
    out: &mut dyn Write,
) -> Result<()> {
    export_mesh_impl(pipe, m, n, format, Some((field_name, value_at)), out)
}

fn export_mesh_impl(
    pipe: &PipeGeometry,
    m: usize,
    n: usize,
    format: MeshFormat,
    scalar: Option<(&str, &dyn Fn(usize, usize) -> f64)>,
    out: &mut dyn Write,
) -> Result<()> {
    assert!(m >= 3 && n >= 1, "mesh needs at least 3 x 1 cells");
    let htheta = 2.0 * std::f64::consts::PI / m as f64;
    let omegas = omega_nodes(pipe, n);
    match format {
        MeshFormat::Obj => {
            let periodic = pipe.boundary_mode() == BoundaryMode::PeriodicOmega;
            let rings = if periodic { n } else { n + 1 };
            writeln!(out, "# pipe surface, {m} x {n} cells")?;
            writeln!(out, "o pipe")?;
            for (j, &w) in omegas.iter().take(rings).enumerate() {
                let _ = j;
                for i in 0..m {
                    let x = surface_point(pipe, 1.0, htheta * i as f64, w);
                    writeln!(out, "v {:.17} {:.17} {:.17}", x.x, x.y, x.z)?;
                }
            }
            // 1-based ids, θ index fastest; CCW from outside because the
            // volumetric Jacobian is positive (x_θ × x_ω points outward).
            let vid = |i: usize, j: usize| (j % rings) * m + (i % m) + 1;
            for j in 0..n {
                for i in 0..m {
                    writeln!(
                        out,
                        "f {} {} {} {}",
                        vid(i, j),
                        vid(i + 1, j),
                        vid(i + 1, j + 1),
                        vid(i, j + 1)
                    )?;
                }
            }
        }
        MeshFormat::Vtk => {
            let np = (m + 1) * (n + 1);
            writeln!(out, "# vtk DataFile Version 3.0")?;
            writeln!(out, "pipe surface, {m} x {n} cells")?;
            writeln!(out, "ASCII")?;
            writeln!(out, "DATASET STRUCTURED_GRID")?;
            writeln!(out, "DIMENSIONS {} {} 1", m + 1, n + 1)?;
            writeln!(out, "POINTS {np} double")?;
            for &w in &omegas {
                for i in 0..=m {
                    let x = surface_point(pipe, 1.0, htheta * (i % m) as f64, w);
                    writeln!(out, "{:.17} {:.17} {:.17}", x.x, x.y, x.z)?;
                }
            }
            if let Some((name, value_at)) = scalar {
                writeln!(out, "POINT_DATA {np}")?;
                writeln!(out, "SCALARS {name} double 1")?;
                writeln!(out, "LOOKUP_TABLE default")?;
                for j in 0..=n {
                    for i in 0..=m {
                        writeln!(out, "{:.17}", value_at(i, j))?;
                    }
                }
            }
        }
    }
    Ok(())
}
