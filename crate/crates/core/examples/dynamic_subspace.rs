//! Residual-driven subspace sizes: each block grows or shrinks c to keep its
//! reconstruction residual inside a band.

use spectral_mesh::mesh::{build_edges, shapes};
use spectral_mesh::pipeline::{
    track_bases, BasisMode, BlockLayout, DoiBand, LayoutConfig, SubspaceSize, TrackingConfig,
};

fn main() -> spectral_mesh::Result<()> {
    let mesh = shapes::bumpy(&shapes::torus(80, 40, 3.0, 1.0), 0.08, 6, 3);
    let edges = build_edges(&mesh);
    let layout = BlockLayout::build(
        &mesh,
        &edges,
        &LayoutConfig {
            k: 8,
            ..Default::default()
        },
    )?;
    let cfg = TrackingConfig {
        mode: BasisMode::Doi,
        c: SubspaceSize::Fraction(0.05),
        doi: DoiBand {
            eps_l: 2e-3,
            eps_h: 1e-2,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = track_bases(&mesh, &layout, &cfg)?;
    for r in &out.reports {
        println!(
            "block {:2}: c = {:3} after {:2} steps, {:?}",
            r.submesh, r.c, r.iterations, r.doi_status
        );
    }
    Ok(())
}
