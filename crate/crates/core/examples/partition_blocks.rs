//! Partition a mesh, grow equal-size overlapping blocks and print the layout.

use spectral_mesh::mesh::{build_edges, shapes};
use spectral_mesh::partition::overlap_boundary;
use spectral_mesh::pipeline::{BlockLayout, LayoutConfig};

fn main() -> spectral_mesh::Result<()> {
    let mesh = shapes::torus(80, 40, 3.0, 1.0);
    let edges = build_edges(&mesh);
    let layout = BlockLayout::build(
        &mesh,
        &edges,
        &LayoutConfig {
            k: 8,
            growth: 1.15,
            ..Default::default()
        },
    )?;
    println!(
        "{} vertices, part sizes {:?}",
        mesh.vertex_count(),
        layout.partition.sizes()
    );
    println!("block size n_d = {}", layout.n_d);
    println!("processing order {:?}", layout.order.sequence);
    let shared = overlap_boundary(&layout.submeshes, mesh.vertex_count())
        .iter()
        .filter(|&&b| b)
        .count();
    println!("{shared} vertices lie in more than one block");
    Ok(())
}
