//! Encode a mesh to the bitstream format, decode it and report rate and error.

use spectral_mesh::compress::{compress_mesh, decompress_mesh, CodecConfig, EncodedMesh};
use spectral_mesh::mesh::shapes;
use spectral_mesh::metrics::{mesh_theta, nmsve};
use spectral_mesh::pipeline::{LayoutConfig, SubspaceSize, TrackingConfig};

fn main() -> spectral_mesh::Result<()> {
    let mesh = shapes::bumpy(&shapes::torus(96, 48, 3.0, 1.0), 0.05, 4, 2);
    for frac in [0.05, 0.1, 0.2] {
        let cfg = CodecConfig {
            layout: LayoutConfig {
                k: 8,
                ..Default::default()
            },
            tracking: TrackingConfig {
                c: SubspaceSize::Fraction(frac),
                ..Default::default()
            },
            q_c: 12,
        };
        let out = compress_mesh(&mesh, &cfg)?;
        let bytes = out.encoded.to_bytes();
        let decoded = decompress_mesh(&EncodedMesh::from_bytes(&bytes)?)?;
        println!(
            "c = {:>4.0}%: {:6} bytes, {:5.2} bpv, NMSVE {:6.2} dB, theta {:5.2} deg",
            frac * 100.0,
            bytes.len(),
            out.encoded.bits_per_vertex(),
            nmsve(&mesh, &decoded)?,
            mesh_theta(&mesh, &decoded)?
        );
    }
    Ok(())
}
