//! Coarse spectral low-pass followed by bilateral normal filtering on a noisy cube.

use spectral_mesh::denoise::{coarse_denoise, fine_denoise, BilateralParams, DenoiseConfig};
use spectral_mesh::mesh::{add_gaussian_noise, shapes};
use spectral_mesh::metrics::{mesh_mnd, mesh_theta};
use spectral_mesh::pipeline::{LayoutConfig, SubspaceSize, TrackingConfig};

fn main() -> spectral_mesh::Result<()> {
    let clean = shapes::cube(16);
    let noisy = add_gaussian_noise(&clean, 0.2, 1)?;
    let cfg = DenoiseConfig {
        layout: LayoutConfig {
            k: 2,
            ..Default::default()
        },
        tracking: TrackingConfig {
            c: SubspaceSize::Fraction(0.3),
            ..Default::default()
        },
    };
    let coarse = coarse_denoise(&noisy, &cfg)?;
    let fine = fine_denoise(&coarse.mesh, &BilateralParams::default())?;
    for (name, m) in [
        ("noisy", &noisy),
        ("coarse", &coarse.mesh),
        ("fine", &fine.mesh),
    ] {
        println!(
            "{name:>6}: MND {:.4}, theta {:5.2} deg",
            mesh_mnd(&clean, m)?,
            mesh_theta(&clean, m)?
        );
    }
    println!("plane energy per vertex pass: {:?}", fine.energies);
    Ok(())
}
