//! Mean squared difference between block operator images of different models.

use spectral_mesh::mesh::shapes;
use spectral_mesh::metrics::{coherence_matrix, CoherenceConfig};

fn main() -> spectral_mesh::Result<()> {
    let models = [
        ("torus", shapes::torus(64, 32, 3.0, 1.0)),
        ("sphere", shapes::icosphere(4)),
        ("grid", shapes::grid(45, 45)),
    ];
    let refs: Vec<_> = models.iter().map(|(_, m)| m).collect();
    let mse = coherence_matrix(
        &refs,
        &CoherenceConfig {
            k: 6,
            ..Default::default()
        },
    )?;
    for ((name, _), row) in models.iter().zip(&mse) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:8.5}")).collect();
        println!("{name:>7}: {}", cells.join(" "));
    }
    Ok(())
}
