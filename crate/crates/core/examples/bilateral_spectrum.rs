//! The linear bilateral step as a graph filter: direct output versus its
//! spectral form, with the frequency response 1 - lambda.

use spectral_mesh::denoise::{
    bilateral_spectral_identity_check, bilateral_weight_matrix, face_rings,
};
use spectral_mesh::mesh::{face_geometry, shapes};

fn main() -> spectral_mesh::Result<()> {
    // Flat-grid centroids and areas keep the weight graph symmetric; the
    // normals come from a bumped copy.
    let mesh = shapes::grid(9, 9);
    let mut geometry = face_geometry(&mesh);
    geometry.normals = face_geometry(&shapes::bumpy(&mesh, 0.2, 2, 5)).normals;
    let weights = bilateral_weight_matrix(&geometry, &face_rings(&mesh, 1), 1.0, 0.35);
    let report = bilateral_spectral_identity_check(&geometry.normals, &weights)?;
    println!(
        "{} faces, max deviation {:.2e}",
        geometry.len(),
        report.max_deviation
    );
    let r = &report.response;
    println!("response at lowest frequencies {:.4?}", &r[..4]);
    println!("response at highest frequencies {:.4?}", &r[r.len() - 4..]);
    Ok(())
}
