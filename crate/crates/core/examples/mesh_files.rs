//! OBJ/OFF round trip through a temporary directory.

use spectral_mesh::mesh::{load_mesh, save_mesh, shapes, MeshFormat};

fn main() -> spectral_mesh::Result<()> {
    let mesh = shapes::icosphere(3);
    let dir = std::env::temp_dir();
    for (ext, format) in [("obj", MeshFormat::Obj), ("off", MeshFormat::Off)] {
        let path = dir.join(format!("gsp_example.{ext}"));
        save_mesh(&mesh, &path, format)?;
        let back = load_mesh(&path, format)?;
        println!(
            "{}: {} vertices, {} faces",
            path.display(),
            back.vertex_count(),
            back.face_count()
        );
        let _ = std::fs::remove_file(path);
    }
    Ok(())
}
