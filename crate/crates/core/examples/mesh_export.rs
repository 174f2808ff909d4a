//! Writes the three meshes as legacy VTK files into a directory (default
//! `meshes`).

use std::path::PathBuf;

use ensemble_eev::mesh::{cavity_mesh, refine, step_channel_mesh, unit_square_mesh};

fn main() -> ensemble_eev::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "meshes".into()));
    std::fs::create_dir_all(&dir).map_err(|e| ensemble_eev::Error::Io { path: dir.clone(), source: e })?;
    let meshes = [
        ("unit_square", unit_square_mesh(8)?),
        ("step_channel", step_channel_mesh(1)?),
        ("step_channel_refined", refine(&step_channel_mesh(1)?)),
        ("cavity", cavity_mesh(16)?),
    ];
    for (name, mesh) in &meshes {
        let path = dir.join(format!("{name}.vtk"));
        mesh.write_vtk(&path)?;
        println!("{name}: {} cells, h = {:.3}, area {} -> {}", mesh.n_cells(), mesh.h_max, mesh.area(), path.display());
    }
    Ok(())
}
