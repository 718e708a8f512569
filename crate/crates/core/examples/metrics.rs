//! Hausdorff distance and IoGT between two meshes.
//!
//!     cargo run --release --example metrics -- [generated.obj ground_truth.obj]

use shapecraft::geometry::io::read_obj;
use shapecraft::geometry::primitives::{cube, uv_sphere};
use shapecraft::geometry::Mesh;
use shapecraft::metrics::{hausdorff, iogt, sample_points, DEFAULT_SAMPLE_POINTS, DEFAULT_VOXEL_RES};

fn load(p: &str) -> Result<Mesh, Box<dyn std::error::Error>> {
    Ok(Mesh::concat(&read_obj(&std::fs::read_to_string(p)?)?))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (gen, gt) = match args.as_slice() {
        [a, b] => (load(a)?, load(b)?),
        _ => (uv_sphere(32, 16), cube()),
    };
    let a = sample_points(&gen, DEFAULT_SAMPLE_POINTS, 0)?;
    let b = sample_points(&gt, DEFAULT_SAMPLE_POINTS, 1)?;
    println!("hausdorff {:.4}", hausdorff(&a, &b)?);
    for res in [16, 32, DEFAULT_VOXEL_RES] {
        println!("iogt@{res:<3} {:.4}", iogt(&gen, &gt, res)?);
    }
    Ok(())
}
