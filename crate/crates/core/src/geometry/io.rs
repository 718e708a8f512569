//! Wavefront OBJ and binary STL.

use std::io::{self, Write};

use super::math::Vec3;
use super::mesh::Mesh;

#[derive(Debug, thiserror::Error)]
pub enum MeshIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// ASCII OBJ with one `o` group per component. Untagged components are
/// named `object_<n>`.
pub fn write_obj(components: &[Mesh]) -> String {
    let mut out = String::new();
    let mut base = 1usize;
    for (i, m) in components.iter().enumerate() {
        let name = m.component_tag.clone().unwrap_or_else(|| format!("object_{i}"));
        out.push_str(&format!("o {name}\n"));
        for v in &m.vertices {
            out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
        }
        for t in &m.triangles {
            out.push_str(&format!(
                "f {} {} {}\n",
                t[0] as usize + base,
                t[1] as usize + base,
                t[2] as usize + base
            ));
        }
        base += m.vertices.len();
    }
    out
}

/// Reads an OBJ into one mesh per `o`/`g` group (faces before any group go
/// into an untagged mesh). Polygons are fan-triangulated.
pub fn read_obj(text: &str) -> Result<Vec<Mesh>, MeshIoError> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut groups: Vec<(Option<String>, Vec<[usize; 3]>)> = vec![(None, Vec::new())];
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut parts = content.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        match tag {
            "v" => {
                let coords: Result<Vec<f64>, _> = parts.take(3).map(str::parse::<f64>).collect();
                match coords {
                    Ok(c) if c.len() == 3 && c.iter().all(|x| x.is_finite()) => {
                        positions.push(Vec3::new(c[0], c[1], c[2]))
                    }
                    _ => {
                        return Err(MeshIoError::Parse {
                            line,
                            message: "vertex needs three finite coordinates".into(),
                        })
                    }
                }
            }
            "f" => {
                let mut idx = Vec::new();
                for p in parts {
                    let first = p.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| MeshIoError::Parse {
                        line,
                        message: format!("bad face index '{p}'"),
                    })?;
                    let resolved = if i > 0 {
                        i as usize - 1
                    } else if i < 0 && (-i) as usize <= positions.len() {
                        positions.len() - (-i) as usize
                    } else {
                        return Err(MeshIoError::Parse {
                            line,
                            message: format!("face index {i} out of range"),
                        });
                    };
                    if resolved >= positions.len() {
                        return Err(MeshIoError::Parse {
                            line,
                            message: format!("face index {i} out of range"),
                        });
                    }
                    idx.push(resolved);
                }
                if idx.len() < 3 {
                    return Err(MeshIoError::Parse {
                        line,
                        message: "face needs at least three vertices".into(),
                    });
                }
                let faces = &mut groups.last_mut().expect("at least one group").1;
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            "o" | "g" => {
                let name = parts.collect::<Vec<_>>().join(" ");
                groups.push((Some(name), Vec::new()));
            }
            _ => {}
        }
    }
    let mut meshes = Vec::new();
    for (name, faces) in groups {
        if faces.is_empty() {
            continue;
        }
        // keep the file's vertex order within each group
        let used: std::collections::BTreeSet<usize> = faces.iter().flatten().copied().collect();
        let remap: std::collections::HashMap<usize, u32> =
            used.iter().enumerate().map(|(new, &old)| (old, new as u32)).collect();
        let verts: Vec<Vec3> = used.iter().map(|&i| positions[i]).collect();
        let mut tris = Vec::new();
        for f in faces {
            let t = [remap[&f[0]], remap[&f[1]], remap[&f[2]]];
            if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                tris.push(t);
            }
        }
        let mut m = Mesh::new(verts, tris);
        m.component_tag = name;
        meshes.push(m);
    }
    Ok(meshes)
}

/// Binary STL of all components together.
pub fn write_stl(components: &[Mesh], mut w: impl Write) -> io::Result<()> {
    let mut header = [0u8; 80];
    let label = b"shapecraft binary stl";
    header[..label.len()].copy_from_slice(label);
    w.write_all(&header)?;
    let count: usize = components.iter().map(|m| m.triangles.len()).sum();
    w.write_all(&(count as u32).to_le_bytes())?;
    for m in components {
        for i in 0..m.triangles.len() {
            let n = m.face_cross(i).normalize_or_zero();
            for c in n.to_array() {
                w.write_all(&(c as f32).to_le_bytes())?;
            }
            for v in m.triangle(i) {
                for c in v.to_array() {
                    w.write_all(&(c as f32).to_le_bytes())?;
                }
            }
            w.write_all(&0u16.to_le_bytes())?;
        }
    }
    Ok(())
}
