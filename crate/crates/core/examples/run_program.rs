//! Runs a shape program and writes its objects as OBJ groups. Diagnostics
//! are printed in the same `line N: severity: message` form the Coder sees.
//!
//!     cargo run --example run_program -- [program.dsl] [out.obj]

use shapecraft::geometry::io::write_obj;
use shapecraft::program::{render_diagnostics, run_source, DEFAULT_STATEMENT_BUDGET};

const STOOL: &str = r#"# A three-legged stool.
seat = cylinder(name="seat", vertices=32, radius=1, depth=0.15, position=(0, 0, 1))
Modifiers.bevel(seat, width=0.03, segments=2)
leg = cylinder(name="leg", vertices=12, radius=0.07, depth=1, position=(0.7, 0, 0.5))
Modifiers.array(leg, count=2, relative_offset=(-10, 0, 0))
brace = cube(name="brace", scale=(0.7, 0.04, 0.04), position=(0, 0, 0.3))
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let src = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => STOOL.to_string(),
    };
    let out = args.next().unwrap_or_else(|| "program.obj".into());
    match run_source(&src, DEFAULT_STATEMENT_BUDGET) {
        Ok(scene) => {
            print!("{}", render_diagnostics(&scene.warnings));
            let parts: Vec<_> = scene.solid_objects().map(|(k, m)| m.clone().with_tag(k.as_str())).collect();
            for p in &parts {
                println!("{:<8} {} triangles", p.component_tag.as_deref().unwrap_or(""), p.triangles.len());
            }
            std::fs::write(&out, write_obj(&parts))?;
            println!("wrote {out}");
        }
        Err(diags) => {
            eprint!("{}", render_diagnostics(&diags));
            std::process::exit(1);
        }
    }
    Ok(())
}
