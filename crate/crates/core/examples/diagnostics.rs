//! What the interpreter reports for broken programs.
//!
//!     cargo run --example diagnostics

use shapecraft::program::{render_diagnostics, run_source};

fn main() {
    let cases = [
        ("syntax", "a = cube(scale=(1, 2, 3)\n"),
        ("unknown builtin", "t = torus(radius=1)\n"),
        ("text is not available", "label = text(body=\"hi\")\n"),
        ("unbound name", "a = cube()\nModifiers.bevel(b, width=0.1)\n"),
        ("missing argument", "a = cube()\nModifiers.boolean(a, operation='UNION')\n"),
        ("wrong type", "a = sphere(segments=\"many\")\n"),
        ("kernel", "a = sphere(segments=2)\n"),
        ("unknown keyword (warning only)", "a = cube(colour=\"red\")\n"),
    ];
    for (what, src) in cases {
        println!("== {what}\n{src}--");
        match run_source(src, 100) {
            Ok(scene) if scene.warnings.is_empty() => println!("ok"),
            Ok(scene) => print!("{}", render_diagnostics(&scene.warnings)),
            Err(d) => print!("{}", render_diagnostics(&d)),
        }
        println!();
    }
    let budget = "a = cube()\nb = cube()\nc = cube()\n";
    println!("== statement budget of 2\n{budget}--");
    print!("{}", render_diagnostics(&run_source(budget, 2).unwrap_err()));
}
