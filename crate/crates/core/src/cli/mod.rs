//! Command-line front end. [`run`] takes the argument list and returns the
//! process exit code, so the binary is a one-liner and tests can drive it
//! directly.

pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::{AgentConfig, AgentError, Session};
use crate::executor::{assemble, Assembly, ExecOptions};
use crate::geometry::{io::read_obj, Mesh};
use crate::gps::{parse_graph_jsonl, serialize_graph, GpsGraph};
use crate::llm::{ChatBackend, HttpBackend, LlmError, RecordingBackend, ScriptedBackend};
use crate::metrics;
use crate::render::{encode_png, legend_text, preset_cameras, render, render_bboxes};

use config::{FileConfig, Overrides, Settings, CONFIG_FILE};

pub const GRAPH_FILE: &str = "graph.gps.jsonl";
pub const OBJ_FILE: &str = "assembled.obj";
pub const LOG_FILE: &str = "run_log.jsonl";
pub const PROMPT_FILE: &str = "prompt.txt";
pub const WARNINGS_FILE: &str = "warnings.txt";

#[derive(Debug, Parser)]
#[command(name = "shapecraft", version, about = "Text to structured 3D shapes through shape programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Args)]
pub struct Flags {
    /// Paths per node.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Refinement iterations per path.
    #[arg(long, global = true)]
    pub t: Option<usize>,
    /// Early-stopping score threshold (0-10).
    #[arg(long = "s-tau", global = true)]
    pub s_tau: Option<u8>,
    /// Bootstrapping rounds.
    #[arg(long = "n-bootstrap", global = true)]
    pub n_bootstrap: Option<usize>,
    #[arg(long, global = true)]
    pub temperature: Option<f64>,
    /// Output directory (run directory for `generate`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replay a transcript instead of calling a live backend.
    #[arg(long, global = true)]
    pub scripted: Option<PathBuf>,
    /// Log backend requests and responses (key redacted, images elided).
    #[arg(long, global = true)]
    pub trace: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "img-size", global = true)]
    pub img_size: Option<u32>,
    #[arg(long = "voxel-res", global = true)]
    pub voxel_res: Option<usize>,
    #[arg(long = "sample-points", global = true)]
    pub sample_points: Option<usize>,
    /// Fit programs into their bounds with one uniform scale.
    #[arg(long = "uniform-fit", global = true)]
    pub uniform_fit: bool,
    /// Config file (default: ./shapecraft.json when present).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full pipeline from a text description to an assembled mesh.
    Generate { prompt: String },
    /// Bounding boxes and bootstrapping for the graph in a run directory.
    Bboxes { run_dir: PathBuf },
    /// Multi-path modelling of every node in a run directory.
    Model { run_dir: PathBuf },
    /// Execute the graph in a run directory and write the assembled OBJ.
    Assemble { run_dir: PathBuf },
    /// Render an OBJ file or a run directory.
    Render { input: PathBuf },
    /// Compare a generated mesh with a ground-truth mesh.
    Metrics {
        generated: PathBuf,
        ground_truth: PathBuf,
        /// One yes/no question per line, asked against renders of the
        /// generated mesh.
        #[arg(long)]
        questions: Option<PathBuf>,
    },
    /// Change an existing result with a free-text instruction.
    Edit { run_dir: PathBuf, instruction: String },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Auth(String),
    #[error("{stage} failed: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("{0}")]
    NotCompiled(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Auth(_) => 2,
            CliError::Stage { .. } | CliError::NotCompiled(_) => 1,
        }
    }

    fn stage(stage: &'static str, e: AgentError) -> Self {
        match e {
            AgentError::Backend(LlmError::Auth(m)) => CliError::Auth(format!("authentication failed: {m}")),
            AgentError::Backend(LlmError::Config(m)) | AgentError::Config(m) => CliError::Config(m),
            other => CliError::Stage {
                stage,
                message: other.to_string(),
            },
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let settings = load_settings(&cli.flags)?;
    let f = &cli.flags;
    match &cli.command {
        Command::Generate { prompt } => {
            let out = f.out.clone().unwrap_or_else(|| PathBuf::from("run"));
            cmd_generate(prompt, &out, &settings, f)
        }
        Command::Bboxes { run_dir } => cmd_bboxes(run_dir, &settings, f),
        Command::Model { run_dir } => cmd_model(run_dir, &settings, f),
        Command::Assemble { run_dir } => {
            let graph = read_graph(run_dir)?;
            finish(run_dir, &graph, &settings, &[], OBJ_FILE)
        }
        Command::Render { input } => cmd_render(input, f.out.as_deref(), &settings),
        Command::Metrics {
            generated,
            ground_truth,
            questions,
        } => cmd_metrics(generated, ground_truth, questions.as_deref(), &settings, f),
        Command::Edit { run_dir, instruction } => cmd_edit(run_dir, instruction, &settings, f),
    }
}

fn load_settings(f: &Flags) -> Result<Settings, CliError> {
    let file = match &f.config {
        Some(p) => FileConfig::load(p).map_err(CliError::Config)?,
        None if Path::new(CONFIG_FILE).is_file() => FileConfig::load(Path::new(CONFIG_FILE)).map_err(CliError::Config)?,
        None => FileConfig::default(),
    };
    let flags = Overrides {
        m: f.m,
        t: f.t,
        s_tau: f.s_tau,
        n_bootstrap: f.n_bootstrap,
        temperature: f.temperature,
        img_size: f.img_size,
        sample_points: f.sample_points,
        voxel_res: f.voxel_res,
        seed: f.seed,
        uniform_fit: f.uniform_fit,
    };
    Ok(Settings::resolve(file, &flags))
}

fn agent_config(s: &Settings) -> Result<AgentConfig, CliError> {
    let cfg = AgentConfig {
        m: s.m,
        t: s.t,
        s_tau: s.s_tau,
        n_bootstrap: s.n_bootstrap,
        image_size: s.img_size,
        exec: exec_options(s),
        ..AgentConfig::default()
    };
    cfg.validate().map_err(CliError::Config)?;
    Ok(cfg)
}

fn exec_options(s: &Settings) -> ExecOptions {
    ExecOptions {
        uniform_fit: s.uniform_fit,
        ..ExecOptions::default()
    }
}

/// The scripted or live backend, recording every exchange to `log`.
fn backend(s: &Settings, f: &Flags, log: Option<&Path>) -> Result<RecordingBackend<Box<dyn ChatBackend>>, CliError> {
    let inner: Box<dyn ChatBackend> = match &f.scripted {
        Some(p) => Box::new(ScriptedBackend::from_file(p).map_err(|e| CliError::Config(e.to_string()))?),
        None => Box::new(HttpBackend::from_env(s.backends.clone(), f.trace).map_err(|e| match e {
            LlmError::Auth(m) => CliError::Auth(format!("authentication failed: {m}")),
            other => CliError::Config(other.to_string()),
        })?),
    };
    RecordingBackend::new(inner, log).map_err(|e| CliError::Io(format!("cannot create the run log: {e}")))
}

fn read_graph(dir: &Path) -> Result<GpsGraph, CliError> {
    let path = dir.join(GRAPH_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let (graph, _) = parse_graph_jsonl(&text).map_err(|d| {
        CliError::Io(format!("{}: corrupt graph\n{}", path.display(), crate::program::render_diagnostics(&d)))
    })?;
    Ok(graph)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn write_graph(dir: &Path, graph: &GpsGraph) -> Result<(), CliError> {
    write_file(&dir.join(GRAPH_FILE), serialize_graph(graph).as_bytes())
}

fn append_warnings(dir: &Path, warnings: &[String]) -> Result<(), CliError> {
    if warnings.is_empty() {
        return Ok(());
    }
    use std::io::Write;
    let path = dir.join(WARNINGS_FILE);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| io_err(&path, e))?;
    for w in warnings {
        writeln!(f, "{w}").map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn read_prompt(dir: &Path) -> Result<String, CliError> {
    let path = dir.join(PROMPT_FILE);
    std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))
}

fn cmd_generate(prompt: &str, out: &Path, s: &Settings, f: &Flags) -> Result<(), CliError> {
    let cfg = agent_config(s)?;
    if prompt.trim().is_empty() {
        return Err(CliError::Config("the shape description is empty".into()));
    }
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let backend = backend(s, f, Some(&out.join(LOG_FILE)))?;
    write_file(&out.join(PROMPT_FILE), prompt.as_bytes())?;
    let _ = std::fs::remove_file(out.join(WARNINGS_FILE));
    let session = Session::new(&backend, cfg).map_err(|e| CliError::stage("setup", e))?.with_artifacts(out);

    let result = (|| {
        eprintln!("parsing the description");
        let graph = session.parse_shape(prompt).map_err(|e| CliError::stage("parse", e))?;
        write_graph(out, &graph)?;
        eprintln!("{} parts; generating bounding boxes", graph.nodes.len());
        let graph = session
            .generate_bboxes(graph, prompt, None)
            .map_err(|e| CliError::stage("bounding boxes", e))?;
        write_graph(out, &graph)?;
        eprintln!("bootstrapping ({} rounds)", s.n_bootstrap);
        let graph = session.bootstrap(graph, prompt).map_err(|e| CliError::stage("bootstrap", e))?;
        write_graph(out, &graph)?;
        eprintln!("modelling {} parts (M={}, T={})", graph.nodes.len(), s.m, s.t);
        let outcome = session.model_shape(graph).map_err(|e| CliError::stage("modelling", e))?;
        write_graph(out, &outcome.graph)?;
        Ok(outcome.graph)
    })();
    append_warnings(out, &session.take_warnings())?;
    let graph = result?;
    finish(out, &graph, s, &[], OBJ_FILE)
}

/// Assembles, writes the OBJ and the global renders, and reports whether
/// the shape compiled.
fn finish(dir: &Path, graph: &GpsGraph, s: &Settings, extra: &[String], obj_name: &str) -> Result<(), CliError> {
    let asm = assemble(graph, &exec_options(s));
    let mut warnings: Vec<String> = extra.to_vec();
    warnings.extend(asm.warnings.iter().map(|(n, d)| format!("{n}: {d}")));
    append_warnings(dir, &warnings)?;
    write_file(&dir.join(obj_name), asm.to_obj().as_bytes())?;
    let mesh = asm.mesh();
    if mesh.has_surface() {
        render_views(dir, "render", &mesh, s.img_size)?;
    }
    report_assembly(dir, &asm, obj_name)
}

fn report_assembly(dir: &Path, asm: &Assembly, obj_name: &str) -> Result<(), CliError> {
    let outcome = metrics::RunOutcome::from_assembly(asm);
    if outcome.compiled() {
        println!(
            "compiled: {} parts, {} triangles -> {}",
            asm.components.len(),
            asm.components.iter().map(|m| m.triangles.len()).sum::<usize>(),
            dir.join(obj_name).display()
        );
        Ok(())
    } else if !asm.is_complete() {
        Err(CliError::NotCompiled(format!("assembly failed:\n{}", asm.failure_report())))
    } else {
        Err(CliError::NotCompiled("the assembled shape is empty".into()))
    }
}

fn render_views(dir: &Path, prefix: &str, mesh: &Mesh, size: u32) -> Result<(), CliError> {
    for cam in preset_cameras() {
        let img = render(std::slice::from_ref(mesh), &cam, size).map_err(|e| CliError::Stage {
            stage: "render",
            message: e.to_string(),
        })?;
        write_file(&dir.join(format!("{prefix}_{}.png", cam.name)), &encode_png(&img))?;
    }
    Ok(())
}

fn cmd_bboxes(dir: &Path, s: &Settings, f: &Flags) -> Result<(), CliError> {
    let cfg = agent_config(s)?;
    let graph = read_graph(dir)?;
    let prompt = read_prompt(dir)?;
    let backend = backend(s, f, Some(&dir.join("run_log.bboxes.jsonl")))?;
    let session = Session::new(&backend, cfg).map_err(|e| CliError::stage("setup", e))?.with_artifacts(dir);
    let result = session
        .generate_bboxes(graph, &prompt, None)
        .map_err(|e| CliError::stage("bounding boxes", e))
        .and_then(|g| session.bootstrap(g, &prompt).map_err(|e| CliError::stage("bootstrap", e)));
    append_warnings(dir, &session.take_warnings())?;
    let graph = result?;
    write_graph(dir, &graph)?;
    println!("{} parts with bounds -> {}", graph.nodes.len(), dir.join(GRAPH_FILE).display());
    Ok(())
}

fn cmd_model(dir: &Path, s: &Settings, f: &Flags) -> Result<(), CliError> {
    let cfg = agent_config(s)?;
    let graph = read_graph(dir)?;
    let backend = backend(s, f, Some(&dir.join("run_log.model.jsonl")))?;
    let session = Session::new(&backend, cfg).map_err(|e| CliError::stage("setup", e))?.with_artifacts(dir);
    let result = session.model_shape(graph).map_err(|e| CliError::stage("modelling", e));
    append_warnings(dir, &session.take_warnings())?;
    let outcome = result?;
    write_graph(dir, &outcome.graph)?;
    finish(dir, &outcome.graph, s, &[], OBJ_FILE)
}

fn read_mesh(path: &Path) -> Result<Mesh, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let parts = read_obj(&text).map_err(|e| io_err(path, e))?;
    Ok(Mesh::concat(&parts))
}

fn cmd_render(input: &Path, out: Option<&Path>, s: &Settings) -> Result<(), CliError> {
    if input.is_dir() {
        let graph = read_graph(input)?;
        let out = out.unwrap_or(input);
        std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
        let asm = assemble(&graph, &exec_options(s));
        let mesh = asm.mesh();
        if mesh.has_surface() {
            render_views(out, "render", &mesh, s.img_size)?;
        }
        if graph.all_bounded() && !graph.nodes.is_empty() {
            let mut legend = Vec::new();
            for cam in preset_cameras() {
                let (img, l) = render_bboxes(&graph, &cam, s.img_size).map_err(|e| CliError::Stage {
                    stage: "render",
                    message: e.to_string(),
                })?;
                write_file(&out.join(format!("bboxes_{}.png", cam.name)), &encode_png(&img))?;
                legend = l;
            }
            write_file(&out.join("bboxes_legend.txt"), legend_text(&legend).as_bytes())?;
        }
        println!("renders -> {}", out.display());
        return Ok(());
    }
    let mesh = read_mesh(input)?;
    if !mesh.has_surface() {
        return Err(CliError::Io(format!("{}: no faces to render", input.display())));
    }
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("render");
    render_views(&out, stem, &mesh, s.img_size)?;
    println!("renders -> {}", out.display());
    Ok(())
}

#[derive(Debug, serde::Serialize)]
pub struct MetricsReport {
    pub hausdorff: f64,
    pub iogt: f64,
    pub clip: &'static str,
    pub sample_points: usize,
    pub voxel_res: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vqa: Option<metrics::VqaReport>,
}

fn cmd_metrics(gen_path: &Path, gt_path: &Path, questions: Option<&Path>, s: &Settings, f: &Flags) -> Result<(), CliError> {
    let gen = read_mesh(gen_path)?;
    let gt = read_mesh(gt_path)?;
    let stage = |e: metrics::MetricsError| CliError::Stage {
        stage: "metrics",
        message: e.to_string(),
    };
    let a = metrics::sample_points(&gen, s.sample_points, s.seed).map_err(stage)?;
    let b = metrics::sample_points(&gt, s.sample_points, s.seed.wrapping_add(1)).map_err(stage)?;
    let hausdorff = metrics::hausdorff(&a, &b).map_err(stage)?;
    let iogt = metrics::iogt(&gen, &gt, s.voxel_res).map_err(stage)?;
    let vqa = match questions {
        None => None,
        Some(q) => {
            let text = std::fs::read_to_string(q).map_err(|e| io_err(q, e))?;
            let qs: Vec<String> = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
            let backend = backend(s, f, None)?;
            let mut renders = Vec::new();
            for cam in preset_cameras() {
                let img = render(std::slice::from_ref(&gen), &cam, s.img_size).map_err(|e| CliError::Stage {
                    stage: "render",
                    message: e.to_string(),
                })?;
                renders.push(encode_png(&img));
            }
            Some(metrics::vqa_pass_rate(&renders, &qs, &backend).map_err(|e| match e {
                metrics::MetricsError::Backend(LlmError::Auth(m)) => CliError::Auth(m),
                other => stage(other),
            })?)
        }
    };
    let report = MetricsReport {
        hausdorff,
        iogt,
        clip: "unavailable",
        sample_points: s.sample_points,
        voxel_res: s.voxel_res,
        seed: s.seed,
        vqa,
    };
    let json = serde_json::to_string_pretty(&report).expect("plain data serializes");
    println!("{json}");
    if let Some(out) = &f.out {
        write_file(out, json.as_bytes())?;
    }
    Ok(())
}

/// First `name.vN.ext` (N ≥ 2) that does not exist yet.
fn next_version(dir: &Path, stem: &str, ext: &str) -> (usize, String) {
    (2..)
        .map(|v| (v, format!("{stem}.v{v}.{ext}")))
        .find(|(_, n)| !dir.join(n).exists())
        .expect("some version is free")
}

fn cmd_edit(dir: &Path, instruction: &str, s: &Settings, f: &Flags) -> Result<(), CliError> {
    let cfg = agent_config(s)?;
    let graph = read_graph(dir)?;
    if graph.nodes.iter().all(|n| n.uses_default_cube()) {
        return Err(CliError::Io(format!("{}: the graph has no programs to edit", dir.display())));
    }
    let (version, obj_name) = next_version(dir, "assembled", "obj");
    let backend = backend(s, f, Some(&dir.join(format!("run_log.edit.v{version}.jsonl"))))?;
    let session = Session::new(&backend, cfg).map_err(|e| CliError::stage("setup", e))?;
    let result = session.edit_shape(graph.clone(), instruction);
    append_warnings(dir, &session.take_warnings())?;
    let outcome = result.map_err(|e| CliError::stage("edit", e))?;
    write_file(
        &dir.join(format!("graph.v{version}.gps.jsonl")),
        serialize_graph(&outcome.graph).as_bytes(),
    )?;
    write_graph(dir, &outcome.graph)?;
    for name in &outcome.changed {
        eprintln!("edited {name}");
    }
    for (name, diags) in &outcome.failures {
        eprintln!("edit of {name} failed; keeping its previous program:\n{}", crate::program::render_diagnostics(diags));
    }
    finish(dir, &outcome.graph, s, &[], &obj_name)?;
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Stage {
            stage: "edit",
            message: format!("{} part(s) kept their previous program", outcome.failures.len()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        let cli = Cli::try_parse_from([
            "shapecraft", "generate", "a stool", "--m", "1", "--t", "1", "--s-tau", "8", "--n-bootstrap", "0",
            "--temperature", "0.3", "--out", "x", "--scripted", "t.jsonl", "--trace", "--seed", "4", "--img-size",
            "64", "--voxel-res", "16", "--sample-points", "100", "--uniform-fit",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Generate { ref prompt } if prompt == "a stool"));
        assert_eq!(cli.flags.m, Some(1));
        assert_eq!(cli.flags.s_tau, Some(8));
        assert!(cli.flags.uniform_fit && cli.flags.trace);
        for sub in ["bboxes r", "model r", "assemble r", "render r", "metrics a b", "edit r do"] {
            let mut args = vec!["shapecraft"];
            args.extend(sub.split(' '));
            assert!(Cli::try_parse_from(args).is_ok(), "{sub}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["shapecraft", "frobnicate"]), 2);
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope");
        assert_eq!(run(["shapecraft", "assemble", missing.to_str().unwrap()]), 2);
    }

    #[test]
    fn versions() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(next_version(dir.path(), "assembled", "obj").1, "assembled.v2.obj");
        std::fs::write(dir.path().join("assembled.v2.obj"), "").unwrap();
        assert_eq!(next_version(dir.path(), "assembled", "obj").0, 3);
    }
}
