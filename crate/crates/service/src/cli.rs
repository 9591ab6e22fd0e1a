//! Batch command line: each subcommand is a thin wrapper over one pipeline stage.

use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gsdeform::composite::{alpha_composite, boundary_mask};
use gsdeform::config::{
    DEFAULT_CONTROL_COUNT, DEFAULT_ITERATIONS, DEFAULT_MASK_RADIUS, DEFAULT_MASK_THRESHOLD, DEFAULT_NEIGHBORS,
    DEFAULT_SKIN_NEIGHBORS,
};
use gsdeform::render::{render, Camera, ImageRgb, ImageRgba};
use gsdeform::{
    apply_lbs, bind, build_control_graph, deform, synth, ControlGraph, GaussianCloud, GraphOptions, HandleSet,
    LoadOptions, Vec3, Weighting,
};

#[derive(Parser, Debug)]
#[command(name = "gsdeform", version, about = "As-rigid-as-possible editing of Gaussian splat objects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WeightingArg {
    Uniform,
    InverseDistance,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Shape {
    Blob,
    Dumbbell,
    Arc,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample control nodes and build the deformation graph.
    Sample {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CONTROL_COUNT)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        /// Input values are already activated.
        #[arg(long)]
        activated: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for the handle targets and write the deformed splat.
    Solve {
        #[arg(long)]
        splat: PathBuf,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        handles: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
        iters: usize,
        #[arg(long, default_value_t = DEFAULT_SKIN_NEIGHBORS)]
        skin_k: usize,
        #[arg(long)]
        activated: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write control positions, rotations and the energy trace as JSON.
        #[arg(long)]
        result_out: Option<PathBuf>,
    },
    /// Render a splat to an RGBA PNG.
    Render {
        #[arg(long)]
        splat: PathBuf,
        #[arg(long)]
        camera: PathBuf,
        #[arg(long)]
        activated: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Composite a rendered object over a background and extract the boundary band.
    Composite {
        #[arg(long)]
        fg: PathBuf,
        #[arg(long)]
        bg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mask_out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_MASK_THRESHOLD)]
        threshold: f32,
        #[arg(long, default_value_t = DEFAULT_MASK_RADIUS)]
        radius: usize,
    },
    /// Write a look-at camera file.
    Camera {
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        eye: Vec3,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,0,0")]
        target: Vec3,
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0,1,0")]
        up: Vec3,
        /// Vertical field of view in degrees.
        #[arg(long, default_value_t = 50.0)]
        fov: f64,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 480)]
        height: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a procedural test cloud.
    Synth {
        #[arg(long, value_enum)]
        shape: Shape,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the interactive edit service (WebSocket at /ws).
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
    },
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts.as_slice() {
        &[x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

fn load_cloud(path: &PathBuf, activated: bool) -> Result<GaussianCloud> {
    GaussianCloud::load(path, LoadOptions { activated }).with_context(|| format!("reading {}", path.display()))
}

/// Runs one command, writing human-readable progress to `log`.
pub fn run(cli: Cli, log: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Sample { input, n, k, seed, weighting, activated, out } => {
            let cloud = load_cloud(&input, activated)?;
            let weighting = match weighting {
                WeightingArg::Uniform => Weighting::Uniform,
                WeightingArg::InverseDistance => Weighting::InverseDistance,
            };
            let graph = build_control_graph(&cloud, &GraphOptions { control_count: n, neighbors: k, seed, weighting })?;
            graph.save(&out)?;
            let repairs = graph.initial_edges().map_or(0, |e| e.repairs().len());
            writeln!(log, "sampled {} nodes from {} gaussians (K={k}, {repairs} repair edges)", graph.len(), cloud.len())?;
        }
        Command::Solve { splat, graph, handles, iters, skin_k, activated, out, result_out } => {
            let cloud = load_cloud(&splat, activated)?;
            let graph = ControlGraph::load(&graph).with_context(|| format!("reading {}", graph.display()))?;
            if let Some(&bad) = graph.node_indices().iter().find(|&&i| i >= cloud.len()) {
                bail!("graph node index {bad} is outside the splat ({} gaussians)", cloud.len());
            }
            let handles = HandleSet::load(&handles).with_context(|| format!("reading {}", handles.display()))?;
            let binding = bind(&cloud, &graph, skin_k)?;
            let result = deform(&graph, &handles, iters)?;
            for (i, pair) in result.energy_trace.chunks(2).enumerate() {
                writeln!(log, "iter {}: local {:.9e} global {:.9e}", i + 1, pair[0], pair[1])?;
            }
            apply_lbs(&cloud, &binding, &graph, &result)?.save(&out, LoadOptions { activated })?;
            if let Some(path) = result_out {
                std::fs::write(path, result.to_json()?)?;
            }
        }
        Command::Render { splat, camera, activated, out } => {
            let cloud = load_cloud(&splat, activated)?;
            let camera = Camera::load(&camera).with_context(|| format!("reading {}", camera.display()))?;
            render(&cloud, &camera).save_png(&out)?;
        }
        Command::Composite { fg, bg, out, mask_out, threshold, radius } => {
            let fg = ImageRgba::load_png(&fg).with_context(|| format!("reading {}", fg.display()))?;
            let bg = ImageRgb::load_png(&bg).with_context(|| format!("reading {}", bg.display()))?;
            alpha_composite(&fg, &bg)?.save_png(&out)?;
            if let Some(path) = mask_out {
                let mask = boundary_mask(&fg.alpha(), fg.width, fg.height, threshold, radius)?;
                mask.save_png(&path)?;
                writeln!(log, "boundary band: {} pixels", mask.count())?;
            }
        }
        Command::Camera { eye, target, up, fov, width, height, out } => {
            Camera::look_at(eye, target, up, fov.to_radians(), width, height)?.save(&out)?;
        }
        Command::Synth { shape, n, seed, out } => {
            let cloud = match shape {
                Shape::Blob => synth::blob(n, Vec3::zeros(), 1.0, seed)?,
                Shape::Dumbbell => synth::dumbbell(n, &synth::Dumbbell::default(), seed)?,
                Shape::Arc => synth::arc(n, 2.0, 0.15, seed)?,
            };
            cloud.save(&out, LoadOptions::default())?;
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = crate::server::bind(addr).await?;
                writeln!(log, "listening on ws://{}/ws", listener.local_addr()?)?;
                crate::server::serve(listener).await?;
                anyhow::Ok(())
            })?;
        }
    }
    Ok(())
}
