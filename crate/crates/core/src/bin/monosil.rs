use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use nalgebra::{Matrix3, Point2};

use monosil::calib::{
    estimate_homography, load_correspondences, render_checkerboard, verify_grid_spacing, warp_image, ChessboardGrid,
    Correspondence, Homography,
};
use monosil::harness::{
    compare_controllers, parse_seeds, run_on_track, track_spec_json, write_comparison, write_run_outputs,
    ControllerKind, SimConfig, TrackPaths,
};
use monosil::imaging::{preprocess, CameraModel, ImageGray, PreprocessConfig};
use monosil::lane::{detect_lanes, SlidingWindowConfig};
use monosil::track::{generate_track, random_spec, Complexity};

#[derive(Parser)]
#[command(name = "monosil", version, about = "Lane-tracking software-in-the-loop testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded random track spec as JSON.
    GenerateTrack {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "default")]
        preset: Complexity,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one closed-loop trial.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the controller named in the config.
        #[arg(long)]
        controller: Option<ControllerKind>,
        #[arg(long)]
        out_dir: PathBuf,
        /// Write every k-th camera frame and mask as PGM.
        #[arg(long, value_name = "K")]
        dump_frames: Option<usize>,
        /// Route frames through a perspective warp and rectification.
        #[arg(long)]
        through_homography: bool,
    },
    /// Run PID and MPC on one track per seed and tabulate the metrics.
    Compare {
        /// Seed list: `a..b`, `a,b,c` or `n`.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Detect lanes in a bird's-eye PGM image.
    Detect {
        #[arg(long)]
        image: PathBuf,
        /// JSON with optional `camera`, `preprocess` and `detector` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homography demo: estimate, verify and warp a synthetic chessboard.
    CalibDemo {
        /// Correspondence file (`sx sy dx dy` per line) to estimate from instead.
        #[arg(long)]
        pairs: Option<PathBuf>,
        /// Directory for the PGM images.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(serde::Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct DetectConfig {
    camera: CameraModel,
    preprocess: PreprocessConfig,
    detector: SlidingWindowConfig,
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => Ok(SimConfig::load(p)?),
        None => Ok(SimConfig::default()),
    }
}

/// Resolves relative track files against the config's directory.
fn load_track(cfg: &SimConfig, config_path: Option<&Path>) -> Result<TrackPaths> {
    let base = config_path.and_then(Path::parent);
    Ok(TrackPaths::build(&cfg.track.resolve(base)?)?)
}

fn cmd_run(
    config: Option<PathBuf>,
    controller: Option<ControllerKind>,
    out_dir: PathBuf,
    dump_frames: Option<usize>,
    through_homography: bool,
) -> Result<()> {
    let mut cfg = load_config(config.as_deref())?;
    if let Some(c) = controller {
        cfg.controller = c;
    }
    cfg.through_homography |= through_homography;
    let track = load_track(&cfg, config.as_deref())?;
    std::fs::create_dir_all(&out_dir).with_context(|| out_dir.display().to_string())?;

    let frames_dir = out_dir.join("frames");
    let mut dump_err = None;
    let mut dump = |k: usize, frame: &ImageGray, mask: &ImageGray| {
        if dump_err.is_some() {
            return;
        }
        let r = std::fs::create_dir_all(&frames_dir)
            .map_err(|e| e.to_string())
            .and_then(|_| {
                frame
                    .write_pgm(&frames_dir.join(format!("frame_{k:05}.pgm")))
                    .map_err(|e| e.to_string())
            })
            .and_then(|_| {
                mask.write_pgm(&frames_dir.join(format!("mask_{k:05}.pgm")))
                    .map_err(|e| e.to_string())
            });
        if let Err(e) = r {
            dump_err = Some(e);
        }
    };
    let mut every = |k: usize, f: &ImageGray, m: &ImageGray| {
        if let Some(n) = dump_frames {
            if n > 0 && k.is_multiple_of(n) {
                dump(k, f, m);
            }
        }
    };
    let out = run_on_track(&cfg, &track, Some(&mut every))?;
    if let Some(e) = dump_err {
        bail!("writing frames: {e}");
    }
    write_run_outputs(&out_dir, &track, &out, &cfg.controller.name().to_uppercase())?;
    let m = &out.metrics;
    println!(
        "{}: {} ticks, termination {}, lateral MSD {:.6e} m^2, angular MSD {:.6e} rad^2, lane valid {:.4}, laps {}",
        cfg.controller.name(),
        m.ticks,
        out.log.termination.as_str(),
        m.lateral_msd,
        m.angular_msd,
        m.lane_valid_fraction,
        m.laps_completed
    );
    Ok(())
}

fn cmd_compare(seeds: &str, config: Option<PathBuf>, out_dir: PathBuf) -> Result<()> {
    let seeds = parse_seeds(seeds).map_err(anyhow::Error::msg)?;
    let cfg = load_config(config.as_deref())?;
    let cmp = compare_controllers(&seeds, &cfg);
    write_comparison(&out_dir, &cmp)?;
    print!("{}", cmp.to_text());
    Ok(())
}

fn cmd_detect(image: PathBuf, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let cfg: DetectConfig = match &config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| p.display().to_string())?;
            serde_json::from_str(&text).with_context(|| format!("{}: invalid detect config", p.display()))?
        }
        None => DetectConfig::default(),
    };
    cfg.camera.validate().map_err(anyhow::Error::msg)?;
    cfg.detector.validate().map_err(anyhow::Error::msg)?;
    let img = ImageGray::read_pgm(&image)?;
    if (img.width, img.height) != (cfg.camera.width, cfg.camera.height) {
        bail!(
            "image is {}x{} but the camera model expects {}x{}",
            img.width,
            img.height,
            cfg.camera.width,
            cfg.camera.height
        );
    }
    let mask = preprocess(&img, &cfg.preprocess);
    let json = match detect_lanes(&mask, &cfg.detector, &cfg.camera, None) {
        Ok(d) => serde_json::json!({ "status": "ok", "lanes": d }),
        Err(e) => serde_json::json!({ "status": "failed", "error": e.to_string() }),
    };
    let text = serde_json::to_string_pretty(&json)? + "\n";
    match out {
        Some(p) => std::fs::write(&p, text).with_context(|| p.display().to_string())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn print_h(h: &Homography) {
    let m = h.normalized().to_row_major();
    for r in 0..3 {
        println!(
            "  [{:>18.10e} {:>18.10e} {:>18.10e}]",
            m[3 * r],
            m[3 * r + 1],
            m[3 * r + 2]
        );
    }
}

fn cmd_calib_demo(pairs: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    if let Some(p) = pairs {
        let corr = load_correspondences(&p)?;
        let h = estimate_homography(&corr)?;
        println!("H estimated from {} correspondences:", corr.len());
        print_h(&h);
        let worst = corr
            .iter()
            .map(|c| h.apply(c.src).map(|q| (q - c.dst).norm()).unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        println!("max reprojection error: {worst:.3e} px");
        return Ok(());
    }

    // a 6x5-square board has 5x4 interior corners
    let (w, h_px, square) = (480usize, 400usize, 60.0);
    let origin = Point2::new(60.0, 50.0);
    let board = render_checkerboard(w, h_px, origin, square, 6, 5);
    let grid = ChessboardGrid::regular(4, 5, Point2::new(origin.x + square, origin.y + square), square);
    let truth = Homography::new(Matrix3::new(0.9, 0.12, 20.0, -0.05, 0.8, 35.0, 2.0e-4, 3.5e-4, 1.0))?;
    let distorted = warp_image(&board, &truth, w, h_px)?;
    let observed = grid.transformed(&truth)?;
    let corr: Vec<Correspondence> = observed
        .corners
        .iter()
        .zip(&grid.corners)
        .map(|(o, g)| Correspondence { src: *o, dst: *g })
        .collect();
    let rect = estimate_homography(&corr)?;
    println!("rectifying H (distorted -> board):");
    print_h(&rect);
    let before = verify_grid_spacing(&observed)?;
    let after = verify_grid_spacing(&observed.transformed(&rect)?)?;
    println!(
        "spacing before: dx {:.4} dy {:.4} max rel dev {:.3e}",
        before.mean_dx, before.mean_dy, before.max_rel_dev
    );
    println!(
        "spacing after:  dx {:.4} dy {:.4} max rel dev {:.3e}",
        after.mean_dx, after.mean_dy, after.max_rel_dev
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).with_context(|| dir.display().to_string())?;
        board.write_pgm(&dir.join("board.pgm"))?;
        distorted.write_pgm(&dir.join("distorted.pgm"))?;
        warp_image(&distorted, &rect, w, h_px)?.write_pgm(&dir.join("rectified.pgm"))?;
        println!("images written to {}", dir.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenerateTrack { seed, preset, out } => {
            let spec = random_spec(seed, preset);
            let path = generate_track(&spec)?;
            std::fs::write(&out, track_spec_json(&spec)).with_context(|| out.display().to_string())?;
            println!(
                "track seed {seed}: {} samples, length {:.3} m, max |curvature| {:.3} 1/m",
                path.len(),
                path.total_length(),
                spec.max_abs_curvature()
            );
        }
        Cmd::Run {
            config,
            controller,
            out_dir,
            dump_frames,
            through_homography,
        } => cmd_run(config, controller, out_dir, dump_frames, through_homography)?,
        Cmd::Compare { seeds, config, out_dir } => cmd_compare(&seeds, config, out_dir)?,
        Cmd::Detect { image, config, out } => cmd_detect(image, config, out)?,
        Cmd::CalibDemo { pairs, out } => cmd_calib_demo(pairs, out)?,
    }
    Ok(())
}
