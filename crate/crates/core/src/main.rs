use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tangle_detect::harness::eval::{evaluate_counts, ConfusionCounts};
use tangle_detect::harness::{
    detect, generate_scene, x_crossing_spec, Config, DetectionReport, ExecutionMode, GroundTruth, SceneSpec,
    XCrossingParams,
};
use tangle_detect::raster::{load_image, save_annotated, save_image};
use tangle_detect::scanner::windows;
use tangle_detect::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "tangle", version, about = "Find wire overlaps in images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect tangles in one image and print or write the JSON report.
    Detect {
        image: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a copy of the image with detections marked.
        #[arg(long)]
        annotate: Option<PathBuf>,
        /// Run everything on the calling thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Render a synthetic scene and its ground truth.
    Synth {
        /// Scene description (TOML, or JSON when the extension is .json).
        /// Without it a random two-wire crossing is drawn from the seed.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_image: PathBuf,
        #[arg(long)]
        out_truth: PathBuf,
    },
    /// Score a detection report against ground truth.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        match_radius: f64,
        /// Supplies the window grid used as the evaluation unit.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Detect and score every `<name>.png` + `<name>.json` pair in a directory.
    Bench {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10.0)]
        match_radius: f64,
    },
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    path.map_or_else(|| Ok(Config::default()), Config::load)
}

fn load_truth(path: &Path) -> Result<GroundTruth> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn load_spec(path: &Path) -> Result<SceneSpec> {
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::InvalidScene(e.to_string()))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    Ok(std::fs::write(path, text)?)
}

fn score(report: &DetectionReport, truth: &GroundTruth, config: &Config, radius: f64) -> ConfusionCounts {
    let w = &config.window;
    let rects = windows(truth.width, truth.height, w.w, w.h, w.stride);
    evaluate_counts(&report.to_tangles(), truth, &rects, radius)
}

fn rate_row(counts: &ConfusionCounts) -> String {
    let r = counts.rates();
    format!(
        "TP {:.3}  TN {:.3}  FP {:.3}  FN {:.3}  Accuracy {:.3}",
        r.tp,
        r.tn,
        r.fp,
        r.fn_,
        r.accuracy_3dp()
    )
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Detect {
            image,
            config,
            out,
            annotate,
            sequential,
        } => {
            let config = load_config(config.as_deref())?;
            let img = load_image(&image)?;
            let mode = if sequential {
                ExecutionMode::Sequential
            } else {
                ExecutionMode::Parallel
            };
            let tangles = detect(&img, &config, mode)?.tangles;
            let json = DetectionReport::new(&tangles).to_json();
            match out {
                Some(path) => write_text(&path, &json)?,
                None => println!("{json}"),
            }
            if let Some(path) = annotate {
                save_annotated(&img, &tangles, path)?;
            }
        }
        Command::Synth {
            spec,
            seed,
            out_image,
            out_truth,
        } => {
            let spec = match spec {
                Some(path) => SceneSpec {
                    seed,
                    ..load_spec(&path)?
                },
                None => x_crossing_spec(seed, &XCrossingParams::default()),
            };
            let (img, truth) = generate_scene(&spec)?;
            save_image(&img, out_image)?;
            write_text(&out_truth, &serde_json::to_string_pretty(&truth)?)?;
        }
        Command::Eval {
            detections,
            truth,
            match_radius,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let report = DetectionReport::from_json(&read_text(&detections)?)?;
            let truth = load_truth(&truth)?;
            let rates = score(&report, &truth, &config, match_radius).rates();
            println!("{}", serde_json::to_string(&rates)?);
        }
        Command::Bench {
            scenes,
            config,
            match_radius,
        } => {
            let config = load_config(config.as_deref())?;
            let mut images: Vec<PathBuf> = std::fs::read_dir(&scenes)
                .map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::FileNotFound(scenes.clone()),
                    _ => Error::Io(e),
                })?
                .map(|entry| entry.map(|e| e.path()))
                .collect::<std::io::Result<_>>()?;
            images.retain(|p| p.extension().is_some_and(|e| e == "png") && p.with_extension("json").is_file());
            images.sort();
            let mut total = ConfusionCounts::default();
            for path in &images {
                let img = load_image(path)?;
                let truth = load_truth(&path.with_extension("json"))?;
                let tangles = detect(&img, &config, ExecutionMode::Parallel)?.tangles;
                total.add(&score(&DetectionReport::new(&tangles), &truth, &config, match_radius));
            }
            println!("scenes {}  {}", images.len(), rate_row(&total));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
