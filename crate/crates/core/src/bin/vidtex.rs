//! Command-line front end for the dynamic-texture pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vidtex::features::{encode_video, project, EncodeOptions, FeatureVector};
use vidtex::harness::{
    describe_bundle, features_csv, load_bundle, run_protocol, save_bundle, train_scale_models,
    FeatureMode, ModelBundle, Protocol,
};
use vidtex::video::{load_volume, synth_dataset, write_synth_dataset, DatasetManifest, SynthConfig};
use vidtex::{ExperimentConfig, Scalar};

#[derive(Parser)]
#[command(name = "vidtex", about = "Dynamic-texture recognition pipeline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled dataset of moving gratings.
    Synth {
        /// Output directory for .dtvol files and the manifest
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 20)]
        videos_per_class: usize,
        /// Volume size as T,H,W
        #[arg(long, default_value = "30,30,30")]
        size: String,
        /// Gaussian pixel-noise standard deviation
        #[arg(long, default_value_t = 4.0)]
        noise: f64,
        #[arg(long)]
        seed: u64,
    },
    /// Train hash models, codebooks, and PCA on a manifest; write a bundle.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Output bundle path
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Encode all manifest videos with a trained bundle; write a feature CSV.
    Encode {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        /// Output CSV path (video_path,label,f0,f1,…)
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50_000)]
        encode_cap: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an evaluation protocol end to end.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        seed: u64,
        /// Write the per-repeat report CSV here
        #[arg(long)]
        report: Option<PathBuf>,
        /// Write the per-probe prediction CSV here
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Reuse hash models and codebooks from this bundle
        #[arg(long)]
        transfer: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a protocol with the LBP-TOP baseline features instead.
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Bundle utilities.
    Bundle {
        #[command(subcommand)]
        action: BundleAction,
    },
}

#[derive(Subcommand)]
enum BundleAction {
    /// Print the sections of a model bundle.
    Inspect {
        #[arg(long)]
        path: PathBuf,
    },
}

/// Flags mirroring the experiment configuration; a config file provides
/// defaults and explicit flags override it.
#[derive(Args, Default)]
struct CommonOpts {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated neighborhood sizes, e.g. 3,5
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    dict_size: Option<usize>,
    #[arg(long)]
    pca_dim: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    train_cap: Option<usize>,
    #[arg(long)]
    encode_cap: Option<usize>,
    /// Training PDV stride as t,y,x
    #[arg(long)]
    train_stride: Option<String>,
    /// Encoding PDV stride as t,y,x
    #[arg(long)]
    encode_stride: Option<String>,
    #[arg(long)]
    hash_iterations: Option<usize>,
    /// Crop each volume to this motion window, as T,H,W
    #[arg(long)]
    crop: Option<String>,
}

impl CommonOpts {
    fn build(&self, protocol: Protocol, seed: u64) -> vidtex::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::new(protocol, seed);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            config.apply_config_text(&text)?;
            config.protocol = protocol;
            config.seed = seed;
        }
        let mut overrides = String::new();
        if let Some(v) = &self.scales {
            overrides.push_str(&format!("scales = {v}\n"));
        }
        if let Some(v) = self.bits {
            overrides.push_str(&format!("bits = {v}\n"));
        }
        if let Some(v) = self.dict_size {
            overrides.push_str(&format!("dict_size = {v}\n"));
        }
        if let Some(v) = self.pca_dim {
            overrides.push_str(&format!("pca_dim = {v}\n"));
        }
        if let Some(v) = self.repeats {
            overrides.push_str(&format!("repeats = {v}\n"));
        }
        if let Some(v) = self.folds {
            overrides.push_str(&format!("folds = {v}\n"));
        }
        if let Some(v) = self.train_cap {
            overrides.push_str(&format!("train_cap = {v}\n"));
        }
        if let Some(v) = self.encode_cap {
            overrides.push_str(&format!("encode_cap = {v}\n"));
        }
        if let Some(v) = &self.train_stride {
            overrides.push_str(&format!("train_stride = {v}\n"));
        }
        if let Some(v) = &self.encode_stride {
            overrides.push_str(&format!("encode_stride = {v}\n"));
        }
        if let Some(v) = self.hash_iterations {
            overrides.push_str(&format!("hash_iterations = {v}\n"));
        }
        if let Some(v) = &self.crop {
            overrides.push_str(&format!("crop = {v}\n"));
        }
        config.apply_config_text(&overrides)?;
        config.validate()?;
        Ok(config)
    }
}

fn parse_triple(s: &str) -> vidtex::Result<(usize, usize, usize)> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| vidtex::Error::BadConfig(format!("expected T,H,W, got `{s}`")))?;
    if parts.len() != 3 {
        return Err(vidtex::Error::BadConfig(format!("expected T,H,W, got `{s}`")));
    }
    Ok((parts[0], parts[1], parts[2]))
}

fn run() -> vidtex::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth {
            out,
            classes,
            videos_per_class,
            size,
            noise,
            seed,
        } => {
            let (frames, height, width) = parse_triple(&size)?;
            let cfg = SynthConfig {
                classes,
                videos_per_class,
                frames,
                height,
                width,
                noise,
            };
            let videos = synth_dataset(&cfg, seed)?;
            let manifest = write_synth_dataset(&videos, &out)?;
            println!(
                "wrote {} videos across {classes} classes to {}",
                videos.len(),
                out.display()
            );
            println!("manifest: {}", manifest.display());
        }
        Command::Train {
            manifest,
            out,
            seed,
            common,
        } => {
            let config = common.build(Protocol::Synth, seed)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let volumes: Vec<_> = manifest
                .entries
                .iter()
                .map(|e| {
                    let v = load_volume(&e.path)?;
                    match config.crop {
                        Some((t, h, w)) => vidtex::video::crop_motion_window(&v, t, h, w),
                        None => Ok(v),
                    }
                })
                .collect::<vidtex::Result<_>>()?;
            let refs: Vec<_> = volumes.iter().collect();
            let trained = train_scale_models(&refs, &config)?;
            for w in &trained.warnings {
                eprintln!("warning: {w}");
            }
            // PCA over the full manifest's raw features
            let opts = EncodeOptions {
                stride: config.encode_stride,
                sample_cap: config.encode_sample_cap,
                seed: config.seed,
            };
            let raw: Vec<Vec<Scalar>> = volumes
                .iter()
                .map(|v| encode_video(v, &trained.scales, &opts))
                .collect::<vidtex::Result<_>>()?;
            let pca = vidtex::features::fit_pca(&raw, config.pca_dim)?;
            for w in &pca.warnings {
                eprintln!("warning: {w}");
            }
            let bundle = ModelBundle {
                scales: trained.scales.scales.clone(),
                pca: Some(pca.model),
                config_snapshot: config.snapshot(),
            };
            save_bundle(&bundle, &out)?;
            println!("saved bundle to {}", out.display());
        }
        Command::Encode {
            manifest,
            bundle,
            out,
            encode_cap,
            seed,
        } => {
            let manifest = DatasetManifest::load(&manifest)?;
            let bundle: ModelBundle<Scalar> = load_bundle(&bundle)?;
            let models = bundle.scale_models()?;
            let opts = EncodeOptions {
                stride: (1, 1, 1),
                sample_cap: encode_cap,
                seed,
            };
            let mut names = Vec::new();
            let mut labels = Vec::new();
            let mut feats: Vec<FeatureVector<Scalar>> = Vec::new();
            for e in &manifest.entries {
                let v = load_volume(&e.path)?;
                let raw = encode_video(&v, &models, &opts)?;
                let f = match &bundle.pca {
                    Some(pca) => project(pca, &raw)?,
                    None => FeatureVector::new(raw),
                };
                names.push(e.path.display().to_string());
                labels.push(e.label);
                feats.push(f);
            }
            std::fs::write(&out, features_csv(&names, &labels, &feats))?;
            println!("wrote {} feature rows to {}", feats.len(), out.display());
        }
        Command::Eval {
            manifest,
            protocol,
            seed,
            report,
            predictions,
            transfer,
            common,
        } => {
            let protocol: Protocol = protocol.parse()?;
            let mut config = common.build(protocol, seed)?;
            if transfer.is_some() {
                config.transfer = transfer;
            }
            let manifest = DatasetManifest::load(&manifest)?;
            let result = run_protocol(&config, &manifest, FeatureMode::Learned)?;
            print!("{}", result.human_table());
            if let Some(path) = report {
                std::fs::write(&path, result.to_csv())?;
            }
            if let Some(path) = predictions {
                std::fs::write(&path, result.predictions_csv())?;
            }
        }
        Command::Baseline {
            manifest,
            protocol,
            seed,
            report,
            common,
        } => {
            let protocol: Protocol = protocol.parse()?;
            let config = common.build(protocol, seed)?;
            let manifest = DatasetManifest::load(&manifest)?;
            let result = run_protocol(&config, &manifest, FeatureMode::LbpTop)?;
            print!("{}", result.human_table());
            if let Some(path) = report {
                std::fs::write(&path, result.to_csv())?;
            }
        }
        Command::Bundle { action } => match action {
            BundleAction::Inspect { path } => {
                let bundle: ModelBundle<Scalar> = load_bundle(&path)?;
                print!("{}", describe_bundle(&bundle));
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
