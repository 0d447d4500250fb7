use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::xai::{
    average_heatmaps, grad_cam, lime_explain, lime_render, overlay, read_tensor, segment_grid,
    upsample_bilinear, ExternalPredictor, Heatmap, Predictor, RgbImage, StubPredictor,
};

use super::{CommandOutcome, Outputs, RunConfig, BUILTIN_STUB};

/// Image ids with at least one `<id>_fold<i>.act.tnsr` file.
fn discover_images(tensor_dir: &Path) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    let entries = std::fs::read_dir(tensor_dir).map_err(|e| Error::io(tensor_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(tensor_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".act.tnsr") {
            if let Some(pos) = stem.rfind("_fold") {
                if stem[pos + 5..].parse::<usize>().is_ok() {
                    ids.push(stem[..pos].to_string());
                }
            }
        }
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

fn stable_hash(text: &str) -> u64 {
    // FNV-1a
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn fold_heatmaps(tensor_dir: &Path, id: &str, k: usize) -> Result<Vec<Heatmap>> {
    (1..=k)
        .map(|fold| {
            let act = read_tensor(&tensor_dir.join(format!("{id}_fold{fold}.act.tnsr")))?;
            let grad = read_tensor(&tensor_dir.join(format!("{id}_fold{fold}.grad.tnsr")))?;
            grad_cam(&act, &grad)
        })
        .collect()
}

fn gradcam_outputs(
    config: &RunConfig,
    tensor_dir: &Path,
    id: &str,
    image: &RgbImage,
    outputs: &mut Outputs,
) -> Result<()> {
    let maps = fold_heatmaps(tensor_dir, id, config.k)?;
    let mean = average_heatmaps(&maps)?;
    let labelled = maps
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("fold{}", i + 1), m))
        .chain(std::iter::once(("mean".to_string(), &mean)));
    let mut staged = Outputs::default();
    for (tag, map) in labelled {
        let full = upsample_bilinear(map, image.width(), image.height())?;
        let blended = overlay(image, &full, config.xai.alpha)?;
        staged.add(format!("{id}.{tag}.gradcam.png"), blended.to_png_bytes()?);
        if config.xai.dump_heatmaps {
            staged.add(
                format!("{id}.{tag}.gradcam.tnsr"),
                map.to_tensor().to_bytes(),
            );
        }
    }
    outputs.extend(staged);
    Ok(())
}

fn predictor_for(config: &RunConfig, fold: usize, image: &RgbImage) -> Result<Box<dyn Predictor>> {
    let cmd = &config.xai.predictor;
    if cmd.len() == 1 && cmd[0] == BUILTIN_STUB {
        let segments = segment_grid(image, config.lime.grid_size)?;
        return Ok(Box::new(StubPredictor::uniform(segments)));
    }
    let argv: Vec<String> = cmd
        .iter()
        .map(|a| a.replace("{fold}", &fold.to_string()))
        .collect();
    Ok(Box::new(ExternalPredictor::new(
        &argv,
        config.vocab.clone(),
    )?))
}

/// Grad-CAM overlays per fold and their cross-fold mean, plus LIME
/// renderings for the configured folds.
pub fn cmd_xai(config: &RunConfig) -> Result<CommandOutcome> {
    let image_dir = config
        .xai
        .image_dir
        .clone()
        .ok_or_else(|| Error::Config("xai.image_dir is not set".into()))?;
    let tensor_dir: Option<PathBuf> = config.xai.tensor_dir.clone();
    let ids = if !config.xai.images.is_empty() {
        config.xai.images.clone()
    } else if let Some(dir) = &tensor_dir {
        discover_images(dir)?
    } else {
        return Err(Error::Config("set xai.images or xai.tensor_dir".into()));
    };
    if ids.is_empty() {
        return Err(Error::Config("no images to explain".into()));
    }
    let run_lime = !config.xai.lime_folds.is_empty();
    if run_lime && config.xai.predictor.is_empty() {
        return Err(Error::Config(
            "xai.lime_folds set but xai.predictor is empty".into(),
        ));
    }
    let target = config.lime_target_class()?;

    let mut outputs = Outputs::default();
    let mut summary = String::new();
    let mut succeeded = 0;
    let mut skipped = 0;
    for id in &ids {
        let image_path = image_dir.join(format!("{id}.png"));
        let image = match RgbImage::load_png(&image_path) {
            Ok(img) => img,
            Err(e) => {
                log::warn!("skipping {id}: {e}");
                let _ = writeln!(summary, "{id}: skipped ({e})");
                skipped += 1;
                continue;
            }
        };
        let mut produced = false;
        if let Some(dir) = &tensor_dir {
            match gradcam_outputs(config, dir, id, &image, &mut outputs) {
                Ok(()) => {
                    produced = true;
                    let _ = writeln!(summary, "{id}: grad-cam for {} folds and mean", config.k);
                }
                Err(e @ (Error::Format(_) | Error::Io { .. } | Error::Argument(_))) => {
                    log::warn!("skipping grad-cam for {id}: {e}");
                    let _ = writeln!(summary, "{id}: grad-cam skipped ({e})");
                }
                Err(e) => return Err(e),
            }
        }
        if run_lime {
            let segments = segment_grid(&image, config.lime.grid_size)?;
            for &fold in &config.xai.lime_folds {
                let predictor = predictor_for(config, fold, &image)?;
                let seed = derive_seed(derive_seed(config.seed, stable_hash(id)), fold as u64);
                let expl = lime_explain(
                    &image,
                    &segments,
                    predictor.as_ref(),
                    target,
                    &config.lime,
                    seed,
                )?;
                let rendered = lime_render(&image, &segments, &expl)?;
                outputs.add(
                    format!("{id}.fold{fold}.lime.png"),
                    rendered.to_png_bytes()?,
                );
                outputs.add(format!("{id}.fold{fold}.lime.json"), expl.to_json());
                let _ = writeln!(
                    summary,
                    "{id}: lime fold{fold} top superpixels {:?}",
                    expl.top
                );
            }
            produced = true;
        }
        if produced {
            succeeded += 1;
        } else {
            skipped += 1;
        }
    }
    if succeeded == 0 {
        return Err(Error::Format(format!(
            "no image could be explained ({skipped} skipped)"
        )));
    }
    let written = outputs.commit(&config.out)?;
    Ok(CommandOutcome { summary, written })
}
