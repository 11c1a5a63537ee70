//! Trained-network files of a pipeline.

use std::path::{Path, PathBuf};

use super::{Dataset, DatasetSplit, Scenario};
use crate::error::{Error, Result};
use crate::est_conv::EstContext;
use crate::est_dl::{forward_batched, train_pipeline, Pipeline};
use crate::nn::{load_checkpoint, mse, save_checkpoint, save_loss_history, Net};

/// `{dir}/{slug}.ddcn`, or `{dir}/{slug}-{role}.ddcn` for pipelines with
/// more than one network.
pub fn model_paths(dir: &Path, pipeline: Pipeline) -> Vec<PathBuf> {
    let roles = pipeline.roles();
    if roles.len() == 1 {
        vec![dir.join(format!("{}.ddcn", pipeline.slug()))]
    } else {
        roles
            .iter()
            .map(|r| dir.join(format!("{}-{r}.ddcn", pipeline.slug())))
            .collect()
    }
}

/// Missing files are a configuration error naming the pipeline.
pub fn load_models(dir: &Path, pipeline: Pipeline) -> Result<Vec<Net>> {
    model_paths(dir, pipeline)
        .iter()
        .map(|p| {
            if !p.exists() {
                return Err(Error::config(format!(
                    "no trained model for {pipeline}: {} not found (run `ddce train`)",
                    p.display()
                )));
            }
            load_checkpoint(p)
        })
        .collect()
}

/// Writes the networks and, next to each, its loss history as
/// `*.loss.csv`. Returns the checkpoint paths.
pub fn save_models(
    dir: &Path,
    pipeline: Pipeline,
    nets: &[Net],
    histories: &[Vec<f64>],
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = model_paths(dir, pipeline);
    if nets.len() != paths.len() {
        return Err(Error::config(format!(
            "{pipeline} has {} networks, got {}",
            paths.len(),
            nets.len()
        )));
    }
    for (i, (net, path)) in nets.iter().zip(&paths).enumerate() {
        save_checkpoint(net, path)?;
        if let Some(h) = histories.get(i) {
            save_loss_history(h, &path.with_extension("loss.csv"))?;
        }
    }
    Ok(paths)
}

/// Networks of one pipeline fitted to a dataset.
#[derive(Debug, Clone)]
pub struct Trained {
    pub pipeline: Pipeline,
    pub nets: Vec<Net>,
    /// Mean training loss per epoch, per network.
    pub histories: Vec<Vec<f64>>,
    /// MSE of the whole pipeline's networks on the test split.
    pub test_mse: f64,
}

/// Trains on the training split with the scenario's settings and scores the
/// test split.
pub fn train_models(scenario: &Scenario, data: &Dataset) -> Result<Trained> {
    let ctx = EstContext::new(&scenario.phy_config());
    let cfg = scenario.train.config(scenario.seed);
    let (x, y) = data.split(DatasetSplit::Train);
    let (nets, histories) = train_pipeline(data.pipeline, &ctx, &x, &y, &cfg)?;
    let (mut xt, yt) = data.split(DatasetSplit::Test);
    let test_mse = if xt.batch() == 0 {
        f64::NAN
    } else {
        for net in &nets {
            xt = forward_batched(net, &xt, 64)?;
        }
        mse(&xt, &yt).0
    };
    Ok(Trained {
        pipeline: data.pipeline,
        nets,
        histories,
        test_mse,
    })
}
