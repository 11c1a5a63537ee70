use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use log::{info, warn};
use serde::Serialize;

use ddce_core::bench::{
    gen_dataset, load_models, records_for_samples, run_montecarlo, save_models, train_models,
    Dataset, EstimatorSpec, MetricsReport, Scenario,
};
use ddce_core::complexity::{count, figure_svg};
use ddce_core::est_dl::Pipeline;
use ddce_core::{CostParams, CountTarget, Error};

use crate::{Common, Format};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn reject_coding(c: &Common) -> Result<()> {
    match &c.coding {
        Some(scheme) => {
            Err(Error::Unimplemented(format!("channel coding `{scheme}`; BER is uncoded")).into())
        }
        None => Ok(()),
    }
}

/// Reads the scenario file and applies the command-line overrides.
fn scenario(c: &Common) -> Result<Scenario> {
    reject_coding(c)?;
    let path = c
        .config
        .as_ref()
        .ok_or_else(|| config_err("a scenario config file is required"))?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut s = Scenario::from_toml(&text).map_err(|e| match e {
        Error::Config(m) => config_err(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(seed) = c.seed {
        s.seed = seed;
    }
    if let Some(frames) = c.frames {
        s.frames = frames;
    }
    if let Some(w) = c.workers {
        s.workers = w;
    }
    s.validate()?;
    Ok(s)
}

fn learned(s: &Scenario, names: &[String]) -> Result<Vec<Pipeline>> {
    let out: Vec<Pipeline> = if names.is_empty() {
        s.estimator_specs()?
            .into_iter()
            .filter_map(|e| match e {
                EstimatorSpec::Learned(p) => Some(p),
                _ => None,
            })
            .collect()
    } else {
        names
            .iter()
            .map(|n| n.parse())
            .collect::<ddce_core::Result<_>>()?
    };
    if out.is_empty() {
        return Err(config_err("no learned estimators selected").into());
    }
    Ok(out)
}

fn dataset_path(dir: &Path, p: Pipeline) -> PathBuf {
    dir.join(format!("{}.ddcd", p.slug()))
}

fn make_dataset(s: &Scenario, p: Pipeline) -> Result<Dataset> {
    info!(
        "generating {} samples for {p} at {} dB",
        s.train.samples, s.train.snr_db
    );
    Ok(gen_dataset(s, p, s.train.samples, s.train.snr_db)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

pub fn dataset(c: &Common, names: &[String], samples: Option<usize>) -> Result<()> {
    let mut s = scenario(c)?;
    if let Some(n) = samples {
        s.train.samples = n;
    }
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("data"));
    create_dir(&dir)?;
    for p in learned(&s, names)? {
        let d = make_dataset(&s, p)?;
        let path = dataset_path(&dir, p);
        d.save(&path)?;
        println!(
            "{p}: {} records ({} train) -> {}",
            d.len(),
            d.n_train,
            path.display()
        );
    }
    Ok(())
}

/// Loads the pipeline's dataset from `dir` if it matches the scenario,
/// otherwise generates and stores it.
fn dataset_for(s: &Scenario, p: Pipeline, dir: &Path) -> Result<Dataset> {
    let path = dataset_path(dir, p);
    if path.exists() {
        let d = Dataset::load(&path)?;
        let want = records_for_samples(p, s.train.samples, s.phy.n_symbols);
        if d.pipeline == p
            && d.len() == want
            && d.scenario == s.label()
            && d.train_snr_db == s.train.snr_db
        {
            info!("using {}", path.display());
            return Ok(d);
        }
        warn!(
            "{} does not match the scenario; regenerating",
            path.display()
        );
    }
    let d = make_dataset(s, p)?;
    create_dir(dir)?;
    d.save(&path)?;
    Ok(d)
}

fn fit_and_save(s: &Scenario, d: &Dataset, models: &Path) -> Result<()> {
    let p = d.pipeline;
    info!(
        "training {p}: {} records, {} epochs",
        d.n_train, s.train.epochs
    );
    let t = train_models(s, d)?;
    let paths = save_models(models, p, &t.nets, &t.histories)?;
    let last = t
        .histories
        .last()
        .and_then(|h| h.last())
        .copied()
        .unwrap_or(f64::NAN);
    println!(
        "{p}: final train loss {last:.4e}, test MSE {:.4e} -> {}",
        t.test_mse,
        paths[0].display()
    );
    Ok(())
}

pub fn train(c: &Common, names: &[String], samples: Option<usize>, data: &Path) -> Result<()> {
    let mut s = scenario(c)?;
    if let Some(n) = samples {
        s.train.samples = n;
    }
    let models = c.out.clone().unwrap_or_else(|| s.models_dir.clone());
    for p in learned(&s, names)? {
        let d = dataset_for(&s, p, data)?;
        fit_and_save(&s, &d, &models)?;
    }
    Ok(())
}

fn write_results(report: &MetricsReport, dir: &Path, title: &str) -> Result<()> {
    create_dir(dir)?;
    let csv = dir.join("results.csv");
    report.write_csv(&csv)?;
    report.write_svgs(dir, title)?;
    println!("{}", csv.display());
    Ok(())
}

pub fn evaluate(c: &Common, models: Option<PathBuf>) -> Result<()> {
    let mut s = scenario(c)?;
    if let Some(m) = models {
        s.models_dir = m;
    }
    let report = run_montecarlo(&s)?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_results(&report, &dir, &s.label())
}

pub fn simulate(c: &Common, models: Option<PathBuf>, samples: Option<usize>) -> Result<()> {
    let mut s = scenario(c)?;
    if let Some(m) = models {
        s.models_dir = m;
    }
    if let Some(n) = samples {
        s.train.samples = n;
    }
    for spec in s.estimator_specs()? {
        let EstimatorSpec::Learned(p) = spec else {
            continue;
        };
        if load_models(&s.models_dir, p).is_ok() {
            info!("using trained {p} from {}", s.models_dir.display());
            continue;
        }
        let d = make_dataset(&s, p)?;
        fit_and_save(&s, &d, &s.models_dir)?;
    }
    let report = run_montecarlo(&s)?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    write_results(&report, &dir, &s.label())
}

#[derive(Serialize)]
struct CountRow {
    estimator: String,
    muldiv: u128,
    addsub: u128,
}

fn read_params(path: &Path) -> Result<CostParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed: std::result::Result<CostParams, String> =
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
    Ok(parsed.map_err(|m| config_err(format!("{}: {m}", path.display())))?)
}

pub fn complexity(
    c: &Common,
    names: &[String],
    params: Option<&Path>,
    format: Format,
    figure: bool,
) -> Result<()> {
    reject_coding(c)?;
    let p = match params {
        Some(path) => read_params(path)?.or(&CostParams::defaults()),
        None => CostParams::defaults(),
    };
    let targets: Vec<CountTarget> = if names.is_empty() {
        CountTarget::SBS_FIGURE
            .into_iter()
            .chain(CountTarget::FBF_FIGURE)
            .collect()
    } else {
        names
            .iter()
            .map(|n| n.parse())
            .collect::<ddce_core::Result<_>>()?
    };
    let mut rows = Vec::new();
    for &t in &targets {
        let n = count(t, &p)?;
        rows.push(CountRow {
            estimator: t.name(),
            muldiv: n.muldiv,
            addsub: n.addsub,
        });
    }
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut s = String::from("estimator,muldiv,addsub\n");
            for r in &rows {
                s += &format!("{},{},{}\n", r.estimator, r.muldiv, r.addsub);
            }
            s
        }
    };
    match &c.out {
        Some(dir) => {
            create_dir(dir)?;
            let ext = if format == Format::Json {
                "json"
            } else {
                "csv"
            };
            let path = dir.join(format!("complexity.{ext}"));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        None => print!("{text}"),
    }
    if figure {
        let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
        create_dir(&dir)?;
        let path = dir.join("complexity.svg");
        fs::write(&path, figure_svg(&targets, &p)?).map_err(|e| Error::io(&path, e))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn plot(c: &Common, results: Option<PathBuf>, title: Option<String>) -> Result<()> {
    reject_coding(c)?;
    let csv = results
        .or_else(|| c.out.as_ref().map(|d| d.join("results.csv")))
        .ok_or_else(|| config_err("give --results or --out"))?;
    let report = MetricsReport::read_csv(&csv)?;
    let dir = match &c.out {
        Some(d) => d.clone(),
        None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let title = match (title, &c.config) {
        (Some(t), _) => t,
        (None, Some(_)) => scenario(c)?.label(),
        (None, None) => "BER and NMSE".into(),
    };
    report.write_svgs(&dir, &title)?;
    println!("{}", dir.join("ber.svg").display());
    Ok(())
}
