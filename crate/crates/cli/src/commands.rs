use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use bspf::bench::experiment::{summarize_sweep, write_sweep_csv};
use bspf::bench::{
    budget_sweep, cv_evaluate, dimension_usage, friedman_generate, ingest_csv, ingest_with_schema, partial_dependence,
    rmae, RmaeVariant,
};
use bspf::inference::{gibbs_run, PosteriorSamples};
use bspf::{model_io, BspForest, InputSchema};

use crate::cli::{DimuseCmd, EvalCmd, FriedmanCmd, PdpCmd, PredictCmd, SweepCmd, TrainCmd};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(CliError::io(path))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// Opens `path`, or stdout when `None`.
fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(CliError::io(path))
}

fn schema_of(forest: &BspForest) -> CliResult<&InputSchema> {
    forest.schema.as_ref().ok_or(CliError::Invalid {
        key: "model",
        message: "model has no input schema; train it with this tool".into(),
    })
}

pub fn train(cmd: &TrainCmd) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cmd.train)?;
    let ds = ingest_csv(&cmd.data, &cfg.label_column(), true)?;
    log::info!("training on {} rows, {} features", ds.n(), ds.d());
    let out = gibbs_run(&ds.x, &ds.y, cfg.sampler.clone())?;

    let schema = ds.schema();
    let mut model = out.state.forest.clone();
    model.schema = Some(schema.clone());
    let samples: Vec<BspForest> = out
        .samples
        .forests
        .iter()
        .cloned()
        .map(|mut f| {
            f.schema = Some(schema.clone());
            f
        })
        .collect();

    ensure_dir(&cmd.out)?;
    let ext = if cmd.json { "json" } else { "bspf" };
    let mut manifest = Manifest::new("train", cfg.sampler.seed, &cfg)?.with_data(&cmd.data)?;
    let model_path = cmd.out.join(format!("model.{ext}"));
    model_io::save(&model, &model_path)?;
    manifest.output(&model_path);
    let samples_path = cmd.out.join(format!("samples.{ext}"));
    model_io::save_samples(&samples, &samples_path)?;
    manifest.output(&samples_path);
    let trace_path = cmd.out.join("trace.csv");
    out.write_trace_csv(create(&trace_path)?)?;
    manifest.output(&trace_path);
    let diag_path = cmd.out.join("diagnostics.json");
    out.diagnostics.write_json(create(&diag_path)?)?;
    manifest.output(&diag_path);
    manifest.write(&cmd.out)?;

    let fit = PosteriorSamples { forests: samples }.predict_mean(&ds.x);
    let err = rmae(&ds.y, &fit, cfg.rmae_variant)?;
    eprintln!(
        "trained {} trees for {} iterations; mean cuts/tree {:.2}; train RMAE {err:.4}; wrote {}",
        model.m(),
        cfg.sampler.iterations,
        model.mean_cuts(),
        cmd.out.display()
    );
    Ok(())
}

pub fn predict(cmd: &PredictCmd) -> CliResult<()> {
    let model = model_io::load(&cmd.model)?;
    let schema = schema_of(&model)?;
    let (x, labels) = ingest_with_schema(&cmd.data, schema)?;
    let samples = match &cmd.samples {
        Some(p) => Some(PosteriorSamples {
            forests: model_io::load_samples(p)?,
        }),
        None => None,
    }
    .filter(|s| !s.is_empty());

    let mut w = csv_writer(sink(cmd.output.as_deref())?);
    let mut header = vec!["row", "prediction"];
    if samples.is_some() {
        header.extend(["lo", "hi"]);
    }
    w.write_record(&header).map_err(csv_err)?;
    let mut preds = Vec::with_capacity(x.n());
    for i in 0..x.n() {
        let row = x.row(i);
        let mut rec = vec![i.to_string()];
        match &samples {
            Some(s) => {
                let p = s.predict(row);
                let (lo, hi) = s.interval(row, 0.05, 0.95);
                rec.extend([p.mean.to_string(), lo.to_string(), hi.to_string()]);
                preds.push(p.mean);
            }
            None => {
                let p = model.predict(row).mean;
                rec.push(p.to_string());
                preds.push(p);
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(cmd.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"))))?;
    if let Some(y) = labels {
        let variant: RmaeVariant = cmd.rmae_variant.into();
        eprintln!("RMAE ({variant:?}) on {} rows: {:.6}", y.len(), rmae(&y, &preds, variant)?);
    }
    Ok(())
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Core(bspf::Error::from(e))
}

pub fn eval(cmd: &EvalCmd) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cmd.train)?;
    let ds = ingest_csv(&cmd.data, &cfg.label_column(), true)?;
    let report = cv_evaluate(&ds, cfg.folds, cfg.runs, &cfg.sampler, cfg.rmae_variant)?;
    ensure_dir(&cmd.out)?;
    let mut manifest = Manifest::new("eval", cfg.sampler.seed, &cfg)?.with_data(&cmd.data)?;
    let path = cmd.out.join("metrics.json");
    write_json(&path, &report)?;
    manifest.output(&path);
    manifest.write(&cmd.out)?;
    println!("RMAE {:.4} +- {:.4} over {} runs ({:.1}s)", report.rmae, report.rmae_std, cfg.runs, report.runtime_secs);
    Ok(())
}

pub fn friedman(cmd: &FriedmanCmd) -> CliResult<()> {
    let (ds, f) = friedman_generate(cmd.rows, cmd.dims, cmd.sigma, cmd.seed)?;
    let mut w = csv_writer(create(&cmd.output)?);
    let mut header = ds.feature_names.clone();
    header.push(ds.label_name.clone());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.x.row(i).iter().map(f64::to_string).collect();
        rec.push(ds.y[i].to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(&cmd.output))?;
    if let Some(p) = &cmd.truth {
        let mut t = csv_writer(create(p)?);
        t.write_record(["f"]).map_err(csv_err)?;
        for v in &f {
            t.write_record([v.to_string()]).map_err(csv_err)?;
        }
        t.flush().map_err(CliError::io(p))?;
    }
    Ok(())
}

pub fn sweep(cmd: &SweepCmd) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cmd.train)?;
    let ds = ingest_csv(&cmd.data, &cfg.label_column(), true)?;
    let rows = budget_sweep(&ds, &cmd.budgets, cfg.runs, &cfg.sampler, cfg.rmae_variant)?;
    ensure_dir(&cmd.out)?;
    let mut manifest = Manifest::new("sweep", cfg.sampler.seed, (&cfg, &cmd.budgets))?.with_data(&cmd.data)?;
    let csv_path = cmd.out.join("sweep.csv");
    write_sweep_csv(&rows, create(&csv_path)?)?;
    manifest.output(&csv_path);
    let summary = summarize_sweep(&rows);
    let json_path = cmd.out.join("sweep_summary.json");
    write_json(&json_path, &summary)?;
    manifest.output(&json_path);
    manifest.write(&cmd.out)?;
    for s in &summary {
        println!(
            "budget {:.2} {:?}: RMAE {:.4} +- {:.4}, cuts/tree {:.2}",
            s.budget, s.mode, s.rmae_mean, s.rmae_std, s.cuts_mean
        );
    }
    Ok(())
}

fn load_nonempty_samples(path: &Path) -> CliResult<Vec<BspForest>> {
    let forests = model_io::load_samples(path)?;
    if forests.is_empty() {
        return Err(CliError::Invalid {
            key: "samples",
            message: "file holds no posterior samples".into(),
        });
    }
    Ok(forests)
}

pub fn pdp(cmd: &PdpCmd) -> CliResult<()> {
    let forests = load_nonempty_samples(&cmd.samples)?;
    let schema = schema_of(&forests[0])?.clone();
    let (x, _) = ingest_with_schema(&cmd.data, &schema)?;
    let dims: Vec<usize> = if cmd.dims.is_empty() { (0..x.d()).collect() } else { cmd.dims.clone() };
    let mut w = csv_writer(create(&cmd.output)?);
    w.write_record(["dim", "name", "value", "raw_value", "mean", "lo", "hi"]).map_err(csv_err)?;
    for &k in &dims {
        let c = partial_dependence(&forests, &x, k, cmd.grid)?;
        let (lo, hi) = schema.bounds[k];
        for i in 0..c.grid.len() {
            w.write_record(&[
                k.to_string(),
                schema.feature_names[k].clone(),
                c.grid[i].to_string(),
                (lo + c.grid[i] * (hi - lo)).to_string(),
                c.mean[i].to_string(),
                c.lo[i].to_string(),
                c.hi[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(CliError::io(&cmd.output))?;
    Ok(())
}

pub fn dimuse(cmd: &DimuseCmd) -> CliResult<()> {
    let forests = load_nonempty_samples(&cmd.samples)?;
    let d = forests[0].n_features;
    let names = match &forests[0].schema {
        Some(s) => s.feature_names.clone(),
        None => (1..=d).map(|k| format!("x{k}")).collect(),
    };
    let usage = dimension_usage(&forests, d);
    bspf::bench::diagnostics::write_usage_csv(&usage, &names, sink(cmd.output.as_deref())?)?;
    Ok(())
}
