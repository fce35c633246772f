use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elm_metalearn::dataset::{check_admission, normalize, save_canonical, Dataset};
use elm_metalearn::evaluation::{compare_report, loo_evaluate, write_ranking_csv, LooReport};
use elm_metalearn::label_search::{label_histogram, run_sweep, with_workers, HistogramBin, SweepResult};
use elm_metalearn::meta_features::extract_meta_features;
use elm_metalearn::meta_learners::{
    fit, load_model, recommend_from_raw, save_model, LearnerSpec, M5Params, SvrParams,
};
use elm_metalearn::metabase::{build_metabase, load_metabase, save_metabase, MetaBase, MetaBaseHeader};
use elm_metalearn::synthetic::{sinusoid_corpus, sinusoid_dataset};
use elm_metalearn::Error as CoreError;
use serde::Serialize;

use crate::artifacts::{self, ArtifactMeta, Corpus, FeatureRow, RunLog};
use crate::config::PipelineConfig;
use crate::failure::{CmdResult, Failure};
use crate::*;

pub(crate) fn dispatch(command: Command) -> CmdResult<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Features(a) => features(a),
        Command::LabelSweep(a) => label_sweep(a),
        Command::BuildMetabase(a) => build(a),
        Command::TrainMeta(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Predict(a) => predict(a),
        Command::Report(a) => report(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Synth(a) => synth(a),
    }
}

/// Runs `f` on a rayon pool sized by the resolved worker count.
fn in_pool<T: Send>(cfg: &PipelineConfig, f: impl FnOnce() -> CmdResult<T> + Send) -> CmdResult<T> {
    let workers = cfg.resolve_workers()?;
    with_workers(workers, f)?
}

fn ingest_stage(corpus: &Corpus, out_dir: &Path) -> CmdResult<()> {
    artifacts::write_admission_csv(&corpus.reports, &out_dir.join("admission.csv"))?;
    let dir = out_dir.join("normalized");
    fs::create_dir_all(&dir)?;
    for d in &corpus.admitted {
        let n = normalize(d).map_err(|e| Failure::from(e).context(&d.name))?;
        save_canonical(&n, dir.join(format!("{}.csv", d.name)))?;
    }
    Ok(())
}

fn features_stage(datasets: &[Dataset], cfg: &PipelineConfig, hash: &str, out: &Path) -> CmdResult<()> {
    let mut rows = Vec::with_capacity(datasets.len());
    for d in datasets {
        let ex = extract_meta_features(d, &cfg.extractor).map_err(|e| Failure::from(e).context(&d.name))?;
        for w in &ex.warnings {
            log::info!("{}: {w}", d.name);
        }
        rows.push(FeatureRow {
            dataset: d.name.clone(),
            features: ex.features,
            warnings: ex.warnings,
        });
    }
    artifacts::write_features_csv(&rows, out)?;
    let meta = ArtifactMeta::new("features", hash.into(), cfg.extractor, cfg.effective_sweep());
    artifacts::write_meta(&meta, out)
}

fn sweep_stage(datasets: &[Dataset], cfg: &PipelineConfig, hash: &str, out_dir: &Path) -> CmdResult<PathBuf> {
    let sweep = cfg.effective_sweep();
    let dir = out_dir.join("sweeps");
    fs::create_dir_all(&dir)?;
    let mut results: Vec<SweepResult> = Vec::new();
    for (i, d) in datasets.iter().enumerate() {
        log::info!("sweep {}/{}: {} ({} rows)", i + 1, datasets.len(), d.name, d.n_rows());
        let outcome = normalize(d).and_then(|n| run_sweep(&n, &sweep));
        match outcome {
            Ok(r) => {
                log::info!("{}: best hidden count {} (rmse {:.5})", r.dataset, r.best_count, r.min_mean_rmse);
                artifacts::write_json(&r, &dir.join(format!("{}.json", r.dataset)))?;
                results.push(r);
            }
            Err(e) => log::warn!("{}: sweep failed: {e}", d.name),
        }
    }
    if results.is_empty() {
        return Err(Failure::runtime("every sweep failed"));
    }
    let summary = out_dir.join("sweep_summary.csv");
    artifacts::write_summary_csv(&results, &summary)?;
    artifacts::write_meta(&ArtifactMeta::new("sweep_summary", hash.into(), cfg.extractor, sweep), &summary)?;
    Ok(summary)
}

fn build_stage(features: &Path, summary: &Path, out: &Path) -> CmdResult<MetaBase> {
    let fmeta = artifacts::read_meta(features, "features")?;
    let smeta = artifacts::read_meta(summary, "sweep_summary")?;
    let header = MetaBaseHeader::new(fmeta.extractor, smeta.sweep);
    let (mb, join) = build_metabase(
        header,
        &artifacts::read_features_csv(features)?,
        &artifacts::read_summary_csv(summary)?,
    )?;
    for name in &join.features_only {
        log::warn!("{name}: has features but no label, left out");
    }
    for name in &join.labels_only {
        log::warn!("{name}: has a label but no features, left out");
    }
    save_metabase(&mb, out)?;
    log::info!("meta-base: {} example(s) written to {}", mb.len(), out.display());
    Ok(mb)
}

fn evaluate_stage(mb: &MetaBase, learners: &[LearnerSpec], hash: &str, out_dir: &Path) -> CmdResult<Vec<LooReport>> {
    let dir = out_dir.join("evaluation");
    fs::create_dir_all(&dir)?;
    let mut reports = Vec::with_capacity(learners.len());
    for spec in learners {
        let r = loo_evaluate(spec, mb).map_err(|e| Failure::from(e).context(spec.id()))?;
        log::info!(
            "{}: RAE {:.2}% correlation {:.3}{}",
            r.learner,
            r.rae_percent,
            r.pearson_correlation,
            if r.rae_degenerate || r.correlation_degenerate { " (degenerate)" } else { "" }
        );
        artifacts::write_json(&r, &dir.join(format!("{}.json", r.learner)))?;
        reports.push(r);
    }
    let csv = out_dir.join("evaluation.csv");
    write_ranking_csv(&compare_report(&reports), artifacts::create(&csv)?)?;
    let meta = ArtifactMeta::new("evaluation", hash.into(), mb.header.extractor, mb.header.sweep.clone());
    artifacts::write_meta(&meta, &csv)?;
    Ok(reports)
}

fn train_stage(mb: &MetaBase, learners: &[LearnerSpec], out_dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(out_dir)?;
    for spec in learners {
        let model = fit(spec, mb).map_err(|e| Failure::from(e).context(spec.id()))?;
        for w in &model.warnings {
            log::warn!("{}: {w}", spec.id());
        }
        save_model(&model, out_dir.join(format!("{}.json", spec.id())))?;
    }
    Ok(())
}

fn report_stage(summary: &Path, bin_width: usize, out: &Path) -> CmdResult<Vec<HistogramBin>> {
    let mut meta = artifacts::read_meta(summary, "sweep_summary")?;
    let labels: Vec<usize> = artifacts::read_summary_csv(summary)?.iter().map(|r| r.best_count).collect();
    let bins = label_histogram(&labels, meta.sweep.n_min, meta.sweep.n_max, bin_width)?;
    artifacts::write_histogram_csv(&bins, out)?;
    meta.artifact = "histogram".into();
    meta.bin_width = Some(bin_width);
    artifacts::write_meta(&meta, out)?;
    let busiest = bins.iter().max_by_key(|b| b.count).expect("range is non-empty");
    log::info!(
        "histogram: {} bin(s), {} label(s), most in [{}, {}] ({})",
        bins.len(),
        labels.len(),
        busiest.start,
        busiest.end,
        busiest.count
    );
    Ok(bins)
}

fn ingest(a: IngestArgs) -> CmdResult<()> {
    let cfg = a.common.resolve()?;
    cfg.validate()?;
    let target = a.target.or(cfg.target);
    let corpus = artifacts::load_corpus(&a.corpus, target.as_deref())?;
    ingest_stage(&corpus, &a.out_dir)
}

fn features(a: FeaturesArgs) -> CmdResult<()> {
    let mut cfg = a.common.resolve()?;
    a.extractor.apply(&mut cfg);
    if a.target.is_some() {
        cfg.target = a.target;
    }
    cfg.validate()?;
    let corpus = artifacts::load_corpus(&a.corpus, cfg.target.as_deref())?;
    features_stage(&corpus.admitted, &cfg, &cfg.config_hash(), &a.out)
}

fn label_sweep(a: LabelSweepArgs) -> CmdResult<()> {
    let mut cfg = a.common.resolve()?;
    a.sweep.apply(&mut cfg);
    if a.target.is_some() {
        cfg.target = a.target;
    }
    cfg.validate()?;
    let corpus = artifacts::load_corpus(&a.corpus, cfg.target.as_deref())?;
    in_pool(&cfg, || sweep_stage(&corpus.admitted, &cfg, &cfg.config_hash(), &a.out_dir)).map(|_| ())
}

fn build(a: BuildMetabaseArgs) -> CmdResult<()> {
    artifacts::require_file(&a.features)?;
    artifacts::require_file(&a.summary)?;
    build_stage(&a.features, &a.summary, &a.out).map(|_| ())
}

fn train_spec(a: &TrainMetaArgs, cfg: &PipelineConfig) -> CmdResult<LearnerSpec> {
    if let Some(id) = &a.learner {
        return cfg.learner(id);
    }
    let family = a
        .family
        .ok_or_else(|| Failure::validation("pass --family or --learner"))?;
    let spec = match family {
        Family::Mean => LearnerSpec::Mean,
        Family::Knn1 => LearnerSpec::Knn1,
        Family::Linear => LearnerSpec::Linear,
        Family::M5 => {
            let mut p = M5Params::default();
            if let Some(v) = a.min_leaf {
                p.min_leaf = v;
            }
            if let Some(v) = a.smoothing_k {
                p.smoothing_k = v;
            }
            p.prune = !a.no_prune;
            LearnerSpec::M5(p)
        }
        Family::Svr => {
            let mut p = match a.kernel.unwrap_or(KernelKind::Rbf) {
                KernelKind::Rbf => SvrParams::rbf(a.gamma.unwrap_or(0.1)),
                KernelKind::Poly => {
                    let mut p = SvrParams::polynomial();
                    if let elm_metalearn::meta_learners::Kernel::Polynomial { degree, coef0 } = &mut p.kernel {
                        *degree = a.degree.unwrap_or(*degree);
                        *coef0 = a.coef0.unwrap_or(*coef0);
                    }
                    p
                }
            };
            p.c = a.c.unwrap_or(p.c);
            p.epsilon = a.epsilon.unwrap_or(p.epsilon);
            p.tolerance = a.tolerance.unwrap_or(p.tolerance);
            LearnerSpec::Svr(p)
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn train(a: TrainMetaArgs) -> CmdResult<()> {
    let cfg = a.common.resolve()?;
    let spec = train_spec(&a, &cfg)?;
    artifacts::require_file(&a.metabase)?;
    let mb = load_metabase(&a.metabase)?;
    let model = fit(&spec, &mb)?;
    for w in &model.warnings {
        log::warn!("{}: {w}", spec.id());
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_model(&model, &a.out)?;
    log::info!("{} trained on {} example(s), saved to {}", spec.id(), mb.len(), a.out.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> CmdResult<()> {
    let mut cfg = a.common.resolve()?;
    let explicit = a.extractor.apply(&mut cfg) || a.common.config.is_some();
    cfg.validate()?;
    artifacts::require_file(&a.metabase)?;
    let mb = load_metabase(&a.metabase)?;
    if explicit && cfg.extractor.config_hash() != mb.header.extractor_hash {
        return Err(CoreError::ConfigHashMismatch {
            expected: cfg.extractor.config_hash(),
            actual: mb.header.extractor_hash.clone(),
        }
        .into());
    }
    let learners = if a.learners.is_empty() {
        cfg.learners.clone()
    } else {
        a.learners.iter().map(|id| cfg.learner(id)).collect::<CmdResult<Vec<_>>>()?
    };
    let hash = cfg.config_hash();
    in_pool(&cfg, || evaluate_stage(&mb, &learners, &hash, &a.out_dir)).map(|_| ())
}

/// What `predict` prints and writes.
#[derive(Debug, Serialize)]
pub struct PredictionRecord {
    pub dataset: String,
    pub predicted_raw: f64,
    pub recommended_count: usize,
    pub family: String,
}

fn predict(a: PredictArgs) -> CmdResult<()> {
    let mut cfg = a.common.resolve()?;
    a.extractor.apply(&mut cfg);
    cfg.validate()?;
    artifacts::require_file(&a.model)?;
    artifacts::require_file(&a.dataset)?;
    let model = load_model(&a.model)?;
    let target = a.target.or(cfg.target.clone());
    let d = artifacts::load_file(&a.dataset, target.as_deref())?;
    let admission = check_admission(&d);
    if !admission.admitted {
        log::warn!("{}: outside corpus admission rules ({})", d.name, admission.reasons.join("; "));
    }
    let ex = extract_meta_features(&d, &cfg.extractor)?;
    let raw = model.predict_raw(&ex.features, &cfg.extractor.config_hash())?;
    let record = PredictionRecord {
        dataset: d.name.clone(),
        predicted_raw: raw,
        recommended_count: recommend_from_raw(raw, model.label_range),
        family: model.spec.family().into(),
    };
    let out = a
        .out
        .unwrap_or_else(|| a.model.with_file_name(format!("{}.prediction.json", d.name)));
    artifacts::write_json(&record, &out)?;
    println!("{}", serde_json::to_string(&record)?);
    Ok(())
}

fn report(a: ReportArgs) -> CmdResult<()> {
    let cfg = a.common.resolve()?;
    let width = a.bin_width.unwrap_or(cfg.histogram_bin_width);
    if width < 1 {
        return Err(Failure::validation("bin width must be at least 1"));
    }
    artifacts::require_file(&a.summary)?;
    let out = a.out.unwrap_or_else(|| a.summary.with_file_name("histogram.csv"));
    report_stage(&a.summary, width, &out).map(|_| ())
}

fn stage<T>(name: &str, run_log: &mut RunLog, f: impl FnOnce() -> CmdResult<T>) -> CmdResult<T> {
    log::info!("== {name}");
    run_log.line(&format!("{name}: start"));
    let t = Instant::now();
    match f() {
        Ok(v) => {
            run_log.line(&format!("{name}: done in {:.3}s", t.elapsed().as_secs_f64()));
            Ok(v)
        }
        Err(e) => {
            run_log.line(&format!("{name}: failed: {e}"));
            Err(e.context(format!("stage `{name}`")))
        }
    }
}

fn pipeline(a: PipelineArgs) -> CmdResult<()> {
    let mut cfg = a.common.resolve()?;
    if a.corpus.is_some() {
        cfg.corpus_dir = a.corpus;
    }
    if a.out_dir.is_some() {
        cfg.output_dir = a.out_dir;
    }
    if a.target.is_some() {
        cfg.target = a.target;
    }
    if let Some(w) = a.bin_width {
        cfg.histogram_bin_width = w;
    }
    a.sweep.apply(&mut cfg);
    a.extractor.apply(&mut cfg);
    cfg.validate()?;
    let corpus_dir = cfg
        .corpus_dir
        .clone()
        .ok_or_else(|| Failure::validation("no corpus: set `corpus_dir` or pass --corpus"))?;
    let out = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Failure::validation("no output directory: set `output_dir` or pass --out-dir"))?;
    artifacts::require_dir(&corpus_dir)?;
    cfg.resolve_workers()?;

    fs::create_dir_all(&out)?;
    let hash = cfg.config_hash();
    artifacts::write_json(&cfg, &out.join("config.resolved.json"))?;
    let mut run_log = RunLog::open(&out.join("run.log"))?;
    run_log.line(&format!("pipeline: config hash {hash}"));

    let result = in_pool(&cfg, || {
        let log = &mut run_log;
        let corpus = stage("ingest", log, || {
            let c = artifacts::load_corpus(&corpus_dir, cfg.target.as_deref())?;
            ingest_stage(&c, &out)?;
            Ok(c)
        })?;
        let features = out.join("features.csv");
        stage("features", log, || features_stage(&corpus.admitted, &cfg, &hash, &features))?;
        let summary = stage("label-sweep", log, || sweep_stage(&corpus.admitted, &cfg, &hash, &out))?;
        let mb = stage("build-metabase", log, || build_stage(&features, &summary, &out.join("metabase.csv")))?;
        stage("evaluate", log, || evaluate_stage(&mb, &cfg.learners, &hash, &out))?;
        stage("train-meta", log, || train_stage(&mb, &cfg.learners, &out.join("models")))?;
        stage("report", log, || {
            report_stage(&summary, cfg.histogram_bin_width, &out.join("histogram.csv"))
        })?;
        Ok(())
    });
    match &result {
        Ok(()) => run_log.line("pipeline: done"),
        Err(_) => run_log.line("pipeline: aborted"),
    }
    result
}

fn synth(a: SynthArgs) -> CmdResult<()> {
    if a.count < 1 {
        return Err(Failure::validation("count must be at least 1"));
    }
    if a.min_components < 1 || a.min_components > a.max_components {
        return Err(Failure::validation(format!(
            "component range [{}, {}] must satisfy 1 <= min <= max",
            a.min_components, a.max_components
        )));
    }
    let specs = sinusoid_corpus(a.count, (a.min_components, a.max_components), a.seed);
    for spec in &specs {
        let d = sinusoid_dataset(spec)?;
        artifacts::write_dataset_csv(&d, &a.out_dir.join(format!("{}.csv", spec.name)))?;
    }
    if let Some(path) = &a.truth {
        let mut w = csv::Writer::from_writer(artifacts::create(path)?);
        w.write_record(["dataset", "components"])?;
        for s in &specs {
            w.write_record([s.name.clone(), s.components.to_string()])?;
        }
        w.flush()?;
    }
    log::info!("wrote {} dataset(s) to {}", specs.len(), a.out_dir.display());
    Ok(())
}
