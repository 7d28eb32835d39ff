use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anflo_core::classifier::TimingStats;
use anflo_core::corpus::{load_bundle, load_corpus};
use anflo_core::learn::{parse_topic_labels, LearnError};
use anflo_core::taintir::TaintError;
use anflo_core::{
    classify_batch, learn as learn_models, propagate_taint, AnomalyReport, FlowModelSet,
    LearnConfig, LearnSummary, Provenance, QuantileMethod,
};
use anyhow::{anyhow, Context};
use serde::Serialize;

use crate::config::{
    filter_policy, load_catalog, load_preprocessor, parse_quantile, parse_strategy, pick,
    resolve_seed, FileConfig, TopicOverrides,
};
use crate::{exit, ClassifyArgs, Failure, FlowsArgs, LearnArgs, TextArgs};

fn required(value: Option<PathBuf>, flag: &str) -> Result<PathBuf, Failure> {
    value.ok_or_else(|| Failure::usage(anyhow!("missing --{flag} (flag or config file)")))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::other)
}

fn quantile_name(q: QuantileMethod) -> &'static str {
    match q {
        QuantileMethod::Interpolated => "interpolated",
        QuantileMethod::TukeyHinges => "tukey",
    }
}

fn fmt_tau(tau: Option<f64>) -> String {
    tau.map_or_else(|| "-".to_string(), |t| format!("{t}"))
}

struct Shared {
    file: FileConfig,
    catalog: anflo_core::ApiCatalog,
    text: anflo_core::Preprocessor,
}

fn shared(args: &TextArgs) -> Result<Shared, Failure> {
    let file = FileConfig::load_opt(args.config.as_deref())?;
    let catalog = load_catalog(pick(args.catalog.clone(), file.catalog.clone()).as_deref())?;
    let text = load_preprocessor(
        pick(args.stopwords.clone(), file.stopwords.clone()).as_deref(),
        pick(args.lemmas.clone(), file.lemmas.clone()).as_deref(),
        pick(args.english_threshold, file.english_threshold),
    )?;
    Ok(Shared {
        file,
        catalog,
        text,
    })
}

pub fn learn(a: LearnArgs) -> Result<u8, Failure> {
    let Shared {
        file,
        catalog,
        text,
    } = shared(&a.text)?;
    let corpus = required(pick(a.corpus, file.corpus), "corpus")?;
    let out = required(pick(a.out, file.out), "out")?;
    let seed = resolve_seed(a.seed, file.seed)?;
    let topic_params = TopicOverrides {
        k: pick(a.k, file.k),
        alpha: pick(a.alpha, file.alpha),
        beta: pick(a.beta, file.beta),
        train_iters: pick(a.train_iters, file.train_iters),
        infer_iters: pick(a.infer_iters, file.infer_iters),
        burn_in: pick(a.burn_in, file.burn_in),
    }
    .apply(seed)?;
    let topic_labels = match pick(a.topic_labels, file.topic_labels) {
        Some(p) => {
            let raw = std::fs::read_to_string(&p)
                .with_context(|| format!("reading topic labels {}", p.display()))
                .map_err(Failure::other)?;
            parse_topic_labels(&raw, &text)
        }
        None => Vec::new(),
    };
    let config = LearnConfig {
        strategy: parse_strategy(pick(a.strategy, file.strategy))?,
        topic_params,
        filter_policy: filter_policy(
            pick(a.min_words, file.min_words),
            pick(a.require_english, file.require_english),
        ),
        quantile_method: parse_quantile(pick(a.quantile, file.quantile))?,
        topic_labels,
    };

    let bundles = load_corpus(&corpus, Provenance::Trusted)
        .with_context(|| format!("loading corpus {}", corpus.display()))
        .map_err(Failure::other)?;
    let (set, summary) = learn_models(bundles, &catalog, &text, &config).map_err(|e| {
        let code = match &e {
            LearnError::EmptyFilteredCorpus => exit::EMPTY_CORPUS,
            LearnError::Analysis {
                source: TaintError::UnknownApi { .. } | TaintError::RoleMismatch { .. },
                ..
            } => exit::CATALOG,
            _ => exit::OTHER,
        };
        Failure::new(code, e.into())
    })?;
    write_file(&out, &set.to_json())?;
    if let Some(p) = a.summary {
        let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        json.push('\n');
        write_file(&p, &json)?;
    }
    print!("{}", render_summary(&set, &summary));
    Ok(exit::OK)
}

fn render_summary(set: &FlowModelSet, s: &LearnSummary) -> String {
    let mut out = String::new();
    let kept = s.loaded - s.rejected.len() - s.uncategorized.len();
    let _ = writeln!(
        out,
        "loaded {} bundles, kept {}, rejected {}",
        s.loaded,
        kept,
        s.rejected.len()
    );
    for (id, reason) in &s.rejected {
        let _ = writeln!(out, "  rejected {id}: {reason}");
    }
    for id in &s.uncategorized {
        let _ = writeln!(out, "  skipped {id}: no category");
    }
    let _ = writeln!(
        out,
        "strategy {}, quantiles {}, {} groups",
        set.strategy,
        quantile_name(set.quantile_method),
        s.groups.len()
    );
    let _ = writeln!(
        out,
        "{:<24} {:<16} {:>6} {:>6} {:>8}",
        "group", "label", "apps", "flows", "tau"
    );
    for g in &s.groups {
        let _ = writeln!(
            out,
            "{:<24} {:<16} {:>6} {:>6} {:>8}",
            g.group_key,
            g.label.as_deref().unwrap_or("-"),
            g.apps,
            g.distinct_flows,
            fmt_tau(g.tau)
        );
    }
    out
}

pub fn load_model(path: &Path) -> Result<FlowModelSet, Failure> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading model {}", path.display()))
        .map_err(Failure::model)?;
    FlowModelSet::from_json(&raw)
        .with_context(|| format!("reading model {}", path.display()))
        .map_err(Failure::model)
}

#[derive(Serialize)]
struct BundleError {
    bundle: String,
    error: String,
}

#[derive(Serialize)]
struct ClassifyOutput {
    normal: usize,
    anomalous: usize,
    reports: Vec<AnomalyReport>,
    errors: Vec<BundleError>,
}

/// `classify` and `bench` share loading, batching and error handling; they
/// differ in what they print and in whether anomalies affect the exit code.
pub fn classify(a: ClassifyArgs, bench: bool) -> Result<u8, Failure> {
    let Shared {
        file,
        catalog,
        text,
    } = shared(&a.text)?;
    let json = match a.format.as_str() {
        "text" => false,
        "json" => true,
        other => {
            return Err(Failure::usage(anyhow!(
                "unknown format `{other}` (text|json)"
            )))
        }
    };
    let model_path = required(pick(a.model, file.model), "model")?;
    let set = load_model(&model_path)?;
    let jobs = pick(a.jobs, file.jobs).unwrap_or(1).max(1);

    let mut errors = Vec::new();
    let mut bundles = Vec::new();
    for path in &a.bundles {
        match load_bundle(path, Provenance::UnderAnalysis) {
            Ok(b) => bundles.push(b),
            Err(e) => errors.push(BundleError {
                bundle: path.display().to_string(),
                error: e.to_string(),
            }),
        }
    }
    let (results, batch) = classify_batch(&set, &bundles, &catalog, &text, jobs);
    let mut reports = Vec::new();
    for (r, b) in results.into_iter().zip(&bundles) {
        match r {
            Ok(mut rep) => {
                if !a.timing {
                    rep.timing_ms = None;
                }
                reports.push(rep);
            }
            Err(e) => errors.push(BundleError {
                bundle: b.app_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let output = ClassifyOutput {
        normal: batch.normal,
        anomalous: batch.anomalous,
        reports,
        errors,
    };
    let mut encoded = serde_json::to_string_pretty(&output).expect("reports serialize");
    encoded.push('\n');
    if let Some(p) = &a.out {
        write_file(p, &encoded)?;
    }

    if bench {
        print!(
            "{}",
            render_bench(&output.reports, &batch.timings_ms, &batch.timing)
        );
    } else if json {
        print!("{encoded}");
    } else {
        for r in &output.reports {
            println!("{}", r.render());
        }
        println!(
            "{} normal, {} anomalous, {} errors",
            output.normal,
            output.anomalous,
            output.errors.len()
        );
    }
    for e in &output.errors {
        eprintln!("error: {}: {}", e.bundle, e.error);
    }

    Ok(if !bench && output.anomalous > 0 {
        exit::ANOMALOUS
    } else if !output.errors.is_empty() {
        exit::BUNDLE_ERRORS
    } else {
        exit::OK
    })
}

fn render_bench(reports: &[AnomalyReport], timings: &[f64], stats: &TimingStats) -> String {
    let mut out = format!("{:<40} {:<10} {:>12}\n", "app", "verdict", "time_ms");
    for (r, ms) in reports.iter().zip(timings) {
        let _ = writeln!(
            out,
            "{:<40} {:<10} {:>12.3}",
            r.app_id,
            r.overall.to_string(),
            ms
        );
    }
    let _ = writeln!(
        out,
        "n={} mean_ms={:.3} median_ms={:.3} stddev_ms={:.3}",
        stats.count, stats.mean_ms, stats.median_ms, stats.stddev_ms
    );
    out
}

pub fn flows(a: FlowsArgs) -> Result<u8, Failure> {
    let Shared { catalog, .. } = shared(&a.text)?;
    let mut failed = false;
    for path in &a.bundles {
        let result = load_bundle(path, Provenance::UnderAnalysis)
            .map_err(anyhow::Error::from)
            .and_then(|b| {
                let analysis = propagate_taint(&b.program, &catalog)
                    .with_context(|| format!("analysing {}", b.app_id))?;
                Ok((b, analysis))
            });
        match result {
            Ok((b, analysis)) => {
                println!("App: {}", b.app_id);
                for (i, fact) in analysis.facts.iter().enumerate() {
                    println!("{:>3}: {}", i + 1, fact.render(a.verbose));
                }
                if a.verbose && !analysis.ipc_internal_suppressed.is_empty() {
                    println!(
                        "  ipc_internal_suppressed: {}",
                        analysis.ipc_internal_suppressed.len()
                    );
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {}: {e:#}", path.display());
            }
        }
    }
    Ok(if failed {
        exit::BUNDLE_ERRORS
    } else {
        exit::OK
    })
}

pub fn model_info(path: &Path, top: usize) -> Result<u8, Failure> {
    let set = load_model(path)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "format {}  strategy {}  quantiles {}",
        set.format_version,
        set.strategy,
        quantile_name(set.quantile_method)
    );
    let _ = writeln!(
        out,
        "filter: min_words {}  require_english {}",
        set.filter_policy.min_description_words, set.filter_policy.require_english
    );
    if let Some(tm) = &set.topic_model {
        let p = tm.params;
        let _ = writeln!(
            out,
            "topics: k={} alpha={} beta={} train_iters={} seed={}  vocabulary {}  digest {}",
            p.k,
            p.alpha,
            p.beta,
            p.train_iters,
            p.seed,
            tm.vocabulary.len(),
            set.topic_model_digest.as_deref().unwrap_or("-")
        );
        for t in 0..tm.k() {
            let words: Vec<&str> = tm.top_words(t, top).into_iter().map(|(w, _)| w).collect();
            let _ = writeln!(
                out,
                "  topic {t:>2} [{}]: {}",
                tm.label(t).unwrap_or("-"),
                words.join(" ")
            );
        }
    }
    for m in set.matrices.values() {
        let label = m
            .label
            .as_deref()
            .map(|l| format!(" ({l})"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "\n== {}{label}: {} apps, tau {}",
            m.group_key,
            m.apps,
            fmt_tau(m.tau)
        );
        out.push_str(&m.render_table());
    }
    print!("{out}");
    Ok(exit::OK)
}
