use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use genaug_core::data::{
    read_catalog, read_dataset_manifest, read_embeddings, read_prediction_log, read_zoo, ClassCatalog,
    ClassifierPoint, DatasetManifest, ZooEntry,
};
use genaug_core::eval::{
    build_overlap, evaluate_logs, normalize_name, read_eval_rows, restricted_accuracy, write_eval_rows,
    compare_recipes, ComparisonTable, Layout, OverlapMap,
};
use genaug_core::filter::filter_by_caption;
use genaug_core::jsonl;
use genaug_core::metrics::{
    accuracy, accuracy_gap, class_fid, diversity, effective_robustness, fit_baseline_with, BaselineFit,
};
use genaug_core::mixture::{MixturePlan, MixturePlanner};
use genaug_core::prompts::{build_manifest, expand_prompts, ManifestRequest, TemplateSet};
use genaug_core::report::{render_er_scatter, render_table, Table};
use serde::{Deserialize, Serialize};

use crate::args::{Command, ErCmd, EvalCmd, FilterCmd, ManifestCmd, MetricsCmd, MixtureCmd, Pools, PromptsCmd, ReportCmd};
use crate::provenance::Touched;

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    jsonl::write_file(path, &text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn templates(path: &Option<PathBuf>) -> Result<TemplateSet> {
    Ok(match path {
        Some(p) => TemplateSet::read(p)?,
        None => TemplateSet::default_80(),
    })
}

fn pools(p: &Pools) -> Result<(ClassCatalog, DatasetManifest, DatasetManifest)> {
    Ok((
        read_catalog(&p.catalog)?,
        read_dataset_manifest(&p.real)?,
        read_dataset_manifest(&p.generated)?,
    ))
}

fn pool_inputs(p: &Pools) -> Vec<PathBuf> {
    vec![p.catalog.clone(), p.real.clone(), p.generated.clone()]
}

fn zoo_points(path: &Path, shifted_tag: Option<&str>) -> Result<Vec<ClassifierPoint>> {
    Ok(read_zoo(path)?
        .into_iter()
        .filter(|e| shifted_tag.is_none() || e.shifted_tag.as_deref() == shifted_tag)
        .map(|e| e.point)
        .collect())
}

/// A baseline fit file: the fit plus the dataset it was fitted for.
#[derive(Debug, Serialize, Deserialize)]
pub struct FitRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shifted_tag: Option<String>,
    #[serde(flatten)]
    pub fit: BaselineFit,
}

#[derive(Serialize)]
struct AccuracyRecord<'a> {
    classifier_id: &'a str,
    dataset_tag: &'a str,
    restricted: bool,
    accuracy: f64,
}

#[derive(Serialize)]
struct GapRecord<'a> {
    classifier_id: &'a str,
    source_tag: &'a str,
    shifted_tag: &'a str,
    source_accuracy: f64,
    shifted_accuracy: f64,
    gap: f64,
}

#[derive(Serialize)]
struct ErRecord<'a> {
    classifier_id: &'a str,
    source_accuracy: f64,
    shifted_accuracy: f64,
    baseline: f64,
    effective_robustness: f64,
}

fn grid_file_name(index: usize, plan: &MixturePlan) -> String {
    format!("cell{index}_real{}_gen{}.jsonl", plan.real_fraction, plan.gen_fraction)
}

fn log_accuracy(path: &Path, overlap: Option<&Path>) -> Result<(genaug_core::data::PredictionLog, f64)> {
    let log = read_prediction_log(path)?;
    let acc = match overlap {
        Some(o) => restricted_accuracy(&log, &OverlapMap::read(o)?)?,
        None => accuracy(&log, None)?,
    };
    Ok((log, acc))
}

pub fn execute(command: &Command) -> Result<Touched> {
    match command {
        Command::Prompts(PromptsCmd::Expand { catalog, templates: t, out }) => {
            let cat = read_catalog(catalog)?;
            let set = templates(t)?;
            jsonl::write_file(out, &jsonl::to_string(expand_prompts(&cat, &set))?)?;
            Ok(Touched::new([catalog.clone()].into_iter().chain(t.clone()), [out.clone()]))
        }
        Command::Manifest(ManifestCmd::Build {
            catalog,
            templates: t,
            strategy,
            replicas,
            seed,
            source,
            out,
        }) => {
            let cat = read_catalog(catalog)?;
            let set = templates(t)?;
            let src = source.as_deref().map(read_dataset_manifest).transpose()?;
            let manifest = build_manifest(&ManifestRequest {
                catalog: &cat,
                templates: &set,
                strategy: *strategy,
                replicas_per_class: *replicas,
                master_seed: *seed,
                source: src.as_ref(),
            })?;
            manifest.write(out)?;
            let inputs = [catalog.clone()].into_iter().chain(t.clone()).chain(source.clone());
            Ok(Touched::new(inputs, [out.clone()]))
        }
        Command::Mixture(cmd) => mixture(cmd),
        Command::Filter(FilterCmd::Run {
            images,
            captions,
            threshold,
            caption_template,
            out,
        }) => {
            let report = filter_by_caption(&read_embeddings(images)?, &read_embeddings(captions)?, *threshold, caption_template)?;
            log::info!("kept {} of {} images", report.kept.len(), report.kept.len() + report.removed.len());
            report.write(out)?;
            Ok(Touched::new([images.clone(), captions.clone()], [out.clone()]))
        }
        Command::Metrics(cmd) => metrics(cmd),
        Command::Er(cmd) => er(cmd),
        Command::Eval(cmd) => eval(cmd),
        Command::Report(cmd) => report(cmd),
        Command::Run => bail!("`run` needs a run file passed with --config"),
    }
}

fn mixture(cmd: &MixtureCmd) -> Result<Touched> {
    match cmd {
        MixtureCmd::Plan {
            pools: p,
            real_fraction,
            gen_fraction,
            unit_size,
            out,
        } => {
            let (cat, real, generated) = pools(p)?;
            let plan = MixturePlanner::new(&cat, &real, &generated)?.plan_mixture(*real_fraction, *gen_fraction, *unit_size, p.seed)?;
            plan.write(out)?;
            Ok(Touched::new(pool_inputs(p), [out.clone()]))
        }
        MixtureCmd::Grid { pools: p, unit_size, out_dir } => {
            let (cat, real, generated) = pools(p)?;
            let plans = MixturePlanner::new(&cat, &real, &generated)?.grid_plans(*unit_size, p.seed)?;
            std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let mut outputs = Vec::with_capacity(plans.len());
            for (i, plan) in plans.iter().enumerate() {
                let path = out_dir.join(grid_file_name(i, plan));
                plan.write(&path)?;
                outputs.push(path);
            }
            Ok(Touched::new(pool_inputs(p), outputs))
        }
        MixtureCmd::FixedBudget {
            pools: p,
            gen_share,
            budget,
            out,
        } => {
            let (cat, real, generated) = pools(p)?;
            let plan = MixturePlanner::new(&cat, &real, &generated)?.plan_fixed_budget(*gen_share, *budget, p.seed)?;
            plan.write(out)?;
            Ok(Touched::new(pool_inputs(p), [out.clone()]))
        }
    }
}

fn metrics(cmd: &MetricsCmd) -> Result<Touched> {
    match cmd {
        MetricsCmd::Accuracy { predictions, overlap, out } => {
            let (log, acc) = log_accuracy(predictions, overlap.as_deref())?;
            write_json(
                &AccuracyRecord {
                    classifier_id: log.classifier_id(),
                    dataset_tag: log.dataset_tag(),
                    restricted: overlap.is_some(),
                    accuracy: acc,
                },
                out,
            )?;
            Ok(Touched::new([predictions.clone()].into_iter().chain(overlap.clone()), [out.clone()]))
        }
        MetricsCmd::Ag { source, shifted, overlap, out } => {
            let (src_log, src_acc) = log_accuracy(source, None)?;
            let (shift_log, shift_acc) = log_accuracy(shifted, overlap.as_deref())?;
            if src_log.classifier_id() != shift_log.classifier_id() {
                bail!(
                    "logs come from different classifiers ({} vs {})",
                    src_log.classifier_id(),
                    shift_log.classifier_id()
                );
            }
            write_json(
                &GapRecord {
                    classifier_id: src_log.classifier_id(),
                    source_tag: src_log.dataset_tag(),
                    shifted_tag: shift_log.dataset_tag(),
                    source_accuracy: src_acc,
                    shifted_accuracy: shift_acc,
                    gap: accuracy_gap(shift_acc, src_acc),
                },
                out,
            )?;
            let inputs = [source.clone(), shifted.clone()].into_iter().chain(overlap.clone());
            Ok(Touched::new(inputs, [out.clone()]))
        }
        MetricsCmd::Fid { a, b, min_per_class, out } => {
            let result = class_fid(&read_embeddings(a)?, &read_embeddings(b)?, *min_per_class)?;
            if !result.skipped.is_empty() {
                log::warn!("skipped {} classes below {min_per_class} samples", result.skipped.len());
            }
            write_json(&result, out)?;
            Ok(Touched::new([a.clone(), b.clone()], [out.clone()]))
        }
        MetricsCmd::Diversity { embeddings, out } => {
            write_json(&diversity(&read_embeddings(embeddings)?)?, out)?;
            Ok(Touched::new([embeddings.clone()], [out.clone()]))
        }
    }
}

fn er(cmd: &ErCmd) -> Result<Touched> {
    match cmd {
        ErCmd::Fit {
            zoo,
            shifted_tag,
            transform,
            out,
        } => {
            let points = zoo_points(zoo, shifted_tag.as_deref())?;
            let fit = fit_baseline_with(&points, (*transform).into())?;
            write_json(
                &FitRecord {
                    shifted_tag: shifted_tag.clone(),
                    fit,
                },
                out,
            )?;
            Ok(Touched::new([zoo.clone()], [out.clone()]))
        }
        ErCmd::Score { fit, queries, out } => {
            let record: FitRecord = read_json(fit)?;
            let points = zoo_points(queries, None)?;
            let mut scored = Vec::with_capacity(points.len());
            for p in &points {
                scored.push(ErRecord {
                    classifier_id: &p.classifier_id,
                    source_accuracy: p.source_accuracy,
                    shifted_accuracy: p.shifted_accuracy,
                    baseline: record.fit.predict(p.source_accuracy)?,
                    effective_robustness: effective_robustness(p, &record.fit)?,
                });
            }
            jsonl::write_file(out, &jsonl::to_string(scored)?)?;
            Ok(Touched::new([fit.clone(), queries.clone()], [out.clone()]))
        }
    }
}

fn eval(cmd: &EvalCmd) -> Result<Touched> {
    match cmd {
        EvalCmd::Overlap {
            source_catalog,
            target_catalog,
            out,
            report,
        } => {
            let (map, unmatched) = build_overlap(&read_catalog(source_catalog)?, &read_catalog(target_catalog)?, normalize_name)?;
            log::info!(
                "{} shared classes; {} source and {} target classes unmatched",
                map.len(),
                unmatched.unmatched_source.len(),
                unmatched.unmatched_target.len()
            );
            map.write(out)?;
            let mut outputs = vec![out.clone()];
            if let Some(r) = report {
                write_json(&unmatched, r)?;
                outputs.push(r.clone());
            }
            Ok(Touched::new([source_catalog.clone(), target_catalog.clone()], outputs))
        }
        EvalCmd::Run {
            predictions,
            overlaps,
            recipe,
            source_tag,
            include_source,
            out,
        } => {
            let logs = predictions.iter().map(|p| read_prediction_log(p)).collect::<Result<Vec<_>, _>>()?;
            let mut maps = BTreeMap::new();
            for path in overlaps {
                let map = OverlapMap::read(path)?;
                if maps.insert(map.target_tag.clone(), map).is_some() {
                    bail!("two overlap maps target the same dataset ({})", path.display());
                }
            }
            let rows = evaluate_logs(&logs, recipe, source_tag, &maps, *include_source)?;
            write_eval_rows(&rows, out)?;
            Ok(Touched::new(predictions.iter().chain(overlaps).cloned(), [out.clone()]))
        }
        EvalCmd::Compare {
            rows,
            zoos,
            source_tag,
            shifted,
            include_source,
            out,
        } => {
            let mut all_rows = Vec::new();
            for path in rows {
                all_rows.extend(read_eval_rows(path)?);
            }
            let mut grouped: BTreeMap<String, Vec<ClassifierPoint>> = BTreeMap::new();
            for path in zoos {
                for ZooEntry { shifted_tag, point } in read_zoo(path)? {
                    let tag = match (shifted_tag, shifted.as_slice()) {
                        (Some(t), _) => t,
                        (None, [only]) => only.clone(),
                        (None, _) => bail!(
                            "zoo entry {} in {} has no shifted_tag and several shifted sets are compared",
                            point.classifier_id,
                            path.display()
                        ),
                    };
                    grouped.entry(tag).or_default().push(point);
                }
            }
            let layout = Layout {
                source_tag: source_tag.clone(),
                shifted_tags: shifted.clone(),
                average_includes_source: *include_source,
            };
            compare_recipes(&all_rows, &grouped, &layout)?.write(out)?;
            Ok(Touched::new(rows.iter().chain(zoos).cloned(), [out.clone()]))
        }
    }
}

fn report(cmd: &ReportCmd) -> Result<Touched> {
    match cmd {
        ReportCmd::Table {
            comparison,
            view,
            format,
            out,
        } => {
            let table = ComparisonTable::read(comparison)?;
            jsonl::write_file(out, &render_table(&Table::from_comparison(&table, *view), *format)?)?;
            Ok(Touched::new([comparison.clone()], [out.clone()]))
        }
        ReportCmd::Scatter {
            zoo,
            shifted_tag,
            fit,
            queries,
            out,
        } => {
            let points = zoo_points(zoo, shifted_tag.as_deref())?;
            let baseline = match fit {
                Some(f) => read_json::<FitRecord>(f)?.fit,
                None => genaug_core::metrics::fit_baseline(&points)?,
            };
            let query_points = match queries {
                Some(q) => zoo_points(q, None)?,
                None => Vec::new(),
            };
            jsonl::write_file(out, &render_er_scatter(&points, &baseline, &query_points)?)?;
            let inputs = [zoo.clone()].into_iter().chain(fit.clone()).chain(queries.clone());
            Ok(Touched::new(inputs, [out.clone()]))
        }
    }
}
