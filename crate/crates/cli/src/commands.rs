//! Command implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use trajcluster::dataset::{load_long_csv, simulate_pap, write_long_csv, Dataset};
use trajcluster::harness::{run_boot, run_rep, RunResult};
use trajcluster::method::{estimate, quantile_type7, ClusterModel, MethodSpec, ModelList};
use trajcluster::metrics::{external_metric, internal_metric_value, pairwise_external};
use trajcluster::{ArgValue, Error, Result};

use crate::cli::{ColumnOpts, Command, CommonOpts};
use crate::config::{parse_arg_overrides, parse_cluster_range, Columns, Resolver};
use crate::svg;

/// metric -> method -> (K, value) points for the sweep chart.
type ChartData<'a> = BTreeMap<&'a str, BTreeMap<&'a str, Vec<(f64, f64)>>>;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            n,
            weeks,
            seed,
            out,
            columns,
            common,
        } => cmd_simulate(n, weeks, seed, &out, &columns, &common),
        Command::Fit {
            data,
            method,
            clusters,
            seed,
            args,
            timings,
            out,
            columns,
            common,
        } => cmd_fit(&data, &method, clusters, seed, &args, timings, &out, &columns, &common),
        Command::Sweep {
            data,
            methods,
            clusters,
            metrics,
            seed,
            parallel,
            args,
            out,
            columns,
            common,
        } => cmd_sweep(
            &data, &methods, &clusters, &metrics, seed, parallel, &args, &out, &columns, &common,
        ),
        Command::Truth {
            data,
            center,
            out,
            columns,
            common,
        } => cmd_truth(&data, &center, &out, &columns, &common),
        Command::Compare {
            models,
            reference,
            metrics,
            out,
            common: _,
        } => cmd_compare(&models, reference.as_deref(), &metrics, &out),
        Command::Plot {
            data,
            model,
            mode,
            out,
            columns,
            common,
        } => cmd_plot(data.as_deref(), model.as_deref(), &mode, &out, &columns, &common),
        Command::Boot {
            data,
            method,
            clusters,
            samples,
            seed,
            parallel,
            metrics,
            args,
            out,
            columns,
            common,
        } => cmd_resample(
            Resample::Boot { samples },
            &data,
            &method,
            clusters,
            seed,
            parallel,
            &metrics,
            &args,
            &out,
            &columns,
            &common,
        ),
        Command::Rep {
            data,
            method,
            clusters,
            reps,
            seed,
            parallel,
            metrics,
            args,
            out,
            columns,
            common,
        } => cmd_resample(
            Resample::Rep { reps },
            &data,
            &method,
            clusters,
            seed,
            parallel,
            &metrics,
            &args,
            &out,
            &columns,
            &common,
        ),
    }
}

fn resolve_columns(columns: &ColumnOpts, common: &CommonOpts) -> Result<Columns> {
    let resolver = Resolver::new(common.config.as_deref())?;
    Ok(resolver.columns(
        columns.id.as_deref(),
        columns.time.as_deref(),
        columns.response.as_deref(),
        columns.group.as_deref(),
    ))
}

fn load_dataset(path: &Path, cols: &Columns) -> Result<Dataset> {
    load_long_csv(path, &cols.id, &cols.time, &cols.response, cols.group.as_deref())
}

fn build_spec(
    method: &str,
    clusters: usize,
    cols: &Columns,
    raw_args: &[String],
) -> Result<MethodSpec> {
    let mut overrides: Vec<(String, ArgValue)> = vec![
        ("id".into(), ArgValue::Str(cols.id.clone())),
        ("time".into(), ArgValue::Str(cols.time.clone())),
        ("response".into(), ArgValue::Str(cols.response.clone())),
        ("nClusters".into(), ArgValue::Int(clusters as i64)),
    ];
    overrides.extend(parse_arg_overrides(raw_args)?);
    MethodSpec::new(method, overrides)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Empty field for NA, shortest round-trip notation otherwise.
fn csv_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn cmd_simulate(
    n: usize,
    weeks: usize,
    seed: u64,
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    let (ds, _) = simulate_pap(n, weeks, seed)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file = fs::File::create(out)?;
    let group_col = cols.group.clone().unwrap_or_else(|| "group".to_string());
    write_long_csv(
        &ds,
        std::io::BufWriter::new(file),
        &cols.id,
        &cols.time,
        &cols.response,
        Some(&group_col),
    )?;
    println!(
        "wrote {} observations for {} trajectories to {}",
        ds.n_observations(),
        ds.n_trajectories(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    data: &Path,
    method: &str,
    clusters: usize,
    seed: u64,
    raw_args: &[String],
    timings: bool,
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    let ds = load_dataset(data, &cols)?;
    let spec = build_spec(method, clusters, &cols, raw_args)?;
    let model = estimate(&spec, &ds, seed)?;
    fs::create_dir_all(out)?;
    write_text(&out.join("model.json"), &model.to_json_string(timings))?;
    print!("{}", model.summary());
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    data: &Path,
    methods: &str,
    clusters: &str,
    metrics: &str,
    seed: u64,
    parallel: bool,
    raw_args: &[String],
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    let ds = load_dataset(data, &cols)?;
    let method_names: Vec<&str> = methods.split(',').map(str::trim).collect();
    if method_names.is_empty() || method_names.iter().any(|m| m.is_empty()) {
        return Err(Error::InvalidSpec(format!("invalid method list `{methods}`")));
    }
    let ks = parse_cluster_range(clusters)?;
    let metric_names: Vec<&str> = metrics.split(',').map(str::trim).collect();

    let mut specs = Vec::new();
    for method in &method_names {
        for &k in &ks {
            specs.push(build_spec(method, k, &cols, raw_args)?);
        }
    }
    let run = trajcluster::harness::run_batch(&specs, &ds, seed, parallel)?;

    // Metric table: one row per (method, K), NA cells on failure.
    let mut warnings = 0usize;
    let mut csv = String::new();
    csv.push_str("name,method,nClusters,seed");
    for m in &metric_names {
        csv.push(',');
        csv.push_str(m);
    }
    csv.push('\n');
    // Values per metric per method for the chart, indexed by K.
    let mut chart: ChartData<'_> = BTreeMap::new();
    for entry in &run.entries {
        let method = entry.spec.method().to_string();
        let k = entry.spec.n_clusters();
        csv.push_str(&format!("{},{},{},{}", entry.name, method, k, entry.seed));
        match &entry.outcome {
            Ok(model) => {
                for metric in &metric_names {
                    let value = internal_metric_value(model, metric)?;
                    if value.is_none() {
                        warnings += 1;
                    }
                    csv.push(',');
                    csv.push_str(&csv_cell(value));
                    if let Some(v) = value {
                        chart
                            .entry(metric)
                            .or_default()
                            .entry(method_names[method_index(&method_names, &method)])
                            .or_default()
                            .push((k as f64, v));
                    }
                }
            }
            Err(msg) => {
                eprintln!("warning: fit `{}` failed: {msg}", entry.name);
                warnings += 1;
                for _ in &metric_names {
                    csv.push(',');
                }
            }
        }
        csv.push('\n');
    }
    fs::create_dir_all(out)?;
    write_text(&out.join("metrics.csv"), &csv)?;

    // One panel per metric, one line per method over K.
    let panels: Vec<svg::PanelSpec> = metric_names
        .iter()
        .map(|metric| {
            let series = chart
                .get(metric)
                .map(|by_method| {
                    by_method
                        .iter()
                        .map(|(method, points)| svg::Series {
                            points: points.clone(),
                            color: method_index(&method_names, method),
                            width: 2.0,
                            label: Some(method.to_string()),
                        })
                        .collect()
                })
                .unwrap_or_default();
            svg::PanelSpec {
                title: metric.to_string(),
                x_label: "nClusters".to_string(),
                y_label: metric.to_string(),
                series,
            }
        })
        .collect();
    write_text(&out.join("metrics.svg"), &svg::render(720.0, 260.0, &panels))?;

    if warnings > 0 {
        eprintln!("warning: {warnings} empty metric cells");
    }
    println!(
        "wrote {} model rows to {}",
        run.entries.len(),
        out.join("metrics.csv").display()
    );
    Ok(())
}

fn method_index(names: &[&str], method: &str) -> usize {
    names.iter().position(|m| *m == method).unwrap_or(0)
}

// ---------------------------------------------------------------------------
// truth
// ---------------------------------------------------------------------------

fn cmd_truth(
    data: &Path,
    center: &str,
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    if cols.group.is_none() {
        return Err(Error::InvalidSpec("truth needs --group".into()));
    }
    let ds = load_dataset(data, &cols)?;
    let truth = ds
        .truth()
        .ok_or_else(|| Error::InvalidSpec("dataset has no group labels".into()))?
        .clone();
    let center = match center {
        "mean" => trajcluster::CenterFn::Mean,
        "median" => trajcluster::CenterFn::Median,
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown center `{other}` (expected `mean` or `median`)"
            )))
        }
    };
    let model = trajcluster::partition_model(&ds, truth.assignments(), center)?;
    fs::create_dir_all(out)?;
    write_text(&out.join("model.json"), &model.to_json_string(false))?;
    print!("{}", model.summary());
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn load_model(path: &Path) -> Result<(String, ClusterModel)> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let model = ClusterModel::from_json_value(&value)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok((name, model))
}

fn cmd_compare(
    model_paths: &[PathBuf],
    reference: Option<&Path>,
    metrics: &str,
    out: &Path,
) -> Result<()> {
    if model_paths.len() < 2 && reference.is_none() {
        return Err(Error::InvalidSpec(
            "compare needs at least two models, or one model plus --reference".into(),
        ));
    }
    let metric_names: Vec<&str> = metrics.split(',').map(str::trim).collect();
    let mut list = ModelList::new();
    let mut used = std::collections::BTreeSet::new();
    for path in model_paths {
        let (mut name, model) = load_model(path)?;
        // Disambiguate repeated file stems.
        if !used.insert(name.clone()) {
            let mut i = 2;
            while !used.insert(format!("{name}#{i}")) {
                i += 1;
            }
            name = format!("{name}#{i}");
        }
        list.push(name, model);
    }
    fs::create_dir_all(out)?;

    if list.len() >= 2 {
        for metric in &metric_names {
            let pw = pairwise_external(&list, metric)?;
            for (a, b, msg) in &pw.failures {
                eprintln!("warning: {metric}({a}, {b}) failed: {msg}");
            }
            let names: Vec<&str> = list.names().collect();
            let mut csv = String::new();
            csv.push_str("name");
            for name in &names[..names.len() - 1] {
                csv.push(',');
                csv.push_str(name);
            }
            csv.push('\n');
            for i in 1..names.len() {
                csv.push_str(names[i]);
                for j in 0..names.len() - 1 {
                    csv.push(',');
                    if j < i {
                        csv.push_str(&csv_cell(pw.get(i, j)));
                    }
                }
                csv.push('\n');
            }
            let file = out.join(format!("pairwise_{}.csv", metric.replace('.', "_")));
            write_text(&file, &csv)?;
        }
    }

    if let Some(ref_path) = reference {
        let (_, reference_model) = load_model(ref_path)?;
        let mut csv = String::new();
        csv.push_str("name");
        for metric in &metric_names {
            csv.push(',');
            csv.push_str(metric);
        }
        csv.push('\n');
        for (name, model) in list.iter() {
            csv.push_str(name);
            for metric in &metric_names {
                let value = match external_metric(model, &reference_model, metric) {
                    Ok(v) => v,
                    Err(err) => {
                        eprintln!("warning: {metric}({name}, reference) failed: {err}");
                        None
                    }
                };
                csv.push(',');
                csv.push_str(&csv_cell(value));
            }
            csv.push('\n');
        }
        write_text(&out.join("reference.csv"), &csv)?;
    }
    println!("wrote comparison tables to {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// plot
// ---------------------------------------------------------------------------

fn cmd_plot(
    data: Option<&Path>,
    model: Option<&Path>,
    mode: &str,
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    let svg_text = match mode {
        "trajectories" => {
            let data =
                data.ok_or_else(|| Error::InvalidSpec("trajectories mode needs --data".into()))?;
            let ds = load_dataset(data, &cols)?;
            let loaded = model.map(load_model).transpose()?;
            plot_trajectories(&ds, loaded.as_ref().map(|(_, m)| m), &cols)
        }
        "cluster-trajectories" => {
            let model =
                model.ok_or_else(|| Error::InvalidSpec("cluster-trajectories mode needs --model".into()))?;
            let (_, model) = load_model(model)?;
            plot_cluster_trajectories(&model)
        }
        other => {
            return Err(Error::InvalidSpec(format!(
                "unknown plot mode `{other}` (expected `trajectories` or `cluster-trajectories`)"
            )))
        }
    };
    write_text(out, &svg_text)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn plot_trajectories(ds: &Dataset, model: Option<&ClusterModel>, cols: &Columns) -> String {
    // Cluster labels from the model when given, else ground-truth groups.
    let color_of: BTreeMap<&str, usize> = if let Some(m) = model {
        let modal = m.modal_assignments();
        m.ids()
            .iter()
            .zip(&modal)
            .map(|(id, &k)| (id.as_str(), k))
            .collect()
    } else if let Some(truth) = ds.truth() {
        ds.ids()
            .map(|id| {
                let label = truth.label_of(id).unwrap_or_default();
                let idx = truth
                    .group_names()
                    .iter()
                    .position(|g| g == label)
                    .unwrap_or(0);
                (id, idx)
            })
            .collect()
    } else {
        BTreeMap::new()
    };
    let group_label = |idx: usize| -> Option<String> {
        if let Some(m) = model {
            m.cluster_names().get(idx).cloned()
        } else {
            ds.truth()
                .and_then(|t| t.group_names().get(idx).cloned())
        }
    };

    let mut seen_groups: Vec<usize> = Vec::new();
    let series: Vec<svg::Series> = ds
        .trajectories()
        .iter()
        .map(|traj| {
            let color = color_of.get(traj.id.as_str()).copied().unwrap_or(0);
            let label = if !seen_groups.contains(&color) {
                seen_groups.push(color);
                group_label(color)
            } else {
                None
            };
            svg::Series {
                points: traj.times.iter().zip(&traj.values).map(|(&t, &v)| (t, v)).collect(),
                color,
                width: 1.0,
                label,
            }
        })
        .collect();
    let panel = svg::PanelSpec {
        title: "Trajectories".to_string(),
        x_label: cols.time.clone(),
        y_label: cols.response.clone(),
        series,
    };
    svg::render(720.0, 440.0, &[panel])
}

fn plot_cluster_trajectories(model: &ClusterModel) -> String {
    let times = model.training_times().to_vec();
    let curves = model.cluster_trajectories(&times);
    let series: Vec<svg::Series> = curves
        .into_iter()
        .enumerate()
        .map(|(k, values)| svg::Series {
            points: times.iter().copied().zip(values).collect(),
            color: k,
            width: 2.5,
            label: Some(format!(
                "{} ({:.1}%)",
                model.cluster_names()[k],
                100.0 * model.proportions()[k]
            )),
        })
        .collect();
    let panel = svg::PanelSpec {
        title: format!("Cluster trajectories (K={})", model.k()),
        x_label: model.spec().time_name().to_string(),
        y_label: model.spec().response().to_string(),
        series,
    };
    svg::render(720.0, 440.0, &[panel])
}

// ---------------------------------------------------------------------------
// boot / rep
// ---------------------------------------------------------------------------

enum Resample {
    Boot { samples: usize },
    Rep { reps: usize },
}

#[allow(clippy::too_many_arguments)]
fn cmd_resample(
    kind: Resample,
    data: &Path,
    method: &str,
    clusters: usize,
    seed: u64,
    parallel: bool,
    metrics: &str,
    raw_args: &[String],
    out: &Path,
    columns: &ColumnOpts,
    common: &CommonOpts,
) -> Result<()> {
    let cols = resolve_columns(columns, common)?;
    let ds = load_dataset(data, &cols)?;
    let spec = build_spec(method, clusters, &cols, raw_args)?;
    let run = match kind {
        Resample::Boot { samples } => run_boot(&spec, &ds, samples, seed, parallel)?,
        Resample::Rep { reps } => run_rep(&spec, &ds, reps, seed, parallel)?,
    };
    fs::create_dir_all(out)?;

    // Per-fit model files plus the manifest.
    let mut paths: Vec<Option<String>> = Vec::new();
    for entry in &run.entries {
        match &entry.outcome {
            Ok(model) => {
                let file = format!("model_{}.json", entry.name);
                write_text(&out.join(&file), &model.to_json_string(false))?;
                paths.push(Some(file));
            }
            Err(msg) => {
                eprintln!("warning: fit `{}` failed: {msg}", entry.name);
                paths.push(None);
            }
        }
    }
    let manifest = run.manifest_value(&|i, _| paths[i].clone());
    write_text(
        &out.join("manifest.json"),
        &serde_json::to_string_pretty(&manifest)?,
    )?;

    // Metric summary over the successful fits.
    let metric_names: Vec<&str> = metrics.split(',').map(str::trim).collect();
    let models = run.models();
    let mut csv = String::new();
    csv.push_str("metric,count,min,q1,median,mean,q3,max\n");
    for metric in &metric_names {
        let mut values = Vec::new();
        for m in models.models() {
            if let Some(v) = internal_metric_value(m, metric)? {
                values.push(v);
            }
        }
        if values.is_empty() {
            csv.push_str(&format!("{metric},0,,,,,,\n"));
            continue;
        }
        let q = |p: f64| quantile_type7(&values, p);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        csv.push_str(&format!(
            "{metric},{},{},{},{},{},{},{}\n",
            values.len(),
            q(0.0),
            q(0.25),
            q(0.5),
            mean,
            q(0.75),
            q(1.0)
        ));
    }
    write_text(&out.join("summary.csv"), &csv)?;

    println!("fits: {}", run.entries.len());
    println!("convergence rate: {}", run.convergence_rate());
    summarize_to_stdout(&run, &metric_names)?;
    Ok(())
}

fn summarize_to_stdout(run: &RunResult, metric_names: &[&str]) -> Result<()> {
    let models = run.models();
    for metric in metric_names {
        let mut values = Vec::new();
        for m in models.models() {
            if let Some(v) = internal_metric_value(m, metric)? {
                values.push(v);
            }
        }
        if values.is_empty() {
            println!("{metric}: NA");
        } else {
            println!(
                "{metric}: min {} median {} max {}",
                quantile_type7(&values, 0.0),
                quantile_type7(&values, 0.5),
                quantile_type7(&values, 1.0)
            );
        }
    }
    Ok(())
}
