use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::warn;
use serde_json::{json, Value};
use unmix::analyze::{
    columns_swapped, de_rank, de_score, e1_error, marker_overlap, pearson, roc_auc, spearman_rank,
    Direction, EvaluationReport,
};
use unmix::pipeline;
use unmix::plot::ScatterPlot;
use unmix::preprocess::preprocess;
use unmix::synth::{generate, SynthConfig};
use unmix::{AxisKind, Error, MixingForm, MixingMatrix};

use crate::args::{
    DeconvolveArgs, DerankArgs, EvaluateArgs, OutArgs, PlotArgs, ReportFormat, SimulateArgs,
};
use crate::error::CliError;
use crate::io::{
    flat_tsv, json_bytes, read_expression, read_records, read_truth, tsv, write_atomic, Truth,
    TruthMarkers,
};

pub const MIXED: &str = "mixed.tsv";
pub const PURE: &str = "pure.tsv";
pub const TRUTH: &str = "truth.json";
pub const SOURCES: &str = "sources.tsv";
pub const PROPORTIONS: &str = "proportions.tsv";
pub const MARKERS: &str = "markers.tsv";
pub const DE_RANK: &str = "de_rank.tsv";
pub const SCATTER: &str = "scatter.svg";

const SOURCE_LABELS: [&str; 2] = ["source1", "source2"];

fn num(v: f64) -> String {
    v.to_string()
}

fn write_report(out: &OutArgs, stem: &str, value: &Value) -> Result<(), CliError> {
    match out.report {
        ReportFormat::Json => {
            write_atomic(&out.out.join(format!("{stem}.json")), &json_bytes(value))
        }
        ReportFormat::Tsv => write_atomic(&out.out.join(format!("{stem}.tsv")), &flat_tsv(value)),
    }
}

fn pair_table(header: [&str; 3], ids: &[String], values: &[[f64; 2]]) -> Vec<u8> {
    tsv(
        &header,
        ids.iter()
            .zip(values)
            .map(|(id, v)| [id.clone(), num(v[0]), num(v[1])]),
    )
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let m = &args.mixing;
    let mixing = MixingMatrix::new([[m[0], m[1]], [m[2], m[3]]], MixingForm::Proportion)?;
    let config = SynthConfig {
        n_genes: args.genes,
        n_mg1: args.markers1,
        n_mg2: args.markers2,
        mixing,
        marker_leak: args.leak,
        noise_sigma: args.noise,
        sample_dev_sigma: args.sample_dev,
        fold_change: args.fold_change,
        seed: args.seed,
        ..Default::default()
    };
    let data = generate(&config)?;
    let ids = data.mixed.gene_ids();
    let names = |set: &[usize]| set.iter().map(|&i| ids[i].clone()).collect::<Vec<_>>();
    let truth = Truth {
        mixing: mixing.entries(),
        sources: ids
            .iter()
            .cloned()
            .zip(data.sources.values().iter().copied())
            .collect(),
        markers: TruthMarkers {
            source1: names(data.true_markers.mg1()),
            source2: names(data.true_markers.mg2()),
        },
        de_labels: Some(
            ids.iter()
                .cloned()
                .zip(data.true_de_labels.iter().copied())
                .collect(),
        ),
        config: Some(serde_json::to_value(&config).expect("serializable config")),
    };
    write_atomic(
        &args.out.join(MIXED),
        &pair_table(["gene_id", "sample1", "sample2"], ids, data.mixed.values()),
    )?;
    write_atomic(
        &args.out.join(PURE),
        &pair_table(
            ["gene_id", "tissue1", "tissue2"],
            ids,
            data.sources.values(),
        ),
    )?;
    write_atomic(&args.out.join(TRUTH), &json_bytes(&truth))
}

pub fn deconvolve(args: &DeconvolveArgs) -> Result<(), CliError> {
    let input = read_expression(&args.input, AxisKind::Samples)?;
    let truth = args.truth.as_deref().map(read_truth).transpose()?;
    let config = args.pipeline.config();
    let out = pipeline::run(&input.matrix, &config)?;
    let dir = &args.output.out;
    let ids = out.data.gene_ids();

    let result = &out.deconvolution;
    write_atomic(
        &dir.join(SOURCES),
        &pair_table(
            ["gene_id", "source1", "source2"],
            &result.gene_ids,
            &result.sources,
        ),
    )?;

    let a = out.mixing.entries();
    write_atomic(
        &dir.join(PROPORTIONS),
        &pair_table(["sample", "source1", "source2"], &input.sample_names, &a),
    )?;

    let [s1, s2] = &input.sample_names;
    let marker_rows = (0..2).flat_map(|j| {
        out.sample_specific.source(j).iter().map(move |p| {
            [
                SOURCE_LABELS[j].to_owned(),
                ids[p.gene].clone(),
                num(p.values[0]),
                num(p.values[1]),
            ]
        })
    });
    write_atomic(
        &dir.join(MARKERS),
        &tsv(&["source", "gene_id", s1, s2], marker_rows),
    )?;

    let ranking = de_rank(&out.data, Direction::Descending);
    write_atomic(
        &dir.join(DE_RANK),
        &tsv(
            &["gene_id", "score"],
            ranking
                .genes
                .iter()
                .map(|g| [ids[g.index].clone(), num(g.score)]),
        ),
    )?;

    let pre = &out.preprocess;
    let mut report = json!({
        "config": config,
        "genes": {
            "input": input.matrix.len(),
            "retained": pre.retained_count,
            "removed_low": pre.removed_low.len(),
            "removed_outlier": pre.removed_outlier.len(),
        },
        "preprocess": {
            "scale_factors": pre.scale_factors,
            "delta": pre.delta,
            "gamma": pre.gamma,
        },
        "markers": {
            "k_min": out.markers.k_min(),
            "k_max": out.markers.k_max(),
            "epsilon": out.markers.epsilon(),
            "source1": out.markers.mg1().len(),
            "source2": out.markers.mg2().len(),
        },
        "mixing_raw": out.raw_mixing.entries(),
        "mixing": a,
        "diagnostics": {
            "determinant": out.mixing.det(),
            "condition_number": result.condition_number,
            "ill_conditioned": result.ill_conditioned,
            "negative_count": result.negative_count,
            "clamped": result.clamped,
        },
    });
    if let Some(truth) = truth {
        let path = args.truth.as_deref().expect("truth path");
        let true_mixing = truth_mixing(&truth, path)?;
        report["truth"] = json!({
            "e1": e1_error(&out.mixing, &true_mixing)?,
            "columns_swapped": columns_swapped(&out.mixing, &true_mixing)?,
        });
    }
    write_report(&args.output, "report", &report)
}

fn truth_mixing(truth: &Truth, path: &Path) -> Result<MixingMatrix, CliError> {
    MixingMatrix::new(truth.mixing, MixingForm::Raw).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn read_mixing(path: &Path) -> Result<MixingMatrix, CliError> {
    let records = read_records(path)?;
    let (_, rows) = records.pairs()?;
    if rows.len() != 2 {
        return Err(CliError::parse(
            path,
            1,
            format!("expected 2 sample rows, found {}", rows.len()),
        ));
    }
    MixingMatrix::new([rows[0], rows[1]], MixingForm::Raw).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

/// `(source index, gene id)` for every row of a markers table.
fn read_markers(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    let records = read_records(path)?;
    if records.header.len() < 2 {
        return Err(CliError::parse(
            path,
            1,
            "expected source and gene_id columns",
        ));
    }
    records
        .rows
        .iter()
        .map(
            |(line, row)| match SOURCE_LABELS.iter().position(|l| *l == row[0]) {
                Some(j) => Ok((j, row[1].clone())),
                None => Err(CliError::parse(
                    path,
                    *line,
                    format!("unknown source '{}'", row[0]),
                )),
            },
        )
        .collect()
}

fn shape_error(path: &Path, message: String) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        source: Error::ShapeMismatch(message),
    }
}

fn lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    id: &str,
    path: &Path,
    what: &str,
) -> Result<&'a T, CliError> {
    map.get(id).ok_or_else(|| {
        shape_error(
            path,
            format!("gene '{id}' has no {what} in the truth sidecar"),
        )
    })
}

fn mean_of(values: [Option<f64>; 2]) -> Option<f64> {
    Some((values[0]? + values[1]?) / 2.0)
}

fn metric(name: &str, r: unmix::Result<f64>) -> Option<f64> {
    r.map_err(|e| warn!("{name} not computed: {e}")).ok()
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let dir = &args.result;
    let sources_path = dir.join(SOURCES);
    let (ids, est) = read_records(&sources_path)?.pairs()?;
    let estimated = read_mixing(&dir.join(PROPORTIONS))?;
    let detected = read_markers(&dir.join(MARKERS))?;
    let truth = read_truth(&args.truth)?;
    let true_mixing = truth_mixing(&truth, &args.truth)?;

    let e1 = e1_error(&estimated, &true_mixing)?;
    let swapped = columns_swapped(&estimated, &true_mixing)?;
    // estimated column matched to true source j
    let matched = |j: usize| if swapped { 1 - j } else { j };

    let truth_rows = ids
        .iter()
        .map(|id| lookup(&truth.sources, id, &sources_path, "source values").copied())
        .collect::<Result<Vec<_>, _>>()?;
    let column = |rows: &[[f64; 2]], j: usize, keep: &dyn Fn(&str) -> bool| -> Vec<f64> {
        ids.iter()
            .zip(rows)
            .filter(|(id, _)| keep(id))
            .map(|(_, r)| r[j])
            .collect()
    };

    let all = |_: &str| true;
    let pearson_all = mean_of([0, 1].map(|j| {
        metric(
            "pearson (all genes)",
            pearson(
                &column(&est, matched(j), &all),
                &column(&truth_rows, j, &all),
            ),
        )
    }));
    let true_sets = [&truth.markers.source1, &truth.markers.source2];
    let pearson_markers = mean_of([0, 1].map(|j| {
        let is_marker = |id: &str| true_sets[j].iter().any(|m| m == id);
        metric(
            "pearson (markers)",
            pearson(
                &column(&est, matched(j), &is_marker),
                &column(&truth_rows, j, &is_marker),
            ),
        )
    }));

    let (spearman, auc) = rank_metrics(&dir.join(DE_RANK), &truth, &true_mixing)?;

    let detected_pairs: Vec<(usize, String)> = detected
        .into_iter()
        .map(|(j, id)| (matched(j), id))
        .collect();
    let true_pairs: Vec<(usize, String)> = (0..2)
        .flat_map(|j| true_sets[j].iter().map(move |id| (j, id.clone())))
        .collect();

    let report = EvaluationReport {
        e1,
        columns_swapped: swapped,
        pearson_markers,
        pearson_all,
        spearman_rank: spearman,
        venn: marker_overlap(&detected_pairs, &true_pairs).into(),
        auc,
    };
    let value = serde_json::to_value(&report).expect("serializable report");
    write_report(&args.output, "evaluation", &value)
}

/// Spearman of the mixed ratio ranking against the pure ratio, and the
/// DE-detection AUC of `|ln r|` against the truth labels.
fn rank_metrics(
    path: &Path,
    truth: &Truth,
    true_mixing: &MixingMatrix,
) -> Result<(Option<f64>, Option<f64>), CliError> {
    if !path.exists() {
        warn!("{} not found; spearman and auc omitted", path.display());
        return Ok((None, None));
    }
    let records = read_records(path)?;
    records.expect_columns(2)?;
    let mut mixed = Vec::with_capacity(records.rows.len());
    let mut pure = Vec::with_capacity(records.rows.len());
    // the mixture reverses the ratio order when det A < 0
    let sign = if true_mixing.det() > 0.0 { 1.0 } else { -1.0 };
    for (line, row) in &records.rows {
        mixed.push(records.number(*line, &row[1], 1)?);
        let s = lookup(&truth.sources, &row[0], path, "source values")?;
        pure.push(sign * de_score(*s).0);
    }
    let spearman = metric("spearman", spearman_rank(&mixed, &pure));
    let auc = match &truth.de_labels {
        None => {
            warn!("truth sidecar has no DE labels; auc omitted");
            None
        }
        Some(labels) => {
            let labels = records
                .rows
                .iter()
                .map(|(_, row)| lookup(labels, &row[0], path, "DE label").copied())
                .collect::<Result<Vec<_>, _>>()?;
            let strength: Vec<f64> = mixed.iter().map(|r| r.ln().abs()).collect();
            metric("auc", roc_auc(&strength, &labels))
        }
    };
    Ok((spearman, auc))
}

pub fn derank(args: &DerankArgs) -> Result<(), CliError> {
    let input = read_expression(&args.input, AxisKind::Samples)?;
    let ids = input.matrix.gene_ids();
    let ranking = de_rank(&input.matrix, args.direction());
    write_atomic(
        &args.out.join(DE_RANK),
        &tsv(
            &["gene_id", "score"],
            ranking
                .genes
                .iter()
                .map(|g| [ids[g.index].clone(), num(g.score)]),
        ),
    )
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let input = read_expression(&args.input, AxisKind::Samples)?;
    let (data, _) = preprocess(&input.matrix, &args.preprocess.config())?;
    let mut plot = ScatterPlot::new(data.values().to_vec());
    plot.title = args
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    if let Some(dir) = &args.result {
        let a = read_mixing(&dir.join(PROPORTIONS))?;
        plot.radii = Some([a.column(0), a.column(1)]);
        let index: HashMap<&str, usize> = data
            .gene_ids()
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        for (j, id) in read_markers(&dir.join(MARKERS))? {
            match index.get(id.as_str()) {
                Some(&i) => plot.markers[j].push(i),
                None => warn!("marker '{id}' is not among the plotted genes"),
            }
        }
    }
    write_atomic(&args.out.join(SCATTER), plot.to_svg().as_bytes())
}
