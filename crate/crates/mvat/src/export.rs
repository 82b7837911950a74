//! TAM dumps and evaluation reports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mvat_core::distill::{tam_of, TamParams, View};
use mvat_core::model::{count_flops, count_params, Manner, ModelConfig, ParamStore, Side};
use mvat_core::signal::SAMPLE_RATE;
use mvat_core::{Graph, Tensor};
use serde::Serialize;

use crate::trainer::{ClipScore, EvalReport};
use crate::{Error, Result};

/// File written into the output directory by [`write_tams`].
pub const TAM_FILE: &str = "tams.txt";

#[derive(Clone, Debug, PartialEq)]
pub struct TamRecord {
    pub side: Side,
    pub level: usize,
    pub view: View,
    pub values: Vec<f32>,
}

/// Every view of every MA block, in forward-trace order, for one clip.
pub fn export_tams(
    model: &Manner,
    params: &ParamStore<f32>,
    noisy: &[f32],
    tam: &TamParams,
) -> Result<Vec<TamRecord>> {
    let mut g = Graph::<f32>::new();
    let vars = params.bind(&mut g, false);
    let x = g.constant(Tensor::new(vec![1, 1, noisy.len()], noisy.to_vec())?);
    let trace = model.forward(&mut g, &vars, x)?;
    let mut records = Vec::with_capacity(trace.activations.len() * View::ALL.len());
    for act in &trace.activations {
        for view in View::ALL {
            let map = tam_of(&mut g, act, view, tam)?;
            records.push(TamRecord {
                side: map.side,
                level: map.level,
                view,
                values: g.value(map.values).data().to_vec(),
            });
        }
    }
    Ok(records)
}

/// `side level view length` on one line, the values on the next.
pub fn format_tams(records: &[TamRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            r.side.as_str(),
            r.level,
            r.view.as_str(),
            r.values.len()
        );
        let values: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", values.join(" "));
    }
    out
}

pub fn parse_tams(text: &str) -> Result<Vec<TamRecord>> {
    let bad = |line: usize, msg: &str| Error::Invalid(format!("tam dump line {line}: {msg}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut records = Vec::new();
    while let Some((n, header)) = lines.next() {
        if header.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [side, level, view, len] = fields[..] else {
            return Err(bad(n, "expected `side level view length`"));
        };
        let side = match side {
            "encoder" => Side::Encoder,
            "decoder" => Side::Decoder,
            _ => return Err(bad(n, "unknown side")),
        };
        let level = level.parse().map_err(|_| bad(n, "bad level"))?;
        let view: View = view.parse().map_err(|_| bad(n, "unknown view"))?;
        let len: usize = len.parse().map_err(|_| bad(n, "bad length"))?;
        let (n, body) = lines.next().ok_or_else(|| bad(n, "missing values line"))?;
        let values = body
            .split_whitespace()
            .map(|v| v.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad(n, "bad value"))?;
        if values.len() != len {
            return Err(bad(
                n,
                &format!("{} values, header says {len}", values.len()),
            ));
        }
        records.push(TamRecord {
            side,
            level,
            view,
            values,
        });
    }
    Ok(records)
}

/// Writes all records to `dir/tams.txt`, creating `dir` if needed.
pub fn write_tams(dir: &Path, records: &[TamRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let path = dir.join(TAM_FILE);
    fs::write(&path, format_tams(records)).map_err(Error::io(&path))
}

pub fn read_tams(path: &Path) -> Result<Vec<TamRecord>> {
    parse_tams(&fs::read_to_string(path).map_err(Error::io(path))?)
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub model: String,
    pub params: u64,
    /// FLOPs for one second of audio.
    pub flops: u64,
    pub clips: usize,
    pub si_sdr_noisy: f64,
    pub si_sdr_enhanced: f64,
    pub improvement: f64,
    pub sup_loss: Option<f64>,
}

impl Summary {
    pub fn new(
        model: impl Into<String>,
        config: &ModelConfig,
        report: &EvalReport,
    ) -> Result<Self> {
        Ok(Self {
            model: model.into(),
            params: count_params(config)?,
            flops: count_flops(config, SAMPLE_RATE as usize)?,
            clips: report.clips.len(),
            si_sdr_noisy: report.mean_noisy,
            si_sdr_enhanced: report.mean_enhanced,
            improvement: report.mean_improvement,
            sup_loss: report.sup_loss,
        })
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ReportLine<'a> {
    Clip(&'a ClipScore),
    Summary(&'a Summary),
}

/// Per-clip records followed by the summary, one JSON object per line.
pub fn report_jsonl(summary: &Summary, report: &EvalReport) -> Result<String> {
    let mut out = String::new();
    let lines = report
        .clips
        .iter()
        .map(ReportLine::Clip)
        .chain([ReportLine::Summary(summary)]);
    for line in lines {
        out.push_str(&serde_json::to_string(&line).map_err(|e| Error::Invalid(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Plain-text table, one row per summary.
pub fn summary_table(rows: &[Summary]) -> String {
    let header = [
        "Model",
        "Params(M)",
        "FLOPs(G/s)",
        "SI-SDR noisy",
        "SI-SDR enh.",
        "Δ SI-SDR",
    ];
    let cells: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.model.clone(),
                format!("{:.3}", r.params as f64 / 1e6),
                format!("{:.3}", r.flops as f64 / 1e9),
                format!("{:.2}", r.si_sdr_noisy),
                format!("{:.2}", r.si_sdr_enhanced),
                format!("{:+.2}", r.improvement),
            ]
        })
        .collect();
    let mut width = header.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |row: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in row.iter().zip(width).enumerate() {
            let pad = w - c.chars().count();
            if i == 0 {
                let _ = write!(s, "| {c}{} ", " ".repeat(pad));
            } else {
                let _ = write!(s, "| {}{c} ", " ".repeat(pad));
            }
        }
        out.push_str(s.trim_end());
        out.push_str(" |\n");
    };
    line(&header.map(String::from));
    line(&width.map(|w| "-".repeat(w)));
    for row in &cells {
        line(row);
    }
    out
}

/// Writes `path` (JSON lines) and `path` with a `.txt` extension (the table).
/// Returns the table.
pub fn write_report(path: &Path, summary: &Summary, report: &EvalReport) -> Result<String> {
    let txt = path.with_extension("txt");
    if txt == path {
        return Err(Error::Invalid(format!(
            "{}: report path must not end in .txt",
            path.display()
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
    }
    fs::write(path, report_jsonl(summary, report)?).map_err(Error::io(path))?;
    let table = summary_table(std::slice::from_ref(summary));
    fs::write(&txt, &table).map_err(Error::io(&txt))?;
    Ok(table)
}
