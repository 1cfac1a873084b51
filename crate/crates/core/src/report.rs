//! Output files of a scenario run: traces, per-cell metrics, aggregate
//! tables and trajectory plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;

use crate::geometry::{Point, Pose};
use crate::paths::{make_study_path, Path, StudyShape};
use crate::scenario::TrialRecord;
use crate::sim::GuidanceMode;

/// Plot scale: one pixel per centimeter.
const PX_PER_M: f64 = 100.0;
const PLOT_MARGIN_M: f64 = 0.5;
const PLOT_STEP_M: f64 = 0.05;

/// Column order of cells.csv and of each block of table.csv.
pub const METRIC_COLUMNS: [&str; 4] = ["error_cm", "time_s", "length_m", "speed_m_per_s"];

/// Means over the trials of one (mode, shape) cell, in reporting units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSummary {
    pub mode: GuidanceMode,
    pub shape: StudyShape,
    pub trials: usize,
    pub completed: usize,
    pub error_cm: f64,
    pub time_s: f64,
    pub length_m: f64,
    pub speed_m_per_s: f64,
}

impl CellSummary {
    fn values(&self) -> [f64; 4] {
        [
            self.error_cm,
            self.time_s,
            self.length_m,
            self.speed_m_per_s,
        ]
    }
}

/// Groups records by cell, keeping first-seen cell order.
fn cells(records: &[TrialRecord]) -> Vec<((GuidanceMode, StudyShape), Vec<&TrialRecord>)> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<(GuidanceMode, StudyShape), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.plan.mode, r.plan.shape);
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let v = groups.remove(&k).expect("grouped");
            (k, v)
        })
        .collect()
}

pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    cells(records)
        .into_iter()
        .map(|((mode, shape), trials)| {
            let n = trials.len() as f64;
            let mean = |f: fn(&TrialRecord) -> f64| trials.iter().map(|r| f(r)).sum::<f64>() / n;
            CellSummary {
                mode,
                shape,
                trials: trials.len(),
                completed: trials.iter().filter(|r| r.metrics.complete).count(),
                error_cm: 100.0 * mean(|r| r.metrics.error),
                time_s: mean(|r| r.metrics.time),
                length_m: mean(|r| r.metrics.length),
                speed_m_per_s: mean(|r| r.metrics.speed),
            }
        })
        .collect()
}

/// Per-mode rows with one column per shape and an average over the shapes
/// present, for each metric.
pub fn aggregate_table(summaries: &[CellSummary]) -> String {
    let mut shapes: Vec<StudyShape> = summaries.iter().map(|c| c.shape).collect();
    shapes.sort();
    shapes.dedup();
    let mut modes: Vec<GuidanceMode> = Vec::new();
    for c in summaries {
        if !modes.contains(&c.mode) {
            modes.push(c.mode);
        }
    }

    let mut out = String::from("mode");
    for metric in METRIC_COLUMNS {
        for shape in &shapes {
            let _ = write!(out, ",{metric}_{shape}");
        }
        let _ = write!(out, ",{metric}_average");
    }
    out.push('\n');
    for mode in modes {
        out.push_str(mode.name());
        for (m, _) in METRIC_COLUMNS.iter().enumerate() {
            let row: Vec<Option<f64>> = shapes
                .iter()
                .map(|shape| {
                    summaries
                        .iter()
                        .find(|c| c.mode == mode && c.shape == *shape)
                        .map(|c| c.values()[m])
                })
                .collect();
            for v in &row {
                match v {
                    Some(v) => {
                        let _ = write!(out, ",{v:.4}");
                    }
                    None => out.push(','),
                }
            }
            let present: Vec<f64> = row.into_iter().flatten().collect();
            let avg = present.iter().sum::<f64>() / present.len() as f64;
            let _ = write!(out, ",{avg:.4}");
        }
        out.push('\n');
    }
    out
}

fn cells_csv(summaries: &[CellSummary]) -> String {
    let mut out = format!("mode,shape,trials,completed,{}\n", METRIC_COLUMNS.join(","));
    for c in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{:.4},{:.6}",
            c.mode,
            c.shape,
            c.trials,
            c.completed,
            c.error_cm,
            c.time_s,
            c.length_m,
            c.speed_m_per_s
        );
    }
    out
}

fn metrics_csv(trials: &[&TrialRecord]) -> String {
    let mut out = String::from("trial,seed,path,complete,error_cm,time_s,length_m,speed_m_per_s\n");
    for r in trials {
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{:.4},{:.6}",
            r.plan.trial,
            r.plan.seed,
            r.plan.path_id(),
            m.complete,
            100.0 * m.error,
            m.time,
            m.length,
            m.speed
        );
    }
    out
}

fn polyline(points: &[Point], origin: &Point, height: f64) -> String {
    let mut out = String::new();
    for (i, p) in points.iter().enumerate() {
        let x = (p.x - origin.x) * PX_PER_M;
        let y = height - (p.y - origin.y) * PX_PER_M;
        let _ = write!(out, "{}{x:.1},{y:.1}", if i == 0 { "" } else { " " });
    }
    out
}

fn sample_path(path: &Path) -> Vec<Point> {
    let n = (path.total_length() / PLOT_STEP_M).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| {
            path.point_at_clamped(path.total_length() * k as f64 / n as f64)
                .point
        })
        .collect()
}

/// Planned paths solid, walked trajectories dashed, y up, 1 px per cm.
pub fn trajectory_svg(trials: &[&TrialRecord]) -> String {
    let mut planned: Vec<(bool, Vec<Point>)> = Vec::new();
    for r in trials {
        if !planned.iter().any(|(m, _)| *m == r.plan.mirrored) {
            let path = make_study_path(r.plan.shape, r.plan.mirrored, Pose::origin());
            planned.push((r.plan.mirrored, sample_path(&path)));
        }
    }
    let walked: Vec<Vec<Point>> = trials
        .iter()
        .map(|r| r.trace.samples.iter().map(|s| s.pose.position()).collect())
        .collect();

    let all = planned
        .iter()
        .flat_map(|(_, p)| p)
        .chain(walked.iter().flatten());
    let (mut lo, mut hi) = (
        Point::new(f64::INFINITY, f64::INFINITY),
        Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in all {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if !lo.x.is_finite() {
        lo = Point::zeros();
        hi = Point::zeros();
    }
    let origin = lo - Point::new(PLOT_MARGIN_M, PLOT_MARGIN_M);
    let width = ((hi.x - lo.x + 2.0 * PLOT_MARGIN_M) * PX_PER_M).ceil();
    let height = ((hi.y - lo.y + 2.0 * PLOT_MARGIN_M) * PX_PER_M).ceil();

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for (_, pts) in &planned {
        let _ = writeln!(
            svg,
            "<polyline class=\"planned\" fill=\"none\" stroke=\"black\" stroke-width=\"3\" points=\"{}\"/>",
            polyline(pts, &origin, height)
        );
    }
    for pts in &walked {
        let _ = writeln!(
            svg,
            "<polyline class=\"walked\" fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" stroke-dasharray=\"8 6\" points=\"{}\"/>",
            polyline(pts, &origin, height)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Files written by [`write_report`], relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub trials: usize,
    pub cells: Vec<CellSummary>,
    pub files: Vec<PathBuf>,
}

fn write_file(
    dir: &FsPath,
    rel: PathBuf,
    contents: &[u8],
    files: &mut Vec<PathBuf>,
) -> io::Result<()> {
    let full = dir.join(&rel);
    if let Some(parent) = full.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&full, contents)?;
    files.push(rel);
    Ok(())
}

/// Writes every report file under `dir` from a single thread and returns the
/// run summary, which is also saved as `run_summary.json`. Empty results
/// write nothing.
pub fn write_report(dir: &FsPath, records: &[TrialRecord]) -> io::Result<RunSummary> {
    if records.is_empty() {
        log::warn!("no trial results; nothing written to {}", dir.display());
        return Ok(RunSummary {
            trials: 0,
            cells: Vec::new(),
            files: Vec::new(),
        });
    }
    let mut files = Vec::new();

    for r in records {
        let rel = PathBuf::from("traces").join(format!(
            "{}_{}_{:03}.csv",
            r.plan.mode, r.plan.shape, r.plan.trial
        ));
        let full = dir.join(&rel);
        fs::create_dir_all(full.parent().expect("has parent"))?;
        let mut w = BufWriter::new(fs::File::create(&full)?);
        r.trace.write_csv(&mut w)?;
        w.flush()?;
        files.push(rel);
    }

    for ((mode, shape), trials) in cells(records) {
        let stem = format!("{mode}_{shape}");
        write_file(
            dir,
            PathBuf::from("metrics").join(format!("{stem}.csv")),
            metrics_csv(&trials).as_bytes(),
            &mut files,
        )?;
        write_file(
            dir,
            PathBuf::from("plots").join(format!("{stem}.svg")),
            trajectory_svg(&trials).as_bytes(),
            &mut files,
        )?;
    }

    let summaries = summarize(records);
    write_file(
        dir,
        PathBuf::from("cells.csv"),
        cells_csv(&summaries).as_bytes(),
        &mut files,
    )?;
    write_file(
        dir,
        PathBuf::from("table.csv"),
        aggregate_table(&summaries).as_bytes(),
        &mut files,
    )?;

    let summary = RunSummary {
        trials: records.len(),
        cells: summaries,
        files,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    fs::write(dir.join("run_summary.json"), json + "\n")?;
    Ok(summary)
}
