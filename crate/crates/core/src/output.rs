//! Serialization of a run into plain CSV/JSON files plus a manifest of
//! content digests.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acf::AcfAnalysis;
use crate::error::{Error, Result};
use crate::fluct::{negative_part, positive_part, FluctuationSeries};
use crate::pipeline::{Analysis, HarmonicsResult, RunReport};
use crate::wavelet::WaveletAnalysis;
use crate::SeriesKind;

pub const MANIFEST: &str = "manifest.json";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    fn new(path: impl Into<String>, bytes: Vec<u8>) -> Self {
        OutputFile {
            path: path.into(),
            bytes,
        }
    }

    fn text(path: impl Into<String>, s: String) -> Self {
        Self::new(path, s.into_bytes())
    }

    fn json<T: Serialize>(path: impl Into<String>, v: &T) -> Result<Self> {
        let mut bytes = serde_json::to_vec_pretty(v)?;
        bytes.push(b'\n');
        Ok(Self::new(path, bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: RunStatus,
    pub error: Option<String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub files: Vec<ManifestEntry>,
}

pub fn unix_millis() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

const FLUCT_HEADER: &str = "rotation_index,date_mid,S,S_bar,F,F_plus,F_minus\n";

pub fn fluctuations_csv(fs: &FluctuationSeries) -> String {
    let mut s = String::from(FLUCT_HEADER);
    for i in 0..fs.len() {
        let r = fs.rotation_index[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r,
            fs.ephemeris.mid_date(r),
            num(fs.mean_area[i]),
            num(fs.smoothed[i]),
            num(fs.values[i]),
            num(fs.positive_part[i]),
            num(fs.negative_part[i]),
        );
    }
    s
}

/// A bare series in the fluctuation-file layout: index as rotation, value
/// as `F`, with the date and area columns left empty.
pub fn series_csv(values: &[f64]) -> String {
    let mut s = String::from(FLUCT_HEADER);
    for (i, &v) in values.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},,,,{},{},{}",
            num(v),
            num(positive_part(v)),
            num(negative_part(v))
        );
    }
    s
}

fn stem(h: crate::Hemisphere, cycle: u32, kind: SeriesKind) -> String {
    format!("{h}_{cycle}_{kind}")
}

pub fn acf_csv(a: &AcfAnalysis) -> String {
    let mut s = String::from("lag,c,se\n");
    for (lag, (c, se)) in a.c.iter().zip(&a.se).enumerate() {
        let _ = writeln!(s, "{lag},{},{}", num(*c), num(*se));
    }
    s
}

pub fn cwt_csv(w: &WaveletAnalysis) -> String {
    let mut s = String::from("time_index,period,power,significant,in_coi\n");
    for t in 0..w.len() {
        for j in 0..w.periods.len() {
            let _ = writeln!(
                s,
                "{t},{},{},{},{}",
                num(w.periods[j]),
                num(w.power[j][t]),
                flag(w.significant[j][t]),
                flag(w.in_coi(j, t)),
            );
        }
    }
    s
}

pub fn gws_csv(w: &WaveletAnalysis) -> String {
    let mut s = String::from("period,power\n");
    for (p, g) in w.periods.iter().zip(&w.global_spectrum) {
        let _ = writeln!(s, "{},{}", num(*p), opt(*g));
    }
    s
}

pub fn harmonics_csv(h: &HarmonicsResult) -> String {
    let mut s = String::from("hemisphere,cycle,tau,tau_k,fitted,lower,upper\n");
    for p in &h.collection.pairs {
        let band = h.fit.as_ref().map(|f| f.band_at(p.tau as f64));
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.hemisphere,
            p.cycle_number,
            p.tau,
            p.tau_k,
            opt(band.as_ref().map(|b| b.fitted)),
            opt(band.as_ref().map(|b| b.fitted - b.half_width)),
            opt(band.as_ref().map(|b| b.fitted + b.half_width)),
        );
    }
    s
}

#[derive(Serialize)]
struct AcfSummaryFile<'a> {
    summary: &'a [crate::acf::KindSummary],
    skipped: &'a [crate::acf::SkippedCase],
    analyses: Vec<AcfPeaksEntry<'a>>,
}

#[derive(Serialize)]
struct AcfPeaksEntry<'a> {
    hemisphere: crate::Hemisphere,
    cycle_number: u32,
    series_kind: SeriesKind,
    n: usize,
    peaks: &'a [crate::acf::AcfPeak],
}

fn histogram_csv(d: &crate::pipeline::DistributionResult) -> String {
    let h = &d.histogram;
    let mut s = String::from("bin_lo,bin_hi,bin_center,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        let (lo, hi) = (h.bin_edges[k], h.bin_edges[k + 1]);
        let _ = writeln!(s, "{},{},{},{c}", num(lo), num(hi), num(0.5 * (lo + hi)));
    }
    s
}

fn gauss_csv(d: &crate::pipeline::DistributionResult) -> String {
    const SAMPLES: usize = 200;
    let h = &d.histogram;
    let (lo, hi) = (h.bin_edges[0], h.bin_edges[h.bin_edges.len() - 1]);
    let mut s = String::from("x,expected_count\n");
    for i in 0..=SAMPLES {
        let x = lo + (hi - lo) * i as f64 / SAMPLES as f64;
        let _ = writeln!(s, "{},{}", num(x), num(h.expected_count_density(x)));
    }
    s
}

fn acf_panel_csv(a: &AcfAnalysis) -> String {
    let mut s = String::from("lag,c,plus_2se,minus_2se,plus_1se,minus_1se,reliable\n");
    for (lag, (c, se)) in a.c.iter().zip(&a.se).enumerate() {
        let _ = writeln!(
            s,
            "{lag},{},{},{},{},{},{}",
            num(*c),
            num(2.0 * se),
            num(-2.0 * se),
            num(*se),
            num(-se),
            flag(a.is_reliable(lag)),
        );
    }
    s
}

fn regression_points_csv(a: &Analysis, kind: SeriesKind) -> String {
    let mut s = String::from("hemisphere,cycle,tau,tau_2,tau_3\n");
    for k in [2u8, 3] {
        if let Some(h) = a.harmonics(kind, k) {
            for p in &h.collection.pairs {
                let (t2, t3) = if k == 2 {
                    (p.tau_k.to_string(), String::new())
                } else {
                    (String::new(), p.tau_k.to_string())
                };
                let _ = writeln!(s, "{},{},{},{t2},{t3}", p.hemisphere, p.cycle_number, p.tau);
            }
        }
    }
    s
}

fn regression_lines_csv(a: &Analysis, kind: SeriesKind, lo: usize, hi: usize) -> String {
    const STEPS_PER_LAG: usize = 4;
    let mut s = String::from("tau,line_2,lower_2,upper_2,line_3,lower_3,upper_3\n");
    let fits = [2u8, 3].map(|k| a.harmonics(kind, k).and_then(|h| h.fit.as_ref()));
    for i in 0..=(hi - lo) * STEPS_PER_LAG {
        let x = lo as f64 + i as f64 / STEPS_PER_LAG as f64;
        let _ = write!(s, "{}", num(x));
        for f in fits {
            let b = f.map(|f| f.band_at(x));
            let _ = write!(
                s,
                ",{},{},{}",
                opt(b.as_ref().map(|b| b.fitted)),
                opt(b.as_ref().map(|b| b.fitted - b.half_width)),
                opt(b.as_ref().map(|b| b.fitted + b.half_width)),
            );
        }
        s.push('\n');
    }
    s
}

/// Plot-ready files under `plots/`. Wavelet maps and global spectra are
/// already in long format (`cwt_*`, `gws_*`) and are not duplicated.
pub fn plot_data(a: &Analysis) -> Vec<OutputFile> {
    let mut out = Vec::new();
    for d in &a.hemispheres {
        let h = d.fluct.hemisphere;
        out.push(OutputFile::text(
            format!("plots/histogram_{h}.csv"),
            histogram_csv(&d.distribution),
        ));
        out.push(OutputFile::text(
            format!("plots/gauss_{h}.csv"),
            gauss_csv(&d.distribution),
        ));
    }
    for x in &a.acf.analyses {
        out.push(OutputFile::text(
            format!("plots/acf_bands_{}.csv", stem(x.hemisphere, x.cycle_number, x.series_kind)),
            acf_panel_csv(x),
        ));
    }
    let (lo, hi) = a.acf.windows.first().map(|w| (w.lo, w.hi)).unwrap_or((7, 13));
    for kind in SeriesKind::ALL {
        out.push(OutputFile::text(
            format!("plots/harmonics_{kind}_points.csv"),
            regression_points_csv(a, kind),
        ));
        out.push(OutputFile::text(
            format!("plots/harmonics_{kind}_lines.csv"),
            regression_lines_csv(a, kind, lo, hi),
        ));
    }
    out
}

pub fn render(a: &Analysis, report: &RunReport) -> Result<Vec<OutputFile>> {
    let mut out = Vec::new();
    for d in &a.hemispheres {
        let h = d.fluct.hemisphere;
        out.push(OutputFile::text(
            format!("fluctuations_{h}.csv"),
            fluctuations_csv(&d.fluct),
        ));
        out.push(OutputFile::json(format!("distribution_{h}.json"), &d.distribution)?);
    }
    for x in &a.acf.analyses {
        out.push(OutputFile::text(
            format!("acf_{}.csv", stem(x.hemisphere, x.cycle_number, x.series_kind)),
            acf_csv(x),
        ));
    }
    out.push(OutputFile::json(
        "acf_summary.json",
        &AcfSummaryFile {
            summary: &a.acf.summary,
            skipped: &a.acf.skipped,
            analyses: a
                .acf
                .analyses
                .iter()
                .map(|x| AcfPeaksEntry {
                    hemisphere: x.hemisphere,
                    cycle_number: x.cycle_number,
                    series_kind: x.series_kind,
                    n: x.n,
                    peaks: &x.peaks,
                })
                .collect(),
        },
    )?);
    for w in &a.wavelets {
        let st = stem(w.hemisphere, w.cycle_number, w.series_kind);
        out.push(OutputFile::text(format!("cwt_{st}.csv"), cwt_csv(w)));
        out.push(OutputFile::text(format!("gws_{st}.csv"), gws_csv(w)));
    }
    for h in &a.harmonics {
        out.push(OutputFile::text(
            format!("harmonics_{}_k{}.csv", h.collection.kind, h.collection.k),
            harmonics_csv(h),
        ));
    }
    out.push(OutputFile::json("harmonics.json", &a.harmonics)?);
    out.push(OutputFile::json("method_agreement.json", &a.agreement)?);
    out.push(OutputFile::json(REPORT, report)?);
    out.extend(plot_data(a));
    out.sort_by(|x, y| x.path.cmp(&y.path));
    Ok(out)
}

/// Writes `files` and then the manifest. With `error` set, the manifest
/// records the failure.
pub fn write_tree(dir: &Path, files: &[OutputFile], started_unix_ms: u128, error: Option<&Error>) -> Result<Manifest> {
    let mk = |p: &Path| std::fs::create_dir_all(p).map_err(|e| Error::io(p.display().to_string(), e));
    mk(dir)?;
    let mut entries = Vec::with_capacity(files.len());
    for f in files {
        let path = dir.join(&f.path);
        if let Some(parent) = path.parent() {
            mk(parent)?;
        }
        std::fs::write(&path, &f.bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        entries.push(ManifestEntry {
            path: f.path.clone(),
            sha256: sha256_hex(&f.bytes),
            bytes: f.bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        status: if error.is_some() {
            RunStatus::Failed
        } else {
            RunStatus::Ok
        },
        error: error.map(|e| e.to_string()),
        started_unix_ms,
        finished_unix_ms: unix_millis(),
        files: entries,
    };
    let path = dir.join(MANIFEST);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_report(dir: &Path) -> Result<RunReport> {
    let path = dir.join(REPORT);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Paths whose current content no longer matches the manifest digest.
pub fn verify_manifest(dir: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|e| match std::fs::read(dir.join(&e.path)) {
            Ok(b) => sha256_hex(&b) != e.sha256,
            Err(_) => true,
        })
        .map(|e| e.path.clone())
        .collect()
}
