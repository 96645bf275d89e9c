//! End-to-end run: daily records to fluctuation series, distribution tests,
//! per-cycle ACF and wavelet surveys, harmonic regressions and method
//! agreement.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acf::{cycle_acf_survey, AcfConfig, AcfSurvey, KindSummary, SkippedCase, WindowName};
use crate::calendar::{crop_to_table, segment_cycles, CarringtonEphemeris, CycleSegment, CycleTable};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fluct::{fluctuations, rotation_means, EdgePolicy, FluctuationSeries};
use crate::harmonics::{
    collect_pairs, fit_pairs, method_agreement, Agreement, PairCollection, PairingRule, RegressionFit,
};
use crate::ingest::{fill_gaps, parse_daily_file, ColumnMap, DailyAreaRecord, GapPolicy};
use crate::stats::{
    freedman_diaconis_bins, histogram_gauss_fit, ks::ks_two_sample_p, lilliefors_test, shapiro_wilk_test, HistogramFit,
    KsMethod, TestName, TestResult,
};
use crate::wavelet::{cycle_wavelet_survey, WaveletAnalysis, WaveletParams, WaveletSkip};
use crate::{Hemisphere, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HemisphereSelection {
    North,
    South,
    #[default]
    Both,
}

impl HemisphereSelection {
    pub fn hemispheres(self) -> Vec<Hemisphere> {
        match self {
            HemisphereSelection::North => vec![Hemisphere::North],
            HemisphereSelection::South => vec![Hemisphere::South],
            HemisphereSelection::Both => Hemisphere::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EphemerisOverrides {
    pub epoch_julian_date: Option<f64>,
    pub synodic_period_days: Option<f64>,
}

impl EphemerisOverrides {
    pub fn resolve(&self) -> Result<CarringtonEphemeris> {
        let d = CarringtonEphemeris::default();
        CarringtonEphemeris::new(
            self.epoch_julian_date.unwrap_or(d.epoch_julian_date),
            self.synodic_period_days.unwrap_or(d.synodic_period_days),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    /// Use the bundled synthetic daily records instead of `input_path`.
    pub fixture: bool,
    /// Layout of the input file; inferred from the extension when unset
    /// (`.csv` is the canonical CSV, anything else the Greenwich layout).
    pub columns: Option<ColumnMap>,
    pub hemispheres: HemisphereSelection,
    pub cycle_table_path: Option<PathBuf>,
    pub ephemeris: EphemerisOverrides,
    pub edge_policy: EdgePolicy,
    pub gap_policy: GapPolicy,
    pub acf: AcfConfig,
    pub wavelet: WaveletParams,
    /// Confidence level for wavelet contours; tests run at `1 - level`.
    pub significance_level: f64,
    pub pairing_rule: PairingRule,
    /// Histogram bin count; Freedman-Diaconis when unset.
    pub histogram_bins: Option<usize>,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_path: None,
            fixture: false,
            columns: None,
            hemispheres: HemisphereSelection::Both,
            cycle_table_path: None,
            ephemeris: EphemerisOverrides::default(),
            edge_policy: EdgePolicy::Shrink,
            gap_policy: GapPolicy::Skip,
            acf: AcfConfig::default(),
            wavelet: WaveletParams::default(),
            significance_level: 0.95,
            pairing_rule: PairingRule::OneSe,
            histogram_bins: None,
            output_dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    /// Test size `1 - level`, rounded to 12 decimals so that 0.95 gives
    /// exactly 0.05.
    pub fn alpha(&self) -> f64 {
        ((1.0 - self.significance_level) * 1e12).round() / 1e12
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.significance_level > 0.0 && self.significance_level < 1.0) {
            return Err(Error::Config(format!(
                "significance level {} outside (0, 1)",
                self.significance_level
            )));
        }
        self.acf.validate()?;
        self.wavelet.validate()?;
        self.ephemeris.resolve()?;
        if let Some(c) = &self.columns {
            c.validate()?;
        }
        if matches!(self.histogram_bins, Some(b) if b < 2) {
            return Err(Error::Config("histogram_bins must be at least 2".into()));
        }
        if !self.fixture && self.input_path.is_none() {
            return Err(Error::Config("no input path given and fixture mode off".into()));
        }
        Ok(())
    }

    pub fn cycle_table(&self) -> Result<CycleTable> {
        match &self.cycle_table_path {
            None => Ok(CycleTable::shipped()),
            Some(p) => {
                let f = File::open(p).map_err(|e| Error::io(p.display().to_string(), e))?;
                CycleTable::from_csv(f)
            }
        }
    }

    pub fn input_label(&self) -> String {
        match (&self.input_path, self.fixture) {
            (_, true) => format!("fixture(seed={})", self.seed),
            (Some(p), false) => p.display().to_string(),
            (None, false) => String::new(),
        }
    }
}

/// Reads daily records with the given layout, or the one implied by the
/// file extension.
pub fn read_daily_records(path: &Path, columns: Option<&ColumnMap>) -> Result<Vec<DailyAreaRecord>> {
    let map = match columns {
        Some(c) => c.clone(),
        None if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => ColumnMap::canonical_csv(),
        None => ColumnMap::default(),
    };
    let f = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(parse_daily_file(BufReader::new(f), &map)?.records)
}

pub fn load_records(cfg: &RunConfig) -> Result<Vec<DailyAreaRecord>> {
    if cfg.fixture {
        return Ok(crate::synth::fixture_daily_records(cfg.seed));
    }
    let path = cfg
        .input_path
        .as_deref()
        .ok_or_else(|| Error::Config("no input path given".into()))?;
    read_daily_records(path, cfg.columns.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionResult {
    pub hemisphere: Hemisphere,
    pub n: usize,
    pub histogram: HistogramFit,
    pub skewness: f64,
    pub tests: Vec<TestResult>,
}

impl DistributionResult {
    pub fn test(&self, name: TestName) -> Option<&TestResult> {
        self.tests.iter().find(|t| t.test_name == name)
    }
}

pub fn distribution(
    hemisphere: Hemisphere,
    values: &[f64],
    bins: Option<usize>,
    alpha: f64,
) -> Result<DistributionResult> {
    let bins = bins.unwrap_or_else(|| freedman_diaconis_bins(values));
    let histogram = histogram_gauss_fit(values, bins)?;
    let mut tests = vec![lilliefors_test(values, alpha)?];
    if values.len() <= crate::stats::shapiro_wilk::MAX_N {
        tests.push(shapiro_wilk_test(values, alpha)?);
    }
    Ok(DistributionResult {
        hemisphere,
        n: values.len(),
        skewness: histogram.skewness,
        histogram,
        tests,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryTest {
    /// Original-kind short-window ACF peak lag per analysed cycle.
    pub north_periods: Vec<usize>,
    pub south_periods: Vec<usize>,
    pub method: KsMethod,
    pub result: TestResult,
}

pub fn dominant_periods(survey: &AcfSurvey, hemisphere: Hemisphere) -> Vec<usize> {
    survey
        .of_kind(SeriesKind::Original)
        .filter(|a| a.hemisphere == hemisphere)
        .filter_map(|a| a.peak(WindowName::Short).map(|p| p.lag))
        .collect()
}

pub fn hemispheric_symmetry(survey: &AcfSurvey, alpha: f64) -> Result<SymmetryTest> {
    let north = dominant_periods(survey, Hemisphere::North);
    let south = dominant_periods(survey, Hemisphere::South);
    let a: Vec<f64> = north.iter().map(|&v| v as f64).collect();
    let b: Vec<f64> = south.iter().map(|&v| v as f64).collect();
    let (d, p, method) = ks_two_sample_p(&a, &b)?;
    Ok(SymmetryTest {
        north_periods: north,
        south_periods: south,
        method,
        result: TestResult {
            test_name: TestName::KsTwoSample,
            statistic: d,
            p_value: p,
            alpha,
            critical_value: None,
            reject: p < alpha,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicsResult {
    pub collection: PairCollection,
    pub fit: Option<RegressionFit>,
    /// Why no fit was reported.
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HemisphereData {
    pub fluct: FluctuationSeries,
    pub segments: Vec<CycleSegment>,
    pub distribution: DistributionResult,
}

/// Everything computed by a run, before serialization.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub hemispheres: Vec<HemisphereData>,
    pub acf: AcfSurvey,
    pub wavelets: Vec<WaveletAnalysis>,
    pub wavelet_skipped: Vec<WaveletSkip>,
    pub symmetry: Option<SymmetryTest>,
    pub harmonics: Vec<HarmonicsResult>,
    pub agreement: Vec<Agreement>,
}

impl Analysis {
    pub fn hemisphere(&self, h: Hemisphere) -> Option<&HemisphereData> {
        self.hemispheres.iter().find(|d| d.fluct.hemisphere == h)
    }

    pub fn harmonics(&self, kind: SeriesKind, k: u8) -> Option<&HarmonicsResult> {
        self.harmonics
            .iter()
            .find(|r| r.collection.kind == kind && r.collection.k == k)
    }

    pub fn agreement(&self, kind: SeriesKind) -> Option<&Agreement> {
        self.agreement.iter().find(|a| a.kind == kind)
    }
}

/// Fluctuation series of one hemisphere over the cycle table's span.
pub fn hemisphere_series(
    records: &[DailyAreaRecord],
    hemisphere: Hemisphere,
    cfg: &RunConfig,
    table: &CycleTable,
) -> Result<(FluctuationSeries, Vec<CycleSegment>)> {
    let eph = cfg.ephemeris.resolve()?;
    let means = rotation_means(records, hemisphere, &eph, cfg.gap_policy).map_err(|e| e.in_module("fluct"))?;
    let cropped = crop_to_table(&means, table);
    let fluct = fluctuations(&cropped, cfg.edge_policy).map_err(|e| e.in_module("fluct"))?;
    let segments = segment_cycles(&fluct.rotation_series(), table).map_err(|e| e.in_module("calendar"))?;
    Ok((fluct, segments))
}

pub fn analyze_records(records: &[DailyAreaRecord], cfg: &RunConfig, exec: Execution) -> Result<Analysis> {
    cfg.validate()?;
    let table = cfg.cycle_table().map_err(|e| e.in_module("calendar"))?;
    let records = fill_gaps(records, cfg.gap_policy).map_err(|e| e.in_module("ingest"))?;
    let alpha = cfg.alpha();

    let mut hemispheres = Vec::new();
    for h in cfg.hemispheres.hemispheres() {
        let (fluct, segments) = hemisphere_series(&records, h, cfg, &table)?;
        let distribution =
            distribution(h, &fluct.values, cfg.histogram_bins, alpha).map_err(|e| e.in_module("stats"))?;
        hemispheres.push(HemisphereData {
            fluct,
            segments,
            distribution,
        });
    }

    let inputs: Vec<(&FluctuationSeries, &[CycleSegment])> =
        hemispheres.iter().map(|d| (&d.fluct, d.segments.as_slice())).collect();
    let acf = cycle_acf_survey(&inputs, &cfg.acf, exec).map_err(|e| e.in_module("acf"))?;
    let (wavelets, wavelet_skipped) = cycle_wavelet_survey(&inputs, &cfg.wavelet, cfg.significance_level, exec)
        .map_err(|e| e.in_module("wavelet"))?;

    let symmetry = if hemispheres.len() == 2 {
        Some(hemispheric_symmetry(&acf, alpha).map_err(|e| e.in_module("stats"))?)
    } else {
        None
    };

    let mut harmonics = Vec::new();
    for kind in SeriesKind::ALL {
        for k in [2u8, 3] {
            let collection = collect_pairs(&acf, kind, k, cfg.pairing_rule);
            let (fit, fit_error) = match fit_pairs(&collection.pairs) {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(e.to_string())),
            };
            harmonics.push(HarmonicsResult {
                collection,
                fit,
                fit_error,
            });
        }
    }

    let short = cfg.acf.windows[0];
    let agreement = SeriesKind::ALL
        .iter()
        .map(|&k| method_agreement(&acf, &wavelets, k, cfg.pairing_rule, short.lo as f64, short.hi as f64))
        .collect();

    Ok(Analysis {
        hemispheres,
        acf,
        wavelets,
        wavelet_skipped,
        symmetry,
        harmonics,
        agreement,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HemisphereSummary {
    pub hemisphere: Hemisphere,
    pub n: usize,
    pub first_rotation: Option<i64>,
    pub last_rotation: Option<i64>,
    pub cycles: Vec<u32>,
    pub skewness: f64,
    pub tests: Vec<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortPeak {
    pub hemisphere: Hemisphere,
    pub cycle_number: u32,
    pub series_kind: SeriesKind,
    pub lag: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub kind: SeriesKind,
    pub k: u8,
    pub n_points: usize,
    pub excluded: usize,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementSummary {
    pub kind: SeriesKind,
    pub matched: usize,
    pub pearson_r: Option<f64>,
    pub fraction_within_one: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub input: String,
    pub hemispheres: Vec<HemisphereSummary>,
    pub acf_summary: Vec<KindSummary>,
    pub short_window_peaks: Vec<ShortPeak>,
    pub acf_skipped: Vec<SkippedCase>,
    pub wavelet_skipped: Vec<WaveletSkip>,
    pub hemispheric_symmetry: Option<SymmetryTest>,
    pub regressions: Vec<RegressionSummary>,
    pub agreement: Vec<AgreementSummary>,
}

impl RunReport {
    pub fn from_analysis(a: &Analysis, cfg: &RunConfig) -> Self {
        RunReport {
            input: cfg.input_label(),
            hemispheres: a
                .hemispheres
                .iter()
                .map(|d| HemisphereSummary {
                    hemisphere: d.fluct.hemisphere,
                    n: d.fluct.len(),
                    first_rotation: d.fluct.rotation_index.first().copied(),
                    last_rotation: d.fluct.rotation_index.last().copied(),
                    cycles: d.segments.iter().map(|s| s.cycle).collect(),
                    skewness: d.distribution.skewness,
                    tests: d.distribution.tests.clone(),
                })
                .collect(),
            acf_summary: a.acf.summary.clone(),
            short_window_peaks: a
                .acf
                .analyses
                .iter()
                .map(|x| ShortPeak {
                    hemisphere: x.hemisphere,
                    cycle_number: x.cycle_number,
                    series_kind: x.series_kind,
                    lag: x.peak(WindowName::Short).map(|p| p.lag),
                })
                .collect(),
            acf_skipped: a.acf.skipped.clone(),
            wavelet_skipped: a.wavelet_skipped.clone(),
            hemispheric_symmetry: a.symmetry.clone(),
            regressions: a
                .harmonics
                .iter()
                .map(|h| RegressionSummary {
                    kind: h.collection.kind,
                    k: h.collection.k,
                    n_points: h.collection.pairs.len(),
                    excluded: h.collection.excluded,
                    slope: h.fit.as_ref().map(|f| f.slope),
                    intercept: h.fit.as_ref().map(|f| f.intercept),
                    r: h.fit.as_ref().map(|f| f.r),
                    note: h.fit_error.clone(),
                })
                .collect(),
            agreement: a
                .agreement
                .iter()
                .map(|g| AgreementSummary {
                    kind: g.kind,
                    matched: g.matched.len(),
                    pearson_r: g.pearson_r,
                    fraction_within_one: g.fraction_within_one,
                })
                .collect(),
        }
    }
}

/// Runs the pipeline and writes every output under `cfg.output_dir`. On
/// failure only a manifest recording the error is written.
pub fn run_pipeline(cfg: &RunConfig, exec: Execution) -> Result<RunReport> {
    let started = crate::output::unix_millis();
    let result = cfg
        .validate()
        .and_then(|_| load_records(cfg).map_err(|e| e.in_module("ingest")))
        .and_then(|records| analyze_records(&records, cfg, exec))
        .and_then(|analysis| {
            let report = RunReport::from_analysis(&analysis, cfg);
            let files = crate::output::render(&analysis, &report)?;
            Ok((report, files))
        });
    match result {
        Ok((report, files)) => {
            crate::output::write_tree(&cfg.output_dir, &files, started, None)?;
            Ok(report)
        }
        Err(e) => {
            // best effort; the original error is what the caller needs
            let _ = crate::output::write_tree(&cfg.output_dir, &[], started, Some(&e));
            Err(e)
        }
    }
}
