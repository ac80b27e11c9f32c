//! Energy observables, decay-rate fits and run output files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::spectral::{RangeMask, SpectralField, WavenumberGrid};

/// `½ Σ_{k∈mask} |u_k|²`.
pub fn energy_on(grid: &WavenumberGrid, u: &SpectralField, mask: RangeMask) -> f64 {
    0.5 * grid
        .indices(mask)
        .map(|i| u[i].iter().map(|c| c.norm_sqr()).sum::<f64>())
        .sum::<f64>()
}

/// Energy in the resolved modes.
pub fn energy_resolved(grid: &WavenumberGrid, u: &SpectralField) -> f64 {
    energy_on(grid, u, RangeMask::F)
}

/// `Σ_{k∈mask} Re(conj(u_k) · du_k)`.
pub fn energy_rate_on(grid: &WavenumberGrid, u: &SpectralField, du: &SpectralField, mask: RangeMask) -> f64 {
    grid.indices(mask)
        .map(|i| (0..3).map(|c| (u[i][c].conj() * du[i][c]).re).sum::<f64>())
        .sum()
}

/// `dE/dt` over the resolved modes.
pub fn energy_decay_rate(grid: &WavenumberGrid, u: &SpectralField, du: &SpectralField) -> f64 {
    energy_rate_on(grid, u, du, RangeMask::F)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub t: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "dEdt")]
    pub dedt: f64,
    pub rms_z0: Option<f64>,
    pub rms_z1: Option<f64>,
    pub rms_z2: Option<f64>,
}

impl TimeSeriesRecord {
    pub fn rms(&self, j: usize) -> Option<f64> {
        [self.rms_z0, self.rms_z1, self.rms_z2].get(j).copied().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Least-squares slope of `log E` against `log t` over the records with
/// `t` in `window`.
pub fn fit_loglog_slope(records: &[TimeSeriesRecord], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.e))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!(
            "{} records in [{}, {}], need at least 10",
            pts.len(),
            window.0,
            window.1
        )));
    }
    if let Some((t, e)) = pts.iter().find(|(t, e)| *t <= 0.0 || *e <= 0.0) {
        return Err(Error::Fit(format!("nonpositive point (t = {t}, E = {e}) in window")));
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all records share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        slope,
        stderr,
        intercept,
        window,
        points: pts.len(),
    })
}

/// Number of strict local maxima of `|dE/dt|` among records with `t > after`.
pub fn count_rate_maxima(records: &[TimeSeriesRecord], after: f64) -> usize {
    let v: Vec<f64> = records.iter().filter(|r| r.t > after).map(|r| r.dedt.abs()).collect();
    v.windows(3).filter(|w| w[1] > w[0] && w[1] > w[2]).count()
}

/// Fraction of records (with both values present, `t > 0`) where the
/// order-`a` closure RMS is at least `factor` times the order-`b` one.
pub fn dominance_fraction(records: &[TimeSeriesRecord], a: usize, b: usize, factor: f64) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t > 0.0)
        .filter_map(|r| Some((r.rms(a)?, r.rms(b)?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let hits = pairs.iter().filter(|(x, y)| *x >= factor * *y).count();
    Some(hits as f64 / pairs.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowUpInfo {
    pub t: f64,
    pub step: u64,
    pub energy: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// Largest relative difference between incremental and directly summed memory terms.
    pub memory_rel_diff: Option<f64>,
    /// Relative difference between the FFT terms and the word oracle at `t = 0`.
    pub term_oracle_rel_diff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub m: usize,
    pub resolved_modes: usize,
    pub total_modes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub grid: GridInfo,
    pub model: String,
    pub t0: Option<f64>,
    pub dt: f64,
    pub integrator: String,
    pub quadrature: String,
    pub fit_window: (f64, f64),
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    pub status: String,
    pub blow_up: Option<BlowUpInfo>,
    pub steps: u64,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub wall_clock_seconds: f64,
    pub verification: Option<Verification>,
}

fn name_of<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

/// Everything `write_outputs` needs besides the records.
pub struct RunSummary<'a> {
    pub config: &'a RunConfig,
    pub fit: std::result::Result<DecayFit, String>,
    pub blow_up: Option<BlowUpInfo>,
    pub steps: u64,
    pub final_time: f64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub wall_clock_seconds: f64,
    pub verification: Option<Verification>,
}

impl RunSummary<'_> {
    pub fn manifest(&self) -> Result<Manifest> {
        let c = self.config;
        let grid = c.grid()?;
        Ok(Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: c.clone(),
            grid: GridInfo {
                n: c.n,
                m: c.m,
                resolved_modes: grid.count(RangeMask::F),
                total_modes: grid.len(),
            },
            model: c.model.to_string(),
            t0: c.t0,
            dt: c.dt,
            integrator: name_of(&c.integrator),
            quadrature: name_of(&c.quadrature),
            fit_window: c.fit_window,
            fit: self.fit.as_ref().ok().cloned(),
            fit_error: self.fit.as_ref().err().cloned(),
            status: if self.blow_up.is_some() { "blow-up" } else { "completed" }.to_string(),
            blow_up: self.blow_up.clone(),
            steps: self.steps,
            final_time: self.final_time,
            initial_energy: self.initial_energy,
            final_energy: self.final_energy,
            wall_clock_seconds: self.wall_clock_seconds,
            verification: self.verification.clone(),
        })
    }
}

/// Writes the time series as CSV with round-trip precision.
pub fn write_csv(records: &[TimeSeriesRecord], path: &Path) -> Result<()> {
    let to_io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(["t", "E", "dEdt", "rms_z0", "rms_z1", "rms_z2"]).map_err(to_io)?;
    let fmt = |v: f64| format!("{v:.16e}");
    for r in records {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        w.write_record([
            fmt(r.t),
            fmt(r.e),
            fmt(r.dedt),
            opt(r.rms_z0),
            opt(r.rms_z1),
            opt(r.rms_z2),
        ])
        .map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let to_io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut r = csv::Reader::from_path(path).map_err(to_io)?;
    r.deserialize().map(|row| row.map_err(to_io)).collect()
}

/// Writes `energy.csv` and `manifest.json` into `dir`, creating it.
pub fn write_outputs(records: &[TimeSeriesRecord], summary: &RunSummary<'_>, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(records, &dir.join("energy.csv"))?;
    let manifest = summary.manifest()?;
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::io(&path, e.into()))?;
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::taylor_green_field;
    use proptest::prelude::*;

    fn rec(t: f64, e: f64) -> TimeSeriesRecord {
        TimeSeriesRecord {
            t,
            e,
            dedt: 0.0,
            rms_z0: None,
            rms_z1: None,
            rms_z2: None,
        }
    }

    #[test]
    fn taylor_green_energy() {
        let g = WavenumberGrid::new(8, 16).unwrap();
        let u = taylor_green_field(&g).unwrap();
        assert!((energy_resolved(&g, &u) - 0.125).abs() <= 1e-15);
        assert!((energy_resolved(&g, &u.scaled(3.0)) - 9.0 * 0.125).abs() <= 1e-14);
        assert_eq!(energy_resolved(&g, &SpectralField::zeros(&g)), 0.0);
        let rate = energy_decay_rate(&g, &u, &u.scaled(-1.0));
        assert!((rate + 2.0 * 0.125).abs() <= 1e-15);
    }

    #[test]
    fn exact_power_law() {
        let recs: Vec<_> = (0..=90).map(|i| 10.0 + i as f64).map(|t| rec(t, 3.0 * t.powf(-1.5))).collect();
        let fit = fit_loglog_slope(&recs, (10.0, 100.0)).unwrap();
        assert!((fit.slope + 1.5).abs() <= 1e-12);
        assert!(fit.stderr <= 1e-12);
        assert_eq!(fit.points, 91);
    }

    #[test]
    fn fit_errors() {
        let few: Vec<_> = (1..5).map(|i| rec(10.0 * i as f64, 1.0)).collect();
        assert!(fit_loglog_slope(&few, (10.0, 100.0)).is_err());
        let mut bad: Vec<_> = (0..20).map(|i| rec(10.0 + i as f64, 1.0)).collect();
        bad[3].e = 0.0;
        assert!(fit_loglog_slope(&bad, (10.0, 100.0)).is_err());
    }

    #[test]
    fn rate_maxima() {
        let recs: Vec<_> = (0..100)
            .map(|i| {
                let t = i as f64 * 0.1;
                TimeSeriesRecord {
                    dedt: -(t.sin()).abs() - 1.0,
                    ..rec(t, 1.0)
                }
            })
            .collect();
        assert_eq!(count_rate_maxima(&recs, 2.0), 2);
    }

    #[test]
    fn csv_round_trip_and_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.csv");
        write_csv(&[], &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().trim(), "t,E,dEdt,rms_z0,rms_z1,rms_z2");
        let recs = vec![
            TimeSeriesRecord {
                t: 0.1,
                e: 0.125 - 1e-17,
                dedt: -1.0 / 3.0,
                rms_z0: Some(std::f64::consts::PI),
                rms_z1: None,
                rms_z2: None,
            },
            rec(0.2, 1e-300),
        ];
        write_csv(&recs, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), recs);
    }

    #[test]
    fn manifest_records_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::preset("paper-order0").unwrap();
        let summary = RunSummary {
            config: &cfg,
            fit: Err("not enough records".into()),
            blow_up: None,
            steps: 0,
            final_time: 0.0,
            initial_energy: 0.125,
            final_energy: 0.125,
            wall_clock_seconds: 0.0,
            verification: None,
        };
        let m = write_outputs(&[], &summary, dir.path()).unwrap();
        assert_eq!(m.t0, Some(2.0));
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.status, "completed");
    }

    proptest! {
        #[test]
        fn slope_invariant_under_scaling(alpha in -3.0f64..-0.2, amp in 1e-3f64..1e3, count in 10usize..200, a in 1.0f64..20.0) {
            let b = a * 5.0;
            let recs: Vec<_> = (0..count)
                .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
                .map(|t| rec(t, amp * t.powf(alpha)))
                .collect();
            let fit = fit_loglog_slope(&recs, (a, b)).unwrap();
            prop_assert!((fit.slope - alpha).abs() <= 1e-9);
        }
    }
}
