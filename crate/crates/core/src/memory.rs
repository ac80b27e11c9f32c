//! Truncated memory integrals `Σ_j (1/j!) ∫_{max(0,t-t₀)}^t (t-σ)^j Z^j(u(σ)) dσ`.
//!
//! Integrand snapshots are kept for the last `t₀/Δt` steps. In incremental
//! mode, moments `M_{j,m} = ∫ (σ - t_base)^m Z^j dσ` over the window are
//! updated by adding the newest trapezoid panel and subtracting the expired
//! one, so each step costs O(1) field operations regardless of the window
//! length. Direct mode re-sums the whole window and is the reference.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{RangeMask, SpectralField, Vec3, WavenumberGrid, ZERO3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    Trapezoid,
    Simpson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryMode {
    Incremental,
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryConfig {
    /// Truncation length; `None` keeps the whole history.
    pub t0: Option<f64>,
    pub dt: f64,
    pub order: usize,
    /// Time between moment-origin shifts.
    pub rebase_interval: f64,
    pub mode: MemoryMode,
    pub quadrature: Quadrature,
}

impl MemoryConfig {
    pub fn new(t0: Option<f64>, dt: f64, order: usize) -> Result<Self> {
        let cfg = MemoryConfig {
            t0,
            dt,
            order,
            rebase_interval: t0.unwrap_or(1.0),
            mode: MemoryMode::Incremental,
            quadrature: Quadrature::Trapezoid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(t0) = self.t0 {
            window_steps(t0, self.dt)?;
        }
        if !(self.rebase_interval.is_finite() && self.rebase_interval > 0.0) {
            return Err(Error::Config("rebase interval must be positive".into()));
        }
        if self.quadrature == Quadrature::Simpson && self.mode != MemoryMode::Direct {
            return Err(Error::Config("simpson quadrature requires direct memory mode".into()));
        }
        Ok(())
    }

    /// `W = t₀/Δt`, or `None` when untruncated.
    pub fn window_steps(&self) -> Option<usize> {
        self.t0.map(|t0| window_steps(t0, self.dt).expect("validated"))
    }
}

/// `t₀/Δt` when it is a positive integer (to 1e-9 relative).
pub fn window_steps(t0: f64, dt: f64) -> Result<usize> {
    if !(t0.is_finite() && t0 > 0.0) {
        return Err(Error::Config(format!("t0 must be positive, got {t0}")));
    }
    let w = (t0 / dt).round();
    if w < 1.0 || (w * dt - t0).abs() > 1e-9 * t0 {
        return Err(Error::Config(format!("t0 = {t0} is not a multiple of dt = {dt}")));
    }
    Ok(w as usize)
}

type Values = Vec<Vec3>;

fn axpy(y: &mut [Vec3], a: f64, x: &[Vec3]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        for c in 0..3 {
            yv[c] += xv[c] * a;
        }
    }
}

/// Maps fields on `F` to compact coefficient lists and back.
#[derive(Clone, Debug)]
pub struct ResolvedLayout {
    indices: Vec<usize>,
    grid: WavenumberGrid,
}

impl ResolvedLayout {
    pub fn new(grid: &WavenumberGrid) -> Self {
        ResolvedLayout {
            indices: grid.indices(RangeMask::F).collect(),
            grid: grid.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn gather(&self, field: &SpectralField) -> Result<Values> {
        field.check_grid(&self.grid)?;
        Ok(self.indices.iter().map(|&i| field[i]).collect())
    }

    pub fn scatter(&self, values: &[Vec3]) -> SpectralField {
        let mut out = SpectralField::zeros(&self.grid);
        for (&i, v) in self.indices.iter().zip(values) {
            out[i] = *v;
        }
        out
    }
}

/// Integrands `Z⁰ … Z^n` at one accepted step.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub values: Vec<Values>,
}

/// The last `W + 1` snapshots, i.e. `W` panels covering `[t - t₀, t]`.
#[derive(Clone, Debug)]
pub struct HistoryWindow {
    dt: f64,
    panels: Option<usize>,
    slots: VecDeque<Snapshot>,
}

impl HistoryWindow {
    pub fn new(dt: f64, panels: Option<usize>) -> Self {
        HistoryWindow {
            dt,
            panels,
            slots: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// True once the oldest snapshot sits at `t - t₀`.
    pub fn is_full(&self) -> bool {
        self.panels.is_some_and(|w| self.slots.len() == w + 1)
    }

    pub fn oldest(&self) -> Option<&Snapshot> {
        self.slots.front()
    }

    pub fn newest(&self) -> Option<&Snapshot> {
        self.slots.back()
    }

    pub fn get(&self, i: usize) -> Option<&Snapshot> {
        self.slots.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Snapshot> {
        self.slots.iter()
    }

    /// Appends the snapshot for time `t`; returns the evicted one, if any.
    pub fn push(&mut self, t: f64, values: Vec<Values>) -> Result<Option<Snapshot>> {
        let step = (t / self.dt).round();
        if step < 0.0 || (step * self.dt - t).abs() > 1e-9 * self.dt.max(t.abs() * 1e-3) {
            return Err(Error::History(format!("t = {t} is not on the step grid")));
        }
        let step = step as u64;
        if let Some(last) = self.slots.back() {
            if step != last.step + 1 {
                return Err(Error::History(format!(
                    "snapshot at t = {t} does not follow t = {}",
                    last.t
                )));
            }
            if values.len() != last.values.len() {
                return Err(Error::History("integrand count changed".into()));
            }
        }
        self.slots.push_back(Snapshot {
            step,
            t: step as f64 * self.dt,
            values,
        });
        match self.panels {
            Some(w) if self.slots.len() > w + 1 => Ok(self.slots.pop_front()),
            _ => Ok(None),
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `M_{j,m} = ∫_window (σ - base)^m Z^j(σ) dσ` for `m ≤ j ≤ order`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentAccumulators {
    pub base: f64,
    pub moments: Vec<Vec<Values>>,
}

impl MomentAccumulators {
    pub fn new(order: usize, modes: usize, base: f64) -> Self {
        MomentAccumulators {
            base,
            moments: (0..=order).map(|j| vec![vec![ZERO3; modes]; j + 1]).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.moments.len() - 1
    }

    /// Adds `sign` times the trapezoid panel between two snapshots.
    pub fn add_panel(&mut self, a: &Snapshot, b: &Snapshot, sign: f64) -> Result<()> {
        if a.values.len() <= self.order() || b.values.len() <= self.order() {
            return Err(Error::History("snapshot lacks integrands for the configured order".into()));
        }
        let h = b.t - a.t;
        for (j, row) in self.moments.iter_mut().enumerate() {
            for (m, acc) in row.iter_mut().enumerate() {
                let wa = sign * 0.5 * h * (a.t - self.base).powi(m as i32);
                let wb = sign * 0.5 * h * (b.t - self.base).powi(m as i32);
                axpy(acc, wa, &a.values[j]);
                axpy(acc, wb, &b.values[j]);
            }
        }
        Ok(())
    }

    /// Trapezoid moments of the whole window, summed from scratch.
    pub fn from_window(window: &HistoryWindow, order: usize, modes: usize, base: f64) -> Result<Self> {
        let mut acc = MomentAccumulators::new(order, modes, base);
        let slots: Vec<&Snapshot> = window.iter().collect();
        for pair in slots.windows(2) {
            acc.add_panel(pair[0], pair[1], 1.0)?;
        }
        Ok(acc)
    }

    /// Re-expands every moment about `new_base`.
    pub fn rebase(&mut self, new_base: f64) {
        let d = new_base - self.base;
        if d == 0.0 {
            return;
        }
        for row in &mut self.moments {
            let old = row.clone();
            for (m, acc) in row.iter_mut().enumerate() {
                acc.iter_mut().for_each(|v| *v = ZERO3);
                for (r, src) in old.iter().enumerate().take(m + 1) {
                    let w = binomial(m, r) * (-d).powi((m - r) as i32);
                    axpy(acc, w, src);
                }
            }
        }
        self.base = new_base;
    }

    /// `(1/j!) ∫_window (t - σ)^j Z^j dσ` for each `j`.
    pub fn assemble(&self, t: f64) -> Vec<Values> {
        let s = t - self.base;
        self.moments
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let mut out = vec![ZERO3; row[0].len()];
                for (m, acc) in row.iter().enumerate() {
                    let w = binomial(j, m) * s.powi((j - m) as i32) * (-1f64).powi(m as i32) / factorial(j);
                    axpy(&mut out, w, acc);
                }
                out
            })
            .collect()
    }

    /// Largest difference relative to the largest entry of either side.
    pub fn rel_diff(&self, other: &MomentAccumulators) -> f64 {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (ra, rb) in self.moments.iter().zip(&other.moments) {
            for (a, b) in ra.iter().zip(rb) {
                for (va, vb) in a.iter().zip(b) {
                    for c in 0..3 {
                        diff = diff.max((va[c] - vb[c]).norm());
                        scale = scale.max(va[c].norm()).max(vb[c].norm());
                    }
                }
            }
        }
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }
}

/// Quadrature weights for `count` equally spaced samples with spacing `h`.
fn quadrature_weights(count: usize, h: f64, rule: Quadrature) -> Vec<f64> {
    let mut w = vec![0.0; count];
    if count < 2 {
        return w;
    }
    let panels = count - 1;
    let trapezoid = |w: &mut [f64], from: usize, to: usize| {
        for i in from..to {
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
    };
    match rule {
        Quadrature::Trapezoid => trapezoid(&mut w, 0, panels),
        Quadrature::Simpson if panels < 2 => trapezoid(&mut w, 0, panels),
        Quadrature::Simpson => {
            // Composite Simpson; an odd panel count ends with the 3/8 rule.
            let simpson_end = if panels.is_multiple_of(2) { panels } else { panels - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if simpson_end < panels {
                let i = simpson_end;
                for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                    w[i + o] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

/// `(1/j!) Σ_slots w_i (t - σ_i)^j Z^j(σ_i)` over the whole window.
pub fn direct_window_integral(
    window: &HistoryWindow,
    t: f64,
    order: usize,
    rule: Quadrature,
) -> Result<Vec<Values>> {
    let Some(first) = window.oldest() else {
        return Err(Error::History("empty window".into()));
    };
    if first.values.len() <= order {
        return Err(Error::OrderBound {
            requested: order,
            bound: first.values.len() - 1,
        });
    }
    let modes = first.values[0].len();
    let weights = quadrature_weights(window.len(), window.dt, rule);
    let mut out = vec![vec![ZERO3; modes]; order + 1];
    for (snap, w) in window.iter().zip(weights) {
        for (j, acc) in out.iter_mut().enumerate() {
            let a = w * (t - snap.t).powi(j as i32) / factorial(j);
            axpy(acc, a, &snap.values[j]);
        }
    }
    Ok(out)
}

/// History, moments and the evaluation of memory terms at arbitrary stage times.
#[derive(Clone, Debug)]
pub struct MemoryState {
    config: MemoryConfig,
    layout: ResolvedLayout,
    window: HistoryWindow,
    moments: MomentAccumulators,
}

impl MemoryState {
    pub fn new(grid: &WavenumberGrid, config: MemoryConfig) -> Result<Self> {
        config.validate()?;
        let layout = ResolvedLayout::new(grid);
        Ok(MemoryState {
            window: HistoryWindow::new(config.dt, config.window_steps()),
            moments: MomentAccumulators::new(config.order, layout.len(), 0.0),
            layout,
            config,
        })
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.config
    }

    pub fn window(&self) -> &HistoryWindow {
        &self.window
    }

    pub fn moments(&self) -> &MomentAccumulators {
        &self.moments
    }

    pub fn layout(&self) -> &ResolvedLayout {
        &self.layout
    }

    /// Records the integrands `Z⁰ … Z^order` of the accepted state at `t`.
    pub fn accept(&mut self, t: f64, integrands: &[SpectralField]) -> Result<()> {
        if integrands.len() != self.config.order + 1 {
            return Err(Error::History(format!(
                "expected {} integrands, got {}",
                self.config.order + 1,
                integrands.len()
            )));
        }
        let values = integrands
            .iter()
            .map(|f| self.layout.gather(f))
            .collect::<Result<Vec<_>>>()?;
        let evicted = self.window.push(t, values)?;
        if self.config.mode == MemoryMode::Incremental {
            let n = self.window.len();
            if n >= 2 {
                let (a, b) = (&self.window.slots[n - 2], &self.window.slots[n - 1]);
                self.moments.add_panel(a, b, 1.0)?;
            }
            if let Some(old) = evicted {
                let oldest = self.window.oldest().expect("non-empty");
                self.moments.add_panel(&old, oldest, -1.0)?;
            }
            let now = self.window.newest().expect("non-empty").t;
            if now - self.moments.base >= self.config.rebase_interval - 1e-12 {
                self.moments.rebase(now);
            }
        }
        Ok(())
    }

    /// Per-order memory contributions at `tau`, with `tau` between the
    /// newest accepted time `t_n` and `t_n + Δt`. For `tau > t_n` the
    /// integrands of the stage state must be supplied; the interval
    /// `[t_n, tau]` is then one trapezoid panel and the part of the window
    /// that expired since `t_n` is removed by linear interpolation.
    pub fn contributions_at(&self, tau: f64, stage: Option<&[SpectralField]>) -> Result<Vec<SpectralField>> {
        let order = self.config.order;
        let Some(newest) = self.window.newest() else {
            if tau.abs() <= 1e-12 {
                return Ok(vec![SpectralField::zeros(&self.layout.grid); order + 1]);
            }
            return Err(Error::History(format!("no history before t = {tau}")));
        };
        let t_n = newest.t;
        let dt = self.config.dt;
        let eps = 1e-9 * dt;
        if tau < t_n - eps || tau > t_n + dt + eps {
            return Err(Error::History(format!(
                "stage time {tau} outside [{t_n}, {}]",
                t_n + dt
            )));
        }
        let mut out = match self.config.mode {
            MemoryMode::Incremental => self.moments.assemble(tau),
            MemoryMode::Direct => direct_window_integral(&self.window, tau, order, self.config.quadrature)?,
        };
        let weight = |sigma: f64, j: usize| (tau - sigma).powi(j as i32) / factorial(j);

        if tau > t_n + eps {
            let stage = stage.ok_or_else(|| Error::History(format!("stage integrands needed at t = {tau}")))?;
            if stage.len() != order + 1 {
                return Err(Error::History("stage integrand count mismatch".into()));
            }
            let h = tau - t_n;
            for (j, acc) in out.iter_mut().enumerate() {
                let z = self.layout.gather(&stage[j])?;
                axpy(acc, 0.5 * h * weight(t_n, j), &newest.values[j]);
                axpy(acc, 0.5 * h * weight(tau, j), &z);
            }
            if let Some(t0) = self.config.t0 {
                if self.window.is_full() {
                    let first = &self.window.slots[0];
                    let second = &self.window.slots[1];
                    let a = tau - t0;
                    let h = a - first.t;
                    if h > eps {
                        let theta = h / dt;
                        for (j, acc) in out.iter_mut().enumerate() {
                            let mut fa = first.values[j].clone();
                            axpy(&mut fa, -theta, &first.values[j]);
                            axpy(&mut fa, theta, &second.values[j]);
                            axpy(acc, -0.5 * h * weight(first.t, j), &first.values[j]);
                            axpy(acc, -0.5 * h * weight(a, j), &fa);
                        }
                    }
                }
            }
        }
        Ok(out.iter().map(|v| self.layout.scatter(v)).collect())
    }

    /// Sum of all contributions at `tau`.
    pub fn memory_term(&self, tau: f64, stage: Option<&[SpectralField]>) -> Result<SpectralField> {
        let parts = self.contributions_at(tau, stage)?;
        let mut total = parts[0].clone();
        for p in &parts[1..] {
            total.add(p);
        }
        Ok(total)
    }
}

/// Root-mean-square magnitude over the resolved modes.
pub fn rms_on_f(grid: &WavenumberGrid, field: &SpectralField) -> f64 {
    let count = grid.count(RangeMask::F).max(1);
    let sum: f64 = grid
        .indices(RangeMask::F)
        .map(|i| field[i].iter().map(Complex64::norm_sqr).sum::<f64>())
        .sum();
    (sum / count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_field;

    fn grid() -> WavenumberGrid {
        WavenumberGrid::new(4, 8).unwrap()
    }

    fn constant(g: &WavenumberGrid, c: f64) -> SpectralField {
        let mut f = SpectralField::zeros(g);
        for i in g.indices(RangeMask::F) {
            f[i] = [Complex64::new(c, 0.0); 3];
        }
        f
    }

    fn value(f: &SpectralField, g: &WavenumberGrid) -> f64 {
        f[g.indices(RangeMask::F).next().unwrap()][0].re
    }

    #[test]
    fn window_capacity_and_eviction() {
        let w = 5;
        let mut win = HistoryWindow::new(0.1, Some(w));
        let mut last_evicted = None;
        for i in 0..w + 3 {
            last_evicted = win.push(i as f64 * 0.1, vec![vec![ZERO3]]).unwrap().or(last_evicted);
        }
        let t = (w + 2) as f64 * 0.1;
        assert_eq!(win.len(), w + 1);
        assert!((win.oldest().unwrap().t - (t - 0.5)).abs() < 1e-12);
        assert!((last_evicted.unwrap().t - (t - 0.5 - 0.1)).abs() < 1e-12);
        assert!(win.push(t, vec![vec![ZERO3]]).is_err());
        assert!(win.push(t + 0.2, vec![vec![ZERO3]]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(MemoryConfig::new(Some(0.0015), 1e-3, 0).is_err());
        assert_eq!(MemoryConfig::new(Some(2.0), 1e-3, 0).unwrap().window_steps(), Some(2000));
        let mut c = MemoryConfig::new(Some(1.0), 1e-2, 1).unwrap();
        c.quadrature = Quadrature::Simpson;
        assert!(c.validate().is_err());
        c.mode = MemoryMode::Direct;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn constant_integrand_over_full_window() {
        let g = grid();
        let cfg = MemoryConfig::new(Some(0.5), 0.01, 0).unwrap();
        let mut mem = MemoryState::new(&g, cfg).unwrap();
        assert_eq!(value(&mem.memory_term(0.0, None).unwrap(), &g), 0.0);
        let c = 1.5;
        for i in 0..=120 {
            mem.accept(i as f64 * 0.01, &[constant(&g, c)]).unwrap();
        }
        let v = value(&mem.memory_term(1.2, None).unwrap(), &g);
        assert!((v - c * 0.5).abs() <= 1e-13, "{v}");
    }

    #[test]
    fn linear_integrand_is_exact() {
        let g = grid();
        let dt = 0.01;
        let cfg = MemoryConfig::new(Some(0.3), dt, 0).unwrap();
        let mut mem = MemoryState::new(&g, cfg).unwrap();
        let n = 77;
        for i in 0..=n {
            let t = i as f64 * dt;
            mem.accept(t, &[constant(&g, t)]).unwrap();
        }
        let t = n as f64 * dt;
        let want = (t * t - (t - 0.3) * (t - 0.3)) / 2.0;
        let got = value(&mem.memory_term(t, None).unwrap(), &g);
        assert!((got - want).abs() <= 1e-13, "{got} {want}");
    }

    #[test]
    fn single_slot_and_zero_integrands() {
        let g = grid();
        let mut win = HistoryWindow::new(0.1, Some(4));
        win.push(0.0, vec![vec![ZERO3]]).unwrap();
        assert_eq!(direct_window_integral(&win, 0.0, 0, Quadrature::Trapezoid).unwrap()[0][0], ZERO3);
        let one = vec![[Complex64::new(1.0, 0.0); 3]];
        let mut win = HistoryWindow::new(0.1, Some(4));
        win.push(0.0, vec![one.clone()]).unwrap();
        win.push(0.1, vec![one]).unwrap();
        let v = direct_window_integral(&win, 0.1, 0, Quadrature::Trapezoid).unwrap();
        assert!((v[0][0][0].re - 0.1).abs() < 1e-15);
        let _ = g;
    }

    fn random_stream(g: &WavenumberGrid, order: usize, step: u64) -> Vec<SpectralField> {
        (0..=order)
            .map(|j| random_field(g, RangeMask::F, 0.0, 1000 * step + j as u64))
            .collect()
    }

    #[test]
    fn incremental_matches_scratch_and_direct() {
        let g = grid();
        let dt = 0.01;
        let mut cfg = MemoryConfig::new(Some(0.2), dt, 2).unwrap();
        cfg.rebase_interval = 0.2;
        let mut mem = MemoryState::new(&g, cfg.clone()).unwrap();
        let modes = mem.layout().len();
        for step in 0..300u64 {
            let t = step as f64 * dt;
            mem.accept(t, &random_stream(&g, 2, step)).unwrap();
            let scratch = MomentAccumulators::from_window(mem.window(), 2, modes, mem.moments().base).unwrap();
            assert!(mem.moments().rel_diff(&scratch) <= 1e-12);
            let direct = direct_window_integral(mem.window(), t, 2, Quadrature::Trapezoid).unwrap();
            let inc = mem.contributions_at(t, None).unwrap();
            for j in 0..3 {
                let d = mem.layout().scatter(&direct[j]);
                assert!(inc[j].rel_diff(&d) <= 1e-10, "step {step} order {j}");
            }
        }
    }

    #[test]
    fn rebase_preserves_assembly() {
        let g = grid();
        let dt = 0.01;
        let mut mem = MemoryState::new(&g, MemoryConfig::new(Some(0.1), dt, 2).unwrap()).unwrap();
        for step in 0..25u64 {
            mem.accept(step as f64 * dt, &random_stream(&g, 2, step)).unwrap();
        }
        let t = 24.0 * dt;
        let mut acc = mem.moments().clone();
        let before = acc.assemble(t);
        let same = {
            let mut a = acc.clone();
            a.rebase(a.base);
            a
        };
        assert_eq!(same, acc);
        let mut twice = acc.clone();
        acc.rebase(0.37);
        twice.rebase(0.1);
        twice.rebase(0.37);
        assert!(acc.rel_diff(&twice) <= 1e-13);
        let after = acc.assemble(t);
        for j in 0..3 {
            let a = mem.layout().scatter(&before[j]);
            let b = mem.layout().scatter(&after[j]);
            assert!(a.rel_diff(&b) <= 1e-13);
        }
    }

    #[test]
    fn stage_evaluation_matches_direct_sum_with_stage_sample() {
        let g = grid();
        let dt = 0.01;
        let cfg = MemoryConfig::new(Some(0.1), dt, 1).unwrap();
        let mut mem = MemoryState::new(&g, cfg.clone()).unwrap();
        let mut ext = HistoryWindow::new(dt, Some(10));
        let layout = ResolvedLayout::new(&g);
        for step in 0..30u64 {
            let z = random_stream(&g, 1, step);
            mem.accept(step as f64 * dt, &z).unwrap();
            ext.push(step as f64 * dt, z.iter().map(|f| layout.gather(f).unwrap()).collect()).unwrap();
        }
        // A full stage at t_n + dt with the stage sample equals the window
        // that would result from accepting that sample.
        let stage = random_stream(&g, 1, 99);
        let tau = 30.0 * dt;
        let got = mem.contributions_at(tau, Some(&stage)).unwrap();
        ext.push(tau, stage.iter().map(|f| layout.gather(f).unwrap()).collect()).unwrap();
        let want = direct_window_integral(&ext, tau, 1, Quadrature::Trapezoid).unwrap();
        for j in 0..2 {
            assert!(got[j].rel_diff(&layout.scatter(&want[j])) <= 1e-12);
        }
        assert!(mem.contributions_at(tau, None).is_err());
        assert!(mem.contributions_at(tau + dt, Some(&stage)).is_err());
    }

    #[test]
    fn simpson_agrees_with_trapezoid_on_smooth_integrands() {
        for (panels, h) in [(40usize, 0.05), (41, 0.05), (3, 0.1), (1, 0.1)] {
            let w_s = quadrature_weights(panels + 1, h, Quadrature::Simpson);
            let w_t = quadrature_weights(panels + 1, h, Quadrature::Trapezoid);
            let f = |i: usize| (i as f64 * h).sin();
            let exact = 1.0 - (panels as f64 * h).cos();
            let s: f64 = w_s.iter().enumerate().map(|(i, w)| w * f(i)).sum();
            let t: f64 = w_t.iter().enumerate().map(|(i, w)| w * f(i)).sum();
            assert!((s - exact).abs() <= (t - exact).abs() + 1e-15);
            assert!((s - t).abs() <= h * h);
        }
    }

    #[test]
    fn rms_of_constant() {
        let g = grid();
        let f = constant(&g, 2.0);
        assert!((rms_on_f(&g, &f) - 12f64.sqrt()).abs() < 1e-12);
    }
}
