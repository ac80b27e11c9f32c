//! Model right-hand sides and the explicit time steppers.

use crate::compiler::plan::{compile_z, EvaluationPlan};
use crate::config::{InitialCondition, Integrator, ModelKind, RunConfig};
use crate::error::Result;
use crate::diagnostics::{BlowUpInfo, TimeSeriesRecord, Verification};
use crate::memory::{direct_window_integral, rms_on_f, MemoryMode, MemoryState};
use crate::spectral::{
    hermitian_enforce, project_divergence_free, random_field, reduced_state, taylor_green_field, RangeMask,
    SpectralField, WavenumberGrid,
};
use crate::terms::TermEvaluator;

/// State vector of an ODE system: the velocity followed by any auxiliary fields.
pub type Fields = Vec<SpectralField>;

fn combine(y: &Fields, terms: &[(f64, &Fields)]) -> Fields {
    y.iter()
        .enumerate()
        .map(|(i, yi)| {
            let mut out = yi.clone();
            for (a, k) in terms {
                out.axpy(*a, &k[i]);
            }
            out
        })
        .collect()
}

/// One modified Euler (Heun) step given `k1 = f(t, y)`.
pub fn heun_step<F>(t: f64, dt: f64, y: &Fields, k1: &Fields, mut f: F) -> Result<Fields>
where
    F: FnMut(f64, &Fields) -> Result<Fields>,
{
    let predictor = combine(y, &[(dt, k1)]);
    let k2 = f(t + dt, &predictor)?;
    Ok(combine(y, &[(0.5 * dt, k1), (0.5 * dt, &k2)]))
}

/// One classical fourth-order Runge-Kutta step given `k1 = f(t, y)`.
pub fn rk4_step<F>(t: f64, dt: f64, y: &Fields, k1: &Fields, mut f: F) -> Result<Fields>
where
    F: FnMut(f64, &Fields) -> Result<Fields>,
{
    let k2 = f(t + 0.5 * dt, &combine(y, &[(0.5 * dt, k1)]))?;
    let k3 = f(t + 0.5 * dt, &combine(y, &[(0.5 * dt, &k2)]))?;
    let k4 = f(t + dt, &combine(y, &[(dt, &k3)]))?;
    Ok(combine(
        y,
        &[(dt / 6.0, k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
    ))
}

/// Right-hand side at one state, plus the pieces diagnostics care about.
#[derive(Clone, Debug)]
pub struct StageEval {
    pub derivative: Fields,
    /// Memory (or closure) contribution of each order, on `F`.
    pub closure_parts: Vec<SpectralField>,
    /// `Z⁰ … Z^n` at this state, needed to extend the history.
    pub integrands: Vec<SpectralField>,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub fields: Fields,
}

impl SimState {
    pub fn u(&self) -> &SpectralField {
        &self.fields[0]
    }
}

/// Why a run stopped early.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowUp {
    pub t: f64,
    pub step: u64,
    pub energy: f64,
    pub reason: String,
}

/// A configured system ready to step.
pub struct Simulation {
    config: RunConfig,
    grid: WavenumberGrid,
    evaluator: TermEvaluator,
    plans: Vec<EvaluationPlan>,
    memory: Option<MemoryState>,
    state: SimState,
    current: StageEval,
    initial_energy: f64,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let mut u = match config.initial {
            InitialCondition::TaylorGreen => taylor_green_field(&grid)?,
            InitialCondition::Random => random_field(&grid, RangeMask::F, 1.0, config.seed),
        };
        if config.model != ModelKind::GalerkinFull {
            reduced_state(&grid, &mut u);
        }
        Self::with_initial(config, u)
    }

    /// Starts from a given velocity field instead of the configured one.
    pub fn with_initial(config: RunConfig, u: SpectralField) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        u.check_grid(&grid)?;
        let plans = match config.model {
            ModelKind::Hierarchy(n) if n > 2 => (3..=n)
                .map(|j| compile_z(j, RangeMask::F))
                .collect::<Result<Vec<_>>>()?,
            _ => Vec::new(),
        };
        let memory = config
            .memory_config()?
            .map(|mc| MemoryState::new(&grid, mc))
            .transpose()?;
        let mut fields = vec![u];
        if let ModelKind::Hierarchy(n) = config.model {
            fields.extend((0..=n).map(|_| SpectralField::zeros(&grid)));
        }
        let evaluator = TermEvaluator::new(&grid);
        let mut sim = Simulation {
            config,
            grid,
            evaluator,
            plans,
            memory,
            state: SimState {
                t: 0.0,
                step: 0,
                fields,
            },
            current: StageEval {
                derivative: Vec::new(),
                closure_parts: Vec::new(),
                integrands: Vec::new(),
            },
            initial_energy: 0.0,
        };
        sim.current = sim.evaluate(0.0, &sim.state.fields.clone(), true)?;
        if let Some(mem) = sim.memory.as_mut() {
            mem.accept(0.0, &sim.current.integrands)?;
        }
        sim.initial_energy = sim.energy();
        Ok(sim)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn memory(&self) -> Option<&MemoryState> {
        self.memory.as_ref()
    }

    /// Right-hand side and diagnostics at the current accepted state.
    pub fn current(&self) -> &StageEval {
        &self.current
    }

    /// Support of the evolved velocity.
    pub fn support(&self) -> RangeMask {
        if self.config.model == ModelKind::GalerkinFull {
            RangeMask::FG
        } else {
            RangeMask::F
        }
    }

    /// `½ Σ |u_k|²` over the evolved modes.
    pub fn energy(&self) -> f64 {
        crate::diagnostics::energy_on(&self.grid, self.state.u(), self.support())
    }

    /// `Σ Re(conj(u_k) · du_k/dt)` at the current state.
    pub fn energy_rate(&self) -> f64 {
        crate::diagnostics::energy_rate_on(&self.grid, self.state.u(), &self.current.derivative[0], self.support())
    }

    pub fn initial_energy(&self) -> f64 {
        self.initial_energy
    }

    /// Zeroes everything a valid state cannot carry.
    fn clean(&self, f: &mut SpectralField) {
        if self.config.model == ModelKind::GalerkinFull {
            let h = hermitian_enforce(&self.grid, f);
            *f = h;
            if let Some(i0) = self.grid.index_of([0, 0, 0]) {
                f[i0] = crate::spectral::ZERO3;
            }
        } else {
            reduced_state(&self.grid, f);
        }
    }

    fn z_terms(&mut self, u: &SpectralField, order: usize) -> Result<(SpectralField, Vec<SpectralField>)> {
        let bounded = order.min(2);
        let terms = self.evaluator.model_terms(u, Some(bounded))?;
        let mut z = terms.z;
        for plan in self.plans.iter().take(order.saturating_sub(2)) {
            z.push(plan.execute(self.evaluator.convolver(), u)?.field);
        }
        Ok((terms.r_hat, z))
    }

    /// Base right-hand side (no closure) and the integrands `Z^j(u)`.
    fn raw_terms(&mut self, u: &SpectralField) -> Result<(SpectralField, Vec<SpectralField>)> {
        match self.config.model {
            ModelKind::GalerkinFull => Ok((self.evaluator.rhs_full(u)?.field, Vec::new())),
            ModelKind::GalerkinResolved => Ok((self.evaluator.model_terms(u, None)?.r_hat, Vec::new())),
            ModelKind::TModel => self.z_terms(u, 0),
            ModelKind::Order(n) | ModelKind::Hierarchy(n) => self.z_terms(u, n),
        }
    }

    /// `f(tau, y)`. `accepted` marks `y` as the newest accepted state, whose
    /// integrands already sit in the history.
    pub fn evaluate(&mut self, tau: f64, y: &Fields, accepted: bool) -> Result<StageEval> {
        let (base, z) = self.raw_terms(&y[0])?;
        self.assemble(tau, y, base, z, accepted)
    }

    fn assemble(
        &self,
        tau: f64,
        y: &Fields,
        base: SpectralField,
        z: Vec<SpectralField>,
        accepted: bool,
    ) -> Result<StageEval> {
        let mut du = base;
        let (mut derivative, closure_parts) = match self.config.model {
            ModelKind::GalerkinFull | ModelKind::GalerkinResolved => (Vec::new(), Vec::new()),
            ModelKind::TModel => {
                let closure = z[0].scaled(tau);
                du.add(&closure);
                (Vec::new(), vec![closure])
            }
            ModelKind::Order(_) => {
                let mem = self.memory.as_ref().expect("integral model has memory");
                let parts = mem.contributions_at(tau, if accepted { None } else { Some(&z) })?;
                for p in &parts {
                    du.add(p);
                }
                (Vec::new(), parts)
            }
            ModelKind::Hierarchy(n) => {
                du.add(&y[1]);
                let dw = (0..=n)
                    .map(|j| {
                        let mut d = z[j].clone();
                        if j < n {
                            d.add(&y[j + 2]);
                        }
                        d
                    })
                    .collect();
                (dw, vec![y[1].clone()])
            }
        };
        derivative.insert(0, du);
        for d in &mut derivative {
            self.clean(d);
        }
        Ok(StageEval {
            derivative,
            closure_parts,
            integrands: z,
        })
    }

    /// Advances one step. Returns a blow-up report instead of a new state
    /// when the energy runs away or a coefficient stops being finite.
    pub fn step(&mut self) -> Result<Option<BlowUp>> {
        let t = self.state.t;
        let dt = self.config.dt;
        let y = self.state.fields.clone();
        let k1 = self.current.derivative.clone();
        let mut next = match self.config.integrator {
            Integrator::ModifiedEuler => heun_step(t, dt, &y, &k1, |tau, s| Ok(self.evaluate(tau, s, false)?.derivative))?,
            Integrator::Rk4 => rk4_step(t, dt, &y, &k1, |tau, s| Ok(self.evaluate(tau, s, false)?.derivative))?,
        };
        for f in &mut next {
            self.clean(f);
        }
        if self.config.project_divergence {
            next[0] = project_divergence_free(&self.grid, &next[0]);
        }
        let step = self.state.step + 1;
        let t_next = step as f64 * dt;
        if let Some(report) = self.check_blow_up(&next[0], t_next, step) {
            return Ok(Some(report));
        }
        // The accepted state's integrands enter the history before its own
        // memory term is assembled.
        let (base, z) = self.raw_terms(&next[0])?;
        if let Some(mem) = self.memory.as_mut() {
            mem.accept(t_next, &z)?;
        }
        self.state = SimState {
            t: t_next,
            step,
            fields: next,
        };
        self.current = self.assemble(t_next, &self.state.fields, base, z, true)?;
        Ok(None)
    }

    /// Time-series record of the current accepted state.
    pub fn record(&self) -> TimeSeriesRecord {
        let rms = |j: usize| self.current.closure_parts.get(j).map(|f| rms_on_f(&self.grid, f));
        TimeSeriesRecord {
            t: self.state.t,
            e: self.energy(),
            dedt: self.energy_rate(),
            rms_z0: rms(0),
            rms_z1: rms(1),
            rms_z2: rms(2),
        }
    }

    /// Relative difference between the memory terms in use and a direct
    /// re-summation of the window at the current time.
    pub fn memory_check(&self) -> Result<Option<f64>> {
        let Some(mem) = self.memory.as_ref() else {
            return Ok(None);
        };
        if mem.config().mode != MemoryMode::Incremental {
            return Ok(None);
        }
        let t = self.state.t;
        let direct = direct_window_integral(mem.window(), t, mem.config().order, mem.config().quadrature)?;
        let mut worst: f64 = 0.0;
        for (part, d) in self.current.closure_parts.iter().zip(&direct) {
            worst = worst.max(part.rel_diff(&mem.layout().scatter(d)));
        }
        Ok(Some(worst))
    }

    /// Relative difference between the integrands in use and the word oracle.
    pub fn term_oracle_check(&self) -> Result<Option<f64>> {
        let mut worst: f64 = 0.0;
        for (j, z) in self.current.integrands.iter().enumerate() {
            let o = crate::compiler::poly_oracle_z(&self.grid, j, self.state.u())?.restricted(&self.grid, RangeMask::F);
            worst = worst.max(z.rel_diff(&o));
        }
        Ok((!self.current.integrands.is_empty()).then_some(worst))
    }

    fn check_blow_up(&self, u: &SpectralField, t: f64, step: u64) -> Option<BlowUp> {
        let energy = crate::diagnostics::energy_on(&self.grid, u, self.support());
        let reason = if !u.is_finite() || !energy.is_finite() {
            "non-finite coefficient".to_string()
        } else if self.initial_energy > 0.0 && energy > self.config.blowup_factor * self.initial_energy {
            format!(
                "energy {energy:e} exceeds {} x initial energy {:e}",
                self.config.blowup_factor, self.initial_energy
            )
        } else {
            return None;
        };
        Some(BlowUp {
            t,
            step,
            energy,
            reason,
        })
    }
}

/// Result of a complete run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub records: Vec<TimeSeriesRecord>,
    pub final_state: SimState,
    pub blow_up: Option<BlowUpInfo>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub wall_clock_seconds: f64,
    pub verification: Option<Verification>,
}

/// Largest `N` for which the word oracle is consulted in verify mode.
const VERIFY_ORACLE_MAX_N: usize = 4;

/// Runs the configured simulation to `t_end` or blow-up.
pub fn run_simulation(config: &RunConfig) -> Result<RunOutcome> {
    run_from(Simulation::new(config.clone())?, |_| {})
}

/// Steps `sim` to the configured end time, recording every
/// `record_interval` steps and at the final step.
pub fn run_from(mut sim: Simulation, mut observer: impl FnMut(&TimeSeriesRecord)) -> Result<RunOutcome> {
    let started = std::time::Instant::now();
    let steps = sim.config().steps();
    let interval = sim.config().record_interval;
    let verify = sim.config().verify;
    let mut verification = verify.then(Verification::default);
    if let Some(v) = verification.as_mut() {
        if sim.config().n <= VERIFY_ORACLE_MAX_N {
            v.term_oracle_rel_diff = sim.term_oracle_check()?;
        }
    }
    let mut records = Vec::new();
    let first = sim.record();
    observer(&first);
    records.push(first);
    let mut blow_up = None;
    while sim.state().step < steps {
        if let Some(b) = sim.step()? {
            blow_up = Some(BlowUpInfo {
                t: b.t,
                step: b.step,
                energy: b.energy,
                reason: b.reason,
            });
            break;
        }
        let step = sim.state().step;
        if step.is_multiple_of(interval) || step == steps {
            let r = sim.record();
            observer(&r);
            records.push(r);
            if let Some(v) = verification.as_mut() {
                if let Some(d) = sim.memory_check()? {
                    v.memory_rel_diff = Some(v.memory_rel_diff.map_or(d, |m| m.max(d)));
                }
            }
        }
    }
    Ok(RunOutcome {
        records,
        initial_energy: sim.initial_energy(),
        final_energy: sim.energy(),
        final_state: sim.state().clone(),
        blow_up,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        verification,
    })
}
