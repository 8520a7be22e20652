//! Root finding and ODE machinery for the method of characteristics.
//!
//! Classic models are solved in the logarithmic coordinate `λ = -ln x`, so a
//! critical point extremely close to one (as happens shortly after gelation
//! for heavy-tailed data) keeps full relative precision.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::measures::{ArmMeasure, MassMeasure};
use crate::models::{InitialData, Model};
use crate::quad::adaptive_simpson;
use crate::roots::{bisect, newton_bracketed, rel_width_below, width_below};

/// Numerical knobs shared by every solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub root_tol: f64,
    pub max_iter: usize,
    pub ode_dt: f64,
    pub ode_adaptive: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { root_tol: 1e-12, max_iter: 200, ode_dt: 1e-4, ode_adaptive: false }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.root_tol > 0.0 && self.root_tol.is_finite()) {
            return Err(Error::Config(format!("root_tol must be > 0, got {}", self.root_tol)));
        }
        if !(self.ode_dt > 0.0 && self.ode_dt.is_finite()) {
            return Err(Error::Config(format!("ode_dt must be > 0, got {}", self.ode_dt)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Solved quantities at one time. Fields that do not apply to a model are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionState {
    pub t: f64,
    /// `ℓ_t` (Smoluchowski variants) or `l_t` (Flory variants).
    pub ell: f64,
    /// `-ln ell`, kept separately for precision near one.
    pub ell_log: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Total sol mass `M_t`.
    pub mass: f64,
    /// Arm count `A_t`.
    pub arms: f64,
}

pub fn gel_time_classic(second_moment: f64) -> f64 {
    if second_moment.is_infinite() {
        0.0
    } else {
        1.0 / second_moment
    }
}

pub fn gel_time_arms(a0: f64, k: f64) -> f64 {
    if k.is_infinite() {
        0.0
    } else if k <= a0 {
        f64::INFINITY
    } else {
        1.0 / (k - a0)
    }
}

pub fn gel_time(model: Model, initial: &InitialData) -> Result<f64> {
    match (model.is_arms(), initial) {
        (false, InitialData::Mass(m)) => Ok(m.gel_time()),
        (true, InitialData::Arms(a)) => Ok(a.gel_time()),
        _ => Err(model_mismatch(model)),
    }
}

pub(crate) fn model_mismatch(model: Model) -> Error {
    if model.is_arms() {
        Error::Model(format!("{model} needs an arm measure c0(a, m)"))
    } else {
        Error::Model(format!("{model} needs a mass measure mu0"))
    }
}

/// `λ = -ln ℓ_t`; zero up to the gel time.
pub fn ell_smolu_log(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    if t == 0.0 || t <= measure.gel_time() {
        return Ok(0.0);
    }
    critical_log(t, measure, cfg)
}

/// `ℓ_t`: one before gelation, then the root of `x g₀'(x) = 1/t`.
pub fn ell_smolu(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    Ok((-ell_smolu_log(t, measure, cfg)?).exp())
}

/// The maximiser `m_t` of `φ_t`, defined only after gelation.
pub fn m_crit(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    if !(t > measure.gel_time()) {
        return domain(format!("m_crit needs t > T_gel = {}, got t = {t}", measure.gel_time()));
    }
    Ok((-critical_log(t, measure, cfg)?).exp())
}

/// Root in `λ` of `⟨μ₀, m² e^{-mλ}⟩ = 1/t`.
fn critical_log(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    let target = 1.0 / t;
    let f = |l: f64| measure.log_x_d1(l) - target;
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(Error::Solver("could not bracket the critical point".into()));
        }
    }
    bisect(f, 0.0, hi, rel_width_below(cfg.root_tol), cfg.max_iter)
}

/// `-ln l_t` for Flory's model.
pub fn l_flory_log(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    let m0 = measure.moments().mass;
    if m0.is_infinite() {
        return Err(Error::Model("Flory's equation makes sense only if <mu0, m> < +inf".into()));
    }
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    if t == 0.0 || t <= measure.gel_time() {
        return Ok(0.0);
    }
    let lm = critical_log(t, measure, cfg)?;
    // ln φ_t(e^{-λ}) decreases on [λ_m, ∞) from a positive value
    let f = |l: f64| t * (m0 - measure.log_value(l)) - l;
    let hi = t * m0 + 1.0;
    bisect(f, lm, hi, rel_width_below(cfg.root_tol), cfg.max_iter)
}

/// `l_t`: smallest fixed point of `x = e^{-t(M₀ - g₀(x))}`.
pub fn l_flory(t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<f64> {
    Ok((-l_flory_log(t, measure, cfg)?).exp())
}

/// `G(x) = x - k₀(x,1)/k₀'(x,1)`.
pub fn g_map(measure: &ArmMeasure, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!("G evaluated at x = {x} outside [0, 1]"));
    }
    let (k, dk, _) = measure.k0_line(x);
    if dk == 0.0 {
        return domain(format!("G undefined at x = {x}: k0'(x, 1) = 0"));
    }
    Ok(x - k / dk)
}

fn g_raw(measure: &ArmMeasure, x: f64) -> (f64, f64) {
    let (k, dk, ddk) = measure.k0_line(x);
    if dk == 0.0 {
        return if k > 0.0 { (f64::NEG_INFINITY, f64::INFINITY) } else { (0.0, 0.0) };
    }
    (x - k / dk, k * ddk / (dk * dk))
}

/// Right inverse of `G` on `[G(0), G(1))`.
pub fn h_map(measure: &ArmMeasure, u: f64, cfg: &SolverConfig) -> Result<f64> {
    if measure.is_affine_in_x() {
        return domain("H undefined: k0'' vanishes identically (no gelation)");
    }
    let g1 = g_raw(measure, 1.0).0;
    let g0 = g_raw(measure, 0.0).0;
    if !(u >= g0 && u < g1 - cfg.root_tol) {
        return domain(format!("H evaluated at u = {u} outside [G(0), G(1)) = [{g0}, {g1})"));
    }
    h_solve(measure, u, None, cfg)
}

fn h_solve(measure: &ArmMeasure, u: f64, guess: Option<f64>, cfg: &SolverConfig) -> Result<f64> {
    newton_bracketed(
        |x| {
            let (g, dg) = g_raw(measure, x);
            (g - u, dg)
        },
        0.0,
        1.0,
        guess,
        cfg.root_tol,
        cfg.max_iter,
    )
}

/// `H(u)` extended by one for `u ≥ G(1)`, which is where the pre-gel
/// branch continues.
fn h_clamped(measure: &ArmMeasure, u: f64, guess: Option<f64>, cfg: &SolverConfig) -> Result<f64> {
    if u >= g_raw(measure, 1.0).0 {
        Ok(1.0)
    } else {
        h_solve(measure, u, guess, cfg)
    }
}

/// The tangency point `c = H(0)` solving `k₀'(c) = k₀(c)/c`; one when there
/// is no gelation.
pub fn tangency_point(measure: &ArmMeasure, cfg: &SolverConfig) -> Result<f64> {
    if measure.gel_time().is_infinite() {
        return Ok(1.0);
    }
    h_solve(measure, 0.0, None, cfg)
}

/// `l_t` for the Flory-arms model: smallest root of
/// `(1 + tA₀) x - t k₀(x, 1) = 1`.
pub fn l_flory_arms(t: f64, measure: &ArmMeasure, cfg: &SolverConfig) -> Result<f64> {
    if !(t >= 0.0) {
        return domain(format!("time must be >= 0, got {t}"));
    }
    if t <= measure.gel_time() {
        return Ok(1.0);
    }
    let a = 1.0 + t * measure.a0();
    let xs = bisect(|x| a - t * measure.k0_line(x).1, 0.0, 1.0, width_below(cfg.root_tol), cfg.max_iter)?;
    bisect(|x| a * x - t * measure.k0_line(x).0 - 1.0, 0.0, xs, width_below(cfg.root_tol), cfg.max_iter)
}

/// State of a classic model at time `t`.
pub fn classic_state(model: Model, t: f64, measure: &MassMeasure, cfg: &SolverConfig) -> Result<SolutionState> {
    let ell_log = match model {
        Model::Smoluchowski => ell_smolu_log(t, measure, cfg)?,
        Model::Flory => l_flory_log(t, measure, cfg)?,
        _ => return Err(model_mismatch(model)),
    };
    let mass = if ell_log == 0.0 { measure.moments().mass } else { measure.log_value(ell_log) };
    let alpha = match model {
        Model::Smoluchowski => smolu_log_alpha(t, ell_log, measure).exp(),
        _ => f64::NAN,
    };
    Ok(SolutionState { t, ell: (-ell_log).exp(), ell_log, alpha, beta: f64::NAN, mass, arms: f64::NAN })
}

/// `ln α_t = ∫₀ᵗ M_s ds`, recovered from `φ_t(ℓ_t) = 1`.
fn smolu_log_alpha(t: f64, ell_log: f64, measure: &MassMeasure) -> f64 {
    if t == 0.0 {
        0.0
    } else if ell_log == 0.0 {
        t * measure.moments().mass
    } else {
        t * measure.log_value(ell_log) + ell_log
    }
}

/// State of the Flory-arms model at time `t`.
pub fn flory_arms_state(t: f64, measure: &ArmMeasure, cfg: &SolverConfig) -> Result<SolutionState> {
    let ell = l_flory_arms(t, measure, cfg)?;
    let alpha = 1.0 + t * measure.a0();
    Ok(SolutionState {
        t,
        ell,
        ell_log: -ell.ln(),
        alpha,
        beta: t / alpha,
        mass: f64::NAN,
        arms: measure.k0_line(ell).0 / alpha,
    })
}

/// Smoluchowski-arms states at each requested time (nondecreasing).
///
/// Before gelation `α_t = 1 + A₀t`, `β_t = t/(1 + A₀t)`. Afterwards
/// `α' = k₀(H(1/α), 1)` and `β' = 1/α²` are integrated from the gel time by
/// RK4 at step `ode_dt`, or by step-doubling RK4 when `ode_adaptive` is set.
pub fn alpha_beta_at(measure: &ArmMeasure, times: &[f64], cfg: &SolverConfig) -> Result<Vec<SolutionState>> {
    cfg.validate()?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Usage("times must be nonnegative and nondecreasing".into()));
    }
    let a0 = measure.a0();
    let tg = measure.gel_time();
    let mut out = Vec::with_capacity(times.len());
    let mut ode = AlphaOde::new(measure, cfg);
    let mut cur_t = tg;
    let mut y = if tg.is_finite() { [1.0 + a0 * tg, tg / (1.0 + a0 * tg)] } else { [1.0, 0.0] };
    for &t in times {
        if t <= tg {
            let alpha = 1.0 + a0 * t;
            out.push(SolutionState {
                t,
                ell: 1.0,
                ell_log: 0.0,
                alpha,
                beta: t / alpha,
                mass: f64::NAN,
                arms: a0 / alpha,
            });
            continue;
        }
        y = ode.advance(y, cur_t, t)?;
        cur_t = t;
        let ell = ode.ell(y[0])?;
        out.push(SolutionState {
            t,
            ell,
            ell_log: -ell.ln(),
            alpha: y[0],
            beta: y[1],
            mass: f64::NAN,
            arms: measure.k0_line(ell).0 / y[0],
        });
    }
    Ok(out)
}

/// Smoluchowski-arms states at every integration step on `[0, t_end]`.
pub fn alpha_beta_trajectory(measure: &ArmMeasure, t_end: f64, cfg: &SolverConfig) -> Result<Vec<SolutionState>> {
    if !(t_end >= 0.0) {
        return domain(format!("t_end must be >= 0, got {t_end}"));
    }
    let n = (t_end / cfg.ode_dt).ceil().max(1.0) as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| t_end * i as f64 / n as f64).collect();
    let tg = measure.gel_time();
    if tg > 0.0 && tg < t_end {
        let pos = times.partition_point(|&s| s < tg);
        if times[pos] != tg {
            times.insert(pos, tg);
        }
    }
    alpha_beta_at(measure, &times, cfg)
}

struct AlphaOde<'a> {
    measure: &'a ArmMeasure,
    cfg: &'a SolverConfig,
    guess: std::cell::Cell<Option<f64>>,
}

impl<'a> AlphaOde<'a> {
    fn new(measure: &'a ArmMeasure, cfg: &'a SolverConfig) -> Self {
        AlphaOde { measure, cfg, guess: std::cell::Cell::new(None) }
    }

    fn ell(&self, alpha: f64) -> Result<f64> {
        let x = h_clamped(self.measure, 1.0 / alpha, self.guess.get(), self.cfg)?;
        if x < 1.0 {
            self.guess.set(Some(x));
        }
        Ok(x)
    }

    fn rhs(&self, y: [f64; 2]) -> Result<[f64; 2]> {
        let ell = self.ell(y[0])?;
        Ok([self.measure.k0_line(ell).0, 1.0 / (y[0] * y[0])])
    }

    fn rk4(&self, y: [f64; 2], h: f64) -> Result<[f64; 2]> {
        let k1 = self.rhs(y)?;
        let k2 = self.rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]])?;
        let k3 = self.rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]])?;
        let k4 = self.rhs([y[0] + h * k3[0], y[1] + h * k3[1]])?;
        Ok([
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ])
    }

    fn advance(&mut self, mut y: [f64; 2], from: f64, to: f64) -> Result<[f64; 2]> {
        let span = to - from;
        if span <= 0.0 {
            return Ok(y);
        }
        if !self.cfg.ode_adaptive {
            let n = (span / self.cfg.ode_dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                y = self.rk4(y, h)?;
            }
            return Ok(y);
        }
        // step doubling with local error ≤ tol·h
        let tol = 10.0 * self.cfg.root_tol;
        let mut t = from;
        let mut h = self.cfg.ode_dt.min(span);
        while t < to {
            h = h.min(to - t);
            if h < 1e-14 * to.max(1.0) {
                return Err(Error::Solver(format!("ODE step size underflow at t = {t}")));
            }
            let full = self.rk4(y, h)?;
            let half = self.rk4(self.rk4(y, 0.5 * h)?, 0.5 * h)?;
            let err = (full[0] - half[0]).abs().max((full[1] - half[1]).abs()) / 15.0;
            if err <= tol * h {
                t += h;
                y = [half[0] + (half[0] - full[0]) / 15.0, half[1] + (half[1] - full[1]) / 15.0];
                let grow = if err == 0.0 { 2.0 } else { (0.9 * (tol * h / err).powf(0.2)).min(2.0) };
                h *= grow;
            } else {
                h *= (0.9 * (tol * h / err).powf(0.2)).max(0.2);
            }
        }
        Ok(y)
    }
}

/// `β_∞ - β_t` given `α_t`: `∫₀^{1/α_t} du / k₀(H(u), 1)`.
pub fn beta_tail(measure: &ArmMeasure, alpha_t: f64, cfg: &SolverConfig) -> Result<f64> {
    if measure.gel_time().is_infinite() {
        // α_t = 1 + A₀t for all t, so the tail is ∫ dt/α² in closed form
        return Ok(1.0 / (measure.a0() * alpha_t));
    }
    let u_end = 1.0 / alpha_t;
    let g1 = g_raw(measure, 1.0).0;
    let mut err = None;
    let mut f = |u: f64| match h_clamped(measure, u, None, cfg) {
        Ok(x) => 1.0 / measure.k0_line(x).0,
        Err(e) => {
            err.get_or_insert(e);
            f64::NAN
        }
    };
    let split = u_end.min(g1);
    let mut v = adaptive_simpson(&mut f, 0.0, split, 1e-14);
    if u_end > g1 {
        // pre-gel part, where H ≡ 1
        v += (u_end - g1) / measure.a0();
    }
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `α_t` from the implicit relation `α_t = Γ⁻¹(α_gel + t - T_gel)` with
/// `Γ(α) = α_gel + ∫_{α_gel}^α dr / k₀(H(1/r), 1)`; a cross-check of the
/// ODE route.
pub fn alpha_via_gamma(measure: &ArmMeasure, t: f64, cfg: &SolverConfig) -> Result<f64> {
    let a0 = measure.a0();
    let tg = measure.gel_time();
    if t <= tg {
        return Ok(1.0 + a0 * t);
    }
    let ag = 1.0 + a0 * tg;
    let c = tangency_point(measure, cfg)?;
    let lam_min = measure.k0_line(c).0;
    let gamma_minus = |alpha: f64| -> f64 {
        // r = 1/u
        adaptive_simpson(
            |u: f64| {
                let x = h_clamped(measure, u, None, cfg).unwrap_or(f64::NAN);
                1.0 / (u * u * measure.k0_line(x).0)
            },
            1.0 / alpha,
            1.0 / ag,
            1e-13,
        )
    };
    let span = t - tg;
    bisect(
        |alpha| gamma_minus(alpha) - span,
        ag + span * lam_min.min(a0) * 0.999,
        ag + span * a0 * 1.001,
        rel_width_below(cfg.root_tol),
        cfg.max_iter,
    )
}

/// The characteristic map `φ_t(x, y)` given the solved state at `t`.
pub fn phi(model: Model, initial: &InitialData, state: &SolutionState, x: f64, y: f64) -> Result<f64> {
    check_unit(x, y)?;
    let t = state.t;
    match (model, initial) {
        (Model::Smoluchowski, InitialData::Mass(m)) => {
            if t == 0.0 {
                return Ok(x);
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            let l = -x.ln();
            Ok((smolu_log_alpha(t, state.ell_log, m) - l - t * m.log_value(l)).exp())
        }
        (Model::Flory, InitialData::Mass(m)) => {
            if t == 0.0 {
                return Ok(x);
            }
            if x == 0.0 {
                return Ok(0.0);
            }
            let l = -x.ln();
            Ok((t * (m.moments().mass - m.log_value(l)) - l).exp())
        }
        (Model::SmoluchowskiArms, InitialData::Arms(a)) => Ok(state.alpha * (x - state.beta * a.k0_xy(x, y).0)),
        (Model::FloryArms, InitialData::Arms(a)) => Ok((1.0 + t * a.a0()) * x - t * a.k0_xy(x, y).0),
        _ => Err(model_mismatch(model)),
    }
}

/// `∂ₓφ_t(x, y)`.
pub fn phi_dx(model: Model, initial: &InitialData, state: &SolutionState, x: f64, y: f64) -> Result<f64> {
    check_unit(x, y)?;
    let t = state.t;
    match (model, initial) {
        (Model::Smoluchowski | Model::Flory, InitialData::Mass(m)) => {
            if t == 0.0 {
                return Ok(1.0);
            }
            if x == 0.0 {
                return Ok(match model {
                    Model::Smoluchowski => smolu_log_alpha(t, state.ell_log, m).exp(),
                    _ => (t * m.moments().mass).exp(),
                });
            }
            let l = -x.ln();
            let p = phi(model, initial, state, x, y)?;
            Ok(p / x * (1.0 - t * m.log_x_d1(l)))
        }
        (Model::SmoluchowskiArms, InitialData::Arms(a)) => Ok(state.alpha * (1.0 - state.beta * a.k0_xy(x, y).1)),
        (Model::FloryArms, InitialData::Arms(a)) => Ok((1.0 + t * a.a0()) - t * a.k0_xy(x, y).1),
        _ => Err(model_mismatch(model)),
    }
}

fn check_unit(x: f64, y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return domain(format!("({x}, {y}) outside the unit square"));
    }
    Ok(())
}

/// Right inverse `h_t(x, y)` of `φ_t(·, y)` on its increasing branch.
pub fn h_inverse(
    model: Model,
    initial: &InitialData,
    state: &SolutionState,
    x: f64,
    y: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    check_unit(x, y)?;
    let t = state.t;
    if t == 0.0 {
        return Ok(x);
    }
    if x == 1.0 && y == 1.0 {
        return Ok(state.ell);
    }
    match (model, initial) {
        (Model::Smoluchowski | Model::Flory, InitialData::Mass(m)) => {
            if x == 0.0 {
                return Ok(0.0);
            }
            if x == 1.0 {
                return Ok(state.ell);
            }
            let target = x.ln();
            let m0 = m.moments().mass;
            let la = smolu_log_alpha(t, state.ell_log, m);
            // ln φ_t(e^{-λ}) is decreasing in λ on [λ_ℓ, ∞)
            let log_phi = |l: f64| match model {
                Model::Smoluchowski => la - l - t * m.log_value(l),
                _ => t * (m0 - m.log_value(l)) - l,
            };
            let lo = state.ell_log;
            // the slope -1 + t·x g0' tends to -1 as λ grows
            let mut hi = lo + (log_phi(lo) - target).max(0.0) + 1.0;
            let mut grow = 0;
            while log_phi(hi) - target > 0.0 {
                hi = lo + 2.0 * (hi - lo);
                grow += 1;
                if grow > 200 {
                    return Err(crate::Error::Solver(format!("no bracket for h_t({x})")));
                }
            }
            let tol = 0.1 * cfg.root_tol;
            let l = bisect(|l| log_phi(l) - target, lo, hi, |a, b| b - a <= tol, cfg.max_iter.max(400))?;
            Ok((-l).exp())
        }
        (Model::SmoluchowskiArms | Model::FloryArms, InitialData::Arms(a)) => {
            let (scale, slope) = match model {
                Model::SmoluchowskiArms => (state.alpha, state.alpha * state.beta),
                _ => (1.0 + t * a.a0(), t),
            };
            // φ(·, y) = scale·x − slope·k₀(·, y) is concave: invert on [0, x*]
            let dphi = |z: f64| scale - slope * a.k0_xy(z, y).1;
            let xs = if dphi(1.0) >= 0.0 {
                1.0
            } else {
                bisect(dphi, 0.0, 1.0, width_below(0.1 * cfg.root_tol), cfg.max_iter)?
            };
            let f = |z: f64| scale * z - slope * a.k0_xy(z, y).0 - x;
            if f(xs) < -cfg.root_tol {
                return domain(format!("x = {x} exceeds the range of phi_t(., {y})"));
            }
            if f(xs) <= 0.0 {
                return Ok(xs);
            }
            // |φ'| ≤ scale, so a bracket of width tol/scale meets the residual bound
            let tol = 0.1 * cfg.root_tol / scale.max(1.0);
            bisect(f, 0.0, xs, |lo, hi| hi - lo <= tol, cfg.max_iter.max(400))
        }
        _ => Err(model_mismatch(model)),
    }
}
