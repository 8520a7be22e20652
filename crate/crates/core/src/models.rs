//! Per-model frontends: mass, arm count, generating functions, second
//! moments, the gel-point derivative and long-time asymptotics.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{
    alpha_beta_at, classic_state, flory_arms_state, h_inverse, model_mismatch, phi_dx, SolutionState, SolverConfig,
};
use crate::error::{domain, Error, Result};
use crate::measures::{ArmMeasure, GeneratingFunction, MassMeasure};
use crate::quad::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Smoluchowski,
    Flory,
    SmoluchowskiArms,
    FloryArms,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Smoluchowski, Model::Flory, Model::SmoluchowskiArms, Model::FloryArms];

    pub fn is_arms(self) -> bool {
        matches!(self, Model::SmoluchowskiArms | Model::FloryArms)
    }

    pub fn is_flory(self) -> bool {
        matches!(self, Model::Flory | Model::FloryArms)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Smoluchowski => "smoluchowski",
            Model::Flory => "flory",
            Model::SmoluchowskiArms => "smoluchowski-arms",
            Model::FloryArms => "flory-arms",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

/// Initial condition for any of the four models.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Mass(MassMeasure),
    Arms(ArmMeasure),
}

/// A model bound to admissible initial data.
#[derive(Debug, Clone)]
pub struct Solver {
    model: Model,
    initial: InitialData,
    cfg: SolverConfig,
}

impl Solver {
    /// Rejects incompatible model/measure pairs: Flory needs finite mass,
    /// arms models need an arm measure.
    pub fn new(model: Model, initial: InitialData, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        match (&initial, model.is_arms()) {
            (InitialData::Mass(m), false) => {
                m.validate()?;
                if model == Model::Flory && m.moments().mass.is_infinite() {
                    return Err(Error::Model("Flory's equation makes sense only if <mu0, m> < +inf".into()));
                }
            }
            (InitialData::Arms(_), true) => {}
            _ => return Err(model_mismatch(model)),
        }
        Ok(Solver { model, initial, cfg })
    }

    pub fn classic(model: Model, measure: MassMeasure) -> Result<Self> {
        Solver::new(model, InitialData::Mass(measure), SolverConfig::default())
    }

    pub fn arms(model: Model, measure: ArmMeasure) -> Result<Self> {
        Solver::new(model, InitialData::Arms(measure), SolverConfig::default())
    }

    pub fn with_config(mut self, cfg: SolverConfig) -> Self {
        self.cfg = cfg;
        self
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn initial(&self) -> &InitialData {
        &self.initial
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn gel_time(&self) -> f64 {
        match &self.initial {
            InitialData::Mass(m) => m.gel_time(),
            InitialData::Arms(a) => a.gel_time(),
        }
    }

    pub fn mass_measure(&self) -> Option<&MassMeasure> {
        match &self.initial {
            InitialData::Mass(m) => Some(m),
            InitialData::Arms(_) => None,
        }
    }

    pub fn arm_measure(&self) -> Option<&ArmMeasure> {
        match &self.initial {
            InitialData::Arms(a) => Some(a),
            InitialData::Mass(_) => None,
        }
    }

    /// Solved state at `t`. For Smoluchowski-arms this integrates the α ODE
    /// from the gel time.
    pub fn state(&self, t: f64) -> Result<SolutionState> {
        Ok(self.states(&[t])?.remove(0))
    }

    /// States on a nondecreasing time grid, in grid order.
    pub fn states(&self, times: &[f64]) -> Result<Vec<SolutionState>> {
        if times.iter().any(|t| !(*t >= 0.0) || t.is_infinite()) {
            return domain("times must be finite and >= 0");
        }
        match (&self.initial, self.model) {
            (InitialData::Arms(a), Model::SmoluchowskiArms) => {
                let mut sorted: Vec<(usize, f64)> = times.iter().copied().enumerate().collect();
                sorted.sort_by(|x, y| x.1.total_cmp(&y.1));
                let ts: Vec<f64> = sorted.iter().map(|p| p.1).collect();
                let solved = alpha_beta_at(a, &ts, &self.cfg)?;
                let mut out = vec![solved[0]; times.len()];
                for ((i, _), s) in sorted.into_iter().zip(solved) {
                    out[i] = s;
                }
                Ok(out)
            }
            (InitialData::Arms(a), Model::FloryArms) => {
                times.par_iter().map(|&t| flory_arms_state(t, a, &self.cfg)).collect()
            }
            (InitialData::Mass(m), model) => times.par_iter().map(|&t| classic_state(model, t, m, &self.cfg)).collect(),
            _ => Err(model_mismatch(self.model)),
        }
    }

    /// Total sol mass `M_t` (classic models).
    pub fn mass(&self, t: f64) -> Result<f64> {
        if self.model.is_arms() {
            return domain(format!("mass has no closed form for {}", self.model));
        }
        Ok(self.state(t)?.mass)
    }

    /// Arm count `A_t` (arms models).
    pub fn arms_count(&self, t: f64) -> Result<f64> {
        if !self.model.is_arms() {
            return domain(format!("arms_count is not defined for {}", self.model));
        }
        Ok(self.state(t)?.arms)
    }

    /// `g_t(x)` or `k_t(x, y)`.
    pub fn gen_fun(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let state = self.state(t)?;
        self.gen_fun_at(&state, x, y)
    }

    /// Generating function at a state solved beforehand.
    pub fn gen_fun_at(&self, state: &SolutionState, x: f64, y: f64) -> Result<f64> {
        let h = h_inverse(self.model, &self.initial, state, x, y, &self.cfg)?;
        match &self.initial {
            InitialData::Mass(m) => {
                if x == 1.0 {
                    Ok(state.mass)
                } else {
                    m.g0(h, 0)
                }
            }
            InitialData::Arms(a) => Ok(a.k0_xy(h, y).0 / self.arms_scale(state)),
        }
    }

    fn arms_scale(&self, state: &SolutionState) -> f64 {
        state.alpha
    }

    /// `⟨μ_t, m²⟩ = g_t'(1)` for classic models, `⟨c_t, a²⟩` for arms models.
    /// Infinite at the gel time for all four models.
    pub fn second_moment(&self, t: f64) -> Result<f64> {
        let state = self.state(t)?;
        self.second_moment_at(&state)
    }

    pub fn second_moment_at(&self, state: &SolutionState) -> Result<f64> {
        let t = state.t;
        let tg = self.gel_time();
        if t == tg {
            return Ok(f64::INFINITY);
        }
        match (&self.initial, self.model) {
            (InitialData::Mass(m), model) => {
                let k = m.moments().second;
                if t < tg {
                    return Ok(k / (1.0 - t * k));
                }
                if model == Model::Smoluchowski {
                    return Ok(f64::INFINITY);
                }
                let xg1 = m.log_x_d1(state.ell_log);
                Ok(xg1 / (1.0 - t * xg1))
            }
            (InitialData::Arms(a), model) => {
                let (k, dk, _) = a.k0_line(state.ell);
                let scale = self.arms_scale(state);
                if model == Model::SmoluchowskiArms && t > tg {
                    return Ok(f64::INFINITY);
                }
                let dphi = phi_dx(model, &self.initial, state, state.ell, 1.0)?;
                if dphi <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                Ok(dk / (scale * dphi) + k / scale)
            }
        }
    }

    /// Long-time behavior of `M_t` (classic models).
    pub fn asymptotics_report(&self) -> Result<AsymptoticsReport> {
        let m =
            self.mass_measure().ok_or_else(|| Error::Domain("asymptotics are reported for classic models".into()))?;
        let m0 = m.moments().min_support;
        let tg = self.gel_time();
        let start = if tg > 0.0 { 10.0 * tg } else { 10.0 };
        match self.model {
            Model::Smoluchowski => {
                let times: Vec<f64> = (0..5).map(|k| start * 10f64.powi(k)).collect();
                let states = self.states(&times)?;
                let observed: Vec<(f64, f64)> = states.iter().map(|s| (s.t, 1.0 / (s.t * s.mass))).collect();
                let converging = trend_toward(&observed, m0);
                Ok(AsymptoticsReport {
                    m0,
                    constant: Some(m0),
                    rate: format!("1/(t M_t) -> m0 = {m0}"),
                    observed,
                    converging,
                })
            }
            Model::Flory if m0 > 0.0 => {
                let c = m0 * m.min_atom_weight();
                let times: Vec<f64> = (1..=5).map(|k| start * k as f64).collect();
                let states = self.states(&times)?;
                let observed: Vec<(f64, f64)> = states.iter().map(|s| (s.t, (s.mass.ln() + m0 * s.t).exp())).collect();
                let converging = trend_toward(&observed, c);
                Ok(AsymptoticsReport {
                    m0,
                    constant: Some(c),
                    rate: format!("M_t exp(m0 t) -> m0 mu0({{m0}}) = {c}"),
                    observed,
                    converging,
                })
            }
            Model::Flory => {
                // only a one-sided bound is available: M_t e^{εt} → ∞ for ε > 0;
                // the observed log-log slope of the decay is reported alongside
                let times: Vec<f64> = (0..5).map(|k| start * 10f64.powi(k)).collect();
                let states = self.states(&times)?;
                let observed: Vec<(f64, f64)> = states.iter().map(|s| (s.t, s.mass)).collect();
                let n = observed.len();
                let (t1, m1) = observed[n - 2];
                let (t2, m2) = observed[n - 1];
                let slope = (m2.ln() - m1.ln()) / (t2.ln() - t1.ln());
                Ok(AsymptoticsReport {
                    m0,
                    constant: None,
                    rate: format!("M_t exp(eps t) -> +inf for every eps > 0; observed M_t ~ t^{:.3}", slope),
                    observed,
                    converging: slope.is_finite(),
                })
            }
            _ => unreachable!("arms models rejected above"),
        }
    }

    /// `∫_δ^upper M_s² ds` on a logarithmic time grid.
    pub fn mass_square_integral(&self, delta: f64, upper: f64) -> Result<f64> {
        let m = self.mass_measure().ok_or_else(|| Error::Domain("mass is defined for classic models".into()))?.clone();
        if !(delta > 0.0 && delta < upper) {
            return domain(format!("need 0 < delta < upper, got ({delta}, {upper})"));
        }
        let (a, b) = (delta.ln(), upper.ln());
        let panels = (2.0 * (b - a)).ceil() as usize;
        let mut err = None;
        let v = gauss_legendre(
            |u| {
                let s = u.exp();
                match classic_state(self.model, s, &m, &self.cfg) {
                    Ok(st) => st.mass * st.mass * s,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                }
            },
            a,
            b,
            panels,
        );
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Integrals `∫_{10^{-k}}^{0.1} M_s² ds` for `k = 2..=k_max` together with
    /// successive refinement differences.
    pub fn infinite_mass_check(&self, k_max: u32) -> Result<InfiniteMassCheck> {
        let deltas: Vec<f64> = (2..=k_max as i32).map(|k| 10f64.powi(-k)).collect();
        let integrals: Vec<f64> =
            deltas.par_iter().map(|&d| self.mass_square_integral(d, 0.1)).collect::<Result<_>>()?;
        let differences = integrals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        Ok(InfiniteMassCheck { deltas, integrals, differences })
    }
}

fn trend_toward(observed: &[(f64, f64)], target: f64) -> bool {
    let first = (observed[0].1 - target).abs();
    let last = (observed[observed.len() - 1].1 - target).abs();
    last <= first
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub m0: f64,
    /// Proven limit constant, when one exists.
    pub constant: Option<f64>,
    pub rate: String,
    /// `(t, quantity)` samples on a geometric grid.
    pub observed: Vec<(f64, f64)>,
    /// Whether the samples move toward the constant.
    pub converging: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfiniteMassCheck {
    pub deltas: Vec<f64>,
    pub integrals: Vec<f64>,
    pub differences: Vec<f64>,
}

/// Outcome of the gel-point derivative limit detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GelDerivative {
    Limit(f64),
    Diverged(f64),
    Undefined,
}

impl GelDerivative {
    pub fn value(self) -> f64 {
        match self {
            GelDerivative::Limit(v) | GelDerivative::Diverged(v) => v,
            GelDerivative::Undefined => f64::NAN,
        }
    }
}

/// Right derivative of `M` at the gel time,
/// `-lim_{x→1⁻} g₀'³ / (g₀' + x g₀'')`, sampled at `x_k = 1 - 2^{-k}`,
/// `k = 10..=40`.
///
/// Three successive samples within `1e-5` (relative, or absolute below one)
/// count as a limit. Samples beyond `1e12` in magnitude, or whose magnitudes
/// grow with nondecreasing increments over the last ten samples, count as a
/// divergence.
pub fn mass_right_derivative_at_gel<G: GeneratingFunction>(g: &G) -> GelDerivative {
    let samples: Vec<f64> = (10..=40)
        .map(|k| {
            let x = 1.0 - 2f64.powi(-k);
            let d1 = g.d1(x);
            let d2 = g.d2(x);
            -(d1 * d1 * d1) / (d1 + x * d2)
        })
        .collect();
    if let Some(&v) = samples.iter().find(|v| v.abs() > 1e12 || v.is_infinite()) {
        return GelDerivative::Diverged(v.signum() * f64::INFINITY);
    }
    if samples.iter().any(|v| v.is_nan()) {
        return GelDerivative::Undefined;
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1.0);
    let n = samples.len();
    let tail = &samples[n - 3..];
    if close(tail[0], tail[1]) && close(tail[1], tail[2]) {
        return GelDerivative::Limit(tail[2]);
    }
    let window = &samples[n - 10..];
    let mags: Vec<f64> = window.iter().map(|v| v.abs()).collect();
    let incs: Vec<f64> = mags.windows(2).map(|w| w[1] - w[0]).collect();
    let same_sign = window.iter().all(|v| v.signum() == window[0].signum());
    if same_sign && incs.iter().all(|&d| d > 0.0) && incs.windows(2).all(|w| w[1] >= w[0]) {
        return GelDerivative::Diverged(window[0].signum() * f64::INFINITY);
    }
    GelDerivative::Undefined
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::G0Family;
    use approx::assert_relative_eq;

    fn mono(model: Model) -> Solver {
        Solver::classic(model, MassMeasure::Monodisperse).unwrap()
    }

    fn example_arms(model: Model) -> Solver {
        Solver::arms(model, ArmMeasure::monodisperse(&[0.5, 0.25, 0.0, 0.25]).unwrap())
            .unwrap()
            .with_config(SolverConfig { ode_dt: 1e-3, ..SolverConfig::default() })
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("coagulation".parse::<Model>().is_err());
    }

    #[test]
    fn incompatible_pairs_are_rejected() {
        assert!(Solver::classic(Model::Flory, MassMeasure::power_law(1.5).unwrap()).is_err());
        assert!(Solver::classic(Model::FloryArms, MassMeasure::Monodisperse).is_err());
        assert!(Solver::new(
            Model::Smoluchowski,
            InitialData::Arms(ArmMeasure::monodisperse(&[0.0, 1.0]).unwrap()),
            SolverConfig::default()
        )
        .is_err());
    }

    #[test]
    fn mass_examples() {
        assert_relative_eq!(mono(Model::Smoluchowski).mass(2.0).unwrap(), 0.5, epsilon = 1e-12);
        let e = Solver::classic(Model::Smoluchowski, MassMeasure::Exponential).unwrap();
        assert_relative_eq!(e.mass(4.0).unwrap(), 0.25, epsilon = 1e-12);
        assert!((mono(Model::Flory).mass(2.0).unwrap() - 0.203188).abs() < 1e-6);
        assert!(example_arms(Model::FloryArms).mass(1.0).is_err());
    }

    #[test]
    fn arms_count_examples() {
        for model in [Model::SmoluchowskiArms, Model::FloryArms] {
            let s = example_arms(model);
            for t in [0.0, 0.5, 1.9] {
                assert_relative_eq!(s.arms_count(t).unwrap(), 1.0 / (1.0 + t), epsilon = 1e-12);
            }
        }
        assert_relative_eq!(example_arms(Model::FloryArms).arms_count(4.0).unwrap(), 7.0 / 60.0, epsilon = 1e-12);
        assert!(mono(Model::Smoluchowski).arms_count(1.0).is_err());
    }

    #[test]
    fn gen_fun_examples() {
        let s = mono(Model::Smoluchowski);
        assert_relative_eq!(s.gen_fun(0.0, 0.3, 1.0).unwrap(), 0.3);
        assert_relative_eq!(s.gen_fun(2.0, 1.0, 1.0).unwrap(), 0.5, epsilon = 1e-12);
        let a = example_arms(Model::SmoluchowskiArms);
        assert_relative_eq!(a.gen_fun(0.0, 0.4, 0.7).unwrap(), {
            let m = ArmMeasure::monodisperse(&[0.5, 0.25, 0.0, 0.25]).unwrap();
            m.k0(0.4, 0.7, false).unwrap()
        });
        for t in [1.0, 3.0] {
            assert_relative_eq!(a.gen_fun(t, 1.0, 1.0).unwrap(), a.arms_count(t).unwrap(), epsilon = 1e-10);
        }
    }

    #[test]
    fn second_moment_examples() {
        let s = mono(Model::Smoluchowski);
        assert_relative_eq!(s.second_moment(0.5).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(s.second_moment(1.5).unwrap(), f64::INFINITY);
        assert_eq!(s.second_moment(1.0).unwrap(), f64::INFINITY);
        let f = mono(Model::Flory);
        // l/(1 - 2l) with l the fixed point is 0.3422836...
        assert!((f.second_moment(2.0).unwrap() - 0.342286).abs() < 5e-6);
        assert_eq!(f.second_moment(1.0).unwrap(), f64::INFINITY);
        let a = example_arms(Model::FloryArms);
        assert_relative_eq!(a.second_moment(0.0).unwrap(), 2.5, epsilon = 1e-12);
        assert_eq!(a.second_moment(2.0).unwrap(), f64::INFINITY);
        assert!(a.second_moment(4.0).unwrap().is_finite());
    }

    #[test]
    fn gel_derivative_families() {
        match mass_right_derivative_at_gel(&G0Family::LogCritical) {
            GelDerivative::Limit(v) => assert!(v.abs() < 1e-4),
            other => panic!("{other:?}"),
        }
        assert_eq!(mass_right_derivative_at_gel(&G0Family::SqrtLog), GelDerivative::Diverged(f64::NEG_INFINITY));
        match mass_right_derivative_at_gel(&G0Family::PowerRoot { alpha: 0.5 }) {
            GelDerivative::Limit(v) => assert!((v + 0.5).abs() < 1e-4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymptotics_examples() {
        let r = mono(Model::Smoluchowski).asymptotics_report().unwrap();
        assert_eq!(r.constant, Some(1.0));
        assert!(r.observed.iter().all(|&(_, v)| (v - 1.0).abs() < 1e-9));
        let r = mono(Model::Flory).asymptotics_report().unwrap();
        assert_eq!(r.constant, Some(1.0));
        assert!((r.observed.last().unwrap().1 - 1.0).abs() < 1e-6);
        let e = Solver::classic(Model::Flory, MassMeasure::Exponential).unwrap();
        let r = e.asymptotics_report().unwrap();
        assert_eq!(r.constant, None);
        assert!(r.rate.contains("t^-2.0"), "{}", r.rate);
    }
}
