//! Direct RK4 integration of the truncated kinetic equations.
//!
//! Nothing here uses generating functions: this is the brute-force reference
//! the analytic solvers are validated against.
//!
//! Two truncations are available. `NoBigCoagulation` drops every
//! interaction whose product would leave the lattice, so sol mass is
//! conserved exactly. `GelInteracting` moves such products into a gel
//! reservoir; for the Flory variants the gel then coagulates with the sol
//! (mass-weighted for the classic model, arm-weighted for the arms model),
//! while for the Smoluchowski variants it is inert.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{ArmMeasure, MassMeasure};
use crate::models::Model;

/// Truncation scheme of the kinetic system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flavor {
    NoBigCoagulation,
    GelInteracting,
}

impl Flavor {
    /// The truncation that approximates `model`.
    pub fn default_for(model: Model) -> Self {
        if model.is_flory() {
            Flavor::GelInteracting
        } else {
            Flavor::NoBigCoagulation
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::NoBigCoagulation => "no-big-coagulation",
            Flavor::GelInteracting => "gel-interacting",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "no-big-coagulation" => Ok(Flavor::NoBigCoagulation),
            "gel-interacting" => Ok(Flavor::GelInteracting),
            _ => Err(Error::Config(format!("unknown oracle flavor '{s}'"))),
        }
    }
}

/// Truncated concentrations plus the gel reservoir.
///
/// Classic lattices store `c[m]` for `m = 0..=m_max` (index zero unused);
/// arms lattices store `c[a * (m_max + 1) + m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    pub t: f64,
    pub c: Vec<f64>,
    pub gel_mass: f64,
    pub gel_arms: f64,
    /// `None` for the classic lattice.
    pub a_max: Option<usize>,
    pub m_max: usize,
}

impl OracleState {
    pub fn classic(measure: &MassMeasure, m_max: usize) -> Result<Self> {
        if m_max < 2 {
            return Err(Error::Usage("oracle needs M_max >= 2".into()));
        }
        let w = measure
            .lattice_weights()
            .ok_or_else(|| Error::Domain("oracle needs masses on the integer lattice".into()))?;
        if w.len() > m_max + 1 {
            return Err(Error::Usage(format!("initial masses up to {} exceed M_max = {m_max}", w.len() - 1)));
        }
        let mut c = vec![0.0; m_max + 1];
        c[..w.len()].copy_from_slice(&w);
        Ok(OracleState { t: 0.0, c, gel_mass: 0.0, gel_arms: 0.0, a_max: None, m_max })
    }

    pub fn arms(measure: &ArmMeasure, a_max: usize, m_max: usize) -> Result<Self> {
        if m_max < 2 || a_max < 1 {
            return Err(Error::Usage("oracle needs M_max >= 2 and A_max >= 1".into()));
        }
        if measure.max_arms() as usize > a_max || measure.max_mass() as usize > m_max {
            return Err(Error::Usage("initial data exceed the (A_max, M_max) lattice".into()));
        }
        let mut c = vec![0.0; (a_max + 1) * (m_max + 1)];
        for (&(a, m), &w) in measure.weights() {
            c[a as usize * (m_max + 1) + m as usize] = w;
        }
        Ok(OracleState { t: 0.0, c, gel_mass: 0.0, gel_arms: 0.0, a_max: Some(a_max), m_max })
    }

    /// Concentration `c(m)` (classic) or the total over arms at mass `m`.
    pub fn conc(&self, m: usize) -> f64 {
        match self.a_max {
            None => self.c[m],
            Some(a_max) => (0..=a_max).map(|a| self.c[a * (self.m_max + 1) + m]).sum(),
        }
    }

    pub fn conc_arms(&self, a: usize, m: usize) -> f64 {
        self.c[a * (self.m_max + 1) + m]
    }

    /// Sol mass `Σ m c`.
    pub fn mass(&self) -> f64 {
        let w = self.m_max + 1;
        self.c.iter().enumerate().map(|(i, &v)| (i % w) as f64 * v).sum()
    }

    /// Sol arm count `Σ a c` (zero for the classic lattice).
    pub fn arms_count(&self) -> f64 {
        let w = self.m_max + 1;
        match self.a_max {
            None => 0.0,
            Some(_) => self.c.iter().enumerate().map(|(i, &v)| (i / w) as f64 * v).sum(),
        }
    }
}

/// Integrates from `initial` through each time in `times` (nondecreasing,
/// starting at or after `initial.t`) using RK4 with steps of at most `dt`;
/// each interval is split into equal steps so grid points are hit exactly.
pub fn integrate(
    model: Model,
    flavor: Flavor,
    initial: &OracleState,
    times: &[f64],
    dt: f64,
) -> Result<Vec<OracleState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Usage(format!("dt must be > 0, got {dt}")));
    }
    if model.is_arms() != initial.a_max.is_some() {
        return Err(Error::Usage(format!("{model} does not match the oracle lattice")));
    }
    let mut prev = initial.t;
    for &t in times {
        if !(t >= prev) {
            return Err(Error::Usage("oracle times must be nondecreasing and >= t0".into()));
        }
        prev = t;
    }
    let mut rhs = Rhs::new(model, flavor, initial);
    let mut state = Packed::from_state(initial);
    let mut t = initial.t;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        if span > 0.0 {
            let n = (span / dt - 1e-9).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for i in 0..n {
                state = rk4_step(&mut rhs, &state, h)?;
                let now = t + h * (i + 1) as f64;
                clamp(&mut state, now)?;
            }
        }
        t = target;
        out.push(state.to_state(initial, t));
    }
    Ok(out)
}

/// Convenience wrapper: integrate to `t_end` and return the final state.
pub fn integrate_to(model: Model, flavor: Flavor, initial: &OracleState, t_end: f64, dt: f64) -> Result<OracleState> {
    Ok(integrate(model, flavor, initial, &[t_end], dt)?.remove(0))
}

/// State vector: concentrations followed by gel mass and gel arms.
#[derive(Clone)]
struct Packed(Vec<f64>);

impl Packed {
    fn from_state(s: &OracleState) -> Self {
        let mut v = s.c.clone();
        v.push(s.gel_mass);
        v.push(s.gel_arms);
        Packed(v)
    }

    fn to_state(&self, like: &OracleState, t: f64) -> OracleState {
        let n = self.0.len() - 2;
        OracleState {
            t,
            c: self.0[..n].to_vec(),
            gel_mass: self.0[n],
            gel_arms: self.0[n + 1],
            a_max: like.a_max,
            m_max: like.m_max,
        }
    }
}

fn rk4_step(rhs: &mut Rhs, y: &Packed, h: f64) -> Result<Packed> {
    let axpy = |y: &Packed, k: &[f64], s: f64| Packed(y.0.iter().zip(k).map(|(a, b)| a + s * b).collect());
    let k1 = rhs.eval(&y.0);
    let k2 = rhs.eval(&axpy(y, &k1, 0.5 * h).0);
    let k3 = rhs.eval(&axpy(y, &k2, 0.5 * h).0);
    let k4 = rhs.eval(&axpy(y, &k3, h).0);
    let out = y.0.iter().enumerate().map(|(i, v)| v + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    Ok(Packed(out))
}

fn clamp(y: &mut Packed, t: f64) -> Result<()> {
    for (index, v) in y.0.iter_mut().enumerate() {
        if *v < 0.0 {
            if *v > -1e-12 {
                *v = 0.0;
            } else {
                return Err(Error::Instability { t, index, value: *v });
            }
        }
        if !v.is_finite() {
            return Err(Error::Instability { t, index, value: *v });
        }
    }
    Ok(())
}

enum Rhs {
    Classic { flory: bool, flavor: Flavor, m_max: usize },
    Arms(Box<ArmsRhs>),
}

impl Rhs {
    fn new(model: Model, flavor: Flavor, s: &OracleState) -> Self {
        match s.a_max {
            None => Rhs::Classic { flory: model.is_flory(), flavor, m_max: s.m_max },
            Some(a_max) => Rhs::Arms(Box::new(ArmsRhs::new(model.is_flory(), flavor, a_max, s.m_max))),
        }
    }

    fn eval(&mut self, y: &[f64]) -> Vec<f64> {
        match self {
            Rhs::Classic { flory, flavor, m_max } => classic_rhs(*flory, *flavor, *m_max, y),
            Rhs::Arms(r) => r.eval(y),
        }
    }
}

fn classic_rhs(flory: bool, flavor: Flavor, m_max: usize, y: &[f64]) -> Vec<f64> {
    let n = m_max;
    let gel = y[n + 1];
    let b: Vec<f64> = (0..=n).map(|m| m as f64 * y[m]).collect();
    // conv[k] = Σ_{i+j=k} b_i b_j for k ≤ n
    let mut conv = vec![0.0; n + 1];
    for (k, slot) in conv.iter_mut().enumerate().skip(2) {
        let mut s = 0.0;
        for i in 1..=(k - 1) / 2 {
            s += b[i] * b[k - i];
        }
        s *= 2.0;
        if k % 2 == 0 {
            s += b[k / 2] * b[k / 2];
        }
        *slot = s;
    }
    let mut out = vec![0.0; n + 3];
    for m in 1..=n {
        out[m] = 0.5 * conv[m];
    }
    match flavor {
        Flavor::NoBigCoagulation => {
            let mut prefix = vec![0.0; n + 1];
            for m in 1..=n {
                prefix[m] = prefix[m - 1] + b[m];
            }
            for m in 1..=n {
                out[m] -= b[m] * prefix[n - m];
            }
        }
        Flavor::GelInteracting => {
            let p: f64 = b.iter().sum();
            let s2: f64 = b.iter().enumerate().map(|(m, v)| m as f64 * v).sum();
            let inside: f64 = conv.iter().enumerate().map(|(m, v)| 0.5 * m as f64 * v).sum();
            let partner = if flory { p + gel } else { p };
            for m in 1..=n {
                out[m] -= b[m] * partner;
            }
            out[n + 1] = (s2 * p - inside) + if flory { gel * s2 } else { 0.0 };
        }
    }
    out
}

struct ArmsRhs {
    flory: bool,
    flavor: Flavor,
    a_max: usize,
    m_max: usize,
    n1: usize,
    n2: usize,
    fwd1: Arc<dyn Fft<f64>>,
    fwd2: Arc<dyn Fft<f64>>,
    inv1: Arc<dyn Fft<f64>>,
    inv2: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    tbuf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl ArmsRhs {
    fn new(flory: bool, flavor: Flavor, a_max: usize, m_max: usize) -> Self {
        let n1 = (2 * a_max + 1).next_power_of_two();
        let n2 = (2 * m_max + 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd1 = planner.plan_fft_forward(n1);
        let fwd2 = planner.plan_fft_forward(n2);
        let inv1 = planner.plan_fft_inverse(n1);
        let inv2 = planner.plan_fft_inverse(n2);
        let scratch_len = [&fwd1, &fwd2, &inv1, &inv2].iter().map(|f| f.get_inplace_scratch_len()).max().unwrap_or(0);
        ArmsRhs {
            flory,
            flavor,
            a_max,
            m_max,
            n1,
            n2,
            fwd1,
            fwd2,
            inv1,
            inv2,
            buf: vec![Complex::default(); n1 * n2],
            tbuf: vec![Complex::default(); n1 * n2],
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    /// `S = b ⋆ b` on the padded grid, returned row-major `[a][m]` with
    /// `n2` columns.
    fn autoconvolve(&mut self, b: &[f64]) -> Vec<f64> {
        let (n1, n2, w) = (self.n1, self.n2, self.m_max + 1);
        self.buf.iter_mut().for_each(|z| *z = Complex::default());
        for a in 0..=self.a_max {
            for m in 0..w {
                self.buf[a * n2 + m] = Complex::new(b[a * w + m], 0.0);
            }
        }
        self.fwd2.process_with_scratch(&mut self.buf, &mut self.scratch);
        transpose(&self.buf, &mut self.tbuf, n1, n2);
        self.fwd1.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        self.tbuf.iter_mut().for_each(|z| *z = *z * *z);
        self.inv1.process_with_scratch(&mut self.tbuf, &mut self.scratch);
        transpose(&self.tbuf, &mut self.buf, n2, n1);
        self.inv2.process_with_scratch(&mut self.buf, &mut self.scratch);
        let norm = 1.0 / (n1 * n2) as f64;
        self.buf.iter().map(|z| z.re * norm).collect()
    }

    fn eval(&mut self, y: &[f64]) -> Vec<f64> {
        let (amax, mmax) = (self.a_max, self.m_max);
        let w = mmax + 1;
        let len = (amax + 1) * w;
        let gel_arms = y[len + 1];
        let b: Vec<f64> = (0..len).map(|i| (i / w) as f64 * y[i]).collect();
        let s = self.autoconvolve(&b);
        let n2 = self.n2;
        let mut out = vec![0.0; len + 2];
        let mut gained_arms = 0.0;
        let mut gained_mass = 0.0;
        for a in 0..=amax {
            for m in 1..=mmax {
                let g = 0.5 * s[(a + 2) * n2 + m];
                out[a * w + m] = g;
                gained_arms += a as f64 * g;
                gained_mass += m as f64 * g;
            }
        }
        let a_sol: f64 = b.iter().sum();
        match self.flavor {
            Flavor::NoBigCoagulation => {
                // prefix[i][j] = Σ_{a' ≤ i, m' ≤ j} b(a', m')
                let mut prefix = vec![0.0; len];
                for a in 0..=amax {
                    let mut row = 0.0;
                    for m in 0..w {
                        row += b[a * w + m];
                        prefix[a * w + m] = row + if a > 0 { prefix[(a - 1) * w + m] } else { 0.0 };
                    }
                }
                for a in 1..=amax {
                    let ap = (amax + 2 - a).min(amax);
                    for m in 1..=mmax {
                        let bi = b[a * w + m];
                        if bi != 0.0 {
                            out[a * w + m] -= bi * prefix[ap * w + (mmax - m)];
                        }
                    }
                }
            }
            Flavor::GelInteracting => {
                let sab: f64 = b.iter().enumerate().map(|(i, v)| (i / w) as f64 * v).sum();
                let smb: f64 = b.iter().enumerate().map(|(i, v)| (i % w) as f64 * v).sum();
                let over_arms = sab * a_sol - a_sol * a_sol - gained_arms;
                let over_mass = smb * a_sol - gained_mass;
                let partner = if self.flory { a_sol + gel_arms } else { a_sol };
                for (o, bi) in out.iter_mut().zip(&b) {
                    *o -= bi * partner;
                }
                if self.flory {
                    out[len] = over_mass + gel_arms * smb;
                    out[len + 1] = over_arms + gel_arms * (sab - 2.0 * a_sol) - gel_arms * gel_arms;
                } else {
                    out[len] = over_mass;
                    out[len + 1] = over_arms;
                }
            }
        }
        out
    }
}

fn transpose(src: &[Complex<f64>], dst: &mut [Complex<f64>], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Values of one quantity at one time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    Mass,
    Arms,
    Concentrations,
}

/// Extracts `quantity` from oracle states; concentrations cover
/// `m = 1..=n_conc` (summed over arms on the arms lattice).
pub fn oracle_samples(traj: &[OracleState], quantity: Quantity, n_conc: usize) -> Vec<Sample> {
    traj.iter()
        .map(|s| Sample {
            t: s.t,
            values: match quantity {
                Quantity::Mass => vec![s.mass()],
                Quantity::Arms => vec![s.arms_count()],
                Quantity::Concentrations => (1..=n_conc.min(s.m_max)).map(|m| s.conc(m)).collect(),
            },
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub t: f64,
    pub max_abs: f64,
    pub max_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tol: f64,
    /// `max_abs ≤ tol`.
    pub pass: bool,
}

/// Per-time absolute and relative errors of `oracle` against `analytic`.
pub fn compare(analytic: &[Sample], oracle: &[Sample], tol: f64) -> Result<ErrorReport> {
    if analytic.len() != oracle.len() {
        return Err(Error::Usage(format!("time grids differ in length: {} vs {}", analytic.len(), oracle.len())));
    }
    let mut rows = Vec::with_capacity(analytic.len());
    for (a, o) in analytic.iter().zip(oracle) {
        if (a.t - o.t).abs() > 1e-12 * a.t.abs().max(1.0) {
            return Err(Error::Usage(format!("time grids differ: {} vs {}", a.t, o.t)));
        }
        if a.values.len() != o.values.len() {
            return Err(Error::Usage(format!("sample sizes differ at t = {}", a.t)));
        }
        let mut max_abs: f64 = 0.0;
        let mut max_rel: f64 = 0.0;
        for (x, y) in a.values.iter().zip(&o.values) {
            let d = (x - y).abs();
            max_abs = max_abs.max(d);
            if d > 0.0 {
                max_rel = max_rel.max(d / x.abs().max(y.abs()));
            }
        }
        rows.push(ErrorRow { t: a.t, max_abs, max_rel });
    }
    let max_abs = rows.iter().map(|r| r.max_abs).fold(0.0, f64::max);
    let max_rel = rows.iter().map(|r| r.max_rel).fold(0.0, f64::max);
    Ok(ErrorReport { rows, max_abs, max_rel, tol, pass: max_abs <= tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mono(m_max: usize) -> OracleState {
        OracleState::classic(&MassMeasure::Monodisperse, m_max).unwrap()
    }

    #[test]
    fn zero_horizon_is_identity() {
        let s = mono(10);
        let out = integrate_to(Model::Smoluchowski, Flavor::NoBigCoagulation, &s, 0.0, 1e-3).unwrap();
        assert_eq!(out.c, s.c);
        let arms = ArmMeasure::monodisperse(&[0.5, 0.25, 0.0, 0.25]).unwrap();
        let a = OracleState::arms(&arms, 8, 8).unwrap();
        let out = integrate_to(Model::FloryArms, Flavor::GelInteracting, &a, 0.0, 1e-3).unwrap();
        assert_eq!(out, a);
    }

    #[test]
    fn small_lattice_matches_hand_equations() {
        // M_max = 2, no-big: c1' = -c1², c2' = c1²/2 (1+1 only; 1+2 dropped)
        let out = integrate_to(Model::Smoluchowski, Flavor::NoBigCoagulation, &mono(2), 1.0, 1e-3).unwrap();
        assert_relative_eq!(out.c[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(out.c[2], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn no_big_conserves_mass_and_gel_flavor_books_it() {
        let s = mono(40);
        let nb = integrate_to(Model::Smoluchowski, Flavor::NoBigCoagulation, &s, 2.0, 1e-2).unwrap();
        assert_relative_eq!(nb.mass(), 1.0, epsilon = 1e-12);
        assert_eq!(nb.gel_mass, 0.0);
        for model in [Model::Smoluchowski, Model::Flory] {
            let g = integrate_to(model, Flavor::GelInteracting, &s, 2.0, 1e-2).unwrap();
            assert_relative_eq!(g.mass() + g.gel_mass, 1.0, epsilon = 1e-12);
            assert!(g.gel_mass > 0.0);
        }
    }

    #[test]
    fn arms_lattice_conserves_mass() {
        let arms = ArmMeasure::monodisperse(&[0.5, 0.25, 0.0, 0.25]).unwrap();
        let s = OracleState::arms(&arms, 20, 20).unwrap();
        for (model, flavor) in [
            (Model::SmoluchowskiArms, Flavor::NoBigCoagulation),
            (Model::FloryArms, Flavor::GelInteracting),
            (Model::SmoluchowskiArms, Flavor::GelInteracting),
        ] {
            let out = integrate_to(model, flavor, &s, 4.0, 1e-2).unwrap();
            assert_relative_eq!(out.mass() + out.gel_mass, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn arms_pre_gel_count() {
        let arms = ArmMeasure::monodisperse(&[0.5, 0.25, 0.0, 0.25]).unwrap();
        let s = OracleState::arms(&arms, 30, 30).unwrap();
        let out = integrate_to(Model::FloryArms, Flavor::GelInteracting, &s, 1.0, 1e-2).unwrap();
        assert!((out.arms_count() + out.gel_arms - 0.5).abs() < 1e-6);
    }

    #[test]
    fn compare_reports() {
        let a = vec![Sample { t: 0.0, values: vec![1.0, 2.0] }];
        let r = compare(&a, &a, 0.0).unwrap();
        assert_eq!((r.max_abs, r.max_rel, r.pass), (0.0, 0.0, true));
        let b = vec![Sample { t: 0.5, values: vec![1.0, 2.0] }];
        assert!(matches!(compare(&a, &b, 1.0), Err(Error::Usage(_))));
        assert!(matches!(compare(&a, &[], 1.0), Err(Error::Usage(_))));
    }

    #[test]
    fn instability_is_reported() {
        let s = mono(50);
        let e = integrate_to(Model::Smoluchowski, Flavor::NoBigCoagulation, &s, 1.0, 0.5).unwrap_err();
        assert!(matches!(e, Error::Instability { .. }), "{e:?}");
    }
}
