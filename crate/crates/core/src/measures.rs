//! Initial conditions and their generating functions.
//!
//! A [`MassMeasure`] is an initial mass distribution `μ₀` on `(0, ∞)`; its
//! generating function is `g₀(x) = ⟨μ₀, m xᵐ⟩`. An [`ArmMeasure`] holds
//! initial concentrations `c₀(a, m)` on the arms × mass lattice with
//! generating function `k₀(x, y) = Σ a c₀(a, m) x^(a-1) yᵐ`.
//!
//! Infinite values (`M₀ = ∞` for heavy-tailed data, `g₀(1) = ∞`, ...) are
//! returned as `f64::INFINITY` explicitly rather than through overflow.
//!
//! Many solves happen close to `x = 1`, where `1 - x` loses precision. The
//! mass measures therefore also expose their generating function in the
//! logarithmic coordinate `λ = -ln x` (the Laplace transform of `m μ₀(dm)`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};

/// A function `g₀` on `[0, 1]` with its first two derivatives.
///
/// Implemented by [`MassMeasure`] and by the closed-form families in
/// [`G0Family`], which are used to exercise the gel-point derivative.
pub trait GeneratingFunction {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
}

/// `(M₀, K, m₀)` of a mass measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    /// `⟨μ₀, m⟩`, possibly infinite.
    pub mass: f64,
    /// `⟨μ₀, m²⟩`, possibly infinite.
    pub second: f64,
    /// `inf supp μ₀`.
    pub min_support: f64,
}

/// Initial mass distribution `μ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MassMeasure {
    /// Finitely many atoms `(mass, weight)`.
    Discrete { atoms: Vec<(f64, f64)> },
    /// `δ₁`.
    Monodisperse,
    /// `μ₀(dm) = e^{-m} dm`.
    Exponential,
    /// `μ₀(dm) = m^{-p} dm`, `1 < p < 2` (infinite total mass).
    PowerLaw { p: f64 },
}

impl MassMeasure {
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let m = MassMeasure::Discrete { atoms };
        m.validate()?;
        Ok(m)
    }

    pub fn power_law(p: f64) -> Result<Self> {
        let m = MassMeasure::PowerLaw { p };
        m.validate()?;
        Ok(m)
    }

    /// Checks positivity of atoms and `⟨μ₀, m ∧ 1⟩ < ∞`.
    pub fn validate(&self) -> Result<()> {
        match self {
            MassMeasure::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidMeasure("measure is null (no atoms)".into()));
                }
                for &(m, w) in atoms {
                    if !(m.is_finite() && m > 0.0) {
                        return Err(Error::InvalidMeasure(format!("atom mass must be finite and > 0, got {m}")));
                    }
                    if !(w.is_finite() && w > 0.0) {
                        return Err(Error::InvalidMeasure(format!("atom weight must be finite and > 0, got {w}")));
                    }
                }
                Ok(())
            }
            MassMeasure::PowerLaw { p } => {
                // p = 1 makes ⟨μ₀, m ∧ 1⟩ diverge logarithmically at infinity
                if !(*p > 1.0 && *p < 2.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "power-law exponent must satisfy 1 < p < 2 for <mu0, m^1> to be finite, got {p}"
                    )));
                }
                Ok(())
            }
            MassMeasure::Monodisperse | MassMeasure::Exponential => Ok(()),
        }
    }

    pub fn moments(&self) -> Moments {
        match self {
            MassMeasure::Discrete { atoms } => {
                let mass = atoms.iter().map(|&(m, w)| w * m).sum();
                let second = atoms.iter().map(|&(m, w)| w * m * m).sum();
                let min_support = atoms.iter().map(|&(m, _)| m).fold(f64::INFINITY, f64::min);
                Moments { mass, second, min_support }
            }
            MassMeasure::Monodisperse => Moments { mass: 1.0, second: 1.0, min_support: 1.0 },
            MassMeasure::Exponential => Moments { mass: 1.0, second: 2.0, min_support: 0.0 },
            MassMeasure::PowerLaw { .. } => Moments { mass: f64::INFINITY, second: f64::INFINITY, min_support: 0.0 },
        }
    }

    /// `⟨μ₀, m ∧ 1⟩`.
    pub fn small_mass_moment(&self) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms.iter().map(|&(m, w)| w * m.min(1.0)).sum(),
            MassMeasure::Monodisperse => 1.0,
            MassMeasure::Exponential => 1.0 - (-1f64).exp(),
            MassMeasure::PowerLaw { p } => 1.0 / (2.0 - p) + 1.0 / (p - 1.0),
        }
    }

    /// `μ₀({m₀})`, the weight of the smallest atom (zero for densities).
    pub fn min_atom_weight(&self) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => {
                let m0 = self.moments().min_support;
                atoms.iter().filter(|&&(m, _)| m == m0).map(|&(_, w)| w).sum()
            }
            MassMeasure::Monodisperse => 1.0,
            _ => 0.0,
        }
    }

    pub fn gel_time(&self) -> f64 {
        crate::characteristics::gel_time_classic(self.moments().second)
    }

    /// `g₀`, `g₀'` or `g₀''` at `x ∈ [0, 1]`.
    pub fn g0(&self, x: f64, order: u8) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return domain(format!("g0 evaluated at x = {x} outside [0, 1]"));
        }
        match order {
            0 => Ok(self.value(x)),
            1 => Ok(self.d1(x)),
            2 => Ok(self.d2(x)),
            _ => domain(format!("g0 derivative order {order} not supported (0, 1 or 2)")),
        }
    }

    /// `g₀(e^{-λ})`.
    pub fn log_value(&self, lambda: f64) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms.iter().map(|&(m, w)| w * m * (-m * lambda).exp()).sum(),
            MassMeasure::Monodisperse => (-lambda).exp(),
            MassMeasure::Exponential => (1.0 + lambda).powi(-2),
            MassMeasure::PowerLaw { p } => {
                if lambda == 0.0 {
                    f64::INFINITY
                } else {
                    gamma(2.0 - p) * lambda.powf(p - 2.0)
                }
            }
        }
    }

    /// `x g₀'(x) = ⟨μ₀, m² xᵐ⟩` at `x = e^{-λ}`; strictly decreasing in `λ`.
    pub fn log_x_d1(&self, lambda: f64) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms.iter().map(|&(m, w)| w * m * m * (-m * lambda).exp()).sum(),
            MassMeasure::Monodisperse => (-lambda).exp(),
            MassMeasure::Exponential => 2.0 * (1.0 + lambda).powi(-3),
            MassMeasure::PowerLaw { p } => {
                if lambda == 0.0 {
                    f64::INFINITY
                } else {
                    gamma(3.0 - p) * lambda.powf(p - 3.0)
                }
            }
        }
    }

    /// Dense weights `w[m]` when every atom sits on a positive integer.
    pub fn lattice_weights(&self) -> Option<Vec<f64>> {
        match self {
            MassMeasure::Monodisperse => Some(vec![0.0, 1.0]),
            MassMeasure::Discrete { atoms } => {
                let mut out = Vec::new();
                for &(m, w) in atoms {
                    if m.fract() != 0.0 || !(1.0..=1e7).contains(&m) {
                        return None;
                    }
                    let i = m as usize;
                    if out.len() <= i {
                        out.resize(i + 1, 0.0);
                    }
                    out[i] += w;
                }
                Some(out)
            }
            _ => None,
        }
    }
}

impl GeneratingFunction for MassMeasure {
    fn value(&self, x: f64) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms.iter().map(|&(m, w)| w * m * x.powf(m)).sum(),
            MassMeasure::Monodisperse => x,
            _ => self.log_value(-x.ln()),
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms.iter().map(|&(m, w)| w * m * m * x.powf(m - 1.0)).sum(),
            MassMeasure::Monodisperse => 1.0,
            _ => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    self.log_x_d1(-x.ln()) / x
                }
            }
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match self {
            MassMeasure::Discrete { atoms } => atoms
                .iter()
                .map(|&(m, w)| {
                    let c = w * m * m * (m - 1.0);
                    if c == 0.0 {
                        0.0
                    } else {
                        c * x.powf(m - 2.0)
                    }
                })
                .sum(),
            MassMeasure::Monodisperse => 0.0,
            MassMeasure::Exponential => {
                if x == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let u = 1.0 - x.ln();
                2.0 * u.powi(-4) * (2.0 + x.ln()) / (x * x)
            }
            MassMeasure::PowerLaw { p } => {
                if x == 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 1.0 {
                    return f64::INFINITY;
                }
                let l = -x.ln();
                gamma(3.0 - p) / (x * x) * ((3.0 - p) * l.powf(p - 4.0) - l.powf(p - 3.0))
            }
        }
    }
}

/// Closed-form `g₀` families with singular behavior at `x = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum G0Family {
    /// `(1 - x) ln(1 - x) + x`
    LogCritical,
    /// `√(1 - x) ln(1 - x) + x`
    SqrtLog,
    /// `1 - √(1 - x^{2α})`
    PowerRoot { alpha: f64 },
}

impl GeneratingFunction for G0Family {
    fn value(&self, x: f64) -> f64 {
        match *self {
            G0Family::LogCritical => {
                let s = 1.0 - x;
                if s == 0.0 {
                    1.0
                } else {
                    s * s.ln() + x
                }
            }
            G0Family::SqrtLog => {
                let s = 1.0 - x;
                if s == 0.0 {
                    1.0
                } else {
                    s.sqrt() * s.ln() + x
                }
            }
            G0Family::PowerRoot { alpha } => 1.0 - one_minus_pow(x, 2.0 * alpha).sqrt(),
        }
    }

    fn d1(&self, x: f64) -> f64 {
        match *self {
            G0Family::LogCritical => -(-x).ln_1p(),
            G0Family::SqrtLog => {
                let s = 1.0 - x;
                let l = -(-x).ln_1p();
                (0.5 * l - 1.0) / s.sqrt() + 1.0
            }
            G0Family::PowerRoot { alpha } => {
                let k = 2.0 * alpha;
                let du = k * x.powf(k - 1.0);
                0.5 * du / one_minus_pow(x, k).sqrt()
            }
        }
    }

    fn d2(&self, x: f64) -> f64 {
        match *self {
            G0Family::LogCritical => 1.0 / (1.0 - x),
            G0Family::SqrtLog => {
                let s = 1.0 - x;
                let l = -(-x).ln_1p();
                0.25 * l / (s * s.sqrt())
            }
            G0Family::PowerRoot { alpha } => {
                let k = 2.0 * alpha;
                let r = one_minus_pow(x, k);
                let du = k * x.powf(k - 1.0);
                let ddu = if k == 1.0 { 0.0 } else { k * (k - 1.0) * x.powf(k - 2.0) };
                0.25 * du * du / (r * r.sqrt()) + 0.5 * ddu / r.sqrt()
            }
        }
    }
}

/// `1 - x^k` without cancellation near `x = 1`.
fn one_minus_pow(x: f64, k: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(k * x.ln()).exp_m1()
    }
}

/// Initial concentrations `c₀(a, m)` on arms × mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u32, u32, f64)>", into = "Vec<(u32, u32, f64)>")]
pub struct ArmMeasure {
    weights: BTreeMap<(u32, u32), f64>,
    /// `poly[j] = Σ_m (j + 1) c₀(j + 1, m)`: coefficients of `k₀(·, 1)`.
    poly: Vec<f64>,
}

impl ArmMeasure {
    /// Builds from `(arms, mass, weight)` triples; repeated keys accumulate.
    pub fn new(triples: impl IntoIterator<Item = (u32, u32, f64)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (a, m, w) in triples {
            if m == 0 {
                return Err(Error::InvalidMeasure("arm measure masses must be >= 1".into()));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidMeasure(format!(
                    "weight at (a={a}, m={m}) must be finite and >= 0, got {w}"
                )));
            }
            if w > 0.0 {
                *weights.entry((a, m)).or_insert(0.0) += w;
            }
        }
        let max_a = weights.keys().map(|&(a, _)| a as usize).max().unwrap_or(0);
        let mut poly = vec![0.0; max_a.max(1)];
        for (&(a, _), &w) in &weights {
            if a >= 1 {
                poly[a as usize - 1] += a as f64 * w;
            }
        }
        let measure = ArmMeasure { weights, poly };
        if !(measure.a0() > 0.0) {
            return Err(Error::InvalidMeasure("arm measure needs A0 = <c0, a> > 0 (some particle with arms)".into()));
        }
        Ok(measure)
    }

    /// `c₀(a, m) = μ(a) 1{m = 1}` for an arm law `μ` given densely by arm count.
    pub fn monodisperse(mu: &[f64]) -> Result<Self> {
        Self::new(mu.iter().enumerate().map(|(a, &w)| (a as u32, 1, w)))
    }

    pub fn weights(&self) -> &BTreeMap<(u32, u32), f64> {
        &self.weights
    }

    pub fn get(&self, a: u32, m: u32) -> f64 {
        self.weights.get(&(a, m)).copied().unwrap_or(0.0)
    }

    /// `A₀ = ⟨c₀, a⟩`.
    pub fn a0(&self) -> f64 {
        self.poly.iter().sum()
    }

    /// `K = ⟨c₀, a(a - 1)⟩`.
    pub fn k(&self) -> f64 {
        self.poly.iter().enumerate().map(|(j, &c)| j as f64 * c).sum()
    }

    /// `⟨c₀, 1⟩`.
    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }

    /// `⟨c₀, m⟩`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().map(|(&(_, m), &w)| m as f64 * w).sum()
    }

    pub fn max_arms(&self) -> u32 {
        self.weights.keys().map(|&(a, _)| a).max().unwrap_or(0)
    }

    pub fn max_mass(&self) -> u32 {
        self.weights.keys().map(|&(_, m)| m).max().unwrap_or(1)
    }

    pub fn gel_time(&self) -> f64 {
        crate::characteristics::gel_time_arms(self.a0(), self.k())
    }

    /// True when `k₀(·, 1)` is affine (no particle carries more than two arms),
    /// in which case there is no gelation.
    pub fn is_affine_in_x(&self) -> bool {
        self.poly.iter().skip(2).all(|&c| c == 0.0)
    }

    /// The arm law `μ` when every particle initially has mass one.
    pub fn monodisperse_law(&self) -> Option<Vec<f64>> {
        if self.weights.keys().any(|&(_, m)| m != 1) {
            return None;
        }
        let mut mu = vec![0.0; self.max_arms() as usize + 1];
        for (&(a, _), &w) in &self.weights {
            mu[a as usize] += w;
        }
        Some(mu)
    }

    /// `k₀(x, 1)`, `∂ₓk₀(x, 1)` and `∂²ₓk₀(x, 1)` by Horner's scheme.
    pub fn k0_line(&self, x: f64) -> (f64, f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        let mut dd = 0.0;
        for &c in self.poly.iter().rev() {
            dd = dd * x + 2.0 * d;
            d = d * x + v;
            v = v * x + c;
        }
        (v, d, dd)
    }

    /// `k₀(x, y)` and `∂ₓk₀(x, y)` for general `y`.
    pub fn k0_xy(&self, x: f64, y: f64) -> (f64, f64) {
        if y == 1.0 {
            let (v, d, _) = self.k0_line(x);
            return (v, d);
        }
        let mut v = 0.0;
        let mut d = 0.0;
        for (&(a, m), &w) in &self.weights {
            if a == 0 {
                continue;
            }
            let af = a as f64;
            let ym = y.powi(m as i32);
            v += af * w * x.powi(a as i32 - 1) * ym;
            if a >= 2 {
                d += af * (af - 1.0) * w * x.powi(a as i32 - 2) * ym;
            }
        }
        (v, d)
    }

    /// `k₀(x, y)` (or `∂ₓk₀` when `partial_x`) on the unit square.
    pub fn k0(&self, x: f64, y: f64, partial_x: bool) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return domain(format!("k0 evaluated at ({x}, {y}) outside the unit square"));
        }
        let (v, d) = self.k0_xy(x, y);
        Ok(if partial_x { d } else { v })
    }
}

impl TryFrom<Vec<(u32, u32, f64)>> for ArmMeasure {
    type Error = Error;

    fn try_from(v: Vec<(u32, u32, f64)>) -> Result<Self> {
        ArmMeasure::new(v)
    }
}

impl From<ArmMeasure> for Vec<(u32, u32, f64)> {
    fn from(m: ArmMeasure) -> Self {
        m.weights.into_iter().map(|((a, m), w)| (a, m, w)).collect()
    }
}

/// Offspring measure `ν(m) = (m + 1) μ(m + 1)` of an arm law `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuMeasure {
    values: Vec<f64>,
}

impl NuMeasure {
    pub fn from_mu(mu: &[f64]) -> Self {
        let values =
            if mu.len() <= 1 { vec![0.0] } else { (0..mu.len() - 1).map(|m| (m + 1) as f64 * mu[m + 1]).collect() };
        NuMeasure { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, m: usize) -> f64 {
        self.values.get(m).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `ν(0) = 0`: no particle with exactly one arm, so every limiting
    /// concentration `c_∞(m)`, `m ≥ 2`, vanishes.
    pub fn is_degenerate(&self) -> bool {
        self.get(0) <= 0.0
    }

    /// `ν^{*m}(0..=max_index)` by iterated discrete convolution.
    pub fn conv_power(&self, m: usize, max_index: usize) -> Vec<f64> {
        assert!(m >= 1, "convolution power must be >= 1");
        let mut acc = self.truncated(max_index);
        for _ in 1..m {
            acc = self.convolve_truncated(&acc, max_index);
        }
        acc
    }

    /// All powers `ν^{*1}, …, ν^{*m_max}` truncated at `max_index`.
    pub fn conv_powers(&self, m_max: usize, max_index: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(m_max);
        if m_max == 0 {
            return out;
        }
        out.push(self.truncated(max_index));
        for k in 1..m_max {
            let next = self.convolve_truncated(&out[k - 1], max_index);
            out.push(next);
        }
        out
    }

    fn truncated(&self, max_index: usize) -> Vec<f64> {
        (0..=max_index).map(|i| self.get(i)).collect()
    }

    fn convolve_truncated(&self, acc: &[f64], max_index: usize) -> Vec<f64> {
        let mut out = vec![0.0; max_index + 1];
        for (j, &v) in self.values.iter().enumerate() {
            if v == 0.0 || j > max_index {
                continue;
            }
            for (i, &a) in acc.iter().enumerate().take(max_index + 1 - j) {
                out[i + j] += v * a;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn example_mu() -> Vec<f64> {
        vec![0.5, 0.25, 0.0, 0.25]
    }

    #[test]
    fn moments_of_closed_families() {
        assert_eq!(MassMeasure::Monodisperse.moments(), Moments { mass: 1.0, second: 1.0, min_support: 1.0 });
        assert_eq!(MassMeasure::Exponential.moments(), Moments { mass: 1.0, second: 2.0, min_support: 0.0 });
        let d = MassMeasure::discrete(vec![(2.0, 0.5)]).unwrap();
        assert_eq!(d.moments(), Moments { mass: 1.0, second: 2.0, min_support: 2.0 });
        let p = MassMeasure::power_law(1.5).unwrap().moments();
        assert!(p.mass.is_infinite() && p.second.is_infinite());
    }

    #[test]
    fn g0_examples() {
        assert_eq!(MassMeasure::Monodisperse.g0(0.5, 0).unwrap(), 0.5);
        let e = MassMeasure::Exponential.g0((-1f64).exp(), 0).unwrap();
        assert_relative_eq!(e, 0.25, max_relative = 1e-14);
        let p = MassMeasure::power_law(1.5).unwrap();
        assert_eq!(p.g0(1.0, 0).unwrap(), f64::INFINITY);
        assert!(matches!(MassMeasure::Monodisperse.g0(1.5, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(MassMeasure::discrete(vec![]).is_err());
        assert!(MassMeasure::discrete(vec![(0.0, 1.0)]).is_err());
        assert!(MassMeasure::discrete(vec![(1.0, -1.0)]).is_err());
        assert!(MassMeasure::power_law(1.0).is_err());
        assert!(MassMeasure::power_law(2.0).is_err());
        assert!(ArmMeasure::monodisperse(&[1.0]).is_err());
    }

    #[test]
    fn small_mass_moment_is_finite() {
        for m in [MassMeasure::Monodisperse, MassMeasure::Exponential, MassMeasure::power_law(1.5).unwrap()] {
            assert!(m.small_mass_moment().is_finite());
        }
    }

    fn fd_check(g: &impl GeneratingFunction) {
        let h = 1e-5;
        for i in 1..=9 {
            let x = i as f64 / 10.0;
            let fd1 = (g.value(x + h) - g.value(x - h)) / (2.0 * h);
            let fd2 = (g.d1(x + h) - g.d1(x - h)) / (2.0 * h);
            assert_relative_eq!(g.d1(x), fd1, max_relative = 1e-6);
            assert_relative_eq!(g.d2(x), fd2, max_relative = 1e-6, epsilon = 1e-9);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        fd_check(&MassMeasure::Monodisperse);
        fd_check(&MassMeasure::Exponential);
        fd_check(&MassMeasure::power_law(1.5).unwrap());
        fd_check(&MassMeasure::discrete(vec![(1.0, 0.5), (2.0, 0.25), (3.5, 0.1)]).unwrap());
        fd_check(&G0Family::LogCritical);
        fd_check(&G0Family::SqrtLog);
        fd_check(&G0Family::PowerRoot { alpha: 0.5 });
        fd_check(&G0Family::PowerRoot { alpha: 1.5 });
    }

    #[test]
    fn g0_is_monotone_and_convex_for_masses_at_least_one() {
        let d = MassMeasure::discrete(vec![(1.0, 0.5), (2.0, 0.25), (7.0, 0.01)]).unwrap();
        let mut prev = (d.value(0.0), d.d1(0.0));
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let cur = (d.value(x), d.d1(x));
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && d.d2(x) >= 0.0);
            prev = cur;
        }
        // densities are only nondecreasing: x g0'(x) still increases
        for g in [MassMeasure::Exponential, MassMeasure::power_law(1.3).unwrap()] {
            let mut prev = 0.0;
            for i in 1..100 {
                let x = i as f64 / 100.0;
                assert!(g.value(x) >= prev);
                prev = g.value(x);
            }
        }
    }

    #[test]
    fn log_coordinates_agree_with_direct_evaluation() {
        for g in [
            MassMeasure::Monodisperse,
            MassMeasure::Exponential,
            MassMeasure::power_law(1.7).unwrap(),
            MassMeasure::discrete(vec![(1.5, 0.5), (2.0, 0.25)]).unwrap(),
        ] {
            for x in [0.05, 0.3, 0.77, 0.99] {
                let l = -f64::ln(x);
                assert_relative_eq!(g.log_value(l), g.value(x), max_relative = 1e-12);
                assert_relative_eq!(g.log_x_d1(l), x * g.d1(x), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn k0_examples() {
        let c = ArmMeasure::monodisperse(&example_mu()).unwrap();
        assert_relative_eq!(c.k0(1.0, 1.0, false).unwrap(), 1.0);
        assert_relative_eq!(c.k0(0.0, 1.0, false).unwrap(), 0.25);
        assert_eq!(c.k0(0.3, 0.0, false).unwrap(), 0.0);
        assert_relative_eq!(c.a0(), 1.0);
        assert_relative_eq!(c.k(), 1.5);
        assert!(c.k0(1.2, 0.5, false).is_err());
    }

    #[test]
    fn k0_is_convex_and_derivative_matches() {
        let c = ArmMeasure::new(vec![(1, 1, 0.3), (3, 2, 0.2), (4, 1, 0.05), (2, 3, 0.4)]).unwrap();
        let h = 1e-6;
        let mut prev = f64::NEG_INFINITY;
        for i in 1..=9 {
            let x = i as f64 / 10.0;
            let (v, d, dd) = c.k0_line(x);
            assert!(v >= prev && dd >= 0.0);
            prev = v;
            let fd = (c.k0_line(x + h).0 - c.k0_line(x - h).0) / (2.0 * h);
            assert_relative_eq!(d, fd, max_relative = 1e-6);
            for y in [0.3, 0.8] {
                let (_, dxy) = c.k0_xy(x, y);
                let fdy = (c.k0_xy(x + h, y).0 - c.k0_xy(x - h, y).0) / (2.0 * h);
                assert_relative_eq!(dxy, fdy, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn nu_examples() {
        let nu = NuMeasure::from_mu(&example_mu());
        assert_eq!(nu.values(), &[0.25, 0.0, 0.75]);
        let nu1 = NuMeasure::from_mu(&[0.0, 1.0]);
        assert_eq!(nu1.values(), &[1.0]);
        assert!(!nu1.is_degenerate());
        let nu2 = NuMeasure::from_mu(&[0.0, 0.0, 0.5]);
        assert!(nu2.is_degenerate());
    }

    #[test]
    fn conv_power_examples() {
        let nu = NuMeasure::from_mu(&example_mu());
        let p2 = nu.conv_power(2, 4);
        assert_relative_eq!(p2[0], 1.0 / 16.0);
        assert_relative_eq!(p2[2], 3.0 / 8.0);
        assert_relative_eq!(p2[4], 9.0 / 16.0);
        assert_eq!(nu.conv_power(1, 2), vec![0.25, 0.0, 0.75]);
        let delta = NuMeasure::from_mu(&[0.0, 1.0]);
        assert_eq!(delta.conv_power(7, 3), vec![1.0, 0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn convolution_mass_is_multiplicative(
            mu in proptest::collection::vec(0.0f64..1.0, 2..6),
            m in 1usize..=10,
        ) {
            let nu = NuMeasure::from_mu(&mu);
            let max_index = m * nu.values().len();
            let total: f64 = nu.conv_power(m, max_index).iter().sum();
            let expected = nu.total().powi(m as i32);
            prop_assert!((total - expected).abs() <= 1e-12 * expected.max(1.0));
        }

        #[test]
        fn discrete_moments_are_brute_force_sums(
            atoms in proptest::collection::vec((0.01f64..20.0, 0.01f64..5.0), 1..8)
        ) {
            let m = MassMeasure::discrete(atoms.clone()).unwrap().moments();
            let mut mass = 0.0;
            let mut second = 0.0;
            let mut min = f64::INFINITY;
            for &(x, w) in &atoms {
                mass += w * x;
                second += w * x * x;
                min = min.min(x);
            }
            prop_assert_eq!(m.mass, mass);
            prop_assert_eq!(m.second, second);
            prop_assert_eq!(m.min_support, min);
        }
    }
}
