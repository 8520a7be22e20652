//! Truncated power series, concentration extraction and the closed-form
//! arms concentrations with their long-time limits.

use std::ops::{Add, Mul};

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::characteristics::{ell_smolu_log, l_flory_log, tangency_point, SolverConfig};
use crate::error::{domain, Error, Result};
use crate::measures::{ArmMeasure, MassMeasure, NuMeasure};
use crate::models::Model;
use crate::roots::{bisect, width_below};

/// Coefficients of `x⁰..=x^N`; everything of higher order is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    /// Truncates or zero-pads `coeffs` to order `n`.
    pub fn new(mut coeffs: Vec<f64>, n: usize) -> Self {
        coeffs.resize(n + 1, 0.0);
        PowerSeries { coeffs }
    }

    pub fn zero(n: usize) -> Self {
        PowerSeries { coeffs: vec![0.0; n + 1] }
    }

    pub fn one(n: usize) -> Self {
        Self::new(vec![1.0], n)
    }

    /// The series `x`.
    pub fn identity(n: usize) -> Self {
        Self::new(vec![0.0, 1.0], n)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        PowerSeries { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiplication by `x`, dropping the top coefficient.
    pub fn shift_up(&self) -> Self {
        let mut c = vec![0.0];
        c.extend_from_slice(&self.coeffs[..self.order()]);
        PowerSeries { coeffs: c }
    }

    fn common_order(&self, other: &Self) -> usize {
        self.order().min(other.order())
    }

    /// Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        let mut out = vec![0.0; n + 1];
        for (i, &a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                out[i + j] += a * b;
            }
        }
        PowerSeries { coeffs: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.common_order(other);
        PowerSeries { coeffs: (0..=n).map(|i| self.coeffs[i] + other.coeffs[i]).collect() }
    }

    /// `e^{a(x)}` from `n b_n = Σ_{k=1}^n k a_k b_{n-k}`.
    pub fn exp(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if !a0.is_finite() {
            return domain("exp of a series needs a finite constant term");
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = a0.exp();
        for i in 1..=n {
            let s: f64 = (1..=i).map(|k| k as f64 * self.coeffs[k] * b[i - k]).sum();
            b[i] = s / i as f64;
        }
        Ok(PowerSeries { coeffs: b })
    }

    /// Multiplicative inverse; needs a nonzero constant term.
    pub fn inv(&self) -> Result<Self> {
        let a0 = self.coeffs[0];
        if a0 == 0.0 {
            return domain("series with zero constant term has no inverse");
        }
        let n = self.order();
        let mut b = vec![0.0; n + 1];
        b[0] = 1.0 / a0;
        for i in 1..=n {
            let s: f64 = (1..=i).map(|k| self.coeffs[k] * b[i - k]).sum();
            b[i] = -s / a0;
        }
        Ok(PowerSeries { coeffs: b })
    }

    /// `self ∘ inner`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if inner.coeffs[0] != 0.0 {
            return domain("inner series of a composition must vanish at zero");
        }
        let n = self.common_order(inner);
        let mut acc = PowerSeries::new(vec![self.coeffs[n]], n);
        let inner = PowerSeries::new(inner.coeffs.clone(), n);
        for i in (0..n).rev() {
            acc = acc.mul(&inner);
            acc.coeffs[0] += self.coeffs[i];
        }
        Ok(acc)
    }

    /// Compositional inverse by Lagrange inversion:
    /// `[xⁿ] h = (1/n) [w^{n-1}] (w/φ(w))ⁿ`.
    pub fn revert(&self) -> Result<Self> {
        if self.coeffs[0] != 0.0 {
            return domain("reversion needs phi(0) = 0");
        }
        if self.order() == 0 || self.coeffs[1] == 0.0 {
            return domain("reversion needs a nonzero linear coefficient");
        }
        let n = self.order();
        // φ(w)/w truncated to order n - 1
        let quotient = PowerSeries::new(self.coeffs[1..].to_vec(), n - 1);
        let psi = quotient.inv()?;
        let mut h = vec![0.0; n + 1];
        let mut power = PowerSeries::one(n - 1);
        for (k, hk) in h.iter_mut().enumerate().skip(1) {
            power = power.mul(&psi);
            *hk = power.coeffs[k - 1] / k as f64;
        }
        Ok(PowerSeries { coeffs: h })
    }
}

impl Add for &PowerSeries {
    type Output = PowerSeries;

    fn add(self, rhs: Self) -> PowerSeries {
        PowerSeries::add(self, rhs)
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;

    fn mul(self, rhs: Self) -> PowerSeries {
        PowerSeries::mul(self, rhs)
    }
}

pub fn ps_mul(a: &PowerSeries, b: &PowerSeries) -> PowerSeries {
    a.mul(b)
}

pub fn ps_exp(a: &PowerSeries) -> Result<PowerSeries> {
    a.exp()
}

pub fn ps_revert(phi: &PowerSeries) -> Result<PowerSeries> {
    phi.revert()
}

/// Series of `φ_t` for a lattice measure.
pub fn phi_series(model: Model, t: f64, measure: &MassMeasure, n: usize, cfg: &SolverConfig) -> Result<PowerSeries> {
    let g0 = g0_series(measure, n)?;
    let m0 = measure.moments().mass;
    let log_alpha = match model {
        Model::Smoluchowski => {
            let l = ell_smolu_log(t, measure, cfg)?;
            if l == 0.0 {
                t * m0
            } else {
                t * measure.log_value(l) + l
            }
        }
        Model::Flory => {
            l_flory_log(t, measure, cfg)?;
            t * m0
        }
        _ => return domain(format!("series concentrations are for classic models, not {model}")),
    };
    let e = g0.scale(-t).exp()?;
    Ok(e.shift_up().scale(log_alpha.exp()))
}

/// Series of `g₀` for a measure on the positive integers.
pub fn g0_series(measure: &MassMeasure, n: usize) -> Result<PowerSeries> {
    let w = measure
        .lattice_weights()
        .ok_or_else(|| Error::Domain("series representation needs masses on the integer lattice".into()))?;
    let coeffs = w.iter().enumerate().map(|(m, &x)| m as f64 * x).collect();
    Ok(PowerSeries::new(coeffs, n))
}

/// Concentrations `c_t(1..=N)` from the Taylor coefficients of
/// `g_t = g₀ ∘ h_t`.
pub fn concentrations(model: Model, t: f64, measure: &MassMeasure, n: usize, cfg: &SolverConfig) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let phi = phi_series(model, t, measure, n, cfg)?;
    let h = phi.revert()?;
    let gt = g0_series(measure, n)?.compose(&h)?;
    Ok((1..=n).map(|m| gt.coeff(m) / m as f64).collect())
}

/// `(a + m - 2)! / (a! m!)` for `a + m ≥ 2`.
pub fn factorial_ratio(a: u32, m: u32) -> f64 {
    debug_assert!(a + m >= 2);
    if a + m <= 20 {
        let f = |k: u32| (1..=k as u64).product::<u64>();
        f(a + m - 2) as f64 / (f(a) * f(m)) as f64
    } else {
        (ln_gamma((a + m - 1) as f64) - ln_gamma((a + 1) as f64) - ln_gamma((m + 1) as f64)).exp()
    }
}

/// `c_t(a, m)` for `a ≤ a_max`, `1 ≤ m ≤ m_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmsConcentrations {
    /// `values[a][m - 1]`.
    pub values: Vec<Vec<f64>>,
    /// `ν(0) = 0`: every limiting concentration vanishes.
    pub degenerate: bool,
}

impl ArmsConcentrations {
    pub fn get(&self, a: usize, m: usize) -> f64 {
        self.values[a][m - 1]
    }
}

/// Closed-form arms concentrations given the integrating factors
/// `(α_t, β_t)` and a monodisperse arm law `μ`.
pub fn arms_concentrations_from(mu: &[f64], alpha: f64, beta: f64, a_max: usize, m_max: usize) -> ArmsConcentrations {
    let nu = NuMeasure::from_mu(mu);
    let powers = nu.conv_powers(m_max, a_max + m_max);
    let ln_alpha = alpha.ln();
    let ln_beta = beta.ln();
    let cols: Vec<Vec<f64>> = (1..=m_max)
        .into_par_iter()
        .map(|m| {
            (0..=a_max)
                .map(|a| {
                    if m == 1 {
                        let w = mu.get(a).copied().unwrap_or(0.0);
                        return if a == 0 { w } else { w * (-(a as f64) * ln_alpha).exp() };
                    }
                    let v = powers[m - 1][a + m - 2];
                    if v == 0.0 {
                        return 0.0;
                    }
                    let log_scale = (m - 1) as f64 * ln_beta - a as f64 * ln_alpha;
                    factorial_ratio(a as u32, m as u32) * log_scale.exp() * v
                })
                .collect()
        })
        .collect();
    let values = (0..=a_max).map(|a| cols.iter().map(|c| c[a]).collect()).collect();
    ArmsConcentrations { values, degenerate: nu.is_degenerate() }
}

/// `c_t(a, m)` for either arms model at time `t`.
pub fn arms_concentrations(
    model: Model,
    t: f64,
    measure: &ArmMeasure,
    a_max: usize,
    m_max: usize,
    cfg: &SolverConfig,
) -> Result<ArmsConcentrations> {
    let mu = monodisperse_law(measure)?;
    let (alpha, beta) = match model {
        Model::FloryArms => {
            let alpha = 1.0 + t * measure.a0();
            (alpha, t / alpha)
        }
        Model::SmoluchowskiArms => {
            let s = crate::characteristics::alpha_beta_at(measure, &[t], cfg)?[0];
            (s.alpha, s.beta)
        }
        _ => return domain(format!("arms concentrations are for arms models, not {model}")),
    };
    Ok(arms_concentrations_from(&mu, alpha, beta, a_max, m_max))
}

fn monodisperse_law(measure: &ArmMeasure) -> Result<Vec<f64>> {
    measure.monodisperse_law().ok_or_else(|| {
        Error::Domain("closed-form concentrations need monodisperse arms data c0(a, m) = mu(a) 1{m = 1}".into())
    })
}

/// Long-time limits of an arms model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingConcentrations {
    /// `c_∞(m)` for `m = 2..=m_max` (index 0 is `m = 2`).
    pub c_inf: Vec<f64>,
    /// `β_∞` (Smoluchowski-arms) or `lim β_t = 1/A₀` (Flory-arms).
    pub beta_inf: f64,
    /// `p_ν` (Flory-arms) or `c` (Smoluchowski-arms).
    pub p_or_c: f64,
    pub m_inf: f64,
    pub t_gel: f64,
    /// `c_∞(0, 1) = c₀(0, 1)`, which has no physical meaning.
    pub c_inf_0_1: f64,
    pub degenerate: bool,
}

/// Smallest root of `k₀(x, 1) = A₀ x` on `[0, 1]`; one without gelation.
pub fn extinction_probability(measure: &ArmMeasure, cfg: &SolverConfig) -> Result<f64> {
    if measure.gel_time().is_infinite() {
        return Ok(1.0);
    }
    let a0 = measure.a0();
    // k₀ - A₀x is convex, positive at 0 and decreasing into x = 1
    let xs = bisect(|x| measure.k0_line(x).1 - a0, 0.0, 1.0, width_below(cfg.root_tol), cfg.max_iter)?;
    if measure.k0_line(0.0).0 == 0.0 {
        return Ok(0.0);
    }
    bisect(|x| measure.k0_line(x).0 - a0 * x, 0.0, xs, width_below(cfg.root_tol), cfg.max_iter)
}

pub fn limiting_concentrations(
    model: Model,
    measure: &ArmMeasure,
    m_max: usize,
    cfg: &SolverConfig,
) -> Result<LimitingConcentrations> {
    let mu = monodisperse_law(measure)?;
    let nu = NuMeasure::from_mu(&mu);
    let t_gel = measure.gel_time();
    let (beta_inf, p_or_c) = match model {
        Model::FloryArms => (1.0 / measure.a0(), extinction_probability(measure, cfg)?),
        Model::SmoluchowskiArms => {
            let c = tangency_point(measure, cfg)?;
            (c / measure.k0_line(c).0, c)
        }
        _ => return domain(format!("limits are defined for arms models, not {model}")),
    };
    let m_inf = mu.iter().enumerate().map(|(a, &w)| w * p_or_c.powi(a as i32)).sum();
    let degenerate = nu.is_degenerate();
    let c_inf = if degenerate || m_max < 2 {
        vec![0.0; m_max.saturating_sub(1)]
    } else {
        let powers = nu.conv_powers(m_max, m_max);
        let ln_beta = beta_inf.ln();
        (2..=m_max)
            .map(|m| {
                let v = powers[m - 1][m - 2];
                if v == 0.0 {
                    0.0
                } else {
                    ((m - 1) as f64 * ln_beta).exp() * v / (m * (m - 1)) as f64
                }
            })
            .collect()
    };
    Ok(LimitingConcentrations { c_inf, beta_inf, p_or_c, m_inf, t_gel, c_inf_0_1: mu[0], degenerate })
}
