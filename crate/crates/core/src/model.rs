//! Problem statements for `∂_t u − Δ(u^m) + h(t) g(u) = 0` and the admissibility
//! checks that decide which regime a configuration lives in.
//!
//! Every absorption law is evaluated through `ln h`. The double-exponential
//! families underflow any floating representation long before `t` gets small,
//! so `h` itself is never formed by downstream code.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature;

/// The modulus `ω(t)` appearing in the degenerate absorption laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    /// `ω ≡ κ₀`.
    Const { kappa0: f64 },
    /// `ω(t) = t^{α₀}`, `0 ≤ α₀ < 1`.
    Power { alpha0: f64 },
    /// `ω(t) = (ln(e/t))^{−β}`.
    LogPower { beta: f64 },
}

impl OmegaSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            OmegaSpec::Const { kappa0 } if !(kappa0 > 0.0 && kappa0.is_finite()) => {
                Err(Error::Config(format!("omega const requires kappa0 > 0, got {kappa0}")))
            }
            OmegaSpec::Power { alpha0 } if !(0.0..1.0).contains(&alpha0) => {
                Err(Error::Config(format!("omega power requires 0 <= alpha0 < 1, got {alpha0}")))
            }
            OmegaSpec::LogPower { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::Config(format!("omega log_power requires beta > 0, got {beta}")))
            }
            _ => Ok(()),
        }
    }

    /// `ln ω(t)`.
    pub fn ln_value(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(domain(format!("omega evaluated at t = {t}")));
        }
        match *self {
            OmegaSpec::Const { kappa0 } => Ok(kappa0.ln()),
            OmegaSpec::Power { alpha0 } => Ok(alpha0 * t.ln()),
            OmegaSpec::LogPower { beta } => {
                let y = 1.0 - t.ln();
                if y <= 0.0 {
                    return Err(domain(format!("log_power omega undefined for t = {t} >= e")));
                }
                Ok(-beta * y.ln())
            }
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.ln_value(t).map(f64::exp)
    }

    /// `ω(t)/t`.
    fn over_t(&self, t: f64) -> Result<f64> {
        Ok((self.ln_value(t)? - t.ln()).exp())
    }

    /// `ω(t e^{−z})/(t e^{−z}) − ω(t)/t`, without cancellation.
    fn over_t_increment(&self, t: f64, z: f64) -> Result<f64> {
        match *self {
            OmegaSpec::Const { kappa0 } => Ok(kappa0 / t * z.exp_m1()),
            OmegaSpec::Power { alpha0 } => Ok(t.powf(alpha0 - 1.0) * ((1.0 - alpha0) * z).exp_m1()),
            OmegaSpec::LogPower { .. } => Ok(self.over_t(t)? * (z + self.ln_increment(t, z)?).exp_m1()),
        }
    }

    /// `ln ω(t e^{−z}) − ln ω(t)`.
    fn ln_increment(&self, t: f64, z: f64) -> Result<f64> {
        match *self {
            OmegaSpec::Const { .. } => Ok(0.0),
            OmegaSpec::Power { alpha0 } => Ok(-alpha0 * z),
            OmegaSpec::LogPower { beta } => {
                let y = 1.0 - t.ln();
                if y <= 0.0 {
                    return Err(domain(format!("log_power omega undefined for t = {t} >= e")));
                }
                Ok(-beta * (z / y).ln_1p())
            }
        }
    }
}

/// Parametric families for the time factor `h(t)` of the absorption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbsorptionLaw {
    /// `h ≡ c`.
    Constant { c: f64 },
    /// `h = t^α`.
    Power { alpha: f64 },
    /// `h = e^{−κ/t}`.
    ExpInv { kappa: f64 },
    /// `h = e^{−ω(t)/t}`.
    ExpOmega { omega: OmegaSpec },
    /// `h = e^{−e^{σ/t}}`.
    DoubleExpInv { sigma: f64 },
    /// `h = e^{−e^{ω(t)/t}}`.
    DoubleExpOmega { omega: OmegaSpec },
    /// `h = t^γ / ω(t)`.
    PowerOverOmega { gamma: f64, omega: OmegaSpec },
}

/// `ln H(t)` together with `H(t)` (which may underflow to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub log_value: f64,
    pub value: f64,
}

impl Primitive {
    fn from_log(log_value: f64) -> Self {
        Primitive { log_value, value: log_value.exp() }
    }
}

impl AbsorptionLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            AbsorptionLaw::Constant { c } => {
                if c >= 0.0 && c.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("constant absorption requires c >= 0, got {c}")))
                }
            }
            AbsorptionLaw::Power { alpha } => {
                if alpha >= 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!("power absorption requires alpha >= 0, got {alpha}")))
                }
            }
            AbsorptionLaw::ExpInv { kappa } => positive("kappa", kappa),
            AbsorptionLaw::DoubleExpInv { sigma } => positive("sigma", sigma),
            AbsorptionLaw::ExpOmega { omega } | AbsorptionLaw::DoubleExpOmega { omega } => omega.validate(),
            AbsorptionLaw::PowerOverOmega { gamma, omega } => {
                if !gamma.is_finite() {
                    return Err(Error::Config("gamma must be finite".into()));
                }
                omega.validate()
            }
        }
    }

    /// The modulus `ω`, for families that carry one.
    pub fn omega(&self) -> Option<OmegaSpec> {
        match *self {
            AbsorptionLaw::ExpOmega { omega }
            | AbsorptionLaw::DoubleExpOmega { omega }
            | AbsorptionLaw::PowerOverOmega { omega, .. } => Some(omega),
            _ => None,
        }
    }

    /// `ln h(t)`. Returns `−∞` where `h` is exactly zero.
    pub fn log_h(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(domain(format!("absorption evaluated at t = {t}")));
        }
        Ok(match *self {
            AbsorptionLaw::Constant { c } => c.ln(),
            AbsorptionLaw::Power { alpha } => alpha * t.ln(),
            AbsorptionLaw::ExpInv { kappa } => -kappa / t,
            AbsorptionLaw::ExpOmega { omega } => -omega.over_t(t)?,
            AbsorptionLaw::DoubleExpInv { sigma } => -(sigma / t).exp(),
            AbsorptionLaw::DoubleExpOmega { omega } => -omega.over_t(t)?.exp(),
            AbsorptionLaw::PowerOverOmega { gamma, omega } => gamma * t.ln() - omega.ln_value(t)?,
        })
    }

    /// `ln h(t e^{−z}) − ln h(t)` for `z ≥ 0`, evaluated without subtracting large numbers.
    pub fn log_h_ratio(&self, t: f64, z: f64) -> Result<f64> {
        if z == 0.0 {
            return Ok(0.0);
        }
        Ok(match *self {
            AbsorptionLaw::Constant { .. } => 0.0,
            AbsorptionLaw::Power { alpha } => -alpha * z,
            AbsorptionLaw::ExpInv { kappa } => -kappa / t * z.exp_m1(),
            AbsorptionLaw::ExpOmega { omega } => -omega.over_t_increment(t, z)?,
            AbsorptionLaw::DoubleExpInv { sigma } => {
                let a = sigma / t;
                -a.exp() * (a * z.exp_m1()).exp_m1()
            }
            AbsorptionLaw::DoubleExpOmega { omega } => {
                let a = omega.over_t(t)?;
                -a.exp() * omega.over_t_increment(t, z)?.exp_m1()
            }
            AbsorptionLaw::PowerOverOmega { gamma, omega } => -gamma * z - omega.ln_increment(t, z)?,
        })
    }

    /// `ln(−d/dz ln h(t e^{−z}))` at `z = 0` for the double-exponential families.
    fn ln_double_exp_slope(&self, t: f64) -> Result<Option<f64>> {
        Ok(match *self {
            AbsorptionLaw::DoubleExpInv { sigma } => Some(sigma / t + (sigma / t).ln()),
            AbsorptionLaw::DoubleExpOmega { omega } => {
                let z = 1e-6;
                Some(omega.over_t(t)? + (omega.over_t_increment(t, z)? / z).ln())
            }
            _ => None,
        })
    }

    /// Exponent `e` such that `h(t) = c t^e` exactly, when the law is a pure power.
    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            AbsorptionLaw::Constant { c } if c > 0.0 => Some(0.0),
            AbsorptionLaw::Power { alpha } => Some(alpha),
            AbsorptionLaw::PowerOverOmega { gamma, omega: OmegaSpec::Const { .. } } => Some(gamma),
            AbsorptionLaw::PowerOverOmega { gamma, omega: OmegaSpec::Power { alpha0 } } => Some(gamma - alpha0),
            _ => None,
        }
    }

    /// `H(t) = ∫₀ᵗ h(s) ds` in log-safe form.
    ///
    /// Pure powers use the closed form. Every other family is integrated after
    /// the substitution `s = t e^{−z}`, which turns the boundary layer at `s → t`
    /// into a layer at `z = 0` and makes the integrand decay at least like `e^{−z}`:
    /// `H(t) = t h(t) ∫₀^∞ exp(ln h(t e^{−z}) − ln h(t) − z) dz`.
    pub fn h_primitive(&self, t: f64) -> Result<Primitive> {
        let log_h = self.log_h(t)?;
        if log_h == f64::NEG_INFINITY {
            return Ok(Primitive { log_value: f64::NEG_INFINITY, value: 0.0 });
        }
        if let Some(e) = self.power_exponent() {
            if e <= -1.0 {
                return Ok(Primitive { log_value: f64::INFINITY, value: f64::INFINITY });
            }
            // H = h(t) t / (e + 1)
            return Ok(Primitive::from_log(log_h + t.ln() - (e + 1.0).ln()));
        }
        let ratio = |z: f64| -> f64 {
            match self.log_h_ratio(t, z) {
                Ok(r) => (r - z).exp(),
                Err(_) => 0.0,
            }
        };
        let mut w0 = 1.0;
        while w0 > 1e-300 && ratio(w0) < (-1.0f64).exp() {
            w0 *= 0.5;
        }
        if w0 <= 1e-300 {
            if let Some(ln_slope) = self.ln_double_exp_slope(t)? {
                // Layer thinner than any representable z: H = t h / slope to double precision.
                return Ok(Primitive::from_log(log_h + t.ln() - ln_slope));
            }
        }
        let est = quadrature::integrate_decaying(ratio, ratio, w0, 1e-10).map_err(|e| match e {
            Error::Numerical { message, partial } => Error::Numerical {
                message: format!("h_primitive at t = {t}: {message}"),
                partial: (log_h + t.ln() + partial.ln()).exp(),
            },
            other => other,
        })?;
        Ok(Primitive::from_log(log_h + t.ln() + est.value.ln()))
    }
}

/// Form of the absorption nonlinearity `g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `g(u) = u^q`.
    PowerQ,
    /// `g(u) = e^u − 1`.
    ExpMinusOne,
}

/// Full problem statement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub dim_n: usize,
    pub m: f64,
    pub q: f64,
    pub nonlinearity: Nonlinearity,
    pub absorption: AbsorptionLaw,
    pub horizon_t: f64,
}

impl ModelSpec {
    pub fn new(
        dim_n: usize,
        m: f64,
        q: f64,
        nonlinearity: Nonlinearity,
        absorption: AbsorptionLaw,
        horizon_t: f64,
    ) -> Result<Self> {
        let spec = ModelSpec { dim_n, m, q, nonlinearity, absorption, horizon_t };
        spec.validate()?;
        Ok(spec)
    }

    /// Power absorption shorthand.
    pub fn power(dim_n: usize, m: f64, q: f64, absorption: AbsorptionLaw, horizon_t: f64) -> Result<Self> {
        Self::new(dim_n, m, q, Nonlinearity::PowerQ, absorption, horizon_t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_n == 0 {
            return Err(Error::Config("dimension must be >= 1".into()));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::Config(format!("m must be positive, got {}", self.m)));
        }
        let n = self.dim_n as f64;
        let m_crit = ((n - 2.0).max(0.0)) / n;
        if self.m < 1.0 && self.m <= m_crit {
            return Err(Error::Config(format!(
                "fast diffusion requires m > (N-2)_+/N = {m_crit}, got {}",
                self.m
            )));
        }
        if self.nonlinearity == Nonlinearity::PowerQ && !(self.q > 1.0 && self.q.is_finite()) {
            return Err(Error::Config(format!("q must exceed 1, got {}", self.q)));
        }
        if !(self.horizon_t > 0.0 && self.horizon_t.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon_t)));
        }
        self.absorption.validate()?;
        check_monotone(&self.absorption, self.horizon_t)
    }

    /// `ℓ = N/(N(m−1)+2)`.
    pub fn ell(&self) -> f64 {
        let n = self.dim_n as f64;
        n / (n * (self.m - 1.0) + 2.0)
    }
}

/// Samples `ln h` on 10³ log-spaced points of `(0, T]` and rejects decreasing laws.
fn check_monotone(law: &AbsorptionLaw, horizon: f64) -> Result<()> {
    let n = 1000;
    let lo = (horizon * 1e-8).ln();
    let hi = horizon.ln();
    let mut prev = f64::NEG_INFINITY;
    for i in 0..n {
        let t = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
        let v = law.log_h(t)?;
        if v.is_nan() {
            return Err(Error::Config(format!("ln h(t) is NaN at t = {t:e}")));
        }
        if v < prev - 1e-12 * prev.abs().max(1.0) {
            return Err(Error::Config(format!(
                "absorption law {law:?} is decreasing near t = {t:e} on (0, {horizon}]"
            )));
        }
        prev = v;
    }
    Ok(())
}

/// Free-function form of [`AbsorptionLaw::log_h`].
pub fn log_h(law: &AbsorptionLaw, t: f64) -> Result<f64> {
    law.log_h(t)
}

/// Free-function form of [`AbsorptionLaw::h_primitive`].
pub fn h_primitive(law: &AbsorptionLaw, t: f64) -> Result<Primitive> {
    law.h_primitive(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictMethod {
    ClosedForm,
    Quadrature,
    Extrapolation,
}

/// Result of an integral-convergence or limit test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub satisfied: bool,
    pub value: f64,
    pub method: VerdictMethod,
    pub note: String,
}

impl ConditionVerdict {
    fn closed(satisfied: bool, value: f64, note: impl Into<String>) -> Self {
        ConditionVerdict { satisfied, value, method: VerdictMethod::ClosedForm, note: note.into() }
    }
}

/// Outcome of the geometric-tail heuristic for `∫₀¹ f(s) ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailExtrapolation {
    pub convergent: bool,
    /// `∫_{ε_min}^1 f`.
    pub partial_integral: f64,
    pub increments: Vec<f64>,
    pub ratios: Vec<f64>,
}

const TAIL_RATIO: f64 = 0.9;

/// Evaluates `∫_ε^1 f(s) ds` on `ε = 10^{−2}, 10^{−4}, …, 10^{−12}` and declares the
/// integral convergent iff successive increments shrink with ratio below 0.9.
/// The integrand must be nonnegative.
pub fn extrapolate_integral<F: Fn(f64) -> f64>(f: F) -> Result<TailExtrapolation> {
    let g = |y: f64| {
        let s = y.exp();
        let v = f(s) * s;
        if v.is_nan() {
            0.0
        } else {
            v
        }
    };
    let head = quadrature::integrate(g, (1e-2f64).ln(), 0.0, 1e-10, 0.0)?.value;
    let mut increments = Vec::new();
    for j in 1..6 {
        let hi = (10f64.powi(-2 * j)).ln();
        let lo = (10f64.powi(-2 * (j + 1))).ln();
        let inc = match quadrature::integrate(g, lo, hi, 1e-10, 0.0) {
            Ok(e) => e.value,
            Err(Error::Numerical { partial, .. }) if partial.is_infinite() => f64::INFINITY,
            Err(e) => return Err(e),
        };
        increments.push(inc);
    }
    let ratios: Vec<f64> = increments
        .windows(2)
        .map(|w| {
            if w[1] == 0.0 {
                0.0
            } else if w[0] == 0.0 || !w[0].is_finite() {
                f64::INFINITY
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    let convergent = head.is_finite() && ratios.iter().all(|&r| r < TAIL_RATIO);
    let partial_integral = head + increments.iter().sum::<f64>();
    Ok(TailExtrapolation { convergent, partial_integral, increments, ratios })
}

fn extrapolation_verdict(tail: &TailExtrapolation, what: &str) -> ConditionVerdict {
    let low_confidence = tail.ratios.iter().any(|&r| (0.5..TAIL_RATIO).contains(&r));
    let mut note = format!(
        "{what}: truncation eps = 1e-2..1e-12 (step 1e-2), increments {:?}, ratios {:?}, threshold {TAIL_RATIO}",
        tail.increments, tail.ratios
    );
    if low_confidence {
        note.push_str("; low confidence: some increment ratios lie in [0.5, 0.9)");
    }
    ConditionVerdict {
        satisfied: tail.convergent,
        value: tail.partial_integral,
        method: VerdictMethod::Extrapolation,
        note,
    }
}

/// `∫₀¹ √ω(s)/s ds < ∞`.
pub fn dini_sqrt(omega: &OmegaSpec) -> ConditionVerdict {
    match *omega {
        OmegaSpec::Const { kappa0 } => ConditionVerdict::closed(
            false,
            f64::INFINITY,
            format!("constant omega = {kappa0}: integrand sqrt(kappa0)/s diverges logarithmically"),
        ),
        OmegaSpec::Power { alpha0 } if alpha0 > 0.0 => ConditionVerdict::closed(
            true,
            2.0 / alpha0,
            format!("power omega: integral of s^(alpha0/2 - 1) equals 2/alpha0 = {}", 2.0 / alpha0),
        ),
        OmegaSpec::Power { .. } => {
            ConditionVerdict::closed(false, f64::INFINITY, "power omega with alpha0 = 0 is constant: divergent")
        }
        OmegaSpec::LogPower { beta } => {
            let hypothesis = log_power_hypothesis_note(beta);
            if beta > 2.0 {
                ConditionVerdict::closed(
                    true,
                    2.0 / (beta - 2.0),
                    format!("log-power omega: integral of y^(-beta/2) over [1, inf) equals 2/(beta-2); {hypothesis}"),
                )
            } else {
                ConditionVerdict::closed(
                    false,
                    f64::INFINITY,
                    format!("log-power omega: divergent for beta <= 2; {hypothesis}"),
                )
            }
        }
    }
}

fn log_power_hypothesis_note(beta: f64) -> String {
    if beta >= 1.0 {
        format!(
            "omega(s) >= s^alpha0 with alpha0 < 1 fails for s near 1 since beta = {beta} >= 1; the localization hypotheses are not literally met"
        )
    } else {
        format!("omega(s) >= s^alpha0 holds on (0,1] with alpha0 = beta = {beta}")
    }
}

/// `θ = (m²−1)/([N(m−1)+2(m+1)](q−1))`.
pub fn theta_exponent(m: f64, q: f64, dim_n: usize) -> Result<f64> {
    if m <= 1.0 {
        return Err(domain(format!("theta exponent requires m > 1, got {m}")));
    }
    if q <= m {
        return Err(domain(format!("theta exponent requires q > m, got q = {q}, m = {m}")));
    }
    let n = dim_n as f64;
    Ok((m * m - 1.0) / ((n * (m - 1.0) + 2.0 * (m + 1.0)) * (q - 1.0)))
}

/// `∫₀¹ ω^θ(s) ds/s < ∞` for the slow-diffusion localization regime.
pub fn dini_theta(omega: &OmegaSpec, m: f64, q: f64, dim_n: usize) -> Result<ConditionVerdict> {
    let theta = theta_exponent(m, q, dim_n)?;
    let tag = format!("theta = {theta}");
    Ok(match *omega {
        OmegaSpec::Const { .. } => {
            ConditionVerdict::closed(false, f64::INFINITY, format!("{tag}; constant integrand over ds/s diverges"))
        }
        OmegaSpec::Power { alpha0 } if alpha0 > 0.0 => ConditionVerdict::closed(
            true,
            1.0 / (alpha0 * theta),
            format!("{tag}; integral of s^(alpha0*theta - 1) equals 1/(alpha0*theta)"),
        ),
        OmegaSpec::Power { .. } => {
            ConditionVerdict::closed(false, f64::INFINITY, format!("{tag}; alpha0 = 0 gives a constant omega"))
        }
        OmegaSpec::LogPower { beta } => {
            let bt = beta * theta;
            if bt > 1.0 {
                ConditionVerdict::closed(true, 1.0 / (bt - 1.0), format!("{tag}; beta*theta = {bt} > 1"))
            } else {
                ConditionVerdict::closed(false, f64::INFINITY, format!("{tag}; beta*theta = {bt} <= 1"))
            }
        }
    })
}

/// Power-law existence threshold `(N(q−m)−2)/(N(m−1)+2)`: `h = O(t^α)` admits fundamental
/// solutions iff `α` exceeds it.
pub fn power_existence_threshold(dim_n: usize, m: f64, q: f64) -> f64 {
    let n = dim_n as f64;
    (n * (q - m) - 2.0) / (n * (m - 1.0) + 2.0)
}

/// Existence of fundamental solutions `u_k` for every `k > 0`.
pub fn existence_check(spec: &ModelSpec) -> ConditionVerdict {
    match spec.nonlinearity {
        Nonlinearity::PowerQ => power_existence(spec),
        Nonlinearity::ExpMinusOne if spec.m == 1.0 => exp_existence(spec),
        Nonlinearity::ExpMinusOne => ConditionVerdict::closed(
            false,
            f64::NAN,
            format!("no existence criterion for exponential absorption with m = {} != 1", spec.m),
        ),
    }
}

fn power_existence(spec: &ModelSpec) -> ConditionVerdict {
    let n = spec.dim_n as f64;
    let ell = spec.ell();
    let criterion = if spec.m == 1.0 {
        "heat-kernel integrability of h (kE)^q, equivalently int_0^1 h(t) t^(-N(q-1)/2) dt < inf"
    } else {
        "Barenblatt integrability int_0^1 h(t) t^(l - l q) dt < inf"
    };
    if spec.m < 1.0 && 2.0 * spec.q / (1.0 - spec.m) <= n {
        return ConditionVerdict::closed(
            false,
            f64::INFINITY,
            format!("{criterion}: fast-diffusion tail B_k^q is not integrable in space (2q/(1-m) <= N)"),
        );
    }
    let law = spec.absorption;
    let exponent = ell * (1.0 - spec.q);
    let threshold = power_existence_threshold(spec.dim_n, spec.m, spec.q);
    let quad = extrapolate_integral(|t| match law.log_h(t) {
        Ok(lh) => (lh + exponent * t.ln()).exp(),
        Err(_) => f64::NAN,
    });
    let quad_note = match &quad {
        Ok(tail) => format!(
            "direct quadrature of the time integral: partial value {:e}, convergent = {}",
            tail.partial_integral, tail.convergent
        ),
        Err(e) => format!("direct quadrature failed: {e}"),
    };
    if let Some(alpha) = law.power_exponent() {
        return ConditionVerdict::closed(
            alpha > threshold,
            threshold,
            format!("{criterion}: h ~ t^{alpha}, threshold (N(q-m)-2)/(N(m-1)+2) = {threshold}; {quad_note}"),
        );
    }
    let super_decaying = matches!(
        law,
        AbsorptionLaw::ExpInv { .. }
            | AbsorptionLaw::ExpOmega { .. }
            | AbsorptionLaw::DoubleExpInv { .. }
            | AbsorptionLaw::DoubleExpOmega { .. }
    );
    if super_decaying {
        return ConditionVerdict::closed(
            true,
            quad.as_ref().map(|t| t.partial_integral).unwrap_or(f64::NAN),
            format!("{criterion}: h vanishes faster than any power at t = 0; {quad_note}"),
        );
    }
    match quad {
        Ok(tail) => extrapolation_verdict(&tail, criterion),
        Err(e) => ConditionVerdict {
            satisfied: false,
            value: f64::NAN,
            method: VerdictMethod::Extrapolation,
            note: format!("{criterion}: {e}"),
        },
    }
}

fn exp_existence(spec: &ModelSpec) -> ConditionVerdict {
    let half_n = spec.dim_n as f64 / 2.0;
    let mut samples = Vec::new();
    for j in 1..=6 {
        let t = 10f64.powi(-j);
        let v = match spec.absorption.log_h(t) {
            Ok(lh) => t.powf(half_n) * lh,
            Err(_) => f64::NAN,
        };
        samples.push(v);
    }
    let decreasing = samples.windows(2).all(|w| w[1] < w[0] || w[1] == f64::NEG_INFINITY);
    let first = samples[0];
    let last = *samples.last().expect("six samples");
    let diverging = last == f64::NEG_INFINITY || (first < 0.0 && last <= 10.0 * first);
    ConditionVerdict {
        satisfied: decreasing && diverging,
        value: last,
        method: VerdictMethod::Extrapolation,
        note: format!(
            "lim t^(N/2) ln h(t) = -inf tested on t = 1e-1..1e-6: samples {samples:?}; requires strict decrease and a tenfold growth in magnitude"
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_h_examples() {
        let v = AbsorptionLaw::ExpInv { kappa: 1.0 }.log_h(1.0).unwrap();
        assert_eq!(v, -1.0);
        let v = AbsorptionLaw::DoubleExpInv { sigma: 1.0 }.log_h(0.1).unwrap();
        assert!((v + 10f64.exp()).abs() < 1e-9);
        assert!((v + 22026.4658).abs() < 1e-4);
        let v = AbsorptionLaw::Power { alpha: 2.0 }.log_h(0.5).unwrap();
        assert!((v + 1.386294).abs() < 1e-6);
    }

    #[test]
    fn log_h_rejects_nonpositive_time() {
        assert!(matches!(AbsorptionLaw::Constant { c: 1.0 }.log_h(0.0), Err(Error::Domain(_))));
        assert!(matches!(AbsorptionLaw::Constant { c: 1.0 }.log_h(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn double_exponential_is_representable_where_h_underflows() {
        let law = AbsorptionLaw::DoubleExpInv { sigma: 1.0 };
        let lh = law.log_h(0.01).unwrap();
        assert!(lh.is_finite() && lh < -1e40);
        let p = law.h_primitive(0.01).unwrap();
        assert!(p.log_value.is_finite());
        assert_eq!(p.value, 0.0);
        // Laplace: H ≈ h / (ln h)' = h t² / (σ e^{σ/t})
        let t: f64 = 0.01;
        let laplace = lh + 2.0 * t.ln() - (1.0 / t);
        assert!((p.log_value - laplace).abs() / laplace.abs() < 1e-12);
        // Boundary layer thinner than 1e-300.
        let t: f64 = 1.0 / 700.0;
        let p = law.h_primitive(t).unwrap();
        let laplace = law.log_h(t).unwrap() + 2.0 * t.ln() - 1.0 / t;
        assert!((p.log_value - laplace).abs() / laplace.abs() < 1e-12);
        let law = AbsorptionLaw::DoubleExpOmega { omega: OmegaSpec::LogPower { beta: 0.1 } };
        let p = law.h_primitive(0.033).unwrap();
        assert!(p.log_value.is_finite() && p.log_value < law.log_h(0.033).unwrap());
    }

    #[test]
    fn log_power_increment_has_no_cancellation() {
        let w = OmegaSpec::LogPower { beta: 2.0 };
        let t: f64 = 0.01;
        let z = 1e-12;
        let y = 1.0 - t.ln();
        // d/dz at 0 of (y + z)^{−β} e^z / t is y^{−β}(1 − β/y)/t.
        let slope = y.powf(-2.0) * (1.0 - 2.0 / y) / t;
        let inc = w.over_t_increment(t, z).unwrap();
        assert!((inc / z - slope).abs() < 1e-9 * slope);
    }

    #[test]
    fn h_primitive_closed_forms() {
        let p = AbsorptionLaw::Constant { c: 1.0 }.h_primitive(2.0).unwrap();
        assert!((p.value - 2.0).abs() < 1e-15);
        let p = AbsorptionLaw::Power { alpha: 1.0 }.h_primitive(1.0).unwrap();
        assert!((p.value - 0.5).abs() < 1e-15);
        let p = AbsorptionLaw::Constant { c: 0.0 }.h_primitive(1.0).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.log_value, f64::NEG_INFINITY);
    }

    #[test]
    fn omega_power_bound_holds_with_equality() {
        let w = OmegaSpec::Power { alpha0: 0.3 };
        for &s in &[1e-6, 1e-3, 0.5, 1.0] {
            assert!((w.value(s).unwrap() - s.powf(0.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn dini_sqrt_examples() {
        assert!(dini_sqrt(&OmegaSpec::Power { alpha0: 0.5 }).satisfied);
        assert_eq!(dini_sqrt(&OmegaSpec::Power { alpha0: 0.5 }).value, 4.0);
        assert!(!dini_sqrt(&OmegaSpec::Const { kappa0: 1.0 }).satisfied);
        assert!(!dini_sqrt(&OmegaSpec::LogPower { beta: 2.0 }).satisfied);
        assert!(dini_sqrt(&OmegaSpec::LogPower { beta: 3.0 }).satisfied);
        assert!(dini_sqrt(&OmegaSpec::LogPower { beta: 3.0 }).note.contains("not literally met"));
    }

    #[test]
    fn dini_sqrt_closed_form_matches_extrapolation() {
        // Power family: the heuristic must agree with the closed form.
        let w = OmegaSpec::Power { alpha0: 0.5 };
        let tail = extrapolate_integral(|s| w.value(s).unwrap().sqrt() / s).unwrap();
        assert!(tail.convergent);
        assert!((tail.partial_integral - 4.0).abs() < 1e-2);
        let w = OmegaSpec::Const { kappa0: 1.0 };
        let tail = extrapolate_integral(|s| w.value(s).unwrap().sqrt() / s).unwrap();
        assert!(!tail.convergent);
    }

    #[test]
    fn dini_theta_examples() {
        let th = theta_exponent(2.0, 3.0, 1).unwrap();
        assert!((th - 3.0 / 14.0).abs() < 1e-15);
        assert!((th - 0.214286).abs() < 1e-6);
        let v = dini_theta(&OmegaSpec::Power { alpha0: 0.2 }, 2.0, 3.0, 1).unwrap();
        assert!(v.satisfied);
        assert!(v.note.contains("theta"));
        let v = dini_theta(&OmegaSpec::Const { kappa0: 1.0 }, 2.0, 3.0, 1).unwrap();
        assert!(!v.satisfied);
        assert!(matches!(dini_theta(&OmegaSpec::Const { kappa0: 1.0 }, 1.0, 3.0, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn existence_examples() {
        let spec = ModelSpec::power(1, 2.0, 3.0, AbsorptionLaw::Power { alpha: 0.0 }, 1.0).unwrap();
        let v = existence_check(&spec);
        assert!(v.satisfied);
        assert!((v.value + 1.0 / 3.0).abs() < 1e-15);

        let spec = ModelSpec::new(2, 1.0, 2.0, Nonlinearity::ExpMinusOne, AbsorptionLaw::DoubleExpInv { sigma: 1.0 }, 1.0)
            .unwrap();
        assert!(existence_check(&spec).satisfied);

        let spec = ModelSpec::new(2, 1.0, 2.0, Nonlinearity::ExpMinusOne, AbsorptionLaw::Constant { c: 1.0 }, 1.0).unwrap();
        assert!(!existence_check(&spec).satisfied);
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::power(3, 0.2, 2.0, AbsorptionLaw::Constant { c: 1.0 }, 1.0).is_err());
        assert!(ModelSpec::power(3, 0.5, 2.0, AbsorptionLaw::Constant { c: 1.0 }, 1.0).is_ok());
        assert!(ModelSpec::power(1, 2.0, 1.0, AbsorptionLaw::Constant { c: 1.0 }, 1.0).is_err());
        assert!(ModelSpec::power(1, 2.0, 2.0, AbsorptionLaw::Constant { c: 1.0 }, 0.0).is_err());
        // t^γ/ω with γ < α₀ decreases.
        let law = AbsorptionLaw::PowerOverOmega { gamma: 0.1, omega: OmegaSpec::Power { alpha0: 0.5 } };
        assert!(ModelSpec::power(1, 2.0, 3.0, law, 1.0).is_err());
    }

    #[test]
    fn config_block_shape() {
        let law: AbsorptionLaw =
            serde_json::from_str(r#"{"family": "exp_omega", "omega": {"family": "power", "alpha0": 0.5}}"#).unwrap();
        assert_eq!(law, AbsorptionLaw::ExpOmega { omega: OmegaSpec::Power { alpha0: 0.5 } });
        assert_eq!(
            serde_json::to_string(&law).unwrap(),
            r#"{"family":"exp_omega","omega":{"family":"power","alpha0":0.5}}"#
        );
        assert!(serde_json::from_str::<AbsorptionLaw>(r#"{"family": "exp_inv", "kappa": 1, "extra": 0}"#).is_err());
        let law: AbsorptionLaw =
            serde_json::from_str(r#"{"family": "power_over_omega", "gamma": 1, "omega": {"family": "log_power", "beta": 3}}"#)
                .unwrap();
        assert!(matches!(law, AbsorptionLaw::PowerOverOmega { .. }));
    }
}
