//! Physical parameters of the two-component gas and the closed-form moments
//! of the collision and time velocity processes.
//!
//! A heavy test particle of mass `m_p` starts with velocity `V0 ~ N(0, sigma0_sq)`
//! and collides elastically with bath particles of mass `m_q` whose velocities
//! are i.i.d. `N(0, sigmax_sq)`. One collision maps `v` to `c*v + x` with the
//! restitution coefficient `c = (m_p - m_q) / (m_p + m_q)`. Collisions arrive
//! as a Poisson process of rate `lambda`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Velocity-retention fraction of one elastic collision, `(m_p - m_q)/(m_p + m_q)`.
///
/// Requires `m_p >= m_q > 0`, so the result lies in `[0, 1)`.
pub fn restitution_coefficient(m_p: f64, m_q: f64) -> Result<f64> {
    if !(m_q > 0.0) || !m_q.is_finite() {
        return Err(Error::param("m_q", format!("mass must be positive and finite, got {m_q}")));
    }
    if !(m_p > 0.0) || !m_p.is_finite() {
        return Err(Error::param("m_p", format!("mass must be positive and finite, got {m_p}")));
    }
    if m_p < m_q {
        return Err(Error::param(
            "m_p",
            format!("model requires m_p >= m_q, got m_p = {m_p} < m_q = {m_q}"),
        ));
    }
    Ok((m_p - m_q) / (m_p + m_q))
}

/// Masses, variances and collision rate of the model.
///
/// The restitution coefficient is always derived from the masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawGasParams", into = "RawGasParams")]
pub struct GasParams {
    m_p: f64,
    m_q: f64,
    sigma0_sq: f64,
    sigmax_sq: f64,
    lambda: f64,
    c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGasParams {
    m_p: f64,
    m_q: f64,
    sigma0_sq: f64,
    sigmax_sq: f64,
    lambda: f64,
}

impl TryFrom<RawGasParams> for GasParams {
    type Error = Error;

    fn try_from(r: RawGasParams) -> Result<Self> {
        GasParams::new(r.m_p, r.m_q, r.sigma0_sq, r.sigmax_sq, r.lambda)
    }
}

impl From<GasParams> for RawGasParams {
    fn from(p: GasParams) -> Self {
        RawGasParams {
            m_p: p.m_p,
            m_q: p.m_q,
            sigma0_sq: p.sigma0_sq,
            sigmax_sq: p.sigmax_sq,
            lambda: p.lambda,
        }
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("must be positive and finite, got {value}")))
    }
}

impl GasParams {
    pub fn new(m_p: f64, m_q: f64, sigma0_sq: f64, sigmax_sq: f64, lambda: f64) -> Result<Self> {
        let c = restitution_coefficient(m_p, m_q)?;
        positive("sigma0_sq", sigma0_sq)?;
        positive("sigmax_sq", sigmax_sq)?;
        positive("lambda", lambda)?;
        Ok(GasParams {
            m_p,
            m_q,
            sigma0_sq,
            sigmax_sq,
            lambda,
            c,
        })
    }

    /// Builds parameters from a target restitution coefficient, with `m_q = 1`.
    pub fn with_restitution(c: f64, sigma0_sq: f64, sigmax_sq: f64, lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::param("c", format!("restitution must lie in [0, 1), got {c}")));
        }
        let m_p = (1.0 + c) / (1.0 - c);
        let mut p = GasParams::new(m_p, 1.0, sigma0_sq, sigmax_sq, lambda)?;
        // (1+c)/(1-c) can round; keep the requested c bit-exact
        p.c = c;
        Ok(p)
    }

    pub fn m_p(&self) -> f64 {
        self.m_p
    }
    pub fn m_q(&self) -> f64 {
        self.m_q
    }
    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }
    pub fn sigmax_sq(&self) -> f64 {
        self.sigmax_sq
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Copy with a different initial variance.
    pub fn with_sigma0_sq(&self, sigma0_sq: f64) -> Result<Self> {
        positive("sigma0_sq", sigma0_sq)?;
        Ok(GasParams { sigma0_sq, ..*self })
    }

    /// Copy with a different collision rate.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        Ok(GasParams { lambda, ..*self })
    }

    /// Relaxation rate of the variance, `lambda * (1 - c^2)`.
    pub fn relaxation_rate(&self) -> f64 {
        self.lambda * (1.0 - self.c * self.c)
    }

    pub fn equilibrium_variance(&self) -> f64 {
        self.sigmax_sq / (1.0 - self.c * self.c)
    }
}

/// Limiting Gaussian law shared by both velocity processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumSpec {
    pub mean: f64,
    pub variance: f64,
}

impl EquilibriumSpec {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, v: f64) -> f64 {
        normal_pdf(v, self.variance)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        normal_cdf(v, self.variance)
    }
}

pub fn equilibrium_spec(p: &GasParams) -> EquilibriumSpec {
    EquilibriumSpec {
        mean: 0.0,
        variance: p.equilibrium_variance(),
    }
}

/// Variance of `V_n` after `n` collisions.
pub fn chain_variance(n: u64, p: &GasParams) -> f64 {
    if n == 0 {
        return p.sigma0_sq;
    }
    let c2 = p.c * p.c;
    if c2 == 0.0 {
        return p.sigmax_sq;
    }
    // c^{2n} underflows to 0 for large n, which is the correct limit
    let c2n = c2.powf(n as f64);
    c2n * p.sigma0_sq + p.sigmax_sq * (1.0 - c2n) / (1.0 - c2)
}

/// Variance of `V(t)`: the Poisson average of [`chain_variance`].
pub fn time_variance(t: f64, p: &GasParams) -> f64 {
    let x = p.relaxation_rate() * t;
    let decay = (-x).exp();
    let grown = -(-x).exp_m1();
    p.sigma0_sq * decay + p.equilibrium_variance() * grown
}

/// Centered Gaussian density with the given variance.
pub fn normal_pdf(v: f64, variance: f64) -> f64 {
    (-0.5 * v * v / variance).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Centered Gaussian CDF with the given variance.
pub fn normal_cdf(v: f64, variance: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-v / (2.0 * variance).sqrt())
}
