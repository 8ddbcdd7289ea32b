//! Reaction kinetics: the nondecreasing nonlinearity `beta` with `beta(0) = 0`,
//! its regularizations (mollified and truncated variants) and the growth
//! functions `G`, `Psi` used for the dead-core proximity bound.
//!
//! All kinetics are defined on the whole real line by odd extension of the
//! `s >= 0` branch; solvers only probe `[0, 1]`. Derivatives may be infinite
//! at the origin (root-type kinetics); the sentinel `f64::INFINITY` is
//! propagated, never clamped — consumers cap it explicitly.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, dyadic_singular_integral};

/// Smoothness of a kinetic, as relevant to the differentiability theory:
/// `W^{2,inf}` kinetics give Frechet shape derivatives, `W^{1,inf}` only
/// Gateaux, and kinetics singular at 0 may develop a dead core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothnessClass {
    TwiceSmooth,
    Lipschitz,
    SingularAtZero,
}

#[derive(Debug, Clone)]
enum Form {
    /// beta(s) = slope * s
    Linear { slope: f64 },
    /// beta(s) = lambda |s|^{q-1} s, 0 < q < 1
    Root { lambda: f64, q: f64 },
    /// beta(s) = slope * max(0, s - knee) for s >= 0, odd extension
    Ramp { slope: f64, knee: f64 },
    /// Moving average of `base` over a window of half-width `delta`:
    /// beta_n(s) = (B(s + delta) - B(s - delta)) / (2 delta)
    Mollified { base: Box<Form>, delta: f64 },
    /// beta_m' = min(m, beta'), beta_m(0) = 0, closed form for root type.
    /// `s_star` is the matching point where beta'(s_star) = m.
    TruncatedRoot { lambda: f64, q: f64, m: f64, s_star: f64 },
    /// Generic truncation, integrated numerically.
    TruncatedNumeric { base: Box<Form>, m: f64 },
}

impl Form {
    /// Value on the nonnegative branch (callers handle the odd extension).
    fn value_pos(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match self {
            Form::Linear { slope } => slope * s,
            Form::Root { lambda, q } => lambda * s.powf(*q),
            Form::Ramp { slope, knee } => slope * (s - knee).max(0.0),
            Form::Mollified { base, delta } => {
                (base.antiderivative_abs(s + delta) - base.antiderivative_abs(s - delta))
                    / (2.0 * delta)
            }
            Form::TruncatedRoot { lambda, q, m, s_star } => {
                if s <= *s_star {
                    m * s
                } else {
                    // constant offset so the two branches match at s_star
                    lambda * s.powf(*q) - (lambda * s_star.powf(*q) - m * s_star)
                }
            }
            Form::TruncatedNumeric { base, m } => {
                adaptive_simpson(&|t| base.derivative_pos(t).min(*m), 0.0, s, 1e-13)
            }
        }
    }

    /// Derivative on the positive branch; `f64::INFINITY` allowed at 0.
    fn derivative_pos(&self, s: f64) -> f64 {
        debug_assert!(s >= 0.0);
        match self {
            Form::Linear { slope } => *slope,
            Form::Root { lambda, q } => {
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    lambda * q * s.powf(q - 1.0)
                }
            }
            Form::Ramp { slope, knee } => {
                if s >= *knee {
                    *slope
                } else {
                    0.0
                }
            }
            Form::Mollified { base, delta } => {
                (base.value_signed(s + delta) - base.value_signed(s - delta)) / (2.0 * delta)
            }
            Form::TruncatedRoot { lambda, q, m, s_star } => {
                if s <= *s_star {
                    *m
                } else {
                    lambda * q * s.powf(q - 1.0)
                }
            }
            Form::TruncatedNumeric { base, m } => base.derivative_pos(s).min(*m),
        }
    }

    fn value_signed(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.value_pos(s)
        } else {
            -self.value_pos(-s)
        }
    }

    /// B(t) = int_0^t beta, extended evenly (beta odd => B even). Accepts any
    /// sign and evaluates at |t|.
    fn antiderivative_abs(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            Form::Linear { slope } => 0.5 * slope * t * t,
            Form::Root { lambda, q } => lambda * t.powf(q + 1.0) / (q + 1.0),
            Form::Ramp { slope, knee } => {
                let e = (t - knee).max(0.0);
                0.5 * slope * e * e
            }
            Form::Mollified { base, delta } => {
                // C(x) = int_0^x B is odd since B is even.
                let c = |x: f64| base.double_antiderivative(x);
                (c(t + delta) - c(t - delta) - 2.0 * c(*delta)) / (2.0 * delta)
            }
            Form::TruncatedRoot { lambda, q, m, s_star } => {
                if t <= *s_star {
                    0.5 * m * t * t
                } else {
                    let gap = lambda * s_star.powf(*q) - m * s_star;
                    0.5 * m * s_star * s_star
                        + lambda * (t.powf(q + 1.0) - s_star.powf(q + 1.0)) / (q + 1.0)
                        - gap * (t - s_star)
                }
            }
            Form::TruncatedNumeric { .. } => {
                adaptive_simpson(&|s| self.value_pos(s), 0.0, t, 1e-13)
            }
        }
    }

    /// C(x) = int_0^x B(t) dt (odd function), needed by `Mollified`.
    fn double_antiderivative(&self, x: f64) -> f64 {
        let sign = if x >= 0.0 { 1.0 } else { -1.0 };
        let x = x.abs();
        let c = match self {
            Form::Linear { slope } => slope * x * x * x / 6.0,
            Form::Ramp { slope, knee } => {
                let e = (x - knee).max(0.0);
                slope * e * e * e / 6.0
            }
            _ => adaptive_simpson(&|t| self.antiderivative_abs(t), 0.0, x, 1e-13),
        };
        sign * c
    }
}

/// A reaction kinetic: value, (extended-real) derivative and antiderivative,
/// together with its smoothness classification.
#[derive(Debug, Clone)]
pub struct Kinetic {
    form: Form,
    pub smoothness_class: SmoothnessClass,
    /// `||beta'||_inf` when finite.
    pub lipschitz_bound: Option<f64>,
    /// Named construction parameters, echoed into reports.
    pub params: BTreeMap<String, f64>,
}

impl Kinetic {
    /// beta(s), odd in s.
    pub fn value(&self, s: f64) -> f64 {
        self.form.value_signed(s)
    }

    /// beta'(s); returns `f64::INFINITY` where the derivative blows up.
    pub fn derivative(&self, s: f64) -> f64 {
        self.form.derivative_pos(s.abs())
    }

    /// B(t) = int_0^t beta (even in t).
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.form.antiderivative_abs(t)
    }

    /// beta(1), the natural scale of admissible sources.
    pub fn beta_one(&self) -> f64 {
        self.value(1.0)
    }

    fn with_params(form: Form, class: SmoothnessClass, bound: Option<f64>, params: &[(&str, f64)]) -> Kinetic {
        Kinetic {
            form,
            smoothness_class: class,
            lipschitz_bound: bound,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

/// Root-type kinetic beta(s) = lambda |s|^{q-1} s with 0 < q < 1.
pub fn make_root_kinetic(lambda: f64, q: f64) -> Result<Kinetic> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q}")));
    }
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    Ok(Kinetic::with_params(
        Form::Root { lambda, q },
        SmoothnessClass::SingularAtZero,
        None,
        &[("lambda", lambda), ("q", q)],
    ))
}

/// Piecewise-linear Lipschitz kinetic beta(s) = slope * max(0, s - knee).
///
/// In `W^{1,inf}` but not `C^1`: exercises the Gateaux-only regime.
pub fn make_lipschitz_ramp(slope: f64, knee: f64) -> Result<Kinetic> {
    if slope <= 0.0 {
        return Err(Error::InvalidParameter(format!("slope must be positive, got {slope}")));
    }
    if !(knee > 0.0 && knee < 1.0) {
        return Err(Error::InvalidParameter(format!("knee must lie in (0,1), got {knee}")));
    }
    Ok(Kinetic::with_params(
        Form::Ramp { slope, knee },
        SmoothnessClass::Lipschitz,
        Some(slope),
        &[("slope", slope), ("knee", knee)],
    ))
}

/// Smooth linear kinetic beta(s) = slope * s.
pub fn make_linear(slope: f64) -> Result<Kinetic> {
    if slope <= 0.0 {
        return Err(Error::InvalidParameter(format!("slope must be positive, got {slope}")));
    }
    Ok(Kinetic::with_params(
        Form::Linear { slope },
        SmoothnessClass::TwiceSmooth,
        Some(slope),
        &[("slope", slope)],
    ))
}

/// `C^1`-with-Lipschitz-derivative approximant `beta_n` of a Lipschitz
/// kinetic, built as the moving average of `beta` over a window of half-width
/// `1/n`. Returns the approximant together with its certified sup-gap
/// `||beta_n - beta||_inf` (exact `slope/(4n)` for the ramp, bounded by
/// `L/(2n)` in general).
pub fn mollify(kin: &Kinetic, n: u32) -> Result<(Kinetic, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("mollification index n must be positive".into()));
    }
    let bound = kin.lipschitz_bound.ok_or(Error::UnboundedDerivative)?;
    let delta = 1.0 / n as f64;
    let gap = match &kin.form {
        // Moving average of a linear function is the function itself.
        Form::Linear { .. } => return Ok((kin.clone(), 0.0)),
        Form::Mollified { .. } => return Ok((kin.clone(), 0.0)),
        // Exact sup-gap of the averaged ramp, attained at the knee.
        Form::Ramp { slope, .. } => slope * delta / 4.0,
        _ => 0.5 * bound * delta,
    };
    let mut params = kin.params.clone();
    params.insert("mollify_n".into(), n as f64);
    Ok((
        Kinetic {
            form: Form::Mollified { base: Box::new(kin.form.clone()), delta },
            smoothness_class: SmoothnessClass::TwiceSmooth,
            lipschitz_bound: Some(bound),
            params,
        },
        gap,
    ))
}

/// Truncated kinetic with `beta_m'(s) = min(m, beta'(s))` and `beta_m(0) = 0`.
pub fn truncate(kin: &Kinetic, m: f64) -> Result<Kinetic> {
    if m <= 0.0 {
        return Err(Error::InvalidParameter(format!("truncation level m must be positive, got {m}")));
    }
    let mut params = kin.params.clone();
    params.insert("truncate_m".into(), m);
    let (form, class) = match &kin.form {
        Form::Root { lambda, q } => {
            let s_star = (lambda * q / m).powf(1.0 / (1.0 - q));
            (Form::TruncatedRoot { lambda: *lambda, q: *q, m, s_star }, SmoothnessClass::TwiceSmooth)
        }
        Form::Linear { slope } => (Form::Linear { slope: slope.min(m) }, SmoothnessClass::TwiceSmooth),
        Form::Ramp { slope, knee } => {
            (Form::Ramp { slope: slope.min(m), knee: *knee }, SmoothnessClass::Lipschitz)
        }
        other => (Form::TruncatedNumeric { base: Box::new(other.clone()), m }, SmoothnessClass::Lipschitz),
    };
    Ok(Kinetic {
        form,
        smoothness_class: class,
        lipschitz_bound: Some(kin.lipschitz_bound.map_or(m, |b| b.min(m))),
        params,
    })
}

/// Closed-form sup-gap of the root-type truncation, `||beta_m - beta||_inf`,
/// attained at and beyond the matching point `s* = (lambda q / m)^{1/(1-q)}`.
pub fn root_truncation_gap(lambda: f64, q: f64, m: f64) -> f64 {
    let s_star = (lambda * q / m).powf(1.0 / (1.0 - q));
    lambda * s_star.powf(q) - m * s_star
}

/// Dead-core comparison functions `G(t) = sqrt(2 (B(t) + alpha t))` and
/// `Psi(s) = int_0^s dt / G(t)`, with the monotone inverse of `Psi`.
#[derive(Debug, Clone)]
pub struct GrowthFunctions {
    pub alpha: f64,
    kin: Kinetic,
    /// Closed-form exponent data for root kinetics with alpha = 0.
    closed_root: Option<(f64, f64)>,
    /// Monotone (s, Psi(s)) table for the quadrature path.
    table: Vec<(f64, f64)>,
    psi_one: f64,
}

const TABLE_S_MAX: f64 = 2.0;

/// Build the growth functions, verifying that `1/G` is integrable at `0+`.
pub fn growth_functions(kin: &Kinetic, alpha: f64) -> Result<GrowthFunctions> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    if let (Form::Root { lambda, q }, true) = (&kin.form, alpha == 0.0) {
        let gf = GrowthFunctions {
            alpha,
            kin: kin.clone(),
            closed_root: Some((*lambda, *q)),
            table: Vec::new(),
            psi_one: 0.0,
        };
        let psi_one = gf.psi(1.0);
        return Ok(GrowthFunctions { psi_one, ..gf });
    }
    // Quadrature path. Integrability at 0+ is checked on (0, s0].
    let g = make_g(kin, alpha);
    let s0 = 1e-6f64;
    let head = dyadic_singular_integral(&|t| 1.0 / g(t), s0, 1e-12)?;
    // Cumulative table on a geometric grid up to TABLE_S_MAX.
    let n = 2400usize;
    let mut table = Vec::with_capacity(n + 1);
    table.push((s0, head));
    let ratio = (TABLE_S_MAX / s0).powf(1.0 / n as f64);
    let mut s_prev = s0;
    let mut acc = head;
    for k in 1..=n {
        let s_next = s0 * ratio.powi(k as i32);
        acc += adaptive_simpson(&|t| 1.0 / g(t), s_prev, s_next, 1e-13);
        table.push((s_next, acc));
        s_prev = s_next;
    }
    let gf = GrowthFunctions { alpha, kin: kin.clone(), closed_root: None, table, psi_one: 0.0 };
    let psi_one = gf.psi(1.0);
    Ok(GrowthFunctions { psi_one, ..gf })
}

fn make_g(kin: &Kinetic, alpha: f64) -> impl Fn(f64) -> f64 + '_ {
    move |t: f64| (2.0 * (kin.antiderivative(t) + alpha * t)).sqrt()
}

impl GrowthFunctions {
    pub fn g(&self, t: f64) -> f64 {
        (2.0 * (self.kin.antiderivative(t) + self.alpha * t)).sqrt()
    }

    /// Psi(s) = int_0^s dt / G(t).
    pub fn psi(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if let Some((lambda, q)) = self.closed_root {
            let k = 2.0 / (1.0 - q) * ((1.0 + q) / (2.0 * lambda)).sqrt();
            return k * s.powf(0.5 * (1.0 - q));
        }
        let (s0, head) = self.table[0];
        if s <= s0 {
            // Head panel; re-integrate (cheap, rare).
            return dyadic_singular_integral(&|t| 1.0 / self.g(t), s, 1e-12).unwrap_or(0.0);
        }
        let _ = head;
        // s > s0 here, so the predecessor entry exists.
        let idx = self.table.partition_point(|&(sk, _)| sk < s);
        let (sk, pk) = self.table[idx - 1];
        pk + adaptive_simpson(&|t| 1.0 / self.g(t), sk, s, 1e-13)
    }

    /// Psi(1); the slab dead-core existence threshold.
    pub fn psi_one(&self) -> f64 {
        self.psi_one
    }

    /// Monotone inverse of Psi; values beyond Psi(s_max) clamp to s_max.
    pub fn psi_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if let Some((lambda, q)) = self.closed_root {
            let k = 2.0 / (1.0 - q) * ((1.0 + q) / (2.0 * lambda)).sqrt();
            return (y / k).powf(2.0 / (1.0 - q));
        }
        let (mut lo, mut hi) = (0.0f64, TABLE_S_MAX);
        if y >= self.table.last().unwrap().1 {
            return TABLE_S_MAX;
        }
        // Bracket from the table, then bisect on the interpolated integral.
        let idx = self.table.partition_point(|&(_, pk)| pk < y);
        if idx > 0 {
            lo = self.table[idx - 1].0;
        }
        if idx < self.table.len() {
            hi = self.table[idx].0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.psi(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}
