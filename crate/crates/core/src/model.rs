//! Semilinearity catalog and evaluators for the admissibility assumptions,
//! smallness conditions, and explicit constants of the a-priori estimates.
//!
//! The diffusion strength is `mu(s) = gamma(s) * s` with `gamma` the
//! normalized profile; `big_gamma` and `big_m` are the antiderivatives of
//! `gamma` and `mu` entering the dissipation identities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::RealField;

/// Margin used when a ceiling is reported to the user.
pub const REPORT_MARGIN: f64 = 0.0;
/// Margin used when a ceiling is asserted along a discrete trajectory:
/// the continuum barrier is strict, discretization noise needs slack.
pub const RUNTIME_MARGIN: f64 = 0.05;

/// Density-dependent diffusion strength `mu(s)`, restricted to a closed
/// catalog covering constant, linear, affine, power-degenerate and
/// ramped-profile diffusions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Semilinearity {
    /// `mu(s) = c`, the critical linear diffusion.
    Constant { c: f64 },
    /// `mu(s) = s`.
    Linear,
    /// `mu(s) = s + nu`.
    Affine { nu: f64 },
    /// `mu(s) = s^p` with `p > 1`, degenerate at the origin.
    Power { p: f64 },
    /// `gamma(s) = delta + (1 - delta) * smoothstep((s - y0)/w)`,
    /// `mu(s) = gamma(s) * s`: linearly degenerating with profile ramping
    /// from `delta` up to 1 at `y0 + w`.
    RampedGamma { delta: f64, y0: f64, w: f64 },
}

/// Cubic smoothstep `3t^2 - 2t^3` clamped to [0, 1].
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * (3.0 - 2.0 * t)
    }
}

fn smoothstep_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        6.0 * t * (1.0 - t)
    }
}

impl Semilinearity {
    /// Catalog parameter validation.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSemilinearity(msg));
        match *self {
            Semilinearity::Constant { c } => {
                if !(c >= 0.0) {
                    return bad(format!("constant diffusion c={c} must be >= 0"));
                }
            }
            Semilinearity::Linear => {}
            Semilinearity::Affine { nu } => {
                if !(nu >= 0.0) {
                    return bad(format!("affine shift nu={nu} must be >= 0"));
                }
            }
            Semilinearity::Power { p } => {
                if !(p > 1.0) {
                    return bad(format!("power exponent p={p} must be > 1"));
                }
            }
            Semilinearity::RampedGamma { delta, y0, w } => {
                if !(delta > 0.0 && delta <= 1.0) {
                    return bad(format!("ramp floor delta={delta} must lie in (0, 1]"));
                }
                if !(y0 >= 0.0) {
                    return bad(format!("ramp onset y0={y0} must be >= 0"));
                }
                if !(w > 0.0) {
                    return bad(format!("ramp width w={w} must be > 0"));
                }
            }
        }
        Ok(())
    }

    fn require_nonneg(s: f64) -> Result<()> {
        if s < 0.0 {
            return Err(Error::NegativeDensity(s));
        }
        if !s.is_finite() {
            return Err(Error::NonFinite("semilinearity argument"));
        }
        Ok(())
    }

    /// Diffusion strength `mu(s)`, `s >= 0`.
    pub fn mu(&self, s: f64) -> Result<f64> {
        Self::require_nonneg(s)?;
        Ok(match *self {
            Semilinearity::Constant { c } => c,
            Semilinearity::Linear => s,
            Semilinearity::Affine { nu } => s + nu,
            Semilinearity::Power { p } => s.powf(p),
            Semilinearity::RampedGamma { .. } => self.gamma(s)? * s,
        })
    }

    /// `mu'(s)`, `s >= 0`.
    pub fn mu_prime(&self, s: f64) -> Result<f64> {
        Self::require_nonneg(s)?;
        Ok(match *self {
            Semilinearity::Constant { .. } => 0.0,
            Semilinearity::Linear => 1.0,
            Semilinearity::Affine { .. } => 1.0,
            Semilinearity::Power { p } => p * s.powf(p - 1.0),
            Semilinearity::RampedGamma { delta, y0, w } => {
                let t = (s - y0) / w;
                self.gamma(s)? + s * (1.0 - delta) * smoothstep_prime(t) / w
            }
        })
    }

    /// Normalized profile `gamma(s) = mu(s)/s`. Unbounded at `s = 0` for the
    /// constant and affine kinds.
    pub fn gamma(&self, s: f64) -> Result<f64> {
        Self::require_nonneg(s)?;
        Ok(match *self {
            Semilinearity::Constant { c } => {
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    c / s
                }
            }
            Semilinearity::Linear => 1.0,
            Semilinearity::Affine { nu } => {
                if s == 0.0 {
                    if nu == 0.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    1.0 + nu / s
                }
            }
            Semilinearity::Power { p } => s.powf(p - 1.0),
            Semilinearity::RampedGamma { delta, y0, w } => {
                delta + (1.0 - delta) * smoothstep((s - y0) / w)
            }
        })
    }

    /// Total extension of `mu` used by the time stepper: negative excursions
    /// of the discrete solution see `mu(0)`.
    pub fn mu_clamped(&self, s: f64) -> f64 {
        self.mu(s.max(0.0)).expect("mu on clamped argument")
    }

    /// Total extension of `mu'`, matching [`Self::mu_clamped`].
    pub fn mu_prime_clamped(&self, s: f64) -> f64 {
        self.mu_prime(s.max(0.0)).expect("mu' on clamped argument")
    }

    /// Antiderivative `big_gamma(s) = int_0^s gamma(y) dy`.
    ///
    /// Closed form for the linear and power kinds; adaptive Simpson
    /// quadrature (absolute tolerance 1e-10) for the ramped profile. For the
    /// constant and affine kinds `gamma ~ c/s` is not integrable at the
    /// origin, so the antiderivative is only defined up to a constant; the
    /// branch with `big_gamma(1) = gamma-primitive at 1` is returned
    /// (`c ln s`, resp. `s + nu ln s`), which is the correct object inside
    /// dissipation functionals where only differences and pairings against
    /// mean-free quantities enter. `s = 0` is rejected for those kinds.
    pub fn big_gamma(&self, s: f64) -> Result<f64> {
        Self::require_nonneg(s)?;
        match *self {
            Semilinearity::Constant { c } => {
                if s == 0.0 {
                    Err(Error::AntiderivativeUndefined(
                        "gamma-primitive of the constant kind diverges at 0".into(),
                    ))
                } else {
                    Ok(c * s.ln())
                }
            }
            Semilinearity::Linear => Ok(s),
            Semilinearity::Affine { nu } => {
                if s == 0.0 && nu > 0.0 {
                    Err(Error::AntiderivativeUndefined(
                        "gamma-primitive of the affine kind diverges at 0".into(),
                    ))
                } else if s == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(s + nu * s.ln())
                }
            }
            Semilinearity::Power { p } => Ok(s.powf(p) / p),
            Semilinearity::RampedGamma { .. } => {
                adaptive_simpson(|y| self.gamma(y).expect("gamma"), 0.0, s, 1e-10)
            }
        }
    }

    /// Antiderivative `big_m(s) = int_0^s mu(y) dy`; increasing, vanishes
    /// at 0.
    pub fn big_m(&self, s: f64) -> Result<f64> {
        Self::require_nonneg(s)?;
        match *self {
            Semilinearity::Constant { c } => Ok(c * s),
            Semilinearity::Linear => Ok(0.5 * s * s),
            Semilinearity::Affine { nu } => Ok(0.5 * s * s + nu * s),
            Semilinearity::Power { p } => Ok(s.powf(p + 1.0) / (p + 1.0)),
            Semilinearity::RampedGamma { .. } => {
                adaptive_simpson(|y| self.mu(y).expect("mu"), 0.0, s, 1e-10)
            }
        }
    }
}

/// Adaptive Simpson quadrature with absolute tolerance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> std::result::Result<f64, f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let err = (left + right - whole) / 15.0;
        if err.abs() <= tol {
            return Ok(left + right + err);
        }
        if depth == 0 {
            return Err(err.abs());
        }
        let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }

    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48).map_err(|achieved| {
        Error::QuadratureDiverged {
            achieved,
            requested: tol,
        }
    })
}

/// Parameters of one run of the evolution system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub semilinearity: Semilinearity,
    /// Logistic rate `r >= 0`.
    pub r: f64,
    /// Viscosity `eps >= 0` of the parabolic regularization.
    #[serde(default)]
    pub eps: f64,
    /// Diffusion order in `Lambda^alpha`; 1 is the critical case.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// `false` switches the chemical gradient off (`v = 0` mode).
    #[serde(default = "default_coupling")]
    pub coupling: bool,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_coupling() -> bool {
    true
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.semilinearity.validate()?;
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::Schema(format!("logistic rate r={} must be >= 0", self.r)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Schema(format!("viscosity eps={} must be >= 0", self.eps)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Schema(format!(
                "diffusion order alpha={} outside (0, 1]",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Outcome of an assumption check, evaluated analytically per catalog kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionVerdict {
    pub holds: bool,
    /// Guaranteed lower bound: on `gamma` for the ramp assumption, on `mu`
    /// for the positivity assumption.
    pub delta: f64,
    /// Threshold above which `gamma >= 1` (ramp assumption only).
    pub y0: Option<f64>,
    /// An argument witnessing failure, when the assumption fails.
    pub witness: Option<f64>,
}

/// Ramp assumption: `gamma >= delta > 0` everywhere and `gamma >= 1`
/// beyond a finite threshold, with `mu'` locally bounded.
pub fn check_assumption1(sem: &Semilinearity) -> AssumptionVerdict {
    match *sem {
        Semilinearity::Constant { c } => AssumptionVerdict {
            // gamma(y) = c/y has no positive lower bound and drops below 1
            // past y = c.
            holds: false,
            delta: 0.0,
            y0: None,
            witness: Some(2.0 * c.max(1.0)),
        },
        Semilinearity::Linear => AssumptionVerdict {
            holds: true,
            delta: 1.0,
            y0: Some(0.0),
            witness: None,
        },
        Semilinearity::Affine { .. } => AssumptionVerdict {
            // gamma(y) = 1 + nu/y >= 1.
            holds: true,
            delta: 1.0,
            y0: Some(0.0),
            witness: None,
        },
        Semilinearity::Power { .. } => AssumptionVerdict {
            // gamma(0) = 0 violates the positive floor.
            holds: false,
            delta: 0.0,
            y0: Some(1.0),
            witness: Some(0.0),
        },
        Semilinearity::RampedGamma { delta, y0, w } => AssumptionVerdict {
            holds: true,
            delta,
            y0: Some(y0 + w),
            witness: None,
        },
    }
}

/// Positivity assumption: `mu(x0) = 0` only at `x0 = 0`, with the best
/// uniform lower bound `mu >= delta >= 0`.
pub fn check_assumption2(sem: &Semilinearity) -> AssumptionVerdict {
    match *sem {
        Semilinearity::Constant { c } => AssumptionVerdict {
            holds: c > 0.0,
            delta: c,
            y0: None,
            witness: if c > 0.0 { None } else { Some(1.0) },
        },
        Semilinearity::Linear
        | Semilinearity::Power { .. }
        | Semilinearity::RampedGamma { .. } => AssumptionVerdict {
            holds: true,
            delta: 0.0,
            y0: None,
            witness: None,
        },
        Semilinearity::Affine { nu } => AssumptionVerdict {
            holds: true,
            delta: nu,
            y0: None,
            witness: None,
        },
    }
}

/// `N1 = max(2*pi, ||u0||_L1)`, the mass scale entering the ceilings.
///
/// The L1 norm is the trapezoid (= rectangle) rule of `|u|`; for the
/// nonnegative data the estimates assume, this equals `2*pi <u0>`.
pub fn n1(u0: &RealField) -> f64 {
    let l1: f64 = u0.grid().dx() * u0.values().iter().map(|v| v.abs()).sum::<f64>();
    l1.max(2.0 * PI)
}

/// Outcome of a smallness/largeness condition check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionVerdict {
    pub holds: bool,
    /// Left-hand value of the condition.
    pub lhs: f64,
    /// `lhs - 1`; positive margins mean the strict inequality holds.
    pub margin: f64,
    /// Whether the diffusion floor route `delta > 0` is available.
    pub delta_positive: bool,
    /// Whether the strictly-positive-data route is available.
    pub data_positive: bool,
}

/// Logistic-route condition `r + delta / (4 pi^2 max(<u0>, 1)) > 1`,
/// together with one of the two positivity routes (`delta > 0` or
/// `ess min u0 > 0`).
pub fn check_condition_teo_l(params: &ModelParams, u0: &RealField) -> ConditionVerdict {
    let delta = check_assumption2(&params.semilinearity).delta;
    let mean = u0.mean();
    let lhs = params.r + delta / (4.0 * PI * PI * mean.max(1.0));
    let delta_positive = delta > 0.0;
    let data_positive = u0.min() > 0.0;
    ConditionVerdict {
        holds: lhs > 1.0 && (delta_positive || data_positive),
        lhs,
        margin: lhs - 1.0,
        delta_positive,
        data_positive,
    }
}

/// Zero-growth condition `delta / (4 pi^2 <u0>) > 1` (strict), valid only
/// when `r = 0` where mass is conserved.
pub fn check_condition_corollary(params: &ModelParams, u0: &RealField) -> ConditionVerdict {
    let delta = check_assumption2(&params.semilinearity).delta;
    let mean = u0.mean();
    let lhs = delta / (4.0 * PI * PI * mean);
    let delta_positive = delta > 0.0;
    let data_positive = u0.min() > 0.0;
    ConditionVerdict {
        holds: params.r == 0.0 && lhs > 1.0 && (delta_positive || data_positive),
        lhs,
        margin: lhs - 1.0,
        delta_positive,
        data_positive,
    }
}

/// Which ceiling construction to use in [`compute_s0`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CeilingPath {
    /// Ramp-assumption route: any level above `max(1, sup u0)` where
    /// `gamma >= 1`.
    Theorem1,
    /// Logistic route: explicit formula from the mass scale and the
    /// condition margin.
    RLarge,
}

/// Sup-norm ceiling `s0` guaranteed by the a-priori estimates, inflated by
/// `margin` (use [`REPORT_MARGIN`] for reporting, [`RUNTIME_MARGIN`] for
/// runtime assertions along discrete trajectories).
pub fn compute_s0(
    params: &ModelParams,
    u0: &RealField,
    path: CeilingPath,
    margin: f64,
) -> Result<f64> {
    let sup0 = u0.max();
    match path {
        CeilingPath::Theorem1 => {
            let a1 = check_assumption1(&params.semilinearity);
            if !a1.holds {
                return Err(Error::NoCeiling(
                    "ramp assumption fails: no level with gamma >= 1 above the data".into(),
                ));
            }
            let y0 = a1.y0.unwrap_or(0.0);
            Ok((1.0 + margin) * 1f64.max(sup0).max(y0))
        }
        CeilingPath::RLarge => {
            let teo_l = check_condition_teo_l(params, u0);
            let corollary = check_condition_corollary(params, u0);
            if !teo_l.holds && !corollary.holds {
                return Err(Error::NoCeiling(format!(
                    "logistic-route condition fails: lhs={:.6} <= 1",
                    teo_l.lhs
                )));
            }
            let delta = check_assumption2(&params.semilinearity).delta;
            let mean = u0.mean();
            let mass_bound = 2.0 / PI * n1(u0);
            let blowup_bound = if params.r > 0.0 {
                let denom = 1.0 - params.r - delta / (4.0 * PI * PI * mean.max(1.0));
                -2.0 * params.r / denom
            } else {
                0.0
            };
            Ok((1.0 + margin) * mass_bound.max(blowup_bound).max(sup0))
        }
    }
}

/// Positivity floor `ess inf u0 * exp(-max(1, <u0>) T)`.
pub fn positivity_floor(u0: &RealField, t: f64) -> f64 {
    u0.min() * (-(1f64.max(u0.mean())) * t).exp()
}

/// Interval `[lo, hi]` on which the solution provably lives up to time `T`;
/// the diffusion only needs to be positive there.
pub fn existence_interval(
    params: &ModelParams,
    u0: &RealField,
    t: f64,
    path: CeilingPath,
    margin: f64,
) -> Result<(f64, f64)> {
    Ok((positivity_floor(u0, t), compute_s0(params, u0, path, margin)?))
}

/// Derived constants of a run, computed once from the initial data.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremConstants {
    pub n1: f64,
    pub mean0: f64,
    pub sup0: f64,
    pub inf0: f64,
    /// Uniform lower bound on `mu` (positivity assumption).
    pub delta: f64,
    /// Ceiling with [`REPORT_MARGIN`], when some route guarantees one.
    pub s0: Option<f64>,
    pub s0_path: Option<CeilingPath>,
}

impl TheoremConstants {
    pub fn derive(params: &ModelParams, u0: &RealField) -> Self {
        let (s0, s0_path) =
            match compute_s0(params, u0, CeilingPath::Theorem1, REPORT_MARGIN) {
                Ok(v) => (Some(v), Some(CeilingPath::Theorem1)),
                Err(_) => match compute_s0(params, u0, CeilingPath::RLarge, REPORT_MARGIN) {
                    Ok(v) => (Some(v), Some(CeilingPath::RLarge)),
                    Err(_) => (None, None),
                },
            };
        Self {
            n1: n1(u0),
            mean0: u0.mean(),
            sup0: u0.max(),
            inf0: u0.min(),
            delta: check_assumption2(&params.semilinearity).delta,
            s0,
            s0_path,
        }
    }

    /// Positivity floor `s1(T)`, decreasing in `T`.
    pub fn s1(&self, t: f64) -> f64 {
        self.inf0 * (-(1f64.max(self.mean0)) * t).exp()
    }
}
