//! Named trajectory checks: each activated check yields exactly one
//! verdict, with an explicit "precondition unmet" status instead of a
//! silent skip.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    check_lubo, check_maxpoint_inequalities, check_tricomi, weak_residual, BumpWindow,
};
use crate::model::{compute_s0, positivity_floor, CeilingPath, RUNTIME_MARGIN};
use crate::spectral::RealField;
use crate::stepper::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    /// `min u(t) >= inf(u0) exp(-max(1,<u0>) t) - tol`.
    PositivityFloor,
    /// `max u(t) <= s0` on the ramp-assumption route (5% runtime margin).
    CeilingTheorem1,
    /// `max u(t) <= s0` on the logistic route (5% runtime margin).
    CeilingRLarge,
    /// Relative drift of `int u` (meaningful at r = 0).
    MassConservation,
    /// `d<u>/dt = r(<u> - <u^2>)` against the trapezoid of the recorded
    /// trajectory, third order per recorded interval.
    MeanLaw,
    /// Cumulative `int ||u||_{H^1/2}^2 dt` grows at most linearly: the
    /// fitted slope over the late half must not exceed the early-half slope
    /// by more than the tolerance factor.
    HhalfCumulative,
    /// Entropy balance residual, relative to the balance scale.
    EntropyBalance,
    /// L2 balance residual, relative to the balance scale.
    L2Balance,
    /// Weak-form residual for wavenumbers 0..=3.
    WeakResidual,
    /// Concentration inequality margin at every sampled state with
    /// `max u >= 4 <u>`.
    Lubo,
    /// Extremum-point inequality margins at every sampled state.
    MaxPoint,
    /// `F(t) <= F(0) exp(-2 inf(u0) t) (1 + tol)`.
    EntropyDecay,
    /// `I(t2) <= I(t1) exp(-2 inf(u0) (t2 - t1)) (1 + tol)`.
    FisherDecay,
    /// Quadratic Hilbert-transform identity residual at sampled states.
    Tricomi,
    /// `||u(T) - <u0>||_inf <= tol`.
    ConvergenceToMean,
}

impl CheckName {
    pub fn default_tolerance(self) -> f64 {
        match self {
            CheckName::PositivityFloor => 1e-6,
            CheckName::CeilingTheorem1 | CheckName::CeilingRLarge => 1e-6,
            CheckName::MassConservation => 1e-12,
            CheckName::MeanLaw => 100.0,
            CheckName::HhalfCumulative => 1.1,
            CheckName::EntropyBalance | CheckName::L2Balance => 0.01,
            CheckName::WeakResidual => 1e-3,
            CheckName::Lubo => 1e-6,
            CheckName::MaxPoint => 1e-6,
            CheckName::EntropyDecay | CheckName::FisherDecay => 0.05,
            CheckName::Tricomi => 1e-10,
            CheckName::ConvergenceToMean => 1e-6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::PositivityFloor => "positivity_floor",
            CheckName::CeilingTheorem1 => "ceiling_theorem1",
            CheckName::CeilingRLarge => "ceiling_rlarge",
            CheckName::MassConservation => "mass_conservation",
            CheckName::MeanLaw => "mean_law",
            CheckName::HhalfCumulative => "hhalf_cumulative",
            CheckName::EntropyBalance => "entropy_balance",
            CheckName::L2Balance => "l2_balance",
            CheckName::WeakResidual => "weak_residual",
            CheckName::Lubo => "lubo",
            CheckName::MaxPoint => "max_point",
            CheckName::EntropyDecay => "entropy_decay",
            CheckName::FisherDecay => "fisher_decay",
            CheckName::Tricomi => "tricomi",
            CheckName::ConvergenceToMean => "convergence_to_mean",
        }
    }
}

/// Activation of one named check, optionally with a non-default tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: CheckName,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl CheckSpec {
    pub fn new(name: CheckName) -> Self {
        Self {
            name,
            tolerance: None,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or_else(|| self.name.default_tolerance())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check's own precondition never activated (e.g. the concentration
    /// inequality on a run that never reaches `max u >= 4 <u>`).
    PreconditionUnmet,
}

/// One evaluated check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub status: CheckStatus,
    /// Worst measured margin or residual, as defined per check.
    pub measured: f64,
    pub tolerance: f64,
    pub note: String,
}

impl Verdict {
    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// Inputs shared by every check evaluation.
pub struct CheckContext<'a> {
    pub traj: &'a Trajectory,
    pub u0: &'a RealField,
    pub horizon: f64,
}

pub fn evaluate_check(spec: &CheckSpec, ctx: &CheckContext) -> Verdict {
    let tol = spec.tolerance();
    let name = spec.name;
    let mk = |status: CheckStatus, measured: f64, note: String| Verdict {
        check: name.as_str().to_string(),
        status,
        measured,
        tolerance: tol,
        note,
    };
    let params = &ctx.traj.params;
    match name {
        CheckName::PositivityFloor => {
            let mut worst = f64::INFINITY;
            let mut at = 0.0;
            for rec in &ctx.traj.records {
                let floor = positivity_floor(ctx.u0, rec.t);
                let margin = rec.min - floor;
                if margin < worst {
                    worst = margin;
                    at = rec.t;
                }
            }
            let status = if worst >= -tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, format!("worst min-floor margin at t={at:.4}"))
        }
        CheckName::CeilingTheorem1 | CheckName::CeilingRLarge => {
            let path = if name == CheckName::CeilingTheorem1 {
                CeilingPath::Theorem1
            } else {
                CeilingPath::RLarge
            };
            match compute_s0(params, ctx.u0, path, RUNTIME_MARGIN) {
                Ok(s0) => {
                    let mut worst = f64::INFINITY;
                    let mut at = 0.0;
                    for rec in &ctx.traj.records {
                        let margin = s0 - rec.max;
                        if margin < worst {
                            worst = margin;
                            at = rec.t;
                        }
                    }
                    let status = if worst >= -tol {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                    mk(
                        status,
                        worst,
                        format!("ceiling s0={s0:.6}, worst margin at t={at:.4}"),
                    )
                }
                Err(e) => mk(CheckStatus::Fail, f64::NAN, format!("no ceiling: {e}")),
            }
        }
        CheckName::MassConservation => {
            let mass0 = ctx.traj.records[0].mass;
            let drift = ctx
                .traj
                .records
                .iter()
                .fold(0.0f64, |m, r| m.max((r.mass - mass0).abs()));
            let rel = drift / mass0.abs().max(1e-300);
            let status = if rel <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, rel, format!("relative drift over {} records", ctx.traj.records.len()))
        }
        CheckName::MeanLaw => {
            if params.r == 0.0 {
                return mk(
                    CheckStatus::PreconditionUnmet,
                    f64::NAN,
                    "r = 0: mean law reduces to mass conservation".into(),
                );
            }
            let mut worst = 0.0f64;
            for w in ctx.traj.states.windows(2) {
                let (t0, ref a) = w[0];
                let (t1, ref b) = w[1];
                let h = t1 - t0;
                if h <= 0.0 {
                    continue;
                }
                let g0 = params.r * (a.mean() - a.map(|v| v * v).mean());
                let g1 = params.r * (b.mean() - b.map(|v| v * v).mean());
                let resid = (b.mean() - a.mean() - 0.5 * h * (g0 + g1)).abs();
                worst = worst.max(resid / (h * h * h));
            }
            let status = if worst <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max |d<u> - trapezoid| / h^3 over recorded intervals".into())
        }
        CheckName::HhalfCumulative => {
            // Trapezoid of ||u||_{H^1/2}^2 over time, then least-squares
            // slopes on the early and late halves.
            let recs = &ctx.traj.records;
            if recs.len() < 6 {
                return mk(
                    CheckStatus::PreconditionUnmet,
                    f64::NAN,
                    "too few records for slope fits".into(),
                );
            }
            let mut ts = Vec::with_capacity(recs.len());
            let mut cum = Vec::with_capacity(recs.len());
            let mut acc = 0.0;
            ts.push(recs[0].t);
            cum.push(0.0);
            for w in recs.windows(2) {
                let h = w[1].t - w[0].t;
                acc += 0.5 * h * (w[0].hhalf.powi(2) + w[1].hhalf.powi(2));
                ts.push(w[1].t);
                cum.push(acc);
            }
            let t_mid = 0.5 * (ts[0] + ts[ts.len() - 1]);
            let slope = |lo: f64, hi: f64| -> f64 {
                let pts: Vec<(f64, f64)> = ts
                    .iter()
                    .zip(&cum)
                    .filter(|(t, _)| **t >= lo && **t <= hi)
                    .map(|(t, c)| (*t, *c))
                    .collect();
                let n = pts.len() as f64;
                let sx: f64 = pts.iter().map(|p| p.0).sum();
                let sy: f64 = pts.iter().map(|p| p.1).sum();
                let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
                let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
                let denom = n * sxx - sx * sx;
                if denom.abs() < 1e-300 {
                    0.0
                } else {
                    (n * sxy - sx * sy) / denom
                }
            };
            let early = slope(ts[0], t_mid);
            let late = slope(t_mid, ts[ts.len() - 1]);
            let floor = 1e-10 * (1.0 + acc / ctx.horizon.max(1e-30));
            let status = if late <= tol * early + floor {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(
                status,
                if early.abs() > floor { late / early } else { 0.0 },
                format!("slope late/early = {late:.3e}/{early:.3e}"),
            )
        }
        CheckName::EntropyBalance => {
            let recs = &ctx.traj.records;
            let mut worst = 0.0f64;
            let mut seen = false;
            // The balance terms are O(n)-sums of O(||u||^3) values; below
            // this floor both residual and scale are roundoff noise.
            let floor = 1e-10 * (1.0 + recs[0].entropy.abs() + recs[0].fisher.abs());
            for i in 1..recs.len().saturating_sub(1) {
                let r = recs[i].entropy_balance_residual;
                if !r.is_finite() {
                    continue;
                }
                seen = true;
                let dfdt =
                    (recs[i + 1].entropy - recs[i - 1].entropy) / (recs[i + 1].t - recs[i - 1].t);
                let scale = dfdt.abs() + recs[i].fisher.abs() + floor;
                worst = worst.max(r / scale);
            }
            if !seen {
                return mk(
                    CheckStatus::PreconditionUnmet,
                    f64::NAN,
                    "no interior records with a defined residual".into(),
                );
            }
            let status = if worst <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max residual / (|dF/dt| + Fisher)".into())
        }
        CheckName::L2Balance => {
            let recs = &ctx.traj.records;
            let mut worst = 0.0f64;
            let mut seen = false;
            for i in 1..recs.len().saturating_sub(1) {
                let r = recs[i].l2_balance_residual;
                if !r.is_finite() {
                    continue;
                }
                seen = true;
                let dedt = 0.5 * (recs[i + 1].l2.powi(2) - recs[i - 1].l2.powi(2))
                    / (recs[i + 1].t - recs[i - 1].t);
                let scale = dedt.abs()
                    + recs[i].dissipation_m.abs()
                    + recs[i].l3.powi(3)
                    + recs[i].l2.powi(2)
                    + 1e-10 * (1.0 + recs[0].l2.powi(2));
                worst = worst.max(r / scale);
            }
            if !seen {
                return mk(
                    CheckStatus::PreconditionUnmet,
                    f64::NAN,
                    "no interior records with a defined residual".into(),
                );
            }
            let status = if worst <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max residual / balance scale".into())
        }
        CheckName::WeakResidual => {
            let window = BumpWindow::new(0.1 * ctx.horizon, 0.9 * ctx.horizon);
            let mut worst = 0.0f64;
            for k in 0..=3 {
                match weak_residual(&ctx.traj.states, params, k, &window) {
                    Ok(r) => worst = worst.max(r),
                    Err(e) => {
                        return mk(CheckStatus::PreconditionUnmet, f64::NAN, e.to_string())
                    }
                }
            }
            let status = if worst <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max |weak residual| over k in 0..=3".into())
        }
        CheckName::Lubo => {
            let mut worst = f64::INFINITY;
            let mut any = false;
            let mut violated = false;
            for (_, u) in &ctx.traj.states {
                if let Ok(rep) = check_lubo(u) {
                    if rep.applicable {
                        any = true;
                        worst = worst.min(rep.margin);
                        violated |= rep.violated;
                    }
                }
            }
            if !any {
                return mk(
                    CheckStatus::PreconditionUnmet,
                    f64::NAN,
                    "max u < 4 <u> at every sampled state".into(),
                );
            }
            let status = if violated {
                CheckStatus::Fail
            } else {
                CheckStatus::Pass
            };
            mk(status, worst, "worst concentration margin".into())
        }
        CheckName::MaxPoint => {
            let mut worst = f64::INFINITY;
            let mut violated = false;
            for (_, u) in &ctx.traj.states {
                if let Ok(rep) = check_maxpoint_inequalities(u) {
                    worst = worst.min(rep.margin_max.min(rep.margin_min));
                    violated |= rep.violated;
                }
            }
            let status = if violated {
                CheckStatus::Fail
            } else {
                CheckStatus::Pass
            };
            mk(status, worst, "worst extremum-point margin".into())
        }
        CheckName::EntropyDecay => {
            let inf0 = ctx.u0.min();
            let f0 = ctx.traj.records[0].entropy;
            let mut worst = 0.0f64;
            for rec in &ctx.traj.records {
                let envelope = f0 * (-2.0 * inf0 * (rec.t - ctx.traj.records[0].t)).exp();
                if envelope < 1e-250 {
                    continue;
                }
                worst = worst.max(rec.entropy / envelope);
            }
            let status = if worst <= 1.0 + tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(
                status,
                worst,
                format!("max F(t)/envelope with rate 2*inf(u0)={:.4}", 2.0 * inf0),
            )
        }
        CheckName::FisherDecay => {
            let inf0 = ctx.u0.min();
            let recs = &ctx.traj.records;
            let mut worst = 0.0f64;
            let floor = 1e-20 * (1.0 + recs[0].fisher);
            let mut pairs = Vec::new();
            for w in recs.windows(2) {
                pairs.push((&w[0], &w[1]));
            }
            for rec in recs.iter().skip(1) {
                pairs.push((&recs[0], rec));
            }
            for (a, b) in pairs {
                let bound = a.fisher * (-2.0 * inf0 * (b.t - a.t)).exp();
                if bound < floor {
                    continue;
                }
                worst = worst.max(b.fisher / bound);
            }
            let status = if worst <= 1.0 + tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max I(t2)/(I(t1) envelope) over record pairs".into())
        }
        CheckName::Tricomi => {
            let mut worst = 0.0f64;
            for (_, u) in &ctx.traj.states {
                let f = u.derivative();
                let scale = f.max_abs().powi(2).max(1e-12);
                worst = worst.max(check_tricomi(u) / scale);
            }
            let status = if worst <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
            mk(status, worst, "max residual / ||du/dx||_inf^2".into())
        }
        CheckName::ConvergenceToMean => {
            let target = ctx.u0.mean();
            match ctx.traj.final_state() {
                Some((_, u)) => {
                    let dev = u
                        .values()
                        .iter()
                        .fold(0.0f64, |m, &v| m.max((v - target).abs()));
                    let status = if dev <= tol {
                        CheckStatus::Pass
                    } else {
                        CheckStatus::Fail
                    };
                    mk(status, dev, format!("||u(T) - {target:.6}||_inf"))
                }
                None => mk(CheckStatus::Fail, f64::NAN, "no final state recorded".into()),
            }
        }
    }
}
