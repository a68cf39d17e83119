//! Parameter sweeps: vanishing viscosity, grid refinement, and the
//! exploratory subcritical classification grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::l2_norm;
use crate::error::Result;
use crate::spectral::{Grid, RealField, Spectrum};
use crate::stepper::{integrate, Classification, State};

use super::scenario::ScenarioSpec;

pub const DEFAULT_EPS_LIST: [f64; 5] = [1e-2, 3e-3, 1e-3, 3e-4, 1e-4];
pub const DEFAULT_N_LIST: [usize; 4] = [64, 128, 256, 512];

/// Run the scenario once and return the final state (ignoring checks).
fn final_state_of(spec: &ScenarioSpec) -> Result<(Classification, f64, RealField)> {
    let u0 = spec.build_initial()?;
    let state = State::new(0.0, u0, spec.params.clone())?;
    let traj = integrate(&state, &spec.ctrl, spec.horizon, spec.cadence)?;
    let (t, u) = traj
        .final_state()
        .cloned()
        .unwrap_or((0.0, spec.build_initial()?));
    Ok((traj.classification, t, u))
}

/// Vanishing-viscosity study: the scenario rerun at each viscosity, with
/// pairwise L2 distances of the final states and a Cauchy-trend verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ViscositySweep {
    pub eps: Vec<f64>,
    pub classifications: Vec<Classification>,
    /// `||u_{eps_i}(T) - u_{eps_{i+1}}(T)||_L2`.
    pub pairwise_l2: Vec<f64>,
    /// True when the pairwise differences decrease monotonically.
    pub cauchy: bool,
}

pub fn sweep_viscosity(spec: &ScenarioSpec, eps_list: &[f64]) -> Result<ViscositySweep> {
    spec.validate()?;
    let runs: Result<Vec<_>> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut s = spec.clone();
            s.params.eps = eps;
            final_state_of(&s)
        })
        .collect();
    let runs = runs?;
    let mut pairwise = Vec::new();
    for w in runs.windows(2) {
        let d = w[0].2.zip_with(&w[1].2, |a, b| a - b);
        pairwise.push(l2_norm(&d));
    }
    let cauchy = pairwise.windows(2).all(|p| p[1] <= p[0]);
    Ok(ViscositySweep {
        eps: eps_list.to_vec(),
        classifications: runs.iter().map(|r| r.0).collect(),
        pairwise_l2: pairwise,
        cauchy,
    })
}

/// Spectral restriction of a fine-grid field to a coarser grid (exact for
/// fields band-limited to the coarse band).
fn restrict_to(u: &RealField, coarse: Grid) -> RealField {
    let fine = u.forward();
    let mut out = Spectrum::zeros(coarse);
    let half = (coarse.n() / 2) as i64;
    for k in -(half - 1)..half {
        let bin = if k >= 0 {
            k as usize
        } else {
            (k + coarse.n() as i64) as usize
        };
        out.coeffs_mut()[bin] = fine.coeff(k);
    }
    out.inverse()
}

/// Grid-refinement study with Richardson-style observed orders on the
/// final state.
#[derive(Debug, Clone, Serialize)]
pub struct ResolutionSweep {
    pub n: Vec<usize>,
    pub classifications: Vec<Classification>,
    /// `||u_{n_i}(T) - u_{n_{i+1}}(T)||_L2`, compared on the coarser grid.
    pub pairwise_l2: Vec<f64>,
    /// `log2(d_i / d_{i+1})` for consecutive difference pairs.
    pub observed_orders: Vec<f64>,
}

pub fn sweep_resolution(spec: &ScenarioSpec, n_list: &[usize]) -> Result<ResolutionSweep> {
    spec.validate()?;
    let runs: Result<Vec<_>> = n_list
        .par_iter()
        .map(|&n| {
            let mut s = spec.clone();
            s.grid_n = n;
            s.validate()?;
            final_state_of(&s)
        })
        .collect();
    let runs = runs?;
    let mut pairwise = Vec::new();
    for (i, w) in runs.windows(2).enumerate() {
        let coarse = Grid::new(n_list[i])?;
        let fine_on_coarse = restrict_to(&w[1].2, coarse);
        let d = w[0].2.zip_with(&fine_on_coarse, |a, b| a - b);
        pairwise.push(l2_norm(&d));
    }
    let observed_orders = pairwise
        .windows(2)
        .map(|p| {
            if p[1] > 0.0 {
                (p[0] / p[1]).log2()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(ResolutionSweep {
        n: n_list.to_vec(),
        classifications: runs.iter().map(|r| r.0).collect(),
        pairwise_l2: pairwise,
        observed_orders,
    })
}

/// Classification of one exploratory cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Bounded,
    Decaying,
    BlowupFlag,
}

/// One `(alpha, r)` cell of the exploratory grid, classified at the base
/// resolution and after one resolution doubling. The blowup flag is a
/// numerical surrogate (amplitude growth plus persistent spectral-tail
/// energy), never a mathematical claim.
#[derive(Debug, Clone, Serialize)]
pub struct SubcriticalCell {
    pub alpha: f64,
    pub r: f64,
    pub class: CellClass,
    pub class_refined: CellClass,
    pub stable_under_refinement: bool,
    pub max_linf: f64,
}

fn classify(spec: &ScenarioSpec) -> Result<(CellClass, f64)> {
    let u0 = spec.build_initial()?;
    let mean0 = u0.mean();
    let state = State::new(0.0, u0, spec.params.clone())?;
    let traj = integrate(&state, &spec.ctrl, spec.horizon, spec.cadence)?;
    let max_linf = traj.records.iter().fold(0.0f64, |m, r| m.max(r.linf));
    let class = match traj.classification {
        Classification::Blowup | Classification::Stalled => CellClass::BlowupFlag,
        Classification::Ok => {
            let dev = traj
                .final_state()
                .map(|(_, u)| {
                    u.values()
                        .iter()
                        .fold(0.0f64, |m, &v| m.max((v - mean0).abs()))
                })
                .unwrap_or(f64::NAN);
            if dev <= 1e-3 {
                CellClass::Decaying
            } else {
                CellClass::Bounded
            }
        }
    };
    Ok((class, max_linf))
}

/// Classify every `(alpha, r)` cell at the scenario's base resolution and
/// at double resolution. Purely exploratory: a table, not a pass/fail.
pub fn explore_subcritical(
    spec: &ScenarioSpec,
    alphas: &[f64],
    rs: &[f64],
) -> Result<Vec<SubcriticalCell>> {
    spec.validate()?;
    let cells: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| rs.iter().map(move |&r| (a, r)))
        .collect();
    cells
        .par_iter()
        .map(|&(alpha, r)| {
            let mut base = spec.clone();
            base.params.alpha = alpha;
            base.params.r = r;
            let (class, max_linf) = classify(&base)?;
            let mut refined = base.clone();
            refined.grid_n *= 2;
            let (class_refined, _) = classify(&refined)?;
            Ok(SubcriticalCell {
                alpha,
                r,
                class,
                class_refined,
                stable_under_refinement: class == class_refined,
                max_linf,
            })
        })
        .collect()
}
