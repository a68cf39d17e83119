//! Self-test battery: operator exactness, kernel symmetrization, quadratic
//! Hilbert identity, mollifier positivity, antiderivative consistency.
//! Everything here must pass on a correct build, independently of any
//! scenario.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::diagnostics::{check_maxpoint_inequalities, check_tricomi, kernel_quadratic_form};
use crate::model::Semilinearity;
use crate::spectral::{Grid, RealField};

use super::checks::{CheckStatus, Verdict};

fn verdict(name: &str, measured: f64, tolerance: f64, note: &str) -> Verdict {
    Verdict {
        check: name.to_string(),
        status: if measured <= tolerance {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        },
        measured,
        tolerance,
        note: note.to_string(),
    }
}

fn band_limited(g: Grid, band: i64, seed: u64) -> RealField {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut f = RealField::constant(g, 0.0);
    for k in 1..=band {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let fk = RealField::from_fn(g, |x| a * (k as f64 * x + phase).cos());
        f = f.zip_with(&fk, |u, v| u + v);
    }
    f
}

fn max_diff(a: &RealField, b: &RealField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

/// Run the full battery. Every verdict should pass on a correct build.
pub fn run_oracle_battery() -> Vec<Verdict> {
    let mut out = Vec::new();
    let g64 = Grid::new(64).expect("grid");
    let g128 = Grid::new(128).expect("grid");

    // Single-mode operator symbols at n = 64.
    {
        let cosx = RealField::from_fn(g64, f64::cos);
        let sinx = RealField::from_fn(g64, f64::sin);
        let mut worst = max_diff(&cosx.hilbert(), &sinx);
        worst = worst.max(max_diff(
            &cosx.frac_laplacian(1.0).expect("alpha"),
            &cosx,
        ));
        let cos3 = RealField::from_fn(g64, |x| (3.0 * x).cos());
        let want = cos3.map(|v| 3f64.sqrt() * v);
        worst = worst.max(max_diff(&cos3.frac_laplacian(0.5).expect("alpha"), &want));
        worst = worst.max(max_diff(&sinx.derivative(), &cosx));
        worst = worst.max(max_diff(&cosx.chemo_gradient(), &sinx));
        out.push(verdict(
            "operator_symbols",
            worst,
            1e-12,
            "H, Lambda^alpha, d/dx, Poisson gradient on pure modes at n=64",
        ));
    }

    // Poisson residual on random data.
    {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let u = band_limited(g64, 20, seed).map(|v| v + 2.0);
            let ddv = u.chemo_gradient().derivative();
            let mean = u.mean();
            let rhs = u.map(|v| v - mean);
            worst = worst.max(max_diff(&ddv, &rhs) / u.max_abs());
        }
        out.push(verdict(
            "poisson_residual",
            worst,
            1e-12,
            "||d2v/dx2 - (u - <u>)||_inf / ||u||_inf on random band-limited data",
        ));
    }

    // Transform round trip.
    {
        let mut worst = 0.0f64;
        for seed in 0..5 {
            let f = band_limited(g128, 40, seed);
            let back = f.forward().inverse();
            worst = worst.max(max_diff(&f, &back) / f.max_abs().max(1.0));
        }
        out.push(verdict(
            "transform_round_trip",
            worst,
            1e-13,
            "forward/inverse round trip on band-limited fields",
        ));
    }

    // Kernel quadratic form against the spectral seminorm.
    {
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let u = band_limited(g128, 40, seed);
            let q = kernel_quadratic_form(&u, |s| s, |_| 1.0).expect("kernel form");
            let h = u.forward().hs_norm_sq(0.5);
            worst = worst.max((q - h).abs() / h.max(1e-12));
        }
        out.push(verdict(
            "kernel_symmetrization",
            worst,
            1e-6,
            "kernel form with identity weight vs ||u||_{H^1/2}^2, 20 fields at n=128",
        ));
    }

    // Ramped-profile lower bound of the weighted kernel form.
    {
        let sem = Semilinearity::RampedGamma {
            delta: 0.2,
            y0: 1.0,
            w: 0.5,
        };
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let u = band_limited(g128, 20, seed).map(|v| 1.5 + 0.5 * (v / 3.0).tanh());
            let q = kernel_quadratic_form(
                &u,
                |s| sem.big_gamma(s).expect("big_gamma"),
                |s| sem.gamma(s).expect("gamma"),
            )
            .expect("kernel form");
            let h = u.forward().hs_norm_sq(0.5);
            worst = worst.max(0.2 * h - q);
        }
        out.push(verdict(
            "kernel_gamma_floor",
            worst.max(0.0),
            1e-8,
            "weighted kernel form >= delta ||u||_{H^1/2}^2 for the ramped profile",
        ));
    }

    // Quadratic Hilbert-transform identity.
    {
        let mut worst = 0.0f64;
        for seed in 0..20 {
            let u = band_limited(g128, 32, seed);
            let f = u.forward().derivative().inverse();
            worst = worst.max(check_tricomi(&u) / f.max_abs().powi(2).max(1e-12));
        }
        out.push(verdict(
            "quadratic_hilbert_identity",
            worst,
            1e-10,
            "H(Hf f) = ((Hf)^2 - f^2)/2 on 20 band-limited fields",
        ));
    }

    // Mollifier: mean preservation and positivity.
    {
        let mut rng = StdRng::seed_from_u64(9);
        let f = RealField::from_fn(g64, |_| rng.gen_range(0.0..2.0));
        let m = f.mollify(0.1);
        let mean_drift = (m.mean() - f.mean()).abs() / f.mean();
        let negativity = (-m.min()).max(0.0);
        out.push(verdict(
            "mollifier_mean_and_positivity",
            mean_drift.max(negativity),
            1e-12,
            "heat-kernel mollifier preserves the mean and nonnegativity",
        ));
    }

    // Antiderivative consistency d/ds big_gamma = gamma, d/ds big_m = mu.
    {
        let kinds = [
            Semilinearity::Linear,
            Semilinearity::Power { p: 2.0 },
            Semilinearity::RampedGamma {
                delta: 0.3,
                y0: 0.5,
                w: 0.25,
            },
        ];
        let h = 1e-5;
        let mut worst = 0.0f64;
        for sem in &kinds {
            for s in [0.3, 1.1, 2.4] {
                let dg = (sem.big_gamma(s + h).expect("g") - sem.big_gamma(s - h).expect("g"))
                    / (2.0 * h);
                let dm =
                    (sem.big_m(s + h).expect("m") - sem.big_m(s - h).expect("m")) / (2.0 * h);
                worst = worst.max((dg - sem.gamma(s).expect("gamma")).abs());
                worst = worst.max((dm - sem.mu(s).expect("mu")).abs());
            }
        }
        out.push(verdict(
            "antiderivative_consistency",
            worst,
            1e-6,
            "finite-difference derivatives of the antiderivatives match gamma and mu",
        ));
    }

    // Extremum-point inequalities on random fields.
    {
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let u = band_limited(g64, 20, seed).map(|v| v + 4.0);
            let rep = check_maxpoint_inequalities(&u).expect("maxpoint");
            worst = worst.max((-rep.margin_max).max(-rep.margin_min).max(0.0) / u.max_abs());
        }
        out.push(verdict(
            "extremum_point_inequalities",
            worst,
            1e-6,
            "Lambda u at arg-extrema dominates the deviation from the mean, 100 fields",
        ));
    }

    out
}
