//! Acceptance suite: one test per criterion, each ending with a single
//! pass line. Run with `cargo test --test acceptance -- --nocapture` to see
//! the per-criterion lines.

mod oracle;

use std::process::Command;
use std::time::Instant;

use bartglm::{
    build_zbundle, classical_statistics, correction_gradient, correction_lr, correction_score,
    fit_irls, fit_restricted, full_test_report, gradient_identity_check, ks_distance_to_chisq,
    lambda_diagonals, phi_classical, phi_corrected, ChiSquared, ClassicalStats, Family,
    FitOptions, Hypothesis, Link,
};
use support::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bartglm"))
}

/// Squid reproduction: `fit` recovers the published estimates and `test`
/// recovers every Table entry for H0: beta4 = beta5 = 0.
#[test]
fn criterion_1_squid_reproduction() {
    let squid = squid_csv();
    let squid = squid.to_str().unwrap();

    // Library-side runtime of the full pipeline (both fits, geometry,
    // corrections) must stay under a second.
    let (y, design) = load_squid();
    let clock = Instant::now();
    let fit = fit_irls(&design, &y, Family::Gamma, Link::Log, &FitOptions::default()).unwrap();
    let report = full_test_report(
        &design,
        &y,
        Family::Gamma,
        Link::Log,
        &Hypothesis::zero(vec![3, 4]),
        &FitOptions::default(),
    )
    .unwrap();
    let elapsed = clock.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "fit + test took {elapsed:?}, budget is 1 s"
    );
    drop((fit, report));

    // Through the command-line interface:
    let out = bin()
        .args([
            "fit", "--data", squid, "--response", "weight", "--intercept", "--family", "gamma",
            "--link", "log", "--format", "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let published = [-2.2899, 0.4027, -0.4362, 1.2916, 1.9420, 2.1394];
    for (slot, expect) in published.iter().enumerate() {
        let got = v["coefficients"][slot]["estimate"].as_f64().unwrap();
        assert!(
            (got - expect).abs() < 5e-4,
            "coefficient {slot}: {got} vs {expect}"
        );
    }
    let phi = v["phi"]["estimate"].as_f64().unwrap();
    assert!((phi - 44.001).abs() < 5e-4, "phi {phi}");

    let out = bin()
        .args([
            "test",
            "--data",
            squid,
            "--response",
            "weight",
            "--intercept",
            "--family",
            "gamma",
            "--link",
            "log",
            "--test-cols",
            "rostral_notch,notch_wing",
            "--format",
            "json",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let table10 = [
        ("S_W", 7.0659, 0.0292),
        ("S_LR", 5.8976, 0.0524),
        ("S_R", 4.8382, 0.0890),
        ("S_T", 5.1193, 0.0773),
        ("S*_LR", 4.6380, 0.0984),
        ("S*_R", 4.0842, 0.1298),
        ("S*_T", 4.3239, 0.1151),
    ];
    for e in v["entries"].as_array().unwrap() {
        let name = e["name"].as_str().unwrap();
        let (_, sv, pv) = table10.iter().find(|(n, _, _)| *n == name).unwrap();
        let value = e["value"].as_f64().unwrap();
        let p_value = e["p_value"].as_f64().unwrap();
        assert!((value - sv).abs() < 5e-3, "{name}: {value} vs {sv}");
        assert!((p_value - pv).abs() < 5e-3, "{name} p: {p_value} vs {pv}");
    }
    println!("[criterion 1] squid reproduction (fit, all Table entries, < 1 s): PASS");
}

fn compare_cells(
    label: &str,
    outcome: &bartglm::SimOutcome,
    expected: &[[f64; 3]; 7],
    tol: f64,
) -> Vec<String> {
    let mut misses = Vec::new();
    for (si, stat) in STATS7.iter().enumerate() {
        for (li, level) in LEVELS.iter().enumerate() {
            let got = outcome.table.rate(stat, *level).unwrap();
            let want = expected[si][li];
            if (got - want).abs() > tol {
                misses.push(format!(
                    "{label} {stat}@{:.0}%: {got:.2} vs published {want:.2} (|diff| {:.2} > {tol})",
                    level * 100.0,
                    (got - want).abs()
                ));
            }
        }
    }
    misses
}

/// Monte Carlo size, gamma model: every Table cell at n in {20, 25, 30}
/// within +/- 1.5 percentage points.
#[test]
fn criterion_2_monte_carlo_size_gamma() {
    let mut misses = Vec::new();
    for n in [20usize, 25, 30] {
        let outcome = gamma_size(n);
        assert!(
            (outcome.table.failed_fits as f64) < 0.005 * REPLICATIONS as f64,
            "n={n}: {} failed fits",
            outcome.table.failed_fits
        );
        misses.extend(compare_cells(
            &format!("gamma n={n}"),
            outcome,
            &gamma_table1(n),
            1.5,
        ));
    }
    assert!(misses.is_empty(), "cells outside tolerance:\n{}", misses.join("\n"));
    println!("[criterion 2] Monte Carlo size, gamma (63 cells, +/-1.5pp): PASS");
}

/// Monte Carlo size, inverse normal model: Table cells at n = 20 within
/// +/- 2 percentage points.
#[test]
fn criterion_3_monte_carlo_size_inverse_normal() {
    let outcome = ig_size();
    assert!(
        (outcome.table.failed_fits as f64) < 0.005 * REPLICATIONS as f64,
        "{} failed fits",
        outcome.table.failed_fits
    );
    let misses = compare_cells("inverse-normal n=20", outcome, &IG_TABLE4, 2.0);
    assert!(
        misses.is_empty(),
        "cells outside tolerance:\n{}\n\
         (the published S*_R deep-tail cells reflect a correction-cap effect \
         specific to the original covariate draw; see the test output above \
         for the reproduced values)",
        misses.join("\n")
    );
    println!("[criterion 3] Monte Carlo size, inverse normal (21 cells, +/-2pp): PASS");
}

/// Qualitative orderings: liberal ordering of the uncorrected tests at the
/// 10% level, corrected rates closer to nominal, and the corrected gradient
/// closer to its reference distribution than the uncorrected one.
#[test]
fn criterion_4_qualitative_orderings() {
    struct Scen {
        label: &'static str,
        outcome: &'static bartglm::SimOutcome,
        tol: f64,
    }
    let scens = [
        Scen { label: "gamma n=20", outcome: gamma_size(20), tol: 1.5 },
        Scen { label: "gamma n=25", outcome: gamma_size(25), tol: 1.5 },
        Scen { label: "gamma n=30", outcome: gamma_size(30), tol: 1.5 },
        Scen { label: "inverse-normal n=20", outcome: ig_size(), tol: 2.0 },
    ];
    // comparisons carry a margin of max(3 * combined MCSE, scenario tolerance)
    let margin = |t: &bartglm::RateTable, a: &str, b: &str, level: f64, tol: f64| {
        let m = 3.0 * (t.mcse(a, level).unwrap().powi(2) + t.mcse(b, level).unwrap().powi(2)).sqrt();
        m.max(tol)
    };
    for s in &scens {
        let t = &s.outcome.table;
        // rate(S_W) > rate(S_LR) > rate(S_T) >= rate(S_R) at the 10% level
        let chain = [("S_W", "S_LR"), ("S_LR", "S_T"), ("S_T", "S_R")];
        for (hi, lo) in chain {
            let a = t.rate(hi, 0.10).unwrap();
            let b = t.rate(lo, 0.10).unwrap();
            let m = margin(t, hi, lo, 0.10, s.tol);
            assert!(
                a > b - m,
                "{}: expected rate({hi}) > rate({lo}) within {m:.2}pp, got {a:.2} vs {b:.2}",
                s.label
            );
        }
        // each corrected statistic sits closer to the nominal level
        for (raw, corrected) in [("S_LR", "S*_LR"), ("S_R", "S*_R"), ("S_T", "S*_T")] {
            for level in LEVELS {
                let nominal = level * 100.0;
                let d_raw = (t.rate(raw, level).unwrap() - nominal).abs();
                let d_corr = (t.rate(corrected, level).unwrap() - nominal).abs();
                let m = margin(t, raw, corrected, level, s.tol);
                assert!(
                    d_corr <= d_raw + m,
                    "{} @{nominal}%: |{corrected} - nominal| = {d_corr:.2} vs \
                     |{raw} - nominal| = {d_raw:.2} (margin {m:.2})",
                    s.label
                );
            }
        }
    }
    // distribution distance: corrected gradient beats the uncorrected one
    let outcome = gamma_size(20);
    let idx = |name: &str| STATS7.iter().position(|s| *s == name).unwrap();
    let d_raw = ks_distance_to_chisq(&outcome.samples[idx("S_T")], 3).unwrap();
    let d_corr = ks_distance_to_chisq(&outcome.samples[idx("S*_T")], 3).unwrap();
    assert!(
        d_corr < d_raw,
        "KS to chi-squared(3): corrected {d_corr:.4} vs uncorrected {d_raw:.4}"
    );
    println!(
        "[criterion 4] qualitative orderings + KS({:.4}) < KS({:.4}): PASS",
        d_corr, d_raw
    );
}

/// Oracle equivalence: the matrix-form A-quantities agree with the
/// scalar-loop brute force to 1e-10 relative on randomized instances, and
/// the phi-test closed forms agree with an independent recomputation.
#[test]
fn criterion_5_oracle_equivalence() {
    let mut checked = 0usize;
    for (family, link) in [(Family::Gamma, Link::Log), (Family::InverseNormal, Link::Log)] {
        let mut instance = 0usize;
        let mut seed = 1000u64;
        while instance < 50 {
            seed += 1;
            let n = [8, 12][instance % 2];
            let p = [3, 4][(instance / 2) % 2];
            let q = [1, 2][(instance / 4) % 2];
            let Some((design, y)) = random_instance(family, link, n, p, seed) else {
                continue;
            };
            let hyp = Hypothesis::zero((0..q).collect());
            let opts = FitOptions::default();
            let Ok(res) = fit_restricted(&design, &y, family, link, &hyp, &opts) else {
                continue;
            };
            let lam = lambda_diagonals(family, link, &res.eta).unwrap();
            let bundle = build_zbundle(design.mat(), &hyp.tested, &res.weights).unwrap();
            let derivs = family.phi_derivs(res.phi).unwrap();
            let lr = correction_lr(&bundle, &lam, res.phi, Some(&derivs)).unwrap();
            let sc = correction_score(&bundle, &lam, res.phi, Some(&derivs)).unwrap();
            let gr = correction_gradient(&bundle, &lam, res.phi, Some(&derivs)).unwrap();

            let z: Vec<Vec<f64>> = (0..n).map(|l| bundle.z().row(l).to_vec()).collect();
            let z2: Vec<Vec<f64>> = (0..n).map(|l| bundle.z2().row(l).to_vec()).collect();
            let brute = oracle::brute_force(
                &z,
                &z2,
                &oracle::LambdaInput {
                    f: &lam.f,
                    g: &lam.g,
                    t: &lam.t,
                    d: &lam.d,
                    e: &lam.e,
                    b: &lam.b,
                    h: &lam.h,
                    m: &lam.m,
                },
                res.phi,
            );
            for (label, got, want) in [
                ("A_LR", lr.a1, brute.a_lr),
                ("A_R1", sc.a1, brute.a_r1),
                ("A_R2", sc.a2, brute.a_r2),
                ("A_R3", sc.a3, brute.a_r3),
                ("A_T1", gr.a1, brute.a_t1),
                ("A_T2", gr.a2, brute.a_t2),
                ("A_T3", gr.a3, brute.a_t3),
            ] {
                assert!(
                    close(got, want, 1e-10, 1e-6),
                    "{} {} n={n} p={p} q={q}: matrix {got:e} vs loops {want:e}",
                    family.name(),
                    label
                );
            }
            instance += 1;
            checked += 1;
        }
    }

    // phi-test closed forms against an independent recomputation
    let dummy = ClassicalStats { s_lr: 1.0, s_w: 1.0, s_r: 1.0, s_t: 1.0 };
    let mut cases = 0usize;
    for family in [Family::Normal, Family::Gamma, Family::InverseNormal] {
        for (i, &phi0) in [0.4, 1.0, 3.0, 12.0, 44.0].iter().enumerate() {
            let p = 2 + i % 4;
            let n = 15 + 3 * i;
            let got = phi_corrected(family, phi0, p, n, &dummy).unwrap();
            let want = oracle::phi_test_brute_force(family, phi0, p, n);
            assert!(close(got.epsilon, want.epsilon, 1e-10, 1e-300));
            for (g, w) in [
                (got.score.a1, want.a_r[0]),
                (got.score.a2, want.a_r[1]),
                (got.score.a3, want.a_r[2]),
                (got.gradient.a1, want.a_t[0]),
                (got.gradient.a2, want.a_t[1]),
                (got.gradient.a3, want.a_t[2]),
            ] {
                assert!(close(g, w, 1e-10, 1e-300), "{}: {g:e} vs {w:e}", family.name());
            }
            cases += 1;
        }
    }
    println!(
        "[criterion 5] oracle equivalence ({checked} regression instances, {cases} phi cases): PASS"
    );
}

/// Degenerate algebra: normal + identity with known phi kills every lambda
/// and every correction, and the four classical statistics coincide; the
/// normal / inverse-normal phi tests give identical Wald and score values.
#[test]
fn criterion_6_degenerate_algebra() {
    let mut state = 42u64;
    let mut unif = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for case in 0..20 {
        let n = 12 + case % 5;
        let p = 3;
        let mat = bartglm::Mat::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { unif() * 2.0 - 1.0 });
        let design = bartglm::DesignMatrix::unnamed(mat).unwrap();
        let y: Vec<f64> = (0..n).map(|_| unif() * 4.0 - 2.0).collect();
        let phi = 0.5 + 2.0 * unif();
        let opts = FitOptions { phi_known: Some(phi), ..FitOptions::default() };
        let hyp = Hypothesis { tested: vec![1, 2], beta10: vec![0.0, 0.0], phi_known: Some(phi) };

        let unres = fit_irls(&design, &y, Family::Normal, Link::Identity, &opts).unwrap();
        let res =
            fit_restricted(&design, &y, Family::Normal, Link::Identity, &hyp, &opts).unwrap();
        let lam = lambda_diagonals(Family::Normal, Link::Identity, &res.eta).unwrap();
        for l in 0..n {
            assert_eq!(lam.f[l], 0.0);
            assert_eq!(lam.g[l], 0.0);
            assert_eq!(lam.t[l], 0.0);
            assert_eq!(lam.d[l], 0.0);
            assert_eq!(lam.e[l], 0.0);
            assert_eq!(lam.b[l], 0.0);
            assert_eq!(lam.h[l], 0.0);
            assert_eq!(lam.m[l], 0.0);
        }
        let bundle = build_zbundle(design.mat(), &hyp.tested, &res.weights).unwrap();
        let lr = correction_lr(&bundle, &lam, res.phi, None).unwrap();
        let sc = correction_score(&bundle, &lam, res.phi, None).unwrap();
        let gr = correction_gradient(&bundle, &lam, res.phi, None).unwrap();
        assert_eq!((lr.a1, lr.a1_bphi, lr.a), (0.0, 0.0, 0.0));
        assert_eq!((sc.a1, sc.a2, sc.a3), (0.0, 0.0, 0.0));
        assert_eq!((gr.a1, gr.a2, gr.a3), (0.0, 0.0, 0.0));

        let st = classical_statistics(
            &unres,
            &res,
            &hyp,
            Family::Normal,
            Link::Identity,
            &design,
            &y,
        )
        .unwrap();
        assert!((st.s_lr - st.s_w).abs() < 1e-9, "LR {} vs W {}", st.s_lr, st.s_w);
        assert!((st.s_lr - st.s_r).abs() < 1e-9, "LR {} vs R {}", st.s_lr, st.s_r);
        assert!((st.s_lr - st.s_t).abs() < 1e-9, "LR {} vs T {}", st.s_lr, st.s_t);
    }

    // phi tests: Wald and score share one closed form for these families
    for family in [Family::Normal, Family::InverseNormal] {
        for case in 0..50 {
            let phi_hat = 0.3 + 0.37 * case as f64;
            let phi0 = 0.2 + 0.53 * case as f64;
            let s = phi_classical(family, phi_hat, phi0, 20).unwrap();
            assert!(
                (s.s_w - s.s_r).abs() <= 1e-14 * s.s_w.abs().max(1e-300),
                "{}: W {} vs R {}",
                family.name(),
                s.s_w,
                s.s_r
            );
            let closed = 10.0 * ((phi_hat - phi0) / phi_hat).powi(2);
            assert!(close(s.s_w, closed, 1e-12, 1e-300));
        }
    }
    println!("[criterion 6] degenerate algebra (zero lambdas/corrections, equal statistics): PASS");
}

/// Gradient duality: the score-times-displacement form agrees with the
/// Pearson-residual display on 100 random instances.
#[test]
fn criterion_7_gradient_duality() {
    let mut checked = 0usize;
    let mut seed = 9000u64;
    while checked < 100 {
        seed += 1;
        let n = 12 + (checked % 8);
        let p = 3 + (checked % 2);
        let q = 1 + (checked % 2);
        let Some((design, y)) = random_instance(Family::Gamma, Link::Log, n, p, seed) else {
            continue;
        };
        let opts = FitOptions::default();
        let hyp = Hypothesis::zero((0..q).collect());
        let Ok(unres) = fit_irls(&design, &y, Family::Gamma, Link::Log, &opts) else {
            continue;
        };
        let Ok(res) = fit_restricted(&design, &y, Family::Gamma, Link::Log, &hyp, &opts) else {
            continue;
        };
        let st =
            classical_statistics(&unres, &res, &hyp, Family::Gamma, Link::Log, &design, &y)
                .unwrap();
        let dual =
            gradient_identity_check(&unres, &res, &hyp, Family::Gamma, &design, &y).unwrap();
        assert!(
            (st.s_t - dual).abs() <= 1e-9 * st.s_t.abs().max(1.0),
            "instance {checked}: {} vs {}",
            st.s_t,
            dual
        );
        checked += 1;
    }
    println!("[criterion 7] gradient duality (100 instances, 1e-9): PASS");
}

/// Power reproduction: the corrected gradient column of the published power
/// table at delta in {-1, 0.5, 1} within +/- 2 percentage points, and
/// monotone power in |delta| for all three corrected statistics.
#[test]
fn criterion_8_power_reproduction() {
    for (di, want) in [(3usize, 43.02), (5, 14.05), (6, 36.73)] {
        let got = power(di).table.rate("S*_T", 0.05).unwrap();
        assert!(
            (got - want).abs() <= 2.0,
            "S*_T at delta {}: {got:.2} vs {want:.2}",
            POWER_DELTAS[di]
        );
    }
    // monotone increase within each sign of delta
    for stat in ["S*_LR", "S*_R", "S*_T"] {
        let rate = |di: usize| power(di).table.rate(stat, 0.05).unwrap();
        // negative branch: |delta| grows from index 4 down to 0
        for di in (1..=4).rev() {
            assert!(
                rate(di - 1) >= rate(di),
                "{stat}: power({}) < power({})",
                POWER_DELTAS[di - 1],
                POWER_DELTAS[di]
            );
        }
        // positive branch: |delta| grows from index 5 up to 9
        for di in 5..9 {
            assert!(
                rate(di + 1) >= rate(di),
                "{stat}: power({}) < power({})",
                POWER_DELTAS[di + 1],
                POWER_DELTAS[di]
            );
        }
    }
    println!("[criterion 8] power reproduction (3 cells +/-2pp, monotone grid): PASS");
}

/// Numerical hygiene: derivative chains match finite differences at 1e-5
/// and the special functions pass their identity suites.
#[test]
fn criterion_9_numerical_hygiene() {
    // link chains
    for link in [Link::Log, Link::Identity, Link::Reciprocal, Link::ReciprocalSquared] {
        for i in 0..30 {
            let eta = 0.15 + 0.11 * i as f64;
            let c = link.chain(eta).unwrap();
            let scale = match link {
                Link::Log | Link::Identity => 1.0,
                _ => eta,
            };
            let (d1, d2, d3) = fd3(|e| link.mu_of_eta(e).unwrap(), eta, scale);
            assert!(close(c.d1, d1, 1e-5, 1e-9), "{link:?} d1 at {eta}");
            assert!(close(c.d2, d2, 1e-5, 1e-7), "{link:?} d2 at {eta}");
            assert!(close(c.d3, d3, 1e-5, 1e-6), "{link:?} d3 at {eta}");
        }
    }
    // phi derivative chain
    for family in [Family::Normal, Family::Gamma, Family::InverseNormal] {
        for &phi in &[0.5f64, 1.0, 3.0, 10.0, 44.0] {
            let d = family.phi_derivs(phi).unwrap();
            let h = 1e-4 * phi;
            let a1 = |p: f64| family.phi_derivs(p).unwrap().a1;
            let a11 = |p: f64| family.phi_derivs(p).unwrap().a1_1;
            let a12 = |p: f64| family.phi_derivs(p).unwrap().a1_2;
            let a13 = |p: f64| family.phi_derivs(p).unwrap().a1_3;
            let fd = |f: &dyn Fn(f64) -> f64| (f(phi + h) - f(phi - h)) / (2.0 * h);
            assert!(close(d.a1_1, fd(&a1), 1e-5, 1e-12));
            assert!(close(d.a1_2, fd(&a11), 1e-5, 1e-12));
            assert!(close(d.a1_3, fd(&a12), 1e-5, 1e-12));
            assert!(close(d.a1_4, fd(&a13), 1e-5, 1e-12));
        }
    }
    // cumulant derivative returns the mean
    for family in [Family::Normal, Family::Gamma, Family::InverseNormal] {
        for i in 0..20 {
            let mu = 0.3 + 0.43 * i as f64;
            let theta = family.canonical_theta(mu).unwrap();
            let h = 1e-6 * theta.abs().max(1e-2);
            let db = (family.b_of_theta(theta + h).unwrap()
                - family.b_of_theta(theta - h).unwrap())
                / (2.0 * h);
            assert!(close(db, mu, 1e-5, 1e-12), "{}: {db} vs {mu}", family.name());
        }
    }
    // special-function identity suites
    for &x in &[1e-3, 0.02, 0.4, 1.5, 7.0, 44.0, 431.0, 1e6] {
        let lhs = bartglm::ln_gamma(x + 1.0).unwrap();
        let rhs = bartglm::ln_gamma(x).unwrap() + x.ln();
        assert!(close(lhs, rhs, 1e-12, 1e-12));
    }
    let facts = [1.0, 1.0, 2.0, 6.0];
    let mut x = 0.5f64;
    while x <= 100.0 {
        for k in 0..4u32 {
            let lhs = bartglm::polygamma(k, x + 1.0).unwrap() - bartglm::polygamma(k, x).unwrap();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = sign * facts[k as usize] / x.powi(k as i32 + 1);
            assert!(close(lhs, rhs, 1e-9, 1e-12), "order {k} at {x}");
        }
        x *= 1.4;
    }
    for df in 1u32..=10 {
        let chisq = ChiSquared::new(df).unwrap();
        for &p in &[0.01f64, 0.05, 0.10, 0.5, 0.9, 0.95, 0.99] {
            let back: f64 = chisq.sf(chisq.quantile(p).unwrap()).unwrap();
            assert!((back - p).abs() < 1e-8, "df {df} p {p}: {back}");
        }
    }
    println!("[criterion 9] numerical hygiene (derivative chains, identity suites): PASS");
}
