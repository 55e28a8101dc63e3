//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use multinorm::certify::{certify_ltv_two_mode, SyncInputs};
use multinorm::matcore::{eig_2x2, Mat};
use multinorm::models::{
    blink_signal, lambda2, laplacian, ltv_example1, ltv_example2, BlinkNetConfig, ChuaParams, Ex2Variant, Graph,
};
use multinorm::norms::{matrix_measure, measure_limit_oracle, norm_eval, Lp};
use multinorm::par::Exec;
use multinorm::simsw::{coppel_audit, pair_divergence, periodic_orbit_check, AuditMode};
use multinorm::transact::{beta_exact, prop4_bound, sampled_sup, Prop4Direction, Prop4Variant};
use multinorm::{ModeId, NormSpec, SwitchingSignal};
use multinorm_cli::config::{GraphSource, CHUA_XI};
use multinorm_cli::repro::{example_constants, example_norms, example_rate, repro, Status};
use multinorm_cli::sync::{chua_constants, resolve_graph, simulate_network, uncoupled_signal};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 128;

struct Check {
    id: u32,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn check(id: u32, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (pass, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(r) => r,
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        }
    };
    let c = Check { id, title, pass, detail };
    println!(
        "{} [{:>2}] {} ({:.1}s): {}",
        if c.pass { "PASS" } else { "FAIL" },
        c.id,
        c.title,
        start.elapsed().as_secs_f64(),
        c.detail
    );
    c
}

fn within(v: f64, target: f64, tol: f64) -> bool {
    (v - target).abs() <= tol
}

fn c1() -> (bool, String) {
    let (mu, _, _) = example_constants(&ltv_example1([0.0, 0.0])).unwrap();
    (mu[0] <= -1.0 + 1e-3 && mu[1] <= -0.6807 + 1e-3, format!("mu1 = {:.6}, mu2 = {:.6}", mu[0], mu[1]))
}

fn c2() -> (bool, String) {
    let (_, a12, a21) = example_constants(&ltv_example1([0.0, 0.0])).unwrap();
    let (_, b12, b21) = example_constants(&ltv_example2(Ex2Variant::Corrected)).unwrap();
    let ex1 = within(a12, 1.796, 0.01) && within(a21, 1.05, 0.01);
    let ex2 = within(b12, 1.9079, 0.01) && within(b21, 10.4207, 0.05);
    (
        ex1 && ex2,
        format!(
            "example 1: beta12 = {a12:.4} (want 1.796), beta21 = {a21:.4} (want 1.05) [{}]; \
             example 2: beta12 = {b12:.4}, beta21 = {b21:.4} [{}]",
            if ex1 { "ok" } else { "exact values differ" },
            if ex2 { "ok" } else { "differ" }
        ),
    )
}

fn c3() -> (bool, String) {
    let ex2 = ltv_example2(Ex2Variant::Corrected);
    let (mu, _, _) = example_constants(&ex2).unwrap();
    let mut eig: Vec<f64> = eig_2x2(&(&ex2.a1 + &ex2.a2).scale(0.5)).unwrap().iter().map(|z| z.re).collect();
    eig.sort_by(f64::total_cmp);
    let measures = within(mu[0], -2.6178, 5e-3) && within(mu[1], 0.9188, 5e-3);
    let eigs = within(eig[0], -6.3988, 1e-3) && within(eig[1], 0.2311, 1e-3);
    (
        measures && eigs,
        format!(
            "measures {:.4}, {:.4} (want -2.6178, 0.9188) [{}]; averaged eigenvalues {:.4}, {:.4} [{}]",
            mu[0],
            mu[1],
            if measures { "ok" } else { "differ" },
            eig[0],
            eig[1],
            if eigs { "ok" } else { "differ" }
        ),
    )
}

fn c4() -> (bool, String) {
    let w1 = NormSpec::weighted(Lp::One, CHUA_XI.to_vec()).unwrap();
    let mu = ChuaParams::default()
        .jacobians()
        .iter()
        .map(|j| matrix_measure(&w1, j).unwrap().value)
        .fold(f64::NEG_INFINITY, f64::max);
    (within(mu, 3.2829, 1e-3), format!("mu0 = {mu:.6}"))
}

fn c5() -> (bool, String) {
    let ex1 = ltv_example1([0.0, 0.0]);
    let ex2 = ltv_example2(Ex2Variant::Corrected);
    let (q1, q2) = (&ex1.quoted, &ex2.quoted);
    let r1 = example_rate(&ex1, q1.alpha, q1.beta12, q1.beta21).unwrap();
    let r2 = example_rate(&ex2, q2.alpha, q2.beta12, q2.beta21).unwrap();
    let ltv = certify_ltv_two_mode(q2.alpha[0], q2.alpha[1], q2.beta12, q2.beta21, 0.25).unwrap().c;
    let report = repro().unwrap();
    let flagged = ["ex2.rate", "sync.period"]
        .iter()
        .all(|id| report.row(id).is_some_and(|r| r.status == Status::Mismatch));
    let pass = within(r1, 0.5232, 1e-3) && within(r2, 0.1020, 1e-3) && within(ltv, r2, 1e-12) && flagged;
    (pass, format!("example 1 c = {r1:.4}, example 2 c = {r2:.4}; rate and period rows flagged: {flagged}"))
}

fn c6() -> (bool, String) {
    let norms_of = |ex: &multinorm::models::LtvExample| {
        let (n1, n2) = example_norms(ex).unwrap();
        BTreeMap::from([(ModeId(1), n1), (ModeId(2), n2)])
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for b in [[0.0, 0.0], [1.0, 1.0]] {
        let ex = ltv_example1(b);
        let pd = pair_divergence(&ex.system().unwrap(), &ex.signal(), &[0.5, 0.1], &[0.4, 0.1], &norms_of(&ex), 0.0, 20.0, 1e-3)
            .unwrap();
        let ratio = pd.error.last().unwrap() / pd.error[0];
        pass &= pd.fitted_rate <= -0.5232 + 0.05 && ratio <= 1e-6;
        detail.push(format!("ex1 B = {b:?}: rate {:.4}, error ratio {ratio:.2e}", pd.fitted_rate));
    }
    let ex = ltv_example2(Ex2Variant::Corrected);
    let pd = pair_divergence(&ex.system().unwrap(), &ex.signal(), &[1.0, 0.5], &[0.0, 0.0], &norms_of(&ex), 0.0, 100.0, 1e-3)
        .unwrap();
    pass &= pd.fitted_rate <= -0.102 + 0.05;
    detail.push(format!("ex2: rate {:.4}", pd.fitted_rate));
    (pass, detail.join("; "))
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..5.0)).collect()
}

fn random_mat(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Mat {
    Mat::new(n, n, (0..n * n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let m = random_mat(rng, n, 1.0);
    &(&m.transpose() * &m) + &Mat::identity(n).scale(0.2)
}

fn random_norm(rng: &mut ChaCha8Rng, n: usize, family: usize) -> NormSpec {
    match family % 4 {
        0 => NormSpec::weighted(Lp::One, random_weights(rng, n)).unwrap(),
        1 => NormSpec::weighted(Lp::Two, random_weights(rng, n)).unwrap(),
        2 => NormSpec::weighted(Lp::Inf, random_weights(rng, n)).unwrap(),
        _ => NormSpec::quadratic(&random_spd(rng, n)).unwrap(),
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn c7() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: Vec<String> = Vec::new();
    let mut fail = |name: &str, case: usize, msg: String| failures.push(format!("{name} case {case}: {msg}"));

    for case in 0..CASES {
        let n = 2 + case % 3;
        let spec = random_norm(&mut rng, n, case);
        let a = random_mat(&mut rng, n, 2.0);
        let b = random_mat(&mut rng, n, 2.0);
        let mu = |m: &Mat| matrix_measure(&spec, m).unwrap().value;

        let oracle = measure_limit_oracle(&spec, &a, 1e-6).unwrap();
        if (mu(&a) - oracle).abs() > 1e-4 * mu(&a).abs().max(1.0) {
            fail("oracle", case, format!("{} vs {oracle}", mu(&a)));
        }
        if mu(&(&a + &b)) > mu(&a) + mu(&b) + 1e-9 {
            fail("subadditivity", case, String::new());
        }
        let c = rng.random_range(0.0..5.0);
        if (mu(&a.scale(c)) - c * mu(&a)).abs() > 1e-9 * (1.0 + c * mu(&a).abs()) {
            fail("homogeneity", case, String::new());
        }

        let spec2 = random_norm(&mut rng, 2, case);
        let a2 = random_mat(&mut rng, 2, 3.0);
        let (hi, lo) = (matrix_measure(&spec2, &a2).unwrap().value, -matrix_measure(&spec2, &a2.scale(-1.0)).unwrap().value);
        for z in eig_2x2(&a2).unwrap() {
            if z.re < lo - 1e-12 || z.re > hi + 1e-12 {
                fail("spectral bound", case, format!("{lo} <= {} <= {hi}", z.re));
            }
        }

        let from = random_norm(&mut rng, n, case);
        let to = random_norm(&mut rng, n, case / 4 + 1);
        let ab = beta_exact(&from, &to).unwrap().value;
        let ba = beta_exact(&to, &from).unwrap().value;
        for _ in 0..200 {
            let x = random_vec(&mut rng, n);
            if norm_eval(&to, &x).unwrap() > ab * norm_eval(&from, &x).unwrap() * (1.0 + 1e-9) {
                fail("beta soundness", case, format!("{} -> {}", from.label(), to.label()));
                break;
            }
        }
        if ab * ba < 1.0 - 1e-9 {
            fail("reciprocity", case, format!("{ab} * {ba}"));
        }

        let (lp, lq) = [(Lp::Two, Lp::One), (Lp::Inf, Lp::One), (Lp::Inf, Lp::Two)][case % 3];
        let (xi, eta) = (random_weights(&mut rng, n), random_weights(&mut rng, n));
        let sp = NormSpec::weighted(lp, xi.clone()).unwrap();
        let sq = NormSpec::weighted(lq, eta.clone()).unwrap();
        for (dir, f, t) in [(Prop4Direction::QToP, &sq, &sp), (Prop4Direction::PToQ, &sp, &sq)] {
            let bound = prop4_bound(lp.exponent(), &xi, lq.exponent(), &eta, dir, Prop4Variant::Corrected).unwrap().value;
            let exact = beta_exact(f, t).unwrap().value;
            let sampled = sampled_sup(f, t, 2000, case as u64, Exec::default()).unwrap().value;
            if !(sampled <= exact * (1.0 + 1e-9) && exact <= bound * (1.0 + 1e-9)) {
                fail("beta ordering", case, format!("{sampled} <= {exact} <= {bound}"));
            }
        }
    }

    let outers = [Lp::One, Lp::Two, Lp::Inf];
    for case in 0..CASES {
        let inner = vec![random_norm(&mut rng, 2, case), random_norm(&mut rng, 2, case + 1)];
        let outer = NormSpec::weighted(outers[case % 3], random_weights(&mut rng, 2)).unwrap();
        let spec = NormSpec::structured(vec![2, 2], inner, outer).unwrap();
        let a = random_mat(&mut rng, 4, 2.0);
        let bound = matrix_measure(&spec, &a).unwrap().value;
        let lower = measure_limit_oracle(&spec, &a, 1e-6).unwrap();
        if lower > bound + 1e-6 {
            fail("hierarchical bound", case, format!("{lower} > {bound}"));
        }
    }

    for case in 0..CASES {
        let n = 2 + case % 2;
        let mut modes = BTreeMap::new();
        for m in 1..=2u32 {
            let shift = Mat::identity(n).scale(rng.random_range(0.5..2.0));
            let a = &random_mat(&mut rng, n, 1.0) - &shift;
            let norm = random_norm(&mut rng, n, case + m as usize);
            let alpha = matrix_measure(&norm, &a).unwrap().value;
            modes.insert(ModeId(m), AuditMode { a, alpha, norm });
        }
        let (d1, d2) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
        let signal = SwitchingSignal::alternating(ModeId(1), d1, ModeId(2), d2, 0.0).unwrap();
        let x0 = random_vec(&mut rng, n);
        let report = coppel_audit(&modes, &signal, &x0, 0.0, 2.0, 1e-3).unwrap();
        if report.violations > 0 {
            fail("coppel", case, format!("max ratio {}", report.max_ratio));
        }
    }

    let pass = failures.is_empty();
    let detail = if pass {
        format!("{CASES} cases each: oracle, subadditivity, homogeneity, spectral bound, beta soundness/ordering/reciprocity, hierarchical bound, Coppel")
    } else {
        format!("{} failures, first: {}", failures.len(), failures[0])
    };
    (pass, detail)
}

fn c8() -> (bool, String) {
    let ex = ltv_example1([1.0, 1.0]);
    let r = periodic_orbit_check(&ex.system().unwrap(), &ex.signal(), &[0.5, 0.1], 20, 5, 1e-3).unwrap();
    (r.passed && r.max_mismatch <= 1e-5, format!("period {} s, mismatch {:.2e}", r.period, r.max_mismatch))
}

fn c9() -> (bool, String) {
    let dt = 1e-3;
    let graph: Graph = resolve_graph(&GraphSource::File("graph10.json".into()), Path::new(&common::fixture(""))).unwrap();
    let k = multinorm_cli::repro::SHIPPED_K;
    let duty_off = multinorm_cli::repro::SHIPPED_DUTY_OFF;
    let lam = lambda2(&laplacian(&graph).unwrap()).unwrap();
    let consts = chua_constants(&ChuaParams::default(), &CHUA_XI, k, lam, &Mat::identity(3)).unwrap();
    let inputs = SyncInputs {
        mu0: consts.mu0,
        mu1: consts.mu1,
        beta01: consts.beta01,
        beta10: consts.beta10,
        duty_off,
        gamma_dissipative: consts.gamma_dissipative,
    };
    let t_star = multinorm::certify::solve_min_period(&inputs, 0.0).unwrap();
    let period = (0.5 * t_star).max(10.0 * dt);
    let horizon = 200.0 * period;
    let cfg = BlinkNetConfig { chua: ChuaParams::default(), graph, k, gamma: None };
    let on = simulate_network(&cfg, &blink_signal(period, duty_off).unwrap(), horizon, 0.5, dt, 0).unwrap();
    let off = simulate_network(&cfg, &uncoupled_signal(), horizon, 0.5, dt, 0).unwrap();
    let synced = on.time_below_1e_3.is_some();
    let apart = off.min_error >= 0.1 * off.initial_error;
    (
        synced && apart,
        format!(
            "lambda2 {lam:.4}, mu0 {:.4}, mu1 {:.4}, beta01 {:.4}, beta10 {:.4}, T* {t_star:.4}; \
             blinking at T = {period:.4}: error below 1e-3 at t = {}; uncoupled min/initial = {:.3}",
            consts.mu0,
            consts.mu1,
            consts.beta01,
            consts.beta10,
            on.time_below_1e_3.map_or("never".into(), |t| format!("{t:.2}")),
            off.min_error / off.initial_error
        ),
    )
}

fn c10() -> (bool, String) {
    let mut problems = Vec::new();
    for args in [&["repro"][..], &["repro", "--format", "text"][..]] {
        let (c1, a, _) = common::run(args);
        let (c2, b, _) = common::run(args);
        if c1 != 0 || c2 != 0 || a != b {
            problems.push(format!("{} not reproducible", args.join(" ")));
        }
    }
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for &(name, cmd, config, code) in common::GOLDEN {
        let first = common::golden_output(cmd, config);
        if update {
            std::fs::write(common::fixtures().join("golden").join(name), &first.1).unwrap();
        }
        let second = common::golden_output(cmd, config);
        let golden = std::fs::read_to_string(common::fixtures().join("golden").join(name)).unwrap_or_default();
        if first != second || first.1 != golden || first.0 != code {
            problems.push(format!("{name} unstable or differs from golden"));
        }
    }
    (
        problems.is_empty(),
        if problems.is_empty() {
            format!("repro byte-identical across runs; {} golden fixtures stable", common::GOLDEN.len())
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let results = [
        check(1, "quadratic measures, example 1", c1),
        check(2, "transaction coefficients, examples 1 and 2", c2),
        check(3, "quadratic measures and averaged eigenvalues, example 2", c3),
        check(4, "Chua weighted-1 measure bound", c4),
        check(5, "certificate arithmetic and mismatch flags", c5),
        check(6, "certified rate dominates simulated divergence", c6),
        check(7, "randomized property suites", c7),
        check(8, "periodic entrainment, example 1", c8),
        check(9, "blinking network synchronization", c9),
        check(10, "CLI determinism and golden fixtures", c10),
    ];
    let failed: Vec<u32> = results.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {failed:?}");
        std::process::exit(1);
    }
}
