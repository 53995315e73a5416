//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::Instant;

use nsdiag::diagnostics::ks_uniform_test;
use nsdiag::plotdata::relative_spread;
use nsdiag::sampler::true_logx_ball;
use nsdiag::{
    decompose_threads, error_budgets, imp_fraction, ks_pvalue, ks_statistic, logx_diagram, logx_expected,
    parse_dead_birth, perfect_ns_gaussian, posterior_uncertainty_band, read_native, sigma_combined,
    sigma_imp, simulate_logx, thread_ks_test, true_logz, write_dead_birth, write_native, EstimatorSpec,
    LikelihoodSpec, NsRun, ParamFunction, SamplerKind, SamplerSettings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::brute_ks;

/// Analytic log-evidence of the LogGamma mixture in two dimensions.
const LOGGAMMA_LOGZ: f64 = -8.18869;

struct Criterion {
    id: usize,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: usize) -> Self {
        Criterion { id, checks: Vec::new() }
    }

    fn check(&mut self, pass: bool, detail: String) {
        self.checks.push((detail, pass));
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, p)| *p)
    }

    fn report(&self, seconds: f64) -> bool {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let details: Vec<String> = self
            .checks
            .iter()
            .map(|(d, p)| format!("{}{}", if *p { "" } else { "!! " }, d))
            .collect();
        println!("criterion {:>2}: {verdict} [{seconds:.1}s] {}", self.id, details.join("; "));
        self.passed()
    }
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn radius(theta: &[f64]) -> f64 {
    theta.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn logz() -> EstimatorSpec {
    EstimatorSpec::LogEvidence
}

fn mean_t1() -> EstimatorSpec {
    EstimatorSpec::Mean(ParamFunction::Coordinate(0))
}

fn pairwise_pvalues(runs: &[NsRun], spec: &EstimatorSpec) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            out.push(thread_ks_test(&runs[i], &runs[j], spec).unwrap().p_value.unwrap());
        }
    }
    out
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

fn loggamma_runs(num_repeats: usize, seed: u64) -> Vec<NsRun> {
    let settings = SamplerSettings::new(100, seed).with_num_repeats(num_repeats);
    nsdiag::generate_runs(SamplerKind::Slice, LikelihoodSpec::loggamma_mix(2).unwrap(), settings, 20).unwrap()
}

/// Criteria 1 and 2 share the same 100 perfect-sampler runs.
fn criteria_1_2() -> (Criterion, Criterion) {
    let runs = nsdiag::generate_runs(
        SamplerKind::Perfect,
        LikelihoodSpec::gaussian(10).unwrap(),
        SamplerSettings::new(250, 1),
        100,
    )
    .unwrap();
    let budgets = error_budgets(&runs, &[logz(), mean_t1()], 200, 1, &[Some(true_logz(10)), Some(0.0)]).unwrap();
    let (bz, bt) = (&budgets[0], &budgets[1]);

    let mut c1 = Criterion::new(1);
    let m = bz.mean.value;
    c1.check((m + 40.9434).abs() <= 0.10, format!("mean logz {m:.4} vs -40.9434 (tol 0.10)"));
    let s = bz.sigma_bs.value;
    c1.check((0.30..=0.36).contains(&s), format!("sigma_bs(logz) {s:.4} in [0.30, 0.36]"));
    let s = bz.sigma_values.value;
    c1.check((0.28..=0.40).contains(&s), format!("sigma_values(logz) {s:.4} in [0.28, 0.40]"));
    let s = bt.sigma_bs.value;
    c1.check((0.019..=0.026).contains(&s), format!("sigma_bs(mean:t1) {s:.5} in [0.019, 0.026]"));
    let f = bz.imp_fraction.value;
    c1.check(f <= 0.45, format!("imp_fraction(logz) {f:.3} <= 0.45"));

    let mut c2 = Criterion::new(2);
    for b in &budgets {
        let (sv, sb) = (b.sigma_values.value, b.sigma_bs.value);
        let rel = (sv - sb).abs() / sb;
        c2.check(rel <= 0.20, format!("{}: sigma_values {sv:.4} vs sigma_bs {sb:.4} (rel {rel:.3} <= 0.20)", b.estimator));
    }
    (c1, c2)
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3);
    // true shrinkage ratios from perfect runs, counted while the contour
    // ball lies inside the prior box so its volume is known exactly
    let (d, n) = (10, 250);
    let mut draws = Vec::new();
    let mut seed = 300;
    while draws.len() < 10_000 {
        let run = perfect_ns_gaussian(d, &SamplerSettings::new(n, seed)).unwrap();
        seed += 1;
        let pts = run.points();
        for i in 1..run.len() {
            let (r0, r1) = (radius(&pts[i - 1].params), radius(&pts[i].params));
            if r0 <= 30.0 && draws.len() < 10_000 {
                let log_t = true_logx_ball(d, r1) - true_logx_ball(d, r0);
                draws.push(-f64::from(run.nlive()[i]) * log_t);
            }
        }
    }
    let (mean, sd) = mean_std(&draws);
    let se = sd / (draws.len() as f64).sqrt();
    c.check(
        (mean - 1.0).abs() <= 3.0 * se,
        format!("mean -n log t = {mean:.4} over {} steps (1 +- {:.4})", draws.len(), 3.0 * se),
    );

    let run = perfect_ns_gaussian(2, &SamplerSettings::new(20, 7)).unwrap();
    let n_sim = 100_000;
    let sims = simulate_logx(&run, n_sim, 8).unwrap();
    let expected = logx_expected(&run);
    let mut worst = 0.0f64;
    for (i, &e) in expected.iter().enumerate() {
        let column: Vec<f64> = sims.iter().map(|row| row[i]).collect();
        let (m, sd) = mean_std(&column);
        worst = worst.max((m - e).abs() / (sd / (n_sim as f64).sqrt()));
    }
    c.check(
        worst <= 3.0,
        format!("simulate_logx column means over {} points: worst |z| {worst:.3} <= 3", run.len()),
    );
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let len = rng.random_range(1..=8);
        // coarse values so ties occur
        (0..len).map(|_| f64::from(rng.random_range(0..6u8)) * 0.5).collect()
    };
    let mut mismatches = 0;
    for _ in 0..200 {
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        if ks_statistic(&a, &b).unwrap() != brute_ks(&a, &b) {
            mismatches += 1;
        }
    }
    c.check(mismatches == 0, format!("{mismatches} oracle mismatches over 200 pairs"));

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (n1, n2) = (rng.random_range(1..500usize), rng.random_range(1..500usize));
        let d: f64 = rng.random();
        let m = (n1 * n2) as f64 / (n1 + n2) as f64;
        let direct = (2.0 * (-2.0 * m * d * d).exp()).min(1.0);
        worst = worst.max((ks_pvalue(d, n1, n2).unwrap() - direct).abs());
    }
    c.check(worst <= 1e-12, format!("p-value max deviation {worst:.2e} <= 1e-12"));

    let mut violations = 0;
    for _ in 0..100 {
        let (a, b, x) = (sample(&mut rng), sample(&mut rng), sample(&mut rng));
        let (ab, ba, ax, xb) = (
            ks_statistic(&a, &b).unwrap(),
            ks_statistic(&b, &a).unwrap(),
            ks_statistic(&a, &x).unwrap(),
            ks_statistic(&x, &b).unwrap(),
        );
        let ok = ks_statistic(&a, &a).unwrap() == 0.0
            && ab == ba
            && (0.0..=1.0).contains(&ab)
            && ab <= ax + xb + 1e-15;
        if !ok {
            violations += 1;
        }
    }
    c.check(violations == 0, format!("{violations} metric-axiom violations over 100 triples"));
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5);
    let runs = nsdiag::generate_runs(
        SamplerKind::Perfect,
        LikelihoodSpec::gaussian(4).unwrap(),
        SamplerSettings::new(100, 5),
        20,
    )
    .unwrap();
    for spec in [logz(), mean_t1()] {
        let p = pairwise_pvalues(&runs, &spec);
        let (d, pu) = ks_uniform_test(&p).unwrap();
        let ones = p.iter().filter(|&&x| x >= 1.0).count();
        c.check(
            pu > 0.01,
            format!("{spec}: {} p-values, KS vs uniform D {d:.3} p {pu:.2e} > 0.01 ({ones} equal 1)", p.len()),
        );
    }
    c
}

fn criteria_6_7() -> (Criterion, Criterion) {
    let by_repeats: Vec<(usize, Vec<NsRun>)> = [1, 5, 50].into_iter().map(|nr| (nr, loggamma_runs(nr, 60 + nr as u64))).collect();
    let budgets: Vec<_> = by_repeats
        .iter()
        .map(|(_, runs)| error_budgets(runs, &[mean_t1(), logz()], 200, 6, &[None, Some(LOGGAMMA_LOGZ)]).unwrap())
        .collect();

    let mut c6 = Criterion::new(6);
    let si: Vec<f64> = budgets.iter().map(|b| b[0].sigma_imp.value).collect();
    c6.check(
        si[0] > si[2],
        format!("sigma_imp(mean:t1) {:.3} / {:.3} / {:.3} at num_repeats 1 / 5 / 50; first exceeds last", si[0], si[1], si[2]),
    );
    let f = budgets[0][0].imp_fraction.value;
    c6.check(f >= 0.5, format!("imp_fraction(mean:t1) at num_repeats 1 = {f:.3} >= 0.5"));
    let med = median(pairwise_pvalues(&by_repeats[0].1, &mean_t1()));
    c6.check(med < 0.05, format!("median pairwise p(mean:t1) at num_repeats 1 = {med:.2e} < 0.05"));

    let mut c7 = Criterion::new(7);
    let b = &budgets[2][1];
    let bound = 3.0 * b.sigma_values.value / (b.n_runs as f64).sqrt();
    let m = b.mean.value;
    c7.check(
        (m - LOGGAMMA_LOGZ).abs() <= bound,
        format!("mean logz {m:.4} vs {LOGGAMMA_LOGZ} (tol {bound:.4})"),
    );
    let (r, s) = (b.sigma_imp_rmse.unwrap(), b.sigma_imp);
    let tol = r.unc.hypot(s.unc);
    c7.check(
        (r.value - s.value).abs() <= tol,
        format!(
            "sigma_imp_rmse {:.4}({:.4}) vs sigma_imp {:.4}({:.4}) differ by <= {tol:.4}",
            r.value, r.unc, s.value, s.unc
        ),
    );
    (c6, c7)
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // The input c = hypot(a, b) is itself rounded; that half-ulp error is
    // amplified by c / a in sqrt(c^2 - b^2), so "machine precision" is
    // measured in units of the propagated input rounding.
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let a: f64 = rng.random_range(0.0..10.0);
        let b: f64 = rng.random_range(0.0..10.0);
        let c = a.hypot(b);
        let got = sigma_imp(c, b).unwrap();
        let ulp_scale = f64::EPSILON * (c * c / a + a);
        worst = worst.max((got - a).abs() / ulp_scale);
    }
    c.check(worst <= 2.0, format!("sigma_imp identity max error {worst:.2} x eps (c^2/a + a) <= 2"));

    let s = 0.37;
    let f = imp_fraction(2f64.sqrt() * s, s).unwrap();
    let err = (f - std::f64::consts::FRAC_1_SQRT_2).abs();
    c.check(err <= 4.0 * f64::EPSILON, format!("imp_fraction(sqrt2 s, s) = {f} (error {err:.1e})"));

    let exact = [(0.3, 1), (1.7, 4), (2.5, 100), (0.01, 7)]
        .iter()
        .all(|&(sig, n)| sigma_combined(sig, n).unwrap() == sig / (n as f64).sqrt());
    c.check(exact, "sigma_combined(s, N) == s / sqrt(N) exactly".into());
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9);
    let mut runs = nsdiag::generate_runs(
        SamplerKind::Perfect,
        LikelihoodSpec::gaussian(3).unwrap(),
        SamplerSettings::new(30, 9),
        25,
    )
    .unwrap();
    runs.extend(
        nsdiag::generate_runs(
            SamplerKind::Slice,
            LikelihoodSpec::loggamma_mix(2).unwrap(),
            SamplerSettings::new(25, 90).with_num_repeats(2),
            25,
        )
        .unwrap(),
    );
    let mut native_bad = 0;
    let mut dead_birth_bad = 0;
    for run in &runs {
        let back = read_native(&write_native(run).unwrap()).unwrap();
        let bits = |r: &NsRun| -> Vec<u64> {
            r.points()
                .iter()
                .flat_map(|p| p.params.iter().chain([&p.loglike, &p.birth_loglike]).map(|x| x.to_bits()).collect::<Vec<_>>())
                .collect()
        };
        if bits(&back) != bits(run) || back.meta() != run.meta() || back.nlive() != run.nlive() {
            native_bad += 1;
        }
        let imported = parse_dead_birth(&write_dead_birth(run, -1e30).unwrap(), None).unwrap();
        let threads = |r: &NsRun| -> Vec<(f64, Vec<nsdiag::SamplePoint>)> {
            decompose_threads(r)
                .unwrap()
                .into_iter()
                .map(|t| (t.entry_loglike, t.run.points().to_vec()))
                .collect()
        };
        if imported.thread_labels() != run.thread_labels() || threads(&imported) != threads(run) {
            dead_birth_bad += 1;
        }
    }
    c.check(native_bad == 0, format!("{native_bad}/{} runs differ after native round trip", runs.len()));
    c.check(dead_birth_bad == 0, format!("{dead_birth_bad}/{} runs change threads after dead-birth round trip", runs.len()));
    c
}

fn criterion_10() -> Criterion {
    let mut c = Criterion::new(10);
    let gauss: Vec<NsRun> = (0..3).map(|s| perfect_ns_gaussian(10, &SamplerSettings::new(250, 100 + s)).unwrap()).collect();
    let lg = loggamma_runs(50, 110);

    let mut bands = 0;
    let mut not_nested = 0;
    for (runs, fns) in [
        (&gauss, vec![ParamFunction::Coordinate(0), ParamFunction::Radial]),
        (&lg[..3].to_vec(), vec![ParamFunction::Coordinate(0), ParamFunction::Coordinate(1)]),
    ] {
        for run in runs {
            for f in &fns {
                let band = posterior_uncertainty_band(run, f, None, 100, 10).unwrap();
                bands += 1;
                if !band.is_nested() {
                    not_nested += 1;
                }
            }
        }
    }
    c.check(not_nested == 0, format!("{not_nested}/{bands} bands not nested"));

    let diagram = logx_diagram(&lg, &[ParamFunction::Coordinate(0)], 0, 0, 10).unwrap();
    let both = diagram
        .scatter
        .iter()
        .filter(|s| s.values.iter().any(|v| (v - 10.0).abs() < 3.0) && s.values.iter().any(|v| (v + 10.0).abs() < 3.0))
        .count();
    c.check(both == lg.len(), format!("{both}/{} LogGamma runs have t1 scatter in both branches", lg.len()));

    let mut worst = 0.0f64;
    for run in &gauss {
        let r: Vec<f64> = run.points().iter().map(|p| radius(&p.params)).collect();
        let logx = logx_expected(run);
        // constant-nlive body, once contours no longer touch the prior box
        let body = run.len() - 250;
        let start = logx.partition_point(|&x| x > -1.0);
        worst = worst.max(relative_spread(&logx[start..body], &r[start..body], 1.0));
    }
    c.check(worst < 0.05, format!("radial spread at fixed log X {worst:.4} < 0.05"));
    c
}

fn main() {
    let mut all = true;
    let mut timed = |f: &dyn Fn() -> Vec<Criterion>| {
        let t = Instant::now();
        let cs = f();
        let secs = t.elapsed().as_secs_f64();
        for c in &cs {
            all &= c.report(secs);
        }
    };
    timed(&|| {
        let (a, b) = criteria_1_2();
        vec![a, b]
    });
    timed(&|| vec![criterion_3()]);
    timed(&|| vec![criterion_4()]);
    timed(&|| vec![criterion_5()]);
    timed(&|| {
        let (a, b) = criteria_6_7();
        vec![a, b]
    });
    timed(&|| vec![criterion_8()]);
    timed(&|| vec![criterion_9()]);
    timed(&|| vec![criterion_10()]);
    if !all {
        println!("acceptance: some criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
