//! Acceptance criteria 1-7, one PASS/FAIL/SKIP line each.
//!
//! Criterion 6 needs the reference dataset as a scored-cases CSV
//! (the format written by `psychoprobe score`) named by `PSYCHOPROBE_OSF_CASES`.

mod common;

use std::panic;
use std::path::Path;
use std::time::{Duration, Instant};

use psychoprobe_core::mixture::{fit, select, waic, Candidate, MixtureInit, MixturePrior, SamplerConfig};
use psychoprobe_core::parser::{classify_validity, extract_ratings, ParsedResponse, ValidityReason};
use psychoprobe_core::questionnaire::{Factor, QuestionnaireBank};
use psychoprobe_core::report::{mixture_sweep, MixtureOptions};
use psychoprobe_core::scoring::{self, score_case, CaseRecord, Measure};
use psychoprobe_core::stats::anova::anova_oneway;
use psychoprobe_core::stats::correlation::pearson;
use psychoprobe_core::stats::kde::{kde, BandwidthRule};
use psychoprobe_core::stats::normality::{ppcc_threshold, shapiro_wilk};
use psychoprobe_core::stats::ols::{ols_dummy, INTERCEPT};
use psychoprobe_core::stats::{mean, std_dev};
use psychoprobe_core::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uuid::Uuid;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {:.1} s, limit {} s", took.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(())
    }
}

fn on_lattice(x: f64) -> bool {
    (1.0..=7.0).contains(&x) && (2.0 * x).fract() == 0.0
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let bank = QuestionnaireBank::english();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut problems = Vec::new();
    while checked < 10_000 {
        let ratings: [i32; 10] = std::array::from_fn(|_| rng.random_range(1..=7));
        let resp = ParsedResponse::from_ratings(ratings);
        if !classify_validity(&resp).valid {
            continue;
        }
        checked += 1;
        let case = score_case(&resp, &bank, "en", Uuid::nil()).expect("valid vector scores");
        let mirrored = score_case(&ParsedResponse::from_ratings(ratings.map(|r| 8 - r)), &bank, "en", Uuid::nil())
            .expect("mirrored vector scores");
        for f in Factor::ALL {
            if !on_lattice(case.score(f)) || case.distance(f) > 6 {
                problems.push(format!("{ratings:?}: {f:?} off the lattice"));
            }
            if case.score(f) + mirrored.score(f) != 8.0 || case.distance(f) != mirrored.distance(f) {
                problems.push(format!("{ratings:?}: {f:?} not symmetric"));
            }
        }
    }
    if let Err(e) = within(Duration::from_secs(1), started) {
        problems.push(e);
    }
    check(
        problems.is_empty(),
        format!("{checked} vectors, {} problems {:?}", problems.len(), problems.first()),
    )
}

fn fixture(name: &str) -> Vec<f64> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_f = 0.0f64;
    let mut omega_violations = 0;
    for _ in 0..100 {
        let n1 = rng.random_range(3..40);
        let n2 = rng.random_range(3..40);
        let shift = rng.random_range(-2.0..2.0);
        let scale = rng.random_range(0.2..3.0);
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n1 + n2 {
            let z = f64::sample_standard_normal(&mut rng);
            values.push(if i < n1 { z * scale } else { z * scale + shift });
            labels.push(if i < n1 { "a" } else { "b" });
        }
        let a = anova_oneway(&values, &labels).unwrap();
        let t = ols_dummy(&values, &labels, "a").unwrap().term("b").unwrap().t;
        worst_f = worst_f.max((a.f - t * t).abs() / a.f.abs().max(1.0));
        if a.omega_sq > a.eta_sq || a.omega_sq_raw > a.eta_sq {
            omega_violations += 1;
        }
    }

    // scipy.stats.shapiro on the same files
    let references = [
        ("normal200.txt", 0.9960076994319728),
        ("exponential50.txt", 0.9010483157606474),
        ("student100.txt", 0.9660779233577181),
        ("small12.txt", 0.9498640126401032),
    ];
    let worst_w = references
        .iter()
        .map(|(name, w)| (shapiro_wilk(&fixture(name)).unwrap().w - w).abs())
        .fold(0.0, f64::max);

    let sample: Vec<f64> = (0..2000).map(|_| f64::sample_standard_normal(&mut rng)).collect();
    let integral = kde(&sample, BandwidthRule::Scott, 512).unwrap().integral();
    let timing = within(Duration::from_secs(10), started);
    check(
        worst_f < 1e-9 && omega_violations == 0 && worst_w < 1e-3 && (integral - 1.0).abs() < 0.01 && timing.is_ok(),
        format!(
            "max |F - t^2| {worst_f:.1e}, omega^2 > eta^2 in {omega_violations}/100, max |W - ref| {worst_w:.1e} on {} fixtures, KDE integral {integral:.5}{}",
            references.len(),
            timing.err().map(|e| format!(", {e}")).unwrap_or_default()
        ),
    )
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let (r, r2) = ppcc_threshold::<f64>(695, 0.05, 20_000, 695).unwrap();
    let timing = within(Duration::from_secs(60), started);
    check(
        (r - 0.9978).abs() <= 0.0005 && timing.is_ok(),
        format!(
            "threshold r {r:.5} (r^2 {r2:.5}), target 0.9978 +- 0.0005, {:.1} s",
            started.elapsed().as_secs_f64()
        ),
    )
}

fn select_k(values: &[f64], seed: u64) -> (usize, Vec<(f64, bool)>) {
    let scores: Vec<(f64, bool)> = (1..=3)
        .map(|k| {
            let prior = MixturePrior::from_data(values, k).unwrap();
            let config = SamplerConfig {
                seed: seed * 10 + k as u64,
                ..SamplerConfig::default()
            };
            let f = fit(values, k, &prior, &MixtureInit::standard(values, k), &config).unwrap();
            (waic(&f, values).unwrap().waic, f.converged)
        })
        .collect();
    let candidates: Vec<Candidate<f64>> = scores
        .iter()
        .enumerate()
        .map(|(i, &(w, c))| Candidate {
            k: i + 1,
            waic: w,
            converged: c,
        })
        .collect();
    let best = select("xx", "acceptance", &candidates).map_or(0, |r| r.best_k);
    (best, scores)
}

fn criterion_4() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let planted: Vec<f64> = (0..400)
        .map(|i| (if i % 2 == 0 { 2.0 } else { 6.0 }) + 0.5 * f64::sample_standard_normal(&mut rng))
        .collect();
    let prior = MixturePrior::from_data(&planted, 2).unwrap();
    let f2 = fit(&planted, 2, &prior, &MixtureInit::standard(&planted, 2), &SamplerConfig { seed: 42, ..SamplerConfig::default() }).unwrap();
    let pm = f2.posterior_mean();
    let means_ok = (pm.means[0] - 2.0).abs() < 0.2 && (pm.means[1] - 6.0).abs() < 0.2;
    let weights_ok = pm.weights.iter().all(|w| (w - 0.5).abs() < 0.1);
    let (best, scores) = select_k(&planted, 40);
    let gap = scores[0].0 - scores[1].0;

    // K = 1 prior predictive: mu ~ N(4, 1), sigma ~ HalfNormal(1), n = 200
    let mut ones = 0;
    for rep in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let mu = 4.0 + f64::sample_standard_normal(&mut rng);
        let sigma = f64::sample_standard_normal(&mut rng).abs();
        let y: Vec<f64> = (0..200).map(|_| mu + sigma * f64::sample_standard_normal(&mut rng)).collect();
        if select_k(&y, 500 + rep).0 == 1 {
            ones += 1;
        }
    }
    let timing = within(Duration::from_secs(300), started);
    check(
        means_ok && weights_ok && gap > 10.0 && best == 2 && ones >= 14 && timing.is_ok(),
        format!(
            "planted means {:.3}/{:.3} weights {:.3}/{:.3}, WAIC(1) - WAIC(2) = {gap:.1}, selected K = {best}; K = 1 selected in {ones}/20 null replicates; {:.0} s",
            pm.means[0],
            pm.means[1],
            pm.weights[0],
            pm.weights[1],
            started.elapsed().as_secs_f64()
        ),
    )
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &["1.", "10", ": ", "-", "(", ")", "\n", "７", "Extraverted", " ", "：", "8.", "\u{200b}", "\r\n"];
    let len = rng.random_range(0..120);
    let mut s = String::new();
    for _ in 0..len {
        if rng.random_bool(0.5) {
            s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        } else {
            let c = loop {
                if let Some(c) = char::from_u32(rng.random_range(0..0x11_0000)) {
                    break c;
                }
            };
            s.push(c);
        }
    }
    s
}

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let bank = QuestionnaireBank::english();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let previous_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut panics = 0;
    for _ in 0..100_000 {
        let text = random_text(&mut rng);
        let ok = panic::catch_unwind(|| classify_validity(&extract_ratings(&text, &bank))).is_ok();
        if !ok {
            panics += 1;
        }
    }
    panic::set_hook(previous_hook);

    let incomplete = common::reply(&[5, 2, 6, 3, 7, 2, 6, 2, 6, 2], true)
        .lines()
        .take(9)
        .collect::<Vec<_>>()
        .join("\n");
    let fixtures: Vec<(String, ValidityReason)> = vec![
        (common::reply(&[5, 2, 6, 3, 7, 2, 6, 2, 6, 2], true), ValidityReason::Ok),
        (incomplete, ValidityReason::IncompleteItems),
        (common::reply(&[5, 0, 6, 3, 7, 2, 6, 2, 6, 2], false), ValidityReason::OutOfScale),
        (common::reply(&[5, 6, 5, 4, 7, 6, 7, 8, 9, 10], false), ValidityReason::NumberingConfusion),
        (common::reply(&[6; 10], true), ValidityReason::ArbitraryAllIdentical),
        (common::reply(&[1, 7, 7, 1, 1, 7, 1, 7, 7, 1], true), ValidityReason::ArbitraryAllExtremes),
        (common::reply(&[4; 10], false), ValidityReason::ArbitraryAllMiddle),
        (common::reply(&[1, 7, 1, 7, 1, 7, 1, 7, 1, 7], true), ValidityReason::ArbitraryZigzag),
    ];
    let mut mismatches = Vec::new();
    for (text, expected) in &fixtures {
        let got = classify_validity(&extract_ratings(text, &bank)).reason;
        if got != *expected {
            mismatches.push(format!("expected {expected:?}, got {got:?}"));
        }
    }
    let covered = ValidityReason::ALL.iter().all(|r| fixtures.iter().any(|(_, e)| e == r));
    check(
        panics == 0 && mismatches.is_empty() && covered,
        format!(
            "100000 fuzz inputs, {panics} panics; {}/8 reasons reproduced {mismatches:?}; {:.1} s",
            8 - mismatches.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let Some(path) = std::env::var_os("PSYCHOPROBE_OSF_CASES") else {
        return Outcome::Skip("PSYCHOPROBE_OSF_CASES not set; replication cases not available offline".into());
    };
    let started = Instant::now();
    let cases = match scoring::read_csv(&path) {
        Ok(c) => c,
        Err(e) => return Outcome::Fail(format!("cannot read {}: {e}", path.to_string_lossy())),
    };
    let mut failures = Vec::new();
    let mut report = Vec::new();
    let mut expect = |name: &str, got: f64, target: f64, tol: f64| {
        report.push(format!("{name} {got:.3}"));
        if (got - target).abs() > tol {
            failures.push(format!("{name} = {got:.4}, expected {target} +- {tol}"));
        }
    };
    let big5 = Measure::Big5Pooled.values(&cases);
    expect("big5 mean", mean(&big5), 5.29, 0.01);
    expect("big5 sd", std_dev(&big5), 0.94, 0.01);
    expect("distance mean", mean(&Measure::DistancePooled.values(&cases)), 1.58, 0.01);
    let score = |f: Factor| Measure::Score(f).values(&cases);
    expect("r(E,A)", pearson(&score(Factor::E), &score(Factor::A)).unwrap_or(f64::NAN), 0.52, 0.01);
    let labels: Vec<&str> = cases.iter().map(|c: &CaseRecord| c.language.as_str()).collect();
    let o = anova_oneway(&score(Factor::O), &labels).unwrap();
    expect("F(O)", o.f, 40.11, 0.5);
    expect("omega^2(O)", o.omega_sq, 0.31, 0.02);
    expect("omega^2(A)", anova_oneway(&score(Factor::A), &labels).unwrap().omega_sq, 0.60, 0.02);
    let ols_o = ols_dummy(&score(Factor::O), &labels, "en").unwrap();
    expect("OLS O intercept", ols_o.term(INTERCEPT).unwrap().coef, 5.73, 0.01);
    let ols_a = ols_dummy(&score(Factor::A), &labels, "en").unwrap();
    expect("OLS A es", ols_a.term("es").map_or(f64::NAN, |t| t.coef), -2.96, 0.02);

    let sweep = mixture_sweep(&cases, &MixtureOptions { distances: false, ..MixtureOptions::default() });
    let counts = sweep.counts("score").map(|c| c.best_k).unwrap_or([0; 3]);
    report.push(format!("WAIC classes {counts:?}"));
    for (got, target) in counts.iter().zip([27, 9, 9]) {
        if got.abs_diff(target) > 4 {
            failures.push(format!("WAIC classification {counts:?}, expected (27, 9, 9) +- 4"));
            break;
        }
    }
    if let Err(e) = within(Duration::from_secs(1800), started) {
        failures.push(e);
    }
    check(failures.is_empty(), format!("{} cases: {}; {failures:?}", cases.len(), report.join(", ")))
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bank = QuestionnaireBank::english();
    let cases: Vec<CaseRecord> = common::synthetic_transcripts(7, 60)
        .iter()
        .filter_map(|t| {
            let r = psychoprobe_core::parser::parse_transcript(t, &bank);
            score_case(&r.response, &bank, &r.language, r.source_id).ok()
        })
        .collect();
    let csv = dir.path().join("cases.csv");
    scoring::write_csv(&cases, &csv).unwrap();
    let run = |out: &Path| {
        common::psychoprobe(&["--seed", "7", "analyze", "--cases", csv.to_str().unwrap(), "--out", out.to_str().unwrap()])
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let (ra, rb) = (run(&a), run(&b));
    if !ra.status.success() || !rb.status.success() {
        return Outcome::Fail(format!("analyze failed: {}", String::from_utf8_lossy(&ra.stderr)));
    }
    let (ta, tb) = (common::tree(&a), common::tree(&b));
    let differing: Vec<&String> = ta.keys().filter(|k| tb.get(*k) != ta.get(*k)).collect();
    check(
        ta.len() > 10 && ta.len() == tb.len() && differing.is_empty(),
        format!("{} files per tree, {} differ {differing:?}", ta.len(), differing.len()),
    )
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 7] = [
        ("scoring lattice", criterion_1),
        ("statistics oracles", criterion_2),
        ("PPCC threshold", criterion_3),
        ("mixture recovery", criterion_4),
        ("parser robustness", criterion_5),
        ("dataset replication", criterion_6),
        ("determinism", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {tag} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
