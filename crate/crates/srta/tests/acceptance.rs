//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every expected value is computed here independently of the
//! library code under test.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use http_body_util::BodyExt;
use serde_json::json;
use srta::qr::{self, SigningKey};
use srta::service::{router, AppState, ServiceConfig};
use srta_core::cohort::{generate_cohort, generate_sessions};
use srta_core::nn::{evaluate, train, Activation, Mlp, TrainConfig, DEFAULT_HIDDEN};
use srta_core::scoring::{
    compute_result, iwi_pct, iwi_raw, risk_profile, thinking_type, truthfulness, Band, LatencyModel,
};
use srta_core::session::{granted_dimension, SessionConfig};
use srta_core::{
    AnswerRecord, AnswerValue, Dimension, EmotionSample, LeadershipInputs, QuestionBank, QuestionType, Session,
    SessionState,
};
use tower::ServiceExt;

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

/// Granted dimension straight from the tag text: Yes takes the code before
/// the slash, No the code after.
fn tag_winner(tag: &str, yes: bool) -> &str {
    let (first, second) = tag.split_once('/').unwrap();
    if yes {
        first
    } else {
        second
    }
}

/// Highest bin wins; ties go NS, then RD, then HA.
fn tally_rank(bins: &BTreeMap<&str, u32>) -> [&'static str; 3] {
    let mut order = ["NS", "RD", "HA"];
    order.sort_by_key(|k| std::cmp::Reverse(bins.get(k).copied().unwrap_or(0)));
    order
}

fn record_label(records: &[AnswerRecord]) -> &'static str {
    let mut bins = BTreeMap::new();
    for r in records {
        let tag = r.qtype.to_string();
        let code = tag_winner(&tag, r.answer == AnswerValue::Yes);
        let key = ["HA", "NS", "RD"].into_iter().find(|k| *k == code).unwrap();
        *bins.entry(key).or_insert(0) += 1;
    }
    tally_rank(&bins)[0]
}

fn c1_iwi_maximum() -> Outcome {
    let t = Instant::now();
    let raw = iwi_raw(6.0, 1.0, 5.0, 4.0, 1.0);
    let pct = iwi_pct(raw);
    let elapsed = t.elapsed();
    ensure(raw == 6.0 * 5.0 * 4.0, || format!("iwi_raw = {raw}"))?;
    ensure(pct == 1.0, || format!("iwi_pct = {pct}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("iwi_raw = {raw}, iwi_pct = {}%", pct * 100.0))
}

fn c2_truthfulness() -> Outcome {
    let t = Instant::now();
    let values: Vec<f64> = (0..=6).map(|r| truthfulness(r).unwrap() * 100.0).collect();
    let elapsed = t.elapsed();
    ensure((values[0] - 100.0).abs() <= 0.01, || format!("T(0) = {}%", values[0]))?;
    ensure((values[6] - 83.33).abs() <= 0.01, || format!("T(6) = {}%", values[6]))?;
    ensure(values.windows(2).all(|w| w[1] < w[0]), || {
        format!("not decreasing: {values:?}")
    })?;
    ensure(truthfulness(7).is_err(), || "T(7) accepted".into())?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!(
        "T(0) = {:.2}%, T(6) = {:.2}%, strictly decreasing",
        values[0], values[6]
    ))
}

fn c3_thinking_grid() -> Outcome {
    let m = LatencyModel::default();
    let t = Instant::now();
    let grid = [
        (1000.0, Band::XS, 1),
        (2000.0, Band::S, 2),
        (3000.0, Band::M, 3),
        (4000.0, Band::L, 4),
        (5000.0, Band::XL, 5),
    ];
    for (ms, band, coef) in grid {
        let tt = thinking_type(ms, &m).unwrap();
        ensure(tt.band == band && tt.coefficient == coef, || {
            format!("{ms} ms -> {tt:?}")
        })?;
    }
    // Half-open bands: an edge belongs to the band above it.
    for (ms, band) in [
        (1500.0, Band::S),
        (2500.0, Band::M),
        (3500.0, Band::L),
        (4500.0, Band::XL),
    ] {
        let tt = thinking_type(ms, &m).unwrap();
        ensure(tt.band == band, || format!("edge {ms} ms -> {:?}", tt.band))?;
        let below = thinking_type(ms - 1e-9, &m).unwrap();
        ensure(below.band < band, || format!("just below {ms} ms -> {:?}", below.band))?;
    }
    let far = thinking_type(8000.0, &m).unwrap();
    let elapsed = t.elapsed();
    ensure(far.band == Band::XL && far.coefficient == 5 && far.unusual, || {
        format!("8000 ms -> {far:?}")
    })?;
    within(elapsed, Duration::from_millis(1))?;
    Ok("1000..5000 ms -> XS..XL (1..5), edges 1500/2500/3500/4500 open above, 8000 ms -> XL unusual".into())
}

fn c4_selection() -> Outcome {
    let bank = srta::shipped_bank();
    let quotas = [
        ("HA/NS", 6),
        ("RD/HA", 6),
        ("NS/RD", 6),
        ("NS/HA", 4),
        ("HA/RD", 4),
        ("RD/NS", 4),
    ];
    let t = Instant::now();
    for seed in 0..1000u64 {
        let sel = bank.select_questionnaire(seed).map_err(|e| e.to_string())?;
        ensure(sel.len() == 30, || format!("seed {seed}: {} items", sel.len()))?;
        let ids: std::collections::HashSet<&str> = sel.iter().map(|q| q.id.as_str()).collect();
        ensure(ids.len() == 30, || format!("seed {seed}: duplicate items"))?;
        let mut per_tag: BTreeMap<String, usize> = BTreeMap::new();
        let mut first: BTreeMap<String, usize> = BTreeMap::new();
        for q in &sel {
            let tag = q.qtype.to_string();
            *first.entry(tag.split_once('/').unwrap().0.to_string()).or_default() += 1;
            *per_tag.entry(tag).or_default() += 1;
        }
        for (tag, n) in quotas {
            ensure(per_tag.get(tag) == Some(&n), || {
                format!("seed {seed}: {tag} count {:?}", per_tag.get(tag))
            })?;
        }
        for code in ["HA", "NS", "RD"] {
            ensure(first.get(code) == Some(&10), || {
                format!("seed {seed}: first-position {code} {:?}", first.get(code))
            })?;
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "1000 seeds: 30 distinct, quotas 6/6/6/4/4/4, first positions 10/10/10 ({elapsed:.2?})"
    ))
}

fn c5_answer_rule() -> Outcome {
    let t = Instant::now();
    let mut checked = 0;
    for tag in ["HA/NS", "RD/HA", "NS/RD", "NS/HA", "HA/RD", "RD/NS"] {
        let qtype: QuestionType = tag.parse().map_err(|_| format!("tag {tag} rejected"))?;
        for (answer, yes) in [(AnswerValue::Yes, true), (AnswerValue::No, false)] {
            let got = granted_dimension(qtype, answer).code();
            let want = tag_winner(tag, yes);
            ensure(got == want, || format!("{tag} {answer:?} -> {got}, want {want}"))?;
            checked += 1;
        }
    }
    within(t.elapsed(), Duration::from_millis(1))?;
    Ok(format!(
        "{checked}/12 (type, answer) pairs grant the expected dimension"
    ))
}

fn session_bank() -> QuestionBank {
    QuestionBank::synthetic(40).unwrap()
}

fn answer_all(s: &mut Session, bank: &QuestionBank, confidence: f64) -> Result<(), String> {
    let mut clock = 0;
    while s.state == SessionState::Active {
        let e = EmotionSample::new(0.1, 0.1, confidence).unwrap();
        s.submit_answer(bank, AnswerValue::Yes, clock, clock + 3000, e)
            .map_err(|e| e.to_string())?;
        clock += 5000;
    }
    Ok(())
}

fn c6_revalidation() -> Outcome {
    let bank = session_bank();
    let cfg = SessionConfig::default();
    let t = Instant::now();

    let (mut six, _) = Session::start("a", "u", &bank, 1, cfg).unwrap();
    for _ in 0..6 {
        six.skip_question(&bank).map_err(|e| e.to_string())?;
    }
    ensure(six.state == SessionState::Active, || {
        format!("after 6: {:?}", six.state)
    })?;
    answer_all(&mut six, &bank, 0.9)?;
    ensure(six.state == SessionState::Completed, || {
        format!("6 revalidations end {:?}", six.state)
    })?;
    let inputs = LeadershipInputs::new(3, 3).unwrap();
    let result = compute_result(&six, &inputs, &LatencyModel::default()).map_err(|e| e.to_string())?;
    ensure((result.truthfulness * 100.0 - 83.33).abs() <= 0.01, || {
        format!("T = {}", result.truthfulness)
    })?;

    let (mut seven, _) = Session::start("b", "u", &bank, 2, cfg).unwrap();
    for _ in 0..7 {
        seven.skip_question(&bank).map_err(|e| e.to_string())?;
    }
    ensure(seven.state == SessionState::Invalid, || {
        format!("after 7: {:?}", seven.state)
    })?;

    let (mut one, _) = Session::start("c", "u", &bank, 3, cfg).unwrap();
    let low = EmotionSample::new(0.0, 0.0, 0.2).unwrap();
    one.submit_answer(&bank, AnswerValue::No, 0, 2500, low)
        .map_err(|e| e.to_string())?;
    answer_all(&mut one, &bank, 0.9)?;
    ensure(
        one.state == SessionState::Completed && one.records.len() == 31 && one.revalidations == 1,
        || format!("disqualified session: {:?}, {} records", one.state, one.records.len()),
    )?;
    within(t.elapsed(), Duration::from_millis(10))?;
    Ok(format!(
        "6 -> completed with T = {:.2}%, 7 -> invalid, 1 disqualified answer -> 31 records",
        result.truthfulness * 100.0
    ))
}

fn c7_scoring_oracle() -> Outcome {
    let tags = ["HA/NS", "RD/HA", "NS/RD", "NS/HA", "HA/RD", "RD/NS", "NS/RD", "HA/NS"];
    let t = Instant::now();
    for pattern in 0u32..256 {
        let mut bins: BTreeMap<&str, u32> = BTreeMap::from([("HA", 0), ("NS", 0), ("RD", 0)]);
        let mut records = Vec::new();
        for (i, tag) in tags.iter().enumerate() {
            let yes = pattern >> i & 1 == 1;
            *bins.get_mut(tag_winner(tag, yes)).unwrap() += 1;
            let qtype: QuestionType = tag.parse().unwrap();
            let answer = if yes { AnswerValue::Yes } else { AnswerValue::No };
            records.push(AnswerRecord {
                question_id: format!("q{i}"),
                qtype,
                answer,
                latency_ms: 3000,
                emotion: EmotionSample::new(0.0, 0.0, 1.0).unwrap(),
                granted: granted_dimension(qtype, answer),
                flagged: false,
            });
        }
        let rp = risk_profile(&records).map_err(|e| e.to_string())?;
        for d in Dimension::ALL {
            ensure(rp.bin_counts[&d] == bins[d.code()], || {
                format!("pattern {pattern:08b}: {} bin", d.code())
            })?;
        }
        let [p, s, _] = tally_rank(&bins);
        ensure((rp.primary.code(), rp.secondary.code()) == (p, s), || {
            format!(
                "pattern {pattern:08b}: got {:?}/{:?}, want {p}/{s}",
                rp.primary, rp.secondary
            )
        })?;
    }
    within(t.elapsed(), Duration::from_secs(1))?;
    Ok("256/256 patterns match the brute-force tally and tie order".into())
}

fn half_sse(net: &Mlp, x: &[f64], target: &[f64]) -> f64 {
    let out = net.forward(x).unwrap();
    out.output()
        .iter()
        .zip(target)
        .map(|(y, t)| 0.5 * (y - t) * (y - t))
        .sum()
}

fn c8_gradient_check() -> Outcome {
    const H: f64 = 1e-4;
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let net = Mlp::new(&[9, 5, 3], Activation::Sigmoid, 1000 + seed).unwrap();
        let mut r = srta_core::rng::seeded(seed);
        let x: Vec<f64> = (0..9).map(|_| 2.0 * srta_core::rng::unit(&mut r) - 1.0).collect();
        let mut target = vec![0.0; 3];
        target[srta_core::rng::below(&mut r, 3)] = 1.0;
        let grads = net.gradients(&x, &target).unwrap();
        let mut probe = net.clone();
        let rel = |a: f64, b: f64| {
            let scale = a.abs().max(b.abs());
            if scale < 1e-10 {
                (a - b).abs()
            } else {
                (a - b).abs() / scale
            }
        };
        for (l, layer) in net.layers().iter().enumerate() {
            for row in 0..layer.outputs() {
                for col in 0..layer.inputs() {
                    let w = layer.weight(row, col);
                    *probe.weight_mut(l, row, col) = w + H;
                    let up = half_sse(&probe, &x, &target);
                    *probe.weight_mut(l, row, col) = w - H;
                    let down = half_sse(&probe, &x, &target);
                    *probe.weight_mut(l, row, col) = w;
                    worst = worst.max(rel(
                        grads.weights[l][row * layer.inputs() + col],
                        (up - down) / (2.0 * H),
                    ));
                }
                let b = layer.biases()[row];
                *probe.bias_mut(l, row) = b + H;
                let up = half_sse(&probe, &x, &target);
                *probe.bias_mut(l, row) = b - H;
                let down = half_sse(&probe, &x, &target);
                *probe.bias_mut(l, row) = b;
                worst = worst.max(rel(grads.biases[l][row], (up - down) / (2.0 * H)));
            }
        }
    }
    ensure(worst <= 1e-4, || format!("max relative error {worst:e}"))?;
    within(t.elapsed(), Duration::from_secs(5))?;
    Ok(format!("20 nets 9-5-3, max relative error {worst:.2e}"))
}

fn c9_training() -> Outcome {
    let bank = srta::shipped_bank();
    let seed = 2024;
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let sizes = [270, DEFAULT_HIDDEN[0], DEFAULT_HIDDEN[1], 3];
    let cohort = generate_cohort(&bank, 2000, 0.1, seed).map_err(|e| e.to_string())?;

    let t = Instant::now();
    let net = Mlp::new(&sizes, Activation::Sigmoid, seed).unwrap();
    let report = train(net, &cohort.dataset, &cfg).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();

    let split = &report.split;
    ensure(
        (split.train.len(), split.validation.len(), split.test.len()) == (1400, 300, 300),
        || {
            format!(
                "split {} / {} / {}",
                split.train.len(),
                split.validation.len(),
                split.test.len()
            )
        },
    )?;
    let metrics = evaluate(&report.net, &cohort.dataset, &split.test).map_err(|e| e.to_string())?;
    let epoch1 = report.epochs[0].val_mse;
    let final_val = cohort
        .dataset
        .mse_on(&report.net, &split.validation)
        .map_err(|e| e.to_string())?;

    // Ceiling: tally granted dimensions of the raw records for the test rows.
    let sessions = generate_sessions(&bank, 2000, 0.1, seed).map_err(|e| e.to_string())?;
    let hits = split
        .test
        .iter()
        .filter(|&&i| record_label(&sessions[i].records) == cohort.labels[i].code())
        .count();
    let oracle = hits as f64 / split.test.len() as f64;

    let again = train(
        Mlp::new(&sizes, Activation::Sigmoid, seed).unwrap(),
        &cohort.dataset,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(again.net == report.net && again.epochs == report.epochs, || {
        "rerun differs".into()
    })?;

    let detail = format!(
        "test accuracy {:.4} (oracle ceiling {:.4}), val MSE {:.5} vs epoch-1 {:.5} ({:.1}%), {} epochs, {elapsed:.1?}",
        metrics.accuracy,
        oracle,
        final_val,
        epoch1,
        100.0 * final_val / epoch1,
        report.epochs.len()
    );
    ensure(metrics.accuracy >= 0.90, || detail.clone())?;
    ensure(final_val < 0.25 * epoch1, || detail.clone())?;
    within(elapsed, Duration::from_secs(60)).map_err(|e| format!("{e}; {detail}"))?;
    Ok(detail)
}

struct Api {
    app: Router,
}

impl Api {
    fn open(dir: &Path) -> Api {
        let cfg = ServiceConfig::new(dir, session_bank(), SigningKey::new(vec![3; 32]).unwrap());
        Api {
            app: router(AppState::open(cfg).unwrap()),
        }
    }

    async fn call(
        &self,
        method: Method,
        uri: &str,
        token: Option<&str>,
        body: serde_json::Value,
    ) -> (StatusCode, String) {
        let mut req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json");
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let resp = self
            .app
            .clone()
            .oneshot(req.body(Body::from(body.to_string())).unwrap())
            .await
            .unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }
}

#[derive(Clone, Copy)]
enum Step {
    Answer(u64),
    Skip,
}

fn script() -> Vec<Step> {
    let mut steps: Vec<Step> = (0..30).map(Step::Answer).collect();
    steps.insert(11, Step::Skip);
    steps.insert(23, Step::Skip);
    steps
}

async fn run_step(api: &Api, token: &str, id: &str, step: Step) -> Result<(), String> {
    let (status, body) = match step {
        Step::Answer(k) => {
            let body = json!({
                "answer": if k % 3 == 0 { "no" } else { "yes" },
                "displayed_at": 100_000 * k,
                "answered_at": 100_000 * k + 1200 + 173 * k,
                "emotion": {"valence": 0.3 - 0.02 * k as f64, "arousal": 0.1, "confidence": 0.9},
            });
            api.call(Method::POST, &format!("/v1/sessions/{id}/answer"), Some(token), body)
                .await
        }
        Step::Skip => {
            api.call(Method::POST, &format!("/v1/sessions/{id}/skip"), Some(token), json!({}))
                .await
        }
    };
    ensure(status == StatusCode::OK, || format!("{status}: {body}"))
}

fn line_count(text: &str) -> usize {
    text.matches('\n').count()
}

async fn c10_crash_replay() -> Outcome {
    let t = Instant::now();
    let live_dir = tempfile::tempdir().unwrap();
    let api = Api::open(live_dir.path());
    let (_, user) = api
        .call(
            Method::POST,
            "/v1/users",
            None,
            json!({"username": "replay", "education_level": 5, "job_level": 4}),
        )
        .await;
    let token = serde_json::from_str::<serde_json::Value>(&user).unwrap()["token"]
        .as_str()
        .unwrap()
        .to_string();
    let (_, created) = api
        .call(Method::POST, "/v1/sessions", Some(&token), json!({"nonce": 11}))
        .await;
    let id = serde_json::from_str::<serde_json::Value>(&created).unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();

    let log_path = live_dir.path().join("sessions").join(format!("{id}.jsonl"));
    // Live run: remember the state after every acknowledged request.
    let snapshot = |dir: &Path, id: &str| {
        let cfg = ServiceConfig::new(dir, session_bank(), SigningKey::new(vec![3; 32]).unwrap());
        let app = AppState::open(cfg).unwrap();
        let id = id.to_string();
        async move { app.session_snapshot(&id).await }
    };
    let mut boundaries = vec![(line_count(&std::fs::read_to_string(&log_path).unwrap()), 0usize)];
    let mut live_states = vec![snapshot(live_dir.path(), &id).await.unwrap()];
    let steps = script();
    for (i, step) in steps.iter().enumerate() {
        run_step(&api, &token, &id, *step).await?;
        let log = std::fs::read_to_string(&log_path).unwrap();
        boundaries.push((line_count(&log), i + 1));
        live_states.push(snapshot(live_dir.path(), &id).await.unwrap());
    }
    let (status, live_result) = api
        .call(
            Method::GET,
            &format!("/v1/sessions/{id}/result"),
            Some(&token),
            json!({}),
        )
        .await;
    ensure(status == StatusCode::OK, || {
        format!("live result {status}: {live_result}")
    })?;
    ensure(live_states.last().unwrap().state == SessionState::Completed, || {
        "live run did not complete".into()
    })?;
    let answers = live_states.last().unwrap().records.len();

    let full_log = std::fs::read_to_string(&log_path).unwrap();
    let users = std::fs::read_to_string(live_dir.path().join("users.jsonl")).unwrap();
    let lines: Vec<&str> = full_log.split_inclusive('\n').collect();
    let mut prefixes = 0;
    let mut resumed = 0;
    for k in 0..=lines.len() {
        let committed: String = lines[..k].concat();
        // Cut exactly after line k, and again halfway into line k + 1.
        let mut cuts = vec![committed.clone()];
        if let Some(next) = lines.get(k) {
            cuts.push(format!("{committed}{}", &next[..next.len() / 2]));
        }
        let expected_step = boundaries.iter().rev().find(|(n, _)| *n <= k).map(|&(_, s)| s);
        for cut in cuts {
            let dir = tempfile::tempdir().unwrap();
            std::fs::create_dir_all(dir.path().join("sessions")).unwrap();
            std::fs::write(dir.path().join("users.jsonl"), &users).unwrap();
            std::fs::write(dir.path().join("sessions").join(format!("{id}.jsonl")), &cut).unwrap();
            let recovered = snapshot(dir.path(), &id).await;
            match expected_step {
                None => ensure(recovered.is_none(), || format!("prefix {k}: session should not exist"))?,
                Some(s) => ensure(recovered.as_ref() == Some(&live_states[s]), || {
                    format!("prefix {k}: recovered state differs from live state after step {s}")
                })?,
            }
            prefixes += 1;

            // At request boundaries the recovered service finishes the script.
            if let Some(s) = expected_step.filter(|_| boundaries.iter().any(|(n, _)| *n == k) && cut == committed) {
                let api = Api::open(dir.path());
                for step in &steps[s..] {
                    run_step(&api, &token, &id, *step)
                        .await
                        .map_err(|e| format!("resume after {s}: {e}"))?;
                }
                let (_, result) = api
                    .call(
                        Method::GET,
                        &format!("/v1/sessions/{id}/result"),
                        Some(&token),
                        json!({}),
                    )
                    .await;
                ensure(result == live_result, || {
                    format!("resume after step {s}: result bytes differ")
                })?;
                resumed += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "{answers}-answer session, {} log lines: {prefixes} truncations match live states, {resumed} resumed runs give byte-identical results ({elapsed:.2?})",
        lines.len()
    ))
}

fn c11_qr_integrity() -> Outcome {
    let bank = session_bank();
    let (mut s, _) = Session::start("q", "u", &bank, 9, SessionConfig::default()).unwrap();
    answer_all(&mut s, &bank, 0.8)?;
    let result = compute_result(&s, &LeadershipInputs::new(6, 6).unwrap(), &LatencyModel::default())
        .map_err(|e| e.to_string())?;
    let key = SigningKey::new((100u8..140).collect()).unwrap();

    let t = Instant::now();
    let text = qr::sign(&key, &result, 1_234_567);
    let back = qr::verify(&key, &text).map_err(|e| e.to_string())?;
    ensure(back.result == result, || "round trip changed the bundle".into())?;

    let (body, tag) = text.split_once('.').unwrap();
    let body = URL_SAFE_NO_PAD.decode(body).unwrap();
    let tag = URL_SAFE_NO_PAD.decode(tag).unwrap();
    let mut mutations = 0usize;
    // Every byte of the signed message and its MAC, flipped to every other value.
    for part in 0..2 {
        let len = if part == 0 { body.len() } else { tag.len() };
        for i in 0..len {
            for xor in 1..=255u8 {
                let (mut b, mut m) = (body.clone(), tag.clone());
                if part == 0 {
                    b[i] ^= xor
                } else {
                    m[i] ^= xor
                }
                let forged = format!("{}.{}", URL_SAFE_NO_PAD.encode(&b), URL_SAFE_NO_PAD.encode(&m));
                ensure(qr::verify(&key, &forged).is_err(), || {
                    format!("mutation at {part}:{i} ^ {xor} verified")
                })?;
                mutations += 1;
            }
        }
    }
    // Every character of the compact text, replaced by every other printable byte.
    let bytes = text.as_bytes();
    for i in 0..bytes.len() {
        for c in 0x20u8..0x7f {
            if c == bytes[i] {
                continue;
            }
            let mut forged = bytes.to_vec();
            forged[i] = c;
            let forged = String::from_utf8(forged).unwrap();
            ensure(qr::verify(&key, &forged).is_err(), || {
                format!("text mutation at {i} -> {:?} verified", c as char)
            })?;
            mutations += 1;
        }
    }
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "exact round trip; all {mutations} single-byte mutations rejected ({elapsed:.2?})"
    ))
}

fn main() -> ExitCode {
    let rt = tokio::runtime::Runtime::new().unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("IWI maximum", Box::new(c1_iwi_maximum)),
        ("truthfulness endpoints", Box::new(c2_truthfulness)),
        ("thinking-type grid", Box::new(c3_thinking_grid)),
        ("selection contract", Box::new(c4_selection)),
        ("answer-to-dimension rule", Box::new(c5_answer_rule)),
        ("revalidation semantics", Box::new(c6_revalidation)),
        ("scoring oracle equivalence", Box::new(c7_scoring_oracle)),
        ("gradient check", Box::new(c8_gradient_check)),
        ("training reproduction", Box::new(c9_training)),
        ("crash replay", Box::new(|| rt.block_on(c10_crash_replay()))),
        ("signed payload integrity", Box::new(c11_qr_integrity)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
