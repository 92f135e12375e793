use crate::config::{usage, Config, Engine, ModelConfig, PairKind, Start, WalkExperiment};
use crate::output::Run;
use crate::plot;
use anyhow::Result;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::path::Path;
use supermarket::drift::{adversarial_states, d1_audit, write_reports_csv, DriftBounds, DriftReport, Verdict};
use supermarket::model::{budgets, center_tail_counts, regime_check, FixedPoint};
use supermarket::oracle::{lumping_error, stationary, stationary_residual, tv, CappedChain, Representation};
use supermarket::profile::{
    simulate, simulate_vector, time_average, ObservationLog, ObserverConfig, Profile, ProfileChain, OBSERVATION_SCHEMA,
};
use supermarket::rng::{child_seed, seeded};
use supermarket::vector::{
    coalescence_stats, path_in_n, random_in_n, relaxation_experiment, step_vector_capped, validate_path, PairSource,
    QueueVector, RandomTape,
};
use supermarket::walk::{
    chernoff_check, crossing_bound_experiment, drifts_down_experiment, hitting_bound_experiment,
    return_time_experiment, write_verdicts_csv, CrossingSpec, Direction, DriftsDownSpec, HittingSpec, JumpLaw,
    ReturnLaw, ReturnWalkSpec, Schedule, Tail, WalkVerdict,
};
use supermarket::Params;

/// Number of bound violations found; non-zero makes the process exit 1.
pub type Violations = usize;

fn cell(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Compares a horizon with s₀ and q(ℓ,g); warns when it falls short.
fn budget_check(run: &mut Run, params: &Params, ell: f64, g: f64, horizon: u64, label: &str) -> Value {
    let b = match budgets(params, ell, g) {
        Ok(b) => b,
        Err(e) => {
            run.warn(format!("{label}: no budgets for these parameters: {e}"));
            return Value::Null;
        }
    };
    let h = horizon as f64;
    if h < b.q {
        run.warn(format!("{label}: horizon {horizon} is below q(ell,g) = {:.4e} (ratio {:.3e})", b.q, h / b.q));
    }
    let ln_ratio = h.ln() - b.ln_s0;
    if ln_ratio < 0.0 {
        run.warn(format!("{label}: horizon {horizon} is below s0 = exp({:.4}) (log ratio {ln_ratio:.3})", b.ln_s0));
    }
    json!({
        "horizon": horizon,
        "q": finite(b.q),
        "horizon_over_q": finite(h / b.q),
        "ln_s0": b.ln_s0,
        "ln_horizon_over_s0": ln_ratio,
        "stages_exceeding_q": b.exceeding_q(),
    })
}

/// Params as JSON; n goes in as a string once it leaves the u64 range.
fn params_json(p: &Params) -> Value {
    let n = u64::try_from(p.n).map(|n| json!(n)).unwrap_or_else(|_| json!(p.n.to_string()));
    json!({ "n": n, "d": p.d, "lambda": p.lambda, "epsilon": p.epsilon, "k": p.k, "k_defaulted": p.k_defaulted })
}

fn model(cfg: &Config) -> Result<(&ModelConfig, Params)> {
    let m = cfg.model()?;
    let p = m.params()?;
    Ok((m, p))
}

pub fn fixed_point_tails(params: &Params, n: u64) -> Result<Vec<u64>> {
    let fp = FixedPoint::new(params.lambda, params.d, 1024)?;
    Ok((1..=1024).map(|j| (n as f64 * fp.pi(j).value).round() as u64).take_while(|&c| c > 0).collect())
}

fn start_profile(params: &Params, start: Start) -> Result<Profile> {
    let n = params.n_usize()? as u64;
    Ok(match start {
        Start::Empty => Profile::empty(n)?,
        Start::FixedPoint => Profile::from_tail_counts(n, &fixed_point_tails(params, n)?)?,
        Start::Center => Profile::from_tail_counts(n, &center_tail_counts(params))?,
    })
}

fn draw(run: &mut Run, csv_name: &str) -> Result<()> {
    let (svg, warnings) = plot::plot_file(&run.dir().join(csv_name), run.dir())?;
    for w in warnings {
        run.warn(w);
    }
    let name = svg.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    run.record(&name, "svg");
    Ok(())
}

// regime-check -------------------------------------------------------------

pub fn regime(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (m, p) = model(cfg)?;
    let rep = regime_check(&p);
    let diagnosis = rep.diagnosis();
    let status = if rep.overall { "satisfied".to_string() } else { format!("unsatisfied: {}", diagnosis.join(", ")) };
    println!("{status}");
    let mut w = run.csv("regime.csv", "regime/v1")?;
    w.write_record(["group", "name", "formula", "lhs", "rhs", "holds"])?;
    for (group, list) in [("hypothesis", &rep.hypotheses), ("derived", &rep.derived)] {
        for c in list {
            w.write_record([group, c.name, c.formula, &c.lhs, &c.rhs, &c.holds.to_string()])?;
        }
    }
    w.flush()?;
    let (ell, g) = m.ell_g(&p);
    let summary = json!({
        "params": params_json(&p),
        "status": status,
        "overall": rep.overall,
        "transitional": rep.transitional,
        "diagnosis": diagnosis,
        "budgets": budgets(&p, ell, g).ok(),
        "d1_audit": d1_audit(&p),
    });
    run.json("regime.json", "regime-summary/v1", &summary)?;
    Ok(0)
}

// simulate -----------------------------------------------------------------

pub fn simulate_cmd(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (m, p) = model(cfg)?;
    let sc = &cfg.simulate;
    let obs = ObserverConfig {
        interval: sc.interval,
        levels: sc.levels,
        q_indices: sc.q_indices.clone(),
        p_functional: sc.p_functional,
        sets: sc.sets.clone(),
        set_epsilon: None,
        ell: m.ell,
        g: m.g,
        cap: sc.cap,
    };
    let initial = start_profile(&p, sc.start)?;
    let seeds: Vec<u64> =
        (0..sc.replicas as u64).map(|r| run.seed(format!("replica-{r}"), child_seed(cfg.seed(), r))).collect();
    let logs: Vec<ObservationLog> = seeds
        .par_iter()
        .map(|&s| match sc.engine {
            Engine::Profile => simulate(&p, initial.clone(), sc.steps, s, &obs),
            Engine::Vector => simulate_vector(&p, &QueueVector::from_profile(&initial), sc.steps, s, &obs),
        })
        .collect::<supermarket::Result<_>>()?;
    let mut summaries = Vec::new();
    for (r, log) in logs.iter().enumerate() {
        let name = if sc.replicas == 1 { "observations.csv".to_string() } else { format!("observations-{r:04}.csv") };
        let mut w = run.csv_raw(&name, OBSERVATION_SCHEMA)?;
        log.write_csv(&mut w)?;
        summaries.push(json!({ "file": name, "summary": log.summary() }));
    }
    let (ell, g) = m.ell_g(&p);
    let budget = budget_check(run, &p, ell, g, sc.steps, "simulate");
    run.json("summary.json", "simulate-summary/v1", &json!({ "params": params_json(&p), "budget": budget, "replicas": summaries }))?;
    Ok(0)
}

// equilibrium --------------------------------------------------------------

pub fn equilibrium(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (m, p) = model(cfg)?;
    let ec = &cfg.equilibrium;
    let (ell, g) = m.ell_g(&p);
    let burn_in = match ec.burn_in {
        Some(b) => b,
        None => match budgets(&p, ell, g) {
            Ok(b) => b.burn_in(&p),
            Err(_) => (10.0 * p.n_f64() / p.gap()) as u64,
        },
    };
    let initial = start_profile(&p, ec.start)?;
    let seeds: Vec<u64> =
        (0..ec.replicas as u64).map(|r| run.seed(format!("replica-{r}"), child_seed(cfg.seed(), r))).collect();
    let runs: Vec<_> = seeds
        .par_iter()
        .map(|&s| -> supermarket::Result<_> {
            let mut chain = ProfileChain::new(initial.clone(), p.lambda, p.d, None)?;
            Ok(time_average(&mut chain, burn_in, ec.steps, ec.levels, s))
        })
        .collect::<supermarket::Result<_>>()?;
    let fp = FixedPoint::new(p.lambda, p.d, ec.levels.max(1))?;
    let r = runs.len() as f64;
    let mut w = run.csv("equilibrium.csv", "equilibrium/v1")?;
    w.write_record(["level", "mean", "stderr", "deficit", "pi", "tilde-u"])?;
    let mut means = Vec::new();
    for j in 1..=ec.levels {
        let xs: Vec<f64> = runs.iter().map(|a| a.tail[j - 1]).collect();
        let mean = xs.iter().sum::<f64>() / r;
        let stderr = if runs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0) / r).sqrt().to_string()
        } else {
            String::new()
        };
        let deficit = runs.iter().map(|a| a.deficit[j - 1]).sum::<f64>() / r;
        let tilde = (1.0 - fp.tilde_u_deficit[j - 1]).max(0.0);
        means.push(mean);
        w.write_record([
            j.to_string(),
            mean.to_string(),
            stderr,
            deficit.to_string(),
            fp.pi(j).value.to_string(),
            tilde.to_string(),
        ])?;
    }
    w.flush()?;
    drop(w);
    if !runs.is_empty() {
        draw(run, "equilibrium.csv")?;
    }
    let budget = budget_check(run, &p, ell, g, burn_in.saturating_add(ec.steps), "equilibrium");
    let summary = json!({
        "params": params_json(&p),
        "burn_in": burn_in,
        "steps": ec.steps,
        "replicas": runs.len(),
        "mean_u": means,
        "max_len_seen": runs.iter().map(|a| a.max_len_seen).max(),
        "budget": budget,
    });
    run.json("summary.json", "equilibrium-summary/v1", &summary)?;
    Ok(0)
}

// mixing -------------------------------------------------------------------

pub fn mixing(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (m, p) = model(cfg)?;
    let mc = &cfg.mixing;
    let ds = if mc.d_values.is_empty() { vec![p.d] } else { mc.d_values.clone() };
    let burn_in = mc.burn_in.unwrap_or(100_000);
    let mut rows = Vec::new();
    let mut budget = Vec::new();
    for (i, &d) in ds.iter().enumerate() {
        let pd = ModelConfig { d, k: if d == p.d { m.k } else { None }, ..m.clone() }.params()?;
        let source = match mc.pairs {
            PairKind::AdjacentAfterBurnIn => {
                PairSource::AdjacentAfterBurnIn { base: QueueVector::from_profile(&start_profile(&pd, Start::FixedPoint)?), burn_in }
            }
            PairKind::AdjacentInN => PairSource::AdjacentInN { params: pd.clone(), eps: pd.epsilon },
        };
        let seed = run.seed(format!("d={d}"), child_seed(cfg.seed(), i as u64));
        let stats = coalescence_stats(d, pd.lambda, &source, mc.replicas, mc.horizon, seed)?;
        let k = pd.k as f64;
        budget.push(json!({ "d": d, "check": budget_check(run, &pd, k, k, mc.horizon, &format!("mixing d={d}")) }));
        rows.push((pd.k, stats));
    }
    let mut w = run.csv("coalescence.csv", "coalescence/v1")?;
    w.write_record(["d", "k", "replicas", "coalesced", "q10", "q25", "median", "q75", "q90"])?;
    for (k, s) in &rows {
        let mut rec = vec![s.d.to_string(), k.to_string(), s.times.len().to_string(), s.coalesced.to_string()];
        rec.extend(s.quantiles.iter().map(|q| cell(q.1)));
        w.write_record(rec)?;
    }
    w.flush()?;
    drop(w);
    let mut w = run.csv("coalescence-times.csv", "coalescence-times/v1")?;
    w.write_record(["d", "replica", "time"])?;
    for (_, s) in &rows {
        for (r, t) in s.times.iter().enumerate() {
            w.write_record([s.d.to_string(), r.to_string(), cell(*t)])?;
        }
    }
    w.flush()?;
    drop(w);
    draw(run, "coalescence.csv")?;
    let medians: Vec<(u64, Option<u64>)> = rows.iter().map(|(_, s)| (s.d, s.median())).collect();
    for pair in medians.windows(2) {
        if let ((d0, Some(a)), (d1, Some(b))) = (pair[0], pair[1]) {
            if b < a {
                run.warn(format!("median coalescence time drops from {a} at d = {d0} to {b} at d = {d1}"));
            }
        }
    }
    run.json("summary.json", "mixing-summary/v1", &json!({ "medians": medians, "budget": budget, "burn_in": burn_in }))?;
    Ok(0)
}

// drift-audit --------------------------------------------------------------

pub fn drift_audit(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (_, p) = model(cfg)?;
    let dc = &cfg.drift_audit;
    let bounds = DriftBounds::new(&p).map_err(|e| usage(format!("drift-audit: {e}")))?;
    let seed = run.seed("states", cfg.seed());
    let states = adversarial_states(dc.n, dc.max_len, dc.random_states, seed);
    let reports: Vec<DriftReport> = states
        .par_iter()
        .map(|(id, x)| bounds.all(x).into_iter().map(|r| r.with_id(id.clone())).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .concat();
    let mut w = run.csv_raw("drift-reports.csv", "drift-reports/v1")?;
    write_reports_csv(&reports, &mut w)?;
    drop(w);
    let audit = d1_audit(&p);
    let mut w = run.csv("d1-audit.csv", "d1-audit/v1")?;
    w.write_record(["name", "formula", "lhs", "rhs", "holds"])?;
    for a in &audit {
        w.write_record([a.name, a.formula, &format!("{:e}", a.lhs), &format!("{:e}", a.rhs), &a.holds.to_string()])?;
    }
    w.flush()?;
    drop(w);
    let mut by_functional = std::collections::BTreeMap::<String, (usize, f64)>::new();
    for r in reports.iter().filter(|r| r.verdict == Verdict::Violated) {
        let gap = r.slack_low.into_iter().chain(r.slack_high).fold(0.0, f64::min);
        let e = by_functional.entry(r.functional.clone()).or_insert((0, 0.0));
        e.0 += 1;
        e.1 = e.1.min(gap);
    }
    let violations: usize = by_functional.values().map(|v| v.0).sum();
    let summary = json!({
        "params": params_json(&p),
        "states": states.len(),
        "reports": reports.len(),
        "violations": violations,
        "violations_by_functional": by_functional
            .iter()
            .map(|(f, (c, w))| json!({ "functional": f, "count": c, "worst_slack": w }))
            .collect::<Vec<_>>(),
    });
    run.json("summary.json", "drift-audit-summary/v1", &summary)?;
    Ok(violations)
}

// walk-audit ---------------------------------------------------------------

/// The built-in grid: each lemma in the drift-down frame, a mirrored copy,
/// an adversarial schedule and a lazy or continuous law.
pub fn standard_walk_grid(trials: u64) -> Vec<WalkExperiment> {
    let t = Some(trials);
    let hit = |law, v, m, gap| HittingSpec {
        law,
        v,
        r0: gap,
        r1: 0.0,
        m,
        schedule: Schedule::Always,
        direction: Direction::Down,
    };
    let lazy = JumpLaw::Lazy { p_down: 0.45, p_up: 0.15 };
    let cross = CrossingSpec {
        law: JumpLaw::with_drift(0.1),
        v: 0.1,
        a: 20.0,
        b: 20.0,
        schedule: Schedule::Always,
        max_steps: 1_000_000,
        direction: Direction::Down,
    };
    let dd = DriftsDownSpec {
        above: JumpLaw::with_drift(0.3),
        below: JumpLaw::Deterministic(1.0),
        v: 0.3,
        c: 30,
        h: 0,
        rho: 10,
        m: 400,
        s: 1000,
        direction: Direction::Down,
    };
    let ret = ReturnWalkSpec { delta: 0.4, k0: 3, s0: 5, m: 10_000, law: ReturnLaw::Tight };
    let few = Some((trials / 4).max(1));
    use WalkExperiment::*;
    vec![
        Hitting { id: "hit-v0.2".into(), trials: t, spec: hit(JumpLaw::with_drift(0.2), 0.2, 2000, 100.0) },
        Hitting { id: "hit-lazy".into(), trials: t, spec: hit(lazy, 0.3, 200, 30.0) },
        Hitting {
            id: "hit-lazy-reversed".into(),
            trials: t,
            spec: HittingSpec { law: lazy.mirrored(), r0: -30.0, direction: Direction::Up, ..hit(lazy, 0.3, 200, 30.0) },
        },
        Hitting {
            id: "hit-adversarial".into(),
            trials: t,
            spec: HittingSpec { schedule: Schedule::FailAfter(50), ..hit(JumpLaw::with_drift(0.2), 0.2, 100, 10.0) },
        },
        Hitting { id: "hit-uniform".into(), trials: t, spec: hit(JumpLaw::Uniform { lo: -1.0, hi: 0.6 }, 0.2, 100, 5.0) },
        Crossing { id: "cross-v0.1".into(), trials: t, spec: cross.clone() },
        Crossing {
            id: "cross-v0.1-reversed".into(),
            trials: t,
            spec: CrossingSpec { law: cross.law.mirrored(), direction: Direction::Up, ..cross.clone() },
        },
        Crossing {
            id: "cross-adversarial".into(),
            trials: t,
            spec: CrossingSpec { schedule: Schedule::FailAbove(15.0), ..cross.clone() },
        },
        DriftsDown { id: "drifts-down".into(), trials: few, spec: dd.clone() },
        DriftsDown {
            id: "drifts-down-reversed".into(),
            trials: few,
            spec: DriftsDownSpec {
                above: dd.above.mirrored(),
                below: dd.below.mirrored(),
                c: -30,
                direction: Direction::Up,
                ..dd.clone()
            },
        },
        ReturnTime { id: "return-tight".into(), trials: Some((trials / 10).max(1)), spec: ret.clone() },
        ReturnTime {
            id: "return-three-quarters".into(),
            trials: t,
            spec: ReturnWalkSpec { law: ReturnLaw::ThreeQuarters, m: 40, s0: 2, ..ret },
        },
        Chernoff { id: "chernoff-binomial".into(), trials: t, tail: Tail::Binomial { n: 1000, p: 0.3 }, eps: 0.2 },
        Chernoff { id: "chernoff-poisson".into(), trials: t, tail: Tail::Poisson { mu: 50.0 }, eps: 0.5 },
    ]
}

fn run_walk(e: &WalkExperiment, default_trials: u64, seed: u64) -> supermarket::Result<Vec<WalkVerdict>> {
    let n = |t: &Option<u64>| t.unwrap_or(default_trials);
    Ok(match e {
        WalkExperiment::Hitting { id, trials, spec } => vec![hitting_bound_experiment(id, spec, n(trials), seed)?],
        WalkExperiment::Crossing { id, trials, spec } => vec![crossing_bound_experiment(id, spec, n(trials), seed)?],
        WalkExperiment::DriftsDown { id, trials, spec } => drifts_down_experiment(id, spec, n(trials), seed)?.to_vec(),
        WalkExperiment::ReturnTime { id, trials, spec } => vec![return_time_experiment(id, spec, n(trials), seed)?],
        WalkExperiment::Chernoff { id, trials, tail, eps } => vec![chernoff_check(id, *tail, *eps, n(trials), seed)?],
    })
}

pub fn walk_audit(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let wc = &cfg.walk_audit;
    let grid = if wc.experiments.is_empty() { standard_walk_grid(wc.trials) } else { wc.experiments.clone() };
    let mut verdicts = Vec::new();
    for (i, e) in grid.iter().enumerate() {
        let seed = child_seed(cfg.seed(), i as u64);
        let out = run_walk(e, wc.trials, seed).map_err(|err| usage(format!("walk experiment {}: {err}", i + 1)))?;
        for v in &out {
            run.seed(v.experiment.clone(), seed);
        }
        verdicts.extend(out);
    }
    let mut w = run.csv_raw("walk-verdicts.csv", "walk-verdicts/v1")?;
    write_verdicts_csv(&mut w, &verdicts)?;
    drop(w);
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass()).map(|v| v.experiment.as_str()).collect();
    run.json("summary.json", "walk-audit-summary/v1", &json!({ "experiments": verdicts, "failed": failed }))?;
    Ok(failed.len())
}

// oracle-compare -----------------------------------------------------------

fn label(s: &[u32]) -> String {
    s.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-")
}

fn lengths_of(p: &Profile) -> Vec<u32> {
    let mut v = Vec::new();
    for (l, &c) in p.counts().iter().enumerate() {
        v.extend(std::iter::repeat_n(l as u32, c as usize));
    }
    v
}

pub fn oracle_compare(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let oc = &cfg.oracle_compare;
    let build = |repr| CappedChain::build(oc.n, oc.cap, oc.d, oc.lambda, repr).map_err(|e| usage(format!("oracle-compare: {e}")));
    let prof = build(Representation::Profile)?;
    let vect = build(Representation::Vector)?;
    let pi = stationary(&prof)?;
    let residual = stationary_residual(&prof, &pi);
    let lump = lumping_error(&vect, &prof)?;
    let (d, cap) = (oc.d as u64, Some(oc.cap));
    let s_prof = run.seed("profile-engine", child_seed(cfg.seed(), 0));
    let s_vec = run.seed("vector-engine", child_seed(cfg.seed(), 1));
    let (emp_p, emp_v) = rayon::join(
        || -> supermarket::Result<Vec<f64>> {
            let mut chain = ProfileChain::new(Profile::empty(oc.n as u64)?, oc.lambda, d, Some(oc.cap as usize))?;
            let mut rng = seeded(s_prof);
            for _ in 0..oc.burn_in {
                chain.step(&mut rng);
            }
            let mut occ = vec![0u64; prof.len()];
            for _ in 0..oc.samples {
                chain.step(&mut rng);
                occ[prof.index_of(&lengths_of(chain.profile())).expect("state within cap")] += 1;
            }
            Ok(occ.iter().map(|&c| c as f64 / oc.samples.max(1) as f64).collect())
        },
        || -> supermarket::Result<Vec<f64>> {
            let tape = RandomTape::new(s_vec, oc.n, d, oc.lambda)?;
            let mut x = QueueVector::zeros(oc.n);
            let mut occ = vec![0u64; prof.len()];
            for t in 0..oc.burn_in + oc.samples {
                step_vector_capped(&mut x, &tape.event(t), cap);
                if t >= oc.burn_in {
                    occ[prof.index_of(x.lengths()).expect("state within cap")] += 1;
                }
            }
            Ok(occ.iter().map(|&c| c as f64 / oc.samples.max(1) as f64).collect())
        },
    );
    let (emp_p, emp_v) = (emp_p?, emp_v?);
    let (tv_p, tv_v) = (tv(&emp_p, &pi), tv(&emp_v, &pi));
    let mut w = run.csv_raw("kernel.csv", "kernel/v1")?;
    prof.write_kernel_csv(&mut w)?;
    drop(w);
    let mut w = run.csv("stationary.csv", "stationary/v1")?;
    w.write_record(["state", "exact", "profile-engine", "vector-engine"])?;
    for i in 0..prof.len() {
        w.write_record([label(prof.state(i)), format!("{:e}", pi[i]), format!("{:e}", emp_p[i]), format!("{:e}", emp_v[i])])?;
    }
    w.flush()?;
    drop(w);
    let violations = [tv_p, tv_v].iter().filter(|&&t| t > oc.tv_threshold).count();
    let summary = json!({
        "profile_states": prof.len(),
        "vector_states": vect.len(),
        "stationary_residual": residual,
        "lumping_error": lump,
        "tv_profile_engine": tv_p,
        "tv_vector_engine": tv_v,
        "tv_threshold": oc.tv_threshold,
        "samples": oc.samples,
    });
    run.json("summary.json", "oracle-compare-summary/v1", &summary)?;
    Ok(violations)
}

// path-check ---------------------------------------------------------------

pub fn path_check(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (_, p) = model(cfg)?;
    let seed = run.seed("pairs", cfg.seed());
    let rows: Vec<Vec<String>> = (0..cfg.path_check.pairs as u64)
        .into_par_iter()
        .map(|i| -> supermarket::Result<Vec<String>> {
            let mut rng = seeded(child_seed(seed, i));
            let x = random_in_n(&p, p.epsilon, &mut rng)?;
            let y = random_in_n(&p, p.epsilon, &mut rng)?;
            Ok(match path_in_n(&x, &y, &p) {
                Ok(path) => {
                    let c = validate_path(&path, &y, &p);
                    vec![
                        i.to_string(),
                        c.length.to_string(),
                        c.cap.to_string(),
                        c.within_cap.to_string(),
                        c.endpoints_ok.to_string(),
                        c.adjacency_ok.to_string(),
                        c.all_in_n.to_string(),
                        c.first_outside.map(|v| v.to_string()).unwrap_or_default(),
                        c.ok().to_string(),
                        String::new(),
                    ]
                }
                Err(e) => {
                    let mut r = vec![i.to_string()];
                    r.extend(std::iter::repeat_n(String::new(), 7));
                    r.extend(["false".to_string(), e.to_string()]);
                    r
                }
            })
        })
        .collect::<supermarket::Result<_>>()
        .map_err(|e| usage(format!("path-check: {e}")))?;
    let mut w = run.csv("paths.csv", "paths/v1")?;
    w.write_record([
        "pair",
        "length",
        "cap",
        "within-cap",
        "endpoints-ok",
        "adjacency-ok",
        "all-in-n",
        "first-outside",
        "ok",
        "error",
    ])?;
    for r in &rows {
        w.write_record(r)?;
    }
    w.flush()?;
    drop(w);
    let bad = rows.iter().filter(|r| r[8] != "true").count();
    let longest = rows.iter().filter_map(|r| r[1].parse::<u64>().ok()).max();
    run.json(
        "summary.json",
        "path-check-summary/v1",
        &json!({ "params": params_json(&p), "pairs": rows.len(), "failed": bad, "longest": longest, "cap": 4.0 * p.level_scale(p.k) }),
    )?;
    Ok(bad)
}

// relaxation ---------------------------------------------------------------

pub fn relaxation(cfg: &Config, run: &mut Run) -> Result<Violations> {
    let (_, p) = model(cfg)?;
    let rc = &cfg.relaxation;
    let seed = run.seed("replicas", cfg.seed());
    let rep = relaxation_experiment(&p, rc.replicas, rc.record_every, seed)?;
    if let Some(reason) = &rep.reason {
        run.warn(format!("relaxation not run: {reason}"));
    }
    let mut w = run.csv("relaxation.csv", "relaxation/v1")?;
    w.write_record(["t", "mean-qk"])?;
    for (t, q) in &rep.trajectory {
        w.write_record([t.to_string(), q.to_string()])?;
    }
    w.flush()?;
    drop(w);
    draw(run, "relaxation.csv")?;
    let k = p.k as f64;
    let budget = budget_check(run, &p, k, k, rep.horizon, "relaxation");
    let mut summary = serde_json::to_value(&rep)?;
    if let Value::Object(o) = &mut summary {
        o.remove("trajectory");
        o.insert("within_ceiling".into(), json!(rep.within_ceiling()));
        o.insert("budget".into(), budget);
    }
    run.json("summary.json", "relaxation-summary/v1", &summary)?;
    Ok(usize::from(rep.feasible && !rep.within_ceiling()))
}

/// Renders result files given on the command line.
pub fn plot_files(inputs: &[std::path::PathBuf], run: &mut Run) -> Result<Violations> {
    if inputs.is_empty() {
        return Err(usage("plot needs at least one result file"));
    }
    for input in inputs {
        let (svg, warnings) = plot::plot_file(input, run.dir())?;
        for w in warnings {
            run.warn(w);
        }
        let name = svg.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        println!("{}", Path::new(run.dir()).join(&name).display());
        run.record(&name, "svg");
    }
    Ok(0)
}
