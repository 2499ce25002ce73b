use std::time::Instant;

use adversary_core::adversary::{run_tree, ConstructionParams, ForkMode};
use adversary_core::algorithms::by_name;
use adversary_core::analysis::{
    certify_prices, check_rhs_identity, check_w, inequality_chain, multiplier_identity_trials, optimize_bound,
    rhs_identity_trials, sweep, WeightSystem,
};
use adversary_core::opt_bounds::{
    check_constructions, construct_solution, first_batch_margin_holds, first_batch_opt_lower, opt_formula,
    sample_n_large,
};
use adversary_core::rational::{self, Exact};
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::RunConfig;

pub struct Outcome {
    pub report: Value,
    pub failures: Vec<String>,
}

type CmdResult = Result<Outcome, Box<dyn std::error::Error>>;

fn log(cfg: &RunConfig, start: Instant, msg: &str) {
    if cfg.verbose {
        eprintln!("[{:>7.2}s] {msg}", start.elapsed().as_secs_f64());
    }
}

fn weight(cfg: &RunConfig) -> Result<BigRational, Box<dyn std::error::Error>> {
    match &cfg.w {
        Some(s) => {
            let w = rational::parse(s).ok_or_else(|| format!("cannot parse w = {s:?}"))?;
            check_w(&w)?;
            Ok(w)
        }
        None => Ok(optimize_bound().w_search),
    }
}

fn config_json(cfg: &RunConfig, w: Option<&BigRational>) -> Value {
    json!({
        "t": cfg.t,
        "m": cfg.m,
        "algorithm": cfg.algorithm,
        "h": cfg.h,
        "w": w.map(Exact::from),
        "seed": cfg.seed,
    })
}

#[derive(Serialize)]
struct Named {
    name: &'static str,
    passed: bool,
}

pub fn simulate(cfg: &RunConfig) -> CmdResult {
    let start = Instant::now();
    let w = weight(cfg)?;
    let params = ConstructionParams::new(cfg.t, cfg.m)?;
    let mut alg = by_name(&cfg.algorithm, cfg.h, cfg.seed)?;
    log(cfg, start, &format!("running {} on N = {}", cfg.algorithm, params.n));
    let run = run_tree(&params, alg.as_mut(), ForkMode::Auto)?;
    log(cfg, start, "tree finished");
    let report = run.report()?;
    let chain = inequality_chain(&run, &w)?;
    log(cfg, start, "analysis finished");

    let n_large = run.n_large();
    let mut offline = Vec::new();
    let mut offline_ok = true;
    for sp in &report.stopping_points {
        let items = run.items_until(sp.label);
        let built = construct_solution(&params, sp.label, &items, n_large, &run.gamma);
        let (bins, error) = match built {
            Ok(sol) => (sol.len(), None),
            Err(e) => (0, Some(e.to_string())),
        };
        let ok = error.is_none() && rational::int(bins as i64) <= sp.opt_upper_bound;
        offline_ok &= ok;
        offline.push(json!({
            "at": sp.label,
            "bins": bins,
            "formula": Exact::from(&opt_formula(&params, sp.label, n_large)),
            "upper_bound": Exact::from(&sp.opt_upper_bound),
            "ok": ok,
            "error": error,
        }));
    }
    log(cfg, start, "offline packings built");

    let checks = vec![
        Named { name: "run_checks", passed: report.checks.all() },
        Named { name: "weight_price_inequality", passed: chain.weights.holds() },
        Named { name: "inequality_chain", passed: chain.holds() },
        Named { name: "offline_packings", passed: offline_ok },
    ];
    let mut failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.to_string()).collect();
    failures.extend(report.checks.failures().into_iter().map(|f| format!("run_checks.{f}")));

    Ok(Outcome {
        report: json!({
            "schema": 1,
            "command": "simulate",
            "config": config_json(cfg, Some(&w)),
            "checks": checks,
            "report": report,
            "transcript": run.transcript,
            "offline_packings": offline,
            "analysis": chain,
            "passed": failures.is_empty(),
        }),
        failures,
    })
}

pub fn verify(cfg: &RunConfig) -> CmdResult {
    let start = Instant::now();
    let w = weight(cfg)?;
    let t = cfg.t;
    let params = ConstructionParams::new(t, cfg.m)?;

    log(cfg, start, "certifying prices");
    let prices = certify_prices(t)?;
    log(cfg, start, "identities");
    let multiplier = multiplier_identity_trials(t, &w, 1000, cfg.seed);
    let rhs_trials: Vec<_> = (3..=8).map(|tt| rhs_identity_trials(tt, &w, 200, cfg.seed ^ tt as u64)).collect();
    let n = rational::int(params.n as i64);
    let rhs_edges = (3..=8).all(|tt| {
        [0, 1, params.n - 1, params.n]
            .iter()
            .all(|&nl| check_rhs_identity(tt, &w, &n, &rational::int(nl as i64)))
    });
    let trunk_weights = (3..=8).all(WeightSystem::trunk_identity_holds);

    log(cfg, start, "first batch");
    let mut first_batch = Vec::new();
    let mut first_batch_ok = true;
    for tt in 3..=10u32 {
        let p = ConstructionParams::new(tt, cfg.m)?;
        let lower = first_batch_opt_lower(&p);
        let margin = first_batch_margin_holds(tt);
        first_batch_ok &= lower.is_some() && margin;
        first_batch.push(json!({
            "t": tt,
            "opt_lower": lower.as_ref().map(Exact::from),
            "margin_holds": margin,
        }));
    }

    log(cfg, start, "offline packings");
    let samples = sample_n_large(params.n, 20);
    let constructions = check_constructions(&params, &samples);
    let constructions_ok = constructions.iter().all(|c| c.ok);
    let worst_excess = constructions
        .iter()
        .map(|c| rational::to_f64(&(rational::int(c.bins as i64) - &c.formula)))
        .fold(f64::NEG_INFINITY, f64::max);
    log(cfg, start, "done");

    let checks = vec![
        Named { name: "price_certification", passed: prices.holds() },
        Named { name: "multiplier_identity", passed: multiplier.holds() },
        Named { name: "rhs_identity", passed: rhs_trials.iter().all(|r| r.holds()) && rhs_edges },
        Named { name: "trunk_weight_identity", passed: trunk_weights },
        Named { name: "first_batch_opt", passed: first_batch_ok },
        Named { name: "offline_constructions", passed: constructions_ok },
    ];
    let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.to_string()).collect();

    Ok(Outcome {
        report: json!({
            "schema": 1,
            "command": "verify",
            "config": config_json(cfg, Some(&w)),
            "checks": checks,
            "price_certification": prices,
            "multiplier_identity": multiplier,
            "rhs_identity": rhs_trials,
            "first_batch": first_batch,
            "offline_constructions": {
                "n_large_samples": samples,
                "max_bins_minus_formula": worst_excess,
                "rows": constructions,
            },
            "passed": failures.is_empty(),
        }),
        failures,
    })
}

pub fn optimize(cfg: &RunConfig) -> CmdResult {
    if let Some(s) = &cfg.w {
        let w = rational::parse(s).ok_or_else(|| format!("cannot parse w = {s:?}"))?;
        check_w(&w)?;
    }
    let opt = optimize_bound();
    let rows = sweep(50, 10);
    let failures = if opt.holds() { vec![] } else { vec!["optimum".to_string()] };
    Ok(Outcome {
        report: json!({
            "schema": 1,
            "command": "optimize",
            "r_star": opt.r_star.to_decimal(15),
            "w_star": opt.w_star.to_decimal(15),
            "optimum": opt,
            "sweep": rows,
            "passed": failures.is_empty(),
        }),
        failures,
    })
}
