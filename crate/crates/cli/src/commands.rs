use std::f64::consts::LN_2;

use num_bigint::BigUint;
use serde_json::{json, Value};

use treeshift::boundary::{boundary_counts_exact, boundary_counts_log, TheoremCheck};
use treeshift::classify::ClassificationVerdict;
use treeshift::entropy::{entropy_rows, limit_existence_diagnostic, EntropyEstimate};
use treeshift::eval::{count_exact, count_log, LogCountSequence};
use treeshift::realize::Realization;
use treeshift::{
    aho_sloane_probe, build_realization, check_dirichlet, check_neumann, check_periodic, classify_2x2,
    classify_general, derive_snre, entropy_estimate, hidden_entropy_estimate, initial_counts, oracle_boundary_count,
    oracle_count, snre_to_basic_set, sweep, verify_realization, BasicSet, BoundaryKind, Error, Estimator,
    MonomialSystem, OracleQuery, PerturbationRule, RealizationPolynomial, Result, Signature, Snre,
};

use crate::format::{json as pretty, num, opt, Csv};
use crate::{BackendArg, Cli, Command, EstimatorArg, OutFormat};

pub fn run(cli: &Cli) -> Result<String> {
    if cli.precision < treeshift::eval::MIN_PRECISION {
        return Err(Error::Precision(cli.precision));
    }
    match &cli.command {
        Command::Validate { file } => validate(cli, &read_basic_set(file)?),
        Command::Derive { file, from_snre } => {
            if *from_snre {
                derive_back(cli, &read(file)?)
            } else {
                derive(cli, &read_basic_set(file)?)
            }
        }
        Command::Count { file } => count(cli, &read_basic_set(file)?),
        Command::Entropy { file, kappa } => entropy(cli, &read_basic_set(file)?, *kappa),
        Command::Classify { file } => classify(cli, &read_basic_set(file)?),
        Command::Realize { poly, emit } => realize(cli, poly, emit.as_deref()),
        Command::BoundaryCheck { file } => boundary_check(cli, &read_basic_set(file)?),
        Command::Sweep { d, k } => run_sweep(cli, Signature::new(*d, *k)?),
        Command::Probe { x1, rule } => probe(cli, *x1, rule),
    }
}

fn read(path: &str) -> Result<String> {
    let text = if path == "-" {
        std::io::read_to_string(std::io::stdin())
    } else {
        std::fs::read_to_string(path)
    };
    text.map_err(|e| Error::InvalidArgument(format!("cannot read {path}: {e}")))
}

fn read_basic_set(path: &str) -> Result<BasicSet> {
    BasicSet::parse(&read(path)?)
}

fn out(cli: &Cli, default: OutFormat) -> OutFormat {
    cli.out.unwrap_or(default)
}

fn boundary(cli: &Cli) -> Result<Option<BoundaryKind>> {
    match cli.boundary.as_str() {
        "none" => Ok(None),
        other => other.parse().map(Some),
    }
}

fn n_or(cli: &Cli, default: usize) -> Result<usize> {
    let n = cli.n.unwrap_or(default);
    if n < 2 {
        return Err(Error::InvalidArgument(format!("--n must be at least 2, got {n}")));
    }
    Ok(n)
}

/// Entropies in the requested unit.
fn h(cli: &Cli, v: f64) -> f64 {
    if cli.log2 {
        v / LN_2
    } else {
        v
    }
}

fn estimate_json(cli: &Cli, e: &EntropyEstimate) -> Value {
    json!({
        "value": h(cli, e.value),
        "unit": if cli.log2 { "bits" } else { "nats" },
        "estimator": e.estimator,
        "lag": e.lag,
        "n_used": e.n_used,
        "diagnostic": e.diagnostic,
    })
}

fn validate(cli: &Cli, b: &BasicSet) -> Result<String> {
    let (ess, removed) = b.essentialize();
    let blocks: Vec<String> = b.blocks().map(|x| x.to_string()).collect();
    Ok(match out(cli, OutFormat::Text) {
        OutFormat::Json => pretty(&json!({
            "signature": b.signature(),
            "blocks": blocks,
            "forbidden": b.forbidden().len(),
            "essential": removed.is_empty(),
            "removed_symbols": removed,
            "essential_blocks": ess.len(),
        })),
        OutFormat::Csv => {
            let mut c = Csv::new(&["d", "k", "blocks", "forbidden", "essential", "removed_symbols"]);
            let removed: Vec<String> = removed.iter().map(|s| s.to_string()).collect();
            c.row([
                b.signature().d().to_string(),
                b.signature().k().to_string(),
                b.len().to_string(),
                b.forbidden().len().to_string(),
                removed.is_empty().to_string(),
                removed.join(" "),
            ]);
            c.finish()
        }
        OutFormat::Text => {
            let mut s = format!(
                "valid: {}, {} blocks, {} forbidden\n",
                b.signature(),
                b.len(),
                b.forbidden().len()
            );
            if removed.is_empty() {
                s.push_str("essential: yes\n");
            } else {
                let names: Vec<String> = removed.iter().map(|s| s.to_string()).collect();
                s.push_str(&format!(
                    "essential: no (removed symbols {}; {} blocks remain)\n",
                    names.join(" "),
                    ess.len()
                ));
            }
            s.push_str(&b.to_text());
            s
        }
    })
}

const CONVENTION: &str = "recurrence starts at n = 2 with a^(i)_2 = number of blocks rooted at i";

fn derive(cli: &Cli, b: &BasicSet) -> Result<String> {
    let s = derive_snre(b);
    let init: Vec<String> = initial_counts(b).iter().map(|v| v.to_string()).collect();
    Ok(match out(cli, OutFormat::Text) {
        OutFormat::Json => {
            let mut v = s.to_json();
            v["initial_counts"] = json!(init);
            v["convention"] = json!(CONVENTION);
            pretty(&v)
        }
        OutFormat::Csv => {
            let mut c = Csv::new(&["symbol", "rule", "indicator"]);
            for i in b.signature().symbols() {
                let ind = s.indicator(i).to_string();
                for t in s.rules(i) {
                    let t: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                    c.row([i.to_string(), t.join(" "), ind.clone()]);
                }
            }
            c.finish()
        }
        OutFormat::Text => {
            let mut text = format!("signature: {}\n# {CONVENTION}\n", b.signature());
            for (i, v) in b.signature().symbols().zip(&init) {
                text.push_str(&format!("# a^({i})_2 = {v}\n"));
            }
            text.push_str(&s.monomials().to_text());
            text
        }
    })
}

/// Recurrence system (JSON from `derive --out json`, or the text form with
/// its `signature:` line) back to a basic set.
fn derive_back(cli: &Cli, text: &str) -> Result<String> {
    let b = if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        Snre::from_json(&v)?.to_basic_set()
    } else {
        let (idx, line) = text
            .lines()
            .enumerate()
            .find(|(_, l)| l.trim_start().starts_with("signature:"))
            .ok_or(Error::Parse {
                line: 0,
                message: "missing signature line".into(),
            })?;
        let sig = BasicSet::parse(line)
            .map_err(|e| match e {
                Error::Parse { message, .. } => Error::Parse { line: idx + 1, message },
                other => other,
            })?
            .signature();
        let body: Vec<&str> = text
            .lines()
            .enumerate()
            .map(|(i, l)| if i == idx { "" } else { l })
            .collect();
        snre_to_basic_set(&MonomialSystem::parse(sig, &body.join("\n"))?)?
    };
    Ok(match out(cli, OutFormat::Text) {
        OutFormat::Json => pretty(&json!({
            "signature": b.signature(),
            "blocks": b.blocks().map(|x| x.to_string()).collect::<Vec<_>>(),
        })),
        _ => b.to_text(),
    })
}

enum Cell {
    Exact(BigUint),
    Log(f64),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Exact(v) => v.to_string(),
            Cell::Log(v) => num(*v),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Exact(v) => json!(v.to_string()),
            Cell::Log(v) => json!(v),
        }
    }
}

fn count(cli: &Cli, b: &BasicSet) -> Result<String> {
    let n_max = n_or(cli, 10)?;
    let ess = !cli.no_essentialize;
    let kind = boundary(cli)?;
    // (n, total, per-symbol); per-symbol is empty under a boundary condition.
    let mut rows: Vec<(usize, Cell, Vec<Cell>)> = Vec::new();
    match (cli.backend, kind) {
        (BackendArg::Exact, None) => {
            let c = count_exact(b, n_max, ess)?;
            for n in 2..=n_max {
                let per = c.at(n).iter().cloned().map(Cell::Exact).collect();
                rows.push((n, Cell::Exact(c.total(n).clone()), per));
            }
        }
        (BackendArg::Exact, Some(kind)) => {
            for (n, v) in (2..).zip(boundary_counts_exact(b, kind, n_max, ess)?) {
                rows.push((n, Cell::Exact(v), Vec::new()));
            }
        }
        (BackendArg::Log, None) => {
            let c = count_log(b, n_max, cli.precision, ess)?;
            for n in 2..=n_max {
                let per = c.at(n).iter().copied().map(Cell::Log).collect();
                rows.push((n, Cell::Log(c.total(n)), per));
            }
        }
        (BackendArg::Log, Some(kind)) => {
            let c = boundary_counts_log(b, kind, n_max, cli.precision, ess)?;
            for (n, v) in c.iter() {
                rows.push((n, Cell::Log(v), Vec::new()));
            }
        }
        (BackendArg::Oracle, kind) => {
            let target = if ess { b.essentialize().0 } else { b.clone() };
            for n in 2..=n_max {
                let mut q = OracleQuery::new(&target, n);
                if let Some(kind) = kind {
                    q = q.boundary(kind);
                    rows.push((n, Cell::Exact(oracle_boundary_count(&q)?.into()), Vec::new()));
                } else {
                    let c = oracle_count(&q)?;
                    let per = c.per_symbol.iter().map(|&v| Cell::Exact(v.into())).collect();
                    rows.push((n, Cell::Exact(c.total.into()), per));
                }
            }
        }
    }
    let log = matches!(cli.backend, BackendArg::Log);
    let k = b.signature().k();
    Ok(match out(cli, OutFormat::Text) {
        OutFormat::Json => pretty(&json!({
            "signature": b.signature(),
            "backend": format!("{:?}", cli.backend).to_lowercase(),
            "values": if log { "natural log" } else { "exact" },
            "boundary": kind,
            "essentialized": ess,
            "counts": rows.iter().map(|(n, t, per)| json!({
                "n": n,
                "total": t.json(),
                "per_symbol": per.iter().map(Cell::json).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })),
        OutFormat::Csv => {
            let prefix = if log { "ln_" } else { "" };
            let mut header = vec!["n".to_string(), format!("{prefix}total")];
            if kind.is_none() {
                header.extend((1..=k).map(|i| format!("{prefix}a{i}")));
            }
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let mut c = Csv::new(&header);
            for (n, t, per) in &rows {
                c.row(
                    std::iter::once(n.to_string())
                        .chain(std::iter::once(t.text()))
                        .chain(per.iter().map(Cell::text)),
                );
            }
            c.finish()
        }
        OutFormat::Text => {
            let mut s = String::new();
            if log {
                s.push_str("# natural logs of the counts\n");
            }
            for (n, t, per) in &rows {
                s.push_str(&format!("n={n} total={}", t.text()));
                if !per.is_empty() {
                    let p: Vec<String> = per.iter().map(Cell::text).collect();
                    s.push_str(&format!(" per_symbol=[{}]", p.join(" ")));
                }
                s.push('\n');
            }
            s
        }
    })
}

fn log_sequence(cli: &Cli, b: &BasicSet, n_max: usize) -> Result<LogCountSequence> {
    let ess = !cli.no_essentialize;
    match (cli.backend, boundary(cli)?) {
        (BackendArg::Oracle, _) => Err(Error::InvalidArgument("entropy needs the exact or log backend".into())),
        (BackendArg::Exact, None) => Ok(count_exact(b, n_max, ess)?.to_log()),
        (BackendArg::Exact, Some(kind)) => {
            let totals = boundary_counts_exact(b, kind, n_max, ess)?
                .iter()
                .map(|v| treeshift::extfloat::ExtFloat::from_biguint(v, 64).ln())
                .collect();
            Ok(LogCountSequence::from_totals(2, totals))
        }
        (BackendArg::Log, None) => count_log(b, n_max, cli.precision, ess),
        (BackendArg::Log, Some(kind)) => boundary_counts_log(b, kind, n_max, cli.precision, ess),
    }
}

fn entropy(cli: &Cli, b: &BasicSet, kappa: Option<f64>) -> Result<String> {
    let n_max = n_or(cli, 40)?.max(4);
    let seq = log_sequence(cli, b, n_max)?;
    let estimator = match cli.estimator {
        EstimatorArg::Ratio => Estimator::Ratio,
        EstimatorArg::Difference => Estimator::Difference,
    };
    let est = entropy_estimate(&seq, estimator);
    let kappa = kappa.unwrap_or(b.signature().d() as f64);
    let hidden = hidden_entropy_estimate(&seq, kappa).ok();
    let limit = limit_existence_diagnostic(&seq, b.signature().d())?;
    let rows = entropy_rows(&seq, hidden.as_ref().map(|x| x.kappa_used));
    Ok(match out(cli, OutFormat::Text) {
        OutFormat::Csv => {
            let mut c = Csv::new(&["n", "ln_c_n", "ratio_estimate", "difference_estimate", "alpha_hat"]);
            for r in &rows {
                c.row([
                    r.n.to_string(),
                    num(r.ln_c_n),
                    opt(r.ratio_estimate.map(|v| h(cli, v))),
                    opt(r.difference_estimate.map(|v| h(cli, v))),
                    opt(r.alpha_hat),
                ]);
            }
            c.finish()
        }
        OutFormat::Json => pretty(&json!({
            "estimate": estimate_json(cli, &est),
            "hidden_entropy": hidden,
            "limit_diagnostic": limit,
            "boundary": boundary(cli)?,
        })),
        OutFormat::Text => {
            let unit = if cli.log2 { "bits" } else { "nats" };
            let mut s = format!(
                "h = {} {unit} ({:?} estimator, n = {}, {:?})\n",
                num(h(cli, est.value)),
                est.estimator,
                est.n_used,
                est.diagnostic
            );
            if let Some(hd) = &hidden {
                s.push_str(&format!("alpha = {} (kappa = {})\n", num(hd.alpha), hd.kappa_used));
            }
            s.push_str(&format!("ln c_n / d^n: {:?}\n", limit.verdict));
            s
        }
    })
}

fn verdict_text(v: &ClassificationVerdict) -> String {
    let mut s = v.value.to_string();
    if let Some(j) = v.justification {
        s.push_str(&format!(" ({j})"));
    }
    if !v.candidates.is_empty() {
        let c: Vec<String> = v.candidates.iter().map(|c| c.to_string()).collect();
        s.push_str(&format!(" candidates: {}", c.join(", ")));
    }
    if let Some(x) = v.numeric_check {
        s.push_str(&format!(" numeric {}", num(x)));
    }
    s.push('\n');
    s
}

fn classify(cli: &Cli, b: &BasicSet) -> Result<String> {
    let sig = b.signature();
    let v = if sig.d() == 2 && sig.k() == 2 {
        classify_2x2(b)?
    } else {
        classify_general(&derive_snre(b))
    };
    Ok(match out(cli, OutFormat::Json) {
        OutFormat::Text => verdict_text(&v),
        OutFormat::Csv => {
            let mut c = Csv::new(&["value", "justification", "numeric_check"]);
            c.row([
                v.value.to_string(),
                v.justification.map(|j| j.to_string()).unwrap_or_default(),
                opt(v.numeric_check),
            ]);
            c.finish()
        }
        OutFormat::Json => pretty(&v.to_json()),
    })
}

fn realization_file(r: &Realization) -> String {
    let mut s = format!("# realizes ln rho for {}\n", r.polynomial);
    for (name, sym) in &r.symbol_legend {
        s.push_str(&format!("# {sym} = {name}\n"));
    }
    s.push_str(&r.basic_set.to_text());
    s
}

fn realize(cli: &Cli, poly: &str, emit: Option<&str>) -> Result<String> {
    let poly = RealizationPolynomial::parse(poly)?;
    let r = build_realization(&poly)?;
    let n = n_or(cli, 40)?;
    let report = verify_realization(&r, n)?;
    if let Some(path) = emit {
        std::fs::write(path, realization_file(&r))
            .map_err(|e| Error::InvalidArgument(format!("cannot write {path}: {e}")))?;
    }
    Ok(match out(cli, OutFormat::Json) {
        OutFormat::Json => pretty(&json!({
            "polynomial": poly.to_string(),
            "d": r.d,
            "k": r.k,
            "rho": r.rho,
            "ln_rho": h(cli, report.ln_rho),
            "estimate": estimate_json(cli, &report.entropy_estimate),
            "abs_error": h(cli, report.abs_error),
            "legend": r.legend_json(),
            "period": r.period,
            "fallback_forcing": r.fallback_forcing,
            "convention": CONVENTION,
            "basic_set": r.basic_set.to_text(),
        })),
        OutFormat::Csv => {
            let mut c = Csv::new(&["polynomial", "d", "k", "rho", "ln_rho", "estimate", "abs_error"]);
            c.row([
                poly.to_string(),
                r.d.to_string(),
                r.k.to_string(),
                num(r.rho),
                num(h(cli, report.ln_rho)),
                num(h(cli, report.entropy_estimate.value)),
                num(h(cli, report.abs_error)),
            ]);
            c.finish()
        }
        OutFormat::Text => {
            let mut s = realization_file(&r);
            s.push_str(&format!(
                "# rho = {}\n# estimate at n = {}: {} vs ln rho {} (error {})\n",
                num(r.rho),
                report.entropy_estimate.n_used,
                num(h(cli, report.entropy_estimate.value)),
                num(h(cli, report.ln_rho)),
                num(h(cli, report.abs_error))
            ));
            s
        }
    })
}

fn boundary_check(cli: &Cli, b: &BasicSet) -> Result<String> {
    let checks = [
        check_neumann(b)?,
        check_dirichlet(b, 1)?,
        check_dirichlet(b, 2)?,
        check_periodic(b)?,
    ];
    let entry = |c: &TheoremCheck| {
        json!({
            "relation": c.relation,
            "witnesses": c.witnesses,
            "h": c.numeric.map(|x| h(cli, x.h)),
            "h_boundary": c.numeric.map(|x| h(cli, x.h_boundary)),
            "note": c.note,
        })
    };
    Ok(match out(cli, OutFormat::Json) {
        OutFormat::Json => {
            let map: serde_json::Map<String, Value> = checks.iter().map(|c| (c.kind.to_string(), entry(c))).collect();
            pretty(&Value::Object(map))
        }
        OutFormat::Csv => {
            let mut c = Csv::new(&["kind", "relation", "h", "h_boundary", "note"]);
            for ch in &checks {
                c.row([
                    ch.kind.to_string(),
                    entry(ch)["relation"].as_str().unwrap_or_default().to_string(),
                    opt(ch.numeric.map(|x| h(cli, x.h))),
                    opt(ch.numeric.map(|x| h(cli, x.h_boundary))),
                    ch.note.clone().unwrap_or_default(),
                ]);
            }
            c.finish()
        }
        OutFormat::Text => {
            let mut s = String::new();
            for ch in &checks {
                s.push_str(&format!("{}: {:?}", ch.kind, ch.relation));
                if let Some(x) = ch.numeric {
                    s.push_str(&format!(
                        " (h {}, h_boundary {})",
                        num(h(cli, x.h)),
                        num(h(cli, x.h_boundary))
                    ));
                }
                if let Some(note) = &ch.note {
                    s.push_str(&format!(" [{note}]"));
                }
                s.push('\n');
            }
            s
        }
    })
}

fn run_sweep(cli: &Cli, sig: Signature) -> Result<String> {
    let n = n_or(cli, treeshift::classify::NUMERIC_N)?;
    let rows = sweep(sig)?;
    let numeric = |row: &treeshift::SweepRow| -> Result<f64> {
        if n == treeshift::classify::NUMERIC_N {
            return Ok(row.h_numeric);
        }
        let b = BasicSet::from_mask(sig, row.mask)?;
        Ok(entropy_estimate(&count_log(&b, n, cli.precision, true)?, Estimator::Difference).value)
    };
    let vec_at = |v: &ClassificationVerdict, i: usize| v.witnesses.get(i).map(|w| w.to_string()).unwrap_or_default();
    Ok(match out(cli, OutFormat::Csv) {
        OutFormat::Csv => {
            let mut c = Csv::new(&[
                "basicset_bitmask",
                "v_F",
                "v_G",
                "verdict",
                "justification",
                "h_numeric",
            ]);
            for r in &rows {
                c.row([
                    r.mask.to_string(),
                    vec_at(&r.verdict, 0),
                    vec_at(&r.verdict, 1),
                    r.verdict.value.to_string(),
                    r.verdict.justification.map(|j| j.to_string()).unwrap_or_default(),
                    num(h(cli, numeric(r)?)),
                ]);
            }
            c.finish()
        }
        OutFormat::Json => {
            let items = rows
                .iter()
                .map(|r| {
                    let mut v = r.verdict.to_json();
                    v["basicset_bitmask"] = json!(r.mask);
                    v["h_numeric"] = json!(h(cli, numeric(r)?));
                    Ok(v)
                })
                .collect::<Result<Vec<_>>>()?;
            pretty(&Value::Array(items))
        }
        OutFormat::Text => {
            let mut s = String::new();
            for r in &rows {
                s.push_str(&format!("{:>5} ", r.mask));
                s.push_str(&verdict_text(&r.verdict));
            }
            s
        }
    })
}

fn probe(cli: &Cli, x1: f64, rule: &str) -> Result<String> {
    let rule = match rule {
        "zero" => PerturbationRule::Zero,
        "maximal" => PerturbationRule::Maximal,
        "uniform" => PerturbationRule::Uniform { seed: cli.seed },
        other => other
            .strip_prefix("constant:")
            .and_then(|c| c.parse().ok())
            .map(PerturbationRule::Constant)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown rule `{other}`")))?,
    };
    let n = n_or(cli, 50)?;
    let e = aho_sloane_probe(x1, rule, n)?;
    Ok(match out(cli, OutFormat::Json) {
        OutFormat::Json => pretty(&estimate_json(cli, &e)),
        OutFormat::Csv => {
            let mut c = Csv::new(&["n", "estimate", "diagnostic"]);
            c.row([
                e.n_used.to_string(),
                num(h(cli, e.value)),
                format!("{:?}", e.diagnostic),
            ]);
            c.finish()
        }
        OutFormat::Text => format!("h = {} ({:?})\n", num(h(cli, e.value)), e.diagnostic),
    })
}
