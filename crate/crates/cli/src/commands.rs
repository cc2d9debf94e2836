use gibbs_scan::diagnostics::{act_hat, batch_means, ci95, mse_ratio, replicate_means, RatioError};
use gibbs_scan::drift::{
    certificate_cgs, certificate_rqgs, certificate_rsgs, rate_ordering, transfer_from_certificate,
    two_step_rsgs, verify_drift, DriftCertificate, DriftTarget, MomentBounds, VerificationReport,
};
use gibbs_scan::{walk, JointState, RngStream, ScanStrategy, StrategyKind};

use crate::config::{ExperimentConfig, Model, RatioErrorKind};
use crate::output::{full, sig, CsvDoc};
use crate::CliError;

/// Bytes to write plus whether the command met its success criterion.
#[derive(Debug)]
pub struct CommandOutput {
    pub csv: Vec<u8>,
    pub failure: Option<String>,
}

impl CommandOutput {
    fn ok(csv: Vec<u8>) -> Self {
        Self { csv, failure: None }
    }
}

/// Stable 64-bit label for a strategy, so its random streams do not depend
/// on where it sits in the strategy list.
pub fn strategy_label(strategy: &ScanStrategy) -> u64 {
    strategy
        .to_string()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        })
}

/// Stream families; each command reads its own.
const LONG_RUN: u64 = 0;
const REPLICATES: u64 = 1;
const PILOT: u64 = 2;
const VERIFY: u64 = 3;
const CHAIN: u64 = 4;

fn family(cfg: &ExperimentConfig, id: u64) -> RngStream {
    RngStream::new(cfg.seed(), id)
}

fn probability_field(strategy: &ScanStrategy) -> String {
    strategy
        .probability()
        .map(|p| sig(p, 4))
        .unwrap_or_default()
}

fn strategy_name(strategy: &ScanStrategy) -> &'static str {
    match strategy {
        ScanStrategy::Composition { x_first: true } => "CGS",
        ScanStrategy::Composition { x_first: false } => "CGS-y",
        ScanStrategy::RandomSequence { .. } => "RQGS",
        ScanStrategy::RandomScan { .. } => "RSGS",
    }
}

fn doubled(strategy: &ScanStrategy, n: usize, doubling: bool) -> usize {
    if doubling && strategy.kind() == StrategyKind::RandomScan {
        2 * n
    } else {
        n
    }
}

fn bounds_for(cfg: &ExperimentConfig) -> Result<MomentBounds, CliError> {
    match cfg.explicit_bounds()? {
        Some(b) => Ok(b),
        None => Ok(cfg.build_model()?.contract().bounds),
    }
}

/// Certificates for every strategy and selection probability on the grids.
pub fn certify(cfg: &ExperimentConfig) -> Result<CommandOutput, CliError> {
    let bounds = bounds_for(cfg)?;
    bounds.require_contraction()?;
    let qs = ExperimentConfig::grid(&cfg.q_grid, "q_grid")?;
    let ps = ExperimentConfig::grid(&cfg.p_grid, "p_grid")?;

    let ordered = |q: Option<f64>, p: Option<f64>| -> Result<bool, CliError> {
        let mut all = true;
        for &qq in q.as_ref().map(std::slice::from_ref).unwrap_or(&qs) {
            for &pp in p.as_ref().map(std::slice::from_ref).unwrap_or(&ps) {
                all &= rate_ordering(&bounds, qq, pp)?.ordered;
            }
        }
        Ok(all)
    };

    let mut doc = CsvDoc::new("certify", &cfg.hash(), cfg.seed());
    doc.comment(format!(
        "contract j={} k={} m={} n={} jm={}",
        full(bounds.j),
        full(bounds.k),
        full(bounds.m),
        full(bounds.n),
        full(bounds.jm())
    ));
    doc.row([
        "strategy",
        "probability",
        "lambda",
        "b",
        "v",
        "coef_f",
        "coef_g",
        "ordering_verified",
    ])?;
    let emit = |doc: &mut CsvDoc,
                name: &str,
                prob: String,
                lambda: f64,
                b: f64,
                cert: Option<&DriftCertificate>,
                ok: bool|
     -> Result<(), CliError> {
        doc.row([
            name.to_string(),
            prob,
            full(lambda),
            full(b),
            cert.and_then(|c| c.v).map(full).unwrap_or_default(),
            cert.map(|c| full(c.coef_f)).unwrap_or_default(),
            cert.map(|c| full(c.coef_g)).unwrap_or_default(),
            ok.to_string(),
        ])
    };

    let cgs = certificate_cgs(&bounds)?;
    let ok = ordered(None, None)?;
    emit(
        &mut doc,
        "CGS",
        String::new(),
        cgs.lambda,
        cgs.b,
        Some(&cgs),
        ok,
    )?;
    for &q in &qs {
        let c = certificate_rqgs(&bounds, q)?;
        let ok = ordered(Some(q), None)?;
        emit(
            &mut doc,
            "RQGS",
            probability_field(&c.strategy),
            c.lambda,
            c.b,
            Some(&c),
            ok,
        )?;
    }
    for &p in &ps {
        let c = certificate_rsgs(&bounds, p)?;
        let (l2, b2) = two_step_rsgs(&c)?;
        let ok = ordered(None, Some(p))?;
        let prob = probability_field(&c.strategy);
        emit(&mut doc, "RSGS", prob.clone(), c.lambda, c.b, Some(&c), ok)?;
        emit(&mut doc, "RSGS-two-step", prob, l2, b2, None, ok)?;
    }
    Ok(CommandOutput::ok(doc.finish()?))
}

/// Full state sequence of one chain, every `thin`-th state.
pub fn run(cfg: &ExperimentConfig, thin: usize) -> Result<CommandOutput, CliError> {
    if thin < 1 {
        return Err(CliError::Usage("thin must be at least 1".into()));
    }
    let model = cfg.build_model()?;
    let cond = model.conditionals();
    let strategy = cfg.strategy_list()?[0];
    let n = cfg.iterations()?;

    let mut doc = CsvDoc::new("run", &cfg.hash(), cfg.seed());
    doc.comment(format!("strategy={strategy} iterations={n} thin={thin}"));
    let mut header = vec!["iteration".to_string()];
    header.extend(model.x_names());
    header.extend(model.y_names());
    doc.row(&header)?;

    let mut rows = Vec::new();
    let rng = family(cfg, CHAIN).derive(strategy_label(&strategy));
    walk(
        &model.initial_state(),
        n,
        &strategy,
        cond.as_ref(),
        &rng,
        |i, s| {
            if i % thin == 0 {
                rows.push(state_row(i, s));
            }
        },
    )?;
    for r in rows {
        doc.row(r)?;
    }
    Ok(CommandOutput::ok(doc.finish()?))
}

fn state_row(i: usize, s: &JointState) -> Vec<String> {
    let mut row = vec![i.to_string()];
    row.extend(s.x.iter().chain(&s.y).map(|v| full(*v)));
    row
}

pub struct TableOptions {
    pub rsgs_doubling: bool,
}

/// Summary table: CI, ACT and MSE ratio against the composition scan.
pub fn table(cfg: &ExperimentConfig, opts: &TableOptions) -> Result<CommandOutput, CliError> {
    let model = cfg.build_model()?;
    let Model::NormalNormal(params) = &model else {
        return Err(CliError::Usage(
            "table needs model = \"normal_normal\"".into(),
        ));
    };
    let cond = model.conditionals();
    let initial = model.initial_state();
    let n = cfg.iterations()?;
    let replicates = cfg.replicate_count()?;
    let replicate_n = cfg.replicate_n.unwrap_or(n);
    if replicate_n < 1 {
        return Err(CliError::Usage("replicate_n must be at least 1".into()));
    }
    let method = match cfg.ratio_error.unwrap_or_default() {
        RatioErrorKind::Delta => RatioError::Delta,
        RatioErrorKind::Jackknife => RatioError::Jackknife,
    };

    let baseline = ScanStrategy::composition();
    let mut strategies = vec![baseline];
    strategies.extend(cfg.strategy_list()?.into_iter().filter(|s| *s != baseline));

    let mut doc = CsvDoc::new("table", &cfg.hash(), cfg.seed());
    doc.comment(format!(
        "N={} theta2={} tau2={} n={n} replicate_n={replicate_n} R={replicates} rsgs_doubling={}",
        params.n, params.theta2, params.tau2, opts.rsgs_doubling
    ));
    doc.row([
        "algorithm",
        "probability",
        "iterations",
        "ci_center",
        "ci_half_width",
        "act",
        "mse_ratio",
        "mse_ratio_se",
    ])?;

    let observable = |s: &JointState| s.y[0];
    let mut baseline_means: Option<Vec<f64>> = None;
    for strategy in &strategies {
        let row = (|| -> Result<Vec<String>, CliError> {
            let label = strategy_label(strategy);
            let long_n = doubled(strategy, n, opts.rsgs_doubling);
            let mut ys = Vec::with_capacity(long_n + 1);
            walk(
                &initial,
                long_n,
                strategy,
                cond.as_ref(),
                &family(cfg, LONG_RUN).derive(label),
                |_, s| ys.push(s.y[0]),
            )?;
            let est = batch_means(&ys)?;
            let ci = ci95(&est);
            let act = act_hat(&est, params.tau2)?;

            let (ratio, se) = if replicates < 2 {
                ("NA".to_string(), "NA".to_string())
            } else {
                let rep_n = doubled(strategy, replicate_n, opts.rsgs_doubling);
                let means = replicate_means(
                    cond.as_ref(),
                    strategy,
                    &initial,
                    rep_n,
                    replicates,
                    &family(cfg, REPLICATES).derive(label),
                    observable,
                )?;
                match &baseline_means {
                    None => {
                        // first row is the baseline itself
                        mse_ratio(&means, &means, method)?;
                        baseline_means = Some(means);
                        ("1".to_string(), "NA".to_string())
                    }
                    Some(base) => {
                        let s = mse_ratio(&means, base, method)?;
                        (sig(s.ratio_vs_baseline, 4), sig(s.ratio_se, 4))
                    }
                }
            };
            Ok(vec![
                strategy_name(strategy).to_string(),
                probability_field(strategy),
                long_n.to_string(),
                sig(ci.center, 4),
                sig(ci.half_width, 4),
                sig(act, 4),
                ratio,
                se,
            ])
        })();
        match row {
            Ok(r) => doc.row(r)?,
            Err(e) => {
                let msg = format!("{strategy}: {e}");
                doc.row([format!("FAILED {msg}")])?;
                return Ok(CommandOutput {
                    csv: doc.finish()?,
                    failure: Some(msg),
                });
            }
        }
    }
    Ok(CommandOutput::ok(doc.finish()?))
}

/// Final `last_k` states' y values of one run per strategy.
pub fn trace(
    cfg: &ExperimentConfig,
    last_k: usize,
    rsgs_doubling: bool,
) -> Result<CommandOutput, CliError> {
    let model = cfg.build_model()?;
    let cond = model.conditionals();
    let initial = model.initial_state();
    let n = cfg.iterations()?;
    let strategies = cfg.strategy_list()?;

    let mut doc = CsvDoc::new("trace", &cfg.hash(), cfg.seed());
    doc.comment(format!(
        "n={n} last_k={last_k} rsgs_doubling={rsgs_doubling}"
    ));
    let mut header = vec![
        "algorithm".to_string(),
        "probability".into(),
        "iteration".into(),
    ];
    header.extend(model.y_names());
    doc.row(&header)?;

    for strategy in &strategies {
        let len = doubled(strategy, n, rsgs_doubling);
        if last_k > len {
            return Err(CliError::Usage(format!(
                "last_k = {last_k} exceeds the {len} iterations of {strategy}"
            )));
        }
        let first = len - last_k + 1;
        let mut rows = Vec::with_capacity(last_k);
        walk(
            &initial,
            len,
            strategy,
            cond.as_ref(),
            &family(cfg, LONG_RUN).derive(strategy_label(strategy)),
            |i, s| {
                if last_k > 0 && i >= first {
                    let mut row = vec![
                        strategy_name(strategy).to_string(),
                        probability_field(strategy),
                        i.to_string(),
                    ];
                    row.extend(s.y.iter().map(|v| full(*v)));
                    rows.push(row);
                }
            },
        )?;
        for r in rows {
            doc.row(r)?;
        }
    }
    Ok(CommandOutput::ok(doc.finish()?))
}

pub struct VerifyOptions {
    pub probes: usize,
    pub mc_samples: usize,
    pub transfer: bool,
}

/// Probe states spread along a composition-scan pilot run.
pub fn pilot_probes(
    model: &Model,
    count: usize,
    rng: &RngStream,
) -> Result<Vec<JointState>, CliError> {
    const GAP: usize = 10;
    if count < 1 {
        return Err(CliError::Usage("probes must be at least 1".into()));
    }
    let cond = model.conditionals();
    let mut out = Vec::with_capacity(count);
    walk(
        &model.initial_state(),
        count * GAP,
        &ScanStrategy::composition(),
        cond.as_ref(),
        rng,
        |i, s| {
            if i > 0 && i % GAP == 0 {
                out.push(s.clone());
            }
        },
    )?;
    Ok(out)
}

fn certificate_for(
    bounds: &MomentBounds,
    strategy: &ScanStrategy,
) -> Result<DriftCertificate, CliError> {
    match *strategy {
        ScanStrategy::Composition { x_first: true } => Ok(certificate_cgs(bounds)?),
        ScanStrategy::Composition { x_first: false } => Err(CliError::Usage(
            "drift certificates are stated for the x-first composition scan only".into(),
        )),
        ScanStrategy::RandomSequence { q } => Ok(certificate_rqgs(bounds, q)?),
        ScanStrategy::RandomScan { p } => Ok(certificate_rsgs(bounds, p)?),
    }
}

/// Monte Carlo check of each strategy's certificate, and optionally of the
/// composition-scan certificate transferred from it.
pub fn verify(cfg: &ExperimentConfig, opts: &VerifyOptions) -> Result<CommandOutput, CliError> {
    let model = cfg.build_model()?;
    let cond = model.conditionals();
    let contract = model.contract();
    let strategies = cfg.strategy_list()?;
    let probes = pilot_probes(&model, opts.probes, &family(cfg, PILOT))?;

    let mut certs = Vec::new();
    for s in &strategies {
        certs.push(certificate_for(&contract.bounds, s)?);
    }

    let mut reports: Vec<(String, VerificationReport)> = Vec::new();
    for cert in &certs {
        let name = format!("{}", cert.strategy);
        let rng = family(cfg, VERIFY).derive(strategy_label(&cert.strategy));
        let report = verify_drift(
            DriftTarget::Certificate(cert),
            cond.as_ref(),
            &contract,
            &probes,
            opts.mc_samples,
            &rng,
        )?;
        reports.push((name, report));
        if opts.transfer && cert.strategy.probability().is_some() {
            let transferred = transfer_from_certificate(cert)?;
            let report = verify_drift(
                DriftTarget::Transfer {
                    certificate: &transferred,
                    source: cert,
                },
                cond.as_ref(),
                &contract,
                &probes,
                opts.mc_samples,
                &rng.derive(1),
            )?;
            reports.push((format!("CGS from {}", cert.strategy), report));
        }
    }

    let mut doc = CsvDoc::new("verify-drift", &cfg.hash(), cfg.seed());
    doc.comment(format!(
        "probes={} mc_samples={}",
        probes.len(),
        opts.mc_samples
    ));
    let mut failing = Vec::new();
    for (name, r) in &reports {
        doc.comment(format!(
            "target=\"{name}\" lambda={} b={} pass_fraction={}",
            full(r.lambda),
            full(r.b),
            sig(r.pass_fraction, 6)
        ));
        if !r.all_pass() {
            failing.push(name.clone());
        }
    }
    doc.row([
        "target",
        "probe",
        "estimate",
        "std_error",
        "drift_value",
        "bound",
        "slack",
        "pass",
        "error",
    ])?;
    for (name, r) in &reports {
        for p in &r.probes {
            doc.row([
                name.clone(),
                p.index.to_string(),
                full(p.estimate),
                full(p.std_error),
                full(p.drift_value),
                full(p.bound),
                full(p.slack),
                p.pass.to_string(),
                p.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    Ok(CommandOutput {
        csv: doc.finish()?,
        failure: (!failing.is_empty())
            .then(|| format!("drift check failed for: {}", failing.join("; "))),
    })
}
