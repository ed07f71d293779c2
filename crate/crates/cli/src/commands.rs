use std::collections::HashSet;
use std::path::Path;

use rand::seq::index::sample;
use sparse_share::cluster::ClusterConfig;
use sparse_share::matmul::MmConfig;
use sparse_share::optimizer::sss_curve;
use sparse_share::sim::{campaign, gen_matrix, run_cluster_trial, run_mm_trial, LatencyKind, StragglerMode};
use sparse_share::sss::{deal as deal_shares, reconstruct as reconstruct_pair, share_from_text, share_to_text};
use sparse_share::{
    rng, shuffle, solve_pstar, FieldMatrix, FieldSpec, LatencyModel, PermTriple, ShareParams, SimResult, SourceModel,
    TrustedCollusion,
};

use crate::format::{csv_writer, num, opt_num, read, with_suffix, write};
use crate::{
    CampaignArgs, CliError, CurveArgs, DealArgs, GenArgs, LatencyArgs, LatencyChoice, PermuteArgs, PstarCurveArgs,
    ReconstructArgs, SolveOtpArgs, SolveSssArgs,
};

fn source(q: u32, s: f64) -> Result<SourceModel, CliError> {
    Ok(SourceModel::new(FieldSpec::from_q(q)?, s)?)
}

fn read_matrix(path: &Path) -> Result<FieldMatrix, CliError> {
    Ok(FieldMatrix::from_text(&read(path)?)?)
}

fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn solve_otp(args: SolveOtpArgs) -> Result<(), CliError> {
    let src = source(args.q, args.s)?;
    let r = sparse_share::solve_otp(&src, args.s_r, args.s_ar)?;
    let p = &r.params;
    let l = &r.leakage;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record([
        "q",
        "s",
        "s_r",
        "s_ar",
        "p1",
        "p2",
        "p3",
        "leak_r_qary",
        "leak_ar_qary",
        "leak_r_rel",
        "leak_ar_rel",
        "residual",
        "on_boundary",
    ])?;
    w.write_record([
        args.q.to_string(),
        num(args.s),
        num(args.s_r),
        num(args.s_ar),
        num(p.p1()),
        num(p.p2()),
        num(p.p3()),
        num(l.per_share[0]),
        num(l.per_share[1]),
        num(l.relative_per_share[0]),
        num(l.relative_per_share[1]),
        num(r.residual),
        r.on_boundary.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn solve_sss(args: SolveSssArgs) -> Result<(), CliError> {
    let src = source(args.q, args.s)?;
    let r = sparse_share::solve_sss(&src, args.s_d, args.n)?;
    let p = &r.params;
    let l = &r.leakage;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record([
        "q",
        "s",
        "n",
        "s_d",
        "ps",
        "p1",
        "leak_share_qary",
        "leak_share_rel",
        "leak_total_qary",
        "leak_total_rel",
        "residual",
        "on_boundary",
    ])?;
    w.write_record([
        args.q.to_string(),
        num(args.s),
        args.n.to_string(),
        num(args.s_d),
        num(p.ps()),
        num(p.p1()),
        num(l.per_share[0]),
        num(l.relative_per_share[0]),
        num(l.total),
        num(l.relative_total),
        num(r.residual),
        r.on_boundary.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// `min, min + step, ...` up to `max`, inclusive when `max` is on the grid.
fn grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !(min <= max) {
        return Err(CliError::Usage(format!("need sd-min <= sd-max and step > 0, got {min}, {max}, {step}")));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

pub fn curve(args: CurveArgs) -> Result<(), CliError> {
    let src = source(args.q, args.s)?;
    let sd = grid(args.sd_min, args.sd_max, args.step)?;
    let mut n_list = args.n_list.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let h = src.entry_entropy();
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["q", "s", "n", "s_d", "ps_star", "p1_star", "leak_rel", "leak_qary", "status"])?;
    for point in sss_curve(&src, &n_list, &sd) {
        let head = [point.q.to_string(), num(point.s), point.n.to_string(), num(point.s_d)];
        let tail = match &point.outcome {
            Ok((ps, p1, rel)) => [num(*ps), num(*p1), num(*rel), num(rel * h), "ok".to_string()],
            Err(msg) => [String::new(), String::new(), String::new(), String::new(), format!("infeasible: {msg}")],
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn pstar_curve(args: PstarCurveArgs) -> Result<(), CliError> {
    let src = source(args.q, args.s)?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["eps_rel", "z", "p_star"])?;
    for &eps in &args.eps_list {
        for z in 1..=args.n2 {
            let p = solve_pstar(&src, &TrustedCollusion { n2: args.n2, rho2: args.rho2, z }, eps)?;
            w.write_record([num(eps), z.to_string(), num(p)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn deal(args: DealArgs) -> Result<(), CliError> {
    let a = read_matrix(&args.input)?;
    let field = a.field().clone();
    let params = match args.s_d {
        None => ShareParams::uniform(field, args.n)?,
        Some(s_d) => {
            let src = SourceModel::new(field, args.s.unwrap_or_else(|| a.sparsity()))?;
            let r = sparse_share::solve_sss(&src, s_d, args.n)?;
            eprintln!(
                "s = {}, ps = {}, p1 = {}, leakage per share = {} q-ary symbols per entry ({} relative)",
                num(src.s()),
                num(r.params.ps()),
                num(r.params.p1()),
                num(r.leakage.per_share[0]),
                num(r.leakage.relative_per_share[0]),
            );
            r.params
        }
    };
    let set = deal_shares(&a, &params, args.seed)?;
    for (i, (share, &alpha)) in set.shares().iter().zip(set.alphas()).enumerate() {
        let path = with_suffix(&args.out, &format!("share{}", i + 1));
        write(&path, &share_to_text(share, alpha, i + 1, args.n))?;
    }
    Ok(())
}

pub fn reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let files = args
        .shares
        .iter()
        .map(|p| read(p).and_then(|t| share_from_text(&t).map_err(CliError::from)))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &files[0];
    let Some(second) = files.iter().find(|f| f.alpha != first.alpha) else {
        return Err(CliError::Recovery(format!(
            "need two shares with distinct evaluation points, got {} file(s) all at alpha {}",
            files.len(),
            first.alpha
        )));
    };
    let a = reconstruct_pair(&first.share, first.alpha, &second.share, second.alpha)?;
    write_text(args.out.as_deref(), &a.to_text())
}

fn parse_partial(spec: &str) -> Result<(usize, StragglerMode), CliError> {
    let bad = || CliError::Usage(format!("--partial expects worker:k, got `{spec}`"));
    let (w, k) = spec.split_once(':').ok_or_else(bad)?;
    let w = w.trim().parse().map_err(|_| bad())?;
    let completes = k.trim().parse().map_err(|_| bad())?;
    Ok((w, StragglerMode::Partial { completes }))
}

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    read(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn latency_model(args: &LatencyArgs) -> Result<LatencyModel, CliError> {
    let kind = match args.latency {
        LatencyChoice::Deterministic => LatencyKind::Deterministic { per_task: args.per_task },
        LatencyChoice::ShiftedExp => LatencyKind::ShiftedExponential { shift: args.shift, rate: args.rate },
        LatencyChoice::Table => {
            let path = args.table.as_deref().ok_or_else(|| CliError::Usage("--latency table needs --table".into()))?;
            LatencyKind::PerWorkerTable { times: read_table(path)? }
        }
    };
    let mut stragglers: Vec<_> = args.stragglers.iter().map(|&w| (w, StragglerMode::Full)).collect();
    for spec in &args.partial {
        stragglers.push(parse_partial(spec)?);
    }
    Ok(LatencyModel { kind, stragglers })
}

/// Per-trial latency: the fixed model plus `random_stragglers` full
/// stragglers drawn from the workers not already injected.
fn trial_latency(base: &LatencyModel, extra: usize, workers: usize, seed: u64) -> Result<LatencyModel, CliError> {
    if extra == 0 {
        return Ok(base.clone());
    }
    let taken: HashSet<usize> = base.stragglers.iter().map(|s| s.0).collect();
    let free: Vec<usize> = (0..workers).filter(|w| !taken.contains(w)).collect();
    if extra > free.len() {
        return Err(CliError::Usage(format!("{extra} random stragglers requested, only {} workers left", free.len())));
    }
    let mut r = rng::stream(seed, rng::domain::STRAGGLER, 0);
    let picked: Vec<usize> = sample(&mut r, free.len(), extra).into_iter().map(|i| free[i]).collect();
    Ok(base.clone().with_full_stragglers(&picked))
}

fn load_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    toml::from_str(&read(path)?).map_err(|source| CliError::Config { path: path.to_path_buf(), source })
}

fn write_campaign(out: Option<&Path>, results: &[SimResult], entry_entropy: f64) -> Result<(), CliError> {
    let mut w = csv_writer(out)?;
    w.write_record([
        "seed",
        "variant",
        "N",
        "sigma/rho",
        "recovered",
        "t_complete",
        "responses_used",
        "s_d_emp",
        "leak_emp",
        "leak_analytic",
        "leak_emp_qary",
        "leak_analytic_qary",
    ])?;
    for r in results {
        w.write_record([
            r.seed.to_string(),
            r.variant.clone(),
            r.workers.to_string(),
            r.tolerance.to_string(),
            r.recovered.to_string(),
            opt_num(r.t_complete),
            r.responses_used.to_string(),
            num(r.s_d_emp),
            num(r.leak_emp),
            num(r.leak_analytic),
            num(r.leak_emp * entry_entropy),
            num(r.leak_analytic * entry_entropy),
        ])?;
    }
    w.flush()?;
    let ok = results.iter().filter(|r| r.recovered).count();
    eprintln!("recovered {ok} of {} trials", results.len());
    Ok(())
}

fn seeds(args: &CampaignArgs, config_seed: Option<u64>) -> Vec<u64> {
    let base = args.seed.or(config_seed).unwrap_or(0);
    (0..args.trials).map(|i| base.wrapping_add(i)).collect()
}

pub fn mm_sim(args: CampaignArgs) -> Result<(), CliError> {
    let cfg: MmConfig = load_config(&args.config)?;
    let scheme = cfg.scheme()?;
    let field = scheme.field().clone();
    let src_a = SourceModel::new(field.clone(), cfg.s)?;
    let src_b = SourceModel::new(field, cfg.s_b.unwrap_or(cfg.s))?;
    let m = scheme.parts();
    let sizes = (cfg.rows.unwrap_or(4), cfg.inner.unwrap_or(2 * m), cfg.cols.unwrap_or(4));
    let base = latency_model(&args.latency)?;
    let extra = args.latency.random_stragglers;
    let seeds = seeds(&args, cfg.seed);
    for &s in &seeds {
        trial_latency(&base, extra, scheme.workers(), s)?;
    }
    let results = campaign(&seeds, |seed| {
        let lat = trial_latency(&base, extra, scheme.workers(), seed).expect("checked above");
        run_mm_trial(&scheme, &src_a, &src_b, &lat, sizes, seed)
    })?;
    write_campaign(args.out.as_deref(), &results, src_a.entry_entropy())
}

pub fn cluster_sim(args: CampaignArgs) -> Result<(), CliError> {
    let cfg: ClusterConfig = load_config(&args.config)?;
    let plan = cfg.plan()?;
    let src = cfg.source()?;
    let sizes = (cfg.rows.unwrap_or(2 * plan.n1() * plan.n2()), cfg.inner.unwrap_or(4), cfg.cols.unwrap_or(4));
    let base = latency_model(&args.latency)?;
    let extra = args.latency.random_stragglers;
    let workers = plan.n1() + plan.n2();
    let seeds = seeds(&args, cfg.seed);
    for &s in &seeds {
        trial_latency(&base, extra, workers, s)?;
    }
    let results = campaign(&seeds, |seed| {
        let lat = trial_latency(&base, extra, workers, seed).expect("checked above");
        run_cluster_trial(&plan, &src, &lat, sizes, seed)
    })?;
    write_campaign(args.out.as_deref(), &results, src.entry_entropy())
}

pub fn permute(args: PermuteArgs) -> Result<(), CliError> {
    match (&args.a, &args.b, &args.product, &args.perms) {
        (Some(a), Some(b), None, None) => {
            let (ap, bp, perms) = shuffle::shuffle_pair(&read_matrix(a)?, &read_matrix(b)?, args.seed)?;
            write(&with_suffix(&args.out, "a"), &ap.to_text())?;
            write(&with_suffix(&args.out, "b"), &bp.to_text())?;
            write(&with_suffix(&args.out, "perm"), &perms.to_text())
        }
        (None, None, Some(c), Some(p)) => {
            let perms = PermTriple::from_text(&read(p)?)?;
            let c = shuffle::unshuffle_product(&read_matrix(c)?, &perms)?;
            write(&args.out, &c.to_text())
        }
        _ => Err(CliError::Usage("give either --a and --b, or --product and --perms".into())),
    }
}

pub fn gen(args: GenArgs) -> Result<(), CliError> {
    let src = source(args.q, args.s)?;
    if args.rows == 0 || args.cols == 0 {
        return Err(CliError::Usage("rows and cols must be positive".into()));
    }
    let a = gen_matrix(&src, args.rows, args.cols, args.seed);
    write_text(args.out.as_deref(), &a.to_text())
}
