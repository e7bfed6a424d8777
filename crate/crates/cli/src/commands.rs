use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use wagesearch::decomposition::{
    calibrate_pareto, counterfactual_grid, estimated_offer_curve, standard_experiments, wage_curves, write_curve_csv,
    DecompositionReport,
};
use wagesearch::dist::DEFAULT_Q_MAX;
use wagesearch::equilibrium::solve_wage_offer_curve;
use wagesearch::estimation::report::{fit_record, param_rows, theta_from_record, write_param_table, KeyValues};
use wagesearch::estimation::{bootstrap_ci, mle_fit, prepare_sample};
use wagesearch::montecarlo::{replicate_seed, run_validation, SegmentValidation};
use wagesearch::rng::derive_seed;
use wagesearch::simulator::flow_sample_from;
use wagesearch::spell::{read_spells_file, write_spells};
use wagesearch::{EquilibriumSolution, ParetoProductivity, SegmentPair, SegmentParams, Spell, Theta};

use crate::config::RunConfig;
use crate::filter::Filter;
use crate::CliError;

/// Result of a command that completed without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    AcceptanceFailed,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&cfg.out).map_err(|source| CliError::Output { path: cfg.out.clone(), source })?;
    Ok(cfg.out.clone())
}

fn flatten(prefix: &str, v: &toml::Value, kv: &mut KeyValues) {
    match v {
        toml::Value::Table(t) => {
            for (k, x) in t {
                flatten(&format!("{prefix}.{k}"), x, kv);
            }
        }
        toml::Value::Array(a) if a.iter().all(|x| x.is_table()) && !a.is_empty() => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, kv);
            }
        }
        toml::Value::Array(a) => {
            let items: Vec<String> = a.iter().map(|x| x.as_str().map(str::to_string).unwrap_or(x.to_string())).collect();
            kv.insert(prefix, items.join(" "));
        }
        toml::Value::String(s) => kv.insert(prefix, s),
        other => kv.insert(prefix, other),
    }
}

/// Manifest skeleton: the command, the seed and every resolved setting.
fn manifest(command: &str, cfg: &RunConfig, source: Option<&Path>) -> KeyValues {
    let mut kv = KeyValues::default();
    kv.insert("command", command);
    kv.insert("version", env!("CARGO_PKG_VERSION"));
    kv.insert("seed", cfg.seed);
    kv.insert("config_file", source.map(|p| p.display().to_string()).unwrap_or_else(|| "<defaults>".into()));
    let value = toml::Value::try_from(cfg).expect("config serializes");
    flatten("config", &value, &mut kv);
    kv
}

fn write_manifest(dir: &Path, command: &str, kv: &KeyValues) -> Result<(), CliError> {
    let path = dir.join(format!("manifest_{command}.txt"));
    let mut w = create(&path)?;
    kv.write(&mut w)?;
    w.flush().map_err(|source| CliError::Output { path, source })
}

pub fn simulate(cfg: &RunConfig, source: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let mut kv = manifest("simulate", cfg, source);
    let design = cfg.simulate.design();
    for r in 0..cfg.simulate.replicates {
        kv.insert(format!("replicate.{r}.seed"), replicate_seed(cfg.seed, r));
    }
    for (j, (id, params)) in cfg.segment_params()?.iter().enumerate() {
        let eq = EquilibriumSolution::solve(params, &cfg.solver.settings())?;
        kv.insert(format!("segment.{id}.unemployment"), eq.unemployment);
        kv.insert(format!("segment.{id}.stream"), j);
        for r in 0..cfg.simulate.replicates {
            let spells = flow_sample_from(&eq, id, design, cfg.simulate.censor_horizon, replicate_seed(cfg.seed, r), j as u64);
            let name = format!("spells_{id}_{r:04}.csv");
            let mut w = create(&dir.join(&name))?;
            write_spells(&mut w, &spells)?;
            w.flush().map_err(|source| CliError::Output { path: dir.join(&name), source })?;
            kv.insert(format!("file.{id}.{r}"), name);
        }
    }
    write_manifest(&dir, "simulate", &kv)?;
    Ok(Outcome::Success)
}

fn fit_segment(cfg: &RunConfig, index: usize, id: &str, spells: &[Spell], kv: &mut KeyValues) -> Result<(KeyValues, Vec<wagesearch::estimation::report::ParamRow>), CliError> {
    let opts = cfg.estimate.fit_options();
    let mut fit = mle_fit(spells, &opts)?;
    if let Err(e) = fit.check_identified() {
        eprintln!("warning: segment {id}: {e}");
    }
    if cfg.estimate.bootstrap > 0 {
        let seed = derive_seed(cfg.seed, index as u64);
        kv.insert(format!("bootstrap.{id}.seed"), seed);
        let iv = bootstrap_ci(spells, &fit, cfg.estimate.bootstrap, seed, &opts)?;
        if iv.flagged {
            eprintln!("warning: segment {id}: {} of {} bootstrap refits failed", iv.failures, iv.replicates);
        }
        fit.intervals = Some(iv);
    }
    let mut record = fit_record(id, &fit);
    if cfg.estimate.calibrate {
        let prepared = prepare_sample(spells, &opts)?;
        let fr = wagesearch::FrictionParams::new(fit.theta.lambda, fit.theta.delta)?;
        let h = wagesearch::ReservationWageDist::new(fit.theta.mu, fit.theta.sigma)?;
        let (p, w) = estimated_offer_curve(&fr, &h, &prepared.density.grid, &prepared.density.density)?;
        match calibrate_pareto(&p, &w, fr, h, &cfg.calibration_options()) {
            Ok(cal) => {
                record.insert("p_min", cal.p_min);
                record.insert("alpha", cal.alpha);
                record.insert("calibration.objective", cal.objective);
            }
            Err(e) => {
                eprintln!("warning: segment {id}: productivity calibration failed: {e}");
                record.insert("calibration.error", e);
            }
        }
    }
    Ok((record, param_rows(id, &fit)))
}

pub fn estimate(cfg: &RunConfig, source: Option<&Path>, inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("estimate needs at least one spell file".into()));
    }
    let filter = cfg.estimate.filter.as_deref().map(str::parse::<Filter>).transpose()?;
    let dir = out_dir(cfg)?;
    let mut kv = manifest("estimate", cfg, source);
    let mut spells = Vec::new();
    for (i, p) in inputs.iter().enumerate() {
        let read = read_spells_file(p).map_err(|e| CliError::Input { path: p.clone(), source: e })?;
        kv.insert(format!("input.{i}"), p.display());
        kv.insert(format!("input.{i}.spells"), read.len());
        spells.extend(read);
    }
    let total = spells.len();
    if let Some(f) = &filter {
        spells = f.apply(spells);
    }
    kv.insert("spells.read", total);
    kv.insert("spells.kept", spells.len());
    let mut by_segment: BTreeMap<String, Vec<Spell>> = BTreeMap::new();
    for s in spells {
        by_segment.entry(s.segment_id.clone()).or_default().push(s);
    }
    if by_segment.is_empty() {
        return Err(wagesearch::Error::Identification("no spells left to estimate".into()).into());
    }
    let mut rows = Vec::new();
    for (j, (id, seg)) in by_segment.iter().enumerate() {
        let (record, r) = fit_segment(cfg, j, id, seg, &mut kv)?;
        let name = format!("fit_{id}.txt");
        let mut w = create(&dir.join(&name))?;
        record.write(&mut w)?;
        w.flush().map_err(|source| CliError::Output { path: dir.join(&name), source })?;
        kv.insert(format!("file.fit.{id}"), name);
        rows.extend(r);
    }
    let mut w = create(&dir.join("params.csv"))?;
    write_param_table(&rows, &mut w)?;
    kv.insert("file.params", "params.csv");
    write_manifest(&dir, "estimate", &kv)?;
    print!("{}", param_text(&rows));
    Ok(Outcome::Success)
}

fn param_text(rows: &[wagesearch::estimation::report::ParamRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let _ = write!(s, "{:<8} {:<7} {:>11.5}", r.segment, r.parameter, r.estimate);
        if let Some(iv) = r.interval {
            let _ = write!(s, "  [{:.5}, {:.5}]", iv.lo, iv.hi);
        }
        s.push('\n');
    }
    s
}

/// Segment recovered from a fit record with a calibrated productivity law.
pub fn params_from_record(path: &Path) -> Result<(String, SegmentParams), CliError> {
    let file = File::open(path).map_err(|e| CliError::Input { path: path.into(), source: e.into() })?;
    let kv = KeyValues::read(file).map_err(|e| CliError::Input { path: path.into(), source: e })?;
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let theta: Theta = theta_from_record(&kv).map_err(|e| bad(e.to_string()))?;
    let (Ok(p_min), Ok(alpha)) = (kv.get_f64("p_min"), kv.get_f64("alpha")) else {
        return Err(bad("fit record has no calibrated p_min/alpha".into()));
    };
    let prod = ParetoProductivity::with_truncation(p_min, alpha, DEFAULT_Q_MAX)?;
    let params = SegmentParams::new(theta.lambda, theta.delta, theta.mu, theta.sigma, Some(prod))?;
    let id = kv.get("segment").unwrap_or("?").to_string();
    Ok((id, params))
}

fn configured_pair(cfg: &RunConfig) -> Result<((String, SegmentParams), (String, SegmentParams)), CliError> {
    if !cfg.decompose.fits.is_empty() {
        let fits = &cfg.decompose.fits;
        return Ok((params_from_record(&fits[0])?, params_from_record(&fits[1])?));
    }
    let segs = cfg.segment_params()?;
    let pick = |want: &Option<String>, default: usize| -> Result<(String, SegmentParams), CliError> {
        match want {
            Some(id) => Ok(segs.iter().find(|s| &s.0 == id).cloned().expect("checked at load")),
            None => segs
                .get(default)
                .cloned()
                .ok_or_else(|| CliError::Config("decompose needs two segments".into())),
        }
    };
    Ok((pick(&cfg.decompose.reference, 0)?, pick(&cfg.decompose.comparison, 1)?))
}

fn grid_text(reference: &str, comparison: &str, grid: &DecompositionReport, estimated: Option<&DecompositionReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Decomposition (reference {reference}, comparison {comparison})");
    let _ = write!(s, "{:>4}  {:<30} {:<34} {:>12} {:>10}", "row", "equalized", "remaining", "differential", "effect");
    if estimated.is_some() {
        let _ = write!(s, " {:>12} {:>10}", "est. diff.", "est. eff.");
    }
    s.push('\n');
    let names = |p: &[wagesearch::Param]| p.iter().map(|x| x.name()).collect::<Vec<_>>().join(",");
    for row in &grid.rows {
        let diff = row.reported_differential().map(|d| format!("{d:.3}")).unwrap_or_default();
        let _ = write!(
            s,
            "{:>4}  {:<30} {:<34} {:>12} {:>10.3}",
            format!("({})", row.spec.id),
            names(&row.spec.equalized),
            names(&row.spec.remaining()),
            diff,
            row.migrant_effect
        );
        if let Some(e) = estimated.and_then(|g| g.row(row.spec.id)) {
            let d = e.reported_differential().map(|d| format!("{d:.3}")).unwrap_or_default();
            let _ = write!(s, " {:>12} {:>10.3}", d, e.migrant_effect);
        }
        s.push('\n');
    }
    s
}

pub fn decompose(cfg: &RunConfig, source: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let mut kv = manifest("decompose", cfg, source);
    let ((rid, reference), (cid, comparison)) = configured_pair(cfg)?;
    let pair = SegmentPair::new(reference, comparison)?;
    let settings = cfg.solver.settings();
    let grid = counterfactual_grid(&pair, &settings)?;
    grid.write_csv_file(&dir.join("decomposition.csv"))?;
    kv.insert("reference", &rid);
    kv.insert("comparison", &cid);
    kv.insert("file.grid", "decomposition.csv");
    let r = solve_wage_offer_curve(&pair.reference, &settings)?;
    for spec in standard_experiments() {
        let c = solve_wage_offer_curve(&spec.apply(&pair.reference, &pair.comparison)?, &settings)?;
        let pts = wage_curves(&r, &c, cfg.decompose.curve_points)?;
        let name = format!("curves_{:02}.csv", spec.id);
        let mut w = create(&dir.join(&name))?;
        write_curve_csv(&pts, &mut w)?;
        kv.insert(format!("file.curves.{}", spec.id), name);
    }
    write_manifest(&dir, "decompose", &kv)?;
    print!("{}", grid_text(&rid, &cid, &grid, None));
    Ok(Outcome::Success)
}

/// Rows of the replicate summary laid out with one column per parameter.
fn validation_text(v: &SegmentValidation, replicates: usize, sample_size: usize) -> String {
    let rows = v.summary();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Segment {} ({} replicates x {} spells, {} failed)",
        v.segment_id,
        replicates,
        sample_size,
        v.failures.len()
    );
    let _ = write!(s, "{:<12}", "");
    for r in &rows {
        let _ = write!(s, "{:>11}", r.name);
    }
    s.push('\n');
    let lines: [(&str, fn(&wagesearch::montecarlo::ParamSummary) -> f64); 5] = [
        ("True Value", |r| r.truth),
        ("Mean", |r| r.mean),
        ("Median", |r| r.median),
        ("2.5 perc.", |r| r.p2_5),
        ("97.5 perc.", |r| r.p97_5),
    ];
    for (label, f) in lines {
        let _ = write!(s, "{label:<12}");
        for r in &rows {
            let _ = write!(s, "{:>11.4}", f(r));
        }
        s.push('\n');
    }
    s
}

fn write_validation_csv(path: &Path, results: &[SegmentValidation]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |source| CliError::Output { path: path.to_path_buf(), source };
    writeln!(w, "segment,parameter,truth,mean,median,p2_5,p97_5,covered").map_err(io)?;
    for v in results {
        for r in v.summary() {
            writeln!(w, "{},{},{},{},{},{},{},{}", v.segment_id, r.name, r.truth, r.mean, r.median, r.p2_5, r.p97_5, r.covers_truth() as u8)
                .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn write_replicates_csv(path: &Path, results: &[SegmentValidation]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let io = |source| CliError::Output { path: path.to_path_buf(), source };
    writeln!(w, "segment,replicate,lambda,delta,mu,sigma,u,loglik").map_err(io)?;
    for v in results {
        for e in &v.estimates {
            let t = e.theta;
            writeln!(w, "{},{},{},{},{},{},{},{}", v.segment_id, e.replicate, t.lambda, t.delta, t.mu, t.sigma, e.unemployment, e.loglik)
                .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Mean estimate of `θ` with the true productivity law.
fn mean_params(v: &SegmentValidation, truth: &SegmentParams) -> Option<SegmentParams> {
    let mean = |n: &str| v.param(n).map(|r| r.mean).filter(|m| m.is_finite());
    SegmentParams::new(mean("lambda")?, mean("delta")?, mean("mu")?, mean("sigma")?, truth.productivity).ok()
}

pub fn validate(cfg: &RunConfig, source: Option<&Path>) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let mut kv = manifest("validate", cfg, source);
    let opts = cfg.validation_options();
    let segments = cfg.segment_params()?;
    for r in 0..opts.replicates {
        kv.insert(format!("replicate.{r}.seed"), replicate_seed(cfg.seed, r));
    }
    let mut out = String::new();
    let mut ok = true;
    let mut results = Vec::new();
    if opts.replicates > 0 {
        results = run_validation(&segments, &opts)?;
        let (mut covered, mut total) = (0, 0);
        for v in &results {
            out.push_str(&validation_text(v, opts.replicates, opts.sample_size));
            out.push('\n');
            covered += v.covered();
            total += 4;
            ok &= v.failures.len() * 10 <= opts.replicates;
            kv.insert(format!("segment.{}.failures", v.segment_id), v.failures.len());
            kv.insert(format!("segment.{}.covered", v.segment_id), v.covered());
        }
        // at most one structural parameter may fall outside its band
        ok &= covered + 1 >= total;
        let _ = writeln!(out, "Coverage: {covered} of {total} true values inside the replicate 2.5-97.5 bands");
        write_validation_csv(&dir.join("validation.csv"), &results)?;
        write_replicates_csv(&dir.join("replicates.csv"), &results)?;
        kv.insert("file.summary", "validation.csv");
        kv.insert("file.replicates", "replicates.csv");
        kv.insert("acceptance", if ok { "pass" } else { "fail" });
        out.push('\n');
    }
    let with_law: Vec<usize> = (0..segments.len()).filter(|&i| segments[i].1.productivity.is_some()).collect();
    if with_law.len() >= 2 {
        let (a, b) = (with_law[0], with_law[1]);
        let pair = SegmentPair::new(segments[a].1, segments[b].1)?;
        let grid = counterfactual_grid(&pair, &opts.solver)?;
        let estimated = match (results.get(a), results.get(b)) {
            (Some(va), Some(vb)) => match (mean_params(va, &segments[a].1), mean_params(vb, &segments[b].1)) {
                (Some(pa), Some(pb)) => SegmentPair::new(pa, pb).ok().and_then(|p| counterfactual_grid(&p, &opts.solver).ok()),
                _ => None,
            },
            _ => None,
        };
        out.push_str(&grid_text(&segments[a].0, &segments[b].0, &grid, estimated.as_ref()));
        grid.write_csv_file(&dir.join("decomposition.csv"))?;
        kv.insert("file.grid", "decomposition.csv");
    }
    write_manifest(&dir, "validate", &kv)?;
    print!("{out}");
    Ok(if ok { Outcome::Success } else { Outcome::AcceptanceFailed })
}
