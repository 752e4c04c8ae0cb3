use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use lplsh_core::dataset::{read_dataset, write_dataset, DatasetFormat};
use lplsh_core::index::auto_k_l;
use lplsh_core::lab::{write_rho_csv, SweepConfig, RHO_TRIAL_BUDGET};
use lplsh_core::rng::{derive_seed, seeded};
use lplsh_core::scheme::measure_evaluation_cost;
use lplsh_core::stable::{export_thresholds, preload_thresholds};
use lplsh_core::verify::{run_all, run_suite, Level, Suite, VerifyReport};
use lplsh_core::{
    derive_params, generate_planted, linear_scan_nn, load_index, rho_sweep, save_index, scale_to_unit, success_bound,
    Dataset, Error, IndexParams, LpSpace, LshIndex, PlantedConfig, SchemeConfig, SchemeParams, ThresholdCache,
};
use serde::Serialize;

use crate::config::Settings;
use crate::{BenchArgs, BuildArgs, CliError, GenArgs, QueryArgs, RhoArgs, SchemeArgs, VerifyArgs};

type Res<T> = std::result::Result<T, CliError>;

const VERSION: &str = env!("CARGO_PKG_VERSION");
const AUTO_TAG: u64 = 0x6175_746f;
const COST_TAG: u64 = 0x636f_7374;

fn path_arg(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

/// Banner, effective settings and derived values, one per line.
fn metadata(cmd: &str, s: &Settings, derived: &[(String, String)]) -> Vec<String> {
    let mut lines = vec![format!("lplsh {VERSION} {cmd}")];
    lines.extend(s.effective().iter().map(|(k, v)| format!("{k} = {v}")));
    lines.extend(derived.iter().map(|(k, v)| derived_line(k, v)));
    lines
}

/// Prints the effective config so that the non-comment lines can be fed
/// back through `--config`.
fn echo(cmd: &str, s: &Settings, derived: &[(String, String)]) {
    println!("# lplsh {VERSION} {cmd}");
    for (k, v) in s.effective() {
        println!("{k} = {v}");
    }
    for (k, v) in derived {
        println!("# {}", derived_line(k, v));
    }
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_lines(path: &Path, lines: &[String]) -> Res<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes a dataset; fvecs files get their metadata in `<path>.meta`.
fn save_dataset(path: &Path, data: &Dataset, meta: &[String]) -> Res<()> {
    write_dataset(path, data, meta)?;
    if DatasetFormat::from_path(path)? == DatasetFormat::Fvecs {
        write_lines(&sidecar(path, ".meta"), meta)?;
    }
    Ok(())
}

/// Attaches the path to core I/O errors.
fn at(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Io(err) => CliError::io(path, err),
        other => CliError::Core(other),
    }
}

fn create(path: &Path) -> Res<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?))
}

fn csv_writer(path: &Path, meta: &[String]) -> Res<csv::Writer<BufWriter<File>>> {
    let mut out = create(path)?;
    for line in meta {
        writeln!(out, "# {line}").map_err(|e| CliError::io(path, e))?;
    }
    Ok(csv::Writer::from_writer(out))
}

fn csv_fail(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Format(format!("{}: {e}", path.display()))
}

fn scheme_config(s: &mut Settings, a: &SchemeArgs, c: f64) -> Res<SchemeConfig> {
    let p = s.get("p", a.p, 1.5)?;
    let mut cfg = SchemeConfig::new(c, p);
    let profile: String = s.get("profile", a.profile.clone(), "main".to_string())?;
    cfg.profile = profile.parse()?;
    cfg.knobs.kappa_w = s.get("kappa_w", a.kappa_w, cfg.knobs.kappa_w)?;
    cfg.knobs.kappa_t = s.get("kappa_t", a.kappa_t, cfg.knobs.kappa_t)?;
    cfg.knobs.kappa_eps = s.get("kappa_eps", a.kappa_eps, cfg.knobs.kappa_eps)?;
    cfg.overrides.w = s.opt("w", a.w)?;
    cfg.overrides.t = s.opt("t", a.t)?;
    cfg.overrides.epsilon = s.opt("eps", a.eps)?;
    cfg.overrides.failure_prob = s.opt("delta", a.delta)?;
    cfg.overrides.num_shifts = s.opt("num_shifts", a.num_shifts)?;
    cfg.overrides.threshold = s.opt("threshold", a.threshold)?;
    cfg.spacing = s.get("spacing", a.spacing, cfg.spacing)?;
    cfg.shift_cap = s.get("shift_cap", a.shift_cap, cfg.shift_cap)?;
    cfg.threshold_samples = s.get("threshold_samples", a.threshold_samples, cfg.threshold_samples)?;
    cfg.threshold_seed = s.get("threshold_seed", a.threshold_seed, cfg.threshold_seed)?;
    Ok(cfg)
}

/// Derives the scheme, reusing and then refreshing a threshold cache file.
fn derive_cached(cfg: &SchemeConfig, cache: Option<&Path>) -> Res<SchemeParams> {
    if let Some(path) = cache.filter(|p| p.exists()) {
        preload_thresholds(&ThresholdCache::load(path)?);
    }
    let scheme = derive_params(cfg)?;
    if let Some(path) = cache {
        let mut all = ThresholdCache::default();
        export_thresholds(&mut all);
        all.save(path)?;
    }
    Ok(scheme)
}

fn default_companion(out: &Path, tag: &str, ext: Option<&str>) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = ext
        .map(str::to_string)
        .or_else(|| out.extension().map(|e| e.to_string_lossy().into_owned()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{tag}.{ext}"))
}

pub fn gen(a: GenArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let defaults = PlantedConfig::default();
    let cfg = PlantedConfig {
        n: s.get("n", a.n, defaults.n)?,
        d: s.get("d", a.d, defaults.d)?,
        p: s.get("p", a.p, defaults.p)?,
        r: s.get("r", a.r, defaults.r)?,
        c: s.get("c", a.c, defaults.c)?,
        planted_count: s.get("planted_count", a.planted_count, defaults.planted_count)?,
        spread: s.get("spread", a.spread, defaults.spread)?,
        max_attempts: s.get("max_attempts", a.max_attempts, defaults.max_attempts)?,
        seed: s.require("seed", a.seed)?,
    };
    let out = PathBuf::from(s.require::<String>("out", path_arg(a.out))?);
    let queries_default = default_companion(&out, "queries", None).display().to_string();
    let queries = PathBuf::from(s.get("queries", path_arg(a.queries), queries_default)?);
    let truth_default = default_companion(&out, "truth", Some("csv")).display().to_string();
    let truth = PathBuf::from(s.get("truth", path_arg(a.truth), truth_default)?);
    s.finish()?;
    echo("gen", &s, &[]);

    let inst = generate_planted(&cfg)?;
    let meta = metadata("gen", &s, &[]);
    save_dataset(&out, &inst.data, &meta)?;
    save_dataset(&queries, &inst.queries, &meta)?;
    let mut w = csv_writer(&truth, &meta)?;
    w.write_record(["query", "id"]).map_err(csv_fail(&truth))?;
    for (j, id) in inst.truth.iter().enumerate() {
        w.write_record([j.to_string(), id.to_string()]).map_err(csv_fail(&truth))?;
    }
    w.flush().map_err(|e| CliError::io(&truth, e))?;

    // Re-check the instance as written, after any f32 rounding.
    let data = read_dataset(&out).map_err(at(&out))?;
    let qs = read_dataset(&queries).map_err(at(&queries))?;
    let space = LpSpace::new(cfg.p, cfg.d)?;
    let far = cfg.c * cfg.r;
    let mut bad = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for (j, (_, q)) in qs.iter().enumerate() {
        let near: Vec<u64> = data
            .iter()
            .filter(|(_, x)| space.distance(x, q).is_ok_and(|dist| dist < far))
            .map(|(id, _)| id)
            .collect();
        if near != [inst.truth[j]] {
            bad.push(j);
        }
        let (_, nn) = linear_scan_nn(&data, q, &space)?;
        worst_gap = worst_gap.max((nn - cfg.r).abs());
    }
    println!(
        "wrote {} points, {} queries; planted distance error {worst_gap:.3e}",
        data.len(),
        qs.len()
    );
    if !bad.is_empty() {
        return Err(CliError::Contract(format!(
            "{} queries do not have exactly their planted neighbor within c*r (first: query {})",
            bad.len(),
            bad[0]
        )));
    }
    println!("verified: each query has exactly its planted neighbor within c*r = {far}");
    Ok(())
}

fn parse_count(key: &str, v: &str) -> Res<Option<usize>> {
    if v == "auto" {
        return Ok(None);
    }
    v.parse()
        .map(Some)
        .map_err(|_| CliError::Usage(format!("{key} must be a positive integer or \"auto\", got {v:?}")))
}

pub fn build(a: BuildArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let input = PathBuf::from(s.require::<String>("input", path_arg(a.input))?);
    let out = PathBuf::from(s.require::<String>("out", path_arg(a.out))?);
    let r = s.get("r", a.r, 1.0)?;
    let c = s.get("c", a.c, 2.0)?;
    let cfg = scheme_config(&mut s, &a.scheme, c)?;
    let k = parse_count("k", &s.get("k", a.k, "auto".to_string())?)?;
    let l = parse_count("l", &s.get("l", a.l, "auto".to_string())?)?;
    let safety = s.get("safety", a.safety, 3.0)?;
    let auto_trials = s.get("auto_trials", a.auto_trials, 200_000)?;
    let auto_budget = s.get("auto_budget", a.auto_budget, RHO_TRIAL_BUDGET)?;
    let max_candidates = s.opt("max_candidates", a.max_candidates)?;
    let cost_samples = s.get("cost_samples", a.cost_samples, 1000)?;
    let seed = s.require("seed", a.seed)?;
    s.finish()?;
    if k.is_none() && l.is_some() {
        return Err(CliError::Usage("k = auto needs l = auto".into()));
    }

    let data = read_dataset(&input).map_err(at(&input))?;
    let scheme = derive_cached(&cfg, Some(&sidecar(&out, ".thresholds")))?;
    let mut derived = scheme.describe();
    let d = data.dim();
    let (k, l) = match (k, l) {
        (Some(k), Some(l)) => (k, l),
        _ => {
            let auto = auto_k_l(&scheme, d, data.len(), safety, auto_trials, auto_budget, derive_seed(seed, AUTO_TAG))?;
            let est = &auto.estimate;
            derived.push(("p1_hat".into(), format!("{:?}", est.p1.p_hat)));
            derived.push(("p2_hat".into(), format!("{:?}", est.p2.p_hat)));
            derived.push(("rho_hat".into(), format!("{:?}", est.rho_hat)));
            let k = k.unwrap_or(auto.k);
            let l = if k == auto.k {
                auto.l
            } else {
                (safety / est.p1.p_hat.powi(k as i32)).ceil() as usize
            };
            derived.push((
                "predicted_success".into(),
                format!("{:?}", success_bound(est.p1.p_hat, k, l)),
            ));
            (k, l)
        }
    };
    derived.push(("k".into(), k.to_string()));
    derived.push(("L".into(), l.to_string()));
    echo("build", &s, &derived);

    let scaled = scale_to_unit(&data, r)?;
    let start = Instant::now();
    let mut index = LshIndex::build(
        &scaled,
        &scheme,
        IndexParams {
            max_candidates,
            ..IndexParams::new(k, l, seed)
        },
    )?;
    let build_seconds = start.elapsed().as_secs_f64();
    index.set_radius(r);
    index.set_metadata(metadata("build", &s, &derived).join("\n"));
    save_index(&index, &out)?;

    let cost = measure_evaluation_cost(&scheme, d, cost_samples, &mut seeded(derive_seed(seed, COST_TAG)))?;
    println!("built {} points into {l} tables of {k} hashes in {build_seconds:.1} s", data.len());
    println!(
        "evaluation cost: {} projection multiply-adds, at most {} lattice probes",
        cost.projection_flops, cost.lattice_probes
    );
    if let (Some(probes), Some(fallback)) = (cost.measured_probes, cost.measured_fallback) {
        println!("measured over {cost_samples} evaluations: mean probes {probes:.1}, fallback rate {fallback:.4}");
    }
    println!("saved {}", out.display());
    Ok(())
}

struct Loaded {
    index: LshIndex,
    queries: Dataset,
    truth: Option<BTreeMap<usize, u64>>,
}

fn read_truth(path: &Path) -> Res<BTreeMap<usize, u64>> {
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_fail(path))?;
    let mut map = BTreeMap::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_fail(path))?;
        let field = |i: usize| -> Res<u64> {
            rec.get(i)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| CliError::Format(format!("{}: bad ground-truth row {rec:?}", path.display())))
        };
        map.insert(field(0)? as usize, field(1)?);
    }
    Ok(map)
}

fn load_for_queries(s: &mut Settings, index: Option<PathBuf>, queries: Option<PathBuf>, truth: Option<PathBuf>, max_candidates: Option<usize>) -> Res<Loaded> {
    let index_path = PathBuf::from(s.require::<String>("index", path_arg(index))?);
    let queries_path = PathBuf::from(s.require::<String>("queries", path_arg(queries))?);
    let truth_path = s.opt::<String>("truth", path_arg(truth))?.map(PathBuf::from);
    let max_candidates = s.opt("max_candidates", max_candidates)?;
    let mut index = load_index(&index_path).map_err(at(&index_path))?;
    if max_candidates.is_some() {
        index.set_max_candidates(max_candidates);
    }
    let queries = read_dataset(&queries_path).map_err(at(&queries_path))?;
    if !queries.is_empty() && queries.dim() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            found: queries.dim(),
        }
        .into());
    }
    let truth = truth_path.as_deref().map(read_truth).transpose()?;
    Ok(Loaded { index, queries, truth })
}

/// The stored build metadata, one `index | …` line each.
fn index_lines(index: &LshIndex) -> Vec<(String, String)> {
    index
        .metadata()
        .lines()
        .map(|l| ("index |".to_string(), l.to_string()))
        .collect()
}

fn derived_line(k: &str, v: &str) -> String {
    if k.ends_with('|') {
        format!("{k} {v}")
    } else {
        format!("derived {k} = {v}")
    }
}

pub fn query(a: QueryArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let out = s.opt::<String>("out", path_arg(a.out))?.map(PathBuf::from);
    let Loaded { index, queries, truth } = load_for_queries(&mut s, a.index, a.queries, a.truth, a.max_candidates)?;
    s.finish()?;
    let derived = index_lines(&index);
    echo("query", &s, &derived);

    let r = index.radius();
    let mut rows = Vec::with_capacity(queries.len());
    let (mut in_contract, mut matched, mut candidates) = (0usize, 0usize, 0usize);
    for (j, (_, q)) in queries.iter().enumerate() {
        let unit: Vec<f64> = q.iter().map(|v| v / r).collect();
        let res = index.query(&unit)?;
        candidates += res.candidates_examined;
        let (id, dist, ok) = match res.answer {
            Some(ans) => (ans.id.to_string(), format!("{:?}", ans.distance * r), ans.in_contract),
            None => (String::new(), String::new(), false),
        };
        in_contract += ok as usize;
        if let (Some(t), Some(ans)) = (&truth, res.answer) {
            matched += (t.get(&j) == Some(&ans.id) && ans.in_contract) as usize;
        }
        rows.push([
            j.to_string(),
            id,
            dist,
            ok.to_string(),
            res.candidates_examined.to_string(),
            res.tables_probed.to_string(),
        ]);
    }
    if let Some(out) = &out {
        let mut w = csv_writer(out, &metadata("query", &s, &derived))?;
        w.write_record(["query", "id", "distance", "in_contract", "candidates_examined", "tables_probed"])
            .map_err(csv_fail(out))?;
        for row in &rows {
            w.write_record(row).map_err(csv_fail(out))?;
        }
        w.flush().map_err(|e| CliError::io(out, e))?;
    } else {
        println!("query,id,distance,in_contract,candidates_examined,tables_probed");
        for row in &rows {
            println!("{}", row.join(","));
        }
    }
    let nq = queries.len().max(1) as f64;
    println!(
        "queries {}: within c*r {:.4}, mean candidates {:.1}",
        queries.len(),
        in_contract as f64 / nq,
        candidates as f64 / nq
    );
    if let Some(t) = &truth {
        println!("success rate vs ground truth: {:.4} ({matched}/{})", matched as f64 / nq, t.len());
    }
    Ok(())
}

pub fn bench(a: BenchArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let out = s.opt::<String>("out", path_arg(a.out))?.map(PathBuf::from);
    let Loaded { index, queries, truth } = load_for_queries(&mut s, a.index, a.queries, a.truth, a.max_candidates)?;
    s.finish()?;
    let derived = index_lines(&index);
    echo("bench", &s, &derived);
    if queries.is_empty() {
        println!("no queries");
        return Ok(());
    }

    let r = index.radius();
    let space = LpSpace::new(index.scheme().p, index.dim())?;
    let (mut lsh_time, mut scan_time) = (0.0, 0.0);
    let (mut candidates, mut exact, mut in_contract, mut matched) = (0usize, 0usize, 0usize, 0usize);
    let mut ratio_sum = 0.0;
    let mut answered = 0usize;
    for (j, (_, q)) in queries.iter().enumerate() {
        let unit: Vec<f64> = q.iter().map(|v| v / r).collect();
        let t0 = Instant::now();
        let res = index.query(&unit)?;
        lsh_time += t0.elapsed().as_secs_f64();
        let t0 = Instant::now();
        let (nn_id, nn) = linear_scan_nn(index.data(), &unit, &space)?;
        scan_time += t0.elapsed().as_secs_f64();
        candidates += res.candidates_examined;
        if let Some(ans) = res.answer {
            answered += 1;
            exact += (ans.id == nn_id) as usize;
            in_contract += ans.in_contract as usize;
            ratio_sum += if nn > 0.0 { ans.distance / nn } else { 1.0 };
            if let Some(t) = &truth {
                matched += (t.get(&j) == Some(&ans.id) && ans.in_contract) as usize;
            }
        }
    }
    let nq = queries.len() as f64;
    let mut summary: Vec<(&str, String)> = vec![
        ("queries", queries.len().to_string()),
        ("lsh_us_per_query", format!("{:.3}", 1e6 * lsh_time / nq)),
        ("scan_us_per_query", format!("{:.3}", 1e6 * scan_time / nq)),
        ("speedup", format!("{:.3}", scan_time / lsh_time.max(1e-12))),
        ("mean_candidates", format!("{:.3}", candidates as f64 / nq)),
        ("exact_nn_rate", format!("{:.4}", exact as f64 / nq)),
        ("in_contract_rate", format!("{:.4}", in_contract as f64 / nq)),
        ("mean_distance_ratio", format!("{:.4}", ratio_sum / answered.max(1) as f64)),
    ];
    if truth.is_some() {
        summary.push(("truth_success_rate", format!("{:.4}", matched as f64 / nq)));
    }
    for (k, v) in &summary {
        println!("{k} = {v}");
    }
    if let Some(out) = &out {
        let mut w = csv_writer(out, &metadata("bench", &s, &derived))?;
        w.write_record(summary.iter().map(|(k, _)| *k)).map_err(csv_fail(out))?;
        w.write_record(summary.iter().map(|(_, v)| v.as_str())).map_err(csv_fail(out))?;
        w.flush().map_err(|e| CliError::io(out, e))?;
    }
    Ok(())
}

fn parse_c_list(v: &str) -> Res<Vec<f64>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad value {x:?} in c_list")))
        })
        .collect()
}

pub fn rho(a: RhoArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let c_list = parse_c_list(&s.get("c_list", a.c_list, "2,3,5".to_string())?)?;
    let template = scheme_config(&mut s, &a.scheme, 2.0)?;
    let d = s.get("d", a.d, 8)?;
    let trials = s.get("trials", a.trials, 100_000)?;
    let budget = s.get("budget", a.budget, RHO_TRIAL_BUDGET)?;
    let check_trials = s.get("check_trials", a.check_trials, 10_000)?;
    let cache = s.opt::<String>("threshold_cache", path_arg(a.threshold_cache))?.map(PathBuf::from);
    let seed = s.require("seed", a.seed)?;
    let out = PathBuf::from(s.require::<String>("out", path_arg(a.out))?);
    s.finish()?;
    echo("rho", &s, &[]);

    // Warm the threshold cache for every row before the sweep.
    for &c in &c_list {
        if c > 1.0 {
            derive_cached(&SchemeConfig { c, ..template.clone() }, cache.as_deref())?;
        }
    }
    let reports = rho_sweep(
        &SweepConfig {
            scheme: template,
            d,
            trials,
            budget,
            check_trials,
            seed,
        },
        &c_list,
    )?;
    let mut meta = metadata("rho", &s, &[]);
    for r in &reports {
        if let Some(chk) = &r.cross_check {
            meta.push(format!(
                "cross-check c = {:?}: pipeline {:.5} vs geometric {:.5} at projected distance {:.4} (z = {:.2})",
                r.c, chk.pipeline.p_hat, chk.geometric.value, chk.projected_distance, chk.z
            ));
        }
    }
    write_rho_csv(create(&out)?, &reports, &meta)?;
    println!("c,t,U,p1_hat,p2_hat,rho_hat,rho_lo,rho_hi,inv_c");
    for r in &reports {
        println!(
            "{},{},{},{:.5},{:.5},{:.4},{:.4},{:.4},{:.4}",
            r.c, r.scheme.t, r.scheme.lattice.num_shifts, r.p1.p_hat, r.p2.p_hat, r.rho_hat, r.rho_ci.0, r.rho_ci.1, r.baseline_inv_c
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    tool: &'static str,
    version: &'static str,
    #[serde(flatten)]
    report: &'a VerifyReport,
}

pub fn verify(a: VerifyArgs) -> Res<()> {
    let mut s = Settings::load(a.cfg.config.as_deref())?;
    let level: Level = s.get("level", a.level, "quick".to_string())?.parse()?;
    let seed = s.get("seed", a.seed, 0u64)?;
    let only = s.opt::<String>("suite", a.suite)?;
    let out = s.opt::<String>("out", path_arg(a.out))?.map(PathBuf::from);
    s.finish()?;

    let report = match only {
        None => run_all(level, seed)?,
        Some(name) => {
            let suite = Suite::ALL
                .into_iter()
                .find(|x| x.name() == name)
                .ok_or_else(|| {
                    let names: Vec<_> = Suite::ALL.iter().map(Suite::name).collect();
                    CliError::Usage(format!("unknown suite {name:?} (one of {})", names.join(", ")))
                })?;
            let r = run_suite(suite, level, seed)?;
            VerifyReport {
                level,
                seed,
                passed: r.passed,
                suites: vec![r],
            }
        }
    };
    let json = serde_json::to_string_pretty(&VerifyOutput {
        tool: "lplsh",
        version: VERSION,
        report: &report,
    })
    .expect("report serializes");
    println!("{json}");
    if let Some(out) = &out {
        write_lines(out, &[json])?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<_> = report.suites.iter().filter(|r| !r.passed).map(|r| r.suite.name()).collect();
        Err(CliError::Contract(format!("failed suites: {}", failed.join(", "))))
    }
}
