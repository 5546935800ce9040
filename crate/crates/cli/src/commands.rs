use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ddps::net::write_checkpoint;
use ddps::trainer::{train, RunRecord};

use crate::config::{ExperimentConfig, ModeName, RunPlan};
use crate::output::{density_svg, fmt_f64, front_svg, write_front_csv};
use crate::CliError;

pub const RUN_FILE: &str = "run.json";
pub const FRONT_FILE: &str = "front.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub id: String,
    pub dir: PathBuf,
    pub record: RunRecord,
}

fn run_one(plan: &RunPlan, out: &Path, plots: bool) -> Result<RunOutput, CliError> {
    let numerical = |source| CliError::Numerical {
        run: plan.id.clone(),
        source,
    };
    let outcome = train(&plan.config, &plan.problem).map_err(numerical)?;
    let dir = out.join(&plan.id);
    fs::create_dir_all(&dir)?;

    let mut ckpt = BufWriter::new(fs::File::create(dir.join(CHECKPOINT_FILE))?);
    write_checkpoint(&outcome.params, &mut ckpt).map_err(|e| CliError::Io(e.to_string()))?;
    drop(ckpt);

    let mut record = outcome.record;
    record.summary.checkpoint = Some(CHECKPOINT_FILE.to_string());
    let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join(RUN_FILE), json + "\n")?;

    let m = plan.problem.m();
    write_front_csv(&outcome.front, m, fs::File::create(dir.join(FRONT_FILE))?)?;
    if plots {
        let truth = plan.problem.true_front(plan.problem.default_front_size());
        let title = format!("{} ({})", plan.problem.kind, plan.id);
        fs::write(
            dir.join("front.svg"),
            front_svg(&title, &outcome.front, &truth, m),
        )?;
    }
    Ok(RunOutput {
        id: plan.id.clone(),
        dir,
        record,
    })
}

/// Runs every plan, `jobs` at a time. Results come back in plan order; the
/// first failure in plan order is reported.
pub fn execute(
    plans: &[RunPlan],
    out: &Path,
    plots: bool,
    jobs: usize,
) -> Result<Vec<RunOutput>, CliError> {
    fs::create_dir_all(out)?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunOutput, CliError>>>> =
        Mutex::new((0..plans.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, plans.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(plan) = plans.get(i) else { break };
                eprintln!("[{}/{}] {}", i + 1, plans.len(), plan.id);
                let res = run_one(plan, out, plots);
                slots.lock().expect("no worker panicked")[i] = Some(res);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every plan ran"))
        .collect()
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<Vec<RunOutput>, CliError> {
    let plans = cfg.plan()?;
    execute(&plans, &cfg.out, cfg.plots, cfg.jobs)
}

/// Final metrics of one run, as read back from its directory.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub problem: String,
    pub mode: String,
    pub seed: u64,
    pub hv: f64,
    pub igd: f64,
    pub epochs: usize,
    pub seconds: f64,
}

impl TableRow {
    fn from_record(r: &RunRecord) -> Self {
        Self {
            problem: r.meta.problem.clone(),
            mode: r.meta.mode.clone(),
            seed: r.meta.seed,
            hv: r.summary.final_hv,
            igd: r.summary.final_igd,
            epochs: r.summary.epochs_completed,
            seconds: r.summary.wall_clock_seconds,
        }
    }
}

/// Tables produced by [`cmd_table`], each a complete CSV document.
#[derive(Debug, Clone, PartialEq)]
pub struct Tables {
    pub runs: String,
    pub summary: String,
    pub ranks: String,
    pub skipped: Vec<String>,
}

/// Ranks starting at 1 where ties share the mean of the positions they span.
pub fn fractional_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if higher_is_better {
            c.reverse()
        } else {
            c
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn csv_string(header: &[&str], rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Directories to read: each argument is a run directory or a parent of run directories.
fn run_dirs(args: &[PathBuf]) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for a in args {
        if a.join(RUN_FILE).is_file() {
            out.push(a.clone());
        } else if let Ok(rd) = fs::read_dir(a) {
            let mut kids: Vec<PathBuf> = rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            kids.sort();
            out.extend(kids);
        } else {
            out.push(a.clone());
        }
    }
    out
}

pub fn read_record(dir: &Path) -> Result<RunRecord, String> {
    let text = fs::read_to_string(dir.join(RUN_FILE)).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

pub fn cmd_table(args: &[PathBuf]) -> Result<Tables, CliError> {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for dir in run_dirs(args) {
        match read_record(&dir) {
            Ok(r) => rows.push(TableRow::from_record(&r)),
            Err(e) => {
                eprintln!("warning: skipping {}: {e}", dir.display());
                skipped.push(dir.display().to_string());
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::NothingToTabulate);
    }
    rows.sort_by(|a, b| (&a.problem, &a.mode, a.seed).cmp(&(&b.problem, &b.mode, b.seed)));

    let runs = csv_string(
        &[
            "problem",
            "mode",
            "seed",
            "final_hv",
            "final_igd",
            "epochs",
            "seconds",
        ],
        rows.iter()
            .map(|r| {
                vec![
                    r.problem.clone(),
                    r.mode.clone(),
                    r.seed.to_string(),
                    fmt_f64(r.hv),
                    fmt_f64(r.igd),
                    r.epochs.to_string(),
                    fmt_f64(r.seconds),
                ]
            })
            .collect(),
    )?;

    // (problem, mode) -> (hv values, igd values)
    let mut groups: BTreeMap<(String, String), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in &rows {
        let g = groups
            .entry((r.problem.clone(), r.mode.clone()))
            .or_default();
        g.0.push(r.hv);
        g.1.push(r.igd);
    }
    let mut by_problem: BTreeMap<String, Vec<(String, f64, f64, usize)>> = BTreeMap::new();
    for ((problem, mode), (hv, igd)) in &groups {
        by_problem.entry(problem.clone()).or_default().push((
            mode.clone(),
            median(hv),
            median(igd),
            hv.len(),
        ));
    }
    let mut summary_rows = Vec::new();
    let mut rank_sums: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
    for (problem, modes) in &by_problem {
        let hv: Vec<f64> = modes.iter().map(|m| m.1).collect();
        let igd: Vec<f64> = modes.iter().map(|m| m.2).collect();
        let hv_rank = fractional_ranks(&hv, true);
        let igd_rank = fractional_ranks(&igd, false);
        for (k, (mode, mh, mi, n)) in modes.iter().enumerate() {
            summary_rows.push(vec![
                problem.clone(),
                mode.clone(),
                n.to_string(),
                fmt_f64(*mh),
                fmt_f64(*mi),
                hv_rank[k].to_string(),
                igd_rank[k].to_string(),
            ]);
            let s = rank_sums.entry(mode.clone()).or_default();
            s.0 += hv_rank[k];
            s.1 += igd_rank[k];
            s.2 += 1;
        }
    }
    let summary = csv_string(
        &[
            "problem",
            "mode",
            "seeds",
            "median_hv",
            "median_igd",
            "hv_rank",
            "igd_rank",
        ],
        summary_rows,
    )?;
    let ranks = csv_string(
        &["mode", "problems", "average_hv_rank", "average_igd_rank"],
        rank_sums
            .into_iter()
            .map(|(mode, (h, i, n))| {
                vec![
                    mode,
                    n.to_string(),
                    fmt_f64(h / n as f64),
                    fmt_f64(i / n as f64),
                ]
            })
            .collect(),
    )?;
    Ok(Tables {
        runs,
        summary,
        ranks,
        skipped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationKind {
    Gamma,
    Kappa,
}

impl AblationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationKind::Gamma => "gamma",
            AblationKind::Kappa => "kappa",
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationOutput {
    pub sweep_csv: String,
    pub runs: Vec<RunOutput>,
    /// Heat maps written for the mixture-size sweep.
    pub density_maps: Vec<PathBuf>,
}

/// Sweeps one hyperparameter over `grid` for every section of `base`, in
/// data-driven mode only. Writes `sweep.csv` into the output directory.
pub fn cmd_ablate(
    kind: AblationKind,
    grid: &[f64],
    base: &ExperimentConfig,
) -> Result<AblationOutput, CliError> {
    if grid.is_empty() {
        return Err(CliError::Config("ablation grid is empty".into()));
    }
    let mut cfg = base.clone();
    cfg.entries.clear();
    for &v in grid {
        let label = match kind {
            AblationKind::Gamma => {
                if !(v > 0.0 && v < 1.0) {
                    return Err(CliError::Config(format!("gamma {v} is outside (0, 1)")));
                }
                format!("gamma{v}")
            }
            AblationKind::Kappa => {
                if !(v >= 1.0 && v.fract() == 0.0) {
                    return Err(CliError::Config(format!(
                        "kappa {v} is not a positive integer"
                    )));
                }
                format!("kappa{}", v as usize)
            }
        };
        for e in &base.entries {
            let mut e = e.clone();
            e.name = format!("{}-{label}", e.name);
            e.modes = vec![ModeName::Ddps];
            match kind {
                AblationKind::Gamma => e.config.gamma = v,
                AblationKind::Kappa => e.config.kappa = v as usize,
            }
            for p in e.plans() {
                p.config
                    .validate(&p.problem)
                    .map_err(|err| CliError::Config(format!("{}: {err}", p.id)))?;
            }
            cfg.entries.push(e);
        }
    }
    let plans = cfg.plan()?;
    let runs = execute(&plans, &cfg.out, cfg.plots, cfg.jobs)?;

    let mut density_maps = Vec::new();
    let mut rows = Vec::new();
    for (plan, run) in plans.iter().zip(&runs) {
        let value = match kind {
            AblationKind::Gamma => plan.config.gamma.to_string(),
            AblationKind::Kappa => plan.config.kappa.to_string(),
        };
        rows.push(vec![
            plan.problem.kind.to_string(),
            value.clone(),
            plan.config.seed.to_string(),
            fmt_f64(run.record.summary.final_hv),
            fmt_f64(run.record.summary.final_igd),
        ]);
        if kind == AblationKind::Kappa && matches!(plan.problem.m(), 2 | 3) {
            let path = run.dir.join("density.svg");
            let title = format!("{} kappa = {value}", plan.problem.kind);
            fs::write(&path, density_svg(&title, run.record.final_mixture()))?;
            density_maps.push(path);
        }
    }
    let sweep_csv = csv_string(
        &["problem", kind.as_str(), "seed", "final_hv", "final_igd"],
        rows,
    )?;
    fs::write(cfg.out.join("sweep.csv"), &sweep_csv)?;
    Ok(AblationOutput {
        sweep_csv,
        runs,
        density_maps,
    })
}
