//! Command-line front end.
//!
//! Subcommands: `fit`, `eval`, `train-bp`, `plot`, `responses`, `bench`.
//! Exit codes: 0 success, 2 parameter error, 3 data or file error, 4 numeric
//! or internal error.

pub mod pipeline;
pub mod plot;
pub mod real;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bp::{mean_std, train_bp, Init, TrainConfig};
use crate::datasets::{load_csv, split, ColumnRef, LabeledDataset, Preset, SplitSpec, SyntheticParams};
use crate::error::{Error, Result};
use crate::network::FFNetwork;
use crate::partition::PruneReport;
use crate::rng::derive_seed;

use self::pipeline::{confusion, fit_pipeline, margin_summary, BlobSource, Components, FitConfig, FitOutcome, StageTimings};
use self::plot::{grid_dump, PlotBox, PlotTarget};
use self::real::RealDataset;

#[derive(Debug, Parser)]
#[command(name = "ffmlp", version, about = "Feedforward-constructed ReLU networks and a backprop baseline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a network and write the model file.
    Fit(FitCmd),
    /// Evaluate a saved model on a dataset.
    Eval(EvalCmd),
    /// Train the same architecture with backpropagation.
    TrainBp(TrainBpCmd),
    /// Dump a decision map or neuron response over a 2-D grid.
    Plot(PlotCmd),
    /// Dump one neuron's response over a 2-D grid.
    Responses(ResponsesCmd),
    /// Run every benchmark and report accuracy and timing.
    Bench(BenchCmd),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// xor, blobs3, blobs9, circle, moons2, moons4, csv, or iris/wine/bcw/pima with --csv.
    #[arg(long, visible_alias = "data", default_value = "xor")]
    pub dataset: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    pub label: Option<String>,
    /// Columns whose zero entries mark rows to drop.
    #[arg(long, value_delimiter = ',')]
    pub drop_zero: Vec<String>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Blob standard deviation (xor, blobs3, blobs9).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Blob center offset (xor).
    #[arg(long)]
    pub offset: Option<f64>,
    /// Grid spacing (blobs9) or triangle side (blobs3).
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Noise level (circle, moons2, moons4).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Inner radius (circle).
    #[arg(long)]
    pub factor: Option<f64>,
}

/// A loaded train/test pair plus what produced it.
pub struct LoadedData {
    pub name: String,
    pub preset: Option<Preset>,
    pub real: Option<RealDataset>,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

impl DataArgs {
    pub fn synthetic_params(&self) -> SyntheticParams {
        let mut p = SyntheticParams::default();
        if let Some(s) = self.sigma {
            p.xor_sigma = s;
            p.blobs3_sigma = s;
            p.blobs9_sigma = s;
        }
        if let Some(o) = self.offset {
            p.xor_offset = o;
        }
        if let Some(s) = self.spacing {
            p.blobs9_spacing = s;
            p.blobs3_side = s;
        }
        if let Some(n) = self.noise {
            p.circle_noise = n;
            p.moons2_noise = n;
            p.moons4_noise = n;
        }
        if let Some(f) = self.factor {
            p.circle_factor = f;
        }
        p
    }

    pub fn load(&self) -> Result<LoadedData> {
        if let Ok(preset) = self.dataset.parse::<Preset>() {
            let (train, test) = preset.generate(&self.synthetic_params(), self.seed)?;
            return Ok(LoadedData {
                name: preset.name().into(),
                preset: Some(preset),
                real: None,
                train,
                test,
            });
        }
        let path = self
            .csv
            .as_deref()
            .ok_or_else(|| Error::param(format!("dataset '{}' needs --csv PATH", self.dataset)))?;
        let real = if self.dataset == "csv" {
            None
        } else {
            Some(self.dataset.parse::<RealDataset>()?)
        };
        let label = match (&self.label, real) {
            (Some(l), _) => l.parse::<ColumnRef>()?,
            (None, Some(r)) => r.label(),
            (None, None) => return Err(Error::param("--label is required with --dataset csv")),
        };
        let drop_zero = if self.drop_zero.is_empty() {
            real.map(|r| r.drop_zero_for(path)).transpose()?.unwrap_or_default()
        } else {
            self.drop_zero.iter().map(|c| c.parse()).collect::<Result<_>>()?
        };
        let fraction = self
            .test_fraction
            .or(real.map(RealDataset::test_fraction))
            .unwrap_or(0.4);
        let ds = load_csv(path, &label, &drop_zero)?;
        let (train, test) = split(&ds, SplitSpec::stratified(fraction, self.seed))?;
        Ok(LoadedData {
            name: self.dataset.clone(),
            preset: None,
            real,
            train,
            test,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Mixture components per class.
    #[arg(long, conflicts_with = "components_per_class")]
    pub components: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub components_per_class: Option<Vec<usize>>,
    /// auto, native or gmm.
    #[arg(long, default_value = "auto")]
    pub blobs: String,
    #[arg(long)]
    pub gmm_seed: Option<u64>,
    #[arg(long)]
    pub em_max_iters: Option<usize>,
    #[arg(long)]
    pub em_tol: Option<f64>,
    #[arg(long)]
    pub gmm_reg: Option<f64>,
    #[arg(long)]
    pub lda_reg: Option<f64>,
    /// Pruning threshold on the training error of the region classifier.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub no_prune: bool,
    /// Isolation constant of the second layer.
    #[arg(long = "p")]
    pub p: Option<f64>,
}

impl FitArgs {
    pub fn config(&self, data: &LoadedData) -> Result<FitConfig> {
        let mut cfg = match (data.preset, data.real) {
            (Some(p), _) => FitConfig::for_preset(p),
            (None, Some(r)) => r.fit_config(),
            (None, None) => FitConfig::default(),
        };
        cfg.blobs = match self.blobs.as_str() {
            "auto" => BlobSource::Auto,
            "native" => BlobSource::Native,
            "gmm" => BlobSource::Mixture,
            other => return Err(Error::param(format!("unknown blob source '{other}'"))),
        };
        if let Some(k) = self.components {
            cfg.components = Components::Uniform(k);
        }
        if let Some(v) = &self.components_per_class {
            cfg.components = Components::PerClass(v.clone());
        }
        if let Some(s) = self.gmm_seed {
            cfg.gmm_seed = s;
        }
        if let Some(v) = self.em_max_iters {
            cfg.em_max_iters = v;
        }
        if let Some(v) = self.em_tol {
            cfg.em_tol = v;
        }
        if let Some(v) = self.gmm_reg {
            cfg.gmm_reg = v;
        }
        if let Some(v) = self.lda_reg {
            cfg.lda_reg = v;
        }
        if let Some(t) = self.threshold {
            cfg.threshold = Some(t);
        }
        if self.no_prune {
            cfg.threshold = None;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, short, default_value = "model.json")]
    pub output: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct TrainBpCmd {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Use this model instead of constructing one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// ff or xavier.
    #[arg(long, default_value = "xavier")]
    pub init: String,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.0)]
    pub momentum: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub bp_seed: u64,
    /// History CSV of the first run.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// xmin,xmax,ymin,ymax
    #[arg(long = "box", default_value = "-3,3,-3,3", allow_hyphen_values = true)]
    pub bbox: String,
    /// NXxNY
    #[arg(long, default_value = "200x200")]
    pub resolution: String,
    /// Output prefix; writes PREFIX.csv and PREFIX.ppm.
    #[arg(long, default_value = "grid")]
    pub out: PathBuf,
}

impl GridArgs {
    fn resolution(&self) -> Result<(usize, usize)> {
        let bad = || Error::param(format!("invalid resolution '{}', expected NXxNY", self.resolution));
        let (a, b) = self.resolution.split_once('x').ok_or_else(bad)?;
        Ok((a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?))
    }
}

#[derive(Debug, Args)]
pub struct PlotCmd {
    #[command(flatten)]
    pub grid: GridArgs,
    /// decision, l1:K or l2:K
    #[arg(long, default_value = "decision")]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct ResponsesCmd {
    #[command(flatten)]
    pub grid: GridArgs,
    /// l1 or l2
    #[arg(long, default_value = "l2")]
    pub layer: String,
    #[arg(long, default_value_t = 0)]
    pub neuron: usize,
}

#[derive(Debug, Args)]
pub struct BenchCmd {
    /// Backprop epochs timed against the construction.
    #[arg(long, default_value_t = 15)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory holding iris.csv, wine.csv, breast_cancer.csv and pima.csv.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

/// Summary printed by `fit` and stored by `--report`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub args: Vec<String>,
    pub dataset: String,
    pub d_in: usize,
    pub d1: usize,
    pub d2: usize,
    pub d_out: usize,
    pub initial_planes: usize,
    pub final_planes: usize,
    pub skipped_pairs: Vec<(usize, usize)>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub prune: Option<PruneReport>,
    pub em: Vec<EmSummary>,
    pub isolation_violators: usize,
    pub table_mismatches: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmSummary {
    pub class: usize,
    pub components: usize,
    pub iterations: usize,
    pub reseeds: usize,
    pub log_likelihood: f64,
}

impl FitReport {
    pub fn new(args: Vec<String>, data: &LoadedData, out: &FitOutcome) -> Result<Self> {
        let net = &out.network;
        let margin = margin_summary(net, &out.region_table, &data.train)?;
        Ok(Self {
            args,
            dataset: data.name.clone(),
            d_in: net.dim,
            d1: net.d1(),
            d2: net.d2(),
            d_out: net.class_count,
            initial_planes: out.initial_planes,
            final_planes: net.plane_count(),
            skipped_pairs: out.skipped_pairs.clone(),
            train_accuracy: net.accuracy(&data.train)?,
            test_accuracy: net.accuracy(&data.test)?,
            prune: net.prune_report.clone(),
            em: net
                .mixtures
                .iter()
                .map(|m| EmSummary {
                    class: m.class_label,
                    components: m.components.len(),
                    iterations: m.iterations,
                    reseeds: m.reseeds(),
                    log_likelihood: m.log_likelihood,
                })
                .collect(),
            isolation_violators: margin.violators.len(),
            table_mismatches: margin.mismatches.len(),
            timings: out.timings,
        })
    }

    pub fn print<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "dataset        {}", self.dataset)?;
        writeln!(w, "command        {}", self.args.join(" "))?;
        writeln!(
            w,
            "architecture   D_in={} D1={} D2={} D_out={}",
            self.d_in, self.d1, self.d2, self.d_out
        )?;
        writeln!(w, "planes         {} built, {} kept", self.initial_planes, self.final_planes)?;
        if !self.skipped_pairs.is_empty() {
            writeln!(w, "skipped pairs  {:?}", self.skipped_pairs)?;
        }
        if let Some(p) = &self.prune {
            writeln!(
                w,
                "pruning        threshold {} error {:.4} -> {:.4}, deleted {:?}",
                p.threshold,
                p.initial_error,
                p.final_error,
                p.deletions.iter().map(|d| d.plane_id).collect::<Vec<_>>()
            )?;
        }
        for e in &self.em {
            writeln!(
                w,
                "em class {}     {} components, {} iterations, {} reseeds, log-likelihood {:.4}",
                e.class, e.components, e.iterations, e.reseeds, e.log_likelihood
            )?;
        }
        writeln!(w, "train accuracy {:.2}%", 100.0 * self.train_accuracy)?;
        writeln!(w, "test accuracy  {:.2}%", 100.0 * self.test_accuracy)?;
        writeln!(
            w,
            "isolation      {} violators, {} table mismatches",
            self.isolation_violators, self.table_mismatches
        )?;
        let t = &self.timings;
        writeln!(
            w,
            "timing (s)     gmm {:.6} boundary {:.6} region {:.6} assign {:.6} total {:.6}",
            t.gmm_s, t.boundary_s, t.region_s, t.assign_s, t.total_s
        )
    }
}

/// Applies `FFMLP_THREADS` to the global thread pool.
pub fn init_threads() {
    if let Some(n) = std::env::var("FFMLP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(cli: Cli, args: Vec<String>) -> Result<()> {
    init_threads();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Fit(cmd) => cmd_fit(&cmd, args, &mut out),
        Command::Eval(cmd) => cmd_eval(&cmd, &mut out),
        Command::TrainBp(cmd) => cmd_train_bp(&cmd, &mut out),
        Command::Plot(cmd) => {
            let target = cmd.target.parse()?;
            cmd_plot(&cmd.grid, target, &mut out)
        }
        Command::Responses(cmd) => {
            let target = match cmd.layer.as_str() {
                "l1" => PlotTarget::L1(cmd.neuron),
                "l2" => PlotTarget::L2(cmd.neuron),
                other => return Err(Error::param(format!("unknown layer '{other}', expected l1 or l2"))),
            };
            cmd_plot(&cmd.grid, target, &mut out)
        }
        Command::Bench(cmd) => cmd_bench(&cmd, &mut out),
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

fn stdout_err(e: io::Error) -> Error {
    Error::io("<stdout>", e)
}

pub fn cmd_fit<W: Write>(cmd: &FitCmd, args: Vec<String>, out: &mut W) -> Result<()> {
    let data = cmd.data.load()?;
    let cfg = cmd.fit.config(&data)?;
    let outcome = fit_pipeline(&data.train, &cfg)?;
    outcome.network.save(&cmd.output)?;
    let report = FitReport::new(args, &data, &outcome)?;
    report.print(&mut *out).map_err(stdout_err)?;
    writeln!(out, "model          {}", cmd.output.display()).map_err(stdout_err)?;
    if let Some(path) = &cmd.report {
        let text = serde_json::to_string_pretty(&report).map_err(|e| Error::format("report", e.to_string()))?;
        std::fs::write(path, text).map_err(io_err(path))?;
    }
    Ok(())
}

fn write_confusion<W: Write>(out: &mut W, title: &str, m: &[Vec<usize>]) -> io::Result<()> {
    writeln!(out, "{title} confusion (rows true, columns predicted)")?;
    for (c, row) in m.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
        writeln!(out, "  {c:>3} {}", cells.join(""))?;
    }
    Ok(())
}

pub fn cmd_eval<W: Write>(cmd: &EvalCmd, out: &mut W) -> Result<()> {
    let net = FFNetwork::load(&cmd.model)?;
    let data = cmd.data.load()?;
    for (name, ds) in [("train", &data.train), ("test", &data.test)] {
        if ds.dim() != net.dim {
            return Err(Error::param(format!(
                "model expects {}-D inputs, {name} data is {}-D",
                net.dim,
                ds.dim()
            )));
        }
        let pred = net.predict_all(ds)?;
        let m = confusion(&pred, ds.labels(), net.class_count.max(ds.class_count()));
        let hits: usize = (0..m.len()).map(|c| m[c][c]).sum();
        writeln!(out, "{name} accuracy {:.2}% ({hits}/{})", 100.0 * hits as f64 / ds.len() as f64, ds.len())
            .map_err(stdout_err)?;
        write_confusion(out, name, &m).map_err(stdout_err)?;
    }
    Ok(())
}

/// Network used to seed or size the backprop runs.
fn reference_network(model: Option<&Path>, data: &LoadedData, fit: &FitArgs) -> Result<FFNetwork> {
    match model {
        Some(p) => FFNetwork::load(p),
        None => Ok(fit_pipeline(&data.train, &fit.config(data)?)?.network),
    }
}

pub fn cmd_train_bp<W: Write>(cmd: &TrainBpCmd, out: &mut W) -> Result<()> {
    let data = cmd.data.load()?;
    let net = reference_network(cmd.model.as_deref(), &data, &cmd.fit)?;
    let init: Init = cmd.init.parse()?;
    if cmd.runs == 0 {
        return Err(Error::param("runs must be at least 1"));
    }
    let arch = net.architecture();
    writeln!(
        out,
        "architecture {:?}, init {init}, {} epochs, lr {}, momentum {}, batch {}",
        arch, cmd.epochs, cmd.lr, cmd.momentum, cmd.batch_size
    )
    .map_err(stdout_err)?;
    let mut train_acc = Vec::new();
    let mut test_acc = Vec::new();
    for run in 0..cmd.runs {
        let cfg = TrainConfig {
            epochs: cmd.epochs,
            learning_rate: cmd.lr,
            momentum: cmd.momentum,
            batch_size: cmd.batch_size,
            init,
            seed: derive_seed(cmd.bp_seed, run as u64),
        };
        let clock = Instant::now();
        let (_, hist) = train_bp(&arch, Some(&net), &data.train, &data.test, &cfg)?;
        let secs = clock.elapsed().as_secs_f64();
        writeln!(
            out,
            "run {run}: train {:.2}% test {:.2}% ({secs:.3} s)",
            100.0 * hist.final_train_acc(),
            100.0 * hist.final_test_acc()
        )
        .map_err(stdout_err)?;
        if run == 0 {
            if let Some(path) = &cmd.history {
                let f = File::create(path).map_err(io_err(path))?;
                hist.write_csv(BufWriter::new(f))?;
            }
        }
        train_acc.push(100.0 * hist.final_train_acc());
        test_acc.push(100.0 * hist.final_test_acc());
    }
    let (tm, ts) = mean_std(&train_acc);
    let (vm, vs) = mean_std(&test_acc);
    writeln!(out, "mean over {} runs: train {tm:.2} ± {ts:.2}, test {vm:.2} ± {vs:.2}", cmd.runs).map_err(stdout_err)?;
    Ok(())
}

pub fn cmd_plot<W: Write>(grid: &GridArgs, target: PlotTarget, out: &mut W) -> Result<()> {
    let net = FFNetwork::load(&grid.model)?;
    let bbox: PlotBox = grid.bbox.parse()?;
    let (nx, ny) = grid.resolution()?;
    let dump = grid_dump(&net, bbox, nx, ny, target)?;
    let csv_path = grid.out.with_extension("csv");
    let ppm_path = grid.out.with_extension("ppm");
    dump.write_csv(BufWriter::new(File::create(&csv_path).map_err(io_err(&csv_path))?))?;
    dump.write_ppm(BufWriter::new(File::create(&ppm_path).map_err(io_err(&ppm_path))?))?;
    writeln!(out, "wrote {} and {} ({nx}x{ny}, {target})", csv_path.display(), ppm_path.display())
        .map_err(stdout_err)?;
    Ok(())
}

/// One row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub d1: usize,
    pub d2: usize,
    pub ff_train: f64,
    pub ff_test: f64,
    pub bp_test_mean: f64,
    pub bp_test_std: f64,
    pub timings: StageTimings,
    pub bp_seconds: f64,
}

/// Fits the network and times `runs` Xavier-initialized backprop runs.
pub fn bench_one(name: &str, data: &LoadedData, cfg: &FitConfig, epochs: usize, runs: usize, seed: u64) -> Result<BenchRow> {
    let outcome = fit_pipeline(&data.train, cfg)?;
    let net = &outcome.network;
    let mut tests = Vec::new();
    let mut secs = 0.0;
    for run in 0..runs.max(1) {
        let tc = TrainConfig {
            epochs,
            seed: derive_seed(seed, run as u64),
            ..TrainConfig::default()
        };
        let clock = Instant::now();
        let (_, hist) = train_bp(&net.architecture(), None, &data.train, &data.test, &tc)?;
        secs += clock.elapsed().as_secs_f64();
        tests.push(100.0 * hist.final_test_acc());
    }
    let (m, s) = mean_std(&tests);
    Ok(BenchRow {
        dataset: name.into(),
        d1: net.d1(),
        d2: net.d2(),
        ff_train: 100.0 * net.accuracy(&data.train)?,
        ff_test: 100.0 * net.accuracy(&data.test)?,
        bp_test_mean: m,
        bp_test_std: s,
        timings: outcome.timings,
        bp_seconds: secs / runs.max(1) as f64,
    })
}

pub fn cmd_bench<W: Write>(cmd: &BenchCmd, out: &mut W) -> Result<()> {
    let mut rows = Vec::new();
    let params = SyntheticParams::default();
    for preset in Preset::ALL {
        let (train, test) = preset.generate(&params, cmd.seed)?;
        let data = LoadedData {
            name: preset.name().into(),
            preset: Some(preset),
            real: None,
            train,
            test,
        };
        rows.push(bench_one(preset.name(), &data, &FitConfig::for_preset(preset), cmd.epochs, cmd.runs, cmd.seed)?);
    }
    if let Some(dir) = &cmd.data_dir {
        for real in RealDataset::ALL {
            let path = dir.join(real.file_name());
            if !path.exists() {
                writeln!(out, "skipping {real}: {} not found", path.display()).map_err(stdout_err)?;
                continue;
            }
            let (train, test) = real.load_split(&path, cmd.seed)?;
            let data = LoadedData {
                name: real.name().into(),
                preset: None,
                real: Some(real),
                train,
                test,
            };
            rows.push(bench_one(real.name(), &data, &real.fit_config(), cmd.epochs, cmd.runs, cmd.seed)?);
        }
    }
    writeln!(
        out,
        "{:<8} {:>4} {:>4} {:>8} {:>8} {:>14} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "dataset", "D1", "D2", "ff_train", "ff_test", "bp_test", "gmm_s", "bound_s", "region_s", "assign_s", "ff_total", "bp_s"
    )
    .map_err(stdout_err)?;
    for r in &rows {
        let t = &r.timings;
        writeln!(
            out,
            "{:<8} {:>4} {:>4} {:>8.2} {:>8.2} {:>7.2} ± {:<4.2} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
            r.dataset, r.d1, r.d2, r.ff_train, r.ff_test, r.bp_test_mean, r.bp_test_std, t.gmm_s, t.boundary_s,
            t.region_s, t.assign_s, t.total_s, r.bp_seconds
        )
        .map_err(stdout_err)?;
    }
    Ok(())
}
