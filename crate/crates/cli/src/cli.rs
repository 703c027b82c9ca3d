//! Argument parsing and the subcommands.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chronos_core::protocol::{
    assemble_from_raw, raw_dataset, start_distribution, Direction, Label, ProtocolConfig, SourceRegistry, StartPolicy,
    TrajectoryRecord,
};
use chronos_core::qcore::GibbsSpec;
use chronos_core::rng::{self, tag};
use chronos_core::thermo::{dataset_fidelity, entropy_estimator, thermo_series};
use chronos_learn::classifier::{build_cnn, evaluate_cnn, split_dataset, train_cnn, CnnConfig};
use chronos_learn::cluster::{
    direction_truth, elbow_k, elbow_scan, flatten_records, kmeans_fit, pca_project, permutation_accuracy, KMeansConfig,
};
use chronos_learn::generator::{
    build_denoiser, fidelity_vs_epochs, labelled_fidelity, load_denoiser, sample_trajectories, train_diffusion,
};
use chronos_nn::ModelCheckpoint;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{self, RunConfig};
use crate::csvio::{self, format_number, Table};
use crate::error::{CliError, CliResult};
use crate::svg::{emit_svg_plot, PlotSpec, Series};
use crate::{raw, traj1};

#[derive(Parser, Debug)]
#[command(
    name = "chronos",
    version,
    about = "Measurement-induced arrow of time: simulation, statistics and learning"
)]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Report wall-clock time on standard error
    #[arg(long, global = true)]
    pub meta: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate labelled trajectories (or single-step runs with --raw)
    Simulate(SimulateArgs),
    /// Chain single-step runs into trajectories
    Assemble(AssembleArgs),
    /// Per-step energies and entropy of a dataset
    Stats(StatsArgs),
    /// k-means, elbow scan and PCA of flattened records
    Cluster(ClusterArgs),
    /// Train the direction classifier
    TrainCnn(TrainCnnArgs),
    /// Score a classifier checkpoint on labelled records
    EvalCnn(EvalCnnArgs),
    /// Train the conditional diffusion model
    TrainDiffusion(TrainDiffusionArgs),
    /// Sample records from a diffusion checkpoint
    Generate(GenerateArgs),
    /// Per-step fidelity between generated and reference records
    Fidelity(FidelityArgs),
}

#[derive(Args, Debug, Default)]
pub struct ProtocolArgs {
    /// Unitary time per step
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Inverse temperature of the electron
    #[arg(long, allow_negative_numbers = true)]
    pub beta_electron: Option<f64>,
    /// Inverse temperature of every bath qubit
    #[arg(long, allow_negative_numbers = true)]
    pub beta_bath: Option<f64>,
    /// Collision steps per trajectory
    #[arg(long)]
    pub steps: Option<usize>,
    /// Number of bath qubits
    #[arg(long)]
    pub bath: Option<usize>,
}

impl ProtocolArgs {
    fn apply(&self, base: &ProtocolConfig) -> CliResult<ProtocolConfig> {
        let n_bath = self.bath.unwrap_or(base.n_bath());
        let gibbs = if self.beta_electron.is_some() || self.beta_bath.is_some() || n_bath != base.n_bath() {
            let b = base.gibbs().beta();
            GibbsSpec::central_and_bath(
                self.beta_electron.unwrap_or(b[0]),
                self.beta_bath.unwrap_or(b[1]),
                n_bath,
            )?
        } else {
            base.gibbs().clone()
        };
        Ok(ProtocolConfig::new(
            n_bath,
            self.steps.unwrap_or(base.n_steps()),
            self.dt.unwrap_or(base.delta_t()),
            gibbs,
            base.master_seed(),
        )?)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// forward, backward, unitary-only or unitary-only-reverse
    #[arg(long, default_value = "forward")]
    pub direction: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    /// Write independent single-step runs in RAW format instead
    #[arg(long)]
    pub raw: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StartChoice {
    /// First unit drawn uniformly from the runs
    Uniform,
    /// First unit drawn from the protocol's exact starting populations
    Oracle,
}

#[derive(Args, Debug)]
pub struct AssembleArgs {
    #[arg(long)]
    pub raw: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "oracle")]
    pub start: StartChoice,
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long = "in", required = true)]
    pub input: Vec<PathBuf>,
    /// CSV destination; printed to standard output when absent
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    /// Energy plot
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
    /// Entropy plot
    #[arg(long)]
    pub entropy_svg: Option<PathBuf>,
    #[arg(long, default_value = "plug-in")]
    pub estimator: String,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long = "in", required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scan k = 1..=MAX and report the elbow
    #[arg(long, value_name = "MAX")]
    pub elbow_max: Option<usize>,
    #[arg(long)]
    pub elbow_out: Option<PathBuf>,
    /// Principal components to project onto (0 to skip)
    #[arg(long, default_value_t = 2)]
    pub pca: usize,
    /// Per-record cluster and projection CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scatter of the first two components by cluster
    #[arg(long)]
    pub out_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainCnnArgs {
    #[arg(long, required = true)]
    pub train: Vec<PathBuf>,
    /// Held-out records; without them a share of the training set is held out
    #[arg(long)]
    pub test: Vec<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    #[arg(long)]
    pub curve_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalCnnArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, required = true)]
    pub test: Vec<PathBuf>,
    /// Per-record probabilities
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainDiffusionArgs {
    #[arg(long = "in", required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub timesteps: Option<usize>,
    #[arg(long)]
    pub loss_out: Option<PathBuf>,
    /// Score generated samples against the training data every N epochs
    #[arg(long, value_name = "N")]
    pub fidelity_every: Option<usize>,
    /// Samples per label for each fidelity evaluation
    #[arg(long, default_value_t = 5000)]
    pub fidelity_samples: usize,
    #[arg(long, requires = "fidelity_every")]
    pub curve_out: Option<PathBuf>,
    #[arg(long, requires = "fidelity_every")]
    pub curve_svg: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// forward or backward
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FidelityArgs {
    #[arg(long, required = true)]
    pub generated: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub reference: Vec<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let meta = cli.meta;
    let result = execute(cli);
    if meta {
        eprintln!("elapsed {:.3} s", started.elapsed().as_secs_f64());
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    config::configure_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = config::env_seed()? {
        cfg.set_seed(seed);
    }
    match cli.command {
        Command::Simulate(a) => simulate(&cfg, a),
        Command::Assemble(a) => assemble(&cfg, a),
        Command::Stats(a) => stats(&cfg, a),
        Command::Cluster(a) => cluster(&cfg, a),
        Command::TrainCnn(a) => train_cnn_cmd(&cfg, a),
        Command::EvalCnn(a) => eval_cnn(&cfg, a),
        Command::TrainDiffusion(a) => train_diffusion_cmd(&cfg, a),
        Command::Generate(a) => generate(&cfg, a),
        Command::Fidelity(a) => fidelity(&cfg, a),
    }
}

/// Concatenates TRAJ1 files, which must share one record shape.
pub fn read_inputs(paths: &[PathBuf]) -> CliResult<Vec<TrajectoryRecord>> {
    let mut all: Vec<TrajectoryRecord> = Vec::new();
    for path in paths {
        let records = traj1::read_traj1(path)?;
        if let (Some(a), Some(b)) = (all.first(), records.first()) {
            if (a.n_rows(), a.n_qubits()) != (b.n_rows(), b.n_qubits()) {
                return Err(CliError::Data(format!(
                    "{} holds {}x{} records, earlier inputs {}x{}",
                    path.display(),
                    b.n_rows(),
                    b.n_qubits(),
                    a.n_rows(),
                    a.n_qubits()
                )));
            }
        }
        all.extend(records);
    }
    Ok(all)
}

fn non_empty(records: Vec<TrajectoryRecord>) -> CliResult<Vec<TrajectoryRecord>> {
    if records.is_empty() {
        return Err(CliError::Data("the input holds no records".into()));
    }
    Ok(records)
}

fn read_checkpoint(path: &Path) -> CliResult<ModelCheckpoint> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    ModelCheckpoint::read_from(&mut std::io::BufReader::new(file))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_checkpoint(path: &Path, ckpt: &ModelCheckpoint) -> CliResult<()> {
    Ok(chronos_nn::atomic_write(path, &ckpt.to_bytes())?)
}

fn simulate(cfg: &RunConfig, a: SimulateArgs) -> CliResult<()> {
    let mut protocol = a.protocol.apply(&cfg.protocol)?;
    if let Some(seed) = a.seed {
        protocol = protocol.with_seed(seed);
    }
    let out = cfg.output_path(&a.out);
    if a.raw {
        let direction = match a.direction.as_str() {
            "forward" => Direction::Forward,
            "backward" => Direction::Reverse,
            other => {
                return Err(CliError::Usage(format!(
                    "single-step runs exist for forward and backward, not {other:?}"
                )))
            }
        };
        let runs = raw_dataset(&protocol, direction, a.count)?;
        raw::write_raw(&out, &runs)?;
        println!(
            "wrote {} {} single-step runs to {}",
            runs.len(),
            direction,
            out.display()
        );
    } else {
        let registry = SourceRegistry::default();
        let source = registry.get(&a.direction)?;
        let records = source.generate(&protocol, a.count)?;
        traj1::write_traj1(&out, &records)?;
        println!("wrote {} {} records to {}", records.len(), source.name(), out.display());
    }
    Ok(())
}

fn assemble(cfg: &RunConfig, a: AssembleArgs) -> CliResult<()> {
    let runs = raw::read_raw(&a.raw)?;
    let protocol = a.protocol.apply(&cfg.protocol)?;
    let seed = a.seed.unwrap_or(protocol.master_seed());
    let direction = runs.first().map_or(Direction::Forward, |r| r.direction);
    let policy = match a.start {
        StartChoice::Uniform => StartPolicy::UniformFromRaw,
        StartChoice::Oracle => {
            if runs.first().is_some_and(|r| r.initial.len() != protocol.n_qubits()) {
                return Err(CliError::Data(format!(
                    "runs have {} qubits but the protocol has {}",
                    runs[0].initial.len(),
                    protocol.n_qubits()
                )));
            }
            StartPolicy::Distribution(start_distribution(&protocol, direction)?)
        }
    };
    let mut r = rng::task_stream(seed, tag::ASSEMBLY, 0, 0);
    let (records, report) = assemble_from_raw(&runs, a.count, protocol.n_steps(), &policy, &mut r)?;
    let out = cfg.output_path(&a.out);
    traj1::write_traj1(&out, &records)?;
    println!(
        "assembled {} of {} records from {} runs ({} used) into {}",
        report.assembled,
        report.requested,
        report.raw_entries,
        report.consumed,
        out.display()
    );
    if report.shortfall() > 0 {
        let dropped: Vec<String> = report.dropped_per_step.iter().map(|d| d.to_string()).collect();
        eprintln!("warning: chains dropped per step: {}", dropped.join(" "));
    }
    Ok(())
}

fn stats(cfg: &RunConfig, a: StatsArgs) -> CliResult<()> {
    let data = non_empty(read_inputs(&a.input)?)?;
    let estimator = entropy_estimator(&a.estimator)?;
    let series = thermo_series(&data, estimator.as_ref())?;
    let table = csvio::thermo_table(&series);
    match &a.out_csv {
        Some(p) => table.write(&cfg.output_path(p))?,
        None => std::io::stdout()
            .write_all(&table.to_bytes())
            .map_err(|e| CliError::io("<stdout>", e))?,
    }
    let steps: Vec<f64> = series.steps.iter().map(|&s| s as f64).collect();
    let pairs = |v: &[f64]| steps.iter().copied().zip(v.iter().copied()).collect::<Vec<_>>();
    if let Some(p) = &a.out_svg {
        let spec = PlotSpec {
            title: format!("Energies ({} records)", series.sample_count),
            x_label: "step".into(),
            y_label: "⟨Z⟩".into(),
            series: vec![
                Series::line("electron", pairs(&series.electron_energy)),
                Series::line("bath mean", pairs(&series.bath_mean_energy))
                    .with_errors(series.bath_energy_stddev_of_mean.clone()),
            ],
        };
        emit_svg_plot(&spec, &cfg.output_path(p))?;
    }
    if let Some(p) = &a.entropy_svg {
        let spec = PlotSpec {
            title: format!("Entropy ({})", estimator.name()),
            x_label: "step".into(),
            y_label: "entropy (nats)".into(),
            series: vec![Series::line("entropy", pairs(&series.entropy))],
        };
        emit_svg_plot(&spec, &cfg.output_path(p))?;
    }
    Ok(())
}

fn cluster(cfg: &RunConfig, a: ClusterArgs) -> CliResult<()> {
    let data = non_empty(read_inputs(&a.input)?)?;
    let x = flatten_records(&data)?;
    let mut km = KMeansConfig::from(&cfg.kmeans);
    km.k = a.k.unwrap_or(km.k);
    km.restarts = a.restarts.unwrap_or(km.restarts);
    km.seed = a.seed.unwrap_or(km.seed);
    let fit = kmeans_fit(&x, &km)?;
    println!(
        "k {} sse {} iterations {}",
        km.k,
        format_number(fit.sse),
        fit.iterations_used
    );
    let truth = direction_truth(&data).ok();
    if let (Some(t), 2) = (&truth, km.k) {
        println!(
            "permutation accuracy {}",
            format_number(permutation_accuracy(&fit.labels, t)?)
        );
    }
    if let Some(max) = a.elbow_max {
        if max < 3 {
            return Err(CliError::Usage("--elbow-max needs at least 3".into()));
        }
        let ks: Vec<usize> = (1..=max).collect();
        let scan = elbow_scan(&x, &ks, &km)?;
        let mut table = Table::new(["k", "sse"]);
        for &(k, sse) in &scan {
            println!("elbow k {k} sse {}", format_number(sse));
            table.push(vec![k as f64, sse])?;
        }
        if let Some(k) = elbow_k(&scan) {
            println!("elbow at k {k}");
        }
        if let Some(p) = &a.elbow_out {
            table.write(&cfg.output_path(p))?;
        }
    }
    let projection: Vec<Vec<f64>> = if a.pca > 0 {
        let pca = pca_project(&x, a.pca)?;
        let ratios: Vec<String> = pca.explained_ratio.iter().map(|&r| format_number(r)).collect();
        println!("explained variance ratio {}", ratios.join(" "));
        (0..pca.projection.batch())
            .map(|i| pca.projection.row(i).to_vec())
            .collect()
    } else {
        vec![Vec::new(); data.len()]
    };
    if let Some(p) = &a.out {
        let truth: Vec<Option<usize>> = match &truth {
            Some(t) => t.iter().map(|&v| Some(v)).collect(),
            None => vec![None; data.len()],
        };
        csvio::projection_table(&truth, &fit.labels, &projection)?.write(&cfg.output_path(p))?;
    }
    if let Some(p) = &a.out_svg {
        if a.pca < 2 {
            return Err(CliError::Usage("the cluster plot needs --pca 2 or more".into()));
        }
        let series = (0..km.k)
            .map(|c| {
                let pts = projection
                    .iter()
                    .zip(&fit.labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| (p[0], p[1]))
                    .collect();
                Series::line(format!("cluster {c}"), pts).markers()
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        let spec = PlotSpec {
            title: format!("k-means (k = {}) in principal components", km.k),
            x_label: "PC1".into(),
            y_label: "PC2".into(),
            series,
        };
        emit_svg_plot(&spec, &cfg.output_path(p))?;
    }
    Ok(())
}

fn train_cnn_cmd(cfg: &RunConfig, a: TrainCnnArgs) -> CliResult<()> {
    let data = non_empty(read_inputs(&a.train)?)?;
    let s = &cfg.cnn;
    let mut cnn = CnnConfig {
        t_steps: data[0].n_rows(),
        n_qubits: data[0].n_qubits(),
        dropout: s.dropout,
        batch_size: a.batch_size.unwrap_or(s.batch_size),
        epochs: a.epochs.unwrap_or(s.epochs),
        lr: a.lr.unwrap_or(s.lr),
        seed: a.seed.unwrap_or(s.seed),
        train_size: data.len(),
        test_size: 0,
    };
    let (train, test) = if a.test.is_empty() {
        cnn.test_size = (data.len() as f64 * s.test_fraction).round() as usize;
        cnn.train_size = data.len() - cnn.test_size;
        split_dataset(&data, &cnn)?
    } else {
        let test = non_empty(read_inputs(&a.test)?)?;
        cnn.test_size = test.len();
        (data, test)
    };
    let mut model = build_cnn(&cnn)?;
    let (ckpt, curve) = train_cnn(&mut model, &train, &test, &cnn)?;
    for (e, loss) in curve.train_loss.iter().enumerate() {
        println!(
            "epoch {} train_loss {} test_loss {} test_accuracy {}",
            e + 1,
            format_number(*loss),
            format_number(curve.test_loss[e]),
            format_number(curve.test_accuracy[e])
        );
    }
    write_checkpoint(&cfg.output_path(&a.checkpoint), &ckpt)?;
    if let Some(p) = &a.curve_out {
        csvio::learning_curve_table(&curve).write(&cfg.output_path(p))?;
    }
    if let Some(p) = &a.curve_svg {
        let epochs = |v: &[f64]| v.iter().enumerate().map(|(e, &y)| ((e + 1) as f64, y)).collect();
        let spec = PlotSpec {
            title: "Classifier learning curve".into(),
            x_label: "epoch".into(),
            y_label: "binary cross-entropy".into(),
            series: vec![
                Series::line("train", epochs(&curve.train_loss)),
                Series::line("test", epochs(&curve.test_loss)),
            ],
        };
        emit_svg_plot(&spec, &cfg.output_path(p))?;
    }
    Ok(())
}

fn eval_cnn(cfg: &RunConfig, a: EvalCnnArgs) -> CliResult<()> {
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let data = non_empty(read_inputs(&a.test)?)?;
    let eval = evaluate_cnn(&ckpt, &data)?;
    println!("accuracy {}", format_number(eval.accuracy));
    println!("mean_bce {}", format_number(eval.mean_bce));
    if let Some(p) = &a.out {
        let truth = direction_truth(&data)?;
        let mut table = Table::new(["index", "truth", "probability"]);
        for (i, (t, p)) in truth.iter().zip(&eval.probabilities).enumerate() {
            table.push(vec![i as f64, *t as f64, *p])?;
        }
        table.write(&cfg.output_path(p))?;
    }
    Ok(())
}

fn train_diffusion_cmd(cfg: &RunConfig, a: TrainDiffusionArgs) -> CliResult<()> {
    let data = non_empty(read_inputs(&a.input)?)?;
    let s = &cfg.diffusion;
    let mut dc = s.to_config(data[0].n_rows(), data[0].n_qubits());
    dc.epochs = a.epochs.unwrap_or(dc.epochs);
    dc.batch_size = a.batch_size.unwrap_or(dc.batch_size);
    dc.lr = a.lr.unwrap_or(dc.lr);
    dc.seed = a.seed.unwrap_or(dc.seed);
    dc.hidden = a.hidden.unwrap_or(dc.hidden);
    dc.timesteps = a.timesteps.unwrap_or(dc.timesteps);
    let (ckpt, history) = match a.fidelity_every {
        Some(every) => {
            let (ckpt, history, curve) = fidelity_vs_epochs(&data, &dc, every, a.fidelity_samples)?;
            for p in &curve {
                println!(
                    "epoch {} fidelity {} std_across_steps {}",
                    p.epoch,
                    format_number(p.mean),
                    format_number(p.std_across_steps)
                );
            }
            if let Some(path) = &a.curve_out {
                csvio::fidelity_table(&curve).write(&cfg.output_path(path))?;
            }
            if let Some(path) = &a.curve_svg {
                let spec = PlotSpec {
                    title: "Generated-data fidelity".into(),
                    x_label: "epoch".into(),
                    y_label: "fidelity".into(),
                    series: vec![
                        Series::line("fidelity", curve.iter().map(|p| (p.epoch as f64, p.mean)).collect())
                            .with_errors(curve.iter().map(|p| p.std_across_steps).collect()),
                    ],
                };
                emit_svg_plot(&spec, &cfg.output_path(path))?;
            }
            (ckpt, history)
        }
        None => {
            let mut model = build_denoiser(&dc)?;
            train_diffusion(&mut model, &data, &dc.schedule()?, &dc)?
        }
    };
    for (e, loss) in history.iter().enumerate() {
        println!("epoch {} loss {}", e + 1, format_number(*loss));
    }
    write_checkpoint(&cfg.output_path(&a.checkpoint), &ckpt)?;
    if let Some(p) = &a.loss_out {
        csvio::loss_table(&history).write(&cfg.output_path(p))?;
    }
    Ok(())
}

fn generate(cfg: &RunConfig, a: GenerateArgs) -> CliResult<()> {
    let label: Label = a.label.parse()?;
    if label == Label::Unlabeled {
        return Err(CliError::Usage("--label must be forward or backward".into()));
    }
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let (_, dc) = load_denoiser(&ckpt)?;
    let seed = a.seed.unwrap_or(cfg.diffusion.seed);
    let records = sample_trajectories(&ckpt, &dc.schedule()?, label, a.count, seed)?;
    let out = cfg.output_path(&a.out);
    traj1::write_traj1(&out, &records)?;
    println!(
        "wrote {} generated {} records to {}",
        records.len(),
        label,
        out.display()
    );
    Ok(())
}

fn fidelity(cfg: &RunConfig, a: FidelityArgs) -> CliResult<()> {
    let generated = non_empty(read_inputs(&a.generated)?)?;
    let reference = non_empty(read_inputs(&a.reference)?)?;
    let f = if generated.iter().all(|r| r.label() == Label::Unlabeled) {
        dataset_fidelity(&generated, &reference)?
    } else {
        labelled_fidelity(&generated, &reference)?
    };
    println!(
        "fidelity {} std_across_steps {}",
        format_number(f.mean),
        format_number(f.std_across_steps)
    );
    for (k, v) in f.per_step.iter().enumerate() {
        println!("step {k} fidelity {}", format_number(*v));
    }
    if let Some(p) = &a.out_csv {
        csvio::step_fidelity_table(&f.per_step).write(&cfg.output_path(p))?;
    }
    Ok(())
}
