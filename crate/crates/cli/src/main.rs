mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use refseq::classify::{cross_validate, fit_predict, EvalReport};
use refseq::dataset::{parse_dataset, parse_dataset_extending, write_dataset};
use refseq::features::{transform, write_arff, write_csv};
use refseq::patterns::{select_pattern_references, write_patterns_tsv};
use refseq::refselect::{default_pointnum, select_references, Provenance, SelectionMethod};
use refseq::seq::SequenceDataset;
use refseq::synth::synth_gen;

use config::{echo, Problems, RunArgs, RunConfig};

#[derive(Parser)]
#[command(name = "refseq", version, about = "Reference-based sequence classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine frequent (optionally filtered) sequential patterns.
    Mine(RunArgs),
    /// Select reference sequences from a training set.
    Select(RunArgs),
    /// Embed sequences as similarities to the selected references; write CSV/ARFF.
    Transform(RunArgs),
    /// Train on one dataset and label another.
    Classify(RunArgs),
    /// Repeated stratified cross-validation of the whole pipeline.
    Cv(RunArgs),
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Re-render a JSON evaluation report.
    Report(ReportArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 2)]
    classes: usize,
    #[arg(long, default_value_t = 40)]
    per_class: usize,
    #[arg(long, default_value_t = 5)]
    motif_len: usize,
    #[arg(long, default_value_t = 10)]
    noise_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Tsv,
    Json,
    Summary,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// JSON report written by `cv --json`.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "summary")]
    format: ReportFormat,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_echo(w: &mut dyn Write, v: &Value) -> io::Result<()> {
    if let Value::Object(m) = v {
        for (k, x) in m {
            let text = match x {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            writeln!(w, "# {k}\t{text}")?;
        }
    }
    Ok(())
}

fn init_threads(cfg: &RunConfig) -> Result<()> {
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn load_train(path: &Path) -> Result<SequenceDataset> {
    parse_dataset(path).with_context(|| format!("loading {}", path.display()))
}

fn mine(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut p = Problems::default();
    let path = cfg.require_dataset(&mut p);
    let sel = cfg.pattern_selection(&mut p);
    cfg.threads_ok(&mut p);
    p.finish()?;
    let (path, (preset, sel)) = (path.unwrap(), sel.unwrap());
    init_threads(&cfg)?;
    let ds = load_train(&path)?;
    let patterns = select_pattern_references(&ds.instances, &sel)?;
    let mut w = writer(cfg.out.as_deref())?;
    let e = echo(&cfg, json!({ "preset": preset.map(|p| p.to_string()), "selection": sel }));
    write_echo(&mut w, &e)?;
    write_patterns_tsv(&mut w, &patterns, &ds.alphabet, &ds.classes)?;
    w.flush()?;
    Ok(())
}

/// Expands the GAHC default so the echo states the value actually used.
fn concrete(method: SelectionMethod, n: usize) -> SelectionMethod {
    match method {
        SelectionMethod::Gahc { pointnum: None } => SelectionMethod::Gahc {
            pointnum: Some(default_pointnum(n)),
        },
        m => m,
    }
}

fn select(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut p = Problems::default();
    let path = cfg.require_dataset(&mut p);
    let method = cfg.selection(&mut p);
    let spec = cfg.similarity(&mut p);
    cfg.threads_ok(&mut p);
    p.finish()?;
    let (path, method, spec) = (path.unwrap(), method.unwrap(), spec.unwrap());
    init_threads(&cfg)?;
    let ds = load_train(&path)?;
    let method = concrete(method, ds.len());
    let sel = select_references(&ds.instances, &method, &spec)?;
    let mut w = writer(cfg.out.as_deref())?;
    write_echo(&mut w, &echo(&cfg, json!({ "selection": method, "similarity": spec })))?;
    writeln!(w, "reference\tsource\tclass\tsequence")?;
    for (r, (seq, prov)) in sel.references.references.iter().zip(&sel.references.provenance).enumerate() {
        let class = match prov {
            Provenance::Train(i) => ds.classes[ds.instances[*i].label].clone(),
            Provenance::Pattern(_) => "-".into(),
        };
        let source = match prov {
            Provenance::Train(i) => format!("train:{i}"),
            Provenance::Pattern(_) => "pattern".into(),
        };
        writeln!(w, "{r}\t{source}\t{class}\t{}", ds.alphabet.render(seq))?;
    }
    w.flush()?;
    if let Some(path) = &cfg.mht_report {
        match &sel.mht_report {
            Some(rep) => {
                let mut f = writer(Some(path))?;
                rep.write_tsv(&mut f, &ds.classes)?;
                f.flush()?;
            }
            None => eprintln!("note: --mht-report ignored for selection `{method}`"),
        }
    }
    Ok(())
}

fn load_pair(cfg: &RunConfig, train_path: &Path) -> Result<(SequenceDataset, Option<SequenceDataset>)> {
    let train = load_train(train_path)?;
    let test = match &cfg.test {
        Some(t) => Some(
            parse_dataset_extending(t, &train).with_context(|| format!("loading {}", t.display()))?,
        ),
        None => None,
    };
    Ok((train, test))
}

fn transform_cmd(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut p = Problems::default();
    let path = cfg.require_dataset(&mut p);
    let method = cfg.selection(&mut p);
    let spec = cfg.similarity(&mut p);
    cfg.threads_ok(&mut p);
    p.finish()?;
    let (path, method, spec) = (path.unwrap(), method.unwrap(), spec.unwrap());
    init_threads(&cfg)?;
    let (train, test) = load_pair(&cfg, &path)?;
    let method = concrete(method, train.len());
    let refs = select_references(&train.instances, &method, &spec)?.references;
    let target = test.as_ref().unwrap_or(&train);
    let classes = &target.classes;
    let m = transform(&target.instances, &refs, &spec, Some(&target.alphabet))?;
    let relation = path
        .file_stem()
        .map_or("refseq".into(), |s| s.to_string_lossy().into_owned());
    if let Some(arff) = &cfg.arff {
        let mut w = writer(Some(arff))?;
        write_arff(&m, classes, &relation, &mut w)?;
        w.flush()?;
    }
    if cfg.csv.is_some() || cfg.arff.is_none() {
        let mut w = writer(cfg.csv.as_deref())?;
        write_csv(&m, classes, &mut w)?;
        w.flush()?;
    }
    eprintln!("{} rows x {} features ({method}, {spec})", m.rows, m.cols);
    Ok(())
}

fn classify(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut p = Problems::default();
    let path = cfg.require_dataset(&mut p);
    if cfg.test.is_none() {
        p.push("classify needs a test dataset (--test)");
    }
    let method = cfg.selection(&mut p);
    let spec = cfg.similarity(&mut p);
    let clf = cfg.classifier(&mut p);
    cfg.threads_ok(&mut p);
    p.finish()?;
    let (path, method, spec, clf) = (path.unwrap(), method.unwrap(), spec.unwrap(), clf.unwrap());
    init_threads(&cfg)?;
    let (train, test) = load_pair(&cfg, &path)?;
    let test = test.expect("checked above");
    let method = concrete(method, train.len());
    let refs = select_references(&train.instances, &method, &spec)?.references;
    let xtrain = transform(&train.instances, &refs, &spec, Some(&test.alphabet))?;
    let xtest = transform(&test.instances, &refs, &spec, Some(&test.alphabet))?;
    let pred = fit_predict(&xtrain, &xtest, &clf)?;
    let correct = pred.iter().zip(&xtest.labels).filter(|(a, b)| a == b).count();
    let mut w = writer(cfg.out.as_deref())?;
    let e = echo(
        &cfg,
        json!({ "selection": method, "similarity": spec, "classifier": clf, "references": refs.len() }),
    );
    write_echo(&mut w, &e)?;
    writeln!(w, "index\ttruth\tpredicted")?;
    for (i, (&pr, &t)) in pred.iter().zip(&xtest.labels).enumerate() {
        writeln!(w, "{i}\t{}\t{}", test.classes[t], test.classes[pr])?;
    }
    writeln!(w, "# accuracy\t{}", correct as f64 / pred.len() as f64)?;
    w.flush()?;
    eprintln!("accuracy {correct}/{}", pred.len());
    Ok(())
}

fn cv(args: &RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let mut p = Problems::default();
    let path = cfg.require_dataset(&mut p);
    let pipeline = cfg.pipeline(&mut p);
    cfg.threads_ok(&mut p);
    p.finish()?;
    let (path, pipeline) = (path.unwrap(), pipeline.unwrap());
    init_threads(&cfg)?;
    let ds = load_train(&path)?;
    let mut report = cross_validate(&ds, &pipeline)?;
    report
        .context
        .insert("dataset".into(), path.display().to_string());
    report.context.insert("instances".into(), ds.len().to_string());
    let mut w = writer(cfg.out.as_deref())?;
    report.write_tsv(&mut w)?;
    w.flush()?;
    if let Some(j) = &cfg.json {
        std::fs::write(j, report.to_json()?).with_context(|| format!("writing {}", j.display()))?;
    }
    if cfg.out.is_some() {
        println!("mean accuracy {}", report.mean_accuracy);
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let ds = synth_gen(a.classes, a.per_class, a.motif_len, a.noise_len, a.seed)?;
    let mut w = writer(a.out.as_deref())?;
    writeln!(
        w,
        "# synth classes={} per_class={} motif_len={} noise_len={} seed={}",
        a.classes, a.per_class, a.motif_len, a.noise_len, a.seed
    )?;
    write_dataset(&ds, &mut w)?;
    w.flush()?;
    Ok(())
}

fn report(a: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let rep: EvalReport = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.input.display()))?;
    let mut w = writer(a.out.as_deref())?;
    match a.format {
        ReportFormat::Tsv => rep.write_tsv(&mut w)?,
        ReportFormat::Json => w.write_all(rep.to_json()?.as_bytes())?,
        ReportFormat::Summary => {
            let accs: Vec<f64> = rep.folds.iter().map(|f| f.accuracy).collect();
            let n = accs.len() as f64;
            let sd = (accs.iter().map(|x| (x - rep.mean_accuracy).powi(2)).sum::<f64>() / n).sqrt();
            writeln!(w, "selection\t{}", rep.config.selection)?;
            writeln!(w, "similarity\t{}", rep.config.similarity)?;
            writeln!(w, "classifier\t{}", rep.config.classifier)?;
            writeln!(w, "folds evaluated\t{}", rep.folds.len())?;
            writeln!(w, "folds skipped\t{}", rep.skipped.len())?;
            writeln!(w, "mean accuracy\t{:.4}", rep.mean_accuracy)?;
            writeln!(w, "fold accuracy sd\t{sd:.4}")?;
            let refs: Vec<usize> = rep.folds.iter().map(|f| f.n_references).collect();
            if let (Some(lo), Some(hi)) = (refs.iter().min(), refs.iter().max()) {
                writeln!(w, "references per fold\t{lo}..{hi}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Mine(a) => mine(a),
        Command::Select(a) => select(a),
        Command::Transform(a) => transform_cmd(a),
        Command::Classify(a) => classify(a),
        Command::Cv(a) => cv(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
