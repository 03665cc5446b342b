use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use faq_assist::corpus::{
    attach_annotations, corpus_stats, parse_whatsapp_export, pseudonymize, read_aliases,
    read_annotations, read_corpus, read_faqs, split_dataset, write_corpus, Conversation,
    CorpusError, FaqDatabase, SplitName, Splits, Utterance,
};
use faq_assist::evaluation::{evaluate, render_report, EvalOptions, ReportFormat};
use faq_assist::retrieval::{build_ranker, DenseConfig, EmbeddingSource, RetrievalError};
use faq_assist::sampling::{
    export_training_pairs, plan_sampling, training_pairs_jsonl, SamplingError,
};
use faq_assist_server::config::ENV_KEYS;
use faq_assist_server::ServerConfig;

use crate::{
    Cli, Command, EvaluateArgs, ExportPairsArgs, IngestArgs, ServeArgs, SplitArgs, SplitSelection,
    StatsArgs,
};

const DEFAULT_RATIOS: (f64, f64, f64) = (0.7, 0.1, 0.2);

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing input paths, invalid configuration.
    Usage(String),
    /// Inputs that exist but do not parse or validate.
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn data(context: impl std::fmt::Display) -> impl FnOnce(CorpusError) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{}: no such file", path.display())))
    }
}

fn load_corpus(path: &Path) -> Result<Vec<Conversation>> {
    require(path)?;
    read_corpus(path).map_err(|e| CliError::Data(e.to_string()))
}

fn load_faqs(path: &Path) -> Result<FaqDatabase> {
    require(path)?;
    read_faqs(path).map_err(|e| CliError::Data(e.to_string()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Stats(a) => stats(a),
        Command::Split(a) => split(a, cli.seed),
        Command::ExportPairs(a) => export_pairs(a, cli.seed),
        Command::Evaluate(a) => evaluate_cmd(a, cli.seed),
        Command::Serve(a) => serve(a, cli.config.as_deref()),
    }
}

fn ingest(args: IngestArgs) -> Result<()> {
    for p in args
        .exports
        .iter()
        .chain(&args.faqs)
        .chain(&args.annotations)
        .chain(&args.aliases)
    {
        require(p)?;
    }
    let faqs = args.faqs.as_deref().map(load_faqs).transpose()?;
    let aliases = match &args.aliases {
        Some(p) => Some(read_aliases(p).map_err(|e| CliError::Data(e.to_string()))?),
        None => None,
    };
    let mut annotations = match &args.annotations {
        Some(p) => read_annotations(p).map_err(|e| CliError::Data(e.to_string()))?,
        None => HashMap::new(),
    };

    let mut convs = Vec::new();
    for path in &args.exports {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::Usage(format!("{}: no file name", path.display())))?;
        let raw = fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let mut conv = parse_whatsapp_export(&raw, &id).map_err(data(path.display()))?;
        if let Some(mapping) = &aliases {
            conv = pseudonymize(&conv, mapping).map_err(data(path.display()))?;
        }
        if let (Some(faqs), Some(notes)) = (&faqs, annotations.remove(&id)) {
            conv = attach_annotations(&conv, &notes, faqs).map_err(data(path.display()))?;
        }
        convs.push(conv);
    }
    if let Some(unknown) = annotations.keys().min() {
        return Err(CliError::Data(format!(
            "annotations refer to conversation {unknown:?}, which is not among the exports"
        )));
    }
    if convs
        .iter()
        .map(Conversation::id)
        .collect::<std::collections::HashSet<_>>()
        .len()
        != convs.len()
    {
        return Err(CliError::Usage("two exports share a file stem".into()));
    }
    write_corpus(&args.out, &convs).map_err(|e| CliError::Usage(e.to_string()))?;
    let stats = corpus_stats(&convs);
    emit(
        None,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&stats).expect("stats serialize")
        ),
    )
}

fn stats(args: StatsArgs) -> Result<()> {
    let convs = load_corpus(&args.corpus)?;
    if let Some(p) = &args.faqs {
        let faqs = load_faqs(p)?;
        for c in &convs {
            c.check_gold(&faqs).map_err(data(args.corpus.display()))?;
        }
    }
    let stats = corpus_stats(&convs);
    emit(
        None,
        &format!(
            "{}\n",
            serde_json::to_string_pretty(&stats).expect("stats serialize")
        ),
    )
}

fn split(args: SplitArgs, seed: u64) -> Result<()> {
    let convs = load_corpus(&args.corpus)?;
    let splits = split_dataset(&convs, args.ratios, seed).map_err(|e| match e {
        CorpusError::InvalidRatios(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let text = format!(
        "{}\n",
        serde_json::to_string_pretty(&splits).expect("splits serialize")
    );
    emit(args.out.as_deref(), &text)
}

fn load_splits(sel: &SplitSelection, convs: &[Conversation], seed: u64) -> Result<Splits> {
    match &sel.splits {
        Some(p) => {
            require(p)?;
            let raw = fs::read_to_string(p)
                .map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&raw).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))
        }
        None => {
            split_dataset(convs, DEFAULT_RATIOS, seed).map_err(|e| CliError::Data(e.to_string()))
        }
    }
}

/// Utterances of the named split, in corpus order; `None` selects everything.
fn select(convs: &[Conversation], splits: Option<(&Splits, SplitName)>) -> Vec<Utterance> {
    convs
        .iter()
        .filter(|c| splits.is_none_or(|(s, name)| s.contains(name, c.id())))
        .flat_map(|c| c.utterances().iter().cloned())
        .collect()
}

fn split_name(s: &str) -> SplitName {
    s.parse().expect("clap restricts split names")
}

fn export_pairs(args: ExportPairsArgs, seed: u64) -> Result<()> {
    let convs = load_corpus(&args.corpus)?;
    let faqs = load_faqs(&args.faqs)?;
    let splits = load_splits(&args.selection, &convs, seed)?;
    let utterances = select(&convs, Some((&splits, split_name(&args.split))));
    let sampling_err = |e: SamplingError| match e {
        SamplingError::TooManyNegatives { .. } => CliError::Usage(e.to_string()),
        other => CliError::Data(other.to_string()),
    };
    let plan = plan_sampling(&utterances, args.setting, seed).map_err(sampling_err)?;
    let pairs = export_training_pairs(&plan, &utterances, &faqs, args.negatives, seed)
        .map_err(sampling_err)?;
    emit(args.out.as_deref(), &training_pairs_jsonl(&pairs))
}

fn evaluate_cmd(args: EvaluateArgs, seed: u64) -> Result<()> {
    let format: ReportFormat = args
        .format
        .parse()
        .map_err(|e: faq_assist::evaluation::EvalError| CliError::Usage(e.to_string()))?;
    if args.window == 0 {
        return Err(CliError::Usage("--window must be at least 1".into()));
    }
    let source = args
        .embeddings
        .as_deref()
        .map(str::parse::<EmbeddingSource>)
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(EmbeddingSource::Sidecar(p)) = &source {
        require(p)?;
    }
    let convs = load_corpus(&args.corpus)?;
    let faqs = load_faqs(&args.faqs)?;
    for c in &convs {
        c.check_gold(&faqs).map_err(data(args.corpus.display()))?;
    }
    let ranker =
        build_ranker(args.model, &faqs, source.as_ref(), DenseConfig::default()).map_err(|e| {
            match e {
                RetrievalError::EmbeddingsRequired => {
                    CliError::Usage(format!("{e}; pass --embeddings <sidecar|hashing:DIM>"))
                }
                other => CliError::Data(other.to_string()),
            }
        })?;
    let utterances = if args.split == "all" {
        select(&convs, None)
    } else {
        let splits = load_splits(&args.selection, &convs, seed)?;
        select(&convs, Some((&splits, split_name(&args.split))))
    };
    let options = EvalOptions {
        window: args.window,
        seed,
        ..EvalOptions::default()
    };
    let report = evaluate(&ranker, &utterances, args.setting.0, options)
        .map_err(|e| CliError::Data(e.to_string()))?;
    emit(args.out.as_deref(), &render_report(&[report], format))
}

fn serve(args: ServeArgs, config_path: Option<&Path>) -> Result<()> {
    if let Some(p) = config_path {
        require(p)?;
    }
    let flags: HashMap<&str, Option<String>> = HashMap::from([
        ("ranker", args.ranker.clone()),
        ("faqs", args.faqs.as_deref().map(path_str)),
        ("corpus", args.corpus.as_deref().map(path_str)),
        ("embeddings", args.embeddings.clone()),
        ("projects", args.projects.as_deref().map(path_str)),
        ("listen", args.listen.clone()),
        ("event_log", args.event_log.as_deref().map(path_str)),
    ]);
    let config = ServerConfig::load(config_path, |var| {
        let key = ENV_KEYS.iter().find(|(_, v)| *v == var).map(|(k, _)| *k)?;
        flags
            .get(key)
            .cloned()
            .flatten()
            .or_else(|| std::env::var(var).ok())
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;

    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(e.to_string()))?;
    runtime.block_on(async {
        let startup = |e: faq_assist_server::ServerError| {
            if e.is_config() {
                CliError::Usage(e.to_string())
            } else {
                CliError::Data(e.to_string())
            }
        };
        let (listener, state) = faq_assist_server::bind(&config).await.map_err(startup)?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        emit(None, &format!("listening on http://{addr}\n"))?;
        faq_assist_server::run(listener, state)
            .await
            .map_err(|e| CliError::Data(e.to_string()))
    })
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}
