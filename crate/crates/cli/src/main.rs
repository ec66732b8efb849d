mod config;
mod error;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ontoclust::dot::{clustering_to_dot, graph_to_dot};
use ontoclust::pipeline::{self, Mode};
use ontoclust::store::{read_log, read_personal, RequestRecord};
use ontoclust::text::read_lexicon;
use ontoclust::{
    emit_similarity_xml, run_sweep, Clustering, GraphParams, Language, Matcher, Ontology,
    OntologyError, PipelineConfig, StoreError, SweepGrid, TextPipeline, WeightedGraph,
};

use config::Config;
use error::{usage, CliError};

const DEFAULT_D_MAX: f64 = 0.6;
const DEFAULT_CC_WEIGHTS: [f64; 4] = [0.001, 0.1, 0.2, 0.5];

/// Match customer requests against a product ontology and cluster them.
#[derive(Debug, Parser)]
#[command(name = "ontoclust", version)]
struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every request against the ontology and write the XML report.
    Match {
        #[command(flatten)]
        input: Input,
        /// Output file; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Build the user-ontology graph and cluster users or requests.
    Cluster {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        weights: Weights,
        /// Maximum cluster mass.
        #[arg(long)]
        d_max: Option<f64>,
        /// Clustering JSON; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Also write the clustered graph as DOT.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// Also write the user-ontology graph as JSON.
        #[arg(long)]
        graph_out: Option<PathBuf>,
        /// Also write the user distance table as CSV.
        #[arg(long)]
        distances: Option<PathBuf>,
    },
    /// Count clusters over a grid of d_max and cc_weight values.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        weights: Weights,
        /// cc_weight values, comma separated.
        #[arg(long, value_delimiter = ',')]
        cc_weights: Option<Vec<f64>>,
        /// Explicit d_max values, comma separated and ascending.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["d_max_min", "d_max_max", "d_max_steps"])]
        d_max_values: Option<Vec<f64>>,
        /// Smallest d_max of the log-spaced grid.
        #[arg(long)]
        d_max_min: Option<f64>,
        /// Largest d_max of the log-spaced grid.
        #[arg(long)]
        d_max_max: Option<f64>,
        /// Number of log-spaced d_max values.
        #[arg(long)]
        d_max_steps: Option<usize>,
        /// CSV output; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Render a graph or clustering JSON artifact as DOT.
    ExportDot {
        /// Artifact written by `cluster --graph-out` or `cluster --output`.
        input: PathBuf,
        /// Clustering to draw over a graph artifact.
        #[arg(long)]
        clustering: Option<PathBuf>,
        /// DOT output; standard output if omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct Input {
    /// Ontology document (JSON).
    #[arg(long)]
    ontology: PathBuf,
    /// Request log (one JSON record per line).
    #[arg(long)]
    requests: PathBuf,
    /// Personal data per user (JSON object keyed by user id).
    #[arg(long)]
    personal: Option<PathBuf>,
    /// Request language: en, de or ru.
    #[arg(long)]
    language: Option<String>,
    /// Stop-word list, one word per line.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Unit list, one unit per line.
    #[arg(long)]
    units: Option<PathBuf>,
    /// Cluster users or individual requests.
    #[arg(long)]
    mode: Option<Mode>,
}

#[derive(Debug, Args)]
struct Weights {
    #[arg(long)]
    cc_weight: Option<f64>,
    #[arg(long)]
    ca_weight: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

impl Weights {
    fn params(&self, config: &Config) -> Result<GraphParams, CliError> {
        let d = GraphParams::default();
        GraphParams::new(
            self.cc_weight.or(config.cc_weight).unwrap_or(d.cc_weight),
            self.ca_weight.or(config.ca_weight).unwrap_or(d.ca_weight),
            self.epsilon.or(config.epsilon).unwrap_or(d.epsilon),
        )
        .map_err(usage)
    }
}

struct Loaded {
    ontology: Ontology,
    records: Vec<RequestRecord>,
    personal: BTreeMap<String, BTreeMap<String, String>>,
    text: PipelineConfig,
    mode: Mode,
}

impl Loaded {
    fn matcher(&self) -> Matcher<'_> {
        Matcher::new(&self.ontology, TextPipeline::new(self.text.clone()))
    }
}

fn load_ontology(path: &Path) -> Result<Ontology, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::OntologyNotFound(path.display().to_string())
        } else {
            CliError::Read {
                path: path.display().to_string(),
                source,
            }
        }
    })?;
    Ontology::from_json(&text).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: match e {
            OntologyError::Malformed { line, column, message } => {
                format!("line {line}, column {column}: {message}")
            }
            other => other.to_string(),
        },
    })
}

fn store_error(e: StoreError) -> CliError {
    match e {
        StoreError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
            CliError::Input {
                path,
                message: "file not found".into(),
            }
        }
        StoreError::Io { path, source } => CliError::Read { path, source },
        StoreError::Malformed { path, line, message } => CliError::Input {
            path,
            message: format!("line {line}: {message}"),
        },
        other => CliError::Usage(other.to_string()),
    }
}

fn lexicon(path: &Path) -> Result<std::collections::HashSet<String>, CliError> {
    read_lexicon(path).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load(input: &Input, config: &Config) -> Result<Loaded, CliError> {
    let ontology = load_ontology(&input.ontology)?;
    let records = read_log(&input.requests).map_err(store_error)?;
    let personal = match input.personal.as_ref().or(config.personal.as_ref()) {
        Some(path) => read_personal(path).map_err(store_error)?,
        None => BTreeMap::new(),
    };

    let language: Language = match input.language.as_ref().or(config.language.as_ref()) {
        Some(code) => code.parse().map_err(usage)?,
        None => Language::English,
    };
    let mut text = PipelineConfig::for_language(language);
    if let Some(path) = input.stopwords.as_ref().or(config.stopwords.as_ref()) {
        text.stopwords = lexicon(path)?;
    }
    if let Some(path) = input.units.as_ref().or(config.units.as_ref()) {
        text.units = lexicon(path)?;
    }
    for r in records.iter().filter(|r| r.language != language.code()) {
        log::warn!(
            "request `{}` is tagged `{}` but is processed as `{}`",
            r.request_id,
            r.language,
            language.code()
        );
    }

    let mode = match (input.mode, config.mode.as_deref()) {
        (Some(m), _) => m,
        (None, Some(s)) => s.parse().map_err(usage)?,
        (None, None) => Mode::default(),
    };
    Ok(Loaded {
        ontology,
        records,
        personal,
        text,
        mode,
    })
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|source| CliError::Write {
                path: "standard output".into(),
                source,
            }),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(format!("artifact not found: {}", path.display()))
        } else {
            CliError::Read {
                path: path.display().to_string(),
                source,
            }
        }
    })
}

fn artifact_kind(path: &Path, text: &str) -> Result<String, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    value
        .get("kind")
        .and_then(|k| k.as_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Input {
            path: path.display().to_string(),
            message: "not a graph or clustering artifact (no `kind` field)".into(),
        })
}

fn cmd_match(input: &Input, output: Option<&Path>, config: &Config) -> Result<(), CliError> {
    let loaded = load(input, config)?;
    let matcher = loaded.matcher();
    let reports: Vec<_> = loaded
        .records
        .iter()
        .map(|r| matcher.match_request(&r.request_id, &r.text))
        .collect();
    log::info!("matched {} requests", reports.len());
    write_output(output, &emit_similarity_xml(&reports))
}

struct ClusterOutputs<'a> {
    output: Option<&'a Path>,
    dot: Option<&'a Path>,
    graph_out: Option<&'a Path>,
    distances: Option<&'a Path>,
}

fn cmd_cluster(
    input: &Input,
    weights: &Weights,
    d_max: Option<f64>,
    outputs: ClusterOutputs<'_>,
    config: &Config,
) -> Result<(), CliError> {
    let params = weights.params(config)?;
    let d_max = d_max.or(config.d_max).unwrap_or(DEFAULT_D_MAX);
    if !(d_max > 0.0 && d_max.is_finite()) {
        return Err(usage(format!("d_max must be positive and finite, got {d_max}")));
    }
    let loaded = load(input, config)?;
    let matcher = loaded.matcher();
    let out = pipeline::run(
        &loaded.records,
        &loaded.personal,
        &matcher,
        &params,
        d_max,
        loaded.mode,
    )?;

    write_output(outputs.output, &out.clustering.to_json())?;
    if let Some(p) = outputs.dot {
        write_output(Some(p), &graph_to_dot(&out.graph, Some(&out.clustering)))?;
    }
    if let Some(p) = outputs.graph_out {
        write_output(Some(p), &out.graph.to_json())?;
    }
    if let Some(p) = outputs.distances {
        write_output(Some(p), &out.distances.to_csv())?;
    }

    let mut summary = format!(
        "{} clusters over {} {} (d_max {d_max}, cc_weight {}, ca_weight {}, epsilon {})\n",
        out.clustering.cluster_count(),
        out.profiles.len(),
        loaded.mode,
        params.cc_weight,
        params.ca_weight,
        params.epsilon
    );
    for (k, c) in out.clustering.clusters.iter().enumerate() {
        summary += &format!("cluster {}: mass {:.4}: {}\n", k + 1, c.mass, c.members.join(", "));
    }
    if outputs.output.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    input: &Input,
    weights: &Weights,
    cc_weights: Option<&Vec<f64>>,
    d_max_values: Option<&Vec<f64>>,
    range: (Option<f64>, Option<f64>, Option<usize>),
    output: Option<&Path>,
    config: &Config,
) -> Result<(), CliError> {
    let params = weights.params(config)?;
    let cc_weight_values = cc_weights
        .or(config.cc_weights.as_ref())
        .cloned()
        .unwrap_or_else(|| {
            let mut v = DEFAULT_CC_WEIGHTS.to_vec();
            v[0] = params.epsilon;
            v
        });
    let range_given = range.0.is_some() || range.1.is_some() || range.2.is_some();
    let d_max_values = match d_max_values {
        Some(v) => v.clone(),
        None if range_given => log_range(range, config)?,
        None => match &config.d_max_values {
            Some(v) => v.clone(),
            None => log_range(range, config)?,
        },
    };
    let grid = SweepGrid {
        d_max_values,
        cc_weight_values,
        ca_weight: params.ca_weight,
        epsilon: params.epsilon,
    };
    grid.validate().map_err(usage)?;

    let loaded = load(input, config)?;
    let matcher = loaded.matcher();
    let profiles =
        pipeline::profiles_for_mode(&loaded.records, &loaded.personal, &matcher, loaded.mode);
    let result = run_sweep(&profiles, &loaded.ontology, &grid).map_err(ontoclust::Error::from)?;
    write_output(output, &result.to_csv())?;
    if output.is_some() {
        print!("{}", result.plateau_summary());
    }
    Ok(())
}

fn log_range(
    (min, max, steps): (Option<f64>, Option<f64>, Option<usize>),
    config: &Config,
) -> Result<Vec<f64>, CliError> {
    let low = min.or(config.d_max_min).unwrap_or(1e-4);
    let high = max.or(config.d_max_max).unwrap_or(10.0);
    let steps = steps.or(config.d_max_steps).unwrap_or(50);
    if !(low > 0.0 && high > low && steps >= 2) {
        return Err(usage(format!(
            "d_max range needs 0 < min < max and at least 2 steps, got {low}..{high} in {steps}"
        )));
    }
    Ok(SweepGrid::log_spaced(low, high, steps))
}

fn cmd_export_dot(
    input: &Path,
    clustering: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let text = read_text(input)?;
    let input_error = |path: &Path, e: &dyn std::fmt::Display| CliError::Input {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dot = match artifact_kind(input, &text)?.as_str() {
        "graph" => {
            let graph = WeightedGraph::from_json(&text).map_err(|e| input_error(input, &e))?;
            let clustering = match clustering {
                Some(path) => {
                    let c = read_text(path)?;
                    Some(Clustering::from_json(&c).map_err(|e| input_error(path, &e))?)
                }
                None => None,
            };
            graph_to_dot(&graph, clustering.as_ref())
        }
        "clustering" => {
            if clustering.is_some() {
                return Err(usage("--clustering only applies to a graph artifact"));
            }
            let c = Clustering::from_json(&text).map_err(|e| input_error(input, &e))?;
            clustering_to_dot(&c)
        }
        other => {
            return Err(usage(format!(
                "{}: unknown artifact kind `{other}` (expected graph or clustering)",
                input.display()
            )))
        }
    };
    write_output(output, &dot)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Match { input, output } => cmd_match(input, output.as_deref(), &config),
        Command::Cluster {
            input,
            weights,
            d_max,
            output,
            dot,
            graph_out,
            distances,
        } => cmd_cluster(
            input,
            weights,
            *d_max,
            ClusterOutputs {
                output: output.as_deref(),
                dot: dot.as_deref(),
                graph_out: graph_out.as_deref(),
                distances: distances.as_deref(),
            },
            &config,
        ),
        Command::Sweep {
            input,
            weights,
            cc_weights,
            d_max_values,
            d_max_min,
            d_max_max,
            d_max_steps,
            output,
        } => cmd_sweep(
            input,
            weights,
            cc_weights.as_ref(),
            d_max_values.as_ref(),
            (*d_max_min, *d_max_max, *d_max_steps),
            output.as_deref(),
            &config,
        ),
        Command::ExportDot {
            input,
            clustering,
            output,
        } => cmd_export_dot(input, clustering.as_deref(), output.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
