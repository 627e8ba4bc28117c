//! `drillboards`: ingest tables, replay merge scripts into boards, validate,
//! export views, fuzz view invariants, and serve the HTTP API.
//!
//! Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use drillboards_core::aggregation::check_policy;
use drillboards_core::document::{load_document_from_path, save_document, DrillboardDocument};
use drillboards_core::fuzz::fuzz_views;
use drillboards_core::hierarchy::validate_view;
use drillboards_core::ingest::{parse_table, DataTable, TableFormat};
use drillboards_core::render::{flatten_content, view_cards};
use drillboards_core::script::{build_document, MergeScript};
use drillboards_server::{serve, webui_dir_from_env, Store};

#[derive(Parser)]
#[command(name = "drillboards", version, about = "Build, check and serve drill-down dashboards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Spec,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a CSV/TSV file into a table JSON file.
    Ingest {
        input: PathBuf,
        /// Tab-separated input.
        #[arg(long)]
        tsv: bool,
        /// Header rows; all but the last carry group labels.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        header_rows: u16,
        /// Table id (defaults to the file stem).
        #[arg(long)]
        id: Option<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Replay a merge script over a table and save the board.
    Build {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a board: integrity, every saved view, and the re-merge policy.
    Validate { board: PathBuf },
    /// Flatten the cards of one view.
    Export {
        board: PathBuf,
        #[arg(long)]
        view: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: ExportFormat,
        /// Write here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Random drill/roll/jump walk that checks view invariants at every step.
    Fuzz {
        board: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        ops: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Serve the board over HTTP.
    Serve {
        board: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        /// Reject author mutations.
        #[arg(long)]
        read_only: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn load_board(path: &Path) -> Result<DrillboardDocument> {
    load_document_from_path(path).with_context(|| format!("loading {}", path.display()))
}

fn ingest(input: &Path, tsv: bool, header_rows: usize, id: Option<String>, output: &Path) -> Result<()> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let id = id.unwrap_or_else(|| {
        input
            .file_stem()
            .map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned())
    });
    let format = if tsv { TableFormat::Tsv } else { TableFormat::Csv };
    let table = parse_table(&id, &bytes, format, header_rows)?;
    let mut json = serde_json::to_vec_pretty(&table)?;
    json.push(b'\n');
    write_out(Some(output), &json)?;
    eprintln!(
        "ingested {} features over {} keys",
        table.features.len(),
        table.keys().len()
    );
    Ok(())
}

fn build(table: &Path, script: &Path, output: &Path) -> Result<()> {
    let table: DataTable = read_json(table)?;
    table
        .validate()
        .map_err(|e| anyhow::anyhow!("invalid table: {e}"))?;
    let script: MergeScript = read_json(script)?;
    let doc = build_document(table, &script)?;
    write_out(Some(output), &save_document(&doc))?;
    eprintln!(
        "built `{}`: {} nodes, {} roots, views {}",
        doc.id,
        doc.hierarchy.len(),
        doc.hierarchy.roots().len(),
        doc.view_labels().join(", ")
    );
    Ok(())
}

/// Returns the problems found; loading failures are problems too.
fn validate(path: &Path) -> Vec<String> {
    let doc = match load_board(path) {
        Ok(d) => d,
        Err(e) => return vec![format!("{e:#}")],
    };
    let mut problems = Vec::new();
    for label in doc.view_labels() {
        match doc.resolve_view(&label) {
            Ok(v) => problems.extend(
                validate_view(&doc.hierarchy, &v)
                    .into_iter()
                    .map(|violation| format!("view `{label}`: {violation}")),
            ),
            Err(e) => problems.push(format!("view `{label}`: {e}")),
        }
    }
    problems.extend(check_policy(&doc.hierarchy, &doc.layout.aggregation));
    problems
}

fn export(path: &Path, label: &str, format: ExportFormat, output: Option<&Path>) -> Result<()> {
    let doc = load_board(path)?;
    let view = doc.resolve_view(label)?;
    let cards = view_cards(&doc.hierarchy, &view);
    let bytes = match format {
        ExportFormat::Spec => {
            let mut b = serde_json::to_vec_pretty(&cards)?;
            b.push(b'\n');
            b
        }
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            w.write_record(["card", "series", "x", "y", "y2"])?;
            let num = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            for card in &cards {
                let mut rows = Vec::new();
                flatten_content(&card.content, &mut rows);
                for r in rows {
                    w.write_record([card.id.as_str(), &r.series, &r.x, &num(r.y), &num(r.y2)])?;
                }
            }
            w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?
        }
    };
    write_out(output, &bytes)
}

fn fuzz(path: &Path, ops: usize, seed: u64) -> Result<bool> {
    let doc = load_board(path)?;
    let saved: Vec<_> = doc.views.iter().map(|v| v.view.clone()).collect();
    match fuzz_views(&doc.hierarchy, &saved, ops, seed) {
        Ok(report) => {
            let sizes: Vec<String> = report.trajectory.iter().map(usize::to_string).collect();
            println!("seed {seed} ops {ops}");
            println!(
                "drills {} rolls {} jumps {}",
                report.drills, report.rolls, report.jumps
            );
            println!("trajectory {}", sizes.join(" "));
            Ok(true)
        }
        Err(failure) => {
            eprintln!("invariant violated at {failure}");
            Ok(false)
        }
    }
}

async fn run_server(path: &Path, host: IpAddr, port: u16, read_only: bool) -> Result<()> {
    let mut doc = load_board(path)?;
    doc.read_only |= read_only;
    let persist = (!doc.read_only).then(|| path.to_path_buf());
    let store = Store::default();
    store.insert(doc, persist)?;
    let addr = SocketAddr::new(host, port);
    eprintln!("serving {} on http://{addr}", path.display());
    serve(Arc::new(store), addr, webui_dir_from_env()).await?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Ingest {
            input,
            tsv,
            header_rows,
            id,
            output,
        } => ingest(&input, tsv, header_rows.into(), id, &output)?,
        Command::Build {
            table,
            script,
            output,
        } => build(&table, &script, &output)?,
        Command::Validate { board } => {
            let problems = validate(&board);
            if !problems.is_empty() {
                for p in &problems {
                    eprintln!("{p}");
                }
                return Ok(ExitCode::from(1));
            }
            println!("ok");
        }
        Command::Export {
            board,
            view,
            format,
            output,
        } => export(&board, &view, format, output.as_deref())?,
        Command::Fuzz { board, ops, seed } => {
            if !fuzz(&board, ops, seed)? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Serve {
            board,
            port,
            host,
            read_only,
        } => {
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(run_server(&board, host, port, read_only))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    })
}
