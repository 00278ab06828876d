mod chat;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use scm_core::bench::{self, CsvRow, GrowthPlan, ImportantSource};
use scm_core::{Engine, EngineConfig, ScmError, Settings};

#[derive(Parser, Debug)]
#[command(name = "scm", version, about = "Sleep-consolidated memory: chat, serve and benchmark")]
struct Cli {
    /// Override the engine's random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Interactive session on standard input.
    Chat {
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
        /// Seconds between background sleep-trigger checks; 0 disables them.
        #[arg(long, default_value_t = 60)]
        tick_secs: u64,
    },
    /// Run the pass/fail benchmark suite.
    Bench {
        #[arg(long, default_value = "all", value_parser = suite_names())]
        suite: String,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Include wall-clock latency in the CSV (not reproducible).
        #[arg(long)]
        timings: bool,
    },
    /// Compare memory systems on the shared evaluation scenario.
    Baseline {
        #[arg(long, default_value = "all", value_parser = with_all(&bench::BACKENDS))]
        backend: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Disable one engine component and rerun the evaluation scenario.
    Ablate {
        #[arg(long, default_value = "all", value_parser = with_all(&bench::COMPONENTS))]
        disable: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Memory growth over repeated wake/sleep cycles.
    Growth {
        #[arg(long, default_value_t = 20)]
        cycles: usize,
        #[arg(long, default_value = "both", value_parser = ["on", "off", "both"])]
        forgetting: String,
        /// Whether each cycle restates the same important fact or a new one.
        #[arg(long, default_value = "repeated", value_parser = ["repeated", "fresh"])]
        important: String,
        #[arg(long, default_value_t = 336.0)]
        aging_hours: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Process one message against a snapshot file, creating it if needed.
    Ingest {
        text: String,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Read-only retrieval against a snapshot file.
    Query {
        text: String,
        #[arg(long)]
        snapshot: Option<PathBuf>,
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
}

fn suite_names() -> Vec<&'static str> {
    with_all(&bench::TESTS)
}

fn with_all(names: &[&'static str]) -> Vec<&'static str> {
    std::iter::once("all").chain(names.iter().copied()).collect()
}

fn selected<'a>(choice: &'a str, all: &[&'a str]) -> Vec<&'a str> {
    if choice == "all" {
        all.to_vec()
    } else {
        vec![choice]
    }
}

fn bench_config(seed: Option<u64>) -> EngineConfig {
    let mut cfg = EngineConfig::default();
    if let Some(s) = seed {
        cfg.rng_seed = s;
    }
    cfg
}

fn open_engine(settings: &Settings, path: &Path, seed: Option<u64>, create: bool) -> scm_core::Result<Engine> {
    if path.exists() || !create {
        return Engine::load(path, settings.clock(), settings.encoder());
    }
    let mut cfg = bench_config(seed);
    cfg.embedding_dim = settings.embedding_dim;
    let mut b = Engine::builder(cfg).clock(settings.clock()).encoder(settings.encoder());
    if let Some(p) = &settings.audit_log_path {
        b = b.audit_log(p.clone());
    }
    b.build()
}

fn write_rows(path: Option<&Path>, rows: &[CsvRow]) -> scm_core::Result<()> {
    if let Some(p) = path {
        bench::write_csv(BufWriter::new(File::create(p)?), rows)?;
    }
    Ok(())
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn run(cli: Cli) -> scm_core::Result<bool> {
    let seed = cli.seed;
    match cli.command {
        Command::Chat { snapshot } => {
            let settings = Settings::from_env()?;
            let path = snapshot.unwrap_or_else(|| settings.snapshot_path.clone());
            let mut engine = open_engine(&settings, &path, seed, true)?;
            chat::run(&mut engine, &path, io::stdin().lock(), io::stdout().lock())?;
            Ok(true)
        }
        Command::Serve { port, snapshot, cors_origin, tick_secs } => {
            let settings = Settings::from_env()?;
            let path = snapshot.unwrap_or_else(|| settings.snapshot_path.clone());
            let engine = open_engine(&settings, &path, seed, true)?;
            let opts = scm_service::ServeOptions {
                port: port.unwrap_or(settings.port),
                snapshot_path: path,
                cors_origin,
                tick_interval: (tick_secs > 0).then(|| Duration::from_secs(tick_secs)),
            };
            let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            rt.block_on(scm_service::serve(engine, opts))?;
            Ok(true)
        }
        Command::Bench { suite, runs, csv, timings } => {
            if runs == 0 {
                return Err(ScmError::InvalidArgument("runs must be at least 1".into()));
            }
            let cfg = bench_config(seed);
            let tests = selected(&suite, &bench::TESTS);
            let mut rows = Vec::new();
            let mut all_ok = true;
            for run in 1..=runs {
                let mut outcomes = Vec::new();
                for t in &tests {
                    let o = bench::run_test(t, &cfg)?;
                    rows.push(CsvRow::from_test(&o, run, timings));
                    outcomes.push(o);
                }
                all_ok &= outcomes.iter().all(|o| o.passed);
                if run == 1 {
                    print!("{}", bench::format_table(&outcomes));
                } else {
                    let n = outcomes.iter().filter(|o| o.passed).count();
                    println!("run {run}: {n}/{} tests passing", outcomes.len());
                }
            }
            write_rows(csv.as_deref(), &rows)?;
            Ok(all_ok)
        }
        Command::Baseline { backend, csv } => {
            let cfg = bench_config(seed);
            let full = bench::run_baseline("full", &cfg)?;
            let mut rows = Vec::new();
            let mut all_ok = true;
            println!("{:<10} {:>8} {:>8} {:>8}  check", "system", "recall", "ltm", "noise");
            for kind in selected(&backend, &bench::BACKENDS) {
                let o = if kind == "full" { full.clone() } else { bench::run_baseline(kind, &cfg)? };
                let c = bench::baseline_check(&o, &full);
                all_ok &= c.passed;
                println!(
                    "{:<10} {:>8} {:>8} {:>8}  {} {}",
                    o.system,
                    format!("{}/{}", o.recalled, o.probes),
                    o.ltm_size,
                    format!("{}/{}", o.noise_retained, o.noise_total),
                    mark(c.passed),
                    c.detail
                );
                rows.extend(CsvRow::from_eval("baseline", &o, 1));
            }
            write_rows(csv.as_deref(), &rows)?;
            Ok(all_ok)
        }
        Command::Ablate { disable, csv } => {
            let cfg = bench_config(seed);
            let full = bench::run_baseline("full", &cfg)?;
            let mut rows = CsvRow::from_eval("ablate", &full, 1);
            let mut all_ok = true;
            println!("{:<12} {:>8} {:>8} {:>8}  check", "system", "recall", "ltm", "noise");
            println!(
                "{:<12} {:>8} {:>8} {:>8}",
                "full",
                format!("{}/{}", full.recalled, full.probes),
                full.ltm_size,
                format!("{}/{}", full.noise_retained, full.noise_total)
            );
            for comp in selected(&disable, &bench::COMPONENTS) {
                let o = bench::run_ablation(comp, &cfg)?;
                let c = bench::ablation_check(comp, &o, &full);
                all_ok &= c.passed;
                println!(
                    "{:<12} {:>8} {:>8} {:>8}  {} {}",
                    o.system,
                    format!("{}/{}", o.recalled, o.probes),
                    o.ltm_size,
                    format!("{}/{}", o.noise_retained, o.noise_total),
                    mark(c.passed),
                    c.detail
                );
                rows.extend(CsvRow::from_eval("ablate", &o, 1));
            }
            write_rows(csv.as_deref(), &rows)?;
            Ok(all_ok)
        }
        Command::Growth { cycles, forgetting, important, aging_hours, csv } => {
            let cfg = bench_config(seed);
            let modes: Vec<bool> = match forgetting.as_str() {
                "on" => vec![true],
                "off" => vec![false],
                _ => vec![false, true],
            };
            let mut rows = Vec::new();
            let mut all_ok = true;
            for f in modes {
                let mut plan = GrowthPlan::new(cycles, f);
                plan.aging_hours = aging_hours;
                plan.important =
                    if important == "fresh" { ImportantSource::Fresh } else { ImportantSource::Repeated };
                let series = bench::run_growth(&plan, &cfg)?;
                let c = bench::growth_check(&series, f);
                all_ok &= c.passed;
                let shown: Vec<String> = series.iter().map(|n| n.to_string()).collect();
                println!("forgetting {}: {}", if f { "on " } else { "off" }, shown.join(" "));
                println!("  {} {}", mark(c.passed), c.detail);
                rows.extend(CsvRow::from_growth(f, &series));
            }
            write_rows(csv.as_deref(), &rows)?;
            Ok(all_ok)
        }
        Command::Ingest { text, snapshot, json } => {
            let settings = Settings::from_env()?;
            let path = snapshot.unwrap_or_else(|| settings.snapshot_path.clone());
            let mut engine = open_engine(&settings, &path, seed, true)?;
            let report = engine.process_message(&text)?;
            engine.save(&path)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report).map_err(io::Error::other)?);
            } else {
                for c in &report.concepts {
                    println!("{} ({}) importance {:.3}", c.label, c.ctype, c.importance);
                }
            }
            Ok(true)
        }
        Command::Query { text, snapshot, k, json } => {
            let settings = Settings::from_env()?;
            let path = snapshot.unwrap_or_else(|| settings.snapshot_path.clone());
            let engine = open_engine(&settings, &path, seed, false)?;
            let hits = engine.peek(&text, k)?;
            if json {
                let items: Vec<serde_json::Value> = hits
                    .iter()
                    .map(|h| serde_json::json!({ "hit": h, "concept": engine.graph().get(&h.concept_id) }))
                    .collect();
                println!("{}", serde_json::to_string_pretty(&items).map_err(io::Error::other)?);
            } else {
                for h in &hits {
                    println!(
                        "{:.3}  {}  (semantic {:.3}, importance {:.3}, graph {:.1})",
                        h.fused_score, h.label, h.semantic, h.importance, h.graph_proximity
                    );
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_level = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default_level)),
        )
        .with_writer(io::stderr)
        .init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::error::ErrorKind;

    use super::*;

    #[test]
    fn parses_documented_commands() {
        for args in [
            vec!["scm", "bench", "--suite", "all", "--runs", "5", "--csv", "out.csv"],
            vec!["scm", "baseline", "--backend", "fifo"],
            vec!["scm", "ablate", "--disable", "forget"],
            vec!["scm", "growth", "--cycles", "20", "--forgetting", "on"],
            vec!["scm", "chat"],
            vec!["scm", "serve", "--port", "9000"],
        ] {
            Cli::try_parse_from(&args).unwrap_or_else(|e| panic!("{args:?}: {e}"));
        }
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        let err = Cli::try_parse_from(["scm", "bench", "--bogus"]).unwrap_err();
        assert_eq!(err.kind(), ErrorKind::UnknownArgument);
        assert_eq!(err.exit_code(), 2);
        let err = Cli::try_parse_from(["scm", "bench", "--suite", "nope"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn chat_sleeps_on_empty_memory() {
        let mut cfg = EngineConfig::default();
        cfg.auto_sleep = false;
        let mut engine = Engine::new(cfg, scm_core::Clock::simulated()).unwrap();
        let mut out = Vec::new();
        let input = ":sleep\nI live in Mumbai\n:advance 2\n:stats\n:quit\n";
        chat::run(&mut engine, Path::new("unused.json"), input.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("sleep #1"), "{text}");
        assert!(text.contains("+ Mumbai (location)"), "{text}");
        assert!(text.contains("recall: Mumbai"), "{text}");
        assert!(text.contains("messages 1 sleeps 1"), "{text}");
    }
}
