use std::io::{self, BufRead, Write};
use std::path::Path;

use scm_core::{Engine, IngestReport, RetrievalHit, SleepReport};

const HELP: &str = "commands: :sleep  :stats  :self [question]  :save  :load  :advance <hours>  :quit";

fn print_ingest(out: &mut impl Write, r: &IngestReport) -> io::Result<()> {
    for c in &r.concepts {
        let v = &c.value;
        writeln!(
            out,
            "  + {} ({}) I={:.2} [n={:.2} e={:.2} t={:.2} r={:.2}]{}",
            c.label,
            c.ctype,
            c.importance,
            v.novelty,
            v.emotional,
            v.task,
            v.repetition,
            if c.is_new { "" } else { " (seen)" }
        )?;
    }
    if r.degraded {
        writeln!(out, "  (remote encoder unavailable, used local fallback)")?;
    }
    if let Some(s) = &r.sleep {
        print_sleep(out, s)?;
    }
    Ok(())
}

fn print_hits(out: &mut impl Write, hits: &[RetrievalHit]) -> io::Result<()> {
    let shown: Vec<String> = hits.iter().map(|h| format!("{} ({:.2})", h.label, h.fused_score)).collect();
    writeln!(out, "  recall: {}", shown.join(", "))
}

pub fn print_sleep(out: &mut impl Write, s: &SleepReport) -> io::Result<()> {
    writeln!(
        out,
        "  sleep #{} ({:?}): {} episodes, {} pairs strengthened, {} dreams ({} integrated), theta_f {:.4}, {} forgotten",
        s.cycle,
        s.trigger.reason,
        s.episodes_transferred,
        s.pairs_strengthened,
        s.dreams_attempted,
        s.dreams_integrated,
        s.theta_f,
        s.concepts_forgotten
    )
}

fn meta(engine: &mut Engine, line: &str, snapshot: &Path, out: &mut impl Write) -> io::Result<bool> {
    let mut parts = line.splitn(2, char::is_whitespace);
    let cmd = parts.next().unwrap_or("");
    let arg = parts.next().unwrap_or("").trim();
    let result: Result<(), scm_core::ScmError> = match cmd {
        ":quit" | ":q" | ":exit" => return Ok(false),
        ":help" => {
            writeln!(out, "{HELP}")?;
            Ok(())
        }
        ":sleep" => engine.sleep().map(|s| print_sleep(out, &s).unwrap_or(())),
        ":stats" => {
            let s = engine.stats();
            writeln!(
                out,
                "  concepts {} edges {} wm {}/{} entropy {:.3} conflict {:.3} messages {} sleeps {} dreams {}",
                s.concepts,
                s.edges,
                s.wm_size,
                s.wm_capacity.map(|c| c.to_string()).unwrap_or_else(|| "inf".into()),
                s.entropy,
                s.conflict_density,
                s.counters.messages_processed,
                s.counters.sleep_cycles_completed,
                s.counters.dreams_generated
            )?;
            Ok(())
        }
        ":self" => {
            writeln!(out, "  {}", engine.introspect(arg))?;
            Ok(())
        }
        ":save" => engine.save(snapshot).map(|n| writeln!(out, "  saved {n} bytes to {}", snapshot.display()).unwrap_or(())),
        ":load" => engine
            .reload(snapshot)
            .map(|_| writeln!(out, "  loaded {} concepts", engine.graph().len()).unwrap_or(())),
        ":advance" => match arg.parse::<f64>() {
            Ok(h) if engine.clock().is_simulated() => engine.advance_clock(h).map(drop),
            Ok(_) => Err(scm_core::ScmError::InvalidArgument("clock advance needs SCM_SIMULATED_CLOCK=true".into())),
            Err(_) => Err(scm_core::ScmError::InvalidArgument(format!("expected hours, got '{arg}'"))),
        },
        other => Err(scm_core::ScmError::InvalidArgument(format!("unknown command {other}; {HELP}"))),
    };
    if let Err(e) = result {
        writeln!(out, "  error: {e}")?;
    }
    Ok(true)
}

pub fn run(engine: &mut Engine, snapshot: &Path, input: impl BufRead, mut out: impl Write) -> io::Result<()> {
    writeln!(out, "{HELP}")?;
    write!(out, "> ")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let text = line.trim();
        if text.starts_with(':') {
            if !meta(engine, text, snapshot, &mut out)? {
                break;
            }
        } else if !text.is_empty() {
            match engine.process_message(text) {
                Ok(r) => {
                    print_ingest(&mut out, &r)?;
                    match engine.query(text, 3) {
                        Ok(hits) => print_hits(&mut out, &hits)?,
                        Err(e) => writeln!(out, "  error: {e}")?,
                    }
                }
                Err(e) => writeln!(out, "  error: {e}")?,
            }
        }
        write!(out, "> ")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}
