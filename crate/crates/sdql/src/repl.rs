//! Line-oriented interactive loop over a session.

use std::io::{BufRead, Write};

use sdql_core::pretty::pretty;

use crate::session::Session;

const HELP: &str = "\
  <expr>          evaluate and print the value
  let x = <expr>  bind x for the rest of the session
  ra: / nrc: / la: <query>
                  lower a frontend query, then evaluate it
  :t <expr>       show the type
  :opt <expr>     show the optimized term
  :q              quit";

/// Read one item per line until `:q` or end of input. Errors are reported
/// and the session continues.
pub fn repl(session: &mut Session, input: impl BufRead, out: &mut dyn Write, prompt: bool) -> std::io::Result<()> {
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "sdql> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next() else { break };
        let line = line?;
        let src = line.trim().trim_end_matches(';').trim();
        if src.is_empty() {
            continue;
        }
        if src == ":q" || src == ":quit" {
            break;
        }
        let result = if src == ":help" || src == ":h" {
            writeln!(out, "{HELP}")?;
            Ok(())
        } else if let Some(e) = src.strip_prefix(":t ") {
            session.type_of(e).and_then(|t| Ok(writeln!(out, "{t}")?))
        } else if let Some(e) = src.strip_prefix(":opt ") {
            session.optimized(e).and_then(|o| Ok(writeln!(out, "{}", pretty(&o.expr))?))
        } else if src.starts_with(':') {
            writeln!(out, "error: unknown command `{src}`; try :help")?;
            Ok(())
        } else {
            session.exec(src, out).and_then(|bound| {
                if let Some(n) = bound {
                    if let Some((_, t)) = session.env().get(&n) {
                        writeln!(out, "{n} : {t}")?;
                    }
                }
                Ok(())
            })
        };
        if let Err(e) = result {
            writeln!(out, "error: {e}")?;
        }
    }
    Ok(())
}
