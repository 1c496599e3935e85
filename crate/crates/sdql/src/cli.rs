//! Command-line arguments and the top-level driver.

use std::io::{IsTerminal, Read};
use std::path::PathBuf;

use clap::Parser;
use sdql_core::front::RelLayout;
use sdql_core::opt::RewriteConfig;
use sdql_core::Name;

use crate::io::LoadSpec;
use crate::repl::repl;
use crate::session::{Flags, Session, SessionConfig, SessionError, Stage};

#[derive(Debug, Parser)]
#[command(name = "sdql", version, about = "Evaluate semi-ring dictionary programs")]
pub struct Cli {
    /// Program file (`-` for standard input). Without one the REPL starts.
    pub program: Option<PathBuf>,
    /// Program text to run instead of a file.
    #[arg(short = 'e', long = "eval", value_name = "PROGRAM", conflicts_with = "program")]
    pub eval: Option<String>,
    /// Bind NAME to data loaded from PATH.
    #[arg(long = "load", value_name = "NAME=PATH:FORMAT[:SCHEMA]")]
    pub load: Vec<LoadSpec>,
    /// Comma-separated rewrite rules, `all` or `none`.
    #[arg(long, value_name = "RULES", default_value = "none")]
    pub rules: String,
    /// Print types instead of values.
    #[arg(long)]
    pub typecheck: bool,
    /// Print each term before it is evaluated.
    #[arg(long)]
    pub emit_ast: bool,
    /// Evaluate by small steps, printing every reduct.
    #[arg(long)]
    pub trace_steps: bool,
    /// Print evaluation counters after each value.
    #[arg(long)]
    pub metrics: bool,
    /// Print each rewrite the optimizer applies.
    #[arg(long)]
    pub explain: bool,
    /// Store a loaded binding in another layout (dict, set, row, columnar,
    /// factorized(a,b,..), flat, curried).
    #[arg(long = "layout", value_name = "NAME=LAYOUT")]
    pub layout: Vec<String>,
    /// Start the REPL after running the program.
    #[arg(long)]
    pub repl: bool,
}

impl Cli {
    pub fn config(&self) -> Result<SessionConfig, SessionError> {
        let usage = |m: String| SessionError::new(Stage::Usage, m);
        let rules = RewriteConfig::parse_list(&self.rules).map_err(usage)?;
        let layouts = self
            .layout
            .iter()
            .map(|s| {
                let (n, l) = s.split_once('=').ok_or_else(|| usage(format!("expected NAME=LAYOUT, found `{s}`")))?;
                let l: RelLayout = l.trim().parse().map_err(|e: sdql_core::front::FrontendError| usage(e.msg))?;
                Ok((Name::from(n.trim()), l))
            })
            .collect::<Result<Vec<_>, SessionError>>()?;
        let flags = Flags {
            typecheck_only: self.typecheck,
            emit_ast: self.emit_ast,
            trace_steps: self.trace_steps,
            metrics: self.metrics,
            explain: self.explain,
        };
        Ok(SessionConfig { loads: self.load.clone(), layouts, rules, flags })
    }

    fn program_text(&self) -> Result<Option<String>, SessionError> {
        if let Some(src) = &self.eval {
            return Ok(Some(src.clone()));
        }
        let Some(path) = &self.program else { return Ok(None) };
        let read = if path.as_os_str() == "-" {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map(|_| s)
        } else {
            std::fs::read_to_string(path)
        };
        read.map(Some).map_err(|e| SessionError::new(Stage::Io, format!("{}: {e}", path.display())))
    }
}

/// Run the parsed command line; returns the exit status.
pub fn run(cli: &Cli) -> i32 {
    let result = (|| -> Result<(), SessionError> {
        let mut session = Session::new(cli.config()?)?;
        let program = cli.program_text()?;
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        if let Some(src) = &program {
            session.run_program(src, &mut out)?;
        }
        if program.is_none() || cli.repl {
            let stdin = std::io::stdin();
            let prompt = stdin.is_terminal();
            repl(&mut session, stdin.lock(), &mut out, prompt)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("sdql: {e}");
            e.stage.exit_code()
        }
    }
}

pub fn main() -> i32 {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { Stage::Usage.exit_code() } else { 0 };
            let _ = e.print();
            code
        }
    }
}
