//! `widget`: check, run and generate Widget programs.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use widget_core::diag::Diagnostic;
use widget_core::externals::provider::DEFAULT_RANGE;
use widget_core::harness::server::serve;
use widget_core::harness::{parse_script, run_script, HarnessError, RunOptions, Step, Trace};
use widget_core::modelgen::{generate, load_model};
use widget_core::syntax::{parse_program, Program};
use widget_core::typecheck::check_runnable;

#[derive(Parser)]
#[command(name = "widget", version, about = "Type-check, run and generate Widget programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Type-checks a program and reports unhandled events.
    Check { file: PathBuf },
    /// Runs a program against a script or a remote display.
    Run {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Backend::Headless)]
        backend: Backend,
        /// Script of steps; required for the headless backend. For the
        /// remote backend, steps delivered before client input.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Writes the displayed frames as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Port the remote backend listens on.
        #[arg(long)]
        port: Option<u16>,
        /// Distance at which the provider announces a peer.
        #[arg(long, default_value_t = DEFAULT_RANGE)]
        range: i64,
        /// Directory holding database files.
        #[arg(long, default_value = ".")]
        data_dir: PathBuf,
    },
    /// Generates a program skeleton from a model.
    Gen {
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Headless,
    Remote,
}

/// Why a command did not succeed.
enum Failure {
    /// Problems with the input; exit code 1.
    Diagnostics(Vec<String>),
    /// Bad invocation; exit code 2.
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { file } => check(&file),
        Command::Run { file, backend, script, trace, port, range, data_dir } => {
            run(&file, backend, script.as_deref(), trace.as_deref(), port, RunOptions { data_dir, range })
        }
        Command::Gen { model, output } => gen(&model, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(lines)) => {
            for l in lines {
                eprintln!("{l}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Diagnostics(vec![format!("{}: {e}", path.display())]))
}

fn render(file: &Path, diags: &[Diagnostic]) -> Failure {
    let name = file.display().to_string();
    Failure::Diagnostics(diags.iter().map(|d| d.render(&name)).collect())
}

fn load_program(file: &Path) -> Result<Program, Failure> {
    let text = read(file)?;
    parse_program(&text).map_err(|e| render(file, &[e.into()]))
}

fn check(file: &Path) -> Result<(), Failure> {
    let p = load_program(file)?;
    let diags = check_runnable(&p);
    if !diags.is_empty() {
        return Err(render(file, &diags));
    }
    println!("{}: ok", file.display());
    Ok(())
}

fn load_script(path: &Path) -> Result<Vec<Step>, Failure> {
    let text = read(path)?;
    parse_script(&text).map_err(|e| Failure::Diagnostics(vec![format!("{}: {e}", path.display())]))
}

fn harness_failure(file: &Path, e: HarnessError) -> Failure {
    match e {
        HarnessError::Check(diags) => render(file, &diags),
        other => Failure::Diagnostics(vec![format!("{}: {other}", file.display())]),
    }
}

fn write_trace(trace: &Trace, out: Option<&Path>) -> Result<(), Failure> {
    for frame in &trace.frames {
        println!("{}", serde_json::to_string(frame).expect("frames serialize"));
    }
    if let Some(path) = out {
        let text = serde_json::to_string_pretty(trace).expect("traces serialize");
        std::fs::write(path, text).map_err(|e| Failure::Diagnostics(vec![format!("{}: {e}", path.display())]))?;
    }
    Ok(())
}

fn run(
    file: &Path,
    backend: Backend,
    script: Option<&Path>,
    trace_out: Option<&Path>,
    port: Option<u16>,
    opts: RunOptions,
) -> Result<(), Failure> {
    match backend {
        Backend::Headless => {
            let script = script.ok_or_else(|| Failure::Usage("the headless backend needs --script".into()))?;
            let steps = load_script(script)?;
            let p = load_program(file)?;
            let trace = run_script(&p, &steps, &opts).map_err(|e| harness_failure(file, e))?;
            write_trace(&trace, trace_out)
        }
        Backend::Remote => {
            let port = port.ok_or_else(|| Failure::Usage("the remote backend needs --port".into()))?;
            let side = match script {
                Some(s) => load_script(s)?,
                None => Vec::new(),
            };
            let p = load_program(file)?;
            let listener = TcpListener::bind(("127.0.0.1", port))
                .map_err(|e| Failure::Diagnostics(vec![format!("cannot listen on port {port}: {e}")]))?;
            eprintln!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
            let trace = serve(&listener, &p, &opts, &side).map_err(|e| harness_failure(file, e))?;
            write_trace(&trace, trace_out)
        }
    }
}

fn gen(model: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let name = model.display().to_string();
    let prefix = |e: widget_core::modelgen::ModelError| {
        Failure::Diagnostics(e.messages.iter().map(|m| format!("{name}: {m}")).collect())
    };
    let m = load_model(model).map_err(prefix)?;
    let source = generate(&m).map_err(prefix)?;
    match output {
        Some(path) => std::fs::write(path, source.text())
            .map_err(|e| Failure::Diagnostics(vec![format!("{}: {e}", path.display())])),
        None => {
            print!("{}", source.text());
            Ok(())
        }
    }
}
