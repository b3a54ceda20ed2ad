//! Batch front end for the `dualapprox` experiments.
//!
//! Every subcommand resolves its parameters from built-in defaults, then an
//! optional `--config` file, then command-line flags. The resolved parameters
//! are hashed, and outputs go to `<out>/<command>-<hash>.csv` and `.json`.

pub mod commands;
pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{Arg, ArgAction, ArgMatches, Command};
use dualapprox::{Error, Result};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    pub switch: bool,
}

const fn opt(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
        switch: false,
    }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        default: "false",
        help,
        switch: true,
    }
}

const MANIFOLD: Key = opt(
    "manifold",
    "veronese",
    "chart: veronese, identity, sphere or paraboloid",
);
const DOMAIN: Key = opt("domain", "", "domain box as lo,hi[,lo,hi]; empty for the chart default");
const THETA: Key = opt(
    "theta",
    "zero",
    "shift: zero, const:<c>, poly:<c0;c1;...> or next-power",
);
const WEIGHTS: Key = opt(
    "v",
    "",
    "comma-separated quasinorm weights summing to n; empty for uniform",
);
const SEED: Key = opt("seed", "20260101", "base seed of the sample streams");

/// Parameters of each subcommand with their defaults.
pub fn command_keys(command: &str) -> Option<Vec<Key>> {
    let n = |d| opt("n", d, "ambient dimension");
    Some(match command {
        "enumerate" => vec![
            n("2"),
            WEIGHTS,
            opt("Q", "4", "height bound"),
            switch("count-only", "print the count instead of listing vectors"),
        ],
        "witness" => vec![
            MANIFOLD,
            n("2"),
            DOMAIN,
            THETA,
            WEIGHTS,
            opt("x", "0.5", "point in the domain, comma-separated"),
            opt("Q", "16", "height bound"),
            opt("tau", "3", "exponent of psi(t) = scale t^-tau"),
            opt("scale", "1", "scale of psi"),
        ],
        "dirichlet" => vec![
            MANIFOLD,
            n("2"),
            DOMAIN,
            WEIGHTS,
            opt("Q", "16", "height bound"),
            opt("delta", "1", "threshold factor"),
            opt("samples", "1000", "number of random points"),
            SEED,
        ],
        "groshev" => vec![
            opt("m", "1", "manifold dimension"),
            n("2"),
            opt("tau", "3", "exponent of psi(t) = t^-tau"),
            opt(
                "beta",
                "",
                "log exponent of psi(t) = t^-tau log(t)^beta; empty for a power law",
            ),
            WEIGHTS,
            opt(
                "s",
                "",
                "Hausdorff exponent of the divergence sum; empty for the convergence sum",
            ),
            switch("critical", "print the critical exponent instead"),
        ],
        "dichotomy" => vec![
            opt("manifold", "identity", MANIFOLD.help),
            n("2"),
            DOMAIN,
            THETA,
            WEIGHTS,
            opt("scale", "0.015625", "scale c of psi(t) = c t^-tau"),
            opt("taus", "1.5,3", "exponents tau"),
            opt("H", "8,16,32,64", "increasing height schedule"),
            opt("samples", "10000", "number of random points"),
            SEED,
        ],
        "good" => vec![
            opt("k", "2", "exponent of g(x) = x^k"),
            opt("lo", "-1", "left end of the interval"),
            opt("hi", "1", "right end of the interval"),
            opt("c", "1", "constant C"),
            opt("alpha", "", "exponent alpha; empty for 1/k"),
            opt(
                "eps",
                "0.5,0.25,0.125,0.0625,0.03125,0.015625,0.0078125",
                "thresholds epsilon",
            ),
            opt("resolution", "65536", "grid cells"),
        ],
        "nice" => vec![
            MANIFOLD,
            n("2"),
            DOMAIN,
            WEIGHTS,
            opt("deltas", "0.05,0.1,0.2", "threshold factors delta"),
            opt("Q", "4,8,16,32", "increasing Q schedule"),
            opt("c", "1", "constant of the bound C delta"),
            opt("samples", "4000", "number of random points"),
            SEED,
        ],
        "bkm" => vec![
            MANIFOLD,
            n("2"),
            opt("domain", "-1,1", DOMAIN.help),
            THETA,
            opt("center", "0.1", "ball centre, comma-separated"),
            opt("radius", "0.25", "ball half-width"),
            opt("a", "3,1", "integer vector a"),
            opt("delta", "0.01", "threshold delta"),
            opt("resolution", "4096", "grid cells per axis"),
            switch("no-threshold", "drop the gradient condition"),
        ],
        "transfer" => vec![
            MANIFOLD,
            n("2"),
            opt("domain", "-1,1", DOMAIN.help),
            opt("theta", "next-power", THETA.help),
            opt("delta", "0.24", "exponent delta in [0, 1/4)"),
            opt("t-min", "2", "smallest |t|"),
            opt("t-max", "6", "largest |t|"),
            opt("trials", "20000", "construction attempts"),
            SEED,
        ],
        "ubiquity" => vec![
            opt("example", "veronese", "surface: veronese, sphere or liouville"),
            opt("t", "", "dyadic level; empty for the example default"),
            opt("centers", "1", "test-ball centres on the surface"),
        ],
        "dimension" => vec![
            MANIFOLD,
            n("2"),
            opt("domain", "0,1", DOMAIN.help),
            opt("tau", "5", "exponent of psi(t) = t^-tau"),
            opt("exponents", "1,2,3,4,5,6", "truncation heights H = 2^k"),
            opt(
                "control",
                "2,3,4,5,6,7,8,9,10",
                "box scales 2^-k of the full-domain control",
            ),
        ],
        _ => return None,
    })
}

pub const COMMANDS: [&str; 11] = [
    "enumerate",
    "witness",
    "dirichlet",
    "groshev",
    "dichotomy",
    "good",
    "nice",
    "bkm",
    "transfer",
    "ubiquity",
    "dimension",
];

fn cli() -> Command {
    let common = [
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("key = value file of parameters"),
        Arg::new("out")
            .long("out")
            .value_name("DIR")
            .help("output directory [default: .]"),
        Arg::new("workers")
            .long("workers")
            .value_name("N")
            .help("worker threads; 0 for all cores [default: 0]"),
    ];
    let mut cmd = Command::new("dualapprox")
        .version(VERSION)
        .about("Experiments in inhomogeneous dual Diophantine approximation on manifolds")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for name in COMMANDS {
        let mut sub = Command::new(name).args(common.clone());
        for key in command_keys(name).unwrap() {
            let arg = Arg::new(key.name).long(key.name).help(key.help);
            sub = sub.arg(if key.switch {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name("VALUE").default_value(key.default)
            });
        }
        cmd = cmd.subcommand(sub);
    }
    cmd
}

/// Resolved parameters of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolved {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub out: PathBuf,
    pub workers: usize,
}

impl Resolved {
    /// Canonical text: `command = …` followed by the parameters in key order.
    pub fn canonical(&self) -> String {
        format!("command = {}\n{}", self.command, config::render(&self.params))
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

fn resolve(command: &str, m: &ArgMatches) -> Result<Resolved> {
    let keys = command_keys(command).expect("known command");
    let mut params: BTreeMap<String, String> = keys
        .iter()
        .map(|k| (k.name.to_string(), k.default.to_string()))
        .collect();
    let mut out = ".".to_string();
    let mut workers = "0".to_string();

    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {path}: {e}")))?;
        for e in config::parse(&text)? {
            let at = |message: String| Error::Parse {
                line: e.line,
                column: e.column,
                message,
            };
            match e.key.as_str() {
                "command" if e.value == command => {}
                "command" => return Err(at(format!("config is for `{}`, not `{command}`", e.value))),
                "out" => out = e.value,
                "workers" => workers = e.value,
                k if params.contains_key(k) => {
                    params.insert(e.key, e.value);
                }
                k => return Err(at(format!("unknown key `{k}` for `{command}`"))),
            }
        }
    }
    for key in &keys {
        if m.value_source(key.name) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = if key.switch {
            "true".to_string()
        } else {
            m.get_one::<String>(key.name).cloned().unwrap_or_default()
        };
        params.insert(key.name.to_string(), value);
    }
    if let Some(o) = m.get_one::<String>("out") {
        out = o.clone();
    }
    if let Some(w) = m.get_one::<String>("workers") {
        workers = w.clone();
    }
    let workers = workers
        .trim()
        .parse()
        .map_err(|_| Error::Input(format!("workers must be a non-negative integer, got `{workers}`")))?;
    Ok(Resolved {
        command: command.to_string(),
        params,
        out: PathBuf::from(out),
        workers,
    })
}

/// What a command produced: file bodies and the lines printed after the
/// config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub json: serde_json::Value,
    pub summary: Vec<String>,
}

/// Paths of the written files.
pub fn output_paths(resolved: &Resolved) -> (PathBuf, PathBuf) {
    let stem = format!("{}-{}", resolved.command, &resolved.hash()[..16]);
    (
        resolved.out.join(format!("{stem}.csv")),
        resolved.out.join(format!("{stem}.json")),
    )
}

fn execute(resolved: &Resolved, stdout: &mut dyn Write) -> Result<()> {
    let hash = resolved.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.workers)
        .build()
        .map_err(|e| Error::Capacity(format!("cannot start worker pool: {e}")))?;
    let comment = format!("dualapprox {VERSION} config {hash}");
    let output = pool.install(|| commands::run(&resolved.command, &resolved.params, &comment))?;

    let json = serde_json::json!({
        "tool": "dualapprox",
        "version": VERSION,
        "command": resolved.command,
        "config_hash": hash,
        "config": resolved.params,
        "result": output.json,
    });
    let (csv_path, json_path) = output_paths(resolved);
    let io = |e: std::io::Error| Error::Input(format!("cannot write outputs under {}: {e}", resolved.out.display()));
    std::fs::create_dir_all(&resolved.out).map_err(io)?;
    std::fs::write(&csv_path, &output.csv).map_err(io)?;
    let mut body = serde_json::to_string_pretty(&json).expect("json serializes");
    body.push('\n');
    std::fs::write(&json_path, body).map_err(io)?;

    let mut echo = resolved.canonical();
    echo.push_str(&format!("# config hash {hash}\n"));
    let _ = stdout.write_all(echo.as_bytes());
    for line in &output.summary {
        let _ = writeln!(stdout, "{line}");
    }
    let _ = writeln!(stdout, "wrote {}", csv_path.display());
    let _ = writeln!(stdout, "wrote {}", json_path.display());
    Ok(())
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Input(_) | Error::Domain(_) | Error::Parse { .. } | Error::Precondition(_) => EXIT_INPUT,
        Error::Capacity(_) => EXIT_CAPACITY,
        _ => EXIT_FAILURE,
    }
}

/// Runs the tool on `argv` (including the program name) and returns the exit
/// status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    let (command, sub) = matches.subcommand().expect("subcommand is required");
    let result = resolve(command, sub).and_then(|r| execute(&r, stdout));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
