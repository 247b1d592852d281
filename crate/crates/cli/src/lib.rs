//! Command-line front end: builds the clap tree from the experiment
//! registry, merges config files, runs and writes results.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod params;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};

use clap::{Arg, ArgAction, ArgMatches, Command};

use config::ExperimentConfig;
use error::CliError;
use output::{json_document, write_csv, write_json, Format};
use params::{Experiment, Params};

const ROOT_ABOUT: &str = "Numerical checks around Liouville-type theorems for periodic and almost periodic \
parabolic equations";

const ROOT_LONG_ABOUT: &str = "Numerical checks around Liouville-type theorems for periodic and almost \
periodic parabolic equations.

verify and counterexample check, in exact or certified arithmetic, the estimates behind an explicit \
bounded non-constant solution u₂ of u'' + b u' = 0 whose drift b is limit periodic. ap looks at the \
almost periods of b and u₂. eigen computes the periodic principal eigenvalue λ_p. entire evolves \
periodic and almost periodic parabolic problems and checks that bounded entire solutions are unique \
and inherit the structure of the forcing when λ_p > 0.

Exit status: 0 all checks passed, 1 a check failed, 2 bad usage or config, 3 numerical failure.";

fn group_about(group: &str) -> &'static str {
    match group {
        "verify" => "Exact checks of the inequalities behind the counterexample",
        "counterexample" => "The bounded non-constant solution u₂",
        "ap" => "Almost periods of b and u₂",
        "eigen" => "Periodic principal eigenvalue",
        "entire" => "Bounded entire solutions of parabolic problems",
        _ => "",
    }
}

fn experiment_command(e: &Experiment) -> Command {
    Command::new(e.name)
        .about(e.about)
        .long_about(e.long_about)
        .args(e.params.iter().map(|p| p.arg()))
}

pub fn command(registry: &[Experiment]) -> Command {
    let mut root = Command::new("liouville")
        .version(clap::crate_version!())
        .about(ROOT_ABOUT)
        .long_about(ROOT_LONG_ABOUT)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .help("key = value file; its experiment line selects the subcommand when none is given"),
        )
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_parser(["json", "csv"])
                .default_value("json")
                .help("output format"),
        )
        .arg(
            Arg::new("output")
                .long("output")
                .short('o')
                .global(true)
                .help("write data here instead of stdout"),
        )
        .arg(
            Arg::new("no-timestamp")
                .long("no-timestamp")
                .global(true)
                .action(ArgAction::SetTrue)
                .help("omit the timestamp so output is byte-reproducible"),
        );
    let mut groups: Vec<&str> = registry.iter().map(|e| e.group).collect();
    groups.dedup();
    for g in groups {
        let mut sub = Command::new(g).about(group_about(g)).subcommand_required(true);
        for e in registry.iter().filter(|e| e.group == g) {
            sub = sub.subcommand(experiment_command(e));
        }
        if g == "eigen" {
            // `eigen --preset …` runs `eigen solve`
            let solve = registry
                .iter()
                .find(|e| e.id() == "eigen solve")
                .expect("eigen solve registered");
            sub = sub
                .subcommand_required(false)
                .args_conflicts_with_subcommands(true)
                .args(solve.params.iter().map(|p| p.arg()));
        }
        root = root.subcommand(sub);
    }
    root
}

/// Finds the experiment the matches select, with the matches holding its
/// parameters.
fn selected<'a>(registry: &'a [Experiment], m: &'a ArgMatches) -> Option<(&'a Experiment, &'a ArgMatches)> {
    let (group, gm) = m.subcommand()?;
    let (name, em) = match gm.subcommand() {
        Some((name, em)) => (name, em),
        None => ("solve", gm),
    };
    registry
        .iter()
        .find(|e| e.group == group && e.name == name)
        .map(|e| (e, em))
}

fn flag_value<'a>(m: &'a ArgMatches, em: &'a ArgMatches, id: &str) -> Option<&'a String> {
    em.get_one::<String>(id).or_else(|| m.get_one::<String>(id))
}

fn global_source(m: &ArgMatches, em: &ArgMatches, id: &str) -> bool {
    [em, m]
        .iter()
        .any(|x| x.value_source(id) == Some(clap::parser::ValueSource::CommandLine))
}

fn load_config(path: &str) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
    ExperimentConfig::parse(&text)
}

/// The `--config` value, found before clap sees arguments that only the
/// config's experiment defines.
fn config_path(argv: &[OsString]) -> Option<String> {
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    args.iter()
        .enumerate()
        .find_map(|(i, a)| match a.strip_prefix("--config") {
            Some("") => args.get(i + 1).cloned(),
            Some(rest) => rest.strip_prefix('=').map(str::to_string),
            None => None,
        })
}

fn execute(registry: &[Experiment], mut argv: Vec<OsString>) -> Result<bool, CliError> {
    let cmd = command(registry);
    let cfg = match config_path(&argv) {
        Some(path) => Some(load_config(&path)?),
        None => None,
    };
    let names_group = |a: &OsString| registry.iter().any(|e| a.to_str() == Some(e.group));
    if let Some(words) = cfg.as_ref().and_then(|c| c.experiment.as_deref()) {
        if !argv.iter().skip(1).any(names_group) {
            let tail = argv.split_off(1.min(argv.len()));
            argv.extend(words.split_whitespace().map(OsString::from));
            argv.extend(tail);
        }
    }
    let matches = cmd.try_get_matches_from(&argv).map_err(clap_error)?;
    if matches.subcommand().is_none() {
        return Err(CliError::Usage("no experiment given; see --help".into()));
    }
    let (exp, em) = selected(registry, &matches).ok_or_else(|| CliError::Usage("unknown experiment".into()))?;
    let params = Params::resolve(exp, em, cfg.as_ref())?;

    let cfg_global = |k: &str| cfg.as_ref().and_then(|c| c.get(k)).and_then(|v| v.last()).cloned();
    let format: Format = if global_source(&matches, em, "format") {
        flag_value(&matches, em, "format").cloned()
    } else {
        cfg_global("format")
    }
    .as_deref()
    .unwrap_or("json")
    .parse()?;
    let output = flag_value(&matches, em, "output")
        .cloned()
        .or_else(|| cfg_global("output"));
    let no_ts = em.get_flag("no-timestamp")
        || matches.get_flag("no-timestamp")
        || match cfg_global("timestamp").as_deref() {
            None | Some("true") => false,
            Some("false") => true,
            Some(v) => return Err(CliError::Usage(format!("timestamp must be true or false, got {v:?}"))),
        };

    let run = (exp.run)(&params)?;
    for c in &run.checks {
        eprintln!("{}", c.summary_line());
    }

    let mut sink: Box<dyn Write> = match &output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| CliError::Usage(format!("cannot create {path}: {e}")))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Csv => write_csv(&run.table, &mut sink)?,
        Format::Json => {
            let timestamp = (!no_ts).then(|| chrono::Utc::now().to_rfc3339());
            let doc = json_document(&exp.id(), &params.values, &run, timestamp);
            write_json(&doc, &mut sink)?;
        }
    }
    sink.flush()?;
    Ok(run.passed())
}

/// Prints clap's own message; the returned error is silent.
fn clap_error(e: clap::Error) -> CliError {
    let _ = e.print();
    CliError::Usage(String::new())
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let registry = experiments::registry();
    // help and version are not errors
    if let Err(e) = command(&registry).try_get_matches_from(&argv) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
        ) {
            let _ = e.print();
            return 0;
        }
    }
    match execute(&registry, argv) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(CliError::Usage(m)) if m.is_empty() => 2,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
