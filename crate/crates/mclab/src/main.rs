use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use mclab::report::Status;
use mclab::{list_experiments, run, write_report, ExperimentConfig, Format, HarnessError};

fn experiment_command(e: &'static mclab::Experiment) -> Command {
    let mut cmd = Command::new(e.name)
        .about(e.summary)
        .long_about(format!("{}\n\nChecks: {}", e.summary, e.anchor))
        .arg(Arg::new("seed").long("seed").value_parser(value_parser!(u64)).default_value("0").help("master seed"))
        .arg(
            Arg::new("trials")
                .long("trials")
                .value_parser(value_parser!(u64))
                .help(format!("number of trials [default: {}]", e.default_trials)),
        )
        .arg(Arg::new("out").long("out").value_parser(value_parser!(PathBuf)).help("write the report here instead of stdout"))
        .arg(
            Arg::new("format")
                .long("format")
                .value_parser(["json", "csv"])
                .default_value("json")
                .help("report format"),
        )
        .arg(Arg::new("with-timing").long("with-timing").action(ArgAction::SetTrue).help("record wall-clock seconds"));
    for p in e.params {
        cmd = cmd.arg(
            Arg::new(p.name)
                .long(p.name)
                .value_name(p.kind_label())
                .help(format!("{} [default: {}]", p.help, p.default)),
        );
    }
    cmd
}

fn cli() -> Command {
    let mut cmd = Command::new("mclab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Seeded Monte Carlo checks of matrix concentration bounds")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(Command::new("list").about("List the registered experiments"));
    for e in list_experiments() {
        cmd = cmd.subcommand(experiment_command(e));
    }
    cmd
}

fn config_from(name: &str, m: &ArgMatches) -> ExperimentConfig {
    let e = mclab::find(name).expect("subcommands come from the registry");
    let mut config = ExperimentConfig::new(name).seed(*m.get_one::<u64>("seed").expect("has default"));
    config.trials = m.get_one::<u64>("trials").copied();
    config.out_path = m.get_one::<PathBuf>("out").cloned();
    config.format = match m.get_one::<String>("format").map(String::as_str) {
        Some("csv") => Format::Csv,
        _ => Format::Json,
    };
    config.with_timing = m.get_flag("with-timing");
    for p in e.params {
        if let Some(v) = m.get_one::<String>(p.name) {
            config.params.insert(p.name.into(), v.clone());
        }
    }
    config
}

fn print_list() {
    let width = list_experiments().iter().map(|e| e.name.len()).max().unwrap_or(0);
    for e in list_experiments() {
        println!("{:width$}  {}", e.name, e.summary);
    }
}

fn execute(config: &ExperimentConfig) -> Result<bool, HarnessError> {
    let report = run(config)?;
    write_report(&report, config)?;
    for v in &report.body.verdicts {
        let tag = match v.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Flag => "FLAG",
        };
        eprintln!("{tag} {}: {} {} {}", v.name, v.observed, v.relation.symbol(), v.limit);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    if name == "list" {
        print_list();
        return ExitCode::SUCCESS;
    }
    match execute(&config_from(name, sub)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
