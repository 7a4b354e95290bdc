mod args;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use quotascan_core::ingest::{write_departments, write_roster};
use quotascan_core::report::{write_csv, write_json, InputFormat, OutputFormat};
use quotascan_core::{
    build_dataset, build_report, generate, parse_attributes, parse_departments, parse_roster, CorpusSpec, Dataset,
    Error, Result, RosterFormat, Stages,
};

use args::{AnalysisArgs, Cli, Command, FormatArg, GenerateArgs};

const EXIT_INVALID: u8 = 1;
const EXIT_IO: u8 = 2;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Runs `write` against `--out` or stdout.
fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = create(path)?;
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn load(args: &AnalysisArgs) -> Result<Dataset> {
    let config = args.run_config();
    let input = open(&args.input)?;
    let records = match config.input_format {
        InputFormat::Departments => parse_departments(input)?,
        InputFormat::Roster => parse_roster(input, &config.roster_labels)?,
    };
    let mut dataset = build_dataset(records, config.min_dept_size)?;
    if let Some(path) = &args.attributes {
        let unknown = dataset.attach_attributes(parse_attributes(open(path)?)?);
        for key in unknown {
            eprintln!("warning: attribute file names unknown discipline {key:?}");
        }
    }
    Ok(dataset)
}

fn analyse(args: &AnalysisArgs, stages: Stages) -> Result<()> {
    let config = args.run_config();
    let dataset = load(args)?;
    for unit in &dataset.dropped_units {
        eprintln!(
            "note: dropped {}/{} (size {} < {})",
            unit.stratum_key, unit.unit_key, unit.size, config.min_dept_size
        );
    }
    let report = build_report(&dataset, &config, stages)?;
    if let (Some(path), Some(section)) = (&args.export_draws, &report.bootstrap) {
        let mut w = create(path)?;
        section.result.write_draws_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(section) = &report.bootstrap {
        for warning in &section.result.warnings {
            eprintln!("warning: {warning}");
        }
    }
    emit(args.out.as_deref(), |w| match config.output_format {
        OutputFormat::Json => write_json(&report, w),
        OutputFormat::Csv => write_csv(&report, w),
    })
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = CorpusSpec {
        n_strata: args.strata,
        departments_per_stratum: (args.min_departments, args.max_departments),
        size_range: (args.min_size, args.max_size),
        share_range: (args.min_share, args.max_share),
        regime: args.regime(),
        seed: args.seed,
        min_size: args.min_dept_size,
    };
    let dataset = generate(&spec)?;
    let labels = RosterFormat { minority: args.minority_label.clone(), majority: args.majority_label.clone() };
    emit(args.out.as_deref(), |w| match args.format {
        FormatArg::Departments => write_departments(&dataset, w),
        FormatArg::Roster => write_roster(&dataset, &labels, w),
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Test(a) => analyse(a, Stages::TEST),
        Command::Bootstrap(a) => analyse(a, Stages::BOOTSTRAP),
        Command::Diagnose(a) => analyse(a, Stages::DIAGNOSE),
        Command::SimulateQuota(a) => analyse(a, Stages::QUOTA),
        Command::Report(a) => analyse(a, Stages::ALL),
        Command::Generate(a) => cmd_generate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_INVALID })
        }
    }
}
