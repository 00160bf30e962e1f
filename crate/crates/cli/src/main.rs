use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use wfpowl::behavior::{
    bounded_equal, check_safe, check_sound, enumerate_language, format_trace, SafetyVerdict, Side,
    DEFAULT_STATE_BUDGET,
};
use wfpowl::convert::{convert, convert_and_verify, ConversionOptions, Outcome};
use wfpowl::gen::{bench_run, generate_separable_net, write_bench_csv, GenParams};
use wfpowl::io::{parse_pnml, parse_powl, serialize_powl, write_pnml, PnmlOptions};
use wfpowl::net::WorkflowNet;
use wfpowl::powl::language_bounded;

const OK: u8 = 0;
const FALL_THROUGH: u8 = 1;
const INVALID_INPUT: u8 = 2;
const VERIFICATION_FAILED: u8 = 3;
const INTERNAL: u8 = 4;

#[derive(Parser)]
#[command(name = "wfpowl", version, about = "Convert safe and sound workflow nets into POWL models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct NetInput {
    /// Extra transition names treated as silent (repeatable).
    #[arg(long = "silent-name", value_name = "NAME")]
    silent_names: Vec<String>,
    /// Also treat names starting with tau/skip/silent/invisible as silent.
    #[arg(long)]
    fuzzy_silents: bool,
}

impl NetInput {
    fn options(&self) -> PnmlOptions {
        let mut o = PnmlOptions { fuzzy_silents: self.fuzzy_silents, ..Default::default() };
        o.silent_names.extend(self.silent_names.iter().cloned());
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a PNML workflow net into a POWL document.
    Convert {
        input: PathBuf,
        /// Output file; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        no_preprocess: bool,
        /// Reduction rules in application order.
        #[arg(long, value_delimiter = ',', default_value = "dup,split,join")]
        rules: Vec<String>,
        /// Compare net and model languages up to this many visible steps.
        #[arg(long, value_name = "L")]
        verify: Option<usize>,
        /// Write the irreducible fragment here as PNML when conversion fails.
        #[arg(long, value_name = "PATH")]
        fail_diagnostics: Option<PathBuf>,
        /// Check every intermediate projection for safeness and soundness.
        #[arg(long)]
        verify_projections: bool,
        #[command(flatten)]
        net: NetInput,
    },
    /// Report safeness and soundness of a net.
    Verify {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        states: usize,
        #[command(flatten)]
        net: NetInput,
    },
    /// Compare the bounded languages of a net and a POWL document.
    Equiv {
        net_file: PathBuf,
        model_file: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        states: usize,
        #[command(flatten)]
        net: NetInput,
    },
    /// Write a random separable net and its reference model.
    Generate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        transitions: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, default_value_t = 0.1)]
        cycle_probability: f64,
        #[arg(long, default_value_t = 0.1)]
        silent_probability: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Time conversion of generated nets and write a CSV table.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "25,50,100,200,350")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        per_size: usize,
        #[arg(long, default_value_t = 1)]
        seed_base: u64,
        #[arg(long)]
        csv: PathBuf,
    },
}

/// An error with the exit code it maps to.
struct Exit(u8, anyhow::Error);

fn invalid(e: impl Into<anyhow::Error>) -> Exit {
    Exit(INVALID_INPUT, e.into())
}

fn internal(e: impl Into<anyhow::Error>) -> Exit {
    Exit(INTERNAL, e.into())
}

fn read_net(path: &Path, input: &NetInput) -> Result<WorkflowNet, Exit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(invalid)?;
    parse_pnml(&text, &input.options()).with_context(|| format!("{}", path.display())).map_err(invalid)
}

fn write_out(path: &Path, text: &str) -> Result<(), Exit> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(internal)
}

fn run(cli: Cli) -> Result<u8, Exit> {
    match cli.command {
        Command::Convert { input, output, no_preprocess, rules, verify, fail_diagnostics, verify_projections, net } => {
            let wf = read_net(&input, &net)?;
            let opts = ConversionOptions { preprocess: !no_preprocess, rules, verify_projections, ..Default::default() };
            let (report, verification) = match verify {
                Some(l) => convert_and_verify(&wf, &opts, l),
                None => convert(&wf, &opts).map(|r| (r, None)),
            }
            .map_err(|e| match e {
                wfpowl::convert::ConvertError::UnknownRule(_) => invalid(e),
                _ => internal(e),
            })?;
            for issue in &report.projection_issues {
                eprintln!("projection issue ({} at depth {}, part {}): {}", issue.strategy, issue.depth, issue.part, issue.problem);
            }
            let model = match &report.outcome {
                Outcome::Success(m) => m,
                Outcome::Failure(f) => {
                    eprintln!("conversion failed: {f}");
                    if let Some(path) = fail_diagnostics {
                        write_out(&path, &write_pnml(&f.net))?;
                    }
                    return Ok(FALL_THROUGH);
                }
            };
            let text = serialize_powl(model);
            match output {
                Some(path) => write_out(&path, &text)?,
                None => println!("{text}"),
            }
            if !report.projection_issues.is_empty() {
                return Ok(VERIFICATION_FAILED);
            }
            if let Some(v) = verification {
                match &v.result {
                    Ok(eq) if eq.is_equal() => eprintln!("languages agree up to length {}", v.max_len),
                    Ok(eq) => {
                        let (trace, side) = eq.witness.as_ref().expect("unequal sets have a witness");
                        let only = if *side == Side::Left { "net" } else { "model" };
                        eprintln!("languages differ: {} is accepted only by the {only}", format_trace(trace));
                        return Ok(VERIFICATION_FAILED);
                    }
                    Err(e) => {
                        eprintln!("verification inconclusive: {e}");
                        return Ok(VERIFICATION_FAILED);
                    }
                }
            }
            Ok(OK)
        }
        Command::Verify { input, states, net } => {
            let wf = read_net(&input, &net)?;
            let safe = check_safe(&wf, states);
            match &safe {
                SafetyVerdict::Safe => println!("safe"),
                SafetyVerdict::Unsafe { marking, sequence } => {
                    let seq: Vec<String> = sequence.iter().map(ToString::to_string).collect();
                    println!("unsafe: {marking} after [{}]", seq.join(", "));
                }
                SafetyVerdict::Unknown { budget } => println!("safeness unknown: more than {budget} states"),
            }
            if safe != SafetyVerdict::Safe {
                return Ok(VERIFICATION_FAILED);
            }
            let sound = check_sound(&wf, states);
            if sound.is_sound() {
                println!("sound");
                Ok(OK)
            } else {
                println!("not sound: {sound:?}");
                Ok(VERIFICATION_FAILED)
            }
        }
        Command::Equiv { net_file, model_file, max_len, states, net } => {
            let wf = read_net(&net_file, &net)?;
            let text = fs::read_to_string(&model_file)
                .with_context(|| format!("reading {}", model_file.display()))
                .map_err(invalid)?;
            let model = parse_powl(&text).with_context(|| format!("{}", model_file.display())).map_err(invalid)?;
            let net_lang = match enumerate_language(&wf, max_len, states) {
                Ok(l) => l,
                Err(e) => {
                    println!("inconclusive: {e}");
                    return Ok(VERIFICATION_FAILED);
                }
            };
            let eq = bounded_equal(&net_lang, &language_bounded(&model, max_len));
            match eq.witness {
                None => {
                    println!("equal up to length {max_len} ({} traces)", net_lang.len());
                    Ok(OK)
                }
                Some((trace, side)) => {
                    let only = if side == Side::Left { "net" } else { "model" };
                    println!("different: {} is accepted only by the {only}", format_trace(&trace));
                    Ok(VERIFICATION_FAILED)
                }
            }
        }
        Command::Generate { seed, transitions, depth, cycle_probability, silent_probability, output } => {
            let params = GenParams {
                seed,
                transitions,
                max_depth: depth,
                cycle_probability,
                silent_probability,
                ..Default::default()
            };
            let (wf, model) = generate_separable_net(&params).map_err(invalid)?;
            fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display())).map_err(internal)?;
            let stem = format!("net_{transitions}_{seed}");
            write_out(&output.join(format!("{stem}.pnml")), &write_pnml(&wf))?;
            write_out(&output.join(format!("{stem}.powl.json")), &serialize_powl(&model))?;
            println!("{stem}: {} places, {} transitions", wf.net().place_count(), wf.net().transition_count());
            Ok(OK)
        }
        Command::Bench { sizes, per_size, seed_base, csv } => {
            if sizes.is_empty() || per_size == 0 {
                return Err(invalid(anyhow!("need at least one size and one net per size")));
            }
            let rows = bench_run(&sizes, per_size, seed_base, &GenParams::default(), &ConversionOptions::default())
                .map_err(|e| match e {
                    wfpowl::gen::BenchError::Gen(_) => invalid(e),
                    _ => internal(e),
                })?;
            let file = fs::File::create(&csv).with_context(|| format!("creating {}", csv.display())).map_err(internal)?;
            write_bench_csv(&rows, file).map_err(internal)?;
            let failed = rows.iter().filter(|r| !r.success).count();
            for &size in &sizes {
                let times: Vec<f64> = rows.iter().filter(|r| r.size == size).map(|r| r.wall_ms).collect();
                let max = times.iter().copied().fold(0.0, f64::max);
                let mean = times.iter().sum::<f64>() / times.len() as f64;
                println!("size {size}: mean {mean:.1} ms, max {max:.1} ms");
            }
            Ok(if failed > 0 { FALL_THROUGH } else { OK })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
