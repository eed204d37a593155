use std::collections::BTreeSet;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ddpp_cli::{
    cmd_analyze, cmd_encode, cmd_gen_gadget, cmd_gen_grid, cmd_reduce_double, cmd_verify,
    parse_assignment, parse_epsilon, read_file, render_outcome, solve, write_file,
    CliResult, Mode, Report, SolveOptions,
};
use ddpp_core::io::{parse_bramble, parse_instance, parse_solution};
use ddpp_core::oracle::DEFAULT_BUDGET;

#[derive(Parser)]
#[command(name = "ddpp", version, about = "Half-integral directed disjoint paths")]
struct Cli {
    /// Machine-readable verdicts.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Oracle,
    Structural,
    Auto,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance.
    Solve {
        instance: String,
        #[arg(long, value_enum, default_value = "auto")]
        mode: ModeArg,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        congestion: u8,
        /// Run the structural pipeline with desk-scale constants.
        #[arg(long)]
        relaxed: bool,
        /// Oracle search-tree node budget.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// First start vertex of the long-path search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bramble sidecar; skips the bramble search.
        #[arg(long)]
        bramble: Option<String>,
        /// Bramble size the structural pipeline searches for.
        #[arg(long)]
        bramble_size: Option<usize>,
        /// Write the solution here instead of stdout.
        #[arg(long, short)]
        output: Option<String>,
    },
    /// Check a solution file against an instance.
    Verify {
        instance: String,
        solution: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        congestion: u8,
    },
    /// Report connectivity, bramble and well-linkedness facts.
    Analyze {
        instance: Option<String>,
        #[arg(long)]
        bramble: Option<String>,
        /// Comma-separated vertices to test for well-linkedness.
        #[arg(long, value_delimiter = ',')]
        set: Option<Vec<usize>>,
        /// Print the strict thresholds for k pairs and bramble size t.
        #[arg(long, num_args = 2, value_names = ["K", "T"])]
        thresholds: Option<Vec<usize>>,
    },
    /// Generate instances.
    #[command(subcommand)]
    Gen(Gen),
    /// Write the solution a satisfying assignment induces on the gadget.
    EncodeAssignment {
        #[arg(long)]
        cnf: String,
        /// One 0/1 character per variable.
        #[arg(long)]
        assign: String,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Accept clauses with fewer than three literals.
        #[arg(long)]
        padded: bool,
    },
    /// Instance transformations.
    #[command(subcommand)]
    Reduce(Reduce),
}

#[derive(Subcommand)]
enum Gen {
    /// The directed grid J_r with label comments.
    Grid {
        #[arg(long)]
        order: usize,
        /// Write the grid bramble sidecar here.
        #[arg(long)]
        bramble_out: Option<String>,
    },
    /// The hardness gadget of a 3-CNF formula.
    Gadget {
        #[arg(long)]
        cnf: String,
        #[arg(long, default_value = "1/2")]
        epsilon: String,
        /// Accept clauses with fewer than three literals.
        #[arg(long)]
        padded: bool,
    },
}

#[derive(Subcommand)]
enum Reduce {
    /// Double every vertex, turning half-integral into integral routing.
    Double { instance: String },
}

fn run(cli: Cli) -> CliResult<Report> {
    let ok = |stdout: String| Report {
        code: 0,
        stdout,
        stderr: String::new(),
    };
    match cli.command {
        Command::Solve {
            instance,
            mode,
            congestion,
            relaxed,
            budget,
            seed,
            bramble,
            bramble_size,
            output,
        } => {
            let inst = parse_instance(&read_file(&instance)?)?;
            let bramble = bramble.map(|p| read_file(&p).and_then(|t| Ok(parse_bramble(&t)?))).transpose()?;
            let opts = SolveOptions {
                mode: match mode {
                    ModeArg::Oracle => Mode::Oracle,
                    ModeArg::Structural => Mode::Structural,
                    ModeArg::Auto => Mode::Auto,
                },
                congestion: congestion as usize,
                relaxed,
                budget,
                seed,
                bramble,
                bramble_size,
            };
            let mut report = render_outcome(&solve(&inst, &opts)?, cli.json);
            if let Some(path) = output {
                if report.code == 0 && !cli.json {
                    write_file(&path, &report.stdout)?;
                    report.stdout.clear();
                }
            }
            Ok(report)
        }
        Command::Verify {
            instance,
            solution,
            congestion,
        } => {
            let inst = parse_instance(&read_file(&instance)?)?;
            let sol = parse_solution(&read_file(&solution)?)?;
            Ok(cmd_verify(&inst, &sol, congestion as usize, cli.json))
        }
        Command::Analyze {
            instance,
            bramble,
            set,
            thresholds,
        } => {
            let inst = instance.map(|p| read_file(&p).and_then(|t| Ok(parse_instance(&t)?))).transpose()?;
            let bramble = bramble.map(|p| read_file(&p).and_then(|t| Ok(parse_bramble(&t)?))).transpose()?;
            let set: Option<BTreeSet<usize>> = set.map(|s| s.into_iter().collect());
            let thresholds = thresholds.map(|v| (v[0], v[1]));
            cmd_analyze(inst.as_ref(), bramble.as_ref(), set.as_ref(), thresholds)
        }
        Command::Gen(Gen::Grid { order, bramble_out }) => {
            let (instance, sidecar) = cmd_gen_grid(order)?;
            if let Some(path) = bramble_out {
                write_file(&path, &sidecar)?;
            }
            Ok(ok(instance))
        }
        Command::Gen(Gen::Gadget { cnf, epsilon, padded }) => {
            Ok(ok(cmd_gen_gadget(&read_file(&cnf)?, parse_epsilon(&epsilon)?, padded)?))
        }
        Command::EncodeAssignment {
            cnf,
            assign,
            epsilon,
            padded,
        } => Ok(ok(cmd_encode(
            &read_file(&cnf)?,
            parse_epsilon(&epsilon)?,
            padded,
            &parse_assignment(&assign)?,
        )?)),
        Command::Reduce(Reduce::Double { instance }) => {
            Ok(ok(cmd_reduce_double(&parse_instance(&read_file(&instance)?)?)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{}", report.stdout);
            eprint!("{}", report.stderr);
            ExitCode::from(report.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

