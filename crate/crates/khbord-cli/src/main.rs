use clap::{ArgGroup, Parser, Subcommand};
use khbord::bordered::Method;
use khbord_cli::{
    allow_n3_from_env, cmd_algebra, cmd_kh, cmd_matchings, cmd_verify, homology_table, AlgebraMode, CliError, Outcome,
    Suite,
};
use serde_json::Value;
use std::io::Write;

#[derive(Parser)]
#[command(name = "khb", version, about = "Bordered Khovanov homology over Z")]
struct Cli {
    /// Print the JSON report instead of the text summary.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crossingless matchings, the noncrossing partition lattice and geodesic connectivity.
    Matchings {
        #[arg(value_name = "N")]
        pos: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build and verify H^n, B_R(H^n), its dual, the product algebras and DD bimodules.
    #[command(group(ArgGroup::new("mode").required(true).args(["verify_presentation", "dual", "roberts", "dd_check"])))]
    Algebra {
        #[arg(value_name = "N")]
        pos: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        verify_presentation: bool,
        #[arg(long)]
        dual: bool,
        #[arg(long)]
        roberts: bool,
        #[arg(long)]
        dd_check: bool,
    },
    /// Khovanov homology of a link file by one or all pipelines.
    Kh {
        file: std::path::PathBuf,
        #[arg(long, default_value = "direct", value_parser = parse_method)]
        method: Method,
        #[arg(long)]
        all_methods: bool,
    },
    /// Run a verification battery.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("unknown method {s}; expected direct, tensor-hn, box-hn, box-product or box-gamma"))
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    Suite::parse(s).ok_or_else(|| format!("unknown suite {s}; expected dsq, pairing, reidemeister, ainfty or dd"))
}

fn pick_n(pos: Option<usize>, flag: Option<usize>) -> Result<usize, CliError> {
    match (pos, flag) {
        (Some(a), Some(b)) if a != b => Err(CliError::Input(format!("conflicting n: {a} and {b}"))),
        (Some(a), _) | (None, Some(a)) => Ok(a),
        (None, None) => Err(CliError::Input("n is required".into())),
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let allow = allow_n3_from_env();
    match &cli.command {
        Command::Matchings { pos, n } => cmd_matchings(pick_n(*pos, *n)?),
        Command::Algebra { pos, n, verify_presentation, dual, roberts, .. } => {
            let mode = if *verify_presentation {
                AlgebraMode::VerifyPresentation
            } else if *dual {
                AlgebraMode::Dual
            } else if *roberts {
                AlgebraMode::Roberts
            } else {
                AlgebraMode::DdCheck
            };
            cmd_algebra(pick_n(*pos, *n)?, mode, allow)
        }
        Command::Kh { file, method, all_methods } => {
            let text = std::fs::read_to_string(file).map_err(|e| CliError::Input(format!("{}: {}", file.display(), e)))?;
            cmd_kh(&text, *method, *all_methods, allow)
        }
        Command::Verify { suite, n, seed } => cmd_verify(*suite, *n, *seed, allow),
    }
}

fn text_summary(v: &Value) -> String {
    let mut s = String::new();
    if let Some(methods) = v.get("methods").and_then(Value::as_array) {
        for m in methods {
            let hs: Vec<khbord::zlinalg::HomologyGroup> = serde_json::from_value(m["homology"].clone()).unwrap_or_default();
            s += &format!("{} ({} generators, agrees with direct: {})\n", m["method"].as_str().unwrap_or(""), m["generators"], m["agrees_with_direct"]);
            s += &homology_table(&hs);
        }
        s += &format!("identical tables: {}\n", v["identical_tables"]);
    } else if v["command"] == "matchings" {
        s += &format!("{} matchings (Catalan {})\n", v["count"], v["catalan"]);
        for m in v["matchings"].as_array().into_iter().flatten() {
            s += &format!("  {}\n", m.as_str().unwrap_or(""));
        }
        s += &format!("connectivity: {}\n", v["connectivity"].as_str().unwrap_or(""));
    } else {
        s += &serde_json::to_string_pretty(&v["result"]).unwrap_or_default();
        s += "\n";
    }
    s += if v["pass"] == true { "PASS\n" } else { "FAIL\n" };
    s
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(out) => {
            let text = if cli.json { serde_json::to_string_pretty(&out.report).unwrap_or_default() + "\n" } else { text_summary(&out.report) };
            let _ = std::io::stdout().write_all(text.as_bytes());
            out.exit_code()
        }
        Err(e) => {
            if cli.json {
                let _ = writeln!(std::io::stdout(), "{}", serde_json::json!({ "error": e.to_string(), "pass": false }));
            }
            eprintln!("khb: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
