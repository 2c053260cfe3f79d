//! Command-line front end.
//!
//! Grammar (subcommand first):
//!
//! ```text
//! tawlab <subcommand> <scenario | --config PATH> [flags]
//! tawlab run <scenario> <subcommand> [flags]       # alias form
//! tawlab scenarios                                  # list built-ins
//! ```
//!
//! Subcommands: forward, measure, neumann, backproject, recover-source,
//! recover-speed, stability-probe, check-conditions.
//! Flags: --config PATH, --out DIR, --resolution N, --seed U64, --quiet,
//! --strict, --sequential.
//!
//! Exit codes: 0 ok, 2 config/usage error, 3 numeric failure, 4 failed
//! condition check under --strict.

use std::process::ExitCode;
use tawlab::exec::Execution;
use tawlab::harness::{builtin, run, RunOpts, ScenarioConfig, Subcommand, BUILTIN_NAMES};

fn usage() -> String {
    let mut s = String::new();
    s.push_str("usage: tawlab <subcommand> <scenario | --config PATH> [flags]\n");
    s.push_str("       tawlab run <scenario> <subcommand> [flags]\n");
    s.push_str("       tawlab scenarios\n\n");
    s.push_str("subcommands: forward | measure | neumann | backproject | recover-source |\n");
    s.push_str("             recover-speed | stability-probe | check-conditions\n");
    s.push_str("flags: --config PATH  --out DIR  --resolution N  --seed U64\n");
    s.push_str("       --quiet  --strict  --sequential\n");
    s
}

struct Parsed {
    sub: Subcommand,
    config: ScenarioConfig,
    opts: RunOpts,
}

fn fail_usage(msg: &str) -> Result<Parsed, (i32, String)> {
    Err((2, format!("{msg}\n\n{}", usage())))
}

fn parse_args(argv: &[String]) -> Result<Parsed, (i32, String)> {
    if argv.is_empty() {
        return fail_usage("missing subcommand");
    }
    if argv[0] == "scenarios" {
        let mut out = String::from("built-in scenarios:\n");
        for n in BUILTIN_NAMES {
            out.push_str("  ");
            out.push_str(n);
            out.push('\n');
        }
        return Err((0, out));
    }
    // positional layer: either `<sub> <scenario?>` or `run <scenario> <sub>`
    let mut positional: Vec<&str> = Vec::new();
    let mut config_path: Option<String> = None;
    let mut opts = RunOpts { quiet: false, ..Default::default() };
    let mut i = 0;
    while i < argv.len() {
        let a = argv[i].as_str();
        match a {
            "--config" | "--out" | "--resolution" | "--seed" => {
                let Some(v) = argv.get(i + 1) else {
                    return fail_usage(&format!("flag {a} needs a value"));
                };
                match a {
                    "--config" => config_path = Some(v.clone()),
                    "--out" => opts.out_dir = Some(v.clone()),
                    "--resolution" => {
                        opts.resolution = Some(v.parse().map_err(|_| {
                            (2, format!("--resolution expects an integer, got '{v}'"))
                        })?)
                    }
                    "--seed" => {
                        opts.seed = Some(v.parse().map_err(|_| {
                            (2, format!("--seed expects an unsigned integer, got '{v}'"))
                        })?)
                    }
                    _ => unreachable!(),
                }
                i += 2;
            }
            "--quiet" => {
                opts.quiet = true;
                i += 1;
            }
            "--strict" => {
                opts.strict = true;
                i += 1;
            }
            "--sequential" => {
                opts.exec = Execution::Sequential;
                i += 1;
            }
            _ if a.starts_with("--") => return fail_usage(&format!("unknown flag {a}")),
            _ => {
                positional.push(a);
                i += 1;
            }
        }
    }
    // normalize the alias form `run <scenario> <sub>`
    if positional.first() == Some(&"run") {
        positional.remove(0);
        if positional.len() == 2 {
            positional.swap(0, 1);
        }
    }
    let Some(sub_name) = positional.first() else {
        return fail_usage("missing subcommand");
    };
    let Some(sub) = Subcommand::parse(sub_name) else {
        return fail_usage(&format!("unknown subcommand '{sub_name}'"));
    };
    let config = match (positional.get(1), &config_path) {
        (Some(name), None) => match builtin(name) {
            Some(cfg) => cfg,
            None => {
                return fail_usage(&format!(
                    "unknown scenario '{name}' (try `tawlab scenarios`)"
                ))
            }
        },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (2, format!("cannot read config {path}: {e}")))?;
            ScenarioConfig::parse(&text).map_err(|e| (2, format!("{path}: {e}")))?
        }
        (Some(_), Some(_)) => {
            return fail_usage("give either a scenario name or --config, not both")
        }
        (None, None) => return fail_usage("missing scenario name or --config PATH"),
    };
    Ok(Parsed { sub, config, opts })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let parsed = match parse_args(&argv) {
        Ok(p) => p,
        Err((code, msg)) => {
            if code == 0 {
                print!("{msg}");
            } else {
                eprint!("{msg}");
            }
            return ExitCode::from(code as u8);
        }
    };
    let strict = parsed.opts.strict;
    let quiet = parsed.opts.quiet;
    match run(parsed.config, parsed.sub, &parsed.opts) {
        Ok(summary) => {
            if !quiet {
                eprintln!("artifacts written to {}", summary.out_dir.display());
            }
            if strict && summary.conditions_passed == Some(false) {
                eprintln!("condition check failed (--strict)");
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
