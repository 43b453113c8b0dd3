use std::path::Path;
use std::process::ExitCode;

use pgd2d::cli::{self, Config};

const USAGE: &str = "\
pgd2d — preference-guided diffusion on a 2D toy mixture

USAGE:
    pgd2d <COMMAND> [--config <file>] [key=value ...] [flags]

COMMANDS:
    pretrain   generate the labeled mixture and train the base model
    dpo        DPO-finetune the base model on preference pairs
    sft        finetune on one label subset (--label positive|negative)
    sample     sample under the configured guidance (--mode, --w, --cutoff)
    sweep      metrics across guidance weights (sweep.weights)
    merge      weight-space merge (--alpha, merge.mode pgd|cpgd)
    distill    distill the guidance teacher into one checkpoint
    eval       compare two sample CSVs (eval.a, eval.b)
    verify     run the identity/oracle battery

FLAGS (shorthand for config overrides):
    --config <file>      load a key=value config file first
    --out <dir>          out.dir
    --seed <n>           seed
    --mode <m>           guide.mode (none|cfg|pgd|cpgd)
    --w <x>              guide.w
    --cutoff <s>         guide.cutoff (integer or `full`)
    --alpha <x>          merge.alpha
    --label <l>          sft.label
    --n <n>              sample.n
    --svg                sample.svg=true
    --beta <x>           align.beta

Any bare key=value argument overrides that config key. CSV outputs carry
a comment line with the tool version and resolved-config checksum.

Metric rows (sweep/eval CSVs) use the fixed column order:
    positive_mass, negative_mass, outlier_mass, modes_covered,
    positive_modes_covered, diversity, frechet, n_samples, failures

EXIT CODES: 0 success, 1 usage error, 2 numerical failure.
";

fn parse_args(args: &[String]) -> Result<(String, Config), pgd2d::Error> {
    let command = args
        .first()
        .cloned()
        .ok_or_else(|| pgd2d::Error::Invalid {
            what: "command line",
            why: "missing subcommand".into(),
        })?;
    let mut cfg = Config::default();
    let mut i = 1;
    let flag_keys: &[(&str, &str)] = &[
        ("--out", "out.dir"),
        ("--seed", "seed"),
        ("--mode", "guide.mode"),
        ("--w", "guide.w"),
        ("--cutoff", "guide.cutoff"),
        ("--alpha", "merge.alpha"),
        ("--label", "sft.label"),
        ("--n", "sample.n"),
        ("--beta", "align.beta"),
    ];
    while i < args.len() {
        let arg = &args[i];
        if arg == "--config" {
            let path = args.get(i + 1).ok_or_else(|| pgd2d::Error::Invalid {
                what: "command line",
                why: "--config needs a file path".into(),
            })?;
            cfg.apply_file(Path::new(path))?;
            i += 2;
        } else if arg == "--svg" {
            cfg.apply_override("sample.svg=true")?;
            i += 1;
        } else if let Some((_, key)) = flag_keys.iter().find(|(f, _)| f == arg) {
            let value = args.get(i + 1).ok_or_else(|| pgd2d::Error::Invalid {
                what: "command line",
                why: format!("{arg} needs a value"),
            })?;
            cfg.apply_override(&format!("{key}={value}"))?;
            i += 2;
        } else if arg.contains('=') && !arg.starts_with("--") {
            cfg.apply_override(arg)?;
            i += 1;
        } else {
            return Err(pgd2d::Error::Invalid {
                what: "command line",
                why: format!("unrecognized argument `{arg}`"),
            });
        }
    }
    Ok((command, cfg))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print!("{USAGE}");
        return ExitCode::from(if args.is_empty() { 1 } else { 0 });
    }
    let (command, cfg) = match parse_args(&args) {
        Ok(parsed) => parsed,
        Err(err) => {
            eprintln!("error: {err}");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };
    let result = match command.as_str() {
        "pretrain" => cli::cmd_pretrain(&cfg),
        "dpo" => cli::cmd_dpo(&cfg),
        "sft" => cli::cmd_sft(&cfg),
        "sample" => cli::cmd_sample(&cfg),
        "sweep" => cli::cmd_sweep(&cfg),
        "merge" => cli::cmd_merge(&cfg),
        "distill" => cli::cmd_distill(&cfg),
        "eval" => cli::cmd_eval(&cfg),
        "verify" => cli::cmd_verify(&cfg),
        other => {
            eprintln!("error: unknown command `{other}`");
            eprint!("{USAGE}");
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(cli::exit_code(&err) as u8)
        }
    }
}
