//! key=value config files. Each key is the long name of a flag; values fill
//! in only the flags the command line left unset.

use std::path::PathBuf;
use std::str::FromStr;

use crate::{usage, Cli, Failure};

pub fn apply_file_defaults(cli: &mut Cli) -> Result<(), Failure> {
    let Some(path) = cli.config.clone() else {
        return Ok(());
    };
    let text = std::fs::read_to_string(&path)?;
    for (number, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(usage(format!(
                "{}:{}: expected key=value, got {line:?}",
                path.display(),
                number + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        apply(cli, key, value).map_err(|detail| {
            usage(format!("{}:{}: {detail}", path.display(), number + 1))
        })?;
    }
    Ok(())
}

fn apply(cli: &mut Cli, key: &str, value: &str) -> Result<(), String> {
    match key {
        "function" => fill(&mut cli.function, value.to_string()),
        "n" => fill(&mut cli.n, parse(key, value)?),
        "k" => fill(&mut cli.k, parse(key, value)?),
        "delta" => fill(&mut cli.delta, parse(key, value)?),
        "x" => fill(&mut cli.x, value.to_string()),
        "trials" => fill(&mut cli.trials, parse(key, value)?),
        "seed" => fill(&mut cli.seed, parse(key, value)?),
        "estimator" => fill(&mut cli.estimator, value.to_string()),
        "out" => fill(&mut cli.out, PathBuf::from(value)),
        "eta" => fill(&mut cli.eta, parse(key, value)?),
        "steps" => fill(&mut cli.steps, parse(key, value)?),
        "table-name" => fill(&mut cli.table_name, value.to_string()),
        "sparsity" => fill(&mut cli.sparsity, parse(key, value)?),
        other => return Err(format!("unknown config key {other:?}")),
    }
    Ok(())
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("invalid value {value:?} for {key}: {e}"))
}

fn fill<T>(slot: &mut Option<T>, value: T) {
    if slot.is_none() {
        *slot = Some(value);
    }
}
