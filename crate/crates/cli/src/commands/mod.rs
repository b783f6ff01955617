pub mod qkd;
pub mod qubit;
pub mod success;
pub mod teleamp;
pub mod usd;

use crate::config::Engine;
use crate::error::{config_err, CliError};

/// Flag, then file, then preset/default.
pub fn pick<T: Copy>(flag: Option<T>, file: Option<T>, fallback: T) -> T {
    flag.or(file).unwrap_or(fallback)
}

/// Engine for a command that supports only some of them.
pub fn engine(requested: Option<Engine>, default: Engine, allowed: &[Engine], command: &str) -> Result<Engine, CliError> {
    let e = requested.unwrap_or(default);
    if allowed.contains(&e) {
        Ok(e)
    } else {
        Err(config_err(format!("{command} does not support engine {e:?}")))
    }
}

pub fn unknown_preset(name: &str, known: &[&str]) -> CliError {
    config_err(format!("unknown preset '{name}' (known: {})", known.join(", ")))
}
