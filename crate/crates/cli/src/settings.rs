//! Flat `key = value` settings: built-in defaults, then an optional config
//! file, then command-line flags, each layer overriding the previous one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Value,
    /// Present-or-absent switch; stored as `true`/`false`.
    Switch,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
    pub kind: Kind,
}

const fn value(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help, kind: Kind::Value }
}

const fn switch(name: &'static str, help: &'static str) -> Key {
    Key { name, default: "false", help, kind: Kind::Switch }
}

const COMMON: &[Key] = &[
    value("seed", "42", "Seed for every random stream of the run"),
    value("out", "", "Write the CSV here instead of stdout"),
    switch("f32", "Round inputs and parameters to f32 after every update"),
];

const MNIST: &[Key] = &[
    value("data_dir", "data/mnist", "Directory holding the four decompressed IDX files"),
    value("degree", "3", "Chebyshev degree of every KAN layer"),
    value("kind", "first", "Polynomial family: first|second"),
    value("init", "xavier", "Coefficient initialization"),
    value("norm", "tanh", "Input normalization: tanh|minmax|standardize"),
    value("ln", "true", "LayerNorm between KAN layers"),
    value("epochs", "10", "Training epochs"),
    value("batch", "64", "Minibatch size"),
    value("lr", "0.001", "Learning rate"),
    value("optimizer", "adam", "adam|sgd"),
    value("momentum", "0.9", "SGD momentum"),
    value("subset", "0", "Train on the first N training images (0 = all)"),
    value("save", "", "Save the trained model to this path"),
];

const APPROX: &[Key] = &[
    value("target", "sin_plus_sq", "Target function: sin_plus_sq|polynomial|step"),
    value("samples", "2000", "Training samples"),
    value("test_samples", "1000", "Test samples"),
    value("lo", "-2", "Lower end of the input range"),
    value("hi", "2", "Upper end of the input range"),
    value("widths", "1,8,1", "Layer widths"),
    value("degree", "4", "Chebyshev degree"),
    value("kind", "first", "Polynomial family: first|second"),
    value("init", "xavier", "Coefficient initialization"),
    value("ln", "false", "LayerNorm between KAN layers"),
    value("steps", "2000", "Full-batch Adam steps"),
    value("lr", "0.01", "Learning rate"),
    value("dump", "approx_dump.csv", "Write x,y_true,y_pred for the test set here (empty = skip)"),
];

const FRACTAL: &[Key] = &[
    value("alpha", "0.7", "Noise amplitude factor"),
    value("b", "0.001", "Second noise amplitude factor"),
    value("iters", "5", "Number of noise layers"),
    value("grid", "64", "Points per axis"),
    value("extent", "2", "Half-width of the square domain"),
    value("widths", "2,64,64,1", "Layer widths"),
    value("degree", "3", "Chebyshev degree"),
    value("kind", "first", "Polynomial family: first|second"),
    value("init", "xavier", "Coefficient initialization"),
    value("ln", "true", "LayerNorm between KAN layers"),
    value("epochs", "300", "Training epochs"),
    value("batch", "0", "Minibatch size (0 = whole grid)"),
    value("lr", "0.01", "Learning rate"),
    value("dump", "fractal", "Prefix for <dump>_true.txt and <dump>_pred.txt (empty = skip)"),
];

const ABLATE: &[Key] = &[
    value("axis", "", "Sweep axis: init|degree|norm|kind"),
    value("data_dir", "data/mnist", "Directory holding the four decompressed IDX files"),
    value("degree", "3", "Base Chebyshev degree"),
    value("kind", "first", "Base polynomial family"),
    value("init", "xavier", "Base initialization"),
    value("norm", "tanh", "Base input normalization"),
    value("epochs", "10", "Training epochs per run"),
    value("batch", "64", "Minibatch size"),
    value("lr", "0.001", "Learning rate"),
    value("subset", "0", "Train on the first N training images (0 = all)"),
];

const GRADCHECK: &[Key] = &[
    value("trials", "100", "Number of random networks"),
    value("h", "1e-6", "Central-difference step"),
];

pub const COMMANDS: &[(&str, &str, &[Key])] = &[
    ("mnist", "Train the MNIST classifier", MNIST),
    ("approx", "Fit a one-dimensional function", APPROX),
    ("fractal", "Fit the noisy fractal surface", FRACTAL),
    ("ablate", "Sweep one training choice on MNIST", ABLATE),
    ("gradcheck", "Compare backpropagation against finite differences", GRADCHECK),
];

fn keys_of(command: &str) -> impl Iterator<Item = &'static Key> {
    let own = COMMANDS
        .iter()
        .find(|(name, _, _)| *name == command)
        .map(|(_, _, keys)| *keys)
        .unwrap_or(&[]);
    COMMON.iter().chain(own)
}

fn flag(name: &str) -> String {
    name.replace('_', "-")
}

pub fn cli() -> Command {
    let mut app = Command::new("chebykan")
        .about("Chebyshev Kolmogorov-Arnold network experiments")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for &(name, about, _) in COMMANDS {
        let mut sub = Command::new(name).about(about).arg(
            Arg::new("config")
                .long("config")
                .value_name("PATH")
                .help("key = value file; flags override it"),
        );
        for key in keys_of(name) {
            let arg = Arg::new(key.name).long(flag(key.name)).help(key.help);
            sub = sub.arg(match key.kind {
                Kind::Switch => arg.action(ArgAction::SetTrue),
                Kind::Value => arg.value_name("VALUE"),
            });
        }
        app = app.subcommand(sub);
    }
    app
}

/// Fully resolved settings of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: String,
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Defaults overridden by `file` (contents of `--config`), then by the
    /// flags present in `matches`.
    pub fn resolve(command: &str, file: Option<&str>, matches: &ArgMatches) -> Result<Self, Failure> {
        let mut values: BTreeMap<String, String> = keys_of(command)
            .map(|k| (k.name.to_string(), k.default.to_string()))
            .collect();
        if let Some(text) = file {
            for (key, value) in parse_config(text)? {
                if !values.contains_key(&key) {
                    return Err(Failure::usage(format!("unknown config key '{key}' for '{command}'")));
                }
                values.insert(key, value);
            }
        }
        for key in keys_of(command) {
            match key.kind {
                Kind::Switch if matches.get_flag(key.name) => {
                    values.insert(key.name.to_string(), "true".into());
                }
                Kind::Value => {
                    if let Some(v) = matches.get_one::<String>(key.name) {
                        values.insert(key.name.to_string(), v.clone());
                    }
                }
                _ => {}
            }
        }
        Ok(Settings {
            command: command.to_string(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("'{key}' is not a setting of '{}'", self.command))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure>
    where
        T::Err: fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|e| Failure::usage(format!("invalid value '{raw}' for '{}': {e}", flag(key))))
    }

    pub fn flag(&self, key: &str) -> Result<bool, Failure> {
        self.get(key)
    }

    /// `None` for an empty value.
    pub fn path(&self, key: &str) -> Option<&str> {
        Some(self.raw(key)).filter(|s| !s.is_empty())
    }

    pub fn list(&self, key: &str) -> Result<Vec<usize>, Failure> {
        self.raw(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Failure::usage(format!("invalid list '{}' for '{}'", self.raw(key), flag(key))))
            })
            .collect()
    }

    /// `command=<name>` followed by every `key=value`, sorted by key.
    pub fn echo(&self) -> Vec<String> {
        std::iter::once(format!("command={}", self.command))
            .chain(self.values.iter().map(|(k, v)| format!("{k}={v}")))
            .collect()
    }
}

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected 'key = value'", n + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(args: &[&str], file: Option<&str>) -> Result<Settings, Failure> {
        let matches = cli().try_get_matches_from(args).unwrap();
        let (name, sub) = matches.subcommand().unwrap();
        Settings::resolve(name, file, sub)
    }

    #[test]
    fn defaults_then_file_then_flags() {
        let s = resolve(&["chebykan", "mnist", "--epochs", "3"], Some("epochs = 5\nlr = 0.1 # faster\n")).unwrap();
        assert_eq!(s.raw("epochs"), "3");
        assert_eq!(s.raw("lr"), "0.1");
        assert_eq!(s.raw("degree"), "3");
        assert_eq!(s.raw("f32"), "false");
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let err = resolve(&["chebykan", "approx"], Some("axis = init\n")).unwrap_err();
        assert_eq!(err.code, 1);
        assert!(err.message.contains("axis"));
    }

    #[test]
    fn malformed_line_is_rejected() {
        assert!(parse_config("epochs 5").is_err());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), vec![]);
    }

    #[test]
    fn echo_is_sorted_and_complete() {
        let s = resolve(&["chebykan", "gradcheck", "--trials", "7"], None).unwrap();
        assert_eq!(
            s.echo(),
            ["command=gradcheck", "f32=false", "h=1e-6", "out=", "seed=42", "trials=7"]
        );
    }

    #[test]
    fn switch_flag() {
        let s = resolve(&["chebykan", "approx", "--f32"], None).unwrap();
        assert!(s.flag("f32").unwrap());
    }

    #[test]
    fn typed_parse_errors_are_usage_errors() {
        let s = resolve(&["chebykan", "mnist", "--epochs", "many"], None).unwrap();
        assert_eq!(s.get::<usize>("epochs").unwrap_err().code, 1);
    }
}
