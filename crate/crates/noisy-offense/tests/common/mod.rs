#![allow(dead_code)]

mod synth;
#[allow(unused_imports)]
pub use synth::*;

use std::path::PathBuf;
use std::process::{Command, Output};

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_noisy-offense"))
}

pub fn stub() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_noisy-offense-stub-adapter"))
}

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(bin()).args(args).env_remove("NOISY_OFFENSE_SEED").output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

