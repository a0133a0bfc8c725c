#![allow(dead_code)]

use std::path::PathBuf;

use widget_core::harness::{parse_script, Step};
use widget_core::syntax::{parse_program, Program};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap()
}

pub fn program(name: &str) -> Program {
    parse_program(&fixture(name)).unwrap()
}

pub fn script(name: &str) -> Vec<Step> {
    parse_script(&fixture(name)).unwrap()
}

pub mod criteria;
pub mod gen;
