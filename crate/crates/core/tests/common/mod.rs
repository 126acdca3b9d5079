#![allow(dead_code)]

use std::path::PathBuf;

use gamemetric::GameStructure;

pub fn game_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../games").join(name)
}

pub fn load(name: &str) -> GameStructure {
    let text = std::fs::read_to_string(game_path(name)).expect("game file readable");
    GameStructure::from_json(&text).expect("game file parses")
}

pub fn idx(g: &GameStructure, name: &str) -> usize {
    g.lookup(name).expect("known state")
}
