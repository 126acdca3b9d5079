//! JSON report building. Floats are rounded to 9 significant digits and
//! infinite entries are written as the string `"inf"`.

use gamemetric::payoffs::BoundFinding;
use gamemetric::{GameStructure, MetricMatrix, Player, Relation, Partition, Valuation};
use serde_json::{json, Map, Value};

pub const SIG_DIGITS: usize = 9;

pub fn num(x: f64) -> Value {
    if x.is_infinite() {
        return Value::String(if x > 0.0 { "inf".into() } else { "-inf".into() });
    }
    if x.is_nan() {
        return Value::String("nan".into());
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float");
    // Avoid printing `-0.0`.
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    json!(rounded)
}

pub fn summary(g: &GameStructure) -> Value {
    let n = g.num_states();
    let count = |p| (0..n).map(|s| g.num_moves(s, p)).sum::<usize>();
    json!({
        "states": n,
        "moves1": count(Player::One),
        "moves2": count(Player::Two),
        "kind": g.classify().map(|k| k.to_string()).unwrap_or_else(|_| "invalid".into()),
    })
}

pub fn valuation(g: &GameStructure, v: &Valuation) -> Value {
    per_state(g, v.values())
}

pub fn per_state(g: &GameStructure, v: &[f64]) -> Value {
    let mut map = Map::new();
    for (name, &x) in g.state_names().iter().zip(v) {
        map.insert(name.clone(), num(x));
    }
    Value::Object(map)
}

/// Rows in state order, each an object keyed by the target state.
pub fn matrix(g: &GameStructure, d: &MetricMatrix) -> Value {
    let names = g.state_names();
    let mut rows = Map::new();
    for (s, row) in d.rows().enumerate() {
        let mut cols = Map::new();
        for (t, &x) in row.iter().enumerate() {
            cols.insert(names[t].clone(), num(x));
        }
        rows.insert(names[s].clone(), Value::Object(cols));
    }
    Value::Object(rows)
}

pub fn relation(g: &GameStructure, r: &Relation) -> Value {
    let names = g.state_names();
    Value::Array(r.pairs().map(|(s, t)| json!([names[s], names[t]])).collect())
}

pub fn partition(g: &GameStructure, p: &Partition) -> Value {
    let names = g.state_names();
    Value::Array(
        p.blocks()
            .iter()
            .map(|b| Value::Array(b.iter().map(|&s| json!(names[s])).collect()))
            .collect(),
    )
}

/// State names come from `names` when the finding belongs to a known game.
pub fn finding(f: &BoundFinding, names: &[String]) -> Value {
    json!({
        "kind": f.kind.to_string(),
        "metric": f.metric,
        "s": names[f.s],
        "t": names[f.t],
        "lhs": num(f.lhs),
        "rhs": num(f.rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_nine_significant_digits() {
        assert_eq!(num(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(num(2.0 / 3.0).to_string(), "0.666666667");
        assert_eq!(num(123456789012.0).to_string(), "123456789000.0");
        assert_eq!(num(-1e-20).to_string(), "-1e-20");
        assert_eq!(num(-0.0).to_string(), "0.0");
        assert_eq!(num(f64::INFINITY), json!("inf"));
    }
}
