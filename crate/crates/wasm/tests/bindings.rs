use cobuild_wasm::{scale_cells, vocabulary, Demo};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn chat_with_a_question() {
    let mut demo = Demo::new();
    let out = parse(&demo.say("Place a nut at the 2nd column, 2nd row."));
    assert_eq!(out["outcome"], "clarify");
    assert!(!parse(&demo.view())["pending"].is_null());
    let out = parse(&demo.say("yellow"));
    assert_eq!(out["outcome"], "execute");
    let view = parse(&demo.view());
    assert!(view["pending"].is_null());
    assert_eq!(view["parts"][0]["color"], "yellow");
    assert_eq!(view["parts"][0]["anchor"], serde_json::json!({ "x": 2, "y": 2, "z": 1 }));
}

#[test]
fn recall_with_overrides() {
    let mut demo = Demo::new();
    demo.say("Build a tower of two red nuts at the 1st column, 1st row.");
    demo.say("This is what I call a Pair.");
    assert_eq!(parse(&demo.view())["shapes"], serde_json::json!(["Pair"]));

    let out = parse(&demo.recall("Pair", 6, 4, Some("green".into()), None, None).unwrap());
    assert_eq!(out["outcome"]["outcome"], "execute");
    assert!(out["instruction"].as_str().unwrap().contains("Pair"));
    let parts = parse(&demo.view())["parts"].as_array().unwrap().clone();
    let green: Vec<&Value> = parts.iter().filter(|p| p["color"] == "green").collect();
    assert_eq!(green.len(), 2);
    assert!(green.iter().all(|p| p["anchor"]["x"] == 6 && p["anchor"]["y"] == 4));

    // Twice as big: a 2x2x4 block of 16 parts.
    demo.recall("Pair", 10, 10, None, None, Some(2)).unwrap();
    assert_eq!(parse(&demo.view())["parts"].as_array().unwrap().len(), 4 + 16);

    assert!(demo.recall("Pair", 1, 1, Some("mauve".into()), None, None).is_err());
    let out = parse(&demo.recall("Nothing", 1, 1, None, None, None).unwrap());
    assert_ne!(out["outcome"]["outcome"], "execute");

    demo.reset();
    assert_eq!(parse(&demo.view())["parts"], serde_json::json!([]));
}

#[test]
fn nearest_neighbour_scaling() {
    // Two cells in a row stretched to four: each source cell feeds two.
    let out = parse(&scale_cells("[[3,3,1],[4,3,1]]", 4, 1, 1).unwrap());
    assert_eq!(out["map"][0], serde_json::json!([0, 0, 1, 1]));
    assert_eq!(out["cells"], serde_json::json!([[3, 3, 1], [4, 3, 1], [5, 3, 1], [6, 3, 1]]));

    // An L of three cells shrunk to one cell keeps the corner.
    let out = parse(&scale_cells("[[1,1,1],[2,1,1],[1,2,1]]", 1, 1, 1).unwrap());
    assert_eq!(out["cells"], serde_json::json!([[1, 1, 1]]));

    // The gap in an L survives doubling: 3 of 4 quadrants filled.
    let out = parse(&scale_cells("[[1,1,1],[2,1,1],[1,2,1]]", 4, 4, 1).unwrap());
    assert_eq!(out["cells"].as_array().unwrap().len(), 12);

    assert!(scale_cells("[[14,1,1]]", 4, 1, 1).is_err());
    assert!(scale_cells("not json", 1, 1, 1).is_err());
}

#[test]
fn vocabulary_lists_names() {
    let v = parse(&vocabulary());
    assert_eq!(v["colors"].as_array().unwrap().len(), 10);
    assert_eq!(v["parts"].as_array().unwrap().len(), 9);
    assert!(v["colors"].as_array().unwrap().contains(&Value::from("red")));
}
