use qec5_web::{curves, decode, dot, graph, published_fits};

#[test]
fn graph_json_counts() {
    let g = graph(5, 1).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 16);
    assert_eq!(g["components"], 2);
    let g = graph(3, 2).unwrap();
    assert!(g["edges"].as_array().unwrap().iter().any(|e| e["kind"] == "measurement"));
    assert!(graph(4, 1).is_err());
    assert!(graph(3, 0).is_err());
    assert!(dot(2, 1).unwrap().contains("boundary"));
}

#[test]
fn single_errors_decode() {
    for decoder in ["bm", "bp"] {
        let v = decode(3, 2, 1, 2, decoder).unwrap();
        assert_eq!(v["success"], true, "{decoder}: {v}");
        assert!(!v["active_nodes"].as_array().unwrap().is_empty());
    }
    // plain matching sees no hyperedges, so only pure errors are guaranteed
    for site in 0..5 {
        assert_eq!(decode(3, site, 2, 0, "mwpm").unwrap()["success"], true);
    }
    let v = decode(2, 0, 0, 0, "bm").unwrap();
    assert_eq!(v["syndrome"], serde_json::json!([0, 0, 0, 0]));
    assert!(decode(3, 5, 1, 0, "bm").is_err());
    assert!(decode(3, 0, 1, 0, "nope").is_err());
}

#[test]
fn curves_share_the_threshold() {
    let v = curves(766.0, 1.873, 3).unwrap();
    let t = v["threshold"].as_f64().unwrap();
    assert!((t / 4.95e-4 - 1.0).abs() < 0.1);
    assert_eq!(v["curves"].as_array().unwrap().len(), 3);
    assert!(curves(2.0, 0.9, 3).is_err());
    let fits: serde_json::Value = serde_json::from_str(&published_fits()).unwrap();
    assert_eq!(fits.as_array().unwrap().len(), 6);
}
