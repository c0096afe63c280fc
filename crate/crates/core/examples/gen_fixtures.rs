//! Writes the bundled synthetic fixtures and run configurations.
//!
//! `cargo run -p shutoff-core --example gen_fixtures -- fixtures`

use std::path::{Path, PathBuf};

use serde_json::json;
use shutoff_core::synthetic::{summer_fixture, winter_fixture, write_days, SummerClimate, WinterClimate};

const SEED: u64 = 11;

fn write_json(path: &Path, value: &serde_json::Value) {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir).expect("output directory");

    let summer: Vec<i32> = (2011..=2020).collect();
    let days = summer_fixture(&SummerClimate::default(), &summer, SEED);
    write_days(&dir.join("summer_weather.csv"), &["temp_c", "rh_pct", "wind_kmh", "gust_kmh"], &days)
        .expect("summer csv");

    let winter: Vec<i32> = (2008..=2019).collect();
    let days = winter_fixture(&WinterClimate::default(), &winter, SEED);
    write_days(&dir.join("winter_demand.csv"), &["temp_c", "precip_mm"], &days).expect("winter csv");

    write_json(
        &dir.join("psps_costs.json"),
        &json!({
            "horizon": 122,
            "currency": "USD",
            "wildfire_cost": 1e9,
            "revenue_loss": 2e5,
            "deenergize_cost": 2e6,
            "reenergize_cost": 2e6,
            "penalty": 1e8,
            "adjustment": 40.5e6
        }),
    );
    write_json(
        &dir.join("cpp_costs.json"),
        &json!({
            "curtailment": 100.0,
            "revenue_loss": 15000.0,
            "quadratic": 0.00245,
            "linear": 45.5,
            "constant": 8e5
        }),
    );

    let summer_data = json!({
        "path": "summer_weather.csv",
        "columns": [
            {"name": "temp", "unit": "c"},
            {"name": "rh", "unit": "pct"},
            {"name": "wind", "unit": "kmh"},
            {"name": "gust", "unit": "kmh"}
        ],
        "window": {"start": "06-01", "end": "09-30"},
        "train_years": (2011..=2018).collect::<Vec<_>>(),
        "test_years": [2019, 2020]
    });
    let risk_rule = json!([
        {"phenomenon": "temp", "at_least": 30.0},
        {"phenomenon": "rh", "at_most": 20.0},
        {"phenomenon": "wind", "at_least": 25.0},
        {"phenomenon": "gust", "at_least": 40.0}
    ]);
    for (name, scenario, budget, bins, output) in [
        ("psps_s1.json", "s1", json!(10), [8, 8, 8, 8], "out/psps_s1"),
        ("psps_s2.json", "s2", json!(10), [8, 8, 8, 8], "out/psps_s2"),
    ] {
        let config = json!({
            "scenario": scenario,
            "horizon": 122,
            "budget": budget,
            "costs": "psps_costs.json",
            "data": summer_data,
            "bins": bins,
            "day_types": false,
            "smoothing": 3e-4,
            "risk_rule": risk_rule,
            "seed": 2024,
            "years": 100,
            "output": output
        });
        write_json(&dir.join(name), &config);
    }
    // The cost-cap scenario is solved exactly, so its demo keeps a single
    // wind column with three bins and a two-week horizon.
    let mut wind_only = summer_data.clone();
    wind_only["columns"] = json!([{"name": "wind", "unit": "kmh"}]);
    write_json(
        &dir.join("psps_s3.json"),
        &json!({
            "scenario": "s3",
            "horizon": 14,
            "budget": 6e8,
            "costs": "psps_costs.json",
            "data": wind_only,
            "bins": [3],
            "day_types": false,
            "smoothing": 3e-4,
            "risk_rule": [{"phenomenon": "wind", "at_least": 17.0}],
            "seed": 2024,
            "years": 100,
            "grid_intervals": 100,
            "output": "out/psps_s3"
        }),
    );
    write_json(
        &dir.join("cpp.json"),
        &json!({
            "scenario": "cpp",
            "horizon": 121,
            "budget": 25,
            "costs": "cpp_costs.json",
            "data": {
                "path": "winter_demand.csv",
                "columns": [
                    {"name": "temp", "unit": "c"},
                    {"name": "precip", "unit": "mm"}
                ],
                "demand": true,
                "window": {"start": "12-01", "end": "03-31"},
                "train_years": (2008..=2017).collect::<Vec<_>>(),
                "test_years": [2018, 2019]
            },
            "bins": [12, 7],
            "day_types": true,
            "smoothing": 0.01,
            "seed": 2024,
            "years": 100,
            "output": "out/cpp"
        }),
    );
}
