//! Drives the command-line front end from code: writes a config, runs
//! `tau0` and `simulate`, and lists the produced files.

use ringwave::cli::{execute, Command, ExperimentConfig};

const CONFIG: &str = r#"{
  "schema_version": 1,
  "classes": [
    {"class_id": 1, "count": 90, "model": {"type": "bando_ftl", "a": 4.0, "b": 20.0,
      "velocity_preference": {"l_v": 4.5, "d0": 2.23, "calibrate": {"headway": 10.4, "slope": 1.27491}}}},
    {"class_id": 2, "count": 10, "model": {"type": "bando_ftl", "a": 0.5, "b": 20.0,
      "velocity_preference": {"l_v": 4.5, "d0": 2.23, "calibrate": {"headway": 10.4, "slope": 1.27491}}}}
  ],
  "ordering": {"kind": "shuffled", "seed": 3},
  "equilibrium": {"length_per_vehicle": 10.4},
  "simulation": {"dt": 0.05, "t_end": 120.0, "record_every": 20,
    "perturbation": {"amplitude": 0.1, "kind": {"type": "single_vehicle_kick"}}}
}"#;

fn main() -> ringwave::Result<()> {
    let cfg = ExperimentConfig::from_json(CONFIG)?;
    let out = std::env::temp_dir().join("ringwave-example");
    for cmd in [Command::Tau0, Command::Simulate] {
        let outcome = execute(cmd, &cfg, &out, true)?;
        print!("{}", outcome.summary);
        for f in outcome.files {
            println!("  wrote {}", f.display());
        }
    }
    Ok(())
}
