use oat_gravimetry::config::{SimConfig, SCHEMA_JSON};
use oat_gravimetry::gpe::SqueezingDiagnostics;
use oat_gravimetry::interferometer::{read_results_csv, write_results_csv, NoiseSpec, Protocol, SensitivityResult};
use serde_json::Value;
use std::collections::BTreeSet;

fn schema() -> Value {
    serde_json::from_str(SCHEMA_JSON).unwrap()
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn schema_keys_match_config() {
    let s = schema();
    let cfg = serde_json::to_value(SimConfig::from_toml_str("atom_number = 1e4").unwrap()).unwrap();
    assert_eq!(keys(&s["properties"]), keys(&cfg));
    for (name, section) in cfg.as_object().unwrap() {
        if section.is_object() {
            let props = &s["properties"][name]["properties"];
            assert_eq!(keys(props), keys(section), "section {name}");
            assert_eq!(s["properties"][name]["additionalProperties"], Value::Bool(false), "section {name}");
        }
    }
}

#[test]
fn schema_defaults_match_config_defaults() {
    let s = schema();
    let cfg = serde_json::to_value(SimConfig::from_toml_str("atom_number = 1e4").unwrap()).unwrap();
    let mut checked = 0;
    for (name, section) in cfg.as_object().unwrap() {
        let Some(obj) = section.as_object() else { continue };
        for (key, val) in obj {
            if let Some(d) = s["properties"][name]["properties"][key].get("default") {
                match (d.as_f64(), val.as_f64()) {
                    (Some(a), Some(b)) => assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{name}.{key}: {a} vs {b}"),
                    _ => assert_eq!(d, val, "{name}.{key}"),
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn config_roundtrips_through_toml() {
    let text = "atom_number = 2e4\nseed_root = 9\n[time]\nt_oat_ms = 7.5\n[sweep]\nt_oat_ms = [5.0, 10.0]\n";
    let cfg = SimConfig::from_toml_str(text).unwrap();
    let again = SimConfig::from_toml_str(&cfg.to_toml()).unwrap();
    assert_eq!(cfg, again);
}

#[test]
fn results_csv_roundtrips() {
    let r = SensitivityResult {
        protocol: Protocol::ExpandThenMz,
        t_oat: 0.01,
        t: 0.06,
        n_atoms: 1e4,
        noise: NoiseSpec { sigma_theta: 0.01, sigma_n_rel: 0.0, delta_n: 5.0 },
        delta_g: 1.234567890123e-7,
        delta_g_stderr: 3.2e-9,
        slope: -2.9e8,
        slope_stderr: 1e5,
        output_variance: 2400.0,
        detection_variance: 12.5,
        n_traj: 100,
        bs2: None,
    };
    let mut buf = Vec::new();
    write_results_csv(std::slice::from_ref(&r), &mut buf).unwrap();
    let header = String::from_utf8_lossy(&buf).lines().next().unwrap().to_string();
    assert_eq!(header, "protocol,T_oat_s,T_s,n_atoms,sigma_theta,sigma_n_rel,delta_n,delta_g,delta_g_stderr");
    let rows = read_results_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!((row.protocol, row.noise, row.delta_g, row.delta_g_stderr), (r.protocol, r.noise, r.delta_g, r.delta_g_stderr));
}

#[test]
fn squeezing_csv_roundtrips() {
    let d = SqueezingDiagnostics {
        times: vec![0.0, 1e-3, 2e-3],
        chi: vec![0.1, 0.2, 0.15],
        lambda: vec![0.0, 1.5e-4, 3.25e-4],
        q: vec![num_complex::Complex64::new(1.0, 0.0), num_complex::Complex64::new(0.5, -0.1), num_complex::Complex64::new(0.98, 0.01)],
        densities: vec![],
    };
    let mut buf = Vec::new();
    d.write_csv(&mut buf).unwrap();
    let back = SqueezingDiagnostics::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.times, d.times);
    assert_eq!(back.lambda, d.lambda);
    // Q is stored as (|Q|, arg Q).
    for (a, b) in back.q.iter().zip(&d.q) {
        assert!((a - b).norm() < 1e-15);
    }
}
