// The three protocols at one operating point: mean-field signal slope and Wigner sensitivity,
// with BS2 set from the closed-form squeezing angle.
use oat_gravimetry::config::SimConfig;
use oat_gravimetry::interferometer::{
    sensitivity_finite_difference, signal_slope, Bs2Choice, Bs2Setting, Engine, NoiseSpec, Protocol, PulseSequence,
    SensitivityResult,
};
use oat_gravimetry::orchestrator::{prepare_model, solve_groundstate};
use oat_gravimetry::Result;

pub const CONFIG: &str = r#"
atom_number = 1e4

[grid]
n_z = 2048
groundstate_n_r = 24
groundstate_n_z = 64

[time]
t_oat_ms = 5.0
t_ms = 20.0
"#;

pub fn run_example() -> Result<Vec<(SensitivityResult, f64)>> {
    let cfg = SimConfig::from_toml_str(CONFIG)?;
    let sc = cfg.scenario()?;
    let gs = solve_groundstate(&cfg, &sc)?;
    let generic = Bs2Setting { theta: 4.0, phi: 0.0 };
    let seqs: Vec<PulseSequence> =
        Protocol::ALL.iter().map(|&p| PulseSequence::for_protocol(p, cfg.t_oat(), cfg.t(), generic, 0.0, 0.0)).collect();
    let model = prepare_model(&cfg, &sc, &gs, &seqs)?;
    let engine = Engine::Tw { n_traj: 48, seed_root: 11 };
    let mut out = Vec::new();
    for p in Protocol::ALL {
        let mut pc = cfg.protocol_config(p);
        pc.bs2 = Bs2Choice::Analytic;
        let (slope, _) = signal_slope(&model, &pc, &Engine::MeanField, 1e-8)?;
        let r = sensitivity_finite_difference(&model, &pc, &engine, 1e-8, &NoiseSpec::default())?;
        println!(
            "{:16} mean-field slope {:+.3e}  delta g {:.3e} +- {:.1e}",
            p.name(),
            slope,
            r.delta_g,
            r.delta_g_stderr
        );
        out.push((r, slope));
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
