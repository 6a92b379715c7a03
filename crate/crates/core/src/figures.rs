//! Figure-data tables. Plotting is left to external tools.
//!
//! | file | columns |
//! |------|---------|
//! | `fig2.csv` | t_ms, chi_per_s, lambda, q_abs |
//! | `fig3.csv` | n_atoms, engine, xi, xi_stderr, xi2_db |
//! | `fig4.csv` | t_oat_ms, protocol, delta_g, delta_g_stderr, delta_g_snl |
//! | `fig5_sigma_theta.csv`, `fig5_sigma_n_rel.csv`, `fig5_delta_n.csv` | key, delta_g, delta_g_stderr, ratio_to_noiseless |

use crate::error::{Error, Result};
use crate::gpe::SqueezingDiagnostics;
use crate::interferometer::SensitivityResult;
use serde::{Deserialize, Serialize};

/// One named file produced by a run, held in memory until the run writer commits it.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiEngine {
    Analytic,
    Tw,
}

impl XiEngine {
    pub fn name(&self) -> &'static str {
        match self {
            XiEngine::Analytic => "analytic",
            XiEngine::Tw => "tw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiRow {
    pub n_atoms: f64,
    pub engine: XiEngine,
    pub xi: f64,
    /// Zero for the closed-form engine.
    pub xi_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigureData {
    Fig2(SqueezingDiagnostics),
    Fig3(Vec<XiRow>),
    /// Sensitivities for several protocols and T_oat values at a fixed N and T.
    Fig4(Vec<SensitivityResult>),
    Fig5 {
        sigma_theta: Vec<SensitivityResult>,
        sigma_n_rel: Vec<SensitivityResult>,
        delta_n: Vec<SensitivityResult>,
    },
}

fn incomplete(what: &str) -> Error {
    Error::Incomplete(what.to_string())
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn check_finite(label: &str, vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(incomplete(&format!("{label} has non-finite entries")))
    }
}

fn fig5_table(name: &str, rows: &[SensitivityResult], key: impl Fn(&SensitivityResult) -> f64) -> Result<OutputFile> {
    if rows.is_empty() {
        return Err(incomplete(&format!("{name}: no rows")));
    }
    let base = rows
        .iter()
        .find(|r| key(r) == 0.0)
        .ok_or_else(|| incomplete(&format!("{name}: missing the noiseless reference row")))?
        .delta_g;
    let mut out = Vec::new();
    for r in rows {
        check_finite(name, &[key(r), r.delta_g, r.delta_g_stderr])?;
        out.push(vec![num(key(r)), num(r.delta_g), num(r.delta_g_stderr), num(r.delta_g / base)]);
    }
    Ok(OutputFile { name: format!("{name}.csv"), bytes: csv_bytes(&["key", "delta_g", "delta_g_stderr", "ratio_to_noiseless"], out)? })
}

/// Ideal single-shot limit 1 / (sqrt(N) k0 T^2).
pub fn delta_g_snl(n_atoms: f64, k0: f64, t: f64) -> f64 {
    1.0 / (n_atoms.sqrt() * k0 * t * t)
}

pub fn emit_figure_data(data: &FigureData, k0: f64) -> Result<Vec<OutputFile>> {
    match data {
        FigureData::Fig2(d) => {
            if d.times.len() < 2 {
                return Err(incomplete("fig2: fewer than two samples"));
            }
            let mut rows = Vec::new();
            for i in 0..d.times.len() {
                check_finite("fig2", &[d.times[i], d.chi[i], d.lambda[i], d.q[i].norm()])?;
                rows.push(vec![num(d.times[i] * 1e3), num(d.chi[i]), num(d.lambda[i]), num(d.q[i].norm())]);
            }
            Ok(vec![OutputFile { name: "fig2.csv".into(), bytes: csv_bytes(&["t_ms", "chi_per_s", "lambda", "q_abs"], rows)? }])
        }
        FigureData::Fig3(rows) => {
            if rows.is_empty() {
                return Err(incomplete("fig3: no rows"));
            }
            let mut out = Vec::new();
            for r in rows {
                check_finite("fig3", &[r.n_atoms, r.xi, r.xi_stderr])?;
                out.push(vec![num(r.n_atoms), r.engine.name().into(), num(r.xi), num(r.xi_stderr), num(20.0 * r.xi.log10())]);
            }
            Ok(vec![OutputFile { name: "fig3.csv".into(), bytes: csv_bytes(&["n_atoms", "engine", "xi", "xi_stderr", "xi2_db"], out)? }])
        }
        FigureData::Fig4(rows) => {
            if rows.is_empty() {
                return Err(incomplete("fig4: no rows"));
            }
            let mut out = Vec::new();
            for r in rows {
                check_finite("fig4", &[r.t_oat, r.delta_g, r.delta_g_stderr])?;
                out.push(vec![
                    num(r.t_oat * 1e3),
                    r.protocol.name().into(),
                    num(r.delta_g),
                    num(r.delta_g_stderr),
                    num(delta_g_snl(r.n_atoms, k0, r.t)),
                ]);
            }
            Ok(vec![OutputFile {
                name: "fig4.csv".into(),
                bytes: csv_bytes(&["t_oat_ms", "protocol", "delta_g", "delta_g_stderr", "delta_g_snl"], out)?,
            }])
        }
        FigureData::Fig5 { sigma_theta, sigma_n_rel, delta_n } => Ok(vec![
            fig5_table("fig5_sigma_theta", sigma_theta, |r| r.noise.sigma_theta)?,
            fig5_table("fig5_sigma_n_rel", sigma_n_rel, |r| r.noise.sigma_n_rel)?,
            fig5_table("fig5_delta_n", delta_n, |r| r.noise.delta_n)?,
        ]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{NoiseSpec, Protocol};
    use num_complex::Complex64;

    fn header(f: &OutputFile) -> String {
        String::from_utf8(f.bytes.clone()).unwrap().lines().next().unwrap().to_string()
    }

    fn result(protocol: Protocol, noise: NoiseSpec, dg: f64) -> SensitivityResult {
        SensitivityResult {
            protocol,
            t_oat: 0.01,
            t: 0.06,
            n_atoms: 1e4,
            noise,
            delta_g: dg,
            delta_g_stderr: 0.1 * dg,
            slope: 1.0,
            slope_stderr: 0.0,
            output_variance: 1.0,
            detection_variance: 0.0,
            n_traj: 10,
            bs2: None,
        }
    }

    #[test]
    fn fig2_schema() {
        let d = SqueezingDiagnostics {
            times: vec![0.0, 1e-3],
            chi: vec![0.0, 1.0],
            lambda: vec![0.0, 5e-4],
            q: vec![Complex64::new(1.0, 0.0); 2],
            densities: vec![],
        };
        let f = emit_figure_data(&FigureData::Fig2(d), 1.61e7).unwrap();
        assert_eq!(header(&f[0]), "t_ms,chi_per_s,lambda,q_abs");
    }

    #[test]
    fn fig3_schema_and_refusal() {
        let rows = vec![
            XiRow { n_atoms: 1e4, engine: XiEngine::Analytic, xi: 0.3, xi_stderr: 0.0 },
            XiRow { n_atoms: 1e4, engine: XiEngine::Tw, xi: 0.5, xi_stderr: 0.02 },
        ];
        let f = emit_figure_data(&FigureData::Fig3(rows), 1.61e7).unwrap();
        assert_eq!(header(&f[0]), "n_atoms,engine,xi,xi_stderr,xi2_db");
        assert!(emit_figure_data(&FigureData::Fig3(vec![]), 1.61e7).is_err());
        let bad = vec![XiRow { n_atoms: 1e4, engine: XiEngine::Tw, xi: f64::NAN, xi_stderr: 0.0 }];
        assert!(matches!(emit_figure_data(&FigureData::Fig3(bad), 1.61e7), Err(Error::Incomplete(_))));
    }

    #[test]
    fn fig5_three_tables() {
        let z = NoiseSpec::default();
        let mk = |n: NoiseSpec| vec![result(Protocol::QuantumEnhanced, z, 1e-7), result(Protocol::QuantumEnhanced, n, 1.2e-7)];
        let data = FigureData::Fig5 {
            sigma_theta: mk(NoiseSpec { sigma_theta: 0.1, ..z }),
            sigma_n_rel: mk(NoiseSpec { sigma_n_rel: 0.1, ..z }),
            delta_n: mk(NoiseSpec { delta_n: 10.0, ..z }),
        };
        let f = emit_figure_data(&data, 1.61e7).unwrap();
        let names: Vec<_> = f.iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, ["fig5_sigma_theta.csv", "fig5_sigma_n_rel.csv", "fig5_delta_n.csv"]);
        assert_eq!(header(&f[1]), "key,delta_g,delta_g_stderr,ratio_to_noiseless");
        let body = String::from_utf8(f[2].bytes.clone()).unwrap();
        assert!(body.lines().nth(2).unwrap().rsplit(',').next().unwrap().starts_with("1.2"));
        let missing = FigureData::Fig5 { sigma_theta: vec![], sigma_n_rel: vec![], delta_n: vec![] };
        assert!(emit_figure_data(&missing, 1.61e7).is_err());
    }

    #[test]
    fn snl_value() {
        assert!((delta_g_snl(1e4, 1.61e7, 0.06) - 1.7253e-7).abs() < 1e-10);
    }
}
