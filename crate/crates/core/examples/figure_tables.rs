// Figure-data tables for the squeezing-against-N comparison, from the closed-form model over a
// range of atom numbers at perfect overlap and fixed coupling.
use oat_gravimetry::figures::{emit_figure_data, FigureData, XiEngine, XiRow};
use oat_gravimetry::oat::{xi_min, OatParams};
use oat_gravimetry::params::SpeciesParams;
use oat_gravimetry::Result;

pub fn run_example() -> Result<String> {
    let lambda = 2e-4;
    let rows: Result<Vec<XiRow>> = [1e3, 3e3, 1e4, 3e4, 1e5]
        .iter()
        .map(|&n| {
            let p = xi_min(&OatParams::perfect_overlap(n, lambda))?;
            Ok(XiRow { n_atoms: n, engine: XiEngine::Analytic, xi: p.xi, xi_stderr: 0.0 })
        })
        .collect();
    let files = emit_figure_data(&FigureData::Fig3(rows?), SpeciesParams::rb87().k0)?;
    let text = String::from_utf8_lossy(&files[0].bytes).into_owned();
    println!("{}:\n{text}", files[0].name);
    Ok(text)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
