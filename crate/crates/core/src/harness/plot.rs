use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::record::{ExperimentRecord, StatisticsBlock};
use super::run::bootstrap_seed;
use crate::error::Result;
use crate::stats::{bootstrap_sigma_sweep, NOISELESS_ASYMPTOTE, THRESHOLD};

/// Resample counts of the convergence sweep: 50, 100, ..., 1000.
pub const CONVERGENCE_RESAMPLES: [usize; 20] = [
    50, 100, 150, 200, 250, 300, 350, 400, 450, 500, 550, 600, 650, 700, 750, 800, 850, 900, 950, 1000,
];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub estimates: PathBuf,
    pub constants: PathBuf,
    pub convergence: PathBuf,
}

fn file_label(record: &ExperimentRecord) -> String {
    let raw = record
        .noise
        .as_ref()
        .map(|n| n.label.clone())
        .filter(|l| !l.is_empty())
        .unwrap_or_else(|| match &record.config.noise {
            super::config::NoiseSpec::Preset(p) => p.clone(),
            super::config::NoiseSpec::Model(m) => m.label.clone(),
        });
    let cleaned: String = raw
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "results".into()
    } else {
        cleaned
    }
}

fn modes(record: &ExperimentRecord) -> impl Iterator<Item = (usize, &'static str, &StatisticsBlock)> {
    record.sizes.iter().flat_map(|s| {
        [
            ("unmitigated", s.unmitigated.as_ref()),
            ("mitigated", s.mitigated.as_ref()),
        ]
        .into_iter()
        .filter_map(move |(name, b)| b.map(|b| (s.num_qubits, name, b)))
    })
}

/// Writes `<label>_hd.csv`, `constants.csv` and
/// `<label>_bootstrap_convergence.csv` into `dir`.
pub fn emit_plot_data(record: &ExperimentRecord, dir: &Path) -> Result<PlotFiles> {
    std::fs::create_dir_all(dir)?;
    let label = file_label(record);

    let mut hd = String::from("m,mode,h_d,sigma,lower,upper\n");
    for (m, mode, b) in modes(record) {
        let s = b.sigma_bootstrap;
        writeln!(hd, "{m},{mode},{},{s},{},{}", b.h_d, b.h_d - 2.0 * s, b.h_d + 2.0 * s).expect("string write");
    }

    let constants = format!("name,value\nthreshold,{THRESHOLD}\nasymptote,{NOISELESS_ASYMPTOTE}\n");

    let mut conv = String::from("m,mode,n_resamples,sigma\n");
    for size in &record.sizes {
        let sets: [(&str, u64, Option<Vec<f64>>); 2] = [
            (
                "unmitigated",
                0,
                size.circuits
                    .iter()
                    .map(|c| c.unmitigated.as_ref().map(|r| r.heavy_fraction))
                    .collect(),
            ),
            ("mitigated", 1, size.circuits.iter().map(|c| c.e_c).collect()),
        ];
        for (mode, tag, values) in sets {
            let Some(values) = values.filter(|v| !v.is_empty()) else {
                continue;
            };
            let seed = bootstrap_seed(record.config.seed, size.num_qubits, tag);
            for (n, sigma) in bootstrap_sigma_sweep(&values, &CONVERGENCE_RESAMPLES, seed)? {
                writeln!(conv, "{},{mode},{n},{sigma}", size.num_qubits).expect("string write");
            }
        }
    }

    let files = PlotFiles {
        estimates: dir.join(format!("{label}_hd.csv")),
        constants: dir.join("constants.csv"),
        convergence: dir.join(format!("{label}_bootstrap_convergence.csv")),
    };
    std::fs::write(&files.estimates, hd)?;
    std::fs::write(&files.constants, constants)?;
    std::fs::write(&files.convergence, conv)?;
    Ok(files)
}
