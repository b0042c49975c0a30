use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, HyperDraw, RunManifest};

pub const MANIFEST_FILE: &str = "manifest.json";
const HYPER_COLUMNS: [&str; 5] = ["mu", "rho", "tau2", "varsigma", "lambda"];

/// Writes one table per parameter block plus `manifest.json` into `dir`.
///
/// Values use the shortest decimal form that reads back to the same `f64`,
/// so [`read_draws`] reproduces them bit for bit.
pub fn write_draws(output: &ChainOutput, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    if output.n_draws() == 0 {
        warn!("no retained draws; writing empty tables to {}", dir.display());
    }
    let layout = output.layout();
    let beta_cols: Vec<String> = layout.beta.iter().map(|(u, p)| format!("{u}|{p}")).collect();
    let case_cols: Vec<String> = layout.cases.iter().map(|(p, i)| format!("{p}|{i}")).collect();
    write_table(&dir.join("beta.csv"), &beta_cols, &output.beta)?;
    write_table(&dir.join("psi.csv"), &case_cols, &output.psi)?;
    write_table(&dir.join("zeta.csv"), &case_cols, &output.zeta)?;
    write_table(&dir.join("kappa.csv"), &case_cols, &output.kappa)?;
    let hyper: Vec<Vec<f64>> = output
        .hyper
        .iter()
        .map(|h| vec![h.mu, h.rho, h.tau2, h.varsigma, h.lambda])
        .collect();
    let hyper_cols: Vec<String> = HYPER_COLUMNS.iter().map(|s| s.to_string()).collect();
    write_table(&dir.join("hyper.csv"), &hyper_cols, &hyper)?;
    let manifest = serde_json::to_string_pretty(&output.manifest)?;
    fs::write(dir.join(MANIFEST_FILE), manifest + "\n")?;
    Ok(())
}

fn write_table(path: &Path, header: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    // csv skips a record with zero fields, which would lose the header.
    if !header.is_empty() {
        w.write_record(header)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a directory written by [`write_draws`].
pub fn read_draws(dir: impl AsRef<Path>) -> Result<ChainOutput> {
    let dir = dir.as_ref();
    let bad = |message: String| Error::Draws {
        path: dir.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(|e| bad(format!("{MANIFEST_FILE}: {e}")))?;
    let manifest: RunManifest = serde_json::from_str(&text)?;
    let n = manifest.draws;
    let n_beta = manifest.layout.beta.len();
    let n_case = manifest.layout.cases.len();
    let beta = read_table(&dir.join("beta.csv"), n_beta, n).map_err(&bad)?;
    let psi = read_table(&dir.join("psi.csv"), n_case, n).map_err(&bad)?;
    let zeta = read_table(&dir.join("zeta.csv"), n_case, n).map_err(&bad)?;
    let kappa = read_table(&dir.join("kappa.csv"), n_case, n).map_err(&bad)?;
    let hyper = read_table(&dir.join("hyper.csv"), HYPER_COLUMNS.len(), n)
        .map_err(&bad)?
        .into_iter()
        .map(|r| HyperDraw {
            mu: r[0],
            rho: r[1],
            tau2: r[2],
            varsigma: r[3],
            lambda: r[4],
        })
        .collect();
    Ok(ChainOutput {
        manifest,
        beta,
        psi,
        zeta,
        kappa,
        hyper,
    })
}

fn read_table(path: &Path, cols: usize, rows: usize) -> std::result::Result<Vec<Vec<f64>>, String> {
    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    if cols == 0 {
        return Ok(vec![Vec::new(); rows]);
    }
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| format!("{name}: {e}"))?;
    let header_len = r.headers().map_err(|e| format!("{name}: {e}"))?.len();
    if header_len != cols {
        return Err(format!("{name}: expected {cols} columns, found {header_len}"));
    }
    let mut out = Vec::with_capacity(rows);
    for rec in r.records() {
        let rec = rec.map_err(|e| format!("{name}: {e}"))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format!("{name}: {e}"))?;
        out.push(row);
    }
    if out.len() != rows {
        return Err(format!("{name}: expected {rows} rows, found {}", out.len()));
    }
    Ok(out)
}

/// Directory of chain `k` under a multi-chain output root.
pub fn chain_dir(root: impl AsRef<Path>, chain: usize) -> PathBuf {
    root.as_ref().join(format!("chain-{chain}"))
}

/// Reads a single-chain directory, or every `chain-k` subdirectory of a
/// multi-chain root in index order.
pub fn read_chains(dir: impl AsRef<Path>) -> Result<Vec<ChainOutput>> {
    let dir = dir.as_ref();
    if dir.join(MANIFEST_FILE).exists() {
        return Ok(vec![read_draws(dir)?]);
    }
    let mut chains = Vec::new();
    while chain_dir(dir, chains.len()).join(MANIFEST_FILE).exists() {
        chains.push(read_draws(chain_dir(dir, chains.len()))?);
    }
    if chains.is_empty() {
        return Err(Error::Draws {
            path: dir.to_path_buf(),
            message: "no manifest.json and no chain-k subdirectories".into(),
        });
    }
    Ok(chains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::{AcceptanceReport, DrawLayout, PosteriorDraw};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_output(n: usize) -> ChainOutput {
        let layout = DrawLayout {
            beta: vec![("a".into(), "1".into()), ("a".into(), "2".into()), ("b".into(), "2".into())],
            cases: vec![("1".into(), "x".into()), ("2".into(), "y".into())],
        };
        let mut out = ChainOutput {
            manifest: RunManifest {
                seed: 9,
                chain: 0,
                iterations: n,
                burnin: 0,
                thin: 1,
                draws: 0,
                config_hash: "abc".into(),
                acceptance: AcceptanceReport::default(),
                identified: false,
                elapsed_secs: 0.5,
                layout,
            },
            beta: vec![],
            psi: vec![],
            zeta: vec![],
            kappa: vec![],
            hyper: vec![],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut v = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.random::<f64>() * 7.0 - 3.5).collect() };
        for _ in 0..n {
            let d = PosteriorDraw {
                beta: v(3),
                psi: v(2),
                zeta: v(2),
                kappa: v(2).into_iter().map(f64::exp).collect(),
                hyper: HyperDraw {
                    mu: 3.0 + 1e-17,
                    rho: 0.9,
                    tau2: 1.0 / 3.0,
                    varsigma: 1e-300,
                    lambda: 12345.678,
                },
            };
            out.push(d);
        }
        out
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let out = sample_output(25);
        let dir = tempfile::tempdir().unwrap();
        write_draws(&out, dir.path()).unwrap();
        let back = read_draws(dir.path()).unwrap();
        assert_eq!(back, out);
    }

    #[test]
    fn zero_draws_round_trip() {
        let out = sample_output(0);
        let dir = tempfile::tempdir().unwrap();
        write_draws(&out, dir.path()).unwrap();
        assert!(dir.path().join(MANIFEST_FILE).exists());
        let back = read_draws(dir.path()).unwrap();
        assert_eq!(back.n_draws(), 0);
        assert_eq!(back, out);
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain-file");
        fs::write(&file, "x").unwrap();
        assert!(write_draws(&sample_output(1), file.join("sub")).is_err());
    }

    #[test]
    fn multi_chain_roots_are_discovered() {
        let dir = tempfile::tempdir().unwrap();
        for k in 0..2 {
            write_draws(&sample_output(3), chain_dir(dir.path(), k)).unwrap();
        }
        let chains = read_chains(dir.path()).unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(ChainOutput::pool(chains).unwrap().n_draws(), 6);
    }
}
