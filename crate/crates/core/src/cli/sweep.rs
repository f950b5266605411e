use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::artifacts::Artifacts;
use crate::{Error, Result};

/// Mean and sample standard deviation; the deviation is 0 below two values.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs `inner` once per (value, seed) into `out/point-<i>/seed-<s>` and
/// aggregates scalar `y` per value.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    flag: &str,
    values: &[String],
    seed: u64,
    seeds: u64,
    y: &str,
    jobs: usize,
    inner: &[String],
    out: &Path,
    art: &mut Artifacts,
) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Usage("--values needs at least one entry".into()));
    }
    if seeds == 0 {
        return Err(Error::Usage("--seeds must be at least 1".into()));
    }
    if matches!(inner.first().map(String::as_str), None | Some("sweep" | "replay")) {
        return Err(Error::Usage("sweep needs a planning or simulation subcommand after `--`".into()));
    }
    let flag = flag.trim_start_matches('-');
    let points: Vec<(usize, u64)> = (0..values.len()).flat_map(|i| (0..seeds).map(move |s| (i, seed + s))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<f64>> = pool.install(|| {
        points
            .par_iter()
            .map(|&(i, s)| {
                let dir = out.join(format!("point-{i}")).join(format!("seed-{s}"));
                let mut args = inner.to_vec();
                args.extend([format!("--{flag}"), values[i].clone(), "--seed".into(), s.to_string()]);
                args.extend(["--out".into(), dir.display().to_string()]);
                let o = super::run_args(&args)?;
                o.scalars
                    .get(y)
                    .copied()
                    .ok_or_else(|| Error::Usage(format!("`{}` reports no scalar `{y}`", inner[0])))
            })
            .collect()
    });

    let mut csv = String::from("x,mean,std,n\n");
    let mut failures = String::from("x,seed,code,message\n");
    let mut failed = 0;
    for (i, x) in values.iter().enumerate() {
        let mut ok = Vec::new();
        for (&(j, s), r) in points.iter().zip(&results) {
            if j != i {
                continue;
            }
            match r {
                Ok(v) => ok.push(*v),
                Err(e) => {
                    failed += 1;
                    writeln!(failures, "{x},{s},{},\"{}\"", e.code(), e.to_string().replace('"', "'")).unwrap();
                }
            }
        }
        let (m, sd) = mean_std(&ok);
        writeln!(csv, "{x},{m},{sd},{}", ok.len()).unwrap();
    }
    art.add("sweep.csv", csv);
    art.add("sweep_failures.csv", failures);
    println!("sweep: {} points x {seeds} seeds, {failed} failed", values.len());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_std() {
        assert_eq!(mean_std(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
