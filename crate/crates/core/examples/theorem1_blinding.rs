//! Pooled tomography of a calibration set, before and after adding
//! antipodal partners. The blinded pool looks maximally mixed.

use blindcal::qcore::from_bloch;
use blindcal::scenarios::scenario_theorem1;

fn main() -> blindcal::error::Result<()> {
    let s_p = vec![from_bloch([0.0, 0.0, 1.0])?, from_bloch([1.0, 0.0, 0.0])?];
    let ns = [1_000, 10_000, 100_000];
    let result = scenario_theorem1(&s_p, &ns, 20, 7)?;
    for n in ns {
        let rows: Vec<_> = result.rows.iter().filter(|r| r.shots == n).collect();
        let mean = |f: fn(&&blindcal::scenarios::ResultRow) -> f64| {
            rows.iter().map(f).sum::<f64>() / rows.len() as f64
        };
        println!(
            "N={n:>7}: distance to I/2 plain {:.4}, blinded {:.4} (3/sqrt(N) = {:.4})",
            mean(|r| r.value_uncalibrated),
            mean(|r| r.value_calibrated),
            3.0 / (n as f64).sqrt()
        );
    }
    Ok(())
}
