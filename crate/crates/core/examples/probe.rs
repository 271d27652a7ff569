// Scratch probe for desk-scale behavior; not part of the test suite.

use sparsephase::*;

fn main() {
    for seed in [1u64, 2, 3] {
        let spec = SweepSpec {
            n: 500,
            m: 1200,
            sigma_over_norm_sq: 0.1,
            beta: 1e-12,
            t_max: 3000,
            record_every: 5,
            trials: 20,
            master_seed: seed,
            ..SweepSpec::new(SweepAxis::Sparsity(vec![3, 5, 8, 12, 18]))
        };
        let r = run_sweep(&spec).unwrap();
        let fit = r.error_fit.as_ref().unwrap();
        println!(
            "k-sweep seed={seed}: slope={:.4} r2={:.4} fails={:?} means={:?}",
            fit.line.slope,
            fit.line.r_squared,
            r.axes.iter().map(|a| a.failures).collect::<Vec<_>>(),
            r.axes
                .iter()
                .map(|a| format!("{:.2e}", a.mean_oracle.unwrap()))
                .collect::<Vec<_>>()
        );
    }

    for seed in [1u64, 2, 3] {
        let spec = SweepSpec {
            n: 500,
            k: 5,
            m: 500,
            beta: 1e-12,
            t_max: 2000,
            record_every: 5,
            trials: 20,
            master_seed: seed,
            ..SweepSpec::new(SweepAxis::NoiseRatio(vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5]))
        };
        let r = run_sweep(&spec).unwrap();
        let fit = r.error_fit.as_ref().unwrap();
        println!(
            "noise-sweep seed={seed}: slope={:.4} r2={:.4} fails={:?} warnings={:?}",
            fit.line.slope,
            fit.line.r_squared,
            r.axes.iter().map(|a| a.failures).collect::<Vec<_>>(),
            r.warnings
        );
    }

    for seed in [1u64, 2, 3] {
        let spec = SweepSpec {
            n: 500,
            k: 5,
            m: 800,
            sigma_over_norm_sq: 0.1,
            beta: 1e-12,
            t_max: 2000,
            record_every: 5,
            trials: 20,
            master_seed: seed,
            ..SweepSpec::new(SweepAxis::SampleCount(vec![400, 600, 900, 1350, 2000]))
        };
        let r = run_sweep(&spec).unwrap();
        let fit = r.error_fit.as_ref().unwrap();
        println!(
            "m-sweep seed={seed}: slope={:.4} r2={:.4} fails={:?}",
            fit.line.slope,
            fit.line.r_squared,
            r.axes.iter().map(|a| a.failures).collect::<Vec<_>>()
        );
    }
}
