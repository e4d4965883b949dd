//! Parallel sweep of the spectral abscissa over fleet size and share of
//! attentive drivers. `RINGWAVE_THREADS` is honoured as in the CLI.

use rayon::prelude::*;
use ringwave::spectrum::eigenvalues_on_h;
use ringwave::stability::interleaved_ring;
use ringwave::LinearTrio;

fn main() -> ringwave::Result<()> {
    let threads = ringwave::cli::thread_count()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    let g = 20.0 / (10.4 * 10.4);
    let trios = [
        LinearTrio::new(4.0 * 1.27491, 4.0 + g, g)?,
        LinearTrio::new(0.5 * 1.27491, 0.5 + g, g)?,
    ];
    let sizes = [10, 25, 50, 100, 200];
    let rates = [0.80, 0.85, 0.88, 0.90];
    let grid: Vec<(f64, usize)> = rates
        .iter()
        .flat_map(|&r| sizes.iter().map(move |&n| (r, n)))
        .collect();
    let abscissa: Vec<f64> = pool.install(|| {
        grid.par_iter()
            .map(|&(r, n)| {
                Ok(eigenvalues_on_h(&interleaved_ring(&trios, &[r, 1.0 - r], n)?)?.abscissa)
            })
            .collect::<ringwave::Result<_>>()
    })?;
    print!("rate \\ n");
    for n in sizes {
        print!("{n:>11}");
    }
    for (i, r) in rates.iter().enumerate() {
        print!("\n{r:>8.2}");
        for a in &abscissa[i * sizes.len()..(i + 1) * sizes.len()] {
            print!("{a:>11.2e}");
        }
    }
    println!();
    Ok(())
}
