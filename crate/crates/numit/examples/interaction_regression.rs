//! A downstream analysis question: does some per-subject covariate predict
//! the synergy of that subject's recording, and does the answer depend on
//! whether synergy was summarised as a naive share or as a null quantile?
//! The stacked interaction regression answers it with one model: the slope
//! in share space, the slope in quantile space, and a p-value for their
//! difference.
//!
//! The simulated cohort is built so the covariate effect is visible only in
//! quantile space, which is what happens in practice when noise levels vary
//! across subjects and wash the raw shares out.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use numit::rng::substream;
use numit::{interaction_regression, summary_stats};

fn randn(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn main() -> numit::Result<()> {
    let mut rng = substream(2024, 0);
    let n = 240;

    let mut covariate = Vec::with_capacity(n);
    let mut share = Vec::with_capacity(n);
    let mut quantile = Vec::with_capacity(n);
    for _ in 0..n {
        let c = randn(&mut rng);
        // Per-subject noise level scrambles the share but not the
        // quantile, leaving almost no trace of the covariate in shares.
        let noise_level: f64 = rng.random_range(0.5..2.0);
        share.push(0.02 * c + 0.8 * noise_level + 0.3 * randn(&mut rng));
        quantile.push(0.6 * c + 0.3 * randn(&mut rng));
        covariate.push(c);
    }

    let fit = interaction_regression(&covariate, &share, &covariate, &quantile)?;

    println!(
        "cohort of {} subjects, same covariate scored two ways",
        fit.n / 2
    );
    println!();
    println!("correlation in share space:    r = {:+.3}", fit.r_nmi);
    println!("correlation in quantile space: r = {:+.3}", fit.r_numit);
    println!();
    println!("stacked regression (standardised within each scoring):");
    println!(
        "  slope, share space            {:+.4}  p = {:.2e}",
        fit.beta[1], fit.p_values[1]
    );
    println!(
        "  slope change, quantile space  {:+.4}  p = {:.2e}",
        fit.beta[3], fit.p_values[3]
    );
    println!();
    if fit.p_values[3] < 0.01 {
        println!("The interaction term is significant: the two summaries support");
        println!("different conclusions, and only the quantile scoring resolves");
        println!("the covariate effect.");
    } else {
        println!("No significant interaction: both summaries tell the same story.");
    }

    // The same machinery scores a single column against zero, e.g. a mean
    // quantile shift of a treatment group.
    let shift: Vec<f64> = (0..60).map(|_| 0.3 + 0.4 * randn(&mut rng)).collect();
    let stats = summary_stats(&shift)?;
    println!();
    println!(
        "one-sample check on a shifted group: mean {:+.3}, t = {:+.2}, p = {:.1e}",
        stats.mean, stats.t, stats.p
    );
    Ok(())
}
