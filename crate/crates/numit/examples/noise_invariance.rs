//! Three archetypal systems, one per dominant atom, each swept over three
//! decades of observation noise. The total information falls by more than an
//! order of magnitude, taking every raw atom with it, yet each archetype's
//! dominant null quantile stays pinned near the top of the distribution
//! across the whole sweep. That stability is what lets recordings with
//! different signal-to-noise ratios be compared at all.

use numit::{gaussian_noise_sweep, CovMatrix, GaussianPidSystem};

struct Archetype {
    label: &'static str,
    system: GaussianPidSystem,
    pick_share: fn(&numit::AtomShares) -> f64,
    pick_q: fn(&numit::NormalizedAtoms) -> f64,
}

fn main() -> numit::Result<()> {
    let near_dup = CovMatrix::new(nalgebra::dmatrix![1.0, 0.9999; 0.9999, 1.0])?;
    let indep = CovMatrix::new(nalgebra::dmatrix![1.0, 0.0; 0.0, 1.0])?;
    let opposed = CovMatrix::new(nalgebra::dmatrix![1.0, -0.9; -0.9, 1.0])?;

    let archetypes = [
        Archetype {
            // Near-duplicate sources say the same thing about the target.
            label: "redundant",
            system: GaussianPidSystem::two_to_one([0.45, 0.45], near_dup, 0.19, 1.0)?,
            pick_share: |s| s.red,
            pick_q: |q| q.red_q,
        },
        Archetype {
            // Only the second source is coupled in.
            label: "unique",
            system: GaussianPidSystem::two_to_one([0.0, 0.9], indep, 0.19, 1.0)?,
            pick_share: |s| s.un_y,
            pick_q: |q| q.uny_q,
        },
        Archetype {
            // Anticorrelated sources whose sum the target reads out: each
            // alone says little, together they pin the target down.
            label: "synergistic",
            system: GaussianPidSystem::two_to_one([0.45, 0.45], opposed, 0.998, 1.0)?,
            pick_share: |s| s.syn,
            pick_q: |q| q.syn_q,
        },
    ];

    let grid = [1.0, 3.0, 10.0, 30.0, 100.0];

    for (i, arch) in archetypes.iter().enumerate() {
        let (rows, _) = gaussian_noise_sweep(&arch.system, &grid, 1000, 100 + i as u64)?;

        println!(
            "{} system (dominant atom share and quantile per gain):",
            arch.label
        );
        println!("  gain       tmi        share      quantile");
        let mut qs = Vec::new();
        for row in &rows {
            let share = (arch.pick_share)(row.shares.as_ref().unwrap());
            let q = (arch.pick_q)(row.quantiles.as_ref().unwrap());
            qs.push(q);
            println!(
                "  {:>6.1}   {:.6}   {:.6}   {:.6}",
                row.param, row.atoms.tmi, share, q
            );
        }
        let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("  quantile range across the sweep: {:.4}", hi - lo);
        println!();
    }

    println!("Total information falls by more than an order of magnitude over");
    println!("each sweep, yet every archetype keeps its dominant quantile high");
    println!("and nearly constant. The quantile identifies the system, not the");
    println!("noise level it was measured at.");
    Ok(())
}
