//! Two correlated sources drive a single target through a linear-Gaussian
//! channel. At low observation noise the raw decomposition is dominated by
//! synergy; as noise grows the redundant component takes over, even though
//! every atom is shrinking in absolute terms. Ranking atoms by their raw
//! value therefore answers a different question at every noise level. The
//! null quantiles make the levels comparable.

use numit::{
    build_null_ensemble, nmi_normalize, normalized_against, pid_gaussian, GaussianPidSystem,
};

fn main() -> numit::Result<()> {
    // Equal couplings onto one target, strongly correlated sources.
    let sigma_s = numit::CovMatrix::new(nalgebra::dmatrix![20.0, 10.0; 10.0, 20.0])?;
    let base = GaussianPidSystem::two_to_one([0.5, 0.5], sigma_s, 1.0, 1.0)?;

    println!("noise gain | tmi      | raw syn  | syn share | syn quantile | red quantile");
    println!("-----------+----------+----------+-----------+--------------+-------------");

    for (i, g) in [1.0, 10.0, 100.0].into_iter().enumerate() {
        let sys = base.with_gain(g)?;
        let atoms = pid_gaussian(&sys)?;
        let shares = nmi_normalize(&atoms)?;

        // Null systems are tuned to carry the same total information, so
        // the quantile asks "how synergistic is this system compared to
        // what that much information typically looks like".
        let ens = build_null_ensemble(atoms.tmi, 1, 1, 1, 2000, 42 + i as u64)?;
        let q = normalized_against(&atoms, &ens)?;

        println!(
            "{:>10} | {:.6} | {:.6} | {:>9.4} | {:>12.4} | {:>12.4}",
            g, atoms.tmi, atoms.syn, shares.syn, q.syn_q, q.red_q
        );
    }

    println!();
    println!("The raw synergy share halves as noise drowns the channel, but the");
    println!("synergy quantile barely moves: relative to null systems carrying");
    println!("the same information, this channel is equally synergistic at every");
    println!("noise level.");
    Ok(())
}
