//! Binary-source discrete systems: a joint pmf over two source bits, a
//! 2-input logic gate, and a flip-noise channel on the gate output.
//!
//! All information quantities here are exact finite sums, which makes this
//! family a sharp end-to-end check of the normalisation machinery: the
//! total information `H(T) - H2(p_eps)` has a closed form, the noise level
//! that hits a target information is a scalar root, and the null ensemble
//! is a uniform draw over the seven structurally distinct gates.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::null::{normalized_against, NormalizedAtoms, NullEnsemble, NullFamily};
use crate::pid::{mmi_pid, PidAtoms};
use crate::rng::substream;
use crate::root::bisect_increasing;
use crate::sampling::symmetric_dirichlet;

/// Resampling budget per ensemble slot when a draw cannot reach the target
/// information (e.g. a near-deterministic pmf on a weak gate).
pub const DEFAULT_DISCRETE_RETRY_BUDGET: usize = 50;

const PMF_SUM_TOL: f64 = 1e-12;
const TMI_TOL: f64 = 1e-9;
const MAX_BISECT: usize = 200;
/// Upper bisection endpoint: noise is solved on [0, 1/2), where the
/// information is strictly decreasing and the root unique.
const P_EPS_HI: f64 = 0.5 - 1e-9;

/// Joint distribution of two source bits, ordered (p00, p01, p10, p11)
/// over (X, Y).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointPmf {
    probs: [f64; 4],
}

impl JointPmf {
    pub fn new(probs: [f64; 4]) -> Result<Self> {
        for p in probs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::invalid(
                    "joint pmf",
                    format!("entry {p} is not a probability"),
                ));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::invalid(
                "joint pmf",
                format!("entries sum to {sum}, expected 1"),
            ));
        }
        Ok(JointPmf { probs })
    }

    pub fn uniform() -> Self {
        JointPmf { probs: [0.25; 4] }
    }

    pub fn probs(&self) -> &[f64; 4] {
        &self.probs
    }

    /// p(X = x, Y = y).
    pub fn prob(&self, x: u8, y: u8) -> f64 {
        self.probs[(2 * x + y) as usize]
    }
}

/// Truth table of a 2-input binary gate over inputs (00, 01, 10, 11).
///
/// Any table is a valid observed system. The null ensemble, however, draws
/// only from [`Gate::canonical_set`]: complementing every output leaves all
/// source-target informations unchanged, so of the 16 tables the 2 constant
/// ones carry no information and the rest pair up into 7 classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    truth: [u8; 4],
}

impl Gate {
    pub fn new(truth: [u8; 4]) -> Result<Self> {
        if truth.iter().any(|&b| b > 1) {
            return Err(Error::invalid("gate", "truth table entries must be 0 or 1"));
        }
        Ok(Gate { truth })
    }

    /// Parse a 4-character bitstring over inputs (00, 01, 10, 11),
    /// e.g. "0110" for exclusive-or.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.chars().collect();
        if chars.len() != 4 {
            return Err(Error::invalid(
                "gate",
                format!("bitstring {s:?} must have exactly 4 characters"),
            ));
        }
        let mut truth = [0u8; 4];
        for (i, c) in chars.iter().enumerate() {
            truth[i] = match c {
                '0' => 0,
                '1' => 1,
                _ => {
                    return Err(Error::invalid(
                        "gate",
                        format!("bitstring {s:?} contains {c:?}"),
                    ))
                }
            };
        }
        Ok(Gate { truth })
    }

    pub fn bitstring(&self) -> String {
        self.truth.iter().map(|b| char::from(b'0' + b)).collect()
    }

    pub fn output(&self, x: u8, y: u8) -> u8 {
        self.truth[(2 * x + y) as usize]
    }

    /// Table with every output flipped.
    pub fn complement(&self) -> Gate {
        Gate {
            truth: [
                1 - self.truth[0],
                1 - self.truth[1],
                1 - self.truth[2],
                1 - self.truth[3],
            ],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.truth.iter().all(|&b| b == self.truth[0])
    }

    fn index(&self) -> u8 {
        self.truth.iter().fold(0, |acc, &b| (acc << 1) | b)
    }

    /// Representative of the output-complement pair: the table with more
    /// ones, ties broken towards the numerically smaller bitstring.
    pub fn canonical(&self) -> Gate {
        let comp = self.complement();
        let (a, b) = (self.truth.iter().sum::<u8>(), comp.truth.iter().sum::<u8>());
        if a > b || (a == b && self.index() < comp.index()) {
            *self
        } else {
            comp
        }
    }

    /// The 7 non-constant gates up to output complement, in bitstring order.
    pub fn canonical_set() -> [Gate; 7] {
        let mut set: Vec<Gate> = Vec::with_capacity(7);
        for bits in 0u8..16 {
            let g = Gate {
                truth: [(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1],
            };
            if g.is_constant() {
                continue;
            }
            let c = g.canonical();
            if !set.contains(&c) {
                set.push(c);
            }
        }
        set.sort_by_key(Gate::index);
        set.try_into().expect("complement pairing leaves 7 gates")
    }
}

impl std::fmt::Display for Gate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.bitstring())
    }
}

/// Source pmf + gate + flip noise: the target is the gate output, inverted
/// with probability `p_eps`.
///
/// `p_eps` lives in [0, 1/2]; every information quantity is symmetric under
/// `p_eps <-> 1 - p_eps` (flipping more often than half the time is the
/// same channel with relabelled outputs), so the upper half adds nothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteSystem {
    pmf: JointPmf,
    gate: Gate,
    p_eps: f64,
}

impl DiscreteSystem {
    pub fn new(pmf: JointPmf, gate: Gate, p_eps: f64) -> Result<Self> {
        if !(p_eps.is_finite() && (0.0..=0.5).contains(&p_eps)) {
            return Err(Error::invalid(
                "flip probability",
                format!("{p_eps} is outside [0, 0.5]"),
            ));
        }
        Ok(DiscreteSystem { pmf, gate, p_eps })
    }

    pub fn pmf(&self) -> &JointPmf {
        &self.pmf
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn p_eps(&self) -> f64 {
        self.p_eps
    }

    pub fn with_p_eps(&self, p_eps: f64) -> Result<Self> {
        Self::new(self.pmf, self.gate, p_eps)
    }

    /// p(gate output = 0) before noise.
    fn p_z0(&self) -> f64 {
        let mut p = 0.0;
        for x in 0..2u8 {
            for y in 0..2u8 {
                if self.gate.output(x, y) == 0 {
                    p += self.pmf.prob(x, y);
                }
            }
        }
        p
    }
}

/// Which source variable a marginal information refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceVar {
    X,
    Y,
}

/// Dirichlet(alpha, ..., alpha) draw over the four source outcomes.
pub fn sample_source_pmf<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<JointPmf> {
    let v = symmetric_dirichlet(rng, 4, alpha)?;
    JointPmf::new([v[0], v[1], v[2], v[3]])
}

/// `-sum p ln p` with the `0 ln 0 = 0` convention.
pub fn discrete_entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn h2(p: f64) -> f64 {
    discrete_entropy(&[p, 1.0 - p])
}

/// Distribution (p(T=0), p(T=1)) of the noisy target.
pub fn target_distribution(sys: &DiscreteSystem) -> (f64, f64) {
    let pz0 = sys.p_z0();
    let p0 = pz0 * (1.0 - sys.p_eps) + (1.0 - pz0) * sys.p_eps;
    (p0, 1.0 - p0)
}

/// Information between both sources and the target.
///
/// Given the sources, the target is the (deterministic) gate output pushed
/// through the flip channel, so `H(T|X,Y) = H2(p_eps)` exactly and the
/// information reduces to `H(T) - H2(p_eps)`. Zero at `p_eps = 1/2`,
/// maximal at `p_eps = 0`, never negative.
pub fn discrete_tmi(sys: &DiscreteSystem) -> f64 {
    let (p0, p1) = target_distribution(sys);
    (discrete_entropy(&[p0, p1]) - h2(sys.p_eps)).max(0.0)
}

/// Information between one source and the target, `H(T) - H(T|source)`.
pub fn marginal_mi_discrete(sys: &DiscreteSystem, source: SourceVar) -> f64 {
    let (p0, p1) = target_distribution(sys);
    let mut h_cond = 0.0;
    for s in 0..2u8 {
        let (p_s, p_s_z0) = match source {
            SourceVar::X => {
                let p_s = sys.pmf.prob(s, 0) + sys.pmf.prob(s, 1);
                let z0 = (0..2u8)
                    .filter(|&y| sys.gate.output(s, y) == 0)
                    .map(|y| sys.pmf.prob(s, y))
                    .sum::<f64>();
                (p_s, z0)
            }
            SourceVar::Y => {
                let p_s = sys.pmf.prob(0, s) + sys.pmf.prob(1, s);
                let z0 = (0..2u8)
                    .filter(|&x| sys.gate.output(x, s) == 0)
                    .map(|x| sys.pmf.prob(x, s))
                    .sum::<f64>();
                (p_s, z0)
            }
        };
        if p_s == 0.0 {
            continue;
        }
        let pz0_cond = p_s_z0 / p_s;
        let pt0_cond = pz0_cond * (1.0 - sys.p_eps) + (1.0 - pz0_cond) * sys.p_eps;
        h_cond += p_s * h2(pt0_cond);
    }
    (discrete_entropy(&[p0, p1]) - h_cond).max(0.0)
}

/// Atom decomposition of the source-target information.
pub fn pid_discrete(sys: &DiscreteSystem) -> Result<PidAtoms> {
    let tmi = discrete_tmi(sys);
    let i_x = marginal_mi_discrete(sys, SourceVar::X);
    let i_y = marginal_mi_discrete(sys, SourceVar::Y);
    mmi_pid(i_x, i_y, tmi)
}

/// Flip probability in [0, 1/2) at which `(pmf, gate)` carries exactly
/// `target_tmi` nats, found by bisection on the strictly decreasing
/// information curve.
pub fn solve_p_eps(pmf: &JointPmf, gate: &Gate, target_tmi: f64) -> Result<f64> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    let tmi_at =
        |p: f64| -> Result<f64> { Ok(discrete_tmi(&DiscreteSystem::new(*pmf, *gate, p)?)) };
    let max = tmi_at(0.0)?;
    if target_tmi > max {
        return Err(Error::TargetUnreachable {
            target: target_tmi,
            max,
        });
    }
    // target - tmi(p) is increasing in p; residual in nats.
    let mut f = |p: f64| Ok(target_tmi - tmi_at(p)?);
    let f_hi = target_tmi - tmi_at(P_EPS_HI)?;
    bisect_increasing(
        &mut f,
        0.0,
        P_EPS_HI,
        target_tmi - max,
        f_hi,
        TMI_TOL,
        MAX_BISECT,
    )
}

fn draw_null_discrete<R: Rng + ?Sized>(
    target_tmi: f64,
    alpha: f64,
    gates: &[Gate; 7],
    rng: &mut R,
) -> Result<PidAtoms> {
    let gate = gates[rng.random_range(0..gates.len())];
    let pmf = sample_source_pmf(alpha, rng)?;
    let p_eps = solve_p_eps(&pmf, &gate, target_tmi)?;
    pid_discrete(&DiscreteSystem::new(pmf, gate, p_eps)?)
}

/// `n` null decompositions at `target_tmi`: uniform gate from the canonical
/// seven, Dirichlet(alpha) source pmf, noise solved to the target. Draws
/// whose maximum information falls short of the target are resampled up to
/// `retry_budget` times per slot (common when the target sits near `ln 2`,
/// where only near-balanced gate outputs qualify). Deterministic per seed.
pub fn build_discrete_null_ensemble(
    target_tmi: f64,
    n: usize,
    alpha: f64,
    seed: u64,
    retry_budget: usize,
) -> Result<NullEnsemble> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(
            "dirichlet alpha",
            "must be finite and positive",
        ));
    }
    if n == 0 {
        return Err(Error::invalid("ensemble size", "must be at least 1"));
    }
    if retry_budget == 0 {
        return Err(Error::invalid("retry budget", "must be at least 1"));
    }
    let gates = Gate::canonical_set();
    let per_sample: Vec<(PidAtoms, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let mut failures = 0usize;
            loop {
                match draw_null_discrete(target_tmi, alpha, &gates, &mut rng) {
                    Ok(atoms) => return Ok((atoms, failures)),
                    Err(_) if failures + 1 < retry_budget => failures += 1,
                    Err(_) => {
                        return Err(Error::SamplingExhausted {
                            sample: i,
                            budget: retry_budget,
                        })
                    }
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(NullEnsemble::assemble(
        target_tmi,
        NullFamily::Discrete,
        seed,
        per_sample,
    ))
}

/// Null-model normalisation of a discrete decomposition against the
/// gate-ensemble null at the system's own information level.
pub fn numit_normalize_discrete(
    sys: &DiscreteSystem,
    n: usize,
    alpha: f64,
    seed: u64,
) -> Result<NormalizedAtoms> {
    let tmi = discrete_tmi(sys);
    if tmi < 1e-12 {
        return Err(Error::ZeroTmi);
    }
    let atoms = pid_discrete(sys)?;
    let ens = build_discrete_null_ensemble(tmi, n, alpha, seed, DEFAULT_DISCRETE_RETRY_BUDGET)?;
    normalized_against(&atoms, &ens)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn xor() -> Gate {
        Gate::from_bitstring("0110").unwrap()
    }

    fn copy_x() -> Gate {
        Gate::from_bitstring("0011").unwrap()
    }

    fn or_gate() -> Gate {
        Gate::from_bitstring("0111").unwrap()
    }

    /// Symmetric split with suppressed agreeing inputs: both sources carry
    /// the same information about the output.
    fn redundant_system(p_eps: f64) -> DiscreteSystem {
        let d = 0.01;
        let pmf = JointPmf::new([d / 2.0, (1.0 - d) / 2.0, (1.0 - d) / 2.0, d / 2.0]).unwrap();
        DiscreteSystem::new(pmf, Gate::from_bitstring("1011").unwrap(), p_eps).unwrap()
    }

    #[test]
    fn pmf_and_gate_validation() {
        assert!(JointPmf::new([0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(JointPmf::new([0.3, 0.3, 0.3, 0.3]).is_err());
        assert!(JointPmf::new([0.25, 0.25, 0.25, f64::NAN]).is_err());
        assert!(JointPmf::new([0.1, 0.2, 0.3, 0.4]).is_ok());

        assert!(Gate::from_bitstring("011").is_err());
        assert!(Gate::from_bitstring("01102").is_err());
        assert!(Gate::from_bitstring("01a0").is_err());
        assert_eq!(xor().bitstring(), "0110");
        assert_eq!(xor().output(1, 0), 1);
        assert_eq!(xor().output(1, 1), 0);
        assert!(Gate::new([0, 1, 2, 0]).is_err());

        assert!(DiscreteSystem::new(JointPmf::uniform(), xor(), 0.6).is_err());
        assert!(DiscreteSystem::new(JointPmf::uniform(), xor(), -0.1).is_err());
        assert!(DiscreteSystem::new(JointPmf::uniform(), xor(), 0.5).is_ok());
    }

    #[test]
    fn canonical_set_has_seven_classes() {
        let set = Gate::canonical_set();
        let strings: Vec<String> = set.iter().map(Gate::bitstring).collect();
        assert_eq!(
            strings,
            ["0011", "0101", "0110", "0111", "1011", "1101", "1110"]
        );
        // Every non-constant table maps into the set, and complement pairs
        // map to the same representative.
        for bits in 0u8..16 {
            let g =
                Gate::new([(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1]).unwrap();
            if g.is_constant() {
                continue;
            }
            assert!(set.contains(&g.canonical()));
            assert_eq!(g.canonical(), g.complement().canonical());
        }
    }

    #[test]
    fn entropy_hand_values() {
        assert!((discrete_entropy(&[0.5, 0.5]) - LN2).abs() < 1e-15);
        assert_eq!(discrete_entropy(&[1.0, 0.0]), 0.0);
        assert!((discrete_entropy(&[0.25; 4]) - 2.0 * LN2).abs() < 1e-15);
    }

    #[test]
    fn target_distribution_examples() {
        let sys = DiscreteSystem::new(JointPmf::uniform(), xor(), 0.0).unwrap();
        assert_eq!(target_distribution(&sys), (0.5, 0.5));

        let sys = DiscreteSystem::new(JointPmf::uniform(), or_gate(), 0.0).unwrap();
        let (p0, p1) = target_distribution(&sys);
        assert!((p0 - 0.25).abs() < 1e-15 && (p1 - 0.75).abs() < 1e-15);

        let sys = DiscreteSystem::new(JointPmf::uniform(), or_gate(), 0.5).unwrap();
        let (p0, p1) = target_distribution(&sys);
        assert!((p0 - 0.5).abs() < 1e-15);
        assert_eq!(p0 + p1, 1.0);
    }

    #[test]
    fn tmi_closed_form_values() {
        let sys = DiscreteSystem::new(JointPmf::uniform(), xor(), 0.0).unwrap();
        assert!((discrete_tmi(&sys) - LN2).abs() < 1e-15);

        let scrambled = sys.with_p_eps(0.5).unwrap();
        assert_eq!(discrete_tmi(&scrambled), 0.0);

        // ln 2 - H2(0.1), frozen from the binary entropy evaluation.
        let noisy = sys.with_p_eps(0.1).unwrap();
        assert!((discrete_tmi(&noisy) - 0.368_064_207_168_497).abs() < 1e-12);
    }

    #[test]
    fn tmi_matches_joint_enumeration() {
        // Independent oracle: the same information from the full 8-cell
        // joint p(x, y, t) rather than the channel shortcut.
        let mut rng = substream(401, 0);
        for k in 0..500 {
            let gate = Gate::new([
                (k >> 3) as u8 & 1,
                (k >> 2) as u8 & 1,
                (k >> 1) as u8 & 1,
                k as u8 & 1,
            ])
            .unwrap();
            let pmf = sample_source_pmf(0.8, &mut rng).unwrap();
            let p_eps = 0.5 * ((k % 11) as f64 / 10.0);
            let sys = DiscreteSystem::new(pmf, gate, p_eps).unwrap();

            let mut joint = [[0.0f64; 2]; 4]; // [source cell][t]
            for x in 0..2u8 {
                for y in 0..2u8 {
                    let z = gate.output(x, y) as usize;
                    let cell = (2 * x + y) as usize;
                    joint[cell][z] = pmf.prob(x, y) * (1.0 - p_eps);
                    joint[cell][1 - z] = pmf.prob(x, y) * p_eps;
                }
            }
            let pt: [f64; 2] = [
                joint.iter().map(|c| c[0]).sum(),
                joint.iter().map(|c| c[1]).sum(),
            ];
            let mut mi = 0.0;
            for cell in &joint {
                let ps: f64 = cell[0] + cell[1];
                for t in 0..2 {
                    if cell[t] > 0.0 {
                        mi += cell[t] * (cell[t] / (ps * pt[t])).ln();
                    }
                }
            }
            assert!(
                (discrete_tmi(&sys) - mi).abs() < 1e-12,
                "gate {gate}, p_eps {p_eps}: {} vs {mi}",
                discrete_tmi(&sys)
            );
        }
    }

    #[test]
    fn marginal_information_examples() {
        let sys = DiscreteSystem::new(JointPmf::uniform(), xor(), 0.0).unwrap();
        assert_eq!(marginal_mi_discrete(&sys, SourceVar::X), 0.0);
        assert_eq!(marginal_mi_discrete(&sys, SourceVar::Y), 0.0);

        let sys = DiscreteSystem::new(JointPmf::uniform(), copy_x(), 0.0).unwrap();
        assert!((marginal_mi_discrete(&sys, SourceVar::X) - LN2).abs() < 1e-15);
        assert_eq!(marginal_mi_discrete(&sys, SourceVar::Y), 0.0);

        // H2(1/4) - H2(1/2)/2 for a uniform-input OR, frozen.
        let sys = DiscreteSystem::new(JointPmf::uniform(), or_gate(), 0.0).unwrap();
        assert!((marginal_mi_discrete(&sys, SourceVar::X) - 0.21576155433883566).abs() < 1e-12);
    }

    #[test]
    fn marginals_never_exceed_total() {
        let mut rng = substream(402, 0);
        for k in 0..10_000 {
            let gates = Gate::canonical_set();
            let gate = gates[k % 7];
            let pmf = sample_source_pmf(1.0, &mut rng).unwrap();
            let p_eps = 0.5 * ((k % 13) as f64 / 12.0);
            let sys = DiscreteSystem::new(pmf, gate, p_eps).unwrap();
            let tmi = discrete_tmi(&sys);
            for s in [SourceVar::X, SourceVar::Y] {
                let m = marginal_mi_discrete(&sys, s);
                assert!(m <= tmi + 1e-12, "{gate} p_eps {p_eps}: {m} > {tmi}");
            }
        }
    }

    #[test]
    fn tmi_decreases_with_noise_for_every_gate() {
        let mut rng = substream(403, 0);
        for gate in Gate::canonical_set() {
            for pmf in [
                JointPmf::uniform(),
                sample_source_pmf(1.0, &mut rng).unwrap(),
            ] {
                let mut prev = f64::INFINITY;
                for i in 0..=20 {
                    let p_eps = 0.5 * i as f64 / 20.0;
                    let sys = DiscreteSystem::new(pmf, gate, p_eps).unwrap();
                    let tmi = discrete_tmi(&sys);
                    assert!(tmi < prev + 1e-15, "{gate} at {p_eps}: {tmi} vs {prev}");
                    prev = tmi;
                }
            }
        }
    }

    #[test]
    fn pure_synergy_unique_and_redundant_decompositions() {
        // Exclusive-or hides everything from single sources.
        let atoms =
            pid_discrete(&DiscreteSystem::new(JointPmf::uniform(), xor(), 0.0).unwrap()).unwrap();
        assert!((atoms.tmi - LN2).abs() < 1e-12);
        assert_eq!(atoms.red, 0.0);
        assert_eq!(atoms.un_x, 0.0);
        assert_eq!(atoms.un_y, 0.0);
        assert!((atoms.syn - LN2).abs() < 1e-12);

        // A copy gate puts everything in one unique atom.
        let atoms = pid_discrete(&DiscreteSystem::new(JointPmf::uniform(), copy_x(), 0.0).unwrap())
            .unwrap();
        assert!((atoms.un_x - LN2).abs() < 1e-12);
        assert_eq!(atoms.red, 0.0);
        assert_eq!(atoms.un_y, 0.0);
        assert!(atoms.syn.abs() < 1e-12);

        // Suppressed agreeing inputs make the sources interchangeable:
        // redundancy dominates and synergy stays small.
        let atoms = pid_discrete(&redundant_system(0.0)).unwrap();
        assert_eq!(atoms.un_x, 0.0);
        assert_eq!(atoms.un_y, 0.0);
        assert!(atoms.syn > 0.0);
        assert!(
            atoms.red > 10.0 * atoms.syn,
            "red {} syn {}",
            atoms.red,
            atoms.syn
        );
    }

    #[test]
    fn atom_sum_is_exact() {
        let mut rng = substream(404, 0);
        for k in 0..200 {
            let gates = Gate::canonical_set();
            let sys = DiscreteSystem::new(
                sample_source_pmf(1.0, &mut rng).unwrap(),
                gates[k % 7],
                0.5 * ((k % 9) as f64 / 9.0),
            )
            .unwrap();
            let atoms = pid_discrete(&sys).unwrap();
            let sum: f64 = atoms.as_array().iter().sum();
            assert!((sum - atoms.tmi).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_source_sampling() {
        let mut rng = substream(405, 0);
        let mut mean = [0.0f64; 4];
        let n = 10_000;
        for _ in 0..n {
            let p = sample_source_pmf(1.0, &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(p.probs()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
            assert!((*m - 0.25).abs() < 0.005, "mean {m}");
        }

        // Concentration: huge alpha pins the simplex centre.
        let p = sample_source_pmf(1e6, &mut rng).unwrap();
        for v in p.probs() {
            assert!((v - 0.25).abs() < 0.005);
        }

        let a = sample_source_pmf(1.0, &mut substream(9, 3)).unwrap();
        let b = sample_source_pmf(1.0, &mut substream(9, 3)).unwrap();
        assert_eq!(a, b);

        assert!(sample_source_pmf(0.0, &mut rng).is_err());
        assert!(sample_source_pmf(-1.0, &mut rng).is_err());
    }

    #[test]
    fn noise_solver_hits_target() {
        let uniform = JointPmf::uniform();
        // Maximum information needs zero noise.
        assert_eq!(solve_p_eps(&uniform, &xor(), LN2).unwrap(), 0.0);

        // Inverse of the closed-form evaluation at p_eps = 0.1.
        let p = solve_p_eps(&uniform, &xor(), 0.368_064_207_168_497).unwrap();
        assert!((p - 0.1).abs() < 1e-6, "p_eps = {p}");

        let constant = Gate::from_bitstring("0000").unwrap();
        assert!(matches!(
            solve_p_eps(&uniform, &constant, 0.1),
            Err(Error::TargetUnreachable { .. })
        ));
    }

    #[test]
    fn noise_solver_round_trips_random_draws() {
        let mut rng = substream(406, 0);
        let gates = Gate::canonical_set();
        for k in 0..200 {
            let gate = gates[k % 7];
            let pmf = sample_source_pmf(1.0, &mut rng).unwrap();
            let max = discrete_tmi(&DiscreteSystem::new(pmf, gate, 0.0).unwrap());
            if max < 1e-9 {
                continue;
            }
            let target = max * (0.05 + 0.9 * (k as f64 / 200.0));
            let p = solve_p_eps(&pmf, &gate, target).unwrap();
            assert!((0.0..0.5).contains(&p));
            let achieved = discrete_tmi(&DiscreteSystem::new(pmf, gate, p).unwrap());
            assert!((achieved - target).abs() < 1e-9);
        }
    }

    #[test]
    fn ensemble_is_deterministic_and_on_target() {
        let ens = build_discrete_null_ensemble(0.3, 200, 1.0, 23, 50).unwrap();
        assert_eq!(ens.samples.len(), 200);
        assert_eq!(ens.family, NullFamily::Discrete);
        for s in &ens.samples {
            assert!((s.tmi - 0.3).abs() < 1e-6);
        }
        let again = build_discrete_null_ensemble(0.3, 200, 1.0, 23, 50).unwrap();
        assert_eq!(ens.samples, again.samples);

        assert!(build_discrete_null_ensemble(0.3, 0, 1.0, 1, 50).is_err());
        assert!(build_discrete_null_ensemble(-0.3, 10, 1.0, 1, 50).is_err());
        assert!(build_discrete_null_ensemble(0.3, 10, 0.0, 1, 50).is_err());
    }

    #[test]
    fn dominant_atoms_score_high_quantiles() {
        // The three reference systems at moderate noise: the structurally
        // dominant atom should sit near the top of its null distribution.
        let red = numit_normalize_discrete(&redundant_system(0.1), 300, 1.0, 31).unwrap();
        assert!(red.red_q > 0.85, "red_q = {}", red.red_q);

        let unique_sys = DiscreteSystem::new(JointPmf::uniform(), copy_x(), 0.1).unwrap();
        let un = numit_normalize_discrete(&unique_sys, 300, 1.0, 32).unwrap();
        assert!(un.unx_q > 0.85, "unx_q = {}", un.unx_q);

        let syn_sys = DiscreteSystem::new(JointPmf::uniform(), xor(), 0.1).unwrap();
        let syn = numit_normalize_discrete(&syn_sys, 300, 1.0, 33).unwrap();
        assert!(syn.syn_q > 0.85, "syn_q = {}", syn.syn_q);
    }

    #[test]
    fn normalization_rejects_zero_information() {
        let sys = DiscreteSystem::new(JointPmf::uniform(), xor(), 0.5).unwrap();
        assert!(matches!(
            numit_normalize_discrete(&sys, 10, 1.0, 1),
            Err(Error::ZeroTmi)
        ));
    }
}
