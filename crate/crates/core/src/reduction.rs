//! Reduction from many-query codes to matrix families: extraction of
//! disjoint matched sets with large codeword-product bias, the
//! balls-into-bins fraction of good index sequences, and the Rademacher
//! lower bound computed through the proof's counting identities.
//!
//! The partial-matching matrices are never materialized: their dimension is
//! `(N')^l` for sequence length l in the hundreds. Everything the bound
//! needs is the per-index fraction of pairable sequences and the stored
//! biases; the matrix structure itself is validated by sampling the pair
//! rule and checking it is an exact involution.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::CodeSpec;
use crate::error::{Error, Result};
use crate::par;
use crate::smoothing::SmoothDecoder;

/// Block-replicated code over the sign alphabet: position `(j-1)N + s` of
/// block `j` carries `(-1)^(C(x)_s)`.
#[derive(Debug, Clone)]
pub struct ExtendedCode {
    pub blocks: usize,
    pub base: CodeSpec,
}

impl ExtendedCode {
    pub fn len(&self) -> usize {
        self.blocks * self.base.len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sign value at `pos` for message `msg`.
    pub fn eval(&self, msg: u32, pos: usize) -> f64 {
        let s = pos % self.base.len;
        if self.base.encode_symbol(s, msg) == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// q-fold coordinate-disjoint concatenation of a binary code.
pub fn extend_code(code: &CodeSpec, q: usize) -> Result<ExtendedCode> {
    if code.symbol_bits != 1 {
        return Err(Error::Contract(format!(
            "extension needs a binary code, alphabet has {} bits",
            code.symbol_bits
        )));
    }
    if q == 0 {
        return Err(Error::Parameter("extension needs q >= 1".into()));
    }
    Ok(ExtendedCode { blocks: q, base: code.clone() })
}

/// One matched set: 2r positions of the extended code with its exact
/// message-average product bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatchEntry {
    pub set: Vec<usize>,
    pub bias: f64,
}

/// Pairwise-disjoint matched sets per message index.
#[derive(Debug, Clone)]
pub struct MatchingFamily {
    pub r: usize,
    pub n_prime: usize,
    pub per_index: Vec<Vec<MatchEntry>>,
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub family: MatchingFamily,
    /// ceil(delta * eps * N / (2r)^2), the existence quota.
    pub quota: usize,
    /// Whether each index met the quota; a shortfall is reported, not raised.
    pub quota_met: Vec<bool>,
}

/// Exact bias `E_x[x_i * prod_{s in S} C'(x)_s]` by message enumeration.
fn exact_bias(ext: &ExtendedCode, i: usize, set: &[usize]) -> f64 {
    let code = &ext.base;
    let mut acc = 0.0;
    for msg in 0..code.num_messages() as u32 {
        let mut term = code.message_sign(msg, i);
        for &pos in set {
            term *= ext.eval(msg, pos);
        }
        acc += term;
    }
    acc / code.num_messages() as f64
}

/// Extract disjoint matched 2r-sets: candidates are the smoothed decoder's
/// support tuples spread across the blocks (coordinate j of a tuple lands in
/// block j, so positions are always distinct), filtered by the bias
/// threshold `eps / 2^(2r)` and selected greedily by descending bias.
pub fn extract_matchings(
    ext: &ExtendedCode,
    smooth: &SmoothDecoder,
    r: usize,
    eps: f64,
    delta: f64,
) -> Result<ExtractionResult> {
    if r < 2 {
        return Err(Error::Parameter(format!("reduction needs r >= 2, got {r}")));
    }
    if smooth.queries != 2 * r || ext.blocks != 2 * r {
        return Err(Error::Parameter(format!(
            "reduction needs q = 2r queries and blocks, got q={} blocks={} r={r}",
            smooth.queries, ext.blocks
        )));
    }
    let code = &ext.base;
    if code.num_messages() > 4096 {
        return Err(Error::Resource(format!(
            "exact bias enumeration over 2^{} messages exceeds budget",
            code.k
        )));
    }
    let threshold = eps / ((1u64 << (2 * r)) as f64);
    let n_prime = ext.len();
    let quota =
        (delta * eps * code.len as f64 / ((2 * r) as f64 * (2 * r) as f64)).ceil() as usize;

    let per_index: Vec<Vec<MatchEntry>> = par::map_indexed(smooth.k, |i| {
        let mut candidates: Vec<MatchEntry> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for tuple in &smooth.per_index[i].tuples {
            let set: Vec<usize> = tuple
                .coords
                .iter()
                .enumerate()
                .map(|(j, &s)| j * code.len + s)
                .collect();
            let mut sorted = set.clone();
            sorted.sort_unstable();
            if !seen.insert(sorted.clone()) {
                continue;
            }
            let bias = exact_bias(ext, i, &sorted);
            if bias.abs() + 1e-12 >= threshold {
                candidates.push(MatchEntry { set: sorted, bias });
            }
        }
        candidates.sort_by(|a, b| {
            b.bias
                .abs()
                .partial_cmp(&a.bias.abs())
                .unwrap()
                .then_with(|| a.set.cmp(&b.set))
        });
        let mut used = vec![false; n_prime];
        let mut family = Vec::new();
        for cand in candidates {
            if cand.set.iter().all(|&p| !used[p]) {
                for &p in &cand.set {
                    used[p] = true;
                }
                family.push(cand);
            }
        }
        family
    });

    let quota_met = per_index.iter().map(|f| f.len() >= quota).collect();
    Ok(ExtractionResult {
        family: MatchingFamily { r, n_prime, per_index },
        quota,
        quota_met,
    })
}

/// Smallest l with `(delta*eps/(2r)^3) * l^r >= (2rN)^(r-1)`, checked
/// directly against the inequality for minimality.
pub fn choose_l(delta: f64, eps: f64, r: usize, code_len: usize) -> Result<u64> {
    if r < 2 {
        return Err(Error::Parameter(format!("need r >= 2, got {r}")));
    }
    if delta <= 0.0 || eps <= 0.0 {
        return Err(Error::Parameter("need positive delta and eps".into()));
    }
    let two_r = (2 * r) as f64;
    let rhs = (two_r * code_len as f64).powi(r as i32 - 1);
    let coeff = delta * eps / two_r.powi(3);
    let holds = |l: u64| coeff * (l as f64).powi(r as i32) >= rhs;
    let mut l = ((rhs / coeff).powf(1.0 / r as f64)).ceil().max(1.0) as u64;
    while l > 1 && holds(l - 1) {
        l -= 1;
    }
    while !holds(l) {
        l += 1;
    }
    Ok(l)
}

/// Poisson probability mass `e^(-mu) mu^m / m!`.
pub fn poisson_pdf(mu: f64, m: u64) -> f64 {
    assert!(mu > 0.0, "poisson rate must be positive");
    let mut pdf = (-mu).exp();
    for j in 1..=m {
        pdf *= mu / j as f64;
    }
    pdf
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FractionEstimate {
    pub fraction: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
    pub seed: u64,
}

fn wilson_interval(successes: u64, samples: u64, z: f64) -> (f64, f64) {
    if samples == 0 {
        return (0.0, 1.0);
    }
    let n = samples as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn estimate(successes: u64, samples: usize, seed: u64) -> FractionEstimate {
    let p = successes as f64 / samples as f64;
    let stderr = (p * (1.0 - p) / samples as f64).sqrt();
    let (ci_low, ci_high) = wilson_interval(successes, samples as u64, 1.96);
    FractionEstimate { fraction: p, stderr, ci_low, ci_high, samples, seed }
}

/// The three sampled events over uniform sequences in `[N']^l`.
#[derive(Debug, Clone)]
pub struct GoodTupleFractions {
    /// Some family set has at least r of its elements present anywhere.
    pub good: FractionEstimate,
    /// Some family set is hit by at least r sequence positions (ball count,
    /// multiplicities included); this is the raw balls-into-bins event.
    pub ball: FractionEstimate,
    /// Some family set qualifies under the pair rule: its first r hits carry
    /// distinct values. This is the fraction the matching bound uses.
    pub pairable: FractionEstimate,
}

/// Membership map: value -> (family position, rank inside the set).
fn family_lookup(family: &[MatchEntry], n_prime: usize) -> Vec<Option<u32>> {
    let mut lookup = vec![None; n_prime];
    for (f, entry) in family.iter().enumerate() {
        for &v in &entry.set {
            lookup[v] = Some(f as u32);
        }
    }
    lookup
}

/// Per-set hit tracker. The pairable decision is frozen at the r-th hit.
struct Tracker {
    hits: u32,
    first_values: Vec<usize>,
    distinct: Vec<usize>,
    qualified: bool,
}

fn sample_chunk(
    family: &[MatchEntry],
    lookup: &[Option<u32>],
    r: usize,
    l: u64,
    n_prime: usize,
    count: usize,
    seed: u64,
) -> (u64, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut good, mut ball, mut pairable) = (0u64, 0u64, 0u64);
    for _ in 0..count {
        let mut trackers: Vec<Tracker> = family
            .iter()
            .map(|_| Tracker {
                hits: 0,
                first_values: Vec::with_capacity(r),
                distinct: Vec::with_capacity(r),
                qualified: false,
            })
            .collect();
        let mut good_hit = false;
        let mut undecided = family.len();
        for _ in 0..l {
            let v = rng.gen_range(0..n_prime);
            if let Some(f) = lookup[v] {
                let t = &mut trackers[f as usize];
                t.hits += 1;
                if (t.hits as usize) <= r {
                    t.first_values.push(v);
                    if t.hits as usize == r {
                        undecided -= 1;
                        let mut vals = t.first_values.clone();
                        vals.sort_unstable();
                        vals.dedup();
                        t.qualified = vals.len() == r;
                    }
                }
                if t.distinct.len() < r && !t.distinct.contains(&v) {
                    t.distinct.push(v);
                    if t.distinct.len() == r {
                        good_hit = true;
                    }
                }
            }
            if good_hit && undecided == 0 {
                break;
            }
        }
        if good_hit {
            good += 1;
        }
        if trackers.iter().any(|t| t.hits as usize >= r) {
            ball += 1;
        }
        if trackers.iter().any(|t| t.qualified) {
            pairable += 1;
        }
    }
    (good, ball, pairable)
}

/// Monte Carlo estimates of the three sequence events, chunked so the counts
/// are independent of the thread count.
pub fn sample_fractions(
    family: &[MatchEntry],
    r: usize,
    l: u64,
    n_prime: usize,
    samples: usize,
    seed: u64,
) -> GoodTupleFractions {
    let lookup = family_lookup(family, n_prime);
    let chunk = 1024usize;
    let chunks = samples.div_ceil(chunk);
    let counts = par::map_indexed(chunks, |c| {
        let count = chunk.min(samples - c * chunk);
        sample_chunk(
            family,
            &lookup,
            r,
            l,
            n_prime,
            count,
            par::derive_seed(seed, c as u64),
        )
    });
    let (mut good, mut ball, mut pairable) = (0u64, 0u64, 0u64);
    for (g, b, p) in counts {
        good += g;
        ball += b;
        pairable += p;
    }
    GoodTupleFractions {
        good: estimate(good, samples, seed),
        ball: estimate(ball, samples, seed),
        pairable: estimate(pairable, samples, seed),
    }
}

/// Fraction of sequences in `[N']^l` with at least r distinct elements of
/// some family set present.
pub fn good_tuple_fraction(
    family: &[MatchEntry],
    r: usize,
    l: u64,
    n_prime: usize,
    samples: usize,
    seed: u64,
) -> FractionEstimate {
    sample_fractions(family, r, l, n_prime, samples, seed).good
}

/// A qualifying assignment: which family set a sequence first qualifies on,
/// the positions of its first r hits, and their (distinct) values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairAssignment {
    pub family_idx: usize,
    pub positions: Vec<usize>,
    pub values: Vec<usize>,
}

/// Qualification of one family set on a full sequence: the first r hit
/// positions, accepted when their values are distinct.
fn qualify(seq: &[usize], entry: &MatchEntry, r: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut positions = Vec::with_capacity(r);
    let mut values = Vec::with_capacity(r);
    for (t, &v) in seq.iter().enumerate() {
        if entry.set.binary_search(&v).is_ok() {
            positions.push(t);
            values.push(v);
            if positions.len() == r {
                let mut vals = values.clone();
                vals.sort_unstable();
                vals.dedup();
                return if vals.len() == r { Some((positions, values)) } else { None };
            }
        }
    }
    None
}

/// The canonical pair rule. The partner agrees with the sequence outside the
/// first r hit positions of the qualifying set; inside them, the complement
/// values are assigned by rank so the rule is an exact involution: the j-th
/// smallest replaced value's position receives the j-th smallest complement
/// value.
pub fn pair_partner(
    seq: &[usize],
    family: &[MatchEntry],
    r: usize,
) -> Option<(PairAssignment, Vec<usize>)> {
    for (f, entry) in family.iter().enumerate() {
        if let Some((positions, values)) = qualify(seq, entry, r) {
            let mut complement: Vec<usize> = entry
                .set
                .iter()
                .copied()
                .filter(|v| !values.contains(v))
                .collect();
            complement.sort_unstable();
            // rank order of the replaced values
            let mut rank_order: Vec<usize> = (0..r).collect();
            rank_order.sort_by_key(|&j| values[j]);
            let mut partner = seq.to_vec();
            for (rank, &j) in rank_order.iter().enumerate() {
                partner[positions[j]] = complement[rank];
            }
            return Some((PairAssignment { family_idx: f, positions, values }, partner));
        }
    }
    None
}

/// Structural validation of the implied partial matching by sampling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairRuleCheck {
    pub samples: usize,
    pub paired: usize,
    /// Distinct pairs sharing an endpoint: must be zero for a matching.
    pub collisions: usize,
    /// Partner whose own partner is not the original sequence.
    pub involution_failures: usize,
    /// Pairs not differing in exactly r coordinates.
    pub difference_violations: usize,
    /// Replaced and replacement values not covering the matched set.
    pub union_violations: usize,
}

/// Sample sequences, apply the pair rule, and count violations of the
/// partial-matching structure.
pub fn check_pair_rule(
    family: &[MatchEntry],
    r: usize,
    l: u64,
    n_prime: usize,
    samples: usize,
    seed: u64,
) -> PairRuleCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut endpoint_of: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut pair_count = 0usize;
    let mut check = PairRuleCheck {
        samples,
        paired: 0,
        collisions: 0,
        involution_failures: 0,
        difference_violations: 0,
        union_violations: 0,
    };
    for _ in 0..samples {
        let seq: Vec<usize> = (0..l).map(|_| rng.gen_range(0..n_prime)).collect();
        let Some((assign, partner)) = pair_partner(&seq, family, r) else {
            continue;
        };
        check.paired += 1;
        let diff = seq.iter().zip(&partner).filter(|(a, b)| a != b).count();
        if diff != r {
            check.difference_violations += 1;
        }
        let mut union: Vec<usize> = assign
            .values
            .iter()
            .chain(assign.positions.iter().map(|&t| &partner[t]))
            .copied()
            .collect();
        union.sort_unstable();
        union.dedup();
        if union != family[assign.family_idx].set {
            check.union_violations += 1;
        }
        match pair_partner(&partner, family, r) {
            Some((back_assign, back)) => {
                if back != seq || back_assign.family_idx != assign.family_idx {
                    check.involution_failures += 1;
                }
            }
            None => check.involution_failures += 1,
        }
        // register both endpoints under one pair id; a repeated endpoint in a
        // different pair is a collision
        let id = pair_count;
        for endpoint in [seq, partner] {
            match endpoint_of.get(&endpoint) {
                Some(&other) if other != id => check.collisions += 1,
                _ => {
                    endpoint_of.insert(endpoint, id);
                }
            }
        }
        pair_count += 1;
    }
    check
}

/// Everything the Rademacher bound needs from the reduction pipeline.
#[derive(Debug, Clone)]
pub struct ReductionInstance {
    pub r: usize,
    pub l: u64,
    pub n_prime: usize,
    pub k: usize,
    pub eps: f64,
    pub family: MatchingFamily,
    pub quota: usize,
    pub quota_met: Vec<bool>,
    pub fractions: Vec<GoodTupleFractions>,
    pub seed: u64,
}

/// Run extraction, sequence-length selection, and the Monte Carlo fraction
/// estimates for every index.
pub fn build_instance(
    ext: &ExtendedCode,
    smooth: &SmoothDecoder,
    r: usize,
    eps: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<ReductionInstance> {
    let extraction = extract_matchings(ext, smooth, r, eps, delta)?;
    let l = choose_l(delta, eps, r, ext.base.len)?;
    let n_prime = extraction.family.n_prime;
    let fractions = extraction
        .family
        .per_index
        .iter()
        .enumerate()
        .map(|(i, family)| {
            sample_fractions(family, r, l, n_prime, samples, par::derive_seed(seed, i as u64))
        })
        .collect();
    Ok(ReductionInstance {
        r,
        l,
        n_prime,
        k: smooth.k,
        eps,
        family: extraction.family,
        quota: extraction.quota,
        quota_met: extraction.quota_met,
        fractions,
        seed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionIndexSummary {
    pub i: usize,
    #[serde(rename = "familySize")]
    pub family_size: usize,
    #[serde(rename = "minAbsBias")]
    pub min_abs_bias: f64,
    #[serde(rename = "goodFraction")]
    pub good_fraction: f64,
    #[serde(rename = "CI")]
    pub ci: (f64, f64),
    #[serde(rename = "pairableFraction")]
    pub pairable_fraction: f64,
    #[serde(rename = "pairableCI")]
    pub pairable_ci: (f64, f64),
}

/// The measured lower bound on the expected norm of the signed matrix sum,
/// with the claimed thresholds at both constant conventions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReductionReport {
    pub r: usize,
    pub l: u64,
    #[serde(rename = "Nprime")]
    pub n_prime: usize,
    pub k: usize,
    pub eps: f64,
    #[serde(rename = "perIndex")]
    pub per_index: Vec<ReductionIndexSummary>,
    /// Witness value: sum over indices of pairable fraction times the least
    /// family bias, from the counting identity |pairs| = fraction * (N')^l / 2
    /// and the factor-2 symmetric placement of the matching entries.
    pub bound: f64,
    pub bound_lo: f64,
    pub bound_hi: f64,
    /// eps k / 8^r.
    pub claim: f64,
    /// eps k / 16^r, the conservative constant bookkeeping.
    pub claim_conservative: f64,
    pub pass: bool,
    pub pass_conservative: bool,
    /// Set when the confidence interval straddles a claim.
    pub inconclusive: bool,
    /// Flags that the headline constant failed while the conservative one
    /// held; the bookkeeping discrepancy is then visible, not hidden.
    pub constant_discrepancy: bool,
    pub pair_check: PairRuleCheck,
    pub seed: u64,
}

/// Evaluate the Rademacher lower-bound chain on a built instance and sample
/// the pair rule for the matching structure.
pub fn rademacher_lower_bound(
    instance: &ReductionInstance,
    pair_samples: usize,
) -> Result<ReductionReport> {
    if instance.fractions.len() != instance.k {
        return Err(Error::Contract("instance is missing fraction estimates".into()));
    }
    let mut per_index = Vec::with_capacity(instance.k);
    let (mut bound, mut bound_lo, mut bound_hi) = (0.0, 0.0, 0.0);
    for (i, (family, fr)) in instance
        .family
        .per_index
        .iter()
        .zip(&instance.fractions)
        .enumerate()
    {
        let min_abs_bias = family
            .iter()
            .map(|e| e.bias.abs())
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let min_abs_bias = if family.is_empty() { 0.0 } else { min_abs_bias };
        bound += fr.pairable.fraction * min_abs_bias;
        bound_lo += fr.pairable.ci_low * min_abs_bias;
        bound_hi += fr.pairable.ci_high * min_abs_bias;
        per_index.push(ReductionIndexSummary {
            i,
            family_size: family.len(),
            min_abs_bias,
            good_fraction: fr.good.fraction,
            ci: (fr.good.ci_low, fr.good.ci_high),
            pairable_fraction: fr.pairable.fraction,
            pairable_ci: (fr.pairable.ci_low, fr.pairable.ci_high),
        });
    }
    let claim = instance.eps * instance.k as f64 / 8f64.powi(instance.r as i32);
    let claim_conservative = instance.eps * instance.k as f64 / 16f64.powi(instance.r as i32);
    let pass = bound_lo >= claim;
    let pass_conservative = bound_lo >= claim_conservative;
    let inconclusive = (!pass && bound_hi >= claim) ^ (!pass_conservative && bound_hi >= claim_conservative);
    let per_index_pair_samples = pair_samples.div_ceil(instance.k.max(1));
    let mut pair_check = PairRuleCheck {
        samples: 0,
        paired: 0,
        collisions: 0,
        involution_failures: 0,
        difference_violations: 0,
        union_violations: 0,
    };
    for (i, family) in instance.family.per_index.iter().enumerate() {
        let c = check_pair_rule(
            family,
            instance.r,
            instance.l,
            instance.n_prime,
            per_index_pair_samples,
            par::derive_seed(instance.seed, 0x9a17 + i as u64),
        );
        pair_check.samples += c.samples;
        pair_check.paired += c.paired;
        pair_check.collisions += c.collisions;
        pair_check.involution_failures += c.involution_failures;
        pair_check.difference_violations += c.difference_violations;
        pair_check.union_violations += c.union_violations;
    }
    Ok(ReductionReport {
        r: instance.r,
        l: instance.l,
        n_prime: instance.n_prime,
        k: instance.k,
        eps: instance.eps,
        per_index,
        bound,
        bound_lo,
        bound_hi,
        claim,
        claim_conservative,
        pass,
        pass_conservative,
        inconclusive,
        constant_discrepancy: !pass && pass_conservative,
        pair_check,
        seed: instance.seed,
    })
}

/// Minimal length implied for 2r-query binary codes:
/// `c * (delta eps^3 k / ln k)^(r/(r-1))`, constant configurable.
pub fn evenq_length_bound(r: usize, delta: f64, eps: f64, k: u64, c: f64) -> Result<f64> {
    if r < 2 {
        return Err(Error::Parameter(format!("need r >= 2, got {r}")));
    }
    if k < 2 {
        return Err(Error::Parameter("need k >= 2 for a nontrivial logarithm".into()));
    }
    if c <= 0.0 {
        return Err(Error::Parameter("need c > 0".into()));
    }
    let base = delta * eps.powi(3) * k as f64 / (k as f64).ln();
    Ok(c * base.powf(r as f64 / (r as f64 - 1.0)))
}
