//! Independent brute-force verification: delay profiles from elimination on
//! the recovery matrix, exhaustive enumeration of admissible erasure
//! schedules, and end-to-end checking of relay network specs.
//!
//! Nothing here reuses the streaming decoder's code path; the recovery
//! matrix route and the simulation route check each other.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinMatrix, IncrementalSolver};
use crate::relay::{simulate_with_random_source, RelayNetworkSpec};
use crate::streaming_code::{DelayProfile, ErasureSchedule, StreamCodeSpec};

/// Guard on exhaustive enumeration size.
pub const ENUMERATION_GUARD: usize = 1_000_000;

/// Assemble the `b*k x horizon*w` recovery matrix relating the erased
/// symbols `S[t..t+b-1]` to the parity packets `P[t+b..t+b+horizon-1]`:
/// block `(r, c)` is `P_{b-r+c}`, zero outside `[0, horizon]`.
pub fn recovery_matrix(spec: &StreamCodeSpec) -> BinMatrix {
    let (b, k, w, horizon) = (spec.b, spec.k, spec.w, spec.horizon);
    let mut out = BinMatrix::zero(b * k, horizon * w);
    for r in 1..=b {
        for c in 1..=horizon {
            let idx = b + c - r; // >= 1 always; may exceed the horizon
            if idx <= horizon && !spec.parity[idx].is_zero() {
                out.paste((r - 1) * k + 1, (c - 1) * w + 1, &spec.parity[idx]);
            }
        }
    }
    out
}

/// Delay profile by incremental elimination on the recovery matrix: feed
/// parity packets one block column at a time and record when each erased
/// symbol becomes uniquely determined.
pub fn oracle_recovery_times(spec: &StreamCodeSpec) -> Result<DelayProfile> {
    let (b, k, w, horizon) = (spec.b, spec.k, spec.w, spec.horizon);
    let matrix = recovery_matrix(spec);
    let num_vars = b * k;
    let mut solver = IncrementalSolver::new(num_vars);
    // pinned_at[var] = index (1-based) of the block column that pinned it.
    let mut pinned_at = vec![None; num_vars];
    for c in 1..=horizon {
        for col in (c - 1) * w + 1..=c * w {
            let coeffs: Vec<u8> = (1..=num_vars).map(|row| matrix.get(row, col)).collect();
            for (var, _) in solver.add_equation(&coeffs, 0)? {
                pinned_at[var] = Some(c);
            }
        }
    }
    let mut profile = vec![0usize; k];
    for r in 1..=b {
        for j in 1..=k {
            let var = (r - 1) * k + j - 1;
            let Some(c) = pinned_at[var] else {
                return Err(Error::ConstructionInvalid(format!(
                    "not a valid (b={b}, T'={horizon}) code: S_{j} of burst position {r} is never determined"
                )));
            };
            // Symbol S_j[t+r-1] pinned by parity packet t+b+c-1.
            profile[j - 1] = profile[j - 1].max(b + c - r);
        }
    }
    Ok(DelayProfile(profile))
}

/// Enumerate every admissible erased-set over `[0, horizon)` for a
/// `(b, window)` channel, in lexicographic order of the sorted index
/// sequences. Guarded against blowup.
pub fn enumerate_schedules(
    b: usize,
    window: usize,
    horizon: usize,
) -> Result<Vec<ErasureSchedule>> {
    let mut out = Vec::new();
    let mut current: Vec<(usize, usize)> = Vec::new(); // runs as (start, len)
    enumerate_from(0, b, window, horizon, &mut current, &mut out)?;
    Ok(out)
}

fn enumerate_from(
    from: usize,
    b: usize,
    window: usize,
    horizon: usize,
    current: &mut Vec<(usize, usize)>,
    out: &mut Vec<ErasureSchedule>,
) -> Result<()> {
    if out.len() >= ENUMERATION_GUARD {
        return Err(Error::EnumerationTooLarge {
            count: out.len() + 1,
            guard: ENUMERATION_GUARD,
        });
    }
    let erased = current.iter().flat_map(|&(s, l)| s..s + l);
    out.push(ErasureSchedule::new(erased, b, window));
    for start in from..horizon {
        for len in 1..=b.min(horizon - start) {
            current.push((start, len));
            enumerate_from(start + len - 1 + window, b, window, horizon, current, out)?;
            current.pop();
        }
    }
    Ok(())
}

/// Draw one admissible schedule over `[0, horizon)` uniformly-ish: random
/// gaps, random burst lengths.
pub fn sample_schedule(
    b: usize,
    window: usize,
    horizon: usize,
    rng: &mut StdRng,
) -> ErasureSchedule {
    let mut erased = Vec::new();
    let mut pos = 0usize;
    loop {
        let gap = rng.gen_range(0..=window);
        let start = pos + gap;
        if start >= horizon {
            break;
        }
        let len = rng.gen_range(1..=b.min(horizon - start));
        erased.extend(start..start + len);
        pos = start + len - 1 + window;
    }
    ErasureSchedule::new(erased, b, window)
}

/// How a verification run chooses schedule pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerifyMode {
    /// All pairs of admissible schedules over the horizon.
    Exhaustive,
    /// `budget` seeded random admissible pairs.
    Randomized { budget: usize, seed: u64 },
}

/// A failing schedule pair with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureCase {
    pub sr_erased: Vec<usize>,
    pub rd_erased: Vec<usize>,
    pub detail: String,
}

/// Result of a verification run over many schedule pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub b1: usize,
    pub b2: usize,
    pub deadline: usize,
    pub mode: String,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub pairs_checked: usize,
    /// Per-coordinate max observed destination delay.
    pub max_delay: Vec<usize>,
    pub pass: bool,
    pub failure: Option<FailureCase>,
}

/// Check a relay network spec against many admissible schedule pairs. In
/// exhaustive mode the first failing pair (in enumeration order) is
/// reported; failures are report content, not errors.
pub fn verify_tbsc(
    spec: &RelayNetworkSpec,
    mode: VerifyMode,
    horizon: usize,
) -> Result<VerificationReport> {
    let window = spec.t + 1;
    let mut report = VerificationReport {
        b1: spec.b1,
        b2: spec.b2,
        deadline: spec.t,
        mode: match mode {
            VerifyMode::Exhaustive => "exhaustive".into(),
            VerifyMode::Randomized { .. } => "randomized".into(),
        },
        seed: match mode {
            VerifyMode::Exhaustive => None,
            VerifyMode::Randomized { seed, .. } => Some(seed),
        },
        horizon,
        pairs_checked: 0,
        max_delay: vec![0; spec.k],
        pass: true,
        failure: None,
    };

    let check_pair = |report: &mut VerificationReport,
                      sr: &ErasureSchedule,
                      rd: &ErasureSchedule|
     -> Result<bool> {
        let sim = simulate_with_random_source(spec, sr, rd, horizon, 0xFEED)?;
        report.pairs_checked += 1;
        for (m, &d) in report.max_delay.iter_mut().zip(&sim.max_delay) {
            *m = (*m).max(d);
        }
        if !sim.success {
            report.pass = false;
            report.failure = Some(FailureCase {
                sr_erased: sim.sr_erased,
                rd_erased: sim.rd_erased,
                detail: sim.failure.unwrap_or_else(|| "deadline exceeded".into()),
            });
            return Ok(false);
        }
        Ok(true)
    };

    match mode {
        VerifyMode::Exhaustive => {
            let sr_all = enumerate_schedules(spec.b1, window, horizon)?;
            let rd_all = enumerate_schedules(spec.b2, window, horizon)?;
            if sr_all.len().saturating_mul(rd_all.len()) > ENUMERATION_GUARD {
                return Err(Error::EnumerationTooLarge {
                    count: sr_all.len() * rd_all.len(),
                    guard: ENUMERATION_GUARD,
                });
            }
            'outer: for sr in &sr_all {
                for rd in &rd_all {
                    if !check_pair(&mut report, sr, rd)? {
                        break 'outer;
                    }
                }
            }
        }
        VerifyMode::Randomized { budget, seed } => {
            let mut rng = StdRng::seed_from_u64(seed);
            for _ in 0..budget {
                let sr = sample_schedule(spec.b1, window, horizon, &mut rng);
                let rd = sample_schedule(spec.b2, window, horizon, &mut rng);
                if !check_pair(&mut report, &sr, &rd)? {
                    break;
                }
            }
        }
    }
    Ok(report)
}
