//! Three-node pipeline: source encoder, decode-and-forward relay with
//! coordinate reversal, destination decoder, and end-to-end delay
//! accounting.
//!
//! The relay emits `R_i[t] = S_{k+1-i}[t - lag_i]` with `lag_i` taken from
//! the SR code's delay profile; references to negative times are zero. The
//! destination un-maps deterministically from the same lag table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constructions::Rational;
use crate::error::{Error, Result};
use crate::streaming_code::{
    random_stream, Decoder, DelayProfile, Encoder, ErasureSchedule, Packet, StreamCodeSpec,
};

/// A full `(b1, b2, T)` relay network: both hop codes plus the relay's lag
/// table (the SR code's delay profile).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelayNetworkSpec {
    pub b1: usize,
    pub b2: usize,
    pub t: usize,
    pub k: usize,
    pub sr: StreamCodeSpec,
    pub rd: StreamCodeSpec,
    pub d_sr: DelayProfile,
}

impl RelayNetworkSpec {
    pub fn new(
        b1: usize,
        b2: usize,
        t: usize,
        sr: StreamCodeSpec,
        rd: StreamCodeSpec,
        d_sr: DelayProfile,
        d_rd: DelayProfile,
    ) -> Result<Self> {
        if sr.k != rd.k {
            return Err(Error::ConstructionInvalid(format!(
                "hop message dimensions differ: {} vs {}",
                sr.k, rd.k
            )));
        }
        let k = sr.k;
        if sr.b != b1 || rd.b != b2 || sr.horizon != t - b2 || rd.horizon != t - b1 {
            return Err(Error::ConstructionInvalid(
                "hop codes do not match the (b1, b2, T) channel parameters".into(),
            ));
        }
        if d_sr.len() != k || d_rd.len() != k {
            return Err(Error::ConstructionInvalid(
                "delay profile length mismatch".into(),
            ));
        }
        // Relay well-definedness plus the deadline: the lag of input
        // coordinate i plus the RD delay of coordinate i stays within T.
        for i in 1..=k {
            if d_sr.delay(k + 1 - i) + d_rd.delay(i) > t {
                return Err(Error::ConstructionInvalid(format!(
                    "coordinate {i}: SR lag {} + RD delay {} exceeds T = {t}",
                    d_sr.delay(k + 1 - i),
                    d_rd.delay(i)
                )));
            }
        }
        Ok(RelayNetworkSpec {
            b1,
            b2,
            t,
            k,
            sr,
            rd,
            d_sr,
        })
    }

    /// Packets the relay waits before forwarding input coordinate `i`.
    pub fn lag(&self, i: usize) -> usize {
        self.d_sr.delay(self.k + 1 - i)
    }

    /// Shared rate of both hops.
    pub fn rate(&self) -> Rational {
        Rational::new(self.k as u64, self.sr.n() as u64)
    }
}

/// Relay lag in multiples of `b1`: `l_i = ceil((k+1-i)/b2)`.
pub fn relay_lag(i: usize, k: usize, b2: usize) -> usize {
    assert!(i >= 1 && i <= k);
    (k + 1 - i).div_ceil(b2)
}

/// Decode-and-forward relay: runs the SR decoder and re-emits decoded
/// symbols in reversed coordinate order with per-coordinate lags.
pub struct Relay<'a> {
    spec: &'a RelayNetworkSpec,
    decoder: Decoder<'a>,
    decoded: BTreeMap<(usize, usize), (u8, usize)>,
}

impl<'a> Relay<'a> {
    pub fn new(spec: &'a RelayNetworkSpec) -> Self {
        Relay {
            spec,
            decoder: Decoder::new(&spec.sr),
            decoded: BTreeMap::new(),
        }
    }

    /// Absorb `Y[t]` (None = erased) and emit `R[t]`.
    pub fn step(&mut self, t: usize, y: Option<&Packet>) -> Result<Vec<u8>> {
        for r in self.decoder.decode_step(t, y)? {
            self.decoded
                .entry((r.time, r.coord))
                .or_insert((r.bit, r.recovered_at));
        }
        self.emit(t)
    }

    /// `R_i[t] = S_{k+1-i}[t - lag_i]`, zero for negative times. Every
    /// referenced symbol must already be decoded.
    pub fn emit(&self, t: usize) -> Result<Vec<u8>> {
        let k = self.spec.k;
        let mut r = vec![0u8; k];
        for i in 1..=k {
            let lag = self.spec.lag(i);
            if t < lag {
                continue;
            }
            let src = (t - lag, k + 1 - i);
            match self.decoded.get(&src) {
                Some(&(bit, _)) => r[i - 1] = bit,
                None => {
                    return Err(Error::RelayUnavailable {
                        coord: k + 1 - i,
                        time: t - lag,
                    })
                }
            }
        }
        Ok(r)
    }

    /// Recovery times observed by the relay's SR decoder.
    pub fn recovery_times(&self) -> &BTreeMap<(usize, usize), (u8, usize)> {
        &self.decoded
    }
}

/// One recovered symbol with the time its value became known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub time: usize,
    pub coord: usize,
    pub recovered_at: usize,
}

/// Outcome of one end-to-end run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub horizon: usize,
    pub deadline: usize,
    pub sr_erased: Vec<usize>,
    pub rd_erased: Vec<usize>,
    /// SR-decoder recovery times at the relay, for erased packets.
    pub relay_recovery: Vec<RecoveryRecord>,
    /// Destination recovery times of source symbols, within the accounted
    /// window.
    pub dest_recovery: Vec<RecoveryRecord>,
    /// Per-coordinate max end-to-end delay over the accounted window.
    pub max_delay: Vec<usize>,
    pub success: bool,
    pub failure: Option<String>,
}

/// Default simulation length for a deadline `T`.
pub fn default_horizon(t: usize) -> usize {
    4 * (t + 1)
}

/// Run the full pipeline over `horizon` packets of the given source stream.
///
/// Accounting covers source times whose complete deadline window fits in
/// the horizon. A relay or destination that cannot produce a symbol marks
/// the report failed instead of aborting.
pub fn simulate_network(
    spec: &RelayNetworkSpec,
    sr_sched: &ErasureSchedule,
    rd_sched: &ErasureSchedule,
    source: &[Vec<u8>],
    horizon: usize,
) -> Result<SimulationReport> {
    for (name, sched, b) in [("SR", sr_sched, spec.b1), ("RD", rd_sched, spec.b2)] {
        let as_network = ErasureSchedule::new(sched.erased.iter().copied(), b, spec.t + 1);
        if !as_network.is_admissible() {
            return Err(Error::InadmissibleSchedule(format!(
                "{name} schedule violates the (b={b}, window={}) channel",
                spec.t + 1
            )));
        }
    }
    if source.len() < horizon {
        return Err(Error::InvalidParams(format!(
            "source stream has {} packets, horizon is {horizon}",
            source.len()
        )));
    }

    let k = spec.k;
    let mut sr_enc = Encoder::new(&spec.sr);
    let mut relay = Relay::new(spec);
    let mut rd_enc = Encoder::new(&spec.rd);
    let mut dest_dec = Decoder::new(&spec.rd);
    // (source time, coord) -> destination recovery time.
    let mut dest_times: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut failure: Option<String> = None;

    'run: for t in 0..horizon {
        let x = sr_enc.encode_packet(&source[t])?;
        let y = if sr_sched.erased.contains(&t) {
            None
        } else {
            Some(&x)
        };
        let r = match relay.step(t, y) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.to_string());
                break 'run;
            }
        };
        let z = rd_enc.encode_packet(&r)?;
        let zy = if rd_sched.erased.contains(&t) {
            None
        } else {
            Some(&z)
        };
        let recovered = match dest_dec.decode_step(t, zy) {
            Ok(rec) => rec,
            Err(e) => {
                failure = Some(e.to_string());
                break 'run;
            }
        };
        for rec in recovered {
            // R_i[t'] carries S_{k+1-i}[t' - lag_i].
            let j = k + 1 - rec.coord;
            let lag = spec.lag(rec.coord);
            if rec.time >= lag {
                dest_times
                    .entry((rec.time - lag, j))
                    .or_insert(rec.recovered_at);
            }
        }
    }

    let accounted_end = horizon.saturating_sub(spec.t);
    let mut max_delay = vec![0usize; k];
    let mut dest_recovery = Vec::new();
    for t in 0..accounted_end {
        for j in 1..=k {
            match dest_times.get(&(t, j)) {
                Some(&at) => {
                    dest_recovery.push(RecoveryRecord {
                        time: t,
                        coord: j,
                        recovered_at: at,
                    });
                    max_delay[j - 1] = max_delay[j - 1].max(at - t);
                }
                None => {
                    if failure.is_none() {
                        failure = Some(format!("S_{j}[{t}] never recovered at the destination"));
                    }
                }
            }
        }
    }

    let success = failure.is_none() && max_delay.iter().all(|&d| d <= spec.t);
    if !success && failure.is_none() {
        let (j, d) = max_delay
            .iter()
            .enumerate()
            .max_by_key(|(_, &d)| d)
            .map(|(j, &d)| (j + 1, d))
            .unwrap();
        failure = Some(format!(
            "coordinate {j} missed the deadline: delay {d} > T = {}",
            spec.t
        ));
    }

    let relay_recovery = relay
        .recovery_times()
        .iter()
        .filter(|((time, _), _)| sr_sched.erased.contains(time))
        .map(|(&(time, coord), &(_, at))| RecoveryRecord {
            time,
            coord,
            recovered_at: at,
        })
        .collect();

    Ok(SimulationReport {
        horizon,
        deadline: spec.t,
        sr_erased: sr_sched.erased.iter().copied().collect(),
        rd_erased: rd_sched.erased.iter().copied().collect(),
        relay_recovery,
        dest_recovery,
        max_delay,
        success,
        failure,
    })
}

/// Simulate with a seeded random source stream.
pub fn simulate_with_random_source(
    spec: &RelayNetworkSpec,
    sr_sched: &ErasureSchedule,
    rd_sched: &ErasureSchedule,
    horizon: usize,
    seed: u64,
) -> Result<SimulationReport> {
    let source = random_stream(&spec.sr, horizon, seed);
    simulate_network(spec, sr_sched, rd_sched, &source, horizon)
}

/// Per-coordinate max destination delay over every pair of single-burst
/// alignments, errors if any coordinate misses the deadline.
pub fn worst_case_delays(spec: &RelayNetworkSpec) -> Result<DelayProfile> {
    let horizon = default_horizon(spec.t);
    let s1 = spec.t + 1;
    let sr_sched = ErasureSchedule::new(s1..s1 + spec.b1, spec.b1, spec.t + 1);
    let empty = ErasureSchedule::new([], spec.b2, spec.t + 1);
    let mut max = vec![0usize; spec.k];

    let mut absorb = |report: &SimulationReport| -> Result<()> {
        if let Some(f) = &report.failure {
            return Err(Error::ConstructionInvalid(f.clone()));
        }
        for (m, &d) in max.iter_mut().zip(&report.max_delay) {
            *m = (*m).max(d);
        }
        Ok(())
    };

    absorb(&simulate_with_random_source(
        spec, &empty, &empty, horizon, 11,
    )?)?;
    for s2 in 0..=horizon - spec.b2 {
        let rd_sched = ErasureSchedule::new(s2..s2 + spec.b2, spec.b2, spec.t + 1);
        absorb(&simulate_with_random_source(
            spec, &sr_sched, &rd_sched, horizon, 11,
        )?)?;
        absorb(&simulate_with_random_source(
            spec, &empty, &rd_sched, horizon, 11,
        )?)?;
    }

    if let Some(j) = (0..spec.k).find(|&j| max[j] > spec.t) {
        return Err(Error::ConstructionInvalid(format!(
            "coordinate {} worst-case delay {} exceeds T = {}",
            j + 1,
            max[j],
            spec.t
        )));
    }
    Ok(DelayProfile(max))
}
