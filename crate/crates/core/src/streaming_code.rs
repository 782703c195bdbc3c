//! Point-to-point `(b, T')` streaming codes: systematic convolutional
//! encoding, the sliding-window burst-erasure channel, and an online decoder
//! built on the incremental GF(2) solver.
//!
//! At time `t` the encoder emits `X[t] = (S[t], P[t])` with
//! `P[t] = sum_i S[t-i] P_i` over GF(2), `S[t] = 0` for `t < 0`. The decoder
//! treats erased message symbols as unknowns and feeds every received parity
//! symbol as one linear equation, after subtracting the contribution of
//! symbols received in the clear.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BinMatrix, IncrementalSolver};

/// One `(b, T')` streaming code: dimensions plus its parity matrix family
/// `P_0..P_horizon`, each `k x w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCodeSpec {
    pub b: usize,
    pub horizon: usize,
    pub k: usize,
    pub w: usize,
    pub parity: Vec<BinMatrix>,
}

impl StreamCodeSpec {
    pub fn new(
        b: usize,
        horizon: usize,
        k: usize,
        w: usize,
        parity: Vec<BinMatrix>,
    ) -> Result<Self> {
        if k == 0 || w == 0 {
            return Err(Error::InvalidParams("k and w must be positive".into()));
        }
        if b == 0 || b > horizon {
            return Err(Error::InvalidParams(format!(
                "need 1 <= b <= horizon, got b={b}, horizon={horizon}"
            )));
        }
        if parity.len() != horizon + 1 {
            return Err(Error::InvalidParams(format!(
                "parity family has {} matrices, want horizon+1 = {}",
                parity.len(),
                horizon + 1
            )));
        }
        for (i, p) in parity.iter().enumerate() {
            if p.rows() != k || p.cols() != w {
                return Err(Error::InvalidParams(format!(
                    "P_{i} is {}x{}, want {k}x{w}",
                    p.rows(),
                    p.cols()
                )));
            }
        }
        Ok(StreamCodeSpec {
            b,
            horizon,
            k,
            w,
            parity,
        })
    }

    /// Packet length `n = k + w`.
    pub fn n(&self) -> usize {
        self.k + self.w
    }

    /// Indices `i` with `P_i` nonzero.
    pub fn nonzero_parity_indices(&self) -> Vec<usize> {
        (0..=self.horizon)
            .filter(|&i| !self.parity[i].is_zero())
            .collect()
    }
}

/// Per-coordinate worst-case recovery delays `(t_1, ..., t_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayProfile(pub Vec<usize>);

impl DelayProfile {
    /// Delay of 1-based coordinate `j`.
    pub fn delay(&self, j: usize) -> usize {
        self.0[j - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::fmt::Display for DelayProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

/// A set of erased time indices for a `(b, window)` sliding-window burst
/// channel, `window = T' + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasureSchedule {
    pub erased: BTreeSet<usize>,
    pub window: usize,
    pub b: usize,
}

impl ErasureSchedule {
    pub fn new(erased: impl IntoIterator<Item = usize>, b: usize, window: usize) -> Self {
        ErasureSchedule {
            erased: erased.into_iter().collect(),
            window,
            b,
        }
    }

    /// Maximal runs of consecutive erased indices, as `(start, end)` pairs.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut cur: Option<(usize, usize)> = None;
        for &t in &self.erased {
            match cur {
                Some((s, e)) if t == e + 1 => cur = Some((s, t)),
                Some(r) => {
                    runs.push(r);
                    cur = Some((t, t));
                }
                None => cur = Some((t, t)),
            }
        }
        runs.extend(cur);
        runs
    }

    /// Admissible iff every run has length at most `b` and consecutive runs
    /// `r, r'` satisfy `start(r') - end(r) >= window`.
    pub fn is_admissible(&self) -> bool {
        let runs = self.runs();
        for &(s, e) in &runs {
            if e - s + 1 > self.b {
                return false;
            }
        }
        for pair in runs.windows(2) {
            let (_, e) = pair[0];
            let (s2, _) = pair[1];
            if s2 - e < self.window {
                return false;
            }
        }
        true
    }
}

/// An encoded packet `X[t] = (S[t], P[t])`, bits stored as 0/1 bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub message: Vec<u8>,
    pub parity: Vec<u8>,
}

/// Systematic convolutional encoder; remembers the last `horizon + 1`
/// message packets.
#[derive(Debug, Clone)]
pub struct Encoder<'a> {
    spec: &'a StreamCodeSpec,
    history: VecDeque<Vec<u8>>,
}

impl<'a> Encoder<'a> {
    pub fn new(spec: &'a StreamCodeSpec) -> Self {
        Encoder {
            spec,
            history: VecDeque::new(),
        }
    }

    /// Encode the next message packet, in time order from `t = 0`.
    pub fn encode_packet(&mut self, s_t: &[u8]) -> Result<Packet> {
        let spec = self.spec;
        if s_t.len() != spec.k {
            return Err(Error::WrongLength {
                expected: spec.k,
                got: s_t.len(),
            });
        }
        self.history.push_front(s_t.to_vec());
        self.history.truncate(spec.horizon + 1);
        let mut parity = vec![0u8; spec.w];
        for (i, msg) in self.history.iter().enumerate() {
            let p_i = &spec.parity[i];
            for (j, &bit) in msg.iter().enumerate() {
                if bit & 1 == 1 {
                    for (c, out) in parity.iter_mut().enumerate() {
                        *out ^= p_i.get(j + 1, c + 1);
                    }
                }
            }
        }
        Ok(Packet {
            message: s_t.to_vec(),
            parity,
        })
    }
}

/// A message symbol recovered by the decoder, stamped with the time of the
/// packet whose processing pinned it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RecoveredSymbol {
    /// Time index of the message packet the symbol belongs to.
    pub time: usize,
    /// 1-based coordinate within the message packet.
    pub coord: usize,
    pub bit: u8,
    /// Time of the packet whose arrival pinned the symbol.
    pub recovered_at: usize,
}

/// Online decoder over a stream of received-or-erased packets.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    spec: &'a StreamCodeSpec,
    next_t: usize,
    solver: IncrementalSolver,
    /// (time, 0-based coord) -> solver variable, for erased symbols.
    vars: BTreeMap<(usize, usize), usize>,
    var_symbol: Vec<(usize, usize)>,
    /// Values of symbols received in the clear.
    received: BTreeMap<usize, Vec<u8>>,
    erased: BTreeSet<usize>,
}

impl<'a> Decoder<'a> {
    pub fn new(spec: &'a StreamCodeSpec) -> Self {
        Decoder {
            spec,
            next_t: 0,
            solver: IncrementalSolver::new(0),
            vars: BTreeMap::new(),
            var_symbol: Vec::new(),
            received: BTreeMap::new(),
            erased: BTreeSet::new(),
        }
    }

    /// Process the packet at time `t` (`None` = erased). Returns the message
    /// symbols newly recovered at this step.
    pub fn decode_step(
        &mut self,
        t: usize,
        packet: Option<&Packet>,
    ) -> Result<Vec<RecoveredSymbol>> {
        let spec = self.spec;
        assert_eq!(t, self.next_t, "packets must be processed in time order");
        self.next_t += 1;

        let Some(pkt) = packet else {
            // Erased: register one unknown per message symbol.
            self.erased.insert(t);
            let base = self.solver.num_vars();
            self.solver.add_vars(spec.k);
            for j in 0..spec.k {
                self.vars.insert((t, j), base + j);
                self.var_symbol.push((t, j));
            }
            return Ok(Vec::new());
        };

        if pkt.message.len() != spec.k || pkt.parity.len() != spec.w {
            return Err(Error::WrongLength {
                expected: spec.n(),
                got: pkt.message.len() + pkt.parity.len(),
            });
        }

        let mut out: Vec<RecoveredSymbol> = pkt
            .message
            .iter()
            .enumerate()
            .map(|(j, &bit)| RecoveredSymbol {
                time: t,
                coord: j + 1,
                bit,
                recovered_at: t,
            })
            .collect();
        self.received.insert(t, pkt.message.clone());

        // Each parity coordinate is one equation over the erased unknowns in
        // the window; contributions of cleanly received symbols move to the
        // right-hand side.
        for c in 0..spec.w {
            let mut coeffs: Vec<usize> = Vec::new();
            let mut rhs = pkt.parity[c];
            for i in 0..=spec.horizon.min(t) {
                let tp = t - i;
                let p_i = &spec.parity[i];
                if self.erased.contains(&tp) {
                    for j in 0..spec.k {
                        if p_i.get(j + 1, c + 1) == 1 {
                            coeffs.push(self.vars[&(tp, j)]);
                        }
                    }
                } else if let Some(msg) = self.received.get(&tp) {
                    for j in 0..spec.k {
                        rhs ^= msg[j] & p_i.get(j + 1, c + 1);
                    }
                }
            }
            let mut packed = vec![0u64; self.solver.num_vars().div_ceil(64)];
            for v in coeffs {
                crate::gf2::bit_set(&mut packed, v, 1);
            }
            let newly = self
                .solver
                .add_equation_packed(packed, rhs)
                .map_err(|_| Error::DecodeFailure(format!("inconsistent system at t={t}")))?;
            for (var, bit) in newly {
                let (tp, j) = self.var_symbol[var];
                out.push(RecoveredSymbol {
                    time: tp,
                    coord: j + 1,
                    bit,
                    recovered_at: t,
                });
            }
        }

        // Retire solved unknowns that have aged out of the window; their
        // coefficients are zero in every future equation.
        let cutoff = t.saturating_sub(spec.horizon);
        let old: Vec<(usize, usize)> = self
            .vars
            .range(..(cutoff, 0))
            .map(|(&key, _)| key)
            .collect();
        for key in old {
            let var = self.vars[&key];
            if self.solver.value_of(var).is_some() {
                self.solver.retire(var);
                self.vars.remove(&key);
            }
        }

        out.sort();
        Ok(out)
    }
}

/// Run the decoder over a finite trace and collect recovery times of every
/// message symbol, keyed by `(time, 1-based coord)`.
pub fn decode_trace(
    spec: &StreamCodeSpec,
    packets: &[Packet],
    sched: &ErasureSchedule,
) -> Result<BTreeMap<(usize, usize), (u8, usize)>> {
    let mut dec = Decoder::new(spec);
    let mut recovered = BTreeMap::new();
    for (t, pkt) in packets.iter().enumerate() {
        let y = if sched.erased.contains(&t) {
            None
        } else {
            Some(pkt)
        };
        for r in dec.decode_step(t, y)? {
            recovered
                .entry((r.time, r.coord))
                .or_insert((r.bit, r.recovered_at));
        }
    }
    Ok(recovered)
}

/// Encode a random message stream of the given length, seeded for
/// reproducibility.
pub fn random_stream(spec: &StreamCodeSpec, len: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..len)
        .map(|_| (0..spec.k).map(|_| rng.gen_range(0..2u8)).collect())
        .collect()
}

/// Measure the worst-case delay profile by simulating the full-length burst
/// with clean history, cross-checking all shorter burst lengths.
pub fn measure_delay_profile(spec: &StreamCodeSpec) -> Result<DelayProfile> {
    let full = burst_profile(spec, spec.b)?;
    for len in 1..spec.b {
        let shorter = burst_profile(spec, len)?;
        for j in 0..spec.k {
            if shorter.0[j] > full.0[j] {
                return Err(Error::ConstructionInvalid(format!(
                    "burst of length {len} exceeds full-burst delay at coordinate {}",
                    j + 1
                )));
            }
        }
    }
    Ok(full)
}

fn burst_profile(spec: &StreamCodeSpec, burst_len: usize) -> Result<DelayProfile> {
    let t0 = spec.horizon + 2;
    let total = t0 + burst_len + spec.horizon;
    let stream = random_stream(spec, total, 0xC0DE);
    let mut enc = Encoder::new(spec);
    let packets: Vec<Packet> = stream
        .iter()
        .map(|s| enc.encode_packet(s))
        .collect::<Result<_>>()?;
    let sched = ErasureSchedule::new(t0..t0 + burst_len, spec.b, spec.horizon + 1);
    let recovered = decode_trace(spec, &packets, &sched)?;

    let mut profile = vec![0usize; spec.k];
    for t in t0..t0 + burst_len {
        for j in 1..=spec.k {
            let Some(&(bit, at)) = recovered.get(&(t, j)) else {
                return Err(Error::ConstructionInvalid(format!(
                    "symbol S_{j}[{t}] unrecovered within the horizon"
                )));
            };
            if bit != stream[t][j - 1] {
                return Err(Error::ConstructionInvalid(format!(
                    "S_{j}[{t}] recovered with wrong value"
                )));
            }
            let delay = at - t;
            if delay > spec.horizon {
                return Err(Error::ConstructionInvalid(format!(
                    "S_{j}[{t}] recovered with delay {delay} > horizon {}",
                    spec.horizon
                )));
            }
            profile[j - 1] = profile[j - 1].max(delay);
        }
    }
    Ok(DelayProfile(profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{build_type_a, build_type_b, TypeAParams, TypeBParams};

    fn sr_iv() -> StreamCodeSpec {
        build_type_a(&TypeAParams {
            b: 2,
            w: 3,
            k: 5,
            horizon: 4,
        })
        .unwrap()
    }

    fn rd_iv() -> StreamCodeSpec {
        build_type_b(&TypeBParams {
            b: 3,
            k: 5,
            horizon: 5,
        })
        .unwrap()
    }

    #[test]
    fn all_zero_stream_gives_all_zero_parity() {
        let spec = sr_iv();
        let mut enc = Encoder::new(&spec);
        for _ in 0..10 {
            let pkt = enc.encode_packet(&[0; 5]).unwrap();
            assert_eq!(pkt.parity, vec![0, 0, 0]);
        }
    }

    #[test]
    fn one_hot_first_coordinate_parity() {
        // S[0] = e_1, zeros after: P[2] = (1,0,0), all other parities zero
        // (row 1 of P_4 is zero).
        let spec = sr_iv();
        let mut enc = Encoder::new(&spec);
        let mut parities = Vec::new();
        for t in 0..8 {
            let s = if t == 0 { [1, 0, 0, 0, 0] } else { [0; 5] };
            parities.push(enc.encode_packet(&s).unwrap().parity);
        }
        for (t, p) in parities.iter().enumerate() {
            let expect = if t == 2 { vec![1, 0, 0] } else { vec![0, 0, 0] };
            assert_eq!(*p, expect, "parity at t={t}");
        }
    }

    #[test]
    fn one_hot_fourth_coordinate_parity() {
        // S[0] = e_4: P[4] = (1,0,0), P[2] = 0 (row 4 of P_4 is (1,0,0)).
        let spec = sr_iv();
        let mut enc = Encoder::new(&spec);
        let mut parities = Vec::new();
        for t in 0..8 {
            let s = if t == 0 { [0, 0, 0, 1, 0] } else { [0; 5] };
            parities.push(enc.encode_packet(&s).unwrap().parity);
        }
        for (t, p) in parities.iter().enumerate() {
            let expect = if t == 4 { vec![1, 0, 0] } else { vec![0, 0, 0] };
            assert_eq!(*p, expect, "parity at t={t}");
        }
    }

    #[test]
    fn encoder_rejects_wrong_message_length() {
        let spec = sr_iv();
        let mut enc = Encoder::new(&spec);
        assert!(matches!(
            enc.encode_packet(&[0, 1]),
            Err(Error::WrongLength { .. })
        ));
    }

    #[test]
    fn admissibility_cases() {
        assert!(ErasureSchedule::new([3, 4], 2, 5).is_admissible());
        assert!(!ErasureSchedule::new([3, 4, 5], 2, 5).is_admissible());
        assert!(ErasureSchedule::new([0, 1, 6, 7], 2, 5).is_admissible());
        assert!(!ErasureSchedule::new([0, 1, 5, 6], 2, 5).is_admissible());
        assert!(ErasureSchedule::new([], 2, 5).is_admissible());
    }

    #[test]
    fn no_erasures_decodes_with_zero_delay() {
        let spec = sr_iv();
        let stream = random_stream(&spec, 12, 7);
        let mut enc = Encoder::new(&spec);
        let packets: Vec<Packet> = stream
            .iter()
            .map(|s| enc.encode_packet(s).unwrap())
            .collect();
        let sched = ErasureSchedule::new([], 2, 5);
        let rec = decode_trace(&spec, &packets, &sched).unwrap();
        for t in 0..12 {
            for j in 1..=5 {
                assert_eq!(rec[&(t, j)], (stream[t][j - 1], t));
            }
        }
    }

    #[test]
    fn sr_burst_recovery_times() {
        // Erase X[0], X[1]: S_{1..3}[0] at t=2, S_{1..3}[1] at t=3,
        // S_{4,5}[0] at t=4, S_{4,5}[1] at t=5.
        let spec = sr_iv();
        let stream = random_stream(&spec, 10, 99);
        let mut enc = Encoder::new(&spec);
        let packets: Vec<Packet> = stream
            .iter()
            .map(|s| enc.encode_packet(s).unwrap())
            .collect();
        let sched = ErasureSchedule::new([0, 1], 2, 5);
        let rec = decode_trace(&spec, &packets, &sched).unwrap();
        for t in 0..2 {
            for j in 1..=3 {
                assert_eq!(rec[&(t, j)], (stream[t][j - 1], t + 2), "S_{j}[{t}]");
            }
            for j in 4..=5 {
                assert_eq!(rec[&(t, j)], (stream[t][j - 1], t + 4), "S_{j}[{t}]");
            }
        }
    }

    #[test]
    fn rd_burst_first_coords_recovered_by_time_four() {
        // Erase Z[0..2]: the first q=2 coordinates of all three erased
        // packets are recovered by t=4.
        let spec = rd_iv();
        let stream = random_stream(&spec, 12, 5);
        let mut enc = Encoder::new(&spec);
        let packets: Vec<Packet> = stream
            .iter()
            .map(|s| enc.encode_packet(s).unwrap())
            .collect();
        let sched = ErasureSchedule::new([0, 1, 2], 3, 6);
        let rec = decode_trace(&spec, &packets, &sched).unwrap();
        for t in 0..3 {
            for j in 1..=2 {
                let (bit, at) = rec[&(t, j)];
                assert_eq!(bit, stream[t][j - 1]);
                assert!(at <= 4, "S_{j}[{t}] recovered at {at}");
            }
        }
    }

    #[test]
    fn measured_profiles_match_worked_example() {
        assert_eq!(
            measure_delay_profile(&sr_iv()).unwrap(),
            DelayProfile(vec![2, 2, 2, 4, 4])
        );
        assert_eq!(
            measure_delay_profile(&rd_iv()).unwrap(),
            DelayProfile(vec![3, 3, 5, 5, 5])
        );
    }

    #[test]
    fn measured_profile_small_type_a() {
        let spec = build_type_a(&TypeAParams {
            b: 1,
            w: 2,
            k: 3,
            horizon: 2,
        })
        .unwrap();
        assert_eq!(
            measure_delay_profile(&spec).unwrap(),
            DelayProfile(vec![1, 1, 2])
        );
    }

    #[test]
    fn invalid_code_reports_unrecovered_symbol() {
        // A code with all-zero parity cannot recover anything.
        let parity = vec![BinMatrix::zero(2, 1); 3];
        let spec = StreamCodeSpec::new(1, 2, 2, 1, parity).unwrap();
        assert!(matches!(
            measure_delay_profile(&spec),
            Err(Error::ConstructionInvalid(_))
        ));
    }

    #[test]
    fn parity_linearity() {
        let spec = rd_iv();
        let a = random_stream(&spec, 9, 1);
        let b = random_stream(&spec, 9, 2);
        let sum: Vec<Vec<u8>> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p ^ q).collect())
            .collect();
        let run = |stream: &[Vec<u8>]| -> Vec<Vec<u8>> {
            let mut enc = Encoder::new(&spec);
            stream
                .iter()
                .map(|s| enc.encode_packet(s).unwrap().parity)
                .collect()
        };
        let (pa, pb, ps) = (run(&a), run(&b), run(&sum));
        for t in 0..9 {
            let xor: Vec<u8> = pa[t].iter().zip(&pb[t]).map(|(x, y)| x ^ y).collect();
            assert_eq!(ps[t], xor);
        }
    }

    #[test]
    fn admissible_subsets_stay_admissible() {
        // Monotonicity spot checks over all subsets of a moderate admissible set.
        let base: Vec<usize> = vec![1, 2, 9, 10, 17];
        let sched = ErasureSchedule::new(base.clone(), 2, 7);
        assert!(sched.is_admissible());
        for mask in 0u32..(1 << base.len()) {
            let subset: Vec<usize> = base
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &t)| t)
                .collect();
            assert!(ErasureSchedule::new(subset, 2, 7).is_admissible());
        }
    }
}
