//! Builders for the two binary parity-matrix families and their predicted
//! delay profiles, plus the feasibility predicates and the rate bound for
//! three-node relay parameters `(b1, b2, T)`.
//!
//! Type-A places identity blocks at multiples of the burst length; Type-B
//! places shifted identity blocks plus single-entry matrices. A feasible
//! `(b1, b2, T)` yields a relay network spec whose two hops both meet the
//! rate bound `min{(T-b1)/(T-b1+b2), (T-b2)/(T-b2+b1)}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::BinMatrix;
use crate::relay::RelayNetworkSpec;
use crate::streaming_code::{measure_delay_profile, DelayProfile, StreamCodeSpec};

/// Exact non-negative rational, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den != 0);
        let g = gcd(num.max(1), den);
        Rational {
            num: num / g,
            den: den / g,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// `m mod n` ranging in `[1..n]`.
pub fn mod_one_based(m: usize, n: usize) -> usize {
    (m - 1) % n + 1
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Parameters for the Type-A family: burst length `b`, parity width `w`,
/// message dimension `k = p*w + q` with `0 < q <= w`, and delay parameter
/// `horizon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeAParams {
    pub b: usize,
    pub w: usize,
    pub k: usize,
    pub horizon: usize,
}

impl TypeAParams {
    /// Remainder `q` of `k = p*w + q`, in `(0, w]`.
    pub fn q(&self) -> usize {
        mod_one_based(self.k, self.w)
    }

    pub fn p(&self) -> usize {
        (self.k - self.q()) / self.w
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.w == 0 || self.k == 0 {
            return Err(Error::InfeasibleParams("b, w, k must be positive".into()));
        }
        if (self.p() + 1) * self.b > self.horizon {
            return Err(Error::InfeasibleParams(format!(
                "(p+1)*b = {} exceeds horizon {}",
                (self.p() + 1) * self.b,
                self.horizon
            )));
        }
        Ok(())
    }
}

/// Parameters for the Type-B family: burst length = parity width `b`,
/// message dimension `k = p*b + q` with `0 < q <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeBParams {
    pub b: usize,
    pub k: usize,
    pub horizon: usize,
}

impl TypeBParams {
    pub fn q(&self) -> usize {
        mod_one_based(self.k, self.b)
    }

    pub fn p(&self) -> usize {
        (self.k - self.q()) / self.b
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.k == 0 {
            return Err(Error::InfeasibleParams("b and k must be positive".into()));
        }
        if self.horizon < self.k {
            return Err(Error::InfeasibleParams(format!(
                "horizon {} smaller than k = {}",
                self.horizon, self.k
            )));
        }
        Ok(())
    }
}

/// Build the Type-A code: identity blocks `P_{j*b}` for `j in [p]`, a
/// truncated identity at `P_{(p+1)*b}`, zeros elsewhere.
pub fn build_type_a(params: &TypeAParams) -> Result<StreamCodeSpec> {
    params.validate()?;
    let (b, w, k, horizon) = (params.b, params.w, params.k, params.horizon);
    let (p, q) = (params.p(), params.q());
    let mut parity = vec![BinMatrix::zero(k, w); horizon + 1];
    for j in 1..=p {
        parity[j * b].paste((j - 1) * w + 1, 1, &BinMatrix::identity(w));
    }
    for d in 1..=q {
        parity[(p + 1) * b].set(p * w + d, d, 1);
    }
    StreamCodeSpec::new(b, horizon, k, w, parity)
}

/// Build the Type-B code: shifted identity blocks `P'_{j*b+q}`, a top-left
/// truncated identity at `P'_b`, and single-entry matrices `P'_i` for
/// `i in [b-1]` when `q != b`.
pub fn build_type_b(params: &TypeBParams) -> Result<StreamCodeSpec> {
    params.validate()?;
    let (b, k, horizon) = (params.b, params.k, params.horizon);
    let (p, q) = (params.p(), params.q());
    let mut parity = vec![BinMatrix::zero(k, b); horizon + 1];
    for j in 1..=p {
        parity[j * b + q].paste((j - 1) * b + q + 1, 1, &BinMatrix::identity(b));
    }
    for d in 1..=q {
        parity[b].set(d, d, 1);
    }
    if q != b {
        for i in 1..b {
            let d_i = mod_one_based(i, q);
            let e_i = q + mod_one_based(i, b - q);
            parity[i].set(d_i, e_i, 1);
        }
    }
    StreamCodeSpec::new(b, horizon, k, b, parity)
}

/// Delay profile predicted for a Type-A code: `w` coordinates at delay
/// `j*b` for each `j in [p]`, then `q` coordinates at delay `(p+1)*b`.
pub fn predicted_profile_a(params: &TypeAParams) -> DelayProfile {
    let mut delays = Vec::with_capacity(params.k);
    for j in 1..=params.p() {
        delays.extend(std::iter::repeat_n(j * params.b, params.w));
    }
    delays.extend(std::iter::repeat_n((params.p() + 1) * params.b, params.q()));
    DelayProfile(delays)
}

/// Delay profile predicted for a Type-B code: `q` coordinates at delay `b`,
/// then `b` coordinates at delay `j*b + q` for each `j in [p]`.
pub fn predicted_profile_b(params: &TypeBParams) -> DelayProfile {
    let mut delays = Vec::with_capacity(params.k);
    delays.extend(std::iter::repeat_n(params.b, params.q()));
    for j in 1..=params.p() {
        delays.extend(std::iter::repeat_n(j * params.b + params.q(), params.b));
    }
    DelayProfile(delays)
}

/// Assemble the `b*q x b*q` matrix obtained from the left-most block column
/// group of the Type-B recovery matrix: block `(r, c)` is `P'_{b-r+c}`
/// truncated to its top `q` rows, `r in [b]`, `c in [q]`.
pub fn reduced_p0_matrix(b: usize, q: usize, parity: &[BinMatrix]) -> BinMatrix {
    assert!(q >= 1 && q <= b);
    let mut out = BinMatrix::zero(b * q, q * b);
    for r in 1..=b {
        for c in 1..=q {
            let block = &parity[b - r + c];
            for i in 1..=q {
                for j in 1..=b {
                    if block.get(i, j) == 1 {
                        out.set((r - 1) * q + i, (c - 1) * b + j, 1);
                    }
                }
            }
        }
    }
    out
}

/// Which theorem path a feasible parameter triple takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstructionPath {
    /// `b1 < b2`: Type-A on the first hop, Type-B on the second.
    Theorem4,
    /// `b2 < b1`: roles swapped.
    Theorem5,
    /// `b1 = b2` with `b | T - b`; built via the Theorem-4 recipe and
    /// force-verified by simulation.
    EqualBurst,
    None,
}

impl std::fmt::Display for ConstructionPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConstructionPath::Theorem4 => "theorem-4",
            ConstructionPath::Theorem5 => "theorem-5",
            ConstructionPath::EqualBurst => "equal-b",
            ConstructionPath::None => "none",
        };
        write!(f, "{s}")
    }
}

/// Feasibility of `(b1, b2, T)` for this construction, together with the
/// looser sufficient condition and the prior-work divisibility predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub b1: usize,
    pub b2: usize,
    pub t: usize,
    pub feasible: bool,
    /// `T - b1 - b2 >= b1*b2 / |b1 - b2|`; false when `b1 = b2` (undefined).
    pub sufficient: bool,
    /// `max{b1,b2} | (T - b1 - b2)`.
    pub prior_work: bool,
    pub optimal_rate: Rational,
    pub path: ConstructionPath,
}

/// Rate upper bound `min{(T-b1)/(T-b1+b2), (T-b2)/(T-b2+b1)}`.
pub fn rate_bound(b1: usize, b2: usize, t: usize) -> Result<Rational> {
    if b1 == 0 || b2 == 0 || t < b1 + b2 {
        return Err(Error::InvalidParams(format!(
            "need b1,b2 >= 1 and T >= b1+b2, got ({b1},{b2},{t})"
        )));
    }
    let r1 = Rational::new((t - b1) as u64, (t - b1 + b2) as u64);
    let r2 = Rational::new((t - b2) as u64, (t - b2 + b1) as u64);
    Ok(r1.min(r2))
}

/// Evaluate the construction's feasibility predicate
/// `(T - max)/min >= ceil((T - min)/max)` in exact integer arithmetic.
pub fn feasibility(b1: usize, b2: usize, t: usize) -> Result<FeasibilityReport> {
    let optimal_rate = rate_bound(b1, b2, t)?;
    let mx = b1.max(b2);
    let mn = b1.min(b2);
    let feasible = t - mx >= ceil_div(t - mn, mx) * mn;
    let sufficient = b1 != b2 && (t - b1 - b2) * mx.abs_diff(mn) >= b1 * b2;
    let prior_work = (t - b1 - b2).is_multiple_of(mx);
    let path = if !feasible {
        ConstructionPath::None
    } else if b1 < b2 {
        ConstructionPath::Theorem4
    } else if b2 < b1 {
        ConstructionPath::Theorem5
    } else {
        ConstructionPath::EqualBurst
    };
    Ok(FeasibilityReport {
        b1,
        b2,
        t,
        feasible,
        sufficient,
        prior_work,
        optimal_rate,
        path,
    })
}

/// Build the full `(b1, b2, T)` relay network spec: SR code, RD code, and
/// the relay's lag table.
pub fn build_tbsc(b1: usize, b2: usize, t: usize) -> Result<RelayNetworkSpec> {
    let report = feasibility(b1, b2, t)?;
    if !report.feasible {
        let mx = b1.max(b2);
        let mn = b1.min(b2);
        return Err(Error::InfeasibleParams(format!(
            "(T-max)/min >= ceil((T-min)/max) fails: ({t}-{mx})/{mn} < ceil(({t}-{mn})/{mx}) = {}",
            ceil_div(t - mn, mx)
        )));
    }

    let (sr, rd, d_sr, d_rd) = if b2 >= b1 {
        // Theorem-4 recipe; also used for b1 = b2.
        let a = TypeAParams {
            b: b1,
            w: b2,
            k: t - b1,
            horizon: t - b2,
        };
        let bb = TypeBParams {
            b: b2,
            k: t - b1,
            horizon: t - b1,
        };
        (
            build_type_a(&a)?,
            build_type_b(&bb)?,
            predicted_profile_a(&a),
            predicted_profile_b(&bb),
        )
    } else {
        // Theorem-5 recipe: role swap.
        let bb = TypeBParams {
            b: b1,
            k: t - b2,
            horizon: t - b2,
        };
        let a = TypeAParams {
            b: b2,
            w: b1,
            k: t - b2,
            horizon: t - b1,
        };
        (
            build_type_b(&bb)?,
            build_type_a(&a)?,
            predicted_profile_b(&bb),
            predicted_profile_a(&a),
        )
    };

    let spec = RelayNetworkSpec::new(b1, b2, t, sr, rd, d_sr, d_rd)?;

    // The equal-burst case sits outside the theorems' strict inequality;
    // confirm both hops by simulation before handing the spec out.
    if b1 == b2 {
        let m_sr = measure_delay_profile(&spec.sr)?;
        let m_rd = measure_delay_profile(&spec.rd)?;
        for j in 1..=spec.k {
            if m_sr.delay(j) + m_rd.delay(spec.k + 1 - j) > t {
                return Err(Error::ConstructionInvalid(format!(
                    "equal-burst instance misses the deadline at coordinate {j}"
                )));
            }
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type_a_worked_example_blocks() {
        let spec = build_type_a(&TypeAParams {
            b: 2,
            w: 3,
            k: 5,
            horizon: 4,
        })
        .unwrap();
        assert_eq!(spec.nonzero_parity_indices(), vec![2, 4]);
        let p2 = BinMatrix::from_bit_rows(&["100", "010", "001", "000", "000"]);
        let p4 = BinMatrix::from_bit_rows(&["000", "000", "000", "100", "010"]);
        assert_eq!(spec.parity[2], p2);
        assert_eq!(spec.parity[4], p4);
    }

    #[test]
    fn type_a_p_zero_single_block() {
        // k = q = w: only P_1 = I_3.
        let spec = build_type_a(&TypeAParams {
            b: 1,
            w: 3,
            k: 3,
            horizon: 1,
        })
        .unwrap();
        assert_eq!(spec.nonzero_parity_indices(), vec![1]);
        assert_eq!(spec.parity[1], BinMatrix::identity(3));
    }

    #[test]
    fn type_a_small_instance() {
        let spec = build_type_a(&TypeAParams {
            b: 1,
            w: 2,
            k: 3,
            horizon: 2,
        })
        .unwrap();
        assert_eq!(
            spec.parity[1],
            BinMatrix::from_bit_rows(&["10", "01", "00"])
        );
        assert_eq!(
            spec.parity[2],
            BinMatrix::from_bit_rows(&["00", "00", "10"])
        );
    }

    #[test]
    fn type_a_rejects_short_horizon() {
        let params = TypeAParams {
            b: 2,
            w: 3,
            k: 5,
            horizon: 3,
        };
        assert!(matches!(
            build_type_a(&params),
            Err(Error::InfeasibleParams(_))
        ));
    }

    #[test]
    fn type_b_worked_example_blocks() {
        let spec = build_type_b(&TypeBParams {
            b: 3,
            k: 5,
            horizon: 5,
        })
        .unwrap();
        assert_eq!(spec.nonzero_parity_indices(), vec![1, 2, 3, 5]);
        assert_eq!(
            spec.parity[1],
            BinMatrix::from_bit_rows(&["001", "000", "000", "000", "000"])
        );
        assert_eq!(
            spec.parity[2],
            BinMatrix::from_bit_rows(&["000", "001", "000", "000", "000"])
        );
        assert_eq!(
            spec.parity[3],
            BinMatrix::from_bit_rows(&["100", "010", "000", "000", "000"])
        );
        assert_eq!(
            spec.parity[5],
            BinMatrix::from_bit_rows(&["000", "000", "100", "010", "001"])
        );
    }

    #[test]
    fn type_b_q_equals_b_degenerate_branch() {
        // b=2, k=4 (p=1, q=2): P'_1 = 0, nonzero only P'_2 and P'_4.
        let spec = build_type_b(&TypeBParams {
            b: 2,
            k: 4,
            horizon: 4,
        })
        .unwrap();
        assert_eq!(spec.nonzero_parity_indices(), vec![2, 4]);
    }

    #[test]
    fn type_b_small_instance() {
        let spec = build_type_b(&TypeBParams {
            b: 2,
            k: 3,
            horizon: 3,
        })
        .unwrap();
        assert_eq!(
            spec.parity[1],
            BinMatrix::from_bit_rows(&["01", "00", "00"])
        );
        assert_eq!(
            spec.parity[2],
            BinMatrix::from_bit_rows(&["10", "00", "00"])
        );
        assert_eq!(
            spec.parity[3],
            BinMatrix::from_bit_rows(&["00", "10", "01"])
        );
    }

    #[test]
    fn predicted_profiles() {
        assert_eq!(
            predicted_profile_a(&TypeAParams {
                b: 2,
                w: 3,
                k: 5,
                horizon: 4
            }),
            DelayProfile(vec![2, 2, 2, 4, 4])
        );
        assert_eq!(
            predicted_profile_a(&TypeAParams {
                b: 1,
                w: 2,
                k: 3,
                horizon: 2
            }),
            DelayProfile(vec![1, 1, 2])
        );
        // p = 0: every coordinate at delay b.
        assert_eq!(
            predicted_profile_a(&TypeAParams {
                b: 2,
                w: 4,
                k: 3,
                horizon: 4
            }),
            DelayProfile(vec![2, 2, 2])
        );
        assert_eq!(
            predicted_profile_b(&TypeBParams {
                b: 3,
                k: 5,
                horizon: 5
            }),
            DelayProfile(vec![3, 3, 5, 5, 5])
        );
        assert_eq!(
            predicted_profile_b(&TypeBParams {
                b: 2,
                k: 3,
                horizon: 3
            }),
            DelayProfile(vec![2, 3, 3])
        );
        // q = b: same shape as the Type-A profile.
        assert_eq!(
            predicted_profile_b(&TypeBParams {
                b: 2,
                k: 4,
                horizon: 4
            }),
            predicted_profile_a(&TypeAParams {
                b: 2,
                w: 2,
                k: 4,
                horizon: 4
            })
        );
    }

    #[test]
    fn reduced_p0_invertibility() {
        let spec = build_type_b(&TypeBParams {
            b: 3,
            k: 5,
            horizon: 5,
        })
        .unwrap();
        let m = reduced_p0_matrix(3, 2, &spec.parity);
        assert_eq!(m.rows(), 6);
        assert!(m.is_invertible());

        let spec = build_type_b(&TypeBParams {
            b: 2,
            k: 3,
            horizon: 3,
        })
        .unwrap();
        assert!(reduced_p0_matrix(2, 1, &spec.parity).is_invertible());

        // q = b: only P'_b blocks survive, one per block row.
        let spec = build_type_b(&TypeBParams {
            b: 2,
            k: 4,
            horizon: 4,
        })
        .unwrap();
        assert!(reduced_p0_matrix(2, 2, &spec.parity).is_invertible());
    }

    #[test]
    fn rate_bound_values() {
        assert_eq!(rate_bound(2, 3, 7).unwrap(), Rational::new(5, 8));
        assert_eq!(rate_bound(3, 2, 8).unwrap(), Rational::new(2, 3));
        // Symmetric case: (T-b)/T.
        assert_eq!(rate_bound(2, 2, 9).unwrap(), Rational::new(7, 9));
        assert!(rate_bound(2, 3, 4).is_err());
    }

    #[test]
    fn feasibility_known_values() {
        assert!(feasibility(2, 3, 5).unwrap().feasible);
        assert!(!feasibility(2, 3, 6).unwrap().feasible);
        let r = feasibility(3, 2, 8).unwrap();
        assert!(r.feasible);
        assert_eq!(r.path, ConstructionPath::Theorem5);
    }

    #[test]
    fn sufficient_condition_implies_feasible() {
        for b1 in 1..=6 {
            for b2 in 1..=6 {
                for t in b1 + b2..=40 {
                    let r = feasibility(b1, b2, t).unwrap();
                    if r.sufficient {
                        assert!(r.feasible, "({b1},{b2},{t})");
                    }
                }
            }
        }
    }

    #[test]
    fn build_tbsc_worked_example() {
        let spec = build_tbsc(2, 3, 7).unwrap();
        assert_eq!(spec.k, 5);
        assert_eq!(
            spec.sr,
            build_type_a(&TypeAParams {
                b: 2,
                w: 3,
                k: 5,
                horizon: 4
            })
            .unwrap()
        );
        assert_eq!(
            spec.rd,
            build_type_b(&TypeBParams {
                b: 3,
                k: 5,
                horizon: 5
            })
            .unwrap()
        );
        assert_eq!(spec.rate(), Rational::new(5, 8));
        assert_eq!(spec.d_sr, DelayProfile(vec![2, 2, 2, 4, 4]));
    }

    #[test]
    fn build_tbsc_theorem5() {
        let spec = build_tbsc(3, 2, 8).unwrap();
        assert_eq!(spec.rate(), Rational::new(2, 3));
        assert_eq!(
            spec.sr,
            build_type_b(&TypeBParams {
                b: 3,
                k: 6,
                horizon: 6
            })
            .unwrap()
        );
        assert_eq!(
            spec.rd,
            build_type_a(&TypeAParams {
                b: 2,
                w: 3,
                k: 6,
                horizon: 5
            })
            .unwrap()
        );
    }

    #[test]
    fn build_tbsc_rejects_infeasible() {
        assert!(matches!(
            build_tbsc(2, 3, 6),
            Err(Error::InfeasibleParams(_))
        ));
    }

    #[test]
    fn build_tbsc_equal_burst() {
        let spec = build_tbsc(1, 1, 2).unwrap();
        assert_eq!(spec.rate(), Rational::new(1, 2));
        assert!(build_tbsc(2, 2, 6).is_ok());
    }

    #[test]
    fn parity_zero_outside_window() {
        let spec = build_tbsc(2, 3, 7).unwrap();
        for code in [&spec.sr, &spec.rd] {
            assert_eq!(code.parity.len(), code.horizon + 1);
            assert!(code
                .nonzero_parity_indices()
                .iter()
                .all(|&i| i <= code.horizon));
        }
    }

    #[test]
    fn mod_convention() {
        assert_eq!(mod_one_based(2, 2), 2);
        assert_eq!(mod_one_based(3, 2), 1);
        assert_eq!(mod_one_based(1, 1), 1);
        assert_eq!(mod_one_based(4, 2), 2);
    }
}
