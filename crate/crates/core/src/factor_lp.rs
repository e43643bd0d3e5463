//! The factor-revealing linear program bounding the pipeline's output.
//!
//! Seven variables describe one run, all scaled by the combined weight O of
//! the classified optimal-edge sets: alpha0/alpha2/alpha3 for the available
//! free edges (leftover, type-2, type-3), beta1/beta2/beta3 for the blocked
//! edges by type, and Z for the output weight. The constraints are exactly
//! the deterministic lower bounds proved by the charging analysis, so the
//! LP minimum is the worst-case output fraction. Everything runs in exact
//! rational arithmetic; the reported optimum is a true rational, not a
//! float.

use std::cmp::Ordering;

use itertools::Itertools;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::analysis::{rat, AnalysisRow};
use crate::error::{Error, Result};

pub type Rat = BigRational;

pub const NVARS: usize = 7;
pub const VAR_NAMES: [&str; NVARS] = ["alpha0", "alpha2", "alpha3", "beta1", "beta2", "beta3", "z"];

fn q(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    /// coeffs . x = rhs
    Eq,
    /// coeffs . x >= rhs
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: &'static str,
    pub coeffs: [Rat; NVARS],
    pub rhs: Rat,
    pub sense: Sense,
}

impl Constraint {
    fn dot(&self, x: &[Rat; NVARS]) -> Rat {
        self.coeffs.iter().zip(x.iter()).map(|(c, v)| c * v).sum()
    }

    pub fn satisfied_by(&self, x: &[Rat; NVARS]) -> bool {
        let lhs = self.dot(x);
        match self.sense {
            Sense::Eq => lhs == self.rhs,
            Sense::Ge => lhs >= self.rhs,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LpInstance {
    pub constraints: Vec<Constraint>,
    pub m1_cap: Option<Rat>,
}

impl LpInstance {
    /// True when x sits inside the whole system, unit box included.
    pub fn feasible(&self, x: &[Rat; NVARS]) -> bool {
        x.iter().all(|v| *v >= Rat::zero() && *v <= Rat::one())
            && self.constraints.iter().all(|c| c.satisfied_by(x))
    }
}

/// Builds the system. The six mass variables sum to one; the output Z
/// dominates the machine-1 bound and both union-graph charging bounds; the
/// per-type free-vs-blocked dominances close it out. An optional cap `mu`
/// limits the mass the machine-1 bound can claim.
pub fn build_lp(m1_cap: Option<Rat>) -> Result<LpInstance> {
    if let Some(mu) = &m1_cap {
        if mu.is_negative() || *mu > Rat::one() {
            return Err(Error::Config(format!("m1 cap {mu} outside [0, 1]")));
        }
    }
    let row = |v: [(i64, i64); NVARS]| v.map(|(n, d)| q(n, d));
    let mut constraints = vec![
        Constraint {
            label: "total-mass",
            coeffs: row([(1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (1, 1), (0, 1)]),
            rhs: Rat::one(),
            sense: Sense::Eq,
        },
        // z >= beta1/2 + beta2 + beta3
        Constraint {
            label: "output-covers-m1",
            coeffs: row([(0, 1), (0, 1), (0, 1), (-1, 2), (-1, 1), (-1, 1), (1, 1)]),
            rhs: Rat::zero(),
            sense: Sense::Ge,
        },
        // z >= (alpha0 + beta1/2 + alpha2 + alpha3) / 2
        Constraint {
            label: "output-covers-union-free3",
            coeffs: row([(-1, 2), (-1, 2), (-1, 2), (-1, 4), (0, 1), (0, 1), (1, 1)]),
            rhs: Rat::zero(),
            sense: Sense::Ge,
        },
        // z >= (alpha0 + beta1/2 + alpha2 + beta3) / 2
        Constraint {
            label: "output-covers-union-blocked3",
            coeffs: row([(-1, 2), (-1, 2), (0, 1), (-1, 4), (0, 1), (-1, 2), (1, 1)]),
            rhs: Rat::zero(),
            sense: Sense::Ge,
        },
        Constraint {
            label: "free2-dominates-blocked2",
            coeffs: row([(0, 1), (1, 1), (0, 1), (0, 1), (-1, 1), (0, 1), (0, 1)]),
            rhs: Rat::zero(),
            sense: Sense::Ge,
        },
        Constraint {
            label: "free3-covers-half-blocked3",
            coeffs: row([(0, 1), (0, 1), (1, 1), (0, 1), (0, 1), (-1, 2), (0, 1)]),
            rhs: Rat::zero(),
            sense: Sense::Ge,
        },
    ];
    if let Some(mu) = &m1_cap {
        // beta1/2 + beta2 + beta3 <= mu
        constraints.push(Constraint {
            label: "m1-mass-cap",
            coeffs: row([(0, 1), (0, 1), (0, 1), (-1, 2), (-1, 1), (-1, 1), (0, 1)]),
            rhs: -mu.clone(),
            sense: Sense::Ge,
        });
    }
    Ok(LpInstance {
        constraints,
        m1_cap,
    })
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub z_star: Rat,
    pub witness: [Rat; NVARS],
    /// 1 / z_star: the worst-case multiplicative gap.
    pub ratio: Rat,
}

/// Gauss-Jordan over the rationals; None when singular.
fn solve_square(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> Option<Vec<Rat>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot[col];
            for (dst, p) in a[r].iter_mut().zip(&pivot).skip(col) {
                let t = p * &factor;
                *dst = &*dst - t;
            }
            let t = &b[col] * &factor;
            b[r] = &b[r] - t;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Minimizes Z by exact vertex enumeration. A vertex is the unique solution
/// of the mass equality, a choice of tight inequality rows, and box-fixed
/// variables; every candidate is filtered through full feasibility, so the
/// returned optimum is exact and the witness re-verified.
pub fn solve_lp(lp: &LpInstance) -> Result<LpSolution> {
    let equality = &lp.constraints[0];
    debug_assert_eq!(equality.sense, Sense::Eq);
    let relational: Vec<&Constraint> = lp
        .constraints
        .iter()
        .filter(|c| c.sense == Sense::Ge)
        .collect();

    let mut best: Option<[Rat; NVARS]> = None;
    for r in 0..=relational.len().min(NVARS - 1) {
        let fixed_count = NVARS - 1 - r;
        for rows in (0..relational.len()).combinations(r) {
            for fixed_vars in (0..NVARS).combinations(fixed_count) {
                'mask: for mask in 0u32..(1 << fixed_count) {
                    let mut value = [const { None::<Rat> }; NVARS];
                    let mut mass_fixed = Rat::zero();
                    for (bit, &v) in fixed_vars.iter().enumerate() {
                        let at_one = mask >> bit & 1 == 1;
                        value[v] = Some(if at_one { Rat::one() } else { Rat::zero() });
                        if at_one && v < NVARS - 1 {
                            mass_fixed += Rat::one();
                        }
                    }
                    // Free mass variables cannot be negative, so an
                    // over-committed mass row can be dropped early.
                    if mass_fixed > Rat::one() {
                        continue 'mask;
                    }

                    let free: Vec<usize> = (0..NVARS).filter(|v| value[*v].is_none()).collect();
                    let mut a = Vec::with_capacity(r + 1);
                    let mut b = Vec::with_capacity(r + 1);
                    for cons in std::iter::once(equality).chain(rows.iter().map(|&i| relational[i]))
                    {
                        let mut rhs = cons.rhs.clone();
                        for (val, coeff) in value.iter().zip(&cons.coeffs) {
                            if let Some(val) = val {
                                rhs -= coeff * val;
                            }
                        }
                        a.push(free.iter().map(|&v| cons.coeffs[v].clone()).collect());
                        b.push(rhs);
                    }
                    let Some(sol) = solve_square(a, b) else {
                        continue 'mask;
                    };
                    let mut x = value.clone();
                    for (i, &v) in free.iter().enumerate() {
                        x[v] = Some(sol[i].clone());
                    }
                    let x: [Rat; NVARS] = x.map(Option::unwrap);
                    if !lp.feasible(&x) {
                        continue 'mask;
                    }
                    if best
                        .as_ref()
                        .is_none_or(|b| x[NVARS - 1].cmp(&b[NVARS - 1]) == Ordering::Less)
                    {
                        best = Some(x);
                    }
                }
            }
        }
    }

    let witness = best.ok_or_else(|| Error::Internal("no feasible vertex found".into()))?;
    if !lp.feasible(&witness) {
        return Err(Error::Internal(
            "optimal witness failed re-verification".into(),
        ));
    }
    let z_star = witness[NVARS - 1].clone();
    if z_star.is_zero() {
        return Err(Error::Internal("degenerate zero optimum".into()));
    }
    let ratio = z_star.recip();
    Ok(LpSolution {
        z_star,
        witness,
        ratio,
    })
}

/// The base system's exact optimum, pinned by a test against `solve_lp`.
pub fn base_guarantee() -> Rat {
    q(1, 3)
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses "p/q", "0.45", or "2" into an exact rational. Decimal text maps to
/// the exact decimal fraction, not the nearest float, so cap grids passed as
/// text solve to the same rationals a literal `q(9, 20)` would.
pub fn parse_rat(s: &str) -> Result<Rat> {
    use num_bigint::BigInt;
    let bad = |why: &str| Error::Config(format!("cannot parse {s:?} as a rational: {why}"));
    let s = s.trim();
    if let Some((p, d)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad("bad numerator"))?;
        let d: BigInt = d.trim().parse().map_err(|_| bad("bad denominator"))?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(Rat::new(p, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad("bad fraction digits"));
        }
        let digits = format!("{int}{frac}");
        let p: BigInt = digits.parse().map_err(|_| bad("bad digits"))?;
        let d = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Rat::new(p, d));
    }
    let p: BigInt = s.parse().map_err(|_| bad("bad integer"))?;
    Ok(Rat::from_integer(p))
}

/// How one observed run sits against the LP: the normalized point, the
/// subset of constraints decidable per-seed, and the output fraction.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    pub alphas: [f64; 3],
    pub betas: [f64; 3],
    pub mass_ok: bool,
    pub free2_ok: bool,
    pub free3_ok: bool,
    pub feasible: bool,
    pub output_ratio: f64,
    /// output_ratio minus the base guarantee.
    pub slack: f64,
    pub meets_lp_bound: bool,
    /// Set when the classified sets carry no weight at all; ratios are then
    /// reported as zero and the bound holds vacuously.
    pub degenerate: bool,
}

/// Checks a per-seed row against the LP in exact arithmetic.
pub fn empirical_lp_point(row: &AnalysisRow) -> Result<FeasibilityReport> {
    let parts = [row.f10, row.f12, row.f13, row.b11, row.b12, row.b13];
    if parts
        .iter()
        .chain([&row.output])
        .any(|v| !v.is_finite() || *v < 0.0)
    {
        return Err(Error::Config(
            "analysis row has a negative or non-finite set weight".into(),
        ));
    }
    let exact: Vec<Rat> = parts.iter().map(|&v| rat(v)).collect();
    let total: Rat = exact.iter().sum();
    if total.is_zero() {
        return Ok(FeasibilityReport {
            alphas: [0.0; 3],
            betas: [0.0; 3],
            mass_ok: true,
            free2_ok: true,
            free3_ok: true,
            feasible: true,
            output_ratio: 0.0,
            slack: 0.0,
            meets_lp_bound: true,
            degenerate: true,
        });
    }
    let scaled: Vec<Rat> = exact.iter().map(|v| v / &total).collect();
    let mass_ok = scaled.iter().sum::<Rat>() == Rat::one();
    let free2_ok = scaled[1] >= scaled[4];
    let free3_ok = scaled[2] >= &scaled[5] / &q(2, 1);
    let output_ratio = rat(row.output) / &total;
    let meets_lp_bound = output_ratio >= base_guarantee();

    let to_f64 = |r: &Rat| -> f64 { r.to_f64().unwrap_or(f64::NAN) };
    Ok(FeasibilityReport {
        alphas: [to_f64(&scaled[0]), to_f64(&scaled[1]), to_f64(&scaled[2])],
        betas: [to_f64(&scaled[3]), to_f64(&scaled[4]), to_f64(&scaled[5])],
        mass_ok,
        free2_ok,
        free3_ok,
        feasible: mass_ok && free2_ok && free3_ok,
        output_ratio: to_f64(&output_ratio),
        slack: to_f64(&(output_ratio - base_guarantee())),
        meets_lp_bound,
        degenerate: false,
    })
}
