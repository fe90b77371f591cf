use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::ConnectivityEvent;
use crate::graph::{build_bunkbed, minus_name, plus_name, BunkbedGraph, WeightedGraph};
use crate::unionfind::UnionFind;

const CHUNK_BITS: u32 = 14;

#[derive(Clone, Debug)]
pub struct PolyOptions {
    /// Maximum number of indeterminate edges in the tally sweep.
    pub cap: usize,
}

impl Default for PolyOptions {
    fn default() -> Self {
        PolyOptions { cap: 24 }
    }
}

impl PolyOptions {
    pub fn with_cap(cap: usize) -> Self {
        PolyOptions { cap }
    }
}

/// A univariate polynomial with rational coefficients, stored in ascending
/// degree order with the trailing zeros trimmed.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RationalPolynomial { coeffs }
    }

    pub fn zero() -> Self {
        RationalPolynomial { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coefficient(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Ascending-degree coefficient strings, `["0", "1", "-2", "1"]` style.
    pub fn coefficient_strings(&self) -> Vec<String> {
        if self.is_zero() {
            return vec!["0".to_string()];
        }
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect();
        RationalPolynomial::new(coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coefficient(i) + other.coefficient(i))
            .collect();
        RationalPolynomial::new(coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coefficient(i) - other.coefficient(i))
            .collect();
        RationalPolynomial::new(coeffs)
    }

    pub fn neg(&self) -> Self {
        RationalPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }

    /// Long division; the divisor must be nonzero.
    fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let mut rem = self.coeffs.clone();
        let dn = divisor.coeffs.len();
        if rem.len() < dn {
            return (RationalPolynomial::zero(), self.clone());
        }
        let mut quot = vec![BigRational::zero(); rem.len() - dn + 1];
        let lead = divisor.coeffs.last().unwrap().clone();
        for i in (0..quot.len()).rev() {
            let q = &rem[i + dn - 1] / &lead;
            if q.is_zero() {
                continue;
            }
            for (j, d) in divisor.coeffs.iter().enumerate() {
                let updated = &rem[i + j] - &q * d;
                rem[i + j] = updated;
            }
            quot[i] = q;
        }
        (
            RationalPolynomial::new(quot),
            RationalPolynomial::new(rem),
        )
    }

    fn monic(&self) -> Self {
        match self.coeffs.last() {
            None => RationalPolynomial::zero(),
            Some(lead) => {
                let inv = BigRational::one() / lead;
                RationalPolynomial::new(self.coeffs.iter().map(|c| c * &inv).collect())
            }
        }
    }

    /// The product of the distinct linear factors: same roots, all simple.
    fn squarefree_part(&self) -> Self {
        if self.degree() == 0 {
            return self.monic();
        }
        let mut a = self.monic();
        let mut b = self.derivative();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b.monic();
            b = r;
        }
        let (quot, rem) = self.div_rem(&a);
        debug_assert!(rem.is_zero());
        quot.monic()
    }

    /// Divides out one factor `x - root`; the remainder must vanish.
    fn deflate(&self, root: &BigRational) -> Self {
        let divisor = RationalPolynomial::new(vec![-root.clone(), BigRational::one()]);
        let (quot, rem) = self.div_rem(&divisor);
        debug_assert!(rem.is_zero());
        quot
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "p")?;
                    } else {
                        write!(f, "p^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RationalPolynomial({self})")
    }
}

/// Counts, for each event and each number `k` of open indeterminate edges,
/// the configurations with exactly `k` open that satisfy the event. Edges
/// with weight strictly between 0 and 1 are the indeterminates; weight-1
/// edges are always open, weight-0 edges absent, as in the conditioned
/// model with every indeterminate set to the same `p`.
fn tally(
    g: &WeightedGraph,
    events: &[ConnectivityEvent],
    opts: &PolyOptions,
) -> Result<(usize, Vec<Vec<u64>>)> {
    let mut base = UnionFind::new(g.vertex_count());
    let mut ends = Vec::new();
    for e in g.edges() {
        if e.weight.is_zero() {
            continue;
        }
        if e.weight.is_one() {
            base.union(e.u as u32, e.v as u32);
            continue;
        }
        ends.push((e.u as u32, e.v as u32));
    }
    let m = ends.len();
    let cap = opts.cap.min(63);
    if m > cap {
        return Err(Error::CapExceeded {
            free_edges: m,
            cap: opts.cap,
            configurations: format!("2^{m}"),
        });
    }
    struct Resolved {
        connect: Vec<(u32, u32)>,
        separate: Vec<(u32, u32)>,
    }
    let resolved: Vec<Resolved> = events
        .iter()
        .map(|ev| {
            let pair = |a: &str, b: &str| -> Result<(u32, u32)> {
                Ok((g.vertex_index(a)? as u32, g.vertex_index(b)? as u32))
            };
            Ok(Resolved {
                connect: ev
                    .must_connect
                    .iter()
                    .map(|(a, b)| pair(a, b))
                    .collect::<Result<_>>()?,
                separate: ev
                    .must_separate
                    .iter()
                    .map(|(a, b)| pair(a, b))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;

    let total: u64 = 1 << m;
    let chunk: u64 = 1 << CHUNK_BITS.min(m as u32);
    let partials: Vec<Vec<Vec<u64>>> = (0..total / chunk)
        .into_par_iter()
        .map(|ci| {
            let mut counts = vec![vec![0u64; m + 1]; resolved.len()];
            let mut scratch = base.clone();
            for config in ci * chunk..(ci + 1) * chunk {
                scratch.copy_from(&base);
                for (i, &(u, v)) in ends.iter().enumerate() {
                    if config >> i & 1 == 1 {
                        scratch.union(u, v);
                    }
                }
                let k = config.count_ones() as usize;
                for (ev, c) in resolved.iter().zip(counts.iter_mut()) {
                    let holds = ev.connect.iter().all(|&(a, b)| scratch.connected(a, b))
                        && ev.separate.iter().all(|&(a, b)| !scratch.connected(a, b));
                    if holds {
                        c[k] += 1;
                    }
                }
            }
            counts
        })
        .collect();
    let mut counts = vec![vec![0u64; m + 1]; events.len()];
    for part in partials {
        for (t, p) in counts.iter_mut().zip(part) {
            for (a, b) in t.iter_mut().zip(p) {
                *a += b;
            }
        }
    }
    Ok((m, counts))
}

/// Expands `sum_k N_k p^k (1-p)^(m-k)` into coefficients.
fn expand(m: usize, counts: &[u64]) -> RationalPolynomial {
    let mut pascal = vec![vec![BigInt::one()]];
    for i in 1..=m {
        let prev = &pascal[i - 1];
        let mut row = vec![BigInt::one()];
        for j in 1..i {
            row.push(&prev[j - 1] + &prev[j]);
        }
        row.push(BigInt::one());
        pascal.push(row);
    }
    let mut coeffs = vec![BigInt::zero(); m + 1];
    for (k, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let n = BigInt::from(n);
        for j in 0..=m - k {
            let term = &n * &pascal[m - k][j];
            if j % 2 == 0 {
                coeffs[k + j] += term;
            } else {
                coeffs[k + j] -= term;
            }
        }
    }
    RationalPolynomial::new(
        coeffs
            .into_iter()
            .map(BigRational::from_integer)
            .collect(),
    )
}

/// Connection probability between two vertices of the doubled graph as a
/// polynomial in a shared edge weight `p`: every edge with weight strictly
/// between 0 and 1 is treated as open with probability `p`, weight-0 and
/// weight-1 edges stay deterministic.
pub fn connection_polynomial(
    b: &BunkbedGraph,
    a: &str,
    c: &str,
    opts: &PolyOptions,
) -> Result<RationalPolynomial> {
    let events = [ConnectivityEvent::connection(a, c)];
    let (m, counts) = tally(b.graph(), &events, opts)?;
    Ok(expand(m, &counts[0]))
}

/// The gap `P(v- <-> w-) - P(v- <-> w+)` as a polynomial in the shared edge
/// weight, computed from one tally sweep of the doubled graph.
pub fn gap_polynomial(
    g: &WeightedGraph,
    v: &str,
    w: &str,
    opts: &PolyOptions,
) -> Result<RationalPolynomial> {
    let b = build_bunkbed(g);
    b.marked_quadruple(v, w)?;
    let events = [
        ConnectivityEvent::connection(&minus_name(v), &minus_name(w)),
        ConnectivityEvent::connection(&minus_name(v), &plus_name(w)),
    ];
    let (m, counts) = tally(b.graph(), &events, opts)?;
    Ok(expand(m, &counts[0]).sub(&expand(m, &counts[1])))
}

/// Outcome of the sign analysis on [0,1].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NonnegVerdict {
    /// The polynomial is nonnegative on the whole interval.
    Nonnegative,
    /// A witness point `q` in [0,1] with a strictly negative value.
    NegativeAt(BigRational),
    /// The analysis gave up (defensive; not expected on real inputs).
    Inconclusive,
}

/// Sign variations of `s` mapped onto the interval `(a,b)`: an upper bound
/// on the number of roots inside, exact when 0 or 1.
fn variations_in(s: &RationalPolynomial, a: &BigRational, b: &BigRational) -> usize {
    let scale = b - a;
    // q(t) = s(a + scale * t), built by Horner over linear factors.
    let mut q: Vec<BigRational> = Vec::with_capacity(s.coeffs.len());
    for c in s.coeffs.iter().rev() {
        let mut next = vec![BigRational::zero(); q.len() + 1];
        for (i, qi) in q.iter().enumerate() {
            let shifted = &next[i] + qi * a;
            next[i] = shifted;
            next[i + 1] = qi * &scale;
        }
        if next.is_empty() {
            next.push(BigRational::zero());
        }
        let constant = &next[0] + c;
        next[0] = constant;
        q = next;
    }
    // R(x) = (1+x)^n q(1/(1+x)): reverse, then shift by 1.
    q.reverse();
    let n = q.len();
    for i in (0..n).rev() {
        for j in i..n - 1 {
            let bumped = &q[j] + &q[j + 1];
            q[j] = bumped;
        }
    }
    let mut variations = 0;
    let mut last: Option<bool> = None;
    for c in &q {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        if last.is_some_and(|l| l != neg) {
            variations += 1;
        }
        last = Some(neg);
    }
    variations
}

fn midpoint(a: &BigRational, b: &BigRational) -> BigRational {
    (a + b) / BigRational::from_integer(BigInt::from(2))
}

/// Pushes sample points so that every maximal sign region of the original
/// polynomial inside `(a,b)` receives at least one; `s` is squarefree.
fn collect_samples(
    s: &RationalPolynomial,
    a: &BigRational,
    b: &BigRational,
    depth: usize,
    out: &mut Vec<BigRational>,
    ok: &mut bool,
) {
    if !*ok {
        return;
    }
    if depth > 200 {
        *ok = false;
        return;
    }
    let v = variations_in(s, a, b);
    if v == 0 {
        out.push(midpoint(a, b));
        return;
    }
    let m = midpoint(a, b);
    let sm = s.eval(&m);
    if sm.is_zero() {
        let s2 = s.deflate(&m);
        collect_samples(&s2, a, &m, depth + 1, out, ok);
        collect_samples(&s2, &m, b, depth + 1, out, ok);
        return;
    }
    if v == 1 {
        let sa = s.eval(a);
        let sb = s.eval(b);
        if sa.is_zero() || sb.is_zero() {
            collect_samples(s, a, &m, depth + 1, out, ok);
            collect_samples(s, &m, b, depth + 1, out, ok);
            return;
        }
        // One simple root strictly inside: bisect toward it, keeping one
        // sample on each side.
        let left_sign = sa.is_negative();
        let mut lo = a.clone();
        let mut hi = b.clone();
        let mut got_left = false;
        let mut got_right = false;
        for _ in 0..256 {
            let m = midpoint(&lo, &hi);
            let sm = s.eval(&m);
            if sm.is_zero() {
                if !got_left {
                    out.push(midpoint(&lo, &m));
                }
                if !got_right {
                    out.push(midpoint(&m, &hi));
                }
                return;
            }
            if sm.is_negative() == left_sign {
                if !got_left {
                    out.push(m.clone());
                    got_left = true;
                }
                lo = m;
            } else {
                if !got_right {
                    out.push(m.clone());
                    got_right = true;
                }
                hi = m;
            }
            if got_left && got_right {
                return;
            }
        }
        *ok = false;
        return;
    }
    collect_samples(s, a, &m, depth + 1, out, ok);
    collect_samples(s, &m, b, depth + 1, out, ok);
}

/// Decides whether the polynomial is nonnegative everywhere on [0,1],
/// returning an exact rational witness when it is not. Roots touching zero
/// from above do not spoil nonnegativity; sign regions are located through
/// the squarefree part, so multiple roots are handled exactly.
pub fn nonneg_on_unit_interval(poly: &RationalPolynomial) -> NonnegVerdict {
    if poly.is_zero() {
        return NonnegVerdict::Nonnegative;
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    if poly.eval(&zero).is_negative() {
        return NonnegVerdict::NegativeAt(zero);
    }
    if poly.eval(&one).is_negative() {
        return NonnegVerdict::NegativeAt(one);
    }
    let s = poly.squarefree_part();
    let mut samples = Vec::new();
    let mut ok = true;
    collect_samples(&s, &zero, &one, 0, &mut samples, &mut ok);
    for q in samples {
        if poly.eval(&q).is_negative() {
            return NonnegVerdict::NegativeAt(q);
        }
    }
    if ok {
        NonnegVerdict::Nonnegative
    } else {
        NonnegVerdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, ClassKind, ClassSpec};
    use crate::prob::Prob;

    fn int_poly(coeffs: &[i64]) -> RationalPolynomial {
        RationalPolynomial::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn k2() -> WeightedGraph {
        generate(&ClassSpec::uniform(
            ClassKind::Complete { n: 2 },
            Prob::ratio(1, 2),
        ))
        .unwrap()
    }

    #[test]
    fn two_vertex_connection_polynomials() {
        let b = build_bunkbed(&k2());
        let opts = PolyOptions::default();
        let same = connection_polynomial(&b, "a-", "b-", &opts).unwrap();
        assert_eq!(same, int_poly(&[0, 1, 0, 1, -1]));
        let cross = connection_polynomial(&b, "a-", "b+", &opts).unwrap();
        assert_eq!(cross, int_poly(&[0, 0, 2, 0, -1]));
    }

    #[test]
    fn two_vertex_gap_polynomial() {
        let gap = gap_polynomial(&k2(), "a", "b", &PolyOptions::default()).unwrap();
        assert_eq!(gap, int_poly(&[0, 1, -2, 1]));
        assert_eq!(
            gap.coefficient_strings(),
            vec!["0", "1", "-2", "1"]
        );
        assert_eq!(gap.to_string(), "p - 2*p^2 + p^3");
        assert_eq!(nonneg_on_unit_interval(&gap), NonnegVerdict::Nonnegative);
    }

    #[test]
    fn polynomial_matches_exact_engine_at_sample_weights() {
        use crate::exact::{bunkbed_gap, ExactOptions};
        let gap_poly = gap_polynomial(&k2(), "a", "b", &PolyOptions::default()).unwrap();
        for (n, d) in [(1i64, 3i64), (2, 5), (7, 9)] {
            let g = generate(&ClassSpec::uniform(
                ClassKind::Complete { n: 2 },
                Prob::new(rat(n, d)).unwrap(),
            ))
            .unwrap();
            let b = build_bunkbed(&g);
            let exact = bunkbed_gap(&b, "a", "b", &ExactOptions::default()).unwrap();
            assert_eq!(gap_poly.eval(&rat(n, d)), exact.gap);
        }
    }

    #[test]
    fn tally_cap_is_enforced() {
        let g = generate(&ClassSpec::uniform(
            ClassKind::Complete { n: 4 },
            Prob::ratio(1, 2),
        ))
        .unwrap();
        let err = gap_polynomial(&g, "a", "b", &PolyOptions::with_cap(10));
        assert!(matches!(err, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn eval_and_arithmetic() {
        let p = int_poly(&[1, -2, 1]);
        assert_eq!(p.eval(&rat(1, 2)), rat(1, 4));
        assert_eq!(p.degree(), 2);
        let q = p.sub(&int_poly(&[1, -2]));
        assert_eq!(q, int_poly(&[0, 0, 1]));
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.derivative(), int_poly(&[-2, 2]));
    }

    #[test]
    fn division_and_squarefree() {
        // (x-1)^2 (x+2) = x^3 - 3x + 2
        let p = int_poly(&[2, -3, 0, 1]);
        let (q, r) = p.div_rem(&int_poly(&[-1, 1]));
        assert!(r.is_zero());
        assert_eq!(q, int_poly(&[-2, 1, 1]));
        let s = p.squarefree_part();
        // roots {1, -2}: (x-1)(x+2) = x^2 + x - 2
        assert_eq!(s, int_poly(&[-2, 1, 1]));
    }

    #[test]
    fn nonneg_verdicts() {
        assert_eq!(
            nonneg_on_unit_interval(&RationalPolynomial::zero()),
            NonnegVerdict::Nonnegative
        );
        assert_eq!(
            nonneg_on_unit_interval(&int_poly(&[-1])),
            NonnegVerdict::NegativeAt(BigRational::zero())
        );
        assert_eq!(
            nonneg_on_unit_interval(&int_poly(&[1, 1])),
            NonnegVerdict::Nonnegative
        );

        // p^2 - 1/4 is negative on [0, 1/2).
        let p = RationalPolynomial::new(vec![rat(-1, 4), rat(0, 1), rat(1, 1)]);
        match nonneg_on_unit_interval(&p) {
            NonnegVerdict::NegativeAt(q) => assert!(p.eval(&q).is_negative()),
            v => panic!("expected a witness, got {v:?}"),
        }

        // (p - 1/2)^2 - 1/100 dips below zero around 1/2.
        let dip = RationalPolynomial::new(vec![rat(6, 25), rat(-1, 1), rat(1, 1)]);
        assert!(dip.eval(&rat(1, 2)).is_negative());
        match nonneg_on_unit_interval(&dip) {
            NonnegVerdict::NegativeAt(q) => assert!(dip.eval(&q).is_negative()),
            v => panic!("expected a witness, got {v:?}"),
        }
    }

    #[test]
    fn nonneg_handles_multiple_irrational_roots() {
        // (p^2 - 1/2)^2: touches zero at sqrt(1/2) but never goes below.
        let touch = RationalPolynomial::new(vec![
            rat(1, 4),
            rat(0, 1),
            rat(-1, 1),
            rat(0, 1),
            rat(1, 1),
        ]);
        assert_eq!(nonneg_on_unit_interval(&touch), NonnegVerdict::Nonnegative);

        let neg = touch.neg();
        match nonneg_on_unit_interval(&neg) {
            NonnegVerdict::NegativeAt(q) => assert!(neg.eval(&q).is_negative()),
            v => panic!("expected a witness, got {v:?}"),
        }
    }

    #[test]
    fn nonneg_with_interior_double_root_of_the_gap_shape() {
        // p (1-p)^2 again but squared: p^2 (1-p)^4, all roots multiple.
        let gap = int_poly(&[0, 1, -2, 1]);
        let squared = {
            let mut coeffs = vec![BigRational::zero(); 7];
            for (i, a) in gap.coefficients().iter().enumerate() {
                for (j, b) in gap.coefficients().iter().enumerate() {
                    let bumped = &coeffs[i + j] + a * b;
                    coeffs[i + j] = bumped;
                }
            }
            RationalPolynomial::new(coeffs)
        };
        assert_eq!(
            nonneg_on_unit_interval(&squared),
            NonnegVerdict::Nonnegative
        );
    }

    #[test]
    fn display_forms() {
        assert_eq!(int_poly(&[0]).to_string(), "0");
        assert_eq!(int_poly(&[-1, 0, 3]).to_string(), "-1 + 3*p^2");
        assert_eq!(
            RationalPolynomial::new(vec![rat(1, 2), rat(-1, 3)]).to_string(),
            "1/2 - 1/3*p"
        );
    }
}
