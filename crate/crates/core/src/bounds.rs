//! Identified sets for the two-sector response pair under sign
//! restrictions on the instrument's covariance weights.
//!
//! With two sectors the aggregate estimand is a weighted average
//! `beta = w1 * theta1 + w2 * theta2` with `w1 + w2 = 1`, so for
//! `theta1 != theta2` the weights are `w1 = (beta - theta2) / (theta1 - theta2)`
//! and `w2 = (theta1 - beta) / (theta1 - theta2)`.  A sign restriction on
//! one weight pins `(theta1, theta2)` into a union of two open regions,
//! one on each side of the diagonal `theta1 = theta2`.  Regions are kept
//! in an interval normal form in the coordinates `theta1`, `theta2`, and
//! `theta1 - theta2`, where intersection, emptiness, and projection are
//! all exact.

use crate::error::{Error, Result};

/// Which covariance weight carries the restriction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightIndex {
    W1,
    W2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConstraint {
    Positive,
    Negative,
}

/// One sign restriction implied by an instrument with estimand `beta`.
#[derive(Debug, Clone, Copy)]
pub struct SignRestriction {
    pub weight: WeightIndex,
    pub sign: SignConstraint,
    pub beta: f64,
}

/// Open region `{ l1 < theta1 < u1, l2 < theta2 < u2, ld < theta1 - theta2 < ud }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub t1_lower: f64,
    pub t1_upper: f64,
    pub t2_lower: f64,
    pub t2_upper: f64,
    pub diff_lower: f64,
    pub diff_upper: f64,
}

impl Default for Region {
    fn default() -> Self {
        Self::full()
    }
}

impl Region {
    /// The whole plane.
    pub fn full() -> Self {
        Self {
            t1_lower: f64::NEG_INFINITY,
            t1_upper: f64::INFINITY,
            t2_lower: f64::NEG_INFINITY,
            t2_upper: f64::INFINITY,
            diff_lower: f64::NEG_INFINITY,
            diff_upper: f64::INFINITY,
        }
    }

    pub fn with_t1_above(mut self, c: f64) -> Self {
        self.t1_lower = self.t1_lower.max(c);
        self
    }

    pub fn with_t1_below(mut self, c: f64) -> Self {
        self.t1_upper = self.t1_upper.min(c);
        self
    }

    pub fn with_t2_above(mut self, c: f64) -> Self {
        self.t2_lower = self.t2_lower.max(c);
        self
    }

    pub fn with_t2_below(mut self, c: f64) -> Self {
        self.t2_upper = self.t2_upper.min(c);
        self
    }

    /// Adds `theta1 - theta2 > c`.
    pub fn with_diff_above(mut self, c: f64) -> Self {
        self.diff_lower = self.diff_lower.max(c);
        self
    }

    /// Adds `theta1 - theta2 < c`.
    pub fn with_diff_below(mut self, c: f64) -> Self {
        self.diff_upper = self.diff_upper.min(c);
        self
    }

    /// Range of `theta1 - theta2` over the region before the diagonal
    /// constraint is applied, intersected with the diagonal interval.
    fn diff_range(&self) -> (f64, f64) {
        (
            self.diff_lower.max(self.t1_lower - self.t2_upper),
            self.diff_upper.min(self.t1_upper - self.t2_lower),
        )
    }

    pub fn is_empty(&self) -> bool {
        if !(self.t1_lower < self.t1_upper) || !(self.t2_lower < self.t2_upper) {
            return true;
        }
        let (lo, hi) = self.diff_range();
        !(lo < hi)
    }

    pub fn contains(&self, theta1: f64, theta2: f64) -> bool {
        theta1 > self.t1_lower
            && theta1 < self.t1_upper
            && theta2 > self.t2_lower
            && theta2 < self.t2_upper
            && (theta1 - theta2) > self.diff_lower
            && (theta1 - theta2) < self.diff_upper
    }

    /// Exact open interval spanned by `theta1` over the region.
    pub fn theta1_interval(&self) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let lo = self.t1_lower.max(self.t2_lower + self.diff_lower);
        let hi = self.t1_upper.min(self.t2_upper + self.diff_upper);
        Some((lo, hi))
    }

    /// Exact open interval spanned by `theta2` over the region.
    pub fn theta2_interval(&self) -> Option<(f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let lo = self.t2_lower.max(self.t1_lower - self.diff_upper);
        let hi = self.t2_upper.min(self.t1_upper - self.diff_lower);
        Some((lo, hi))
    }

    pub fn intersect(&self, other: &Region) -> Region {
        Region {
            t1_lower: self.t1_lower.max(other.t1_lower),
            t1_upper: self.t1_upper.min(other.t1_upper),
            t2_lower: self.t2_lower.max(other.t2_lower),
            t2_upper: self.t2_upper.min(other.t2_upper),
            diff_lower: self.diff_lower.max(other.diff_lower),
            diff_upper: self.diff_upper.min(other.diff_upper),
        }
    }

    /// Whether every point of `self` satisfies all of `other`'s
    /// constraints.  Exact because `other` is an intersection of strips in
    /// the three tracked functionals and the range of each functional over
    /// `self` is computable in closed form.
    pub fn is_subset_of(&self, other: &Region) -> bool {
        if self.is_empty() {
            return true;
        }
        let (l1, u1) = self.theta1_interval().expect("nonempty region");
        let (l2, u2) = self.theta2_interval().expect("nonempty region");
        let (ld, ud) = self.diff_range();
        other.t1_lower <= l1
            && u1 <= other.t1_upper
            && other.t2_lower <= l2
            && u2 <= other.t2_upper
            && other.diff_lower <= ld
            && ud <= other.diff_upper
    }
}

/// Union of open regions, with the restrictions that produced it.
#[derive(Debug, Clone)]
pub struct IdentifiedSet {
    regions: Vec<Region>,
    provenance: Vec<SignRestriction>,
}

impl IdentifiedSet {
    pub fn from_regions(regions: Vec<Region>, provenance: Vec<SignRestriction>) -> Self {
        let regions = regions.into_iter().filter(|r| !r.is_empty()).collect();
        Self {
            regions,
            provenance,
        }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn provenance(&self) -> &[SignRestriction] {
        &self.provenance
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn contains(&self, theta1: f64, theta2: f64) -> bool {
        self.regions.iter().any(|r| r.contains(theta1, theta2))
    }

    pub fn intersect(&self, other: &IdentifiedSet) -> IdentifiedSet {
        let mut regions = Vec::new();
        for a in &self.regions {
            for b in &other.regions {
                let r = a.intersect(b);
                if !r.is_empty() {
                    regions.push(r);
                }
            }
        }
        let mut provenance = self.provenance.clone();
        provenance.extend_from_slice(&other.provenance);
        IdentifiedSet {
            regions,
            provenance,
        }
    }

    /// Smallest interval covering the `theta1` values of every region.
    /// The union itself may have gaps; inspect `regions()` for the pieces.
    pub fn theta1_envelope(&self) -> Option<(f64, f64)> {
        envelope(self.regions.iter().filter_map(|r| r.theta1_interval()))
    }

    pub fn theta2_envelope(&self) -> Option<(f64, f64)> {
        envelope(self.regions.iter().filter_map(|r| r.theta2_interval()))
    }

    /// Whether every region of `self` lies inside some region of `other`.
    /// Sufficient, and exact for the sign-restriction geometry where each
    /// diagonal branch maps into the matching branch.
    pub fn is_subset_of(&self, other: &IdentifiedSet) -> bool {
        self.regions
            .iter()
            .all(|a| other.regions.iter().any(|b| a.is_subset_of(b)))
    }
}

fn envelope(intervals: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let mut out: Option<(f64, f64)> = None;
    for (lo, hi) in intervals {
        out = Some(match out {
            None => (lo, hi),
            Some((l, h)) => (l.min(lo), h.max(hi)),
        });
    }
    out
}

/// The set of `(theta1, theta2)` consistent with one sign restriction.
///
/// Each restriction produces one region on each side of the diagonal:
///
/// * `w1 > 0`: `{theta1 > theta2, theta2 < beta}` or `{theta1 < theta2, theta2 > beta}`
/// * `w1 < 0`: `{theta1 > theta2, theta2 > beta}` or `{theta1 < theta2, theta2 < beta}`
/// * `w2 > 0`: `{theta1 > theta2, theta1 > beta}` or `{theta1 < theta2, theta1 < beta}`
/// * `w2 < 0`: `{theta1 > theta2, theta1 < beta}` or `{theta1 < theta2, theta1 > beta}`
pub fn sign_restriction_set(restriction: SignRestriction) -> IdentifiedSet {
    let beta = restriction.beta;
    let above = Region::full().with_diff_above(0.0);
    let below = Region::full().with_diff_below(0.0);
    let (r_above, r_below) = match (restriction.weight, restriction.sign) {
        (WeightIndex::W1, SignConstraint::Positive) => {
            (above.with_t2_below(beta), below.with_t2_above(beta))
        }
        (WeightIndex::W1, SignConstraint::Negative) => {
            (above.with_t2_above(beta), below.with_t2_below(beta))
        }
        (WeightIndex::W2, SignConstraint::Positive) => {
            (above.with_t1_above(beta), below.with_t1_below(beta))
        }
        (WeightIndex::W2, SignConstraint::Negative) => {
            (above.with_t1_below(beta), below.with_t1_above(beta))
        }
    };
    IdentifiedSet::from_regions(vec![r_above, r_below], vec![restriction])
}

/// Intersection of the sets implied by several restrictions, e.g. from
/// several instruments with known weight signs.
pub fn intersect_restrictions(restrictions: &[SignRestriction]) -> Result<IdentifiedSet> {
    let mut iter = restrictions.iter();
    let first = iter
        .next()
        .ok_or_else(|| Error::EmptyInput("no sign restrictions given".into()))?;
    let mut set = sign_restriction_set(*first);
    for r in iter {
        set = set.intersect(&sign_restriction_set(*r));
    }
    Ok(set)
}

/// The two containment facts implied by the weight algebra: `w2 < 0`
/// forces `w1 > 1 > 0`, and `w1 < 0` forces `w2 > 1 > 0`.  Returns the
/// symbolic checks for a given estimand.
pub fn subset_relations(beta: f64) -> (bool, bool) {
    let w2_neg = sign_restriction_set(SignRestriction {
        weight: WeightIndex::W2,
        sign: SignConstraint::Negative,
        beta,
    });
    let w1_pos = sign_restriction_set(SignRestriction {
        weight: WeightIndex::W1,
        sign: SignConstraint::Positive,
        beta,
    });
    let w1_neg = sign_restriction_set(SignRestriction {
        weight: WeightIndex::W1,
        sign: SignConstraint::Negative,
        beta,
    });
    let w2_pos = sign_restriction_set(SignRestriction {
        weight: WeightIndex::W2,
        sign: SignConstraint::Positive,
        beta,
    });
    (w2_neg.is_subset_of(&w1_pos), w1_neg.is_subset_of(&w2_pos))
}

/// Weight signs at a point, or `None` on the diagonal where the weights
/// are undefined.
pub fn weights_at(beta: f64, theta1: f64, theta2: f64) -> Option<(f64, f64)> {
    let denom = theta1 - theta2;
    if denom == 0.0 {
        return None;
    }
    let w1 = (beta - theta2) / denom;
    Some((w1, 1.0 - w1))
}

/// Knife-edge case: a single instrument whose covariances with the two
/// sector regressors are known pins `(theta1, theta2)` to a line
/// `c_y = c_1 * theta1 + c_2 * theta2`.
#[derive(Debug, Clone, Copy)]
pub struct CovarianceLine {
    pub c_y: f64,
    pub c_1: f64,
    pub c_2: f64,
}

impl CovarianceLine {
    pub fn new(c_y: f64, c_1: f64, c_2: f64) -> Result<Self> {
        if c_1 == 0.0 && c_2 == 0.0 {
            return Err(Error::DegenerateLine);
        }
        Ok(Self { c_y, c_1, c_2 })
    }

    /// The first covariance weight `c_1 / (c_1 + c_2)`.
    pub fn weight_w1(&self) -> Result<f64> {
        let den = self.c_1 + self.c_2;
        let scale = self.c_1.abs().max(self.c_2.abs());
        if den.abs() <= 1e-12 * scale {
            return Err(Error::WeakDenominator { value: den, scale });
        }
        Ok(self.c_1 / den)
    }

    /// Solves the line for `theta1` given a hypothetical `theta2`.
    pub fn theta1_given(&self, theta2: f64) -> Result<f64> {
        if self.c_1 == 0.0 {
            return Err(Error::NotIdentifiedFromLine);
        }
        Ok((self.c_y - self.c_2 * theta2) / self.c_1)
    }

    /// Solves the line for `theta2` given a hypothetical `theta1`.
    pub fn theta2_given(&self, theta1: f64) -> Result<f64> {
        if self.c_2 == 0.0 {
            return Err(Error::NotIdentifiedFromLine);
        }
        Ok((self.c_y - self.c_1 * theta1) / self.c_2)
    }

    /// Whether a point lies on the line up to a relative tolerance.
    pub fn contains(&self, theta1: f64, theta2: f64, tol: f64) -> bool {
        let gap = (self.c_y - self.c_1 * theta1 - self.c_2 * theta2).abs();
        let scale = self
            .c_y
            .abs()
            .max(self.c_1.abs() * theta1.abs())
            .max(self.c_2.abs() * theta2.abs())
            .max(1.0);
        gap <= tol * scale
    }
}
