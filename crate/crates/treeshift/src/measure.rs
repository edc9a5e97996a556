//! Finite positive Borel measures on `[0, inf)` as atoms plus power-law
//! boxes.
//!
//! A box `(a, b, mass, e)` carries `mass` distributed with density
//! proportional to `s^e` on `[a, b]`. The class is closed under
//! restriction to `[0, i]` and under multiplication by `s^k`, which is
//! exactly what the backward-extension map and the consistency recursion
//! need, and every moment of every component has a closed form.

use crate::error::{Error, Result};
use crate::scalar::{ExtReal, Scalar};
use serde::{Deserialize, Serialize};

/// Probability masses are checked exactly in exact mode and to this
/// absolute tolerance when floats are involved.
pub const PROBABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Atom {
    pub point: Scalar,
    pub mass: Scalar,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoxComponent {
    pub lower: Scalar,
    pub upper: Scalar,
    pub mass: Scalar,
    /// Density exponent: the component has density `c * s^profile` on
    /// `[lower, upper]` with `c` fixed by the mass.
    pub profile: i32,
}

/// `integral of s^e over [a, b]`; floating only in the `e = -1` log case.
fn power_integral(a: &Scalar, b: &Scalar, e: i32) -> Scalar {
    if e == -1 {
        debug_assert!(a.is_positive(), "log integral needs a > 0");
        Scalar::from_f64((b.to_f64() / a.to_f64()).ln())
    } else {
        let p = e + 1;
        debug_assert!(!a.is_zero() || p > 0, "divergent power integral");
        (b.powi(p) - a.powi(p)) / Scalar::from_int(i64::from(p))
    }
}

impl BoxComponent {
    fn validate(&self) -> Result<()> {
        if self.lower.is_negative() {
            return Err(Error::InvalidInput(format!("box lower bound {} is negative", self.lower)));
        }
        if self.upper <= self.lower {
            return Err(Error::InvalidInput(format!(
                "box [{}, {}] has nonpositive length",
                self.lower, self.upper
            )));
        }
        if self.mass.is_negative() {
            return Err(Error::InvalidInput(format!("box mass {} is negative", self.mass)));
        }
        if self.lower.is_zero() && self.profile <= -1 {
            return Err(Error::InvalidInput(format!(
                "box touching 0 with profile {} has infinite density mass",
                self.profile
            )));
        }
        Ok(())
    }

    /// Moment of order `k`, `Infinite` when the integral diverges at 0.
    fn moment(&self, k: i32) -> ExtReal {
        if self.lower.is_zero() && self.profile + k <= -1 {
            return ExtReal::Infinite;
        }
        let num = power_integral(&self.lower, &self.upper, self.profile + k);
        let den = power_integral(&self.lower, &self.upper, self.profile);
        ExtReal::Finite(&self.mass * &(num / den))
    }

    /// Mass of the sub-box `[lo, hi]`, assuming `lower <= lo < hi <= upper`.
    fn mass_between(&self, lo: &Scalar, hi: &Scalar) -> Scalar {
        let num = power_integral(lo, hi, self.profile);
        let den = power_integral(&self.lower, &self.upper, self.profile);
        &self.mass * &(num / den)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(try_from = "MeasureRepr", into = "MeasureRepr")]
pub struct Measure {
    atoms: Vec<Atom>,
    boxes: Vec<BoxComponent>,
}

#[derive(Serialize, Deserialize)]
struct MeasureRepr {
    #[serde(default)]
    atoms: Vec<(Scalar, Scalar)>,
    #[serde(default)]
    boxes: Vec<(Scalar, Scalar, Scalar, i32)>,
}

impl TryFrom<MeasureRepr> for Measure {
    type Error = Error;
    fn try_from(r: MeasureRepr) -> Result<Measure> {
        Measure::new(
            r.atoms.into_iter().map(|(point, mass)| Atom { point, mass }).collect(),
            r.boxes
                .into_iter()
                .map(|(lower, upper, mass, profile)| BoxComponent { lower, upper, mass, profile })
                .collect(),
        )
    }
}

impl From<Measure> for MeasureRepr {
    fn from(m: Measure) -> MeasureRepr {
        MeasureRepr {
            atoms: m.atoms.into_iter().map(|a| (a.point, a.mass)).collect(),
            boxes: m.boxes.into_iter().map(|b| (b.lower, b.upper, b.mass, b.profile)).collect(),
        }
    }
}

impl Measure {
    pub fn new(atoms: Vec<Atom>, boxes: Vec<BoxComponent>) -> Result<Measure> {
        for a in &atoms {
            if a.point.is_negative() {
                return Err(Error::InvalidInput(format!("atom at {} lies below 0", a.point)));
            }
            if a.mass.is_negative() {
                return Err(Error::InvalidInput(format!("atom mass {} is negative", a.mass)));
            }
        }
        for b in &boxes {
            b.validate()?;
        }
        let mut m = Measure { atoms, boxes };
        m.atoms.retain(|a| !a.mass.is_zero());
        m.boxes.retain(|b| !b.mass.is_zero());
        m.sort_components();
        Ok(m)
    }

    pub fn zero() -> Measure {
        Measure { atoms: Vec::new(), boxes: Vec::new() }
    }

    /// Unit point mass at `point`.
    pub fn delta(point: Scalar) -> Measure {
        Measure::new(vec![Atom { point, mass: Scalar::one() }], Vec::new()).expect("valid atom")
    }

    pub fn delta_int(point: i64) -> Measure {
        Measure::delta(Scalar::from_int(point))
    }

    /// Uniform probability measure on `[a, b]`.
    pub fn uniform(a: Scalar, b: Scalar) -> Result<Measure> {
        Measure::new(Vec::new(), vec![BoxComponent { lower: a, upper: b, mass: Scalar::one(), profile: 0 }])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn boxes(&self) -> &[BoxComponent] {
        &self.boxes
    }

    pub fn is_exact(&self) -> bool {
        self.atoms.iter().all(|a| a.point.is_exact() && a.mass.is_exact())
            && self.boxes.iter().all(|b| b.lower.is_exact() && b.upper.is_exact() && b.mass.is_exact())
    }

    pub fn total_mass(&self) -> Scalar {
        let mut t = Scalar::zero();
        for a in &self.atoms {
            t = &t + &a.mass;
        }
        for b in &self.boxes {
            t = &t + &b.mass;
        }
        t
    }

    pub fn is_probability(&self) -> bool {
        let t = self.total_mass();
        if t.is_exact() {
            t == Scalar::one()
        } else {
            (t.to_f64() - 1.0).abs() <= PROBABILITY_TOL
        }
    }

    /// Moment of integer order `k`; negative orders may be `Infinite`.
    pub fn moment(&self, k: i32) -> ExtReal {
        let mut acc = ExtReal::zero();
        for a in &self.atoms {
            let contrib = if a.point.is_zero() {
                match k {
                    0 => ExtReal::Finite(a.mass.clone()),
                    k if k > 0 => ExtReal::zero(),
                    _ => ExtReal::Infinite, // 1/0 = inf
                }
            } else {
                ExtReal::Finite(&a.mass * &a.point.powi(k))
            };
            acc = acc.add(&contrib);
        }
        for b in &self.boxes {
            acc = acc.add(&b.moment(k));
        }
        acc
    }

    pub fn mass_at_zero(&self) -> Scalar {
        self.atoms
            .iter()
            .filter(|a| a.point.is_zero())
            .fold(Scalar::zero(), |acc, a| &acc + &a.mass)
    }

    /// `mu([0, i])`.
    pub fn mass_up_to(&self, i: &Scalar) -> Scalar {
        let mut t = Scalar::zero();
        for a in &self.atoms {
            if a.point <= *i {
                t = &t + &a.mass;
            }
        }
        for b in &self.boxes {
            if *i >= b.upper {
                t = &t + &b.mass;
            } else if *i > b.lower {
                t = &t + &b.mass_between(&b.lower, i);
            }
        }
        t
    }

    /// Largest support point, `None` for the zero measure.
    pub fn max_support_point(&self) -> Option<Scalar> {
        let mut best: Option<Scalar> = None;
        let mut consider = |x: &Scalar| {
            if best.as_ref().is_none_or(|b| x > b) {
                best = Some(x.clone());
            }
        };
        for a in &self.atoms {
            consider(&a.point);
        }
        for b in &self.boxes {
            consider(&b.upper);
        }
        best
    }

    pub fn supported_within(&self, bound: &Scalar) -> bool {
        self.max_support_point().is_none_or(|m| m <= *bound)
    }

    /// All masses multiplied by a nonnegative factor.
    pub fn scaled(&self, c: &Scalar) -> Measure {
        if c.is_zero() {
            return Measure::zero();
        }
        let mut m = self.clone();
        for a in &mut m.atoms {
            a.mass = &a.mass * c;
        }
        for b in &mut m.boxes {
            b.mass = &b.mass * c;
        }
        m
    }

    /// Componentwise sum of two measures.
    pub fn plus(&self, other: &Measure) -> Measure {
        let mut m = self.clone();
        m.atoms.extend(other.atoms.iter().cloned());
        m.boxes.extend(other.boxes.iter().cloned());
        m.sort_components();
        m
    }

    /// The measure `s^k d mu` restricted to `(0, inf)`. Fails when mass at
    /// or accumulating to zero would blow up under a negative power.
    pub fn scaled_by_power(&self, k: i32) -> Result<Measure> {
        let mut atoms = Vec::new();
        for a in &self.atoms {
            if a.point.is_zero() {
                if k < 0 {
                    return Err(Error::DivisionByZero(format!(
                        "mass {} at 0 cannot be reweighted by s^{k}",
                        a.mass
                    )));
                }
                if k > 0 {
                    continue; // mass * 0^k = 0
                }
                atoms.push(a.clone());
            } else {
                atoms.push(Atom { point: a.point.clone(), mass: &a.mass * &a.point.powi(k) });
            }
        }
        let mut boxes = Vec::new();
        for b in &self.boxes {
            let profile = b.profile + k;
            if b.lower.is_zero() && profile <= -1 {
                return Err(Error::DivisionByZero(format!(
                    "box [0, {}] with profile {} cannot be reweighted by s^{k}",
                    b.upper, b.profile
                )));
            }
            match b.moment(k) {
                ExtReal::Finite(mass) => {
                    boxes.push(BoxComponent { lower: b.lower.clone(), upper: b.upper.clone(), mass, profile })
                }
                ExtReal::Infinite => {
                    return Err(Error::DivisionByZero("divergent box reweighting".into()))
                }
            }
        }
        Measure::new(atoms, boxes)
    }

    /// `nu(sigma) = integral over sigma of s d nu`, dropping mass at 0.
    pub fn forward_map(&self) -> Measure {
        self.scaled_by_power(1).expect("reweighting by s never diverges")
    }

    /// The backward-extension map: `nu(sigma) = integral over sigma of
    /// (1/s) d mu + (theta - integral of 1/s d mu) * delta_0(sigma)`.
    ///
    /// Requires a probability input with `integral of 1/s <= theta`; the
    /// output has total mass `theta`.
    pub fn backward_extend(&self, theta: &Scalar) -> Result<Measure> {
        if !self.is_probability() {
            return Err(Error::InvalidInput("backward extension needs a probability measure".into()));
        }
        let recip = self.moment(-1);
        if recip.is_infinite() || recip > *theta {
            return Err(Error::ExtensionImpossible {
                required: Box::new(recip),
                theta: Box::new(theta.clone()),
            });
        }
        let mut out = self.scaled_by_power(-1)?;
        let deficit = theta - recip.finite().expect("finite by check");
        if deficit.is_positive() {
            out.atoms.push(Atom { point: Scalar::zero(), mass: deficit });
            out.sort_components();
        }
        Ok(out)
    }

    /// `(mu restricted to [0, i] and renormalized, mu([0, i]))`, with the
    /// zero-mass branch returning the point mass at 0.
    pub fn restrict_normalized(&self, i: &Scalar) -> (Measure, Scalar) {
        let total = self.mass_up_to(i);
        if !total.is_positive() {
            return (Measure::delta(Scalar::zero()), total);
        }
        let mut atoms = Vec::new();
        for a in &self.atoms {
            if a.point <= *i {
                atoms.push(Atom { point: a.point.clone(), mass: &a.mass / &total });
            }
        }
        let mut boxes = Vec::new();
        for b in &self.boxes {
            if *i >= b.upper {
                boxes.push(BoxComponent {
                    lower: b.lower.clone(),
                    upper: b.upper.clone(),
                    mass: &b.mass / &total,
                    profile: b.profile,
                });
            } else if *i > b.lower {
                let clipped = b.mass_between(&b.lower, i);
                boxes.push(BoxComponent {
                    lower: b.lower.clone(),
                    upper: i.clone(),
                    mass: &clipped / &total,
                    profile: b.profile,
                });
            }
        }
        (Measure { atoms, boxes }, total)
    }

    fn sort_components(&mut self) {
        self.atoms
            .sort_by(|a, b| a.point.partial_cmp(&b.point).unwrap_or(std::cmp::Ordering::Equal));
        self.boxes.sort_by(|a, b| {
            (a.lower.to_f64(), a.upper.to_f64(), a.profile)
                .partial_cmp(&(b.lower.to_f64(), b.upper.to_f64(), b.profile))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    /// Merge coincident atoms, drop zero masses, sort components.
    pub fn canonicalized(&self, tol: f64) -> Measure {
        let mut m = self.clone();
        m.sort_components();
        let mut atoms: Vec<Atom> = Vec::new();
        for a in m.atoms {
            if a.mass.is_zero() {
                continue;
            }
            if let Some(last) = atoms.last_mut() {
                if last.point.close_to(&a.point, tol) {
                    last.mass = &last.mass + &a.mass;
                    continue;
                }
            }
            atoms.push(a);
        }
        let mut boxes: Vec<BoxComponent> = Vec::new();
        for b in m.boxes {
            if b.mass.is_zero() {
                continue;
            }
            if let Some(last) = boxes.last_mut() {
                if last.profile == b.profile
                    && last.lower.close_to(&b.lower, tol)
                    && last.upper.close_to(&b.upper, tol)
                {
                    last.mass = &last.mass + &b.mass;
                    continue;
                }
            }
            boxes.push(b);
        }
        Measure { atoms, boxes }
    }

    /// Split every box at the given cut points so that two measures with
    /// compatible box structure become componentwise comparable.
    fn split_boxes_at(&self, cuts: &[Scalar]) -> Measure {
        let mut out = self.clone();
        let mut boxes = Vec::new();
        for b in out.boxes {
            let mut inner: Vec<&Scalar> =
                cuts.iter().filter(|c| **c > b.lower && **c < b.upper).collect();
            inner.sort_by(|a, c| a.partial_cmp(c).unwrap_or(std::cmp::Ordering::Equal));
            inner.dedup_by(|a, c| a == c);
            let mut lo = b.lower.clone();
            for cut in inner {
                boxes.push(BoxComponent {
                    lower: lo.clone(),
                    upper: cut.clone(),
                    mass: b.mass_between(&lo, cut),
                    profile: b.profile,
                });
                lo = cut.clone();
            }
            boxes.push(BoxComponent {
                lower: lo.clone(),
                upper: b.upper.clone(),
                mass: b.mass_between(&lo, &b.upper),
                profile: b.profile,
            });
        }
        out.boxes = boxes;
        out
    }

    fn comparable_pair(&self, other: &Measure, tol: f64) -> (Measure, Measure) {
        let mut cuts: Vec<Scalar> = Vec::new();
        for b in self.boxes.iter().chain(other.boxes.iter()) {
            cuts.push(b.lower.clone());
            cuts.push(b.upper.clone());
        }
        (
            self.split_boxes_at(&cuts).canonicalized(tol),
            other.split_boxes_at(&cuts).canonicalized(tol),
        )
    }

    /// Componentwise equality after canonicalization; exact when both
    /// measures are exact and `tol` is 0.
    pub fn equal_to(&self, other: &Measure, tol: f64) -> bool {
        let (a, b) = self.comparable_pair(other, tol);
        if a.atoms.len() != b.atoms.len() || a.boxes.len() != b.boxes.len() {
            return false;
        }
        for (x, y) in a.atoms.iter().zip(&b.atoms) {
            if !x.point.close_to(&y.point, tol) || !x.mass.close_to(&y.mass, tol) {
                return false;
            }
        }
        for (x, y) in a.boxes.iter().zip(&b.boxes) {
            if x.profile != y.profile
                || !x.lower.close_to(&y.lower, tol)
                || !x.upper.close_to(&y.upper, tol)
                || !x.mass.close_to(&y.mass, tol)
            {
                return false;
            }
        }
        true
    }

    /// Total mass discrepancy between the two measures after matching
    /// components: the sum of |mass differences| over matched components
    /// plus the full mass of unmatched ones. Zero iff equal (exact mode).
    pub fn residual(&self, other: &Measure, tol: f64) -> Scalar {
        let (a, b) = self.comparable_pair(other, tol);
        let mut res = Scalar::zero();
        // Merge-join atoms on point.
        let (mut i, mut j) = (0, 0);
        while i < a.atoms.len() || j < b.atoms.len() {
            if i < a.atoms.len() && j < b.atoms.len() {
                let (x, y) = (&a.atoms[i], &b.atoms[j]);
                if x.point.close_to(&y.point, tol) {
                    res = &res + &(&x.mass - &y.mass).abs();
                    i += 1;
                    j += 1;
                } else if x.point < y.point {
                    res = &res + &x.mass;
                    i += 1;
                } else {
                    res = &res + &y.mass;
                    j += 1;
                }
            } else if i < a.atoms.len() {
                res = &res + &a.atoms[i].mass;
                i += 1;
            } else {
                res = &res + &b.atoms[j].mass;
                j += 1;
            }
        }
        let mut remaining: Vec<&BoxComponent> = b.boxes.iter().collect();
        for x in &a.boxes {
            if let Some(pos) = remaining.iter().position(|y| {
                y.profile == x.profile && y.lower.close_to(&x.lower, tol) && y.upper.close_to(&x.upper, tol)
            }) {
                let y = remaining.remove(pos);
                res = &res + &(&x.mass - &y.mass).abs();
            } else {
                res = &res + &x.mass;
            }
        }
        for y in remaining {
            res = &res + &y.mass;
        }
        res
    }
}

/// Free-function spellings used throughout reports and tests.
pub fn measures_equal(a: &Measure, b: &Measure, tol: f64) -> bool {
    a.equal_to(b, tol)
}
